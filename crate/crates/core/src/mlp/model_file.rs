//! Line-oriented text format for trained networks:
//!
//! ```text
//! glyphseg-mlp v1
//! config <input_len> <hidden,lens,...> <output_len> sigmoid
//! <weights of layer 1, row-major> <biases of layer 1>
//! ...
//! label <index> <name>
//! ```
//!
//! Numbers are written in shortest round-trip decimal form, so a saved model
//! reloads bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{Layer, Mlp, MlpConfig};
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "glyphseg-mlp v1";

/// A network together with its class names, index-aligned with its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: Mlp,
    pub labels: Vec<String>,
}

pub fn encode_model(model: &Model) -> String {
    let cfg = model.net.config();
    let hidden: Vec<String> = cfg.hidden_lens.iter().map(|h| h.to_string()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = writeln!(
        out,
        "config {} {} {} sigmoid",
        cfg.input_len,
        hidden.join(","),
        cfg.output_len
    );
    for layer in model.net.layers() {
        let mut first = true;
        for v in layer.weights.iter().chain(&layer.biases) {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    for (i, name) in model.labels.iter().enumerate() {
        let _ = writeln!(out, "label {i} {name}");
    }
    out
}

/// Iterates lines with the byte offset of each line start.
fn lines_with_offsets(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').map(move |raw| {
        let start = offset;
        offset += raw.len();
        (start, raw.trim_end_matches(['\n', '\r']))
    })
}

fn parse_count(tok: &str, offset: usize, what: &str) -> Result<usize> {
    let n: usize = tok
        .parse()
        .map_err(|_| Error::format(offset, format!("invalid {what} {tok:?}")))?;
    if n == 0 || n > 1 << 20 {
        return Err(Error::format(offset, format!("{what} {n} out of range")));
    }
    Ok(n)
}

pub fn decode_model(text: &str) -> Result<Model> {
    let mut lines = lines_with_offsets(text);
    match lines.next() {
        Some((_, l)) if l == MODEL_HEADER => {}
        _ => return Err(Error::format(0, format!("missing header {MODEL_HEADER:?}"))),
    }
    let (cfg_off, cfg_line) = lines
        .next()
        .ok_or_else(|| Error::format(text.len(), "missing config line"))?;
    let toks: Vec<&str> = cfg_line.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "config" {
        return Err(Error::format(
            cfg_off,
            "config line must be `config <in> <hidden> <out> <activation>`",
        ));
    }
    if toks[4] != "sigmoid" {
        return Err(Error::format(
            cfg_off,
            format!("unsupported activation {:?}", toks[4]),
        ));
    }
    let input_len = parse_count(toks[1], cfg_off, "input length")?;
    let hidden_lens = toks[2]
        .split(',')
        .map(|t| parse_count(t, cfg_off, "hidden length"))
        .collect::<Result<Vec<_>>>()?;
    let output_len = parse_count(toks[3], cfg_off, "output length")?;
    let config = MlpConfig {
        input_len,
        hidden_lens,
        output_len,
    };
    config
        .validate()
        .map_err(|e| Error::format(cfg_off, e.to_string()))?;

    let mut sizes = vec![input_len];
    sizes.extend(&config.hidden_lens);
    sizes.push(output_len);
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for w in sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let (off, line) = lines
            .next()
            .ok_or_else(|| Error::format(text.len(), "missing layer line"))?;
        let expected = fan_in
            .checked_mul(fan_out)
            .and_then(|n| n.checked_add(fan_out))
            .ok_or_else(|| Error::format(off, "layer size overflows"))?;
        let mut values = Vec::with_capacity(expected.min(1 << 16));
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::format(off, format!("invalid number {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::format(off, "non-finite parameter"));
            }
            values.push(v);
            if values.len() > expected {
                break;
            }
        }
        if values.len() != expected {
            return Err(Error::format(
                off,
                format!(
                    "layer {fan_in}->{fan_out} needs {expected} values, found {}",
                    values.len()
                ),
            ));
        }
        let biases = values.split_off(fan_in * fan_out);
        layers.push(Layer {
            fan_in,
            fan_out,
            weights: values,
            biases,
        });
    }
    let net = Mlp::from_layers(config, layers)?;

    let mut labels: Vec<Option<String>> = vec![None; output_len];
    for (off, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ' ');
        if parts.next() != Some("label") {
            return Err(Error::format(off, "expected `label <index> <name>`"));
        }
        let index: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(off, "invalid label index"))?;
        let name = parts.next().map(str::trim).unwrap_or_default();
        if name.is_empty() {
            return Err(Error::format(off, "empty label name"));
        }
        let slot = labels.get_mut(index).ok_or_else(|| {
            Error::format(
                off,
                format!("label index {index} exceeds {output_len} outputs"),
            )
        })?;
        if slot.replace(name.to_string()).is_some() {
            return Err(Error::format(off, format!("duplicate label index {index}")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.unwrap_or_else(|| i.to_string()))
        .collect();
    Ok(Model { net, labels })
}

pub fn write_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::format(e.valid_up_to(), "model file is not UTF-8").with_path(path))?;
    decode_model(text).map_err(|e| e.with_path(path))
}

#![no_main]

use glyphseg::mlp::{decode_model, encode_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = decode_model(text) {
        let again = decode_model(&encode_model(&model)).expect("encoded model decodes");
        assert_eq!(again.labels, model.labels);
        assert_eq!(again.net.params().len(), model.net.params().len());
    }
});

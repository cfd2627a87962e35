#![no_main]

use glyphseg::pnm::{decode, encode_pbm, encode_pgm, PnmImage};
use libfuzzer_sys::fuzz_target;

// Anything that decodes must survive a re-encode and decode unchanged.
fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode(data) {
        let bytes = match &img {
            PnmImage::Gray(g) => encode_pgm(g),
            PnmImage::Binary(b) => encode_pbm(b),
        };
        assert_eq!(decode(&bytes).unwrap(), img);
    }
});

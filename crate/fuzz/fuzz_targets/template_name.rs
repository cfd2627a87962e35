#![no_main]

use glyphseg::similarity::parse_template_name;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(stem) = std::str::from_utf8(data) else {
        return;
    };
    if let Some((label, writer, index)) = parse_template_name(stem) {
        assert!(!label.is_empty() && !writer.is_empty());
        assert_eq!(
            parse_template_name(&format!("{label}_{writer}_{index}")),
            Some((label, writer, index))
        );
    }
});

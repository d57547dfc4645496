#![no_main]
use libfuzzer_sys::fuzz_target;
use ncell::cli::parse_flavor;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(flavor) = parse_flavor(s) {
            assert_eq!(parse_flavor(flavor.as_str()).ok(), Some(flavor));
        }
    }
});

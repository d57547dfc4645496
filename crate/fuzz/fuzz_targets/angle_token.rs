#![no_main]
use libfuzzer_sys::fuzz_target;
use ncell::cli::{parse_angle, End};

fuzz_target!(|data: &str| {
    for end in [End::Left, End::Right] {
        if let Ok(angle) = parse_angle(data, end) {
            assert!(angle.is_finite());
            // Normalization must either accept the pair or reject it cleanly.
            let _ = ncell::boundary::BoundaryConditions::normalized(angle, angle);
        }
    }
});

#![no_main]
use libfuzzer_sys::fuzz_target;
use ncell::potential::{load_potential, save_potential};

fuzz_target!(|data: &str| {
    // Accepted documents must survive a save/load round trip unchanged.
    if let Ok(pot) = load_potential(data) {
        let text = save_potential(&pot);
        let again = load_potential(&text).expect("saved document must reload");
        assert_eq!(pot, again);
    }
});

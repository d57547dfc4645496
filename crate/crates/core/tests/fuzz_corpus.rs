//! Replays the checked-in fuzz seeds through the same properties the fuzz
//! targets assert, so regressions show up without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use ncell::cli::{parse_angle, parse_flavor, End};
use ncell::potential::{load_potential, save_potential};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn potential_seeds_round_trip() {
    let mut accepted = 0;
    for (name, bytes) in seeds("load_potential") {
        let Ok(text) = String::from_utf8(bytes) else { continue };
        if let Ok(pot) = load_potential(&text) {
            let again = load_potential(&save_potential(&pot)).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(pot, again, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 4);
}

#[test]
fn angle_seeds_parse_to_finite_values() {
    for (name, bytes) in seeds("angle_token") {
        let text = String::from_utf8(bytes).unwrap();
        for end in [End::Left, End::Right] {
            let angle = parse_angle(&text, end).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(angle.is_finite());
        }
    }
}

#[test]
fn flavor_seeds_round_trip() {
    for (name, bytes) in seeds("flavor_token") {
        let text = String::from_utf8(bytes).unwrap();
        match parse_flavor(&text) {
            Ok(f) => assert_eq!(parse_flavor(f.as_str()).unwrap(), f, "{name}"),
            Err(_) => assert_eq!(name, "antiperiodic"),
        }
    }
}

//! Small numerical helpers shared by the spectral modules.

use std::f64::consts::{FRAC_PI_2, PI};

/// Numerical tolerances used across the crate.
///
/// One record so the CLI and the verification campaigns can override
/// them together.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative tolerance on `det M = 1`.
    pub det_tol: f64,
    /// Agreement required against ODE-integration oracles.
    pub oracle_tol: f64,
    /// Width of the final bisection bracket for zone edges and eigenvalues.
    pub edge_tol: f64,
    /// Tolerance on quasimomentum plateau and phase identities.
    pub phase_tol: f64,
    /// `|R_n|` below which an energy counts as perfect transmission.
    pub res_tol: f64,
    /// `|sin phi|` below which the compose formulas are abandoned for
    /// direct matrix powers.
    pub edge_guard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            det_tol: 1e-12,
            oracle_tol: 1e-8,
            edge_tol: 1e-10,
            phase_tol: 1e-9,
            res_tol: 1e-6,
            edge_guard: 1e-6,
        }
    }
}

/// Integer part `[r]` with the convention `[r] = -1` for `-1 < r < 0`.
///
/// For `r > -1` this is exactly `floor(r)`. Values at or below `-1` never
/// arise from the counting formulas; they are floored as well.
pub fn integer_part(r: f64) -> i64 {
    r.floor() as i64
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_pi(t: f64) -> f64 {
    let mut r = t.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Continuous monotone map taking the argument of `(cos t, sin t)` to the
/// argument of `(cos t, s * sin t)` for `s > 0`.
///
/// Fixes every multiple of `pi/2` and commutes with shifts by `pi`, so
/// it preserves the branch of a lifted angle.
pub fn warp_angle(t: f64, s: f64) -> f64 {
    let m = (t / PI).round();
    let r = t - m * PI;
    m * PI + (s * r.sin()).atan2(r.cos())
}

/// Number of points `pi/2 + m*pi` lying strictly between `lo` and `hi`.
pub fn crossings_between(lo: f64, hi: f64) -> u64 {
    if hi <= lo {
        return 0;
    }
    let upper = ((hi - FRAC_PI_2) / PI).ceil();
    let lower = ((lo - FRAC_PI_2) / PI).floor();
    let count = upper - lower - 1.0;
    if count > 0.0 {
        count as u64
    } else {
        0
    }
}

/// Bisection on a monotone predicate: `pred(lo)` is false, `pred(hi)` is
/// true. Returns the final bracket, narrower than `tol`.
pub fn bisect_predicate<F>(mut lo: f64, mut hi: f64, tol: f64, mut pred: F) -> (f64, f64)
where
    F: FnMut(f64) -> bool,
{
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Locate every jump of a nondecreasing integer-valued function on
/// `[lo, hi]`.
///
/// Each jump location is reported once per unit of the jump, bracketed to
/// `tol`; the returned energies are sorted.
pub fn isolate_jumps<F>(lo: f64, hi: f64, tol: f64, mut count: F) -> Vec<f64>
where
    F: FnMut(f64) -> i64,
{
    let c_lo = count(lo);
    let c_hi = count(hi);
    let mut out = Vec::new();
    let mut stack = vec![(lo, hi, c_lo, c_hi)];
    while let Some((a, b, ca, cb)) = stack.pop() {
        if cb <= ca {
            continue;
        }
        let mid = 0.5 * (a + b);
        if b - a <= tol || mid <= a || mid >= b {
            for _ in 0..(cb - ca) {
                out.push(mid);
            }
            continue;
        }
        let cm = count(mid);
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_part_convention() {
        assert_eq!(integer_part(2.7), 2);
        assert_eq!(integer_part(0.0), 0);
        assert_eq!(integer_part(-0.5), -1);
        assert_eq!(integer_part(-1e-15), -1);
    }

    #[test]
    fn warp_fixes_quarter_turns() {
        for m in -4..=4 {
            let t = m as f64 * FRAC_PI_2;
            assert!((warp_angle(t, 7.3) - t).abs() < 1e-12);
        }
        // quadrant preserved, shift by pi commutes
        let t = 0.3;
        assert!((warp_angle(t + PI, 2.0) - warp_angle(t, 2.0) - PI).abs() < 1e-12);
        assert!((warp_angle(warp_angle(t, 3.0), 1.0 / 3.0) - t).abs() < 1e-12);
    }

    #[test]
    fn crossing_counts() {
        assert_eq!(crossings_between(-PI, 0.0), 1);
        assert_eq!(crossings_between(-FRAC_PI_2, 0.0), 0);
        assert_eq!(crossings_between(-3.0 * PI, FRAC_PI_2), 3);
        assert_eq!(crossings_between(0.0, -1.0), 0);
    }

    #[test]
    fn jumps_of_step_function() {
        let steps = [0.25, 0.5, 0.5, 0.9];
        let jumps = isolate_jumps(0.0, 1.0, 1e-12, |x| {
            steps.iter().filter(|&&s| s < x).count() as i64
        });
        assert_eq!(jumps.len(), 4);
        for (j, s) in jumps.iter().zip(steps.iter()) {
            assert!((j - s).abs() < 1e-11);
        }
    }
}

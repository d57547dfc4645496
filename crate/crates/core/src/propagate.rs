//! Exact propagation of Cauchy data `(psi, psi')` across piecewise-constant
//! potentials, with continuous tracking of the Prüfer angle
//! `theta = arg(psi + i psi')`.
//!
//! # Crossing convention
//!
//! `psi = 0` exactly when `theta = pi/2 (mod pi)`, and at such a point
//! `theta' = -1`, so `theta` only ever crosses these lines downwards. The
//! node count of a sweep over `]x0, x1[` is therefore the number of points
//! `pi/2 + m*pi` lying strictly between `theta(x1)` and `theta(x0)`. Nodes
//! sitting exactly on either endpoint are excluded.
//!
//! The per-segment angle increment is computed in closed form from the
//! scaled angle `arg(psi + i psi'/k)`: it rotates uniformly at rate `k`
//! over oscillatory segments and cannot cross the invariant lines
//! `psi'/kappa = +-psi` over evanescent ones. Nothing is sampled.

use crate::error::{Error, Result};
use crate::numeric::{crossings_between, warp_angle, wrap_pi};
use crate::potential::{CellPotential, Profile};

/// Real 2x2 matrix mapping `(psi, psi')` at `x_lo` to `(psi, psi')` at `x_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
    pub energy: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl TransferMatrix {
    pub fn identity(energy: f64, x: f64) -> Self {
        Self { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0, energy, x_lo: x, x_hi: x }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// `|det - 1|` relative to the size of the products forming the
    /// determinant.
    pub fn det_error(&self) -> f64 {
        let scale = (self.m11 * self.m22).abs().max((self.m12 * self.m21).abs()).max(1.0);
        (self.det() - 1.0).abs() / scale
    }

    /// `self` applied after `first`: the map over `first`'s interval
    /// followed by `self`'s.
    pub fn after(&self, first: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * first.m11 + self.m12 * first.m21,
            m12: self.m11 * first.m12 + self.m12 * first.m22,
            m21: self.m21 * first.m11 + self.m22 * first.m21,
            m22: self.m21 * first.m12 + self.m22 * first.m22,
            energy: self.energy,
            x_lo: first.x_lo,
            x_hi: self.x_hi,
        }
    }

    pub fn apply(&self, psi: f64, dpsi: f64) -> (f64, f64) {
        (self.m11 * psi + self.m12 * dpsi, self.m21 * psi + self.m22 * dpsi)
    }

    /// `n`-fold composition by repeated squaring.
    pub fn pow(&self, n: u32) -> TransferMatrix {
        let period = self.x_hi - self.x_lo;
        let mut result = TransferMatrix::identity(self.energy, self.x_lo);
        let mut base = *self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = base.after(&result);
            }
            base = base.after(&base);
            k >>= 1;
        }
        result.x_lo = self.x_lo;
        result.x_hi = self.x_lo + n as f64 * period;
        result
    }
}

/// Propagator across a constant segment of value `v` and width `width`.
pub fn segment_propagator(v: f64, energy: f64, width: f64) -> TransferMatrix {
    let delta = energy - v;
    let (m11, m12, m21, m22) = if delta > 0.0 {
        let k = delta.sqrt();
        let (s, c) = (k * width).sin_cos();
        (c, s / k, -k * s, c)
    } else if delta < 0.0 {
        let kappa = (-delta).sqrt();
        let t = kappa * width;
        let (s, c) = (t.sinh(), t.cosh());
        (c, s / kappa, kappa * s, c)
    } else {
        (1.0, width, 0.0, 1.0)
    };
    TransferMatrix { m11, m12, m21, m22, energy, x_lo: 0.0, x_hi: width }
}

/// Transfer matrix over one cell, `[0, a]`.
pub fn cell_transfer(cell: &CellPotential, energy: f64) -> TransferMatrix {
    let mut m = TransferMatrix::identity(energy, 0.0);
    for s in cell.segments() {
        let mut step = segment_propagator(s.v, energy, s.width());
        step.x_lo = s.x_lo;
        step.x_hi = s.x_hi;
        m = step.after(&m);
    }
    m.x_lo = 0.0;
    m.x_hi = cell.a();
    m
}

/// Transfer matrix over the whole support of a profile.
pub fn profile_transfer(pot: &impl Profile, energy: f64) -> TransferMatrix {
    let (lo, hi) = pot.support();
    let mut m = TransferMatrix::identity(energy, lo);
    for p in pot.pieces() {
        let step = segment_propagator(p.v, energy, p.width);
        m = step.after(&m);
    }
    m.x_lo = lo;
    m.x_hi = hi;
    m
}

/// Cauchy data of a real solution at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyData {
    pub psi: f64,
    pub dpsi: f64,
    pub x: f64,
}

impl CauchyData {
    pub fn new(psi: f64, dpsi: f64, x: f64) -> Self {
        Self { psi, dpsi, x }
    }

    pub fn is_zero(&self) -> bool {
        self.psi == 0.0 && self.dpsi == 0.0
    }

    pub fn angle(&self) -> f64 {
        self.dpsi.atan2(self.psi)
    }
}

/// Continuous Prüfer angle over a sweep and the nodes it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTrace {
    pub theta_start: f64,
    pub theta_end: f64,
    /// Zeros of `psi` in the open interval `]x_start, x_end[`.
    pub node_count: u64,
    pub x_start: f64,
    pub x_end: f64,
}

impl PhaseTrace {
    pub fn delta(&self) -> f64 {
        self.theta_end - self.theta_start
    }
}

/// Running state of a sweep: Cauchy data plus the lifted angle. The data
/// may be rescaled by a positive factor at any time without affecting the
/// angle or the nodes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sweep {
    pub psi: f64,
    pub dpsi: f64,
    pub theta: f64,
}

impl Sweep {
    pub fn start(psi: f64, dpsi: f64) -> Self {
        Self { psi, dpsi, theta: dpsi.atan2(psi) }
    }

    /// Advance across a constant segment.
    pub fn advance(&mut self, v: f64, energy: f64, width: f64) {
        if width <= 0.0 {
            return;
        }
        let m = segment_propagator(v, energy, width);
        let (p1, d1) = m.apply(self.psi, self.dpsi);
        let delta = energy - v;
        let guess = if delta > 0.0 {
            let k = delta.sqrt();
            let scaled = warp_angle(self.theta, 1.0 / k) - k * width;
            warp_angle(scaled, k)
        } else if delta < 0.0 {
            let kappa = delta.abs().sqrt();
            let scaled0 = warp_angle(self.theta, 1.0 / kappa);
            let raw = (d1 / kappa).atan2(p1);
            warp_angle(scaled0 + wrap_pi(raw - scaled0), kappa)
        } else if self.dpsi == 0.0 {
            self.theta
        } else {
            // psi' is constant, so theta stays inside its (m pi, (m+1) pi) cell.
            let base = (self.theta / std::f64::consts::PI).floor() * std::f64::consts::PI;
            base + d1.atan2(p1).rem_euclid(std::f64::consts::PI)
        };
        let exact = d1.atan2(p1);
        self.theta = guess + wrap_pi(exact - guess);
        self.psi = p1;
        self.dpsi = d1;
    }

    /// Rescale to unit norm.
    pub fn normalize(&mut self) {
        let r = self.psi.hypot(self.dpsi);
        if r > 0.0 && r.is_finite() {
            self.psi /= r;
            self.dpsi /= r;
        }
    }
}

/// Constant spans `(v, width)` covering `[from, to]` for a profile, with
/// zero potential outside its support.
pub(crate) fn spans(pot: &impl Profile, from: f64, to: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if to <= from {
        return out;
    }
    let (lo, hi) = pot.support();
    if from < lo {
        out.push((0.0, lo.min(to) - from));
    }
    for p in pot.pieces() {
        let p_hi = p.x_lo + p.width;
        if p_hi <= from || p.x_lo >= to {
            continue;
        }
        let width = if p.x_lo >= from && p_hi <= to {
            p.width
        } else {
            p_hi.min(to) - p.x_lo.max(from)
        };
        out.push((p.v, width));
    }
    if to > hi {
        out.push((0.0, to - hi.max(from)));
    }
    out
}

/// Sweep a solution from `init.x` to `x_to`, returning final data and the
/// Prüfer angle trace.
///
/// If `psi = 0` and `psi' < 0` initially, the data are negated first so
/// that the starting angle is `pi/2`; the sign flip changes neither the
/// nodes nor any spectral quantity.
pub fn propagate_phase(
    pot: &impl Profile,
    energy: f64,
    init: CauchyData,
    x_to: f64,
) -> Result<(CauchyData, PhaseTrace)> {
    if init.is_zero() {
        return Err(Error::Domain("initial Cauchy data must be non-zero".into()));
    }
    if !(x_to >= init.x) {
        return Err(Error::Domain(format!("x_to = {x_to} lies before the start {}", init.x)));
    }
    let (psi, dpsi) = if init.psi == 0.0 && init.dpsi < 0.0 {
        (0.0, -init.dpsi)
    } else {
        (init.psi, init.dpsi)
    };
    let mut sweep = Sweep::start(psi, dpsi);
    let theta_start = sweep.theta;
    for (v, w) in spans(pot, init.x, x_to) {
        sweep.advance(v, energy, w);
    }
    let trace = PhaseTrace {
        theta_start,
        theta_end: sweep.theta,
        node_count: crossings_between(sweep.theta, theta_start),
        x_start: init.x,
        x_end: x_to,
    };
    Ok((CauchyData::new(sweep.psi, sweep.dpsi, x_to), trace))
}

/// Sweep used by the counting routines: rescales after every segment so
/// that deep evanescent stretches cannot overflow.
pub(crate) fn sweep_angle(pot: &impl Profile, energy: f64, psi: f64, dpsi: f64, from: f64, to: f64) -> Sweep {
    let mut sweep = Sweep::start(psi, dpsi);
    for (v, w) in spans(pot, from, to) {
        sweep.advance(v, energy, w);
        sweep.normalize();
    }
    sweep
}

/// Decay rate and the number of zeros of the decaying continuation right
/// of the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailClass {
    pub kappa: f64,
    pub extra_nodes: u8,
}

/// Zeros on `[y, oo[` of the solution with Cauchy data `end` at the right
/// edge `y` of the support, where it continues as
/// `A e^{kappa x} + B e^{-kappa x}` (or `A + B x` at zero energy).
pub fn tail_nodes(end: CauchyData, energy: f64) -> Result<TailClass> {
    if energy > 0.0 {
        return Err(Error::Domain(format!("tail rule needs E <= 0, got {energy}")));
    }
    let kappa = (-energy).sqrt();
    let phi = end.psi;
    let slope = if energy < 0.0 { kappa * phi + end.dpsi } else { end.dpsi };
    let single_zero = (phi >= 0.0 && slope < 0.0) || (phi <= 0.0 && slope > 0.0);
    Ok(TailClass { kappa, extra_nodes: u8::from(single_zero) })
}

/// Zeros on the whole line of the solution equal to `e^{kappa x}` left of
/// the support; this is the number of bound states below `energy`.
pub fn jost_node_count(pot: &impl Profile, energy: f64) -> Result<u64> {
    if energy > 0.0 {
        return Err(Error::Domain(format!("bound-state counting needs E <= 0, got {energy}")));
    }
    let kappa = (-energy).sqrt();
    let (lo, hi) = pot.support();
    let sweep = sweep_angle(pot, energy, 1.0, kappa, lo, hi);
    let start = kappa.atan2(1.0);
    let inner = crossings_between(sweep.theta, start);
    let tail = tail_nodes(CauchyData::new(sweep.psi, sweep.dpsi, hi), energy)?;
    Ok(inner + tail.extra_nodes as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{assemble_n_cell, build_cell};
    use std::f64::consts::PI;

    fn barrier() -> CellPotential {
        build_cell(1.0, &[(0.0, 0.5, 10.0), (0.5, 1.0, 0.0)]).unwrap()
    }

    #[test]
    fn half_period_rotation() {
        let m = segment_propagator(0.0, PI * PI, 1.0);
        assert!((m.m11 + 1.0).abs() < 1e-15);
        assert!(m.m12.abs() < 1e-15);
        assert!(m.m21.abs() < 1e-14);
        assert!((m.m22 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_energy_is_a_shear() {
        let m = segment_propagator(3.0, 3.0, 0.7);
        assert_eq!((m.m11, m.m12, m.m21, m.m22), (1.0, 0.7, 0.0, 1.0));
    }

    #[test]
    fn hyperbolic_segment() {
        let m = segment_propagator(10.0, 0.0, 0.5);
        let k = 10f64.sqrt();
        let t = k * 0.5;
        assert!((m.m11 - t.cosh()).abs() < 1e-14);
        assert!((m.m12 - t.sinh() / k).abs() < 1e-14);
        assert!((m.m21 - k * t.sinh()).abs() < 1e-13);
        assert!((m.m22 - t.cosh()).abs() < 1e-14);
        assert!(m.det_error() < 1e-12);
    }

    #[test]
    fn free_cell_quarter_wave() {
        let cell = CellPotential::zero(1.0).unwrap();
        let m = cell_transfer(&cell, PI * PI / 4.0);
        assert!(m.m11.abs() < 1e-15);
        assert!((m.m12 - 2.0 / PI).abs() < 1e-15);
        assert!((m.m21 + PI / 2.0).abs() < 1e-15);
        assert!(m.m22.abs() < 1e-15);
    }

    #[test]
    fn barrier_cell_is_product_of_segments() {
        let m = cell_transfer(&barrier(), 1.0);
        let expect = segment_propagator(0.0, 1.0, 0.5).after(&segment_propagator(10.0, 1.0, 0.5));
        for (x, y) in [(m.m11, expect.m11), (m.m12, expect.m12), (m.m21, expect.m21), (m.m22, expect.m22)] {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn power_matches_profile_transfer() {
        let cell = barrier();
        for n in [1u32, 2, 5, 16, 64] {
            let pot = assemble_n_cell(cell.clone(), n as i64).unwrap();
            let direct = profile_transfer(&pot, 2.3);
            let power = cell_transfer(&cell, 2.3).pow(n);
            for (x, y) in [(direct.m11, power.m11), (direct.m12, power.m12), (direct.m21, power.m21), (direct.m22, power.m22)] {
                let scale = direct.m11.abs().max(direct.m12.abs()).max(direct.m21.abs()).max(direct.m22.abs()).max(1.0);
                assert!((x - y).abs() / scale < 1e-9, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn free_cosine_has_one_node() {
        let cell = CellPotential::zero(1.0).unwrap();
        let (end, trace) = propagate_phase(&cell, PI * PI, CauchyData::new(1.0, 0.0, 0.0), 1.0).unwrap();
        assert!((trace.delta() + PI).abs() < 1e-12);
        assert_eq!(trace.node_count, 1);
        assert!((end.psi + 1.0).abs() < 1e-12);
    }

    #[test]
    fn growing_exponential_has_no_nodes() {
        let cell = CellPotential::zero(1.0).unwrap();
        let (_, trace) = propagate_phase(&cell, -1.0, CauchyData::new(1.0, 1.0, 0.0), 5.0).unwrap();
        assert_eq!(trace.node_count, 0);
        assert!(trace.delta().abs() < 1e-12);
    }

    #[test]
    fn zero_start_with_negative_slope_is_flipped() {
        let cell = CellPotential::zero(1.0).unwrap();
        let (_, trace) = propagate_phase(&cell, 4.0 * PI * PI, CauchyData::new(0.0, -1.0, 0.0), 1.0).unwrap();
        assert!((trace.theta_start - PI / 2.0).abs() < 1e-15);
        // sin(2 pi x) vanishes once inside ]0, 1[ and again at the excluded end
        assert_eq!(trace.node_count, 1);
        assert!(propagate_phase(&cell, 1.0, CauchyData::new(0.0, 0.0, 0.0), 1.0).is_err());
        assert!(propagate_phase(&cell, 1.0, CauchyData::new(1.0, 0.0, 0.5), 0.2).is_err());
    }

    #[test]
    fn tail_rules() {
        let t = tail_nodes(CauchyData::new(1.0, 0.0, 0.0), -1.0).unwrap();
        assert_eq!((t.kappa, t.extra_nodes), (1.0, 0));
        let t = tail_nodes(CauchyData::new(1.0, -2.0, 0.0), -1.0).unwrap();
        assert_eq!(t.extra_nodes, 1);
        let t = tail_nodes(CauchyData::new(-1.0, 2.0, 0.0), -1.0).unwrap();
        assert_eq!(t.extra_nodes, 1);
        let t = tail_nodes(CauchyData::new(-1.0, 0.5, 0.0), -1.0).unwrap();
        assert_eq!(t.extra_nodes, 0);
        let t = tail_nodes(CauchyData::new(1.0, -0.5, 0.0), 0.0).unwrap();
        assert_eq!(t.extra_nodes, 1);
        let t = tail_nodes(CauchyData::new(1.0, 0.5, 0.0), 0.0).unwrap();
        assert_eq!(t.extra_nodes, 0);
        assert!(tail_nodes(CauchyData::new(1.0, 0.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn free_line_has_no_bound_states() {
        let cell = CellPotential::zero(1.0).unwrap();
        for e in [-10.0, -1.0, -1e-6, 0.0] {
            assert_eq!(jost_node_count(&cell, e).unwrap(), 0);
        }
        assert!(jost_node_count(&cell, 0.1).is_err());
    }

    #[test]
    fn square_well_counts() {
        // A well of depth V and width 1 binds ceil(sqrt(V)/pi) states.
        let shallow = build_cell(1.0, &[(0.0, 1.0, -4.0)]).unwrap();
        assert_eq!(jost_node_count(&shallow, 0.0).unwrap(), 1);
        let deep = build_cell(1.0, &[(0.0, 1.0, -25.0)]).unwrap();
        assert_eq!(jost_node_count(&deep, 0.0).unwrap(), 2);
        assert_eq!(jost_node_count(&deep, -25.5).unwrap(), 0);
    }

    fn arb_cell() -> impl proptest::strategy::Strategy<Value = CellPotential> {
        use proptest::prelude::*;
        (0.3f64..2.0, prop::collection::vec((0.05f64..1.0, -60.0f64..60.0), 1..5)).prop_map(|(a, parts)| {
            let total: f64 = parts.iter().map(|p| p.0).sum();
            let mut x = 0.0;
            let mut segs = Vec::new();
            for (j, (w, v)) in parts.iter().enumerate() {
                let hi = if j + 1 == parts.len() { a } else { x + w / total * a };
                segs.push((x, hi, *v));
                x = hi;
            }
            build_cell(a, &segs).unwrap()
        })
    }

    proptest::proptest! {
        #[test]
        fn unit_determinant(cell in arb_cell(), e in -80.0f64..200.0) {
            let m = cell_transfer(&cell, e);
            proptest::prop_assert!(m.det_error() < 1e-12, "det error {}", m.det_error());
        }

        #[test]
        fn pruefer_comparison(cell in arb_cell(), n in 1i64..6, e in -60.0f64..150.0,
                              t1 in -3.1f64..3.1, t2 in -3.1f64..3.1) {
            let pot = assemble_n_cell(cell, n).unwrap();
            let len = pot.length();
            let (_, a) = propagate_phase(&pot, e, CauchyData::new(t1.cos(), t1.sin(), 0.0), len).unwrap();
            let (_, b) = propagate_phase(&pot, e, CauchyData::new(t2.cos(), t2.sin(), 0.0), len).unwrap();
            proptest::prop_assert!((a.delta() - b.delta()).abs() < PI);
        }

        #[test]
        fn phase_bounds_node_count(cell in arb_cell(), n in 1i64..6, e in -60.0f64..150.0, t in -3.1f64..3.1) {
            let pot = assemble_n_cell(cell, n).unwrap();
            let (psi, dpsi) = (t.cos(), t.sin());
            let (_, tr) = propagate_phase(&pot, e, CauchyData::new(psi, dpsi, 0.0), pot.length()).unwrap();
            let gap = PI / 2.0 - (dpsi / psi).atan() - tr.delta() - PI * tr.node_count as f64;
            proptest::prop_assert!(gap > -1e-9 && gap <= PI + 1e-9, "gap {gap}");
        }

        #[test]
        fn bound_state_count_is_monotone(cell in arb_cell()) {
            let lo = cell.min_segment_value().min(0.0) - 1.0;
            let mut prev = 0;
            for j in 0..=60 {
                let e = lo * (1.0 - j as f64 / 60.0);
                let c = jost_node_count(&cell, e).unwrap();
                proptest::prop_assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn dirichlet_start_phase_bound() {
        let cell = barrier();
        for e in [-5.0, 0.0, 3.0, 40.0, 400.0] {
            let (_, tr) = propagate_phase(&cell, e, CauchyData::new(0.0, 1.0, 0.0), 1.0).unwrap();
            let gap = -tr.delta() - PI * tr.node_count as f64;
            assert!(gap > 0.0 && gap <= PI + 1e-12, "E={e}: {gap}");
        }
    }
}

//! Scattering matrices, n-cell composition, bound states on the line and
//! transmission resonances.
//!
//! Conventions, for a potential supported in `[lo, hi]` and `E = k^2 > 0`:
//!
//! * a wave `e^{ikx}` incident from the left leaves `s21 e^{-ikx}` on the
//!   left and `s22 e^{ikx}` on the right;
//! * a wave `e^{-ikx}` incident from the right leaves `s12 e^{ikx}` on the
//!   right and `s11 e^{-ikx}` on the left;
//! * `T = s22 e^{ik(hi - lo)}` and `R = s21`; for a cell on `[0, a]` this is
//!   the pair read off `W = B^{-1} M B` as `T = 1/w22`, `R = -w21/w22`,
//!   where `B` maps plane-wave coefficients to Cauchy data.
//!
//! The right-incidence entries are computed from the mirror image of the
//! potential, so `s11 = s22` is a genuine check and not an identity.


use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bands::{discriminant, Quasimomentum, ZoneKind};
use crate::boundary::{classify_periodic, Multiplicity, PeriodicClass};
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, isolate_jumps, Tolerances};
use crate::potential::{assemble_n_cell, CellPotential, HeteroPotential, NCellPotential, Profile};
use crate::propagate::{cell_transfer, jost_node_count, TransferMatrix};

type C2 = Matrix2<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    Ok(())
}

/// `P(x)^{-1} B^{-1} M B P(x0)`: the transfer matrix acting on coefficients
/// of `e^{ikx}` and `e^{-ikx}` in global coordinates.
fn plane_wave_matrix(m: &TransferMatrix, k: f64) -> C2 {
    let ik = Complex64::new(0.0, k);
    let b = C2::new(c(1.0), c(1.0), ik, -ik);
    let b_inv = C2::new(c(0.5), 0.5 / ik, c(0.5), -0.5 / ik);
    let real = C2::new(c(m.m11), c(m.m12), c(m.m21), c(m.m22));
    let phase = |x: f64| Complex64::from_polar(1.0, k * x);
    let p_lo = C2::new(phase(m.x_lo), c(0.0), c(0.0), phase(-m.x_lo));
    let p_hi_inv = C2::new(phase(-m.x_hi), c(0.0), c(0.0), phase(m.x_hi));
    p_hi_inv * b_inv * real * b * p_lo
}

/// Left-incidence transmission and reflection from a plane-wave matrix.
fn left_incidence(g: &C2) -> (Complex64, Complex64) {
    let tau = g[(1, 1)].inv();
    (tau, -g[(1, 0)] * tau)
}

/// Single-cell coefficients `(T1, R1)` at wavenumber `k`.
pub fn cell_scattering(cell: &CellPotential, k: f64) -> Result<(Complex64, Complex64)> {
    check_k(k)?;
    let g = plane_wave_matrix(&cell_transfer(cell, k * k), k);
    let (tau, r) = left_incidence(&g);
    Ok((tau * Complex64::from_polar(1.0, k * cell.a()), r))
}

/// Chebyshev composition of `n` identical cells from single-cell data and
/// the Bloch phase `phi`.
pub fn compose_n(t1: Complex64, r1: Complex64, phi: f64, n: u32, edge_guard: f64) -> Result<(Complex64, Complex64)> {
    if n == 0 {
        return Err(Error::Domain("cell count must be at least 1".into()));
    }
    if n == 1 {
        return Ok((t1, r1));
    }
    let s = phi.sin();
    if s.abs() < edge_guard {
        return Err(Error::BandEdge { sin_phi: s });
    }
    let un = (n as f64 * phi).sin() / s;
    let um = ((n - 1) as f64 * phi).sin() / s;
    let inv_t = un * t1.inv() - um;
    let tn = inv_t.inv();
    let rn = un * r1 / t1 * tn;
    Ok((tn, rn))
}

/// Full scattering data of a potential on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringData {
    pub k: f64,
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
    /// `s22 e^{ikL}` with `L` the length of the support.
    pub t: Complex64,
    /// `s21`.
    pub r: Complex64,
}

impl ScatteringData {
    pub fn energy(&self) -> f64 {
        self.k * self.k
    }

    /// Largest entry of `S S^* - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let s = C2::new(self.s11, self.s12, self.s21, self.s22);
        let d = s * s.adjoint() - C2::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn flux_defect(&self) -> f64 {
        (self.t.norm_sqr() + self.r.norm_sqr() - 1.0).abs()
    }

    pub fn reciprocity_defect(&self) -> f64 {
        (self.s11 - self.s22).norm()
    }
}

/// Potentials with a scattering matrix: n-cell or heterogeneous.
#[derive(Debug, Clone, Copy)]
pub enum Scatterer<'a> {
    NCell(&'a NCellPotential),
    Hetero(&'a HeteroPotential),
}

/// Left-incidence `(s22, s21)` for an n-cell potential in global
/// coordinates.
fn n_cell_left(cell: &CellPotential, n: u32, k: f64, tol: &Tolerances) -> (Complex64, Complex64) {
    let energy = k * k;
    let d = discriminant(cell, energy);
    let length = n as f64 * cell.a();
    if d.abs() < 2.0 {
        let phi = (0.5 * d).acos();
        let t1r1 = cell_scattering(cell, k).expect("k checked by caller");
        if let Ok((tn, rn)) = compose_n(t1r1.0, t1r1.1, phi, n, tol.edge_guard) {
            return (tn * Complex64::from_polar(1.0, -k * length), rn);
        }
    }
    let m = cell_transfer(cell, energy).pow(n);
    left_incidence(&plane_wave_matrix(&m, k))
}

fn hetero_matrix(h: &HeteroPotential, k: f64) -> C2 {
    h.cells().iter().fold(C2::identity(), |acc, c| {
        let mut m = cell_transfer(&c.profile, k * k);
        m.x_lo = c.x_lo;
        m.x_hi = c.x_hi;
        plane_wave_matrix(&m, k) * acc
    })
}

/// Scattering matrix of an n-cell or heterogeneous potential.
///
/// n-cell potentials use [`compose_n`] inside bands and switch to exact
/// matrix powers in gaps and within the edge guard of a band edge.
pub fn n_cell_scattering(pot: Scatterer<'_>, k: f64) -> Result<ScatteringData> {
    n_cell_scattering_with(pot, k, &Tolerances::default())
}

pub fn n_cell_scattering_with(pot: Scatterer<'_>, k: f64, tol: &Tolerances) -> Result<ScatteringData> {
    check_k(k)?;
    let (lo, hi, left, right) = match pot {
        Scatterer::NCell(p) => {
            let n = p.n() as u32;
            let mirror = p.cell().reversed();
            (0.0, p.length(), n_cell_left(p.cell(), n, k, tol), n_cell_left(&mirror, n, k, tol))
        }
        Scatterer::Hetero(h) => {
            let (lo, hi) = h.support();
            let left = left_incidence(&hetero_matrix(h, k));
            let right = left_incidence(&hetero_matrix(&h.mirrored(), k));
            (lo, hi, left, right)
        }
    };
    let (s22, s21) = left;
    // mirror x -> lo + hi - x turns right incidence into left incidence
    let (s11, r_mirror) = right;
    let s12 = r_mirror * Complex64::from_polar(1.0, -2.0 * k * (lo + hi));
    Ok(ScatteringData { k, s11, s12, s21, s22, t: s22 * Complex64::from_polar(1.0, k * (hi - lo)), r: s21 })
}

/// `(T_n, R_n)` from the `n`-th power of the cell transfer matrix.
pub fn direct_n_cell(cell: &CellPotential, n: u32, k: f64) -> Result<(Complex64, Complex64)> {
    check_k(k)?;
    let m = cell_transfer(cell, k * k).pow(n);
    let (tau, r) = left_incidence(&plane_wave_matrix(&m, k));
    Ok((tau * Complex64::from_polar(1.0, k * n as f64 * cell.a()), r))
}

/// `F_sc(]-oo, E[)`: bound states strictly below `E <= 0`.
pub fn count_bound_states(pot: &impl Profile, energy: f64) -> Result<u64> {
    jost_node_count(pot, energy)
}

/// Bound-state energies of a potential on the line.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundSpectrum {
    pub energies: Vec<f64>,
}

impl BoundSpectrum {
    /// `#{E_j < E}`.
    pub fn count_below(&self, energy: f64) -> usize {
        self.energies.partition_point(|&e| e < energy)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// Isolate every bound state by bisection on the integer count.
pub fn locate_bound_states(pot: &impl Profile, e_floor: f64) -> Result<BoundSpectrum> {
    locate_bound_states_with(pot, e_floor, Tolerances::default().edge_tol)
}

pub fn locate_bound_states_with(pot: &impl Profile, e_floor: f64, edge_tol: f64) -> Result<BoundSpectrum> {
    let min = pot.min_value();
    if !(e_floor <= min) {
        return Err(Error::Domain(format!("floor {e_floor} must not exceed the potential minimum {min}")));
    }
    let count = |e: f64| jost_node_count(pot, e.min(0.0)).map(|c| c as i64).unwrap_or(i64::MAX);
    let energies = isolate_jumps(e_floor, 0.0, edge_tol, count);
    Ok(BoundSpectrum { energies })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceOrigin {
    BlochComb,
    SingleCell,
}

impl ResonanceOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResonanceOrigin::BlochComb => "bloch_comb",
            ResonanceOrigin::SingleCell => "single_cell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Resonance {
    pub energy: f64,
    pub origin: ResonanceOrigin,
    /// `|R_n|` re-evaluated by direct matrix power.
    pub reflection: f64,
}

/// Transmission resonances of an n-cell potential in an energy window.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResonanceSet {
    pub resonances: Vec<Resonance>,
    /// Set for the free cell, where every positive energy transmits.
    pub all_pass: bool,
    /// Candidates that failed the `|R_n|` audit.
    pub rejected: Vec<(f64, f64)>,
    pub n: u32,
    pub window: (f64, f64),
}

impl ResonanceSet {
    /// `Phi_sc(]0, E])`.
    pub fn count_up_to(&self, energy: f64) -> usize {
        self.resonances.partition_point(|r| r.energy <= energy)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.resonances.iter().map(|r| r.energy).collect()
    }
}

/// Options for [`find_resonances_with`].
#[derive(Debug, Clone, Copy)]
pub struct ResonanceOptions {
    /// Grid used to locate minima of `|R1|`.
    pub single_cell_grid: usize,
    pub tol: Tolerances,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        Self { single_cell_grid: 4000, tol: Tolerances::default() }
    }
}

pub fn find_resonances(cell: &CellPotential, n: u32, e_lo: f64, e_hi: f64, q: &Quasimomentum) -> Result<ResonanceSet> {
    find_resonances_with(cell, n, e_lo, e_hi, q, &ResonanceOptions::default())
}

/// Perfect-transmission energies in `]e_lo, e_hi]`: the Bloch comb
/// `sin(n phi) = 0, sin(phi) != 0`, plus zeros of the single-cell
/// reflection.
pub fn find_resonances_with(
    cell: &CellPotential,
    n: u32,
    e_lo: f64,
    e_hi: f64,
    q: &Quasimomentum,
    opts: &ResonanceOptions,
) -> Result<ResonanceSet> {
    if n < 2 {
        return Err(Error::Domain(format!("resonance search needs n >= 2, got {n}")));
    }
    if !(e_lo >= 0.0 && e_hi > e_lo) {
        return Err(Error::Domain(format!("window [{e_lo}, {e_hi}] must satisfy 0 <= lo < hi")));
    }
    if e_hi > q.ceiling() {
        return Err(Error::OutOfRange { energy: e_hi, ceiling: q.ceiling() });
    }
    let window = (e_lo, e_hi);
    if cell.is_zero() {
        return Ok(ResonanceSet { resonances: Vec::new(), all_pass: true, rejected: Vec::new(), n, window });
    }
    let tol = opts.tol;
    let mut candidates: Vec<(f64, ResonanceOrigin)> = Vec::new();

    for zone in q.table().zones.iter().filter(|z| z.kind == ZoneKind::Allowed) {
        let lo = zone.e_lo.max(e_lo);
        let hi = zone.e_hi.min(e_hi);
        if hi <= lo {
            continue;
        }
        let r_lo = q.half_turns(lo)?;
        let r_hi = q.half_turns(hi)?;
        let first = (r_lo * n as f64).floor() as u64 + 1;
        let last = (r_hi * n as f64).ceil() as u64;
        for m in first..last.max(first) {
            if m % n as u64 == 0 {
                continue;
            }
            let target = m as f64 / n as f64;
            let (a, b) = bisect_predicate(lo, hi, tol.edge_tol, |e| q.half_turns(e).map_or(true, |r| r >= target));
            let e = 0.5 * (a + b);
            if e > e_lo && e <= e_hi {
                candidates.push((e, ResonanceOrigin::BlochComb));
            }
        }
    }

    for e in single_cell_zeros(cell, e_lo, e_hi, opts.single_cell_grid, tol) {
        let dup = candidates.iter().any(|(x, _)| (x - e).abs() <= 1e-8 * e.max(1.0));
        if !dup {
            candidates.push((e, ResonanceOrigin::SingleCell));
        }
    }

    let audited: Vec<(f64, ResonanceOrigin, f64)> = candidates
        .par_iter()
        .map(|&(e, origin)| {
            let r = direct_n_cell(cell, n, e.sqrt()).map(|(_, r)| r.norm()).unwrap_or(f64::INFINITY);
            (e, origin, r)
        })
        .collect();
    let mut resonances = Vec::new();
    let mut rejected = Vec::new();
    for (energy, origin, reflection) in audited {
        if reflection < tol.res_tol {
            resonances.push(Resonance { energy, origin, reflection });
        } else {
            rejected.push((energy, reflection));
        }
    }
    resonances.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    rejected.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ResonanceSet { resonances, all_pass: false, rejected, n, window })
}

/// Zeros of `|R1|` on `]e_lo, e_hi]`, from grid minima refined by golden
/// section.
fn single_cell_zeros(cell: &CellPotential, e_lo: f64, e_hi: f64, grid: usize, tol: Tolerances) -> Vec<f64> {
    let refl = |e: f64| {
        if e <= 0.0 {
            return 1.0;
        }
        cell_scattering(cell, e.sqrt()).map_or(1.0, |(_, r)| r.norm())
    };
    let h = (e_hi - e_lo) / grid as f64;
    let values: Vec<f64> = (0..=grid).into_par_iter().map(|i| refl(e_lo + h * i as f64)).collect();
    let mut out = Vec::new();
    for i in 0..=grid {
        let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
        let right = if i == grid { f64::INFINITY } else { values[i + 1] };
        if !(values[i] <= left && values[i] < right) {
            continue;
        }
        let (a, b) = ((e_lo + h * (i as f64 - 1.0)).max(e_lo), (e_lo + h * (i as f64 + 1.0)).min(e_hi));
        let e = golden_min(&refl, a, b, tol.edge_tol);
        if refl(e) < tol.res_tol && e > e_lo && e <= e_hi {
            out.push(e);
        }
    }
    out
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Which periodic problem has a resonance as a double eigenvalue.
///
/// Comb resonances must classify as double periodic or double skew;
/// single-cell resonances off the comb classify as neither.
pub fn resonance_vs_periodic(q: &Quasimomentum, n: u32, res: &Resonance, tol: &Tolerances) -> Result<PeriodicClass> {
    let class = classify_periodic(q, n as u64, res.energy, tol)?;
    if res.origin == ResonanceOrigin::BlochComb && class.multiplicity != Multiplicity::Double {
        return Err(Error::Domain(format!(
            "comb resonance at E = {} is not a double periodic or skew eigenvalue ({:?})",
            res.energy, class.multiplicity
        )));
    }
    Ok(class)
}

/// Build the n-cell potential for a resonance study.
pub fn n_cell(cell: &CellPotential, n: u32) -> Result<NCellPotential> {
    assemble_n_cell(cell.clone(), n as i64)
}

/// Bloch phase `phi` with `2 cos phi = Tr M`, for in-band energies.
pub fn local_bloch_phase(cell: &CellPotential, energy: f64) -> Option<f64> {
    let d = discriminant(cell, energy);
    (d.abs() <= 2.0).then(|| (0.5 * d).acos())
}

/// Energies `k^2` of a wavenumber grid are convenient for sweeps; this
/// returns `k` for an energy.
pub fn wavenumber(energy: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::Domain(format!("scattering needs E > 0, got {energy}")));
    }
    Ok(energy.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Flavor;
    use std::f64::consts::PI;
    use crate::potential::{assemble_hetero, build_cell};
    use crate::propagate::profile_transfer;

    fn transfer_for(pot: &impl Profile, k: f64) -> C2 {
        plane_wave_matrix(&profile_transfer(pot, k * k), k)
    }

    fn barrier() -> CellPotential {
        build_cell(1.0, &[(0.0, 0.5, 10.0), (0.5, 1.0, 0.0)]).unwrap()
    }

    fn lopsided() -> CellPotential {
        build_cell(1.3, &[(0.0, 0.2, 7.0), (0.2, 0.9, -3.0), (0.9, 1.3, 1.5)]).unwrap()
    }

    /// Textbook rectangular barrier of height `v` on `[0, w]`.
    fn barrier_oracle(v: f64, w: f64, k: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let (t_num, r_num, den) = if k * k < v {
            let kap = (v - k * k).sqrt();
            let den = c((kap * w).cosh()) + i * (kap * kap - k * k) / (2.0 * k * kap) * (kap * w).sinh();
            (Complex64::from_polar(1.0, -k * w), -i * (k * k + kap * kap) / (2.0 * k * kap) * (kap * w).sinh(), den)
        } else {
            let q = (k * k - v).sqrt();
            let den = c((q * w).cos()) - i * (q * q + k * k) / (2.0 * k * q) * (q * w).sin();
            (Complex64::from_polar(1.0, -k * w), i * (q * q - k * k) / (2.0 * k * q) * (q * w).sin(), den)
        };
        (t_num / den, r_num / den)
    }

    #[test]
    fn free_cell_transmits_fully() {
        let cell = CellPotential::zero(1.0).unwrap();
        for k in [0.1, 1.0, 3.7, 20.0] {
            let (t, r) = cell_scattering(&cell, k).unwrap();
            assert!((t - Complex64::from_polar(1.0, k)).norm() < 1e-14);
            assert!(r.norm() < 1e-14);
        }
        assert!(cell_scattering(&cell, 0.0).is_err());
    }

    #[test]
    fn barrier_matches_textbook_formula() {
        for k in [1.0, 2.0, 3.1, 3.3, 6.0] {
            let (t, r) = cell_scattering(&barrier(), k).unwrap();
            let (t0, r0) = barrier_oracle(10.0, 0.5, k);
            // the free half of the cell only adds propagation phase
            assert!((t - t0 * Complex64::from_polar(1.0, k)).norm() < 1e-8, "k={k}");
            assert!((r - r0).norm() < 1e-8, "k={k}: {r} vs {r0}");
        }
    }

    #[test]
    fn single_cell_unitarity_and_trace_identity() {
        for cell in [barrier(), lopsided()] {
            for i in 1..100 {
                let k = 0.05 * i as f64;
                let (t, r) = cell_scattering(&cell, k).unwrap();
                assert!((t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-8);
                let d = discriminant(&cell, k * k);
                assert!((t.inv().re - 0.5 * d).abs() < 1e-9 * d.abs().max(1.0));
            }
        }
    }

    #[test]
    fn compose_matches_direct_power() {
        let tol = Tolerances::default();
        for cell in [barrier(), lopsided()] {
            for n in [1u32, 2, 8, 17, 64] {
                for i in 0..80 {
                    let k = 0.3 + 0.1 * i as f64;
                    let Some(phi) = local_bloch_phase(&cell, k * k) else { continue };
                    if phi.sin().abs() < 1e-3 {
                        continue;
                    }
                    let (t1, r1) = cell_scattering(&cell, k).unwrap();
                    let (tn, rn) = compose_n(t1, r1, phi, n, tol.edge_guard).unwrap();
                    let (td, rd) = direct_n_cell(&cell, n, k).unwrap();
                    assert!((tn - td).norm() < 1e-9, "n={n} k={k}");
                    assert!((rn - rd).norm() < 1e-9, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn compose_identity_cases() {
        let (t1, r1) = cell_scattering(&barrier(), 2.0).unwrap();
        assert_eq!(compose_n(t1, r1, 0.4, 1, 1e-6).unwrap(), (t1, r1));
        let (tn, rn) = compose_n(Complex64::from_polar(1.0, 1.5), c(0.0), 1.5, 6, 1e-6).unwrap();
        assert!(rn.norm() == 0.0);
        assert!((tn - Complex64::from_polar(1.0, 9.0)).norm() < 1e-12);
        assert!(matches!(compose_n(t1, r1, 1e-9, 3, 1e-6), Err(Error::BandEdge { .. })));
    }

    #[test]
    fn n_cell_scattering_is_unitary_and_reciprocal() {
        for cell in [barrier(), lopsided()] {
            for n in [1u32, 3, 8] {
                let pot = n_cell(&cell, n).unwrap();
                for i in 1..60 {
                    let k = 0.13 * i as f64;
                    let s = n_cell_scattering(Scatterer::NCell(&pot), k).unwrap();
                    assert!(s.unitarity_defect() < 1e-8, "n={n} k={k}: {}", s.unitarity_defect());
                    assert!(s.reciprocity_defect() < 1e-8);
                    assert!(s.flux_defect() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn free_n_cell_s_matrix() {
        let pot = n_cell(&CellPotential::zero(1.0).unwrap(), 5).unwrap();
        let s = n_cell_scattering(Scatterer::NCell(&pot), 1.7).unwrap();
        assert!(s.s21.norm() < 1e-12);
        assert!((s.s22 - 1.0).norm() < 1e-12);
        assert!((s.t - Complex64::from_polar(1.0, 1.7 * 5.0)).norm() < 1e-12);
    }

    #[test]
    fn hetero_of_identical_cells_equals_n_cell() {
        let cell = lopsided();
        let segs: Vec<_> = cell.segments().iter().map(|s| (s.x_lo, s.x_hi, s.v)).collect();
        let h = assemble_hetero(&[(0.0, 1.3, segs.clone()), (1.3, 2.6, segs)]).unwrap();
        let pot = n_cell(&cell, 2).unwrap();
        for k in [0.4, 1.1, 2.9, 5.0] {
            let a = n_cell_scattering(Scatterer::Hetero(&h), k).unwrap();
            let b = n_cell_scattering(Scatterer::NCell(&pot), k).unwrap();
            for (x, y) in [(a.s11, b.s11), (a.s12, b.s12), (a.s21, b.s21), (a.s22, b.s22)] {
                assert!((x - y).norm() < 1e-10, "k={k}");
            }
        }
    }

    #[test]
    fn hetero_with_gaps_is_unitary() {
        let h = assemble_hetero(&[
            (-1.0, 0.0, vec![(0.0, 1.0, -6.0)]),
            (0.5, 1.7, vec![(0.0, 0.4, 9.0), (0.4, 1.2, 0.0)]),
            (2.0, 2.3, vec![(0.0, 0.3, 3.0)]),
        ])
        .unwrap();
        for i in 1..50 {
            let k = 0.2 * i as f64;
            let s = n_cell_scattering(Scatterer::Hetero(&h), k).unwrap();
            assert!(s.unitarity_defect() < 1e-8);
            assert!(s.reciprocity_defect() < 1e-8);
            let direct = transfer_for(&h, k);
            assert!((direct[(1, 1)].inv() - s.s22).norm() < 1e-9);
        }
    }

    #[test]
    fn bound_states_of_wells() {
        let shallow = build_cell(1.0, &[(0.0, 1.0, -4.0)]).unwrap();
        let deep = build_cell(1.0, &[(0.0, 1.0, -25.0)]).unwrap();
        assert_eq!(count_bound_states(&deep, 0.0).unwrap(), 2);
        assert!(count_bound_states(&deep, 0.5).is_err());
        let one = locate_bound_states(&shallow, -5.0).unwrap();
        assert_eq!(one.len(), 1);
        // even state of a finite well: k tan(k/2) = kappa with k^2 + kappa^2 = 4
        let e = one.energies[0];
        let (k, kap) = ((e + 4.0).sqrt(), (-e).sqrt());
        assert!((k * (k / 2.0).tan() - kap).abs() < 1e-8);
        let two = locate_bound_states(&n_cell(&shallow, 2).unwrap(), -5.0).unwrap();
        assert_eq!(two.len(), 2);
        assert!(two.energies[0] < e && e < two.energies[1]);
        assert!(locate_bound_states(&CellPotential::zero(1.0).unwrap(), -1.0).unwrap().is_empty());
        assert!(locate_bound_states(&shallow, -1.0).is_err());
    }

    #[test]
    fn resonance_comb_in_first_band() {
        let cell = barrier();
        let q = Quasimomentum::new(cell.clone(), 120.0).unwrap();
        let bands: Vec<_> = q.table().open_zones().into_iter().filter(|z| z.kind == ZoneKind::Allowed).collect();
        let first = bands[0];
        let set = find_resonances(&cell, 4, first.e_lo, first.e_hi, &q).unwrap();
        let comb: Vec<_> = set.resonances.iter().filter(|r| r.origin == ResonanceOrigin::BlochComb).collect();
        assert_eq!(comb.len(), 3);
        assert!(set.rejected.is_empty());
        for r in comb {
            let phi = q.half_turns(r.energy).unwrap() * PI;
            assert!((4.0 * phi).sin().abs() < 1e-6);
        }
    }

    #[test]
    fn resonances_lie_in_bands() {
        let cell = barrier();
        let q = Quasimomentum::new(cell.clone(), 120.0).unwrap();
        let set = find_resonances(&cell, 8, 0.0, 120.0, &q).unwrap();
        assert!(!set.resonances.is_empty());
        for r in &set.resonances {
            assert!(r.reflection < 1e-6);
            assert!(discriminant(&cell, r.energy).abs() <= 2.0 + 1e-9);
            let zone = q.table().locate(r.energy).unwrap();
            assert!(zone.kind == ZoneKind::Allowed || zone.e_lo == r.energy || zone.e_hi == r.energy);
        }
        // the isolated barrier is transparent where its width holds whole half-waves
        let single: Vec<_> = set.resonances.iter().filter(|r| r.origin == ResonanceOrigin::SingleCell).collect();
        for r in &single {
            let kw = (r.energy - 10.0).sqrt() * 0.5;
            assert!((kw / PI - (kw / PI).round()).abs() < 1e-6, "{}", r.energy);
        }
    }

    #[test]
    fn comb_resonances_are_double_eigenvalues() {
        let cell = barrier();
        let q = Quasimomentum::new(cell.clone(), 120.0).unwrap();
        let tol = Tolerances::default();
        for n in [2u32, 4, 8] {
            let set = find_resonances(&cell, n, 0.0, 120.0, &q).unwrap();
            for r in &set.resonances {
                let class = resonance_vs_periodic(&q, n, r, &tol).unwrap();
                if r.origin == ResonanceOrigin::BlochComb {
                    let level = (n as f64 * q.half_turns(r.energy).unwrap()).round() as u64;
                    let want = if level.is_multiple_of(2) { Flavor::Periodic } else { Flavor::Skew };
                    assert_eq!(class.flavor, Some(want));
                }
            }
        }
    }

    #[test]
    fn free_cell_is_all_pass() {
        let cell = CellPotential::zero(1.0).unwrap();
        let q = Quasimomentum::new(cell.clone(), 50.0).unwrap();
        let set = find_resonances(&cell, 4, 0.0, 50.0, &q).unwrap();
        assert!(set.all_pass && set.resonances.is_empty());
        assert!(find_resonances(&cell, 1, 0.0, 50.0, &q).is_err());
    }
}

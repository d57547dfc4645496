//! Sturm–Liouville spectra under separated boundary conditions, and
//! periodic / skew-periodic spectra of n-cell potentials.
//!
//! Separated conditions `psi(0) cos(alpha) = psi'(0) sin(alpha)` and
//! `psi(L) cos(beta) = psi'(L) sin(beta)` are counted by shooting the
//! solution with data `(sin alpha, cos alpha)`. Its Prüfer angle starts at
//! `pi/2 - alpha`, decreases with `E` at the far end, and `E` is an
//! eigenvalue exactly when the terminal angle hits one of the targets
//! `pi/2 - beta - j pi`, `j >= 0`.
//!
//! Periodic spectra are read off the quasimomentum: with
//! `R(E) = n a p(E) / pi`, periodic eigenvalues sit on the even levels of
//! `R` and skew-periodic ones on the odd levels. A level crossed inside a
//! band is a double eigenvalue; a level held on a plateau contributes its
//! two plateau edges as simple eigenvalues.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::bands::{Quasimomentum, Zone, ZoneKind};
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, integer_part, isolate_jumps, Tolerances};
use crate::potential::Profile;
use crate::propagate::sweep_angle;

/// Boundary angles normalized to `0 <= alpha < pi`, `0 < beta <= pi`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundaryConditions {
    alpha: f64,
    beta: f64,
}

/// Relative order of the boundary angles, which fixes the offsets in the
/// counting brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCase {
    /// `alpha = 0, beta = pi`.
    Dirichlet,
    AlphaBelowBeta,
    BetaBelowAlpha,
    Equal,
}

impl BoundaryConditions {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!("non-finite boundary angle ({alpha}, {beta})")));
        }
        if !(0.0..PI).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in [0, pi)")));
        }
        if !(beta > 0.0 && beta <= PI) {
            return Err(Error::Domain(format!("beta = {beta} must lie in (0, pi]")));
        }
        Ok(Self { alpha, beta })
    }

    /// Reduce arbitrary angles into the normalized ranges; the conditions
    /// only depend on the angles modulo `pi`.
    pub fn normalized(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!("non-finite boundary angle ({alpha}, {beta})")));
        }
        let a = alpha.rem_euclid(PI);
        let mut b = beta.rem_euclid(PI);
        if b == 0.0 {
            b = PI;
        }
        Self::new(if a >= PI { 0.0 } else { a }, b)
    }

    pub fn dirichlet() -> Self {
        Self { alpha: 0.0, beta: PI }
    }

    pub fn neumann() -> Self {
        Self { alpha: FRAC_PI_2, beta: FRAC_PI_2 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn case(&self) -> BoundaryCase {
        if self.alpha == 0.0 && self.beta == PI {
            BoundaryCase::Dirichlet
        } else if self.alpha < self.beta {
            BoundaryCase::AlphaBelowBeta
        } else if self.beta < self.alpha {
            BoundaryCase::BetaBelowAlpha
        } else {
            BoundaryCase::Equal
        }
    }

    /// Bounds on `F(]-oo, E])` in terms of the integer part of the
    /// normalized winding `-Delta(theta)/pi`.
    pub fn winding_bounds(&self, winding: f64) -> (i64, i64) {
        let b = integer_part(winding);
        match self.case() {
            BoundaryCase::Dirichlet => (b, b),
            BoundaryCase::AlphaBelowBeta => (b, b + 1),
            BoundaryCase::BetaBelowAlpha => (b + 1, b + 2),
            BoundaryCase::Equal => (b + 1, b + 1),
        }
    }

    /// Bounds on `F(]-oo, E[)` in terms of `R = n a p(E) / pi`, valid for
    /// every `E`.
    pub fn quasimomentum_bounds(&self, r: f64) -> (i64, i64) {
        let b = integer_part(r);
        match self.case() {
            BoundaryCase::Dirichlet => (b - 1, b),
            BoundaryCase::AlphaBelowBeta => (b - 1, b + 1),
            BoundaryCase::BetaBelowAlpha => (b, b + 2),
            BoundaryCase::Equal => (b, b + 1),
        }
    }

    /// Sharper bounds on `F(]-oo, E[)` for `E` off the closure of the
    /// forbidden set.
    pub fn band_bounds(&self, r: f64) -> (i64, i64) {
        let b = integer_part(r);
        match self.case() {
            BoundaryCase::Dirichlet => (b, b),
            BoundaryCase::AlphaBelowBeta => (b, b + 1),
            BoundaryCase::BetaBelowAlpha => (b + 1, b + 2),
            BoundaryCase::Equal => (b + 1, b + 1),
        }
    }

    /// Bound on eigenvalues in the closure of gap `index`: `(exact, max)`.
    pub fn gap_mass_bound(&self, index: u64) -> (Option<u64>, u64) {
        match (self.case(), index) {
            (BoundaryCase::Dirichlet, 0) => (Some(0), 0),
            (BoundaryCase::Dirichlet, _) => (Some(1), 1),
            (BoundaryCase::AlphaBelowBeta, 0) => (None, 1),
            (BoundaryCase::AlphaBelowBeta, _) | (BoundaryCase::BetaBelowAlpha, _) => (None, 2),
            (BoundaryCase::Equal, _) => (Some(1), 1),
        }
    }
}

/// Terminal Prüfer data of the shooting solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub theta_start: f64,
    pub theta_end: f64,
    pub psi: f64,
    pub dpsi: f64,
}

impl Shot {
    /// `-Delta(theta) / pi`.
    pub fn winding(&self) -> f64 {
        -(self.theta_end - self.theta_start) / PI
    }
}

pub fn shoot(pot: &impl Profile, bc: &BoundaryConditions, energy: f64) -> Shot {
    let (lo, hi) = pot.support();
    let (s, c) = bc.alpha.sin_cos();
    let sweep = sweep_angle(pot, energy, s, c, lo, hi);
    Shot { theta_start: c.atan2(s), theta_end: sweep.theta, psi: sweep.psi, dpsi: sweep.dpsi }
}

fn targets_at_or_above(bc: &BoundaryConditions, theta_end: f64, strict: bool) -> u64 {
    // #{ j >= 0 : theta_end <= pi/2 - beta - j pi }
    let x = (FRAC_PI_2 - bc.beta - theta_end) / PI;
    if x < 0.0 {
        return 0;
    }
    let f = x.floor();
    let count = if strict && f == x { f } else { f + 1.0 };
    count as u64
}

/// `F(]-oo, E])` for the problem on the support of `pot`.
pub fn sl_count(pot: &impl Profile, bc: &BoundaryConditions, energy: f64) -> u64 {
    targets_at_or_above(bc, shoot(pot, bc, energy).theta_end, false)
}

/// `F(]-oo, E[)`.
pub fn sl_count_open(pot: &impl Profile, bc: &BoundaryConditions, energy: f64) -> u64 {
    targets_at_or_above(bc, shoot(pot, bc, energy).theta_end, true)
}

/// Bracket bounds on `F(]-oo, E])` from the terminal winding.
pub fn sl_bracket(pot: &impl Profile, bc: &BoundaryConditions, energy: f64) -> (i64, i64) {
    bc.winding_bounds(shoot(pot, bc, energy).winding())
}

/// Eigenvalues of a separated boundary-value problem in a window.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SlSpectrum {
    pub bc: BoundaryConditions,
    pub eigenvalues: Vec<f64>,
    /// Index of the first listed eigenvalue in the full spectrum.
    pub first_index: u64,
    /// `|psi cos(beta) - psi' sin(beta)| / |(psi, psi')|` at each eigenvalue.
    pub residuals: Vec<f64>,
}

impl SlSpectrum {
    pub fn count_up_to(&self, energy: f64) -> u64 {
        self.first_index + self.eigenvalues.partition_point(|&e| e <= energy) as u64
    }
}

/// A lower energy bound below which the problem has no eigenvalue.
pub fn sl_floor(pot: &impl Profile, bc: &BoundaryConditions) -> f64 {
    let mut e = pot.min_value() - 1.0;
    let mut step = 1.0;
    while sl_count(pot, bc, e) > 0 {
        step *= 2.0;
        e = pot.min_value() - step;
    }
    e
}

/// Eigenvalues in `]e_lo, e_hi]`, each bracketed to `edge_tol`. An
/// infinite `e_lo` starts from [`sl_floor`].
pub fn sl_eigenvalues(pot: &impl Profile, bc: &BoundaryConditions, e_lo: f64, e_hi: f64) -> Result<SlSpectrum> {
    sl_eigenvalues_with(pot, bc, e_lo, e_hi, Tolerances::default().edge_tol)
}

pub fn sl_eigenvalues_with(
    pot: &impl Profile,
    bc: &BoundaryConditions,
    e_lo: f64,
    e_hi: f64,
    edge_tol: f64,
) -> Result<SlSpectrum> {
    if !(e_lo < e_hi) || !e_hi.is_finite() {
        return Err(Error::Domain(format!("empty window [{e_lo}, {e_hi}]")));
    }
    let e_lo = if e_lo.is_finite() { e_lo } else { sl_floor(pot, bc).min(e_hi - 1.0) };
    let first_index = sl_count(pot, bc, e_lo);
    let eigenvalues = isolate_jumps(e_lo, e_hi, edge_tol, |e| sl_count(pot, bc, e) as i64);
    let (sb, cb) = bc.beta.sin_cos();
    let residuals = eigenvalues
        .iter()
        .map(|&e| {
            let s = shoot(pot, bc, e);
            (s.psi * cb - s.dpsi * sb).abs() / s.psi.hypot(s.dpsi)
        })
        .collect();
    Ok(SlSpectrum { bc: *bc, eigenvalues, first_index, residuals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Periodic,
    Skew,
}

impl Flavor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flavor::Periodic => "periodic",
            Flavor::Skew => "skew",
        }
    }

    fn of_level(level: u64) -> Flavor {
        if level.is_multiple_of(2) {
            Flavor::Periodic
        } else {
            Flavor::Skew
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Flavor::Periodic),
            "skew" => Ok(Flavor::Skew),
            other => Err(Error::Domain(format!("unknown flavor {other:?}; expected periodic or skew"))),
        }
    }
}

/// Whether the open gap containing `energy` in `[e_lo, e_hi)` sits on a
/// level of the given flavor.
fn on_plateau_of(q: &Quasimomentum, n: u64, flavor: Flavor, energy: f64) -> Result<bool> {
    let zone = q.table().locate(energy)?;
    Ok(match zone.gap_index {
        Some(l) if l >= 1 && !zone.is_degenerate() => {
            energy >= zone.e_lo && energy < zone.e_hi && Flavor::of_level(n * l) == flavor
        }
        _ => false,
    })
}

/// `F(]-oo, E])` (periodic) or `F~(]-oo, E])` (skew) with multiplicity,
/// for `n` cells.
pub fn periodic_count(q: &Quasimomentum, n: u64, flavor: Flavor, energy: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("cell count must be at least 1".into()));
    }
    let r = n as f64 * q.half_turns(energy)?;
    let plateau = u64::from(on_plateau_of(q, n, flavor, energy)?);
    Ok(match flavor {
        Flavor::Periodic => {
            let below_bottom = q.table().spectrum_bottom().is_none_or(|b| energy < b);
            let levels = 2 * ((r / 2.0).floor() as u64 + 1);
            levels - if below_bottom { 2 } else { 1 } - plateau
        }
        Flavor::Skew => 2 * ((r + 1.0) / 2.0).floor() as u64 - plateau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Simple,
    Double,
    None,
}

/// Result of [`classify_periodic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PeriodicClass {
    pub multiplicity: Multiplicity,
    pub flavor: Option<Flavor>,
}

/// Decide whether `energy` is a simple or double periodic or skew-periodic
/// eigenvalue of the `n`-cell problem.
pub fn classify_periodic(q: &Quasimomentum, n: u64, energy: f64, tol: &Tolerances) -> Result<PeriodicClass> {
    let none = PeriodicClass { multiplicity: Multiplicity::None, flavor: None };
    let table = q.table();
    let near = 10.0 * tol.edge_tol * energy.abs().max(1.0);
    for (j, z) in table.zones.iter().enumerate() {
        if z.kind != ZoneKind::Forbidden || z.is_degenerate() {
            continue;
        }
        let l = z.gap_index.unwrap_or(0);
        let at_lo = j > 0 && (energy - z.e_lo).abs() <= near;
        let at_hi = z.e_hi < table.e_max && (energy - z.e_hi).abs() <= near;
        if at_lo || at_hi {
            return Ok(PeriodicClass { multiplicity: Multiplicity::Simple, flavor: Some(Flavor::of_level(n * l)) });
        }
        if energy > z.e_lo && energy < z.e_hi {
            return Ok(none);
        }
    }
    let r = n as f64 * q.half_turns(energy)?;
    let level = r.round();
    if (r - level).abs() > tol.res_tol {
        return Ok(none);
    }
    Ok(PeriodicClass { multiplicity: Multiplicity::Double, flavor: Some(Flavor::of_level(level as u64)) })
}

/// Periodic or skew-periodic eigenvalues of the `n`-cell problem up to the
/// zone-table ceiling.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PeriodicSpectrum {
    pub flavor: Flavor,
    pub n: u64,
    /// `(E, multiplicity)` sorted by energy.
    pub eigenvalues: Vec<(f64, u8)>,
}

impl PeriodicSpectrum {
    /// `F(]-oo, E])` with multiplicity.
    pub fn count_up_to(&self, energy: f64) -> u64 {
        self.eigenvalues.iter().filter(|(e, _)| *e <= energy).map(|(_, m)| *m as u64).sum()
    }
}

pub fn periodic_spectrum(q: &Quasimomentum, n: u64, flavor: Flavor, tol: &Tolerances) -> Result<PeriodicSpectrum> {
    if n == 0 {
        return Err(Error::Domain("cell count must be at least 1".into()));
    }
    let table = q.table();
    let mut out: Vec<(f64, u8)> = Vec::new();
    let wants = |level: u64| Flavor::of_level(level) == flavor;
    let zones: &[Zone] = &table.zones;
    for (j, z) in zones.iter().enumerate() {
        match z.kind {
            ZoneKind::Forbidden => {
                let level = n * z.gap_index.unwrap_or(0);
                if !wants(level) {
                    continue;
                }
                if j == 0 {
                    if z.e_hi < table.e_max {
                        out.push((z.e_hi, 1));
                    }
                } else if z.is_degenerate() {
                    out.push((z.e_lo, 2));
                } else {
                    out.push((z.e_lo, 1));
                    if z.e_hi < table.e_max {
                        out.push((z.e_hi, 1));
                    }
                }
            }
            ZoneKind::Allowed => {
                let r_lo = n as f64 * q.half_turns(z.e_lo)?;
                let r_hi = n as f64 * q.half_turns(z.e_hi)?;
                let first = r_lo.round() as u64 + 1;
                // interior band tops are gap edges with integer levels; the
                // ceiling is not
                let last = if z.e_hi >= table.e_max { r_hi.floor() as u64 + 1 } else { r_hi.round() as u64 };
                for level in first..last {
                    if !wants(level) {
                        continue;
                    }
                    let target = level as f64;
                    let (a, b) = bisect_predicate(z.e_lo, z.e_hi, tol.edge_tol, |e| {
                        q.half_turns(e).map_or(true, |r| n as f64 * r >= target)
                    });
                    out.push((0.5 * (a + b), 2));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PeriodicSpectrum { flavor, n, eigenvalues: out })
}

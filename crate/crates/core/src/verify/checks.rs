use std::f64::consts::PI;

use serde::Serialize;

use super::{Campaign, Instance, Tally};
use crate::bands::{Quasimomentum, ZoneKind, ZoneTable};
use crate::boundary::{
    classify_periodic, periodic_count, periodic_spectrum, sl_count, sl_count_open, sl_floor, BoundaryCase,
    BoundaryConditions, Flavor, Multiplicity,
};
use crate::numeric::integer_part;
use crate::oracle::{cluster, periodic_eigenvalues, stable_count, EndCondition, Mesh, Pencil};
use crate::potential::{CellPotential, Profile};
use crate::scatter::{
    count_bound_states, find_resonances, n_cell, n_cell_scattering, resonance_vs_periodic, wavenumber,
    ResonanceOrigin, Scatterer,
};
use crate::{Result, Tolerances};

const LINE_MARGIN: f64 = 20.0;
const LINE_SPACING: f64 = 2e-3;
const BOX_SPACING: f64 = 2e-3;
const FD_POINTS_PER_CELL: usize = 400;
const FD_CLUSTER: f64 = 1e-6;
const FD_ENERGY_REL: f64 = 1e-2;
const GAP_SAMPLES: usize = 50;
const DECAY_SLACK: f64 = 1.1;
const RESONANCE_REFLECTION: f64 = 1e-6;

fn quarter_turns() -> [f64; 5] {
    [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI]
}

fn boundary_grid() -> Result<Vec<BoundaryConditions>> {
    let mut out = Vec::new();
    for a in quarter_turns() {
        for b in quarter_turns() {
            out.push(BoundaryConditions::normalized(a, b)?);
        }
    }
    Ok(out)
}

fn bc_label(bc: &BoundaryConditions) -> String {
    format!("alpha={:.4},beta={:.4}", bc.alpha(), bc.beta())
}

fn edge_margin(energy: f64, tol: &Tolerances) -> f64 {
    10.0 * tol.edge_tol * energy.abs().max(1.0)
}

/// Uniform grid on `[lo, hi]` with points pushed off zone edges.
fn energy_grid(lo: f64, hi: f64, points: usize, table: Option<&ZoneTable>, tol: &Tolerances) -> Vec<f64> {
    let points = points.max(2);
    let mut edges: Vec<f64> = Vec::new();
    if let Some(t) = table {
        for z in &t.zones {
            edges.extend([z.e_lo, z.e_hi].into_iter().filter(|e| e.is_finite()));
        }
    }
    (0..points)
        .map(|i| {
            let mut e = if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 };
            for &edge in &edges {
                let d = edge_margin(edge, tol);
                if (e - edge).abs() < d {
                    e = if e >= edge { edge + d } else { edge - d };
                }
            }
            e.min(hi)
        })
        .collect()
}

fn in_band(table: &ZoneTable, energy: f64) -> bool {
    table.locate(energy).is_ok_and(|z| z.kind == ZoneKind::Allowed)
}

fn oracle_stride(fraction: f64) -> Option<usize> {
    (fraction > 0.0).then(|| (1.0 / fraction).round().max(1.0) as usize)
}

fn line_pencil(pot: &impl Profile) -> Pencil {
    let (lo, hi) = pot.support();
    let mesh = Mesh::with_spacing(lo - LINE_MARGIN, hi + LINE_MARGIN, LINE_SPACING);
    Pencil::assemble(pot, mesh, EndCondition::Clamped, EndCondition::Clamped)
}

fn box_pencil(pot: &impl Profile, bc: &BoundaryConditions) -> Pencil {
    let (lo, hi) = pot.support();
    let mesh = Mesh::with_spacing(lo, hi, BOX_SPACING);
    Pencil::assemble(pot, mesh, EndCondition::from_angle(bc.alpha()), EndCondition::from_angle(bc.beta()))
}

/// Closed forbidden zones below `top`: `(position in table, gap index, lo, hi)`.
fn finite_gaps(table: &ZoneTable, top: f64) -> Vec<(usize, u64, f64, f64)> {
    table
        .zones
        .iter()
        .enumerate()
        .filter(|(_, z)| z.kind == ZoneKind::Forbidden && !z.is_degenerate() && z.e_hi < top)
        .map(|(j, z)| (j, z.gap_index.unwrap_or(0), z.e_lo, z.e_hi))
        .collect()
}

fn cell_floor(cell: &CellPotential) -> f64 {
    cell.min_segment_value().min(0.0) - 1.0
}

pub(super) fn theorem1(c: &Campaign, inst: &Instance, t: &mut Tally) -> Result<()> {
    let cell = inst.cell_potential()?;
    let q = Quasimomentum::new(cell.clone(), c.e_max)?;
    let grid = energy_grid(cell_floor(&cell), 0.0, c.grid, Some(q.table()), &c.tol);
    let stride = oracle_stride(c.oracle_fraction);
    for &n in &c.n_list {
        let pot = n_cell(&cell, n as u32)?;
        let count = |e: f64| count_bound_states(&pot, e).map(|f| (f as i64 + c.inject_count_offset) as f64);
        let pencil = stride.map(|_| line_pencil(&pot));
        for (i, &e) in grid.iter().enumerate() {
            let f = count(e)?;
            let r = n as f64 * q.half_turns(e)?;
            let b = integer_part(r) as f64;
            t.point("bound_state_bracket", n, "", Some(e), f, b - 1.0, b + 1.0);
            if in_band(q.table(), e) {
                t.point("bound_state_band", n, "", Some(e), f, b, b + 1.0);
            }
            if let (Some(s), Some(p)) = (stride, &pencil) {
                if i % s == 0 {
                    if let Some(o) = stable_count(|x| p.count_below(x), e) {
                        t.point("bound_state_oracle", n, "", Some(e), f, o as f64, o as f64);
                    }
                }
            }
        }
        for (j, l, lo, hi) in finite_gaps(q.table(), f64::INFINITY) {
            if lo >= 0.0 && j > 0 {
                continue;
            }
            let top = (hi + edge_margin(hi, &c.tol)).min(0.0);
            let below = if j == 0 { 0.0 } else { count(lo - edge_margin(lo, &c.tol))? };
            let cap = if l == 0 { 1.0 } else { 2.0 };
            t.point("bound_state_gap_mass", n, &format!("gap {l}"), Some(hi.min(0.0)), count(top)? - below, 0.0, cap);
        }
    }
    Ok(())
}

pub(super) fn theorem2(c: &Campaign, inst: &Instance, t: &mut Tally) -> Result<()> {
    let cell = inst.cell_potential()?;
    let q = Quasimomentum::new(cell.clone(), c.e_max)?;
    let top = 0.95 * c.e_max;
    let stride = oracle_stride(c.oracle_fraction);
    let bcs = boundary_grid()?;
    for &n in &c.n_list {
        let pot = n_cell(&cell, n as u32)?;
        for bc in &bcs {
            let label = bc_label(bc);
            let floor = sl_floor(&pot, bc).min(cell_floor(&cell));
            let grid = energy_grid(floor, top, c.grid, Some(q.table()), &c.tol);
            let pencil = stride.map(|_| box_pencil(&pot, bc));
            for (i, &e) in grid.iter().enumerate() {
                let f = sl_count_open(&pot, bc, e) as f64;
                let r = n as f64 * q.half_turns(e)?;
                let (lo, hi) = bc.quasimomentum_bounds(r);
                t.point("sl_bracket", n, &label, Some(e), f, lo as f64, hi as f64);
                if in_band(q.table(), e) {
                    let (lo, hi) = bc.band_bounds(r);
                    t.point("sl_band", n, &label, Some(e), f, lo as f64, hi as f64);
                }
                if let (Some(s), Some(p)) = (stride, &pencil) {
                    if i % s == 0 {
                        if let Some(o) = stable_count(|x| p.count_below(x), e) {
                            t.point("sl_oracle", n, &label, Some(e), f, o as f64, o as f64);
                        }
                    }
                }
            }
            for (j, l, lo, hi) in finite_gaps(q.table(), q.ceiling()) {
                let upper = sl_count(&pot, bc, hi + edge_margin(hi, &c.tol)) as f64;
                let lower = if j == 0 { 0.0 } else { sl_count_open(&pot, bc, lo - edge_margin(lo, &c.tol)) as f64 };
                let (exact, max) = bc.gap_mass_bound(l);
                let (want_lo, want_hi) = exact.map_or((0.0, max as f64), |k| (k as f64, k as f64));
                t.point("sl_gap_mass", n, &format!("{label} gap {l}"), Some(hi), upper - lower, want_lo, want_hi);
            }
        }
    }
    Ok(())
}

pub(super) fn periodic(c: &Campaign, inst: &Instance, t: &mut Tally) -> Result<()> {
    let cell = inst.cell_potential()?;
    let q = Quasimomentum::new(cell.clone(), c.e_max)?;
    let top = 0.95 * c.e_max;
    let table = q.table();
    let grid = energy_grid(cell_floor(&cell), top, c.grid, Some(table), &c.tol);
    for &n in &c.n_list {
        for flavor in [Flavor::Periodic, Flavor::Skew] {
            let label = flavor.as_str();
            for &e in &grid {
                let f = periodic_count(&q, n, flavor, e)? as f64;
                let b = integer_part(n as f64 * q.half_turns(e)?) as f64;
                t.point("periodic_bracket", n, label, Some(e), f, b, b + 1.0);
            }
            for z in table.open_gaps().filter(|z| z.e_hi < top) {
                let (lo, hi) = (z.e_lo, z.e_hi);
                let inner = |i: usize| lo + (hi - lo) * (i as f64 + 0.5) / GAP_SAMPLES as f64;
                let first = periodic_count(&q, n, flavor, lo + edge_margin(lo, &c.tol))?;
                let mut drift = 0.0_f64;
                for i in 0..=GAP_SAMPLES {
                    let e = if i == GAP_SAMPLES { hi - edge_margin(hi, &c.tol) } else { inner(i) };
                    drift = drift.max((periodic_count(&q, n, flavor, e)? as f64 - first as f64).abs());
                }
                let gl = format!("{label} gap {}", z.gap_index.unwrap_or(0));
                t.point("periodic_gap_mass", n, &gl, Some(lo), drift, 0.0, 0.0);
            }
        }
        if n >= 2 && !cell.is_zero() {
            resonance_checks(c, &cell, &q, n, top, t)?;
        }
        if inst.id < c.oracle_instances && Some(&n) == c.n_list.first() {
            periodic_oracle(c, &cell, &q, n, t)?;
        }
    }
    Ok(())
}

fn resonance_checks(c: &Campaign, cell: &CellPotential, q: &Quasimomentum, n: u64, top: f64, t: &mut Tally) -> Result<()> {
    let set = find_resonances(cell, n as u32, 0.0, top, q)?;
    let pot = n_cell(cell, n as u32)?;
    for res in set.resonances.iter().filter(|r| r.origin == ResonanceOrigin::BlochComb) {
        let double = matches!(
            resonance_vs_periodic(q, n as u32, res, &c.tol),
            Ok(cls) if cls.multiplicity == Multiplicity::Double
        );
        t.point("comb_double", n, "", Some(res.energy), f64::from(u8::from(double)), 1.0, 1.0);
    }
    let table = q.table();
    for z in table.open_gaps().filter(|z| z.e_lo > 0.0 && z.e_hi < top) {
        let mut hits = set.resonances.iter().filter(|r| r.energy > z.e_lo && r.energy < z.e_hi).count();
        for i in 0..GAP_SAMPLES {
            let e = z.e_lo + (z.e_hi - z.e_lo) * (i as f64 + 0.5) / GAP_SAMPLES as f64;
            let s = n_cell_scattering(Scatterer::NCell(&pot), wavenumber(e)?)?;
            let cls = classify_periodic(q, n, e, &c.tol)?;
            if s.r.norm() < RESONANCE_REFLECTION || cls.multiplicity != Multiplicity::None {
                hits += 1;
            }
        }
        let label = format!("gap {}", z.gap_index.unwrap_or(0));
        t.point("gap_resonance_free", n, &label, Some(z.e_lo), hits as f64, 0.0, 0.0);
    }
    for (b, z) in table
        .zones
        .iter()
        .filter(|z| z.kind == ZoneKind::Allowed)
        .enumerate()
        .filter(|(_, z)| z.e_lo > 0.0 && z.e_hi < top)
    {
        let combs = set
            .resonances
            .iter()
            .filter(|r| r.origin == ResonanceOrigin::BlochComb && r.energy > z.e_lo && r.energy < z.e_hi)
            .count();
        let want = (n - 1) as f64;
        t.point("comb_per_band", n, &format!("band {b}"), Some(z.e_lo), combs as f64, want, want);
    }
    t.advisory("resonance_audit", n, "", None, set.rejected.len() as f64, 0.0, 0.0);
    Ok(())
}

fn periodic_oracle(c: &Campaign, cell: &CellPotential, q: &Quasimomentum, n: u64, t: &mut Tally) -> Result<()> {
    let pot = n_cell(cell, n as u32)?;
    let cap = 0.5 * c.e_max;
    for flavor in [Flavor::Periodic, Flavor::Skew] {
        let ours: Vec<(f64, u8)> =
            periodic_spectrum(q, n, flavor, &c.tol)?.eigenvalues.into_iter().filter(|&(e, _)| e <= cap).collect();
        let values = periodic_eigenvalues(&pot, pot.length(), FD_POINTS_PER_CELL * n as usize, flavor == Flavor::Skew);
        let fd = cluster(&values, FD_CLUSTER);
        for (i, &(e, m)) in ours.iter().enumerate() {
            let label = format!("{} level {i}", flavor.as_str());
            let (fe, fm) = fd.get(i).copied().unwrap_or((f64::NAN, 0));
            t.point("periodic_oracle_multiplicity", n, &label, Some(e), f64::from(m), fm as f64, fm as f64);
            let rel = (e - fe).abs() / e.abs().max(1.0);
            let rel = if rel.is_nan() { f64::INFINITY } else { rel };
            t.point("periodic_oracle_energy", n, &label, Some(e), rel, 0.0, FD_ENERGY_REL);
        }
    }
    Ok(())
}

pub(super) fn density(c: &Campaign, inst: &Instance, t: &mut Tally) -> Result<()> {
    let cell = inst.cell_potential()?;
    let q = Quasimomentum::new(cell.clone(), c.e_max)?;
    let top = 0.95 * c.e_max;
    let table = q.table();
    let bcs = boundary_grid()?;
    let below = energy_grid(cell_floor(&cell), 0.0, c.grid, Some(table), &c.tol);
    for &n in &c.n_list {
        let pot = n_cell(&cell, n as u32)?;
        let nf = n as f64;
        // F - c_lo <= R <= F + c_hi, as an integer window on F
        let window = |r: f64, c_lo: f64, c_hi: f64| ((r - c_hi).ceil(), (r + c_lo).floor());
        for &e in &below {
            let f = count_bound_states(&pot, e)? as f64;
            let (lo, hi) = window(nf * q.half_turns(e)?, 1.0, 2.0);
            t.point("bound_state_sandwich", n, "", Some(e), f, lo, hi);
        }
        for bc in &bcs {
            let label = bc_label(bc);
            let floor = sl_floor(&pot, bc).min(cell_floor(&cell));
            for e in energy_grid(floor, top, c.grid, Some(table), &c.tol) {
                let f = sl_count(&pot, bc, e) as f64;
                let r = nf * q.half_turns(e)?;
                if bc.case() == BoundaryCase::BetaBelowAlpha {
                    let (lo, hi) = window(r, 2.0, 1.0);
                    t.point("sl_sandwich", n, &label, Some(e), f, lo, hi);
                    let (lo, hi) = window(r, 0.0, 3.0);
                    t.advisory("sl_sandwich_literal", n, &label, Some(e), f, lo, hi);
                } else {
                    let (lo, hi) = window(r, 1.0, 2.0);
                    t.point("sl_sandwich", n, &label, Some(e), f, lo, hi);
                }
            }
        }
        for flavor in [Flavor::Periodic, Flavor::Skew] {
            for e in energy_grid(cell_floor(&cell), top, c.grid, Some(table), &c.tol) {
                let f = periodic_count(&q, n, flavor, e)? as f64;
                let (lo, hi) = window(nf * q.half_turns(e)?, 1.0, 1.0);
                t.point("periodic_sandwich", n, flavor.as_str(), Some(e), f, lo, hi);
            }
        }
    }
    let ns: Vec<u64> = c.n_list.iter().copied().filter(|&n| n >= 2).collect();
    if !cell.is_zero() && ns.len() >= 2 {
        let errs = resonance_density_errors(&cell, &q, &ns, top, c.grid)?;
        for e in &errs {
            t.point("resonance_density_bound", e.n, "", None, e.scaled * cell.a(), 0.0, e.bound);
        }
        for w in errs.windows(2) {
            let label = format!("{}->{}", w[0].n, w[1].n);
            t.advisory("resonance_density_decay", w[1].n, &label, None, w[1].scaled, 0.0, DECAY_SLACK * w[0].scaled);
        }
    }
    Ok(())
}

/// Sup-grid error of the finite-`n` resonance density against the
/// quasimomentum increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityError {
    pub n: u64,
    pub error: f64,
    /// `n * error`.
    pub scaled: f64,
    /// Bands met in the window plus single-cell resonances plus one: a
    /// ceiling on `n a error` that does not depend on `n`.
    pub bound: f64,
}

/// For each `n`, `sup_E |Phi(]0, E]) / (n a) - (p(E) - p(0)) / pi|` over
/// `points` uniform energies in `]0, e_top]`.
pub fn resonance_density_errors(
    cell: &CellPotential,
    q: &Quasimomentum,
    ns: &[u64],
    e_top: f64,
    points: usize,
) -> Result<Vec<DensityError>> {
    let a = cell.a();
    let h0 = q.half_turns(0.0)?;
    let grid: Vec<(f64, f64)> = (1..=points)
        .map(|i| {
            let e = e_top * i as f64 / points as f64;
            q.half_turns(e).map(|h| (e, (h - h0) / a))
        })
        .collect::<Result<_>>()?;
    ns.iter()
        .map(|&n| {
            let set = find_resonances(cell, n as u32, 0.0, e_top, q)?;
            let error = grid
                .iter()
                .map(|&(e, dp)| (set.count_up_to(e) as f64 / (n as f64 * a) - dp).abs())
                .fold(0.0, f64::max);
            let bands = q
                .table()
                .zones
                .iter()
                .filter(|z| z.kind == ZoneKind::Allowed && z.e_hi > 0.0 && z.e_lo < e_top)
                .count();
            let single = set.resonances.iter().filter(|r| r.origin == ResonanceOrigin::SingleCell).count();
            Ok(DensityError { n, error, scaled: n as f64 * error, bound: (bands + single + 1) as f64 })
        })
        .collect()
}

pub(super) fn theorem3(c: &Campaign, inst: &Instance, t: &mut Tally) -> Result<()> {
    let hp = inst.hetero_potential()?;
    let m = hp.len() as u64;
    let parts: Vec<_> = (0..hp.len()).map(|j| hp.cell_potential(j)).collect();
    let grid = energy_grid(hp.min_value() - 1.0, 0.0, c.grid, None, &c.tol);
    let stride = oracle_stride(c.oracle_fraction).filter(|_| inst.id < c.oracle_instances);
    let pencil = stride.map(|_| line_pencil(&hp));
    let slack = (m - 1) as f64;
    let mut widest = 0.0_f64;
    for (i, &e) in grid.iter().enumerate() {
        let f = (count_bound_states(&hp, e)? as i64 + c.inject_count_offset) as f64;
        let mut sum = 0.0;
        for p in &parts {
            sum += count_bound_states(p, e)? as f64;
        }
        t.point("hetero_sum_bound", m, "", Some(e), f - sum, -slack, slack);
        widest = widest.max((f - sum).abs());
        if e == 0.0 {
            t.point("hetero_zero_energy", m, "", Some(e), f, sum - slack, sum);
        }
        if let (Some(s), Some(p)) = (stride, &pencil) {
            if i % s == 0 {
                if let Some(o) = stable_count(|x| p.count_below(x), e) {
                    t.point("hetero_oracle", m, "", Some(e), f, o as f64, o as f64);
                }
            }
        }
    }
    t.advisory("hetero_sharpness", m, "", None, widest, slack, slack);
    Ok(())
}

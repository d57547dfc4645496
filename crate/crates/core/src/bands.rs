//! Monodromy, discriminant, Bloch zones and the global quasimomentum of the
//! periodic extension of a cell.
//!
//! The quasimomentum is computed pointwise, not by integrating along the
//! energy axis. Writing `r(E) = a p(E) / pi`, the integer part of `r` is
//! pinned down by the number `c` of Dirichlet eigenvalues of one cell below
//! `E`, because exactly one of them lies in the closure of every gap above
//! the bottom of the spectrum:
//!
//! * inside a gap (`|Tr M| > 2`) the plateau index `l` is `c` or `c + 1`,
//!   whichever has the parity of the sign of `Tr M` (positive for even);
//! * inside band `b` (counted from 1), `c = b - 1` and
//!   `r = b - 1 + arccos(Tr M / 2) / pi` for odd `b`, mirrored for even.
//!
//! Gap `m` is the level set `r = m`; its edges are found by bisection on the
//! integer predicates `r >= m` and `r > m`, which never touch `arccos`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, crossings_between, Tolerances};
use crate::potential::CellPotential;
use crate::propagate::{cell_transfer, sweep_angle, TransferMatrix};

/// Transfer matrix over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    pub matrix: TransferMatrix,
    pub trace: f64,
    pub energy: f64,
}

impl Monodromy {
    pub fn new(cell: &CellPotential, energy: f64) -> Self {
        let matrix = cell_transfer(cell, energy);
        Self { matrix, trace: matrix.trace(), energy }
    }

    /// Floquet multipliers when real (`|Tr M| >= 2`).
    pub fn real_multipliers(&self) -> Option<(f64, f64)> {
        let d = self.trace;
        let disc = d * d - 4.0;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        let big = 0.5 * (d + d.signum() * s);
        Some((big, 1.0 / big))
    }
}

/// `Tr M(E)` for one cell.
pub fn discriminant(cell: &CellPotential, energy: f64) -> f64 {
    cell_transfer(cell, energy).trace()
}

/// Number of Dirichlet eigenvalues of one cell strictly below `energy`.
pub fn dirichlet_count(cell: &CellPotential, energy: f64) -> u64 {
    let sweep = sweep_angle(cell, energy, 0.0, 1.0, 0.0, cell.a());
    crossings_between(sweep.theta, FRAC_PI_2)
}

/// Where an energy sits relative to the spectrum of the periodic operator.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Level {
    /// On the plateau `r = l`.
    Gap(u64),
    /// Inside band `b >= 1`; carries `r` in `]b - 1, b[` up to rounding.
    Band(u64, f64),
}

impl Level {
    fn at(cell: &CellPotential, energy: f64) -> Level {
        let d = discriminant(cell, energy);
        let c = dirichlet_count(cell, energy);
        if d.abs() > 2.0 {
            let want_even = d > 0.0;
            let l = if c.is_multiple_of(2) == want_even { c } else { c + 1 };
            Level::Gap(l)
        } else {
            let b = c + 1;
            let turn = (0.5 * d).clamp(-1.0, 1.0).acos() / PI;
            let frac = if b % 2 == 1 { turn } else { 1.0 - turn };
            Level::Band(b, (b - 1) as f64 + frac)
        }
    }

    fn r(self) -> f64 {
        match self {
            Level::Gap(l) => l as f64,
            Level::Band(_, r) => r,
        }
    }

    /// `r >= m`, decided on integers.
    fn reached(self, m: u64) -> bool {
        match self {
            Level::Gap(l) => l >= m,
            Level::Band(b, _) => b > m,
        }
    }

    /// `r > m`, decided on integers.
    fn passed(self, m: u64) -> bool {
        match self {
            Level::Gap(l) => l > m,
            Level::Band(b, _) => b > m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Allowed,
    Forbidden,
}

impl ZoneKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZoneKind::Allowed => "allowed",
            ZoneKind::Forbidden => "forbidden",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Zone {
    pub kind: ZoneKind,
    pub e_lo: f64,
    pub e_hi: f64,
    /// Plateau value of `a p / pi` on a forbidden zone.
    pub gap_index: Option<u64>,
}

impl Zone {
    pub fn width(&self) -> f64 {
        self.e_hi - self.e_lo
    }

    /// A closed gap: a forbidden zone that has collapsed to a point.
    pub fn is_degenerate(&self) -> bool {
        self.kind == ZoneKind::Forbidden && self.e_hi == self.e_lo
    }
}

/// Alternating zones tiling `]-oo, e_max]`, starting with the forbidden
/// zone below the spectrum.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ZoneTable {
    pub zones: Vec<Zone>,
    pub e_max: f64,
}

impl ZoneTable {
    /// Bottom of the spectrum, if it lies below the ceiling.
    pub fn spectrum_bottom(&self) -> Option<f64> {
        self.zones.get(1).map(|z| z.e_lo)
    }

    /// Zones with closed gaps merged into the neighbouring bands.
    pub fn open_zones(&self) -> Vec<Zone> {
        let mut out: Vec<Zone> = Vec::new();
        for z in &self.zones {
            if z.is_degenerate() {
                continue;
            }
            match out.last_mut() {
                Some(prev) if prev.kind == z.kind => prev.e_hi = z.e_hi,
                _ => out.push(*z),
            }
        }
        out
    }

    /// Forbidden zones of positive width other than the one below the
    /// spectrum.
    pub fn open_gaps(&self) -> impl Iterator<Item = &Zone> {
        self.zones
            .iter()
            .skip(1)
            .filter(|z| z.kind == ZoneKind::Forbidden && !z.is_degenerate())
    }

    /// Zone containing `energy`. Edges belong to the forbidden zone, so
    /// closed gaps are found at their single point.
    pub fn locate(&self, energy: f64) -> Result<&Zone> {
        if energy > self.e_max {
            return Err(Error::OutOfRange { energy, ceiling: self.e_max });
        }
        let forbidden = self
            .zones
            .iter()
            .find(|z| z.kind == ZoneKind::Forbidden && energy >= z.e_lo && energy <= z.e_hi);
        if let Some(z) = forbidden {
            return Ok(z);
        }
        if energy < self.zones[0].e_hi {
            return Ok(&self.zones[0]);
        }
        Ok(self
            .zones
            .iter()
            .find(|z| energy >= z.e_lo && energy <= z.e_hi)
            .unwrap_or(&self.zones[self.zones.len() - 1]))
    }

    /// Largest `|Tr M| - 2` magnitude over all finite edges.
    pub fn edge_residual(&self, cell: &CellPotential) -> f64 {
        self.zones
            .iter()
            .flat_map(|z| [z.e_lo, z.e_hi])
            .filter(|e| e.is_finite() && *e < self.e_max)
            .map(|e| (discriminant(cell, e).abs() - 2.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_invariants(&self) -> Result<()> {
        let z0 = self.zones.first().ok_or_else(|| Error::Domain("empty zone table".into()))?;
        if z0.kind != ZoneKind::Forbidden || z0.e_lo != f64::NEG_INFINITY || z0.gap_index != Some(0) {
            return Err(Error::Domain("zone table must start with the forbidden zone below the spectrum".into()));
        }
        let mut last_gap = 0;
        for (j, w) in self.zones.windows(2).enumerate() {
            if w[0].kind == w[1].kind || w[0].e_hi != w[1].e_lo || w[1].e_hi < w[1].e_lo {
                return Err(Error::Domain(format!("zones {j} and {} do not alternate or abut", j + 1)));
            }
            if let Some(l) = w[1].gap_index {
                if l <= last_gap {
                    return Err(Error::Domain(format!("gap indices not increasing at zone {}", j + 1)));
                }
                last_gap = l;
            }
        }
        if self.zones[self.zones.len() - 1].e_hi != self.e_max {
            return Err(Error::Domain("zones do not reach the ceiling".into()));
        }
        Ok(())
    }
}

/// Options for [`scan_zones`].
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub initial_grid: usize,
    pub max_doublings: u32,
    /// Gaps narrower than this, relative to `max(1, |E|)`, are reported as
    /// closed: below it a tangency of `|Tr M|` at 2 cannot be told apart
    /// from a genuine gap in double precision.
    pub closed_gap_rel: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { initial_grid: 2000, max_doublings: 6, closed_gap_rel: 1e-6 }
    }
}

/// Lowest energy at which the periodic operator is certainly gapped.
fn floor_energy(cell: &CellPotential) -> f64 {
    cell.min_segment_value() - 1.0
}

fn grid_levels(cell: &CellPotential, lo: f64, hi: f64, points: usize) -> Vec<(f64, Level)> {
    (0..=points)
        .map(|i| {
            let e = if i == points { hi } else { lo + (hi - lo) * i as f64 / points as f64 };
            (e, Level::at(cell, e))
        })
        .collect()
}

/// First energy where a monotone predicate on the level turns true,
/// bracketed by the grid then bisected.
fn edge_from_grid<F>(cell: &CellPotential, grid: &[(f64, Level)], tol: f64, pred: F) -> Option<f64>
where
    F: Fn(Level) -> bool,
{
    let idx = grid.iter().position(|(_, l)| pred(*l))?;
    if idx == 0 {
        return Some(grid[0].0);
    }
    let (lo, hi) = bisect_predicate(grid[idx - 1].0, grid[idx].0, tol, |e| pred(Level::at(cell, e)));
    Some(0.5 * (lo + hi))
}

fn build_table(cell: &CellPotential, e_max: f64, points: usize, tol: &Tolerances, opts: &ScanOptions) -> ZoneTable {
    let lo = floor_energy(cell);
    let mut zones = Vec::new();
    let grid = grid_levels(cell, lo, e_max, points);
    let top = grid[grid.len() - 1].1;
    let edge_tol = tol.edge_tol;

    let bottom = edge_from_grid(cell, &grid, edge_tol, |l| l.passed(0));
    let Some(bottom) = bottom else {
        zones.push(Zone { kind: ZoneKind::Forbidden, e_lo: f64::NEG_INFINITY, e_hi: e_max, gap_index: Some(0) });
        return ZoneTable { zones, e_max };
    };
    zones.push(Zone { kind: ZoneKind::Forbidden, e_lo: f64::NEG_INFINITY, e_hi: bottom, gap_index: Some(0) });
    let mut cursor = bottom;
    let highest = top.r().floor() as u64;
    for m in 1..=highest {
        let Some(mut g_lo) = edge_from_grid(cell, &grid, edge_tol, |l| l.reached(m)) else { break };
        let mut g_hi = edge_from_grid(cell, &grid, edge_tol, |l| l.passed(m)).unwrap_or(e_max);
        g_lo = g_lo.max(cursor);
        g_hi = g_hi.max(g_lo);
        if g_hi < e_max && g_hi - g_lo < opts.closed_gap_rel * g_lo.abs().max(1.0) {
            let mid = 0.5 * (g_lo + g_hi);
            g_lo = mid;
            g_hi = mid;
        }
        zones.push(Zone { kind: ZoneKind::Allowed, e_lo: cursor, e_hi: g_lo, gap_index: None });
        zones.push(Zone { kind: ZoneKind::Forbidden, e_lo: g_lo, e_hi: g_hi, gap_index: Some(m) });
        cursor = g_hi;
        if g_hi >= e_max {
            break;
        }
    }
    if cursor < e_max {
        zones.push(Zone { kind: ZoneKind::Allowed, e_lo: cursor, e_hi: e_max, gap_index: None });
    } else if let Some(last) = zones.last_mut() {
        last.e_hi = e_max;
    }
    ZoneTable { zones, e_max }
}

fn same_structure(a: &ZoneTable, b: &ZoneTable, tol: f64) -> Vec<(f64, f64)> {
    let (oa, ob) = (a.open_zones(), b.open_zones());
    if oa.len() != ob.len() {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for z in oa.iter().chain(ob.iter()).filter(|z| z.kind == ZoneKind::Forbidden && z.e_lo.is_finite()) {
            let dup = |x: &Zone| (x.e_lo - z.e_lo).abs() < tol && (x.e_hi - z.e_hi).abs() < tol;
            if !(oa.iter().any(dup) && ob.iter().any(dup)) {
                out.push((z.e_lo, z.e_hi));
            }
        }
        if out.is_empty() {
            out.push((a.zones[0].e_hi, a.e_max));
        }
        return out;
    }
    Vec::new()
}

/// Scan the Bloch zones of the periodic extension of `cell` up to `e_max`.
///
/// A grid of `initial_grid` points brackets every zone edge, each edge is
/// bisected to `edge_tol`, and the grid is doubled until two successive
/// tables agree on their zone count.
pub fn scan_zones(cell: &CellPotential, e_max: f64, initial_grid: usize) -> Result<ZoneTable> {
    let opts = ScanOptions { initial_grid, ..ScanOptions::default() };
    scan_zones_with(cell, e_max, &Tolerances::default(), &opts)
}

pub fn scan_zones_with(cell: &CellPotential, e_max: f64, tol: &Tolerances, opts: &ScanOptions) -> Result<ZoneTable> {
    if !e_max.is_finite() || e_max <= cell.min_segment_value() {
        return Err(Error::Domain(format!(
            "scan ceiling {e_max} must exceed the minimum cell value {}",
            cell.min_segment_value()
        )));
    }
    if opts.initial_grid < 100 {
        return Err(Error::Domain(format!("initial grid of {} points is below 100", opts.initial_grid)));
    }
    let mut points = opts.initial_grid;
    let mut prev = build_table(cell, e_max, points, tol, opts);
    let mut suspects = Vec::new();
    for _ in 0..opts.max_doublings {
        points *= 2;
        let next = build_table(cell, e_max, points, tol, opts);
        suspects = same_structure(&prev, &next, 1e3 * tol.edge_tol);
        if suspects.is_empty() {
            next.check_invariants()?;
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ScanDiverged { suspects })
}

/// Global quasimomentum of the periodic extension of a cell, backed by a
/// zone table.
#[derive(Debug, Clone)]
pub struct Quasimomentum {
    cell: CellPotential,
    table: ZoneTable,
}

impl Quasimomentum {
    pub fn new(cell: CellPotential, e_max: f64) -> Result<Self> {
        let table = scan_zones(&cell, e_max, ScanOptions::default().initial_grid)?;
        Ok(Self { cell, table })
    }

    pub fn from_table(cell: CellPotential, table: ZoneTable) -> Self {
        Self { cell, table }
    }

    pub fn cell(&self) -> &CellPotential {
        &self.cell
    }

    pub fn table(&self) -> &ZoneTable {
        &self.table
    }

    pub fn ceiling(&self) -> f64 {
        self.table.e_max
    }

    /// `a p(E) / pi`: the number of half-turns of the Bloch phase.
    pub fn half_turns(&self, energy: f64) -> Result<f64> {
        let zone = self.table.locate(energy)?;
        if let Some(l) = zone.gap_index {
            return Ok(l as f64);
        }
        // band b sits right above gap b - 1
        let below = self
            .table
            .zones
            .iter()
            .rev()
            .find(|z| z.kind == ZoneKind::Forbidden && z.e_hi <= energy)
            .and_then(|z| z.gap_index)
            .unwrap_or(0);
        let b = below + 1;
        let d = discriminant(&self.cell, energy);
        let turn = (0.5 * d).clamp(-1.0, 1.0).acos() / PI;
        let frac = if b % 2 == 1 { turn } else { 1.0 - turn };
        Ok(below as f64 + frac)
    }
}

/// `p(E)` in radians per unit length.
pub fn quasimomentum_at(q: &Quasimomentum, energy: f64) -> Result<f64> {
    Ok(q.half_turns(energy)? * PI / q.cell.a())
}

/// Bloch phase `a p(E)`, defined on the closure of the allowed zones.
pub fn bloch_phase(q: &Quasimomentum, energy: f64) -> Result<f64> {
    let zone = q.table.locate(energy)?;
    if zone.kind == ZoneKind::Forbidden && energy > zone.e_lo && energy < zone.e_hi {
        return Err(Error::Domain(format!(
            "E = {energy} lies inside the open gap [{}, {}]",
            zone.e_lo, zone.e_hi
        )));
    }
    Ok(q.half_turns(energy)? * PI)
}

/// `a p(E) / pi` straight from the monodromy, without a zone table.
pub fn half_turns_direct(cell: &CellPotential, energy: f64) -> f64 {
    Level::at(cell, energy).r()
}

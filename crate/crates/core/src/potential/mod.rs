//! Piecewise-constant cell potentials and their n-cell, periodic and
//! heterogeneous assemblies.
//!
//! A [`CellPotential`] is supported on `[0, a]` and tiled by constant
//! segments. Evaluation uses half-open segments `[x_lo, x_hi)`, so a cell
//! evaluates to zero at `x = a` and the sum of adjacent cells is exact at
//! shared endpoints.

mod document;

pub use document::{load_potential, load_potential_file, save_potential, Potential};

use crate::error::{Error, Result};

/// One constant piece of a cell.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    pub v: f64,
}

impl Segment {
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// A constant span of potential in absolute coordinates, as consumed by
/// the propagators. `width` is carried separately so that translated
/// copies keep the exact widths of the source segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub x_lo: f64,
    pub width: f64,
    pub v: f64,
}

/// Anything that can be laid out as a contiguous run of constant pieces.
///
/// `pieces()` must cover `support()` from left to right without gaps;
/// outside the support the potential vanishes.
pub trait Profile {
    fn support(&self) -> (f64, f64);
    fn pieces(&self) -> Vec<Piece>;
    fn evaluate(&self, x: f64) -> f64;

    /// Smallest value taken by the potential, counting the zero exterior.
    fn min_value(&self) -> f64 {
        self.pieces().iter().fold(0.0_f64, |m, p| m.min(p.v))
    }
}

/// Single cell `q1` on `[0, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPotential {
    a: f64,
    segments: Vec<Segment>,
}

/// Build and validate a cell from unordered segments `(x_lo, x_hi, v)`.
pub fn build_cell(a: f64, segments: &[(f64, f64, f64)]) -> Result<CellPotential> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Validation(format!("a must be positive, got {a}")));
    }
    if segments.is_empty() {
        return Err(Error::Validation("cell has no segments".into()));
    }
    let mut segs: Vec<Segment> = Vec::with_capacity(segments.len());
    for (i, &(x_lo, x_hi, v)) in segments.iter().enumerate() {
        if !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Validation(format!(
                "segment {i} [{x_lo}, {x_hi}] has a non-finite endpoint"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Validation(format!(
                "segment {i} [{x_lo}, {x_hi}] has non-finite value {v}"
            )));
        }
        if x_hi < x_lo {
            return Err(Error::Validation(format!(
                "segment {i} [{x_lo}, {x_hi}] has negative width"
            )));
        }
        segs.push(Segment { x_lo, x_hi, v });
    }
    segs.sort_by(|s, t| s.x_lo.partial_cmp(&t.x_lo).unwrap().then(s.x_hi.partial_cmp(&t.x_hi).unwrap()));

    if segs[0].x_lo != 0.0 {
        return Err(Error::Validation(format!(
            "gap at [0, {}]: first segment must start at 0",
            segs[0].x_lo
        )));
    }
    for w in segs.windows(2) {
        let (s, t) = (w[0], w[1]);
        if s.x_hi > t.x_lo {
            return Err(Error::Validation(format!(
                "overlap at [{}, {}] between segments [{}, {}] and [{}, {}]",
                t.x_lo,
                s.x_hi.min(t.x_hi),
                s.x_lo,
                s.x_hi,
                t.x_lo,
                t.x_hi
            )));
        }
        if s.x_hi < t.x_lo {
            return Err(Error::Validation(format!("gap at [{}, {}]", s.x_hi, t.x_lo)));
        }
    }
    // Tolerate the rounding of a cell length computed as a difference.
    let n = segs.len();
    let last = segs[n - 1];
    if (last.x_hi - a).abs() <= 8.0 * f64::EPSILON * a {
        segs[n - 1].x_hi = a;
    } else {
        return Err(Error::Validation(format!(
            "segments end at {} but the cell length is {a}",
            last.x_hi
        )));
    }
    segs.retain(|s| s.x_hi > s.x_lo);
    Ok(CellPotential { a, segments: segs })
}

impl CellPotential {
    /// Free cell of length `a`.
    pub fn zero(a: f64) -> Result<Self> {
        build_cell(a, &[(0.0, a, 0.0)])
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// True when the cell vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.v == 0.0)
    }

    pub fn min_segment_value(&self) -> f64 {
        self.segments.iter().map(|s| s.v).fold(f64::INFINITY, f64::min)
    }

    pub fn max_segment_value(&self) -> f64 {
        self.segments.iter().map(|s| s.v).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at `x`; zero outside `[0, a)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        if !(0.0..self.a).contains(&x) {
            return 0.0;
        }
        let idx = self.segments.partition_point(|s| s.x_hi <= x);
        self.segments.get(idx).map_or(0.0, |s| s.v)
    }

    /// Mirror image `x -> a - x`.
    pub fn reversed(&self) -> CellPotential {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                x_lo: self.a - s.x_hi,
                x_hi: self.a - s.x_lo,
                v: s.v,
            })
            .collect();
        CellPotential { a: self.a, segments }
    }

    /// Same cell with its contents translated cyclically by `shift`
    /// (`0 < shift < a`). The periodic extension is unchanged up to a
    /// translation, so band data must be invariant.
    pub fn cyclic_shift(&self, shift: f64) -> Result<CellPotential> {
        if !(shift > 0.0 && shift < self.a) {
            return Err(Error::Domain(format!("shift {shift} must lie in (0, a)")));
        }
        let mut out = Vec::new();
        for s in &self.segments {
            let (lo, hi) = (s.x_lo + shift, s.x_hi + shift);
            if hi <= self.a {
                out.push((lo, hi, s.v));
            } else if lo >= self.a {
                out.push((lo - self.a, hi - self.a, s.v));
            } else {
                out.push((lo, self.a, s.v));
                out.push((0.0, hi - self.a, s.v));
            }
        }
        // Rounding can leave endpoints that no longer abut; snap them.
        out.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        out[0].0 = 0.0;
        for i in 1..out.len() {
            out[i].0 = out[i - 1].1;
        }
        let n = out.len();
        out[n - 1].1 = self.a;
        build_cell(self.a, &out)
    }
}

impl Profile for CellPotential {
    fn support(&self) -> (f64, f64) {
        (0.0, self.a)
    }

    fn pieces(&self) -> Vec<Piece> {
        self.segments
            .iter()
            .map(|s| Piece { x_lo: s.x_lo, width: s.width(), v: s.v })
            .collect()
    }

    fn evaluate(&self, x: f64) -> f64 {
        CellPotential::evaluate(self, x)
    }
}

/// Piecewise-constant approximation of a smooth cell profile by `m` equal
/// segments holding the midpoint samples of `f`.
///
/// The quality of the approximation is the caller's responsibility.
pub fn refine<F: Fn(f64) -> f64>(a: f64, m: usize, f: F) -> Result<CellPotential> {
    if m == 0 {
        return Err(Error::Domain("refine needs at least one segment".into()));
    }
    let h = a / m as f64;
    let segs: Vec<(f64, f64, f64)> = (0..m)
        .map(|i| {
            let lo = i as f64 * h;
            let hi = if i + 1 == m { a } else { (i + 1) as f64 * h };
            (lo, hi, f(0.5 * (lo + hi)))
        })
        .collect();
    build_cell(a, &segs)
}

/// `q_n(x) = sum_{j<n} q1(x - j a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NCellPotential {
    cell: CellPotential,
    n: usize,
}

pub fn assemble_n_cell(cell: CellPotential, n: i64) -> Result<NCellPotential> {
    if n < 1 {
        return Err(Error::Domain(format!("cell count must be at least 1, got {n}")));
    }
    Ok(NCellPotential { cell, n: n as usize })
}

/// Split `x` into a cell index and a local coordinate in `[0, a)` by
/// subtracting an integer multiple of `a`.
fn reduce(x: f64, a: f64) -> (i64, f64) {
    let mut j = (x / a).floor() as i64;
    let mut local = x - j as f64 * a;
    if local < 0.0 {
        j -= 1;
        local = x - j as f64 * a;
    } else if local >= a {
        j += 1;
        local = x - j as f64 * a;
    }
    (j, local)
}

impl NCellPotential {
    pub fn cell(&self) -> &CellPotential {
        &self.cell
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.cell.a
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let (j, local) = reduce(x, self.cell.a);
        if j < 0 || j >= self.n as i64 {
            return 0.0;
        }
        self.cell.evaluate(local)
    }
}

impl Profile for NCellPotential {
    fn support(&self) -> (f64, f64) {
        (0.0, self.length())
    }

    fn pieces(&self) -> Vec<Piece> {
        let a = self.cell.a;
        let mut out = Vec::with_capacity(self.n * self.cell.segments.len());
        for j in 0..self.n {
            let origin = j as f64 * a;
            out.extend(self.cell.segments.iter().map(|s| Piece {
                x_lo: origin + s.x_lo,
                width: s.width(),
                v: s.v,
            }));
        }
        out
    }

    fn evaluate(&self, x: f64) -> f64 {
        NCellPotential::evaluate(self, x)
    }
}

/// Periodic potential `q(x) = q1(x mod a)` on the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicExtension {
    cell: CellPotential,
}

impl PeriodicExtension {
    pub fn new(cell: CellPotential) -> Self {
        Self { cell }
    }

    pub fn cell(&self) -> &CellPotential {
        &self.cell
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let (_, local) = reduce(x, self.cell.a);
        self.cell.evaluate(local)
    }
}

/// One cell of a heterogeneous potential: `profile` is given in local
/// coordinates on `[0, x_hi - x_lo]` and placed at `x_lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroCell {
    pub x_lo: f64,
    pub x_hi: f64,
    pub profile: CellPotential,
}

impl HeteroCell {
    pub fn evaluate(&self, x: f64) -> f64 {
        if x < self.x_lo || x >= self.x_hi {
            return 0.0;
        }
        self.profile.evaluate(x - self.x_lo)
    }
}

/// Potential built from consecutive, non-overlapping cells that need not
/// be identical.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroPotential {
    cells: Vec<HeteroCell>,
}

/// Validate and assemble cells `(x_lo, x_hi, local segments)`.
pub fn assemble_hetero(cells: &[(f64, f64, Vec<(f64, f64, f64)>)]) -> Result<HeteroPotential> {
    if cells.is_empty() {
        return Err(Error::Validation("heterogeneous potential has no cells".into()));
    }
    let mut out = Vec::with_capacity(cells.len());
    for (i, (x_lo, x_hi, segs)) in cells.iter().enumerate() {
        if !x_lo.is_finite() || !x_hi.is_finite() || x_hi <= x_lo {
            return Err(Error::Validation(format!(
                "cell {i} has an invalid support [{x_lo}, {x_hi}]"
            )));
        }
        let profile = build_cell(x_hi - x_lo, segs)
            .map_err(|e| Error::Validation(format!("cell {i}: {e}")))?;
        out.push(HeteroCell { x_lo: *x_lo, x_hi: *x_hi, profile });
    }
    for (i, w) in out.windows(2).enumerate() {
        if w[1].x_lo < w[0].x_hi {
            return Err(Error::Validation(format!(
                "overlap at [{}, {}] between cells {} and {}",
                w[1].x_lo,
                w[0].x_hi.min(w[1].x_hi),
                i,
                i + 1
            )));
        }
    }
    Ok(HeteroPotential { cells: out })
}

impl HeteroPotential {
    pub fn cells(&self) -> &[HeteroCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cut points between consecutive supports.
    pub fn cut_points(&self) -> Vec<f64> {
        self.cells.windows(2).map(|w| 0.5 * (w[0].x_hi + w[1].x_lo)).collect()
    }

    /// The `j`-th cell alone, as a potential on the line.
    pub fn cell_potential(&self, j: usize) -> HeteroPotential {
        HeteroPotential { cells: vec![self.cells[j].clone()] }
    }

    /// Mirror image `x -> lo + hi - x` about the centre of the support.
    pub fn mirrored(&self) -> HeteroPotential {
        let (lo, hi) = self.support();
        let cells = self
            .cells
            .iter()
            .rev()
            .map(|c| HeteroCell { x_lo: lo + hi - c.x_hi, x_hi: lo + hi - c.x_lo, profile: c.profile.reversed() })
            .collect();
        HeteroPotential { cells }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let idx = self.cells.partition_point(|c| c.x_hi <= x);
        self.cells.get(idx).map_or(0.0, |c| c.evaluate(x))
    }
}

impl Profile for HeteroPotential {
    fn support(&self) -> (f64, f64) {
        (self.cells[0].x_lo, self.cells[self.cells.len() - 1].x_hi)
    }

    fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                let prev = self.cells[i - 1].x_hi;
                if c.x_lo > prev {
                    out.push(Piece { x_lo: prev, width: c.x_lo - prev, v: 0.0 });
                }
            }
            out.extend(c.profile.segments.iter().map(|s| Piece {
                x_lo: c.x_lo + s.x_lo,
                width: s.width(),
                v: s.v,
            }));
        }
        out
    }

    fn evaluate(&self, x: f64) -> f64 {
        HeteroPotential::evaluate(self, x)
    }
}

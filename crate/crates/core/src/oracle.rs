//! Reference solvers that share no code with the shooting and
//! transfer-matrix machinery: Galerkin eigenvalue counts, dense periodic
//! diagonalization and a Runge–Kutta integrator.
//!
//! They are slow and only approximately convergent, so callers compare
//! counts away from eigenvalues (see [`stable_count`]).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::potential::{Piece, Profile};

/// Mesh used by the Galerkin counts: linear elements on `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy)]
pub struct Mesh {
    pub x_lo: f64,
    pub x_hi: f64,
    pub elements: usize,
}

impl Mesh {
    pub fn with_spacing(x_lo: f64, x_hi: f64, h: f64) -> Self {
        let elements = (((x_hi - x_lo) / h).ceil() as usize).max(4);
        Self { x_lo, x_hi, elements }
    }

    fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.elements as f64
    }
}

/// Natural boundary term `psi' = c psi` at one end, or a clamped end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Clamped,
    Robin(f64),
}

impl EndCondition {
    /// End condition for the angle convention `psi cos(t) = psi' sin(t)`.
    pub fn from_angle(t: f64) -> Self {
        let s = t.sin();
        if s.abs() < 1e-14 {
            EndCondition::Clamped
        } else {
            EndCondition::Robin(t.cos() / s)
        }
    }
}

/// Tridiagonal pencil `K - E M`, stored by diagonals.
#[derive(Debug, Clone)]
pub struct Pencil {
    k_diag: Vec<f64>,
    k_off: Vec<f64>,
    m_diag: Vec<f64>,
    m_off: Vec<f64>,
}

fn piece_value(pieces: &[Piece], x: f64) -> f64 {
    let idx = pieces.partition_point(|p| p.x_lo + p.width <= x);
    match pieces.get(idx) {
        Some(p) if x >= p.x_lo => p.v,
        _ => 0.0,
    }
}

/// `int v N_a N_b` over `[x0, x0 + h]`, exact for piecewise-constant `v`.
fn element_potential(pieces: &[Piece], x0: f64, h: f64) -> [f64; 3] {
    let x1 = x0 + h;
    let mut cuts = vec![x0];
    let start = pieces.partition_point(|p| p.x_lo + p.width <= x0);
    for p in &pieces[start..] {
        if p.x_lo >= x1 {
            break;
        }
        for c in [p.x_lo, p.x_lo + p.width] {
            if c > x0 && c < x1 {
                cuts.push(c);
            }
        }
    }
    cuts.push(x1);
    cuts.sort_by(|a, b| a.total_cmp(b));
    let left = |x: f64| (x1 - x) / h;
    let right = |x: f64| (x - x0) / h;
    let mut out = [0.0; 3];
    for w in cuts.windows(2) {
        let (s, t) = (w[0], w[1]);
        if t <= s {
            continue;
        }
        let m = 0.5 * (s + t);
        let v = piece_value(pieces, m);
        let simpson = |f: &dyn Fn(f64) -> f64| (t - s) / 6.0 * (f(s) + 4.0 * f(m) + f(t));
        out[0] += v * simpson(&|x| left(x) * left(x));
        out[1] += v * simpson(&|x| left(x) * right(x));
        out[2] += v * simpson(&|x| right(x) * right(x));
    }
    out
}

impl Pencil {
    /// Assemble stiffness-plus-potential and mass matrices of
    /// `-psi'' + v psi` on the mesh.
    pub fn assemble(pot: &impl Profile, mesh: Mesh, left: EndCondition, right: EndCondition) -> Self {
        let pieces = pot.pieces();
        let h = mesh.h();
        let nodes = mesh.elements + 1;
        let mut kd = vec![0.0; nodes];
        let mut ko = vec![0.0; nodes - 1];
        let mut md = vec![0.0; nodes];
        let mut mo = vec![0.0; nodes - 1];
        for e in 0..mesh.elements {
            let x0 = mesh.x_lo + h * e as f64;
            let [vaa, vab, vbb] = element_potential(&pieces, x0, h);
            kd[e] += 1.0 / h + vaa;
            kd[e + 1] += 1.0 / h + vbb;
            ko[e] += -1.0 / h + vab;
            md[e] += h / 3.0;
            md[e + 1] += h / 3.0;
            mo[e] += h / 6.0;
        }
        // -psi'' integrated by parts leaves psi'(0) phi(0) - psi'(L) phi(L)
        if let EndCondition::Robin(c) = left {
            kd[0] += c;
        }
        if let EndCondition::Robin(c) = right {
            kd[nodes - 1] -= c;
        }
        let lo = usize::from(left == EndCondition::Clamped);
        let hi = nodes - usize::from(right == EndCondition::Clamped);
        Self {
            k_diag: kd[lo..hi].to_vec(),
            k_off: ko[lo..hi - 1].to_vec(),
            m_diag: md[lo..hi].to_vec(),
            m_off: mo[lo..hi - 1].to_vec(),
        }
    }

    /// Number of eigenvalues strictly below `energy`, by Sylvester inertia
    /// of `K - E M`.
    pub fn count_below(&self, energy: f64) -> u64 {
        let mut negatives = 0;
        let mut prev = 1.0;
        let mut prev_off = 0.0;
        for i in 0..self.k_diag.len() {
            let diag = self.k_diag[i] - energy * self.m_diag[i];
            let mut d = diag - prev_off * prev_off / prev;
            if d == 0.0 {
                d = -f64::EPSILON * diag.abs().max(1.0);
            }
            if d < 0.0 {
                negatives += 1;
            }
            prev = d;
            prev_off = if i + 1 < self.k_diag.len() { self.k_off[i] - energy * self.m_off[i] } else { 0.0 };
        }
        negatives
    }
}

/// Bound states below `energy` of a potential on the line, from a clamped
/// box extending `margin` beyond the support.
pub fn line_count(pot: &impl Profile, energy: f64, margin: f64, h: f64) -> u64 {
    let (lo, hi) = pot.support();
    let mesh = Mesh::with_spacing(lo - margin, hi + margin, h);
    Pencil::assemble(pot, mesh, EndCondition::Clamped, EndCondition::Clamped).count_below(energy)
}

/// Eigenvalues below `energy` of the separated problem on the support,
/// with angles in the `psi cos(t) = psi' sin(t)` convention.
pub fn sl_count_below(pot: &impl Profile, alpha: f64, beta: f64, energy: f64, h: f64) -> u64 {
    let (lo, hi) = pot.support();
    let mesh = Mesh::with_spacing(lo, hi, h);
    Pencil::assemble(pot, mesh, EndCondition::from_angle(alpha), EndCondition::from_angle(beta)).count_below(energy)
}

/// Width of the window around `energy` inside which the oracle is not
/// trusted to resolve an eigenvalue.
pub fn guard_width(energy: f64) -> f64 {
    0.02 + 0.002 * energy.abs()
}

/// The oracle count at `energy`, or `None` when an eigenvalue of the
/// discretization lies within the guard window.
pub fn stable_count<F: Fn(f64) -> u64>(count: F, energy: f64) -> Option<u64> {
    let g = guard_width(energy);
    let lo = count(energy - g);
    let hi = count(energy + g);
    (lo == hi).then_some(lo)
}

/// Eigenvalues with multiplicity of the periodic (`skew = false`) or
/// antiperiodic problem on `[0, length]`, by central differences.
pub fn periodic_eigenvalues(pot: &impl Profile, length: f64, points: usize, skew: bool) -> Vec<f64> {
    let pieces = pot.pieces();
    let h = length / points as f64;
    let mut m = DMatrix::<f64>::zeros(points, points);
    for i in 0..points {
        let x = h * i as f64;
        // cell average of v over [x - h/2, x + h/2], wrapped
        let avg = average(&pieces, x - 0.5 * h, x + 0.5 * h, length);
        m[(i, i)] = 2.0 / (h * h) + avg;
        let j = (i + 1) % points;
        let mut off = -1.0 / (h * h);
        if j == 0 && skew {
            off = -off;
        }
        m[(i, j)] = off;
        m[(j, i)] = off;
    }
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values
}

fn average(pieces: &[Piece], a: f64, b: f64, length: f64) -> f64 {
    let mut total = 0.0;
    let mut spans = Vec::new();
    if a < 0.0 {
        spans.push((a + length, length));
        spans.push((0.0, b));
    } else if b > length {
        spans.push((a, length));
        spans.push((0.0, b - length));
    } else {
        spans.push((a, b));
    }
    for (s, t) in spans {
        for p in pieces {
            let lo = p.x_lo.max(s);
            let hi = (p.x_lo + p.width).min(t);
            if hi > lo {
                total += p.v * (hi - lo);
            }
        }
    }
    total / (b - a)
}

/// Group sorted eigenvalues closer than `rel` (relative to `max(1, |E|)`)
/// into `(E, multiplicity)`.
pub fn cluster(values: &[f64], rel: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((e, m)) if (v - *e).abs() <= rel * v.abs().max(1.0) => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Transfer matrix over the support by classical RK4 on each constant
/// piece, `steps_per_unit` steps per unit of `max(1, sqrt|E - v|) * width`.
pub fn rk4_transfer(pot: &impl Profile, energy: f64, steps_per_unit: f64) -> [[f64; 2]; 2] {
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for col in cols.iter_mut() {
        let (mut y, mut dy) = (col[0], col[1]);
        for p in pot.pieces() {
            let scale = (energy - p.v).abs().sqrt().max(1.0) * p.width;
            let steps = ((scale * steps_per_unit).ceil() as usize).max(16);
            let h = p.width / steps as f64;
            let f = |y: f64| (p.v - energy) * y;
            for _ in 0..steps {
                let (k1y, k1d) = (dy, f(y));
                let (k2y, k2d) = (dy + 0.5 * h * k1d, f(y + 0.5 * h * k1y));
                let (k3y, k3d) = (dy + 0.5 * h * k2d, f(y + 0.5 * h * k2y));
                let (k4y, k4d) = (dy + h * k3d, f(y + h * k3y));
                y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
                dy += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            }
        }
        *col = [y, dy];
    }
    [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
}

/// Sign changes of the solution with data `(psi, dpsi)` at the left end of
/// the support, sampled on `samples` uniform points by RK4.
pub fn sampled_sign_changes(pot: &impl Profile, energy: f64, psi: f64, dpsi: f64, samples: usize) -> u64 {
    let (lo, hi) = pot.support();
    let pieces = pot.pieces();
    let h = (hi - lo) / samples as f64;
    let (mut y, mut dy) = (psi, dpsi);
    let mut last_sign = 0.0;
    let mut changes = 0;
    let sub = 4;
    for i in 0..samples {
        let x0 = lo + h * i as f64;
        let v = piece_value(&pieces, x0 + 0.5 * h);
        let f = |y: f64| (v - energy) * y;
        let hs = h / sub as f64;
        for _ in 0..sub {
            let (k1y, k1d) = (dy, f(y));
            let (k2y, k2d) = (dy + 0.5 * hs * k1d, f(y + 0.5 * hs * k1y));
            let (k3y, k3d) = (dy + 0.5 * hs * k2d, f(y + 0.5 * hs * k2y));
            let (k4y, k4d) = (dy + hs * k3d, f(y + hs * k3y));
            y += hs / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            dy += hs / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        }
        if i + 1 == samples {
            break;
        }
        let s = y.signum();
        if y != 0.0 {
            if last_sign != 0.0 && s != last_sign {
                changes += 1;
            }
            last_sign = s;
        }
        if i == 0 && psi != 0.0 && psi.signum() != s {
            changes += 1;
        }
    }
    changes
}

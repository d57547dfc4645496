//! Verification campaigns: seeded instance families, integer counting
//! checks against the quasimomentum bounds, and machine-readable reports.

mod checks;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::potential::{assemble_hetero, build_cell, CellPotential, HeteroPotential};
use crate::{Error, Result, Tolerances};

pub use checks::{resonance_density_errors, DensityError};

/// Which group of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorem1,
    Theorem2,
    Periodic,
    Density,
    Theorem3,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Theorem1, Suite::Theorem2, Suite::Periodic, Suite::Density, Suite::Theorem3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Periodic => "periodic",
            Suite::Density => "density",
            Suite::Theorem3 => "theorem3",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::Theorem1, Suite::Theorem2, Suite::Periodic, Suite::Density, Suite::Theorem3, Suite::All]
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown suite '{s}'")))
    }
}

/// Generator for segment values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Values in `[-50, -1]`.
    Wells,
    /// Values in `[1, 50]`.
    Barriers,
    /// Wells on even instance ids, barriers on odd ones.
    Alternating,
    /// Values in `[-50, 50]`.
    Signed,
    Free,
}

impl Family {
    fn range(&self, id: usize) -> (f64, f64) {
        match self {
            Family::Wells => (-50.0, -1.0),
            Family::Barriers => (1.0, 50.0),
            Family::Alternating if id.is_multiple_of(2) => (-50.0, -1.0),
            Family::Alternating => (1.0, 50.0),
            Family::Signed => (-50.0, 50.0),
            Family::Free => (0.0, 0.0),
        }
    }
}

/// A seeded batch of instances plus the checks to run on them.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub seed: u64,
    pub family: Family,
    pub instances: usize,
    /// Inclusive range of segment counts per cell.
    pub segments: (usize, usize),
    pub a: f64,
    pub n_list: Vec<u64>,
    /// Points per energy grid.
    pub grid: usize,
    /// Top of the positive-energy grids.
    pub e_max: f64,
    /// Fraction of grid points cross-checked by the Galerkin oracle.
    pub oracle_fraction: f64,
    /// Instances cross-checked against dense diagonalization.
    pub oracle_instances: usize,
    /// Cells per heterogeneous instance (inclusive range).
    pub hetero_cells: (usize, usize),
    pub tol: Tolerances,
    /// Added to every bound-state count; only for harness self-tests.
    #[doc(hidden)]
    pub inject_count_offset: i64,
}

impl Campaign {
    /// Default campaign for one suite.
    pub fn for_suite(suite: Suite, seed: u64) -> Self {
        let base = Campaign {
            seed,
            family: Family::Alternating,
            instances: 20,
            segments: (1, 4),
            a: 1.0,
            n_list: vec![1, 2, 4, 8, 16],
            grid: 200,
            e_max: 60.0,
            oracle_fraction: 0.1,
            oracle_instances: 5,
            hetero_cells: (2, 4),
            tol: Tolerances::default(),
            inject_count_offset: 0,
        };
        match suite {
            Suite::Theorem1 | Suite::Theorem2 | Suite::All => base,
            Suite::Periodic => Campaign {
                family: Family::Barriers,
                instances: 8,
                n_list: vec![2, 4, 8],
                e_max: 150.0,
                ..base
            },
            Suite::Density => Campaign { instances: 6, n_list: vec![4, 8, 16, 32], e_max: 150.0, ..base },
            Suite::Theorem3 => Campaign { family: Family::Wells, ..base },
        }
    }

    /// Instance `id`, reproducible from the seed alone.
    pub fn instance(&self, id: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        let (lo, hi) = self.family.range(id);
        let cell_spec = |rng: &mut ChaCha8Rng, width: f64| {
            let count = rng.gen_range(self.segments.0..=self.segments.1);
            let mut cuts: Vec<f64> = (1..count).map(|_| round3(rng.gen_range(0.05..0.95) * width)).collect();
            cuts.sort_by(|a, b| a.total_cmp(b));
            cuts.dedup();
            let mut edges = vec![0.0];
            edges.extend(cuts);
            edges.push(width);
            edges
                .windows(2)
                .map(|w| {
                    let v = if hi > lo { round3(rng.gen_range(lo..=hi)) } else { lo };
                    (w[0], w[1], v)
                })
                .collect::<Vec<_>>()
        };
        let cell = cell_spec(&mut rng, self.a);
        let cells = rng.gen_range(self.hetero_cells.0..=self.hetero_cells.1);
        let mut x = 0.0;
        let mut hetero = Vec::with_capacity(cells);
        for _ in 0..cells {
            let w = round3(rng.gen_range(0.5..1.5));
            hetero.push((x, x + w, cell_spec(&mut rng, w)));
            x += w;
        }
        Instance { id, a: self.a, cell, hetero }
    }

    pub fn all_instances(&self) -> Vec<Instance> {
        (0..self.instances).map(|i| self.instance(i)).collect()
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Generated instance: one cell plus a heterogeneous chain of cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub id: usize,
    pub a: f64,
    /// Segments `(x_lo, x_hi, v)` of the periodic cell.
    pub cell: Vec<(f64, f64, f64)>,
    /// Cells `(x_lo, x_hi, local segments)` of the heterogeneous chain.
    pub hetero: Vec<(f64, f64, Vec<(f64, f64, f64)>)>,
}

impl Instance {
    pub fn cell_potential(&self) -> Result<CellPotential> {
        build_cell(self.a, &self.cell)
    }

    pub fn hetero_potential(&self) -> Result<HeteroPotential> {
        assemble_hetero(&self.hetero)
    }
}

/// One check evaluated over a set of points, reduced to its first failure
/// or, when all points pass, its tightest point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    pub seed: u64,
    pub instance: usize,
    pub n: u64,
    pub label: String,
    pub points: u64,
    pub failed: u64,
    pub energy: Option<f64>,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
    /// Recorded but not part of the verdict.
    pub advisory: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: u64,
    pub fail: u64,
    pub advisory_fail: u64,
}

/// Result of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub suite: Suite,
    pub seed: u64,
    pub instances: Vec<Instance>,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl CountReport {
    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass && !r.advisory)
    }

    fn assemble(suite: Suite, seed: u64, instances: Vec<Instance>, mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| {
            (a.instance, a.n, &a.check, &a.label).cmp(&(b.instance, b.n, &b.check, &b.label))
        });
        let mut summary = Summary::default();
        for r in &records {
            match (r.pass, r.advisory) {
                (true, _) => summary.pass += 1,
                (false, false) => summary.fail += 1,
                (false, true) => summary.advisory_fail += 1,
            }
        }
        Self { suite, seed, instances, records, summary }
    }

    /// Merge reports of several suites into one.
    pub fn merge(suite: Suite, seed: u64, parts: Vec<CountReport>) -> Self {
        let mut instances = Vec::new();
        let mut records = Vec::new();
        for p in parts {
            for inst in p.instances {
                if !instances.contains(&inst) {
                    instances.push(inst);
                }
            }
            records.extend(p.records);
        }
        Self::assemble(suite, seed, instances, records)
    }
}

#[derive(Debug, Clone)]
struct Group {
    points: u64,
    failed: u64,
    witness: (Option<f64>, f64, f64, f64),
    slack: f64,
    advisory: bool,
}

/// Per-instance accumulator of check points.
#[derive(Debug, Default)]
pub(crate) struct Tally {
    groups: BTreeMap<(u64, String, String), Group>,
}

impl Tally {
    /// Record `lo <= value <= hi` at one point.
    pub(crate) fn point(&mut self, check: &str, n: u64, label: &str, energy: Option<f64>, value: f64, lo: f64, hi: f64) {
        self.add(check, n, label, energy, value, lo, hi, false);
    }

    pub(crate) fn advisory(&mut self, check: &str, n: u64, label: &str, energy: Option<f64>, value: f64, lo: f64, hi: f64) {
        self.add(check, n, label, energy, value, lo, hi, true);
    }

    #[allow(clippy::too_many_arguments)]
    fn add(&mut self, check: &str, n: u64, label: &str, energy: Option<f64>, value: f64, lo: f64, hi: f64, advisory: bool) {
        let ok = lo <= value && value <= hi;
        let slack = (value - lo).min(hi - value);
        let g = self.groups.entry((n, check.to_string(), label.to_string())).or_insert(Group {
            points: 0,
            failed: 0,
            witness: (energy, value, lo, hi),
            slack: f64::INFINITY,
            advisory,
        });
        g.points += 1;
        if !ok {
            if g.failed == 0 {
                g.witness = (energy, value, lo, hi);
                g.slack = f64::NEG_INFINITY;
            }
            g.failed += 1;
        } else if g.failed == 0 && slack < g.slack {
            g.witness = (energy, value, lo, hi);
            g.slack = slack;
        }
    }

    pub(crate) fn into_records(self, seed: u64, instance: usize) -> Vec<Record> {
        self.groups
            .into_iter()
            .map(|((n, check, label), g)| Record {
                check,
                seed,
                instance,
                n,
                label,
                points: g.points,
                failed: g.failed,
                energy: g.witness.0,
                value: g.witness.1,
                lo: g.witness.2,
                hi: g.witness.3,
                pass: g.failed == 0,
                advisory: g.advisory,
            })
            .collect()
    }
}

/// Run one suite (or all of them) on a campaign.
pub fn run_suite(suite: Suite, campaign: &Campaign) -> Result<CountReport> {
    if suite == Suite::All {
        let parts = Suite::EACH
            .iter()
            .map(|&s| run_suite(s, &Campaign { seed: campaign.seed, ..Campaign::for_suite(s, campaign.seed) }))
            .collect::<Result<Vec<_>>>()?;
        return Ok(CountReport::merge(Suite::All, campaign.seed, parts));
    }
    let instances = campaign.all_instances();
    let per: Vec<Result<Vec<Record>>> = instances
        .par_iter()
        .map(|inst| {
            let mut tally = Tally::default();
            match suite {
                Suite::Theorem1 => checks::theorem1(campaign, inst, &mut tally)?,
                Suite::Theorem2 => checks::theorem2(campaign, inst, &mut tally)?,
                Suite::Periodic => checks::periodic(campaign, inst, &mut tally)?,
                Suite::Density => checks::density(campaign, inst, &mut tally)?,
                Suite::Theorem3 => checks::theorem3(campaign, inst, &mut tally)?,
                Suite::All => unreachable!(),
            }
            Ok(tally.into_records(campaign.seed, inst.id))
        })
        .collect();
    let mut records = Vec::new();
    for r in per {
        records.extend(r?);
    }
    Ok(CountReport::assemble(suite, campaign.seed, instances, records))
}

pub fn check_theorem1(campaign: &Campaign) -> Result<CountReport> {
    run_suite(Suite::Theorem1, campaign)
}

pub fn check_theorem2(campaign: &Campaign) -> Result<CountReport> {
    run_suite(Suite::Theorem2, campaign)
}

pub fn check_periodic(campaign: &Campaign) -> Result<CountReport> {
    run_suite(Suite::Periodic, campaign)
}

pub fn check_density(campaign: &Campaign) -> Result<CountReport> {
    run_suite(Suite::Density, campaign)
}

pub fn check_theorem3(campaign: &Campaign) -> Result<CountReport> {
    run_suite(Suite::Theorem3, campaign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite) -> Campaign {
        Campaign { instances: 3, grid: 40, n_list: vec![1, 2, 4], ..Campaign::for_suite(suite, 11) }
    }

    #[test]
    fn suite_tokens_round_trip() {
        for s in [Suite::Theorem1, Suite::Theorem2, Suite::Periodic, Suite::Density, Suite::Theorem3, Suite::All] {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("theorem4".parse::<Suite>().is_err());
    }

    #[test]
    fn instances_are_reproducible() {
        let c = small(Suite::Theorem1);
        assert_eq!(c.instance(2), c.instance(2));
        assert_ne!(c.instance(1), c.instance(2));
        for inst in c.all_instances() {
            inst.cell_potential().unwrap();
            let h = inst.hetero_potential().unwrap();
            assert!((2..=4).contains(&h.len()));
        }
    }

    #[test]
    fn report_is_deterministic() {
        let c = small(Suite::Theorem1);
        let a = serde_json::to_string(&check_theorem1(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&check_theorem1(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wells_pass_bound_state_checks() {
        let r = check_theorem1(&small(Suite::Theorem1)).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.records.iter().any(|x| x.check == "bound_state_oracle"));
    }

    #[test]
    fn injected_offset_is_caught_and_named() {
        let c = Campaign { inject_count_offset: 2, ..small(Suite::Theorem1) };
        let r = check_theorem1(&c).unwrap();
        assert!(!r.passed());
        let f = r.failures().next().unwrap();
        assert_eq!(f.seed, 11);
        assert!(f.energy.is_some());
        assert!(f.instance < 3);
    }

    #[test]
    fn free_family_passes_trivially() {
        let c = Campaign { family: Family::Free, ..small(Suite::Theorem1) };
        let r = check_theorem1(&c).unwrap();
        assert!(r.passed());
        let b = r.records.iter().find(|x| x.check == "bound_state_bracket").unwrap();
        assert_eq!(b.value, 0.0);
        let p = check_periodic(&Campaign { family: Family::Free, n_list: vec![2], ..small(Suite::Periodic) }).unwrap();
        assert!(p.passed(), "{:?}", p.failures().collect::<Vec<_>>());
    }

    #[test]
    fn separated_and_hetero_suites_pass() {
        let c = Campaign { n_list: vec![1, 3], grid: 30, oracle_fraction: 0.0, ..small(Suite::Theorem2) };
        let r = check_theorem2(&c).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let r = check_theorem3(&small(Suite::Theorem3)).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.records.iter().any(|x| x.check == "hetero_zero_energy"));
    }

    #[test]
    fn tally_keeps_first_failure() {
        let mut t = Tally::default();
        t.point("c", 1, "", Some(1.0), 1.0, 0.0, 2.0);
        t.point("c", 1, "", Some(2.0), 3.0, 0.0, 2.0);
        t.point("c", 1, "", Some(3.0), 4.0, 0.0, 2.0);
        let r = t.into_records(5, 0);
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].points, r[0].failed, r[0].energy), (3, 2, Some(2.0)));
    }
}

//! End-to-end acceptance run. Each test prints one `criterion N: PASS|FAIL`
//! line with its measured figure and wall time.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncell::bands::{quasimomentum_at, Quasimomentum, ZoneKind};
use ncell::boundary::{sl_eigenvalues, BoundaryConditions};
use ncell::potential::{build_cell, CellPotential};
use ncell::scatter::{
    cell_scattering, compose_n, direct_n_cell, find_resonances, local_bloch_phase, n_cell, n_cell_scattering,
    ResonanceOrigin, Scatterer,
};
use ncell::verify::{run_suite, resonance_density_errors, Campaign, CountReport, Family, Suite};

const SEED: u64 = 7;

fn report(id: u32, ok: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let verdict = if ok && elapsed <= budget { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} ({detail}; {:.2}s of {:.0}s)", elapsed.as_secs_f64(), budget.as_secs_f64());
}

fn random_cells(count: usize, family: Family, seed: u64) -> Vec<CellPotential> {
    let c = Campaign { family, instances: count, ..Campaign::for_suite(Suite::Theorem1, seed) };
    c.all_instances().iter().map(|i| i.cell_potential().unwrap()).collect()
}

fn kronig_penney() -> CellPotential {
    build_cell(1.0, &[(0.0, 0.5, 10.0), (0.5, 1.0, 0.0)]).unwrap()
}

fn failing(r: &CountReport, checks: &[&str]) -> Vec<String> {
    r.failures()
        .filter(|f| checks.contains(&f.check.as_str()))
        .map(|f| format!("{} instance {} n {} {} E {:?}", f.check, f.instance, f.n, f.label, f.energy))
        .collect()
}

fn points(r: &CountReport, check: &str) -> u64 {
    r.records.iter().filter(|x| x.check == check).map(|x| x.points).sum()
}

#[test]
fn criterion_1_unitarity_and_reciprocity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_u, mut worst_r) = (0.0_f64, 0.0_f64);
    for cell in random_cells(100, Family::Signed, SEED) {
        let pot = n_cell(&cell, 1).unwrap();
        for _ in 0..50 {
            let k = rng.gen_range(0.05..20.0);
            let s = n_cell_scattering(Scatterer::NCell(&pot), k).unwrap();
            worst_u = worst_u.max(s.unitarity_defect());
            worst_r = worst_r.max(s.reciprocity_defect());
        }
    }
    let ok = worst_u < 1e-8 && worst_r < 1e-10;
    report(1, ok, &format!("max |SS*-I| = {worst_u:.2e}, max |s11-s22| = {worst_r:.2e}"), start.elapsed(), Duration::from_secs(5));
    assert!(ok);
}

#[test]
fn criterion_2_composition_matches_matrix_power() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let cells = random_cells(50, Family::Signed, SEED + 1);
    let (mut tested, mut worst) = (0, 0.0_f64);
    while tested < 200 {
        let cell = &cells[rng.gen_range(0..cells.len())];
        let k: f64 = rng.gen_range(0.5..12.0);
        let n = rng.gen_range(1..=64u32);
        let Some(phi) = local_bloch_phase(cell, k * k) else { continue };
        if phi.sin().abs() <= 1e-3 {
            continue;
        }
        let (t1, r1) = cell_scattering(cell, k).unwrap();
        let (tc, rc) = compose_n(t1, r1, phi, n, 1e-6).unwrap();
        let (td, rd): (Complex64, Complex64) = direct_n_cell(cell, n, k).unwrap();
        let scale = td.norm().max(rd.norm());
        worst = worst.max((tc - td).norm().max((rc - rd).norm()) / scale);
        tested += 1;
    }
    let ok = worst < 1e-9;
    report(2, ok, &format!("{tested} samples, max relative error {worst:.2e}"), start.elapsed(), Duration::from_secs(10));
    assert!(ok);
}

#[test]
fn criterion_3_bound_state_counts() {
    let start = Instant::now();
    let r = run_suite(Suite::Theorem1, &Campaign::for_suite(Suite::Theorem1, SEED)).unwrap();
    let bad = failing(&r, &["bound_state_bracket", "bound_state_band", "bound_state_oracle", "bound_state_gap_mass"]);
    let detail = format!(
        "{} bracket points, {} oracle points, {} failures",
        points(&r, "bound_state_bracket"),
        points(&r, "bound_state_oracle"),
        bad.len()
    );
    let ok = bad.is_empty() && points(&r, "bound_state_oracle") > 0;
    report(3, ok, &detail, start.elapsed(), Duration::from_secs(180));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_4_separated_counts() {
    let start = Instant::now();
    let r = run_suite(Suite::Theorem2, &Campaign::for_suite(Suite::Theorem2, SEED)).unwrap();
    let bad = failing(&r, &["sl_bracket", "sl_band", "sl_gap_mass", "sl_oracle"]);
    let detail = format!(
        "{} bracket points, {} gap masses, {} oracle points, {} failures",
        points(&r, "sl_bracket"),
        points(&r, "sl_gap_mass"),
        points(&r, "sl_oracle"),
        bad.len()
    );
    let ok = bad.is_empty() && points(&r, "sl_gap_mass") > 0;
    report(4, ok, &detail, start.elapsed(), Duration::from_secs(180));
    assert!(ok, "{bad:?}");
}

fn periodic_report() -> &'static (CountReport, Duration) {
    static REPORT: OnceLock<(CountReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let start = Instant::now();
        let r = run_suite(Suite::Periodic, &Campaign::for_suite(Suite::Periodic, SEED)).unwrap();
        (r, start.elapsed())
    })
}

#[test]
fn criterion_5_periodic_and_skew_counts() {
    let (r, elapsed) = periodic_report();
    let bad = failing(
        r,
        &["periodic_bracket", "periodic_gap_mass", "periodic_oracle_multiplicity", "periodic_oracle_energy"],
    );
    let oracle_instances: std::collections::BTreeSet<usize> =
        r.records.iter().filter(|x| x.check == "periodic_oracle_multiplicity").map(|x| x.instance).collect();
    let detail = format!(
        "{} bracket points, {} oracle levels on {} instances, {} failures",
        points(r, "periodic_bracket"),
        points(r, "periodic_oracle_multiplicity"),
        oracle_instances.len(),
        bad.len()
    );
    let ok = bad.is_empty() && oracle_instances.len() == 5;
    report(5, ok, &detail, *elapsed, Duration::from_secs(120));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_6_comb_resonances_are_double_eigenvalues() {
    let start = Instant::now();
    let (r, elapsed) = periodic_report();
    let mut bad = failing(r, &["comb_double", "gap_resonance_free", "comb_per_band"]);
    // the Kronig–Penney cell at n = 4 as a fixed witness
    let cell = kronig_penney();
    let q = Quasimomentum::new(cell.clone(), 200.0).unwrap();
    let set = find_resonances(&cell, 4, 0.0, 190.0, &q).unwrap();
    let mut bands = 0;
    for z in q.table().zones.iter().filter(|z| z.kind == ZoneKind::Allowed && z.e_lo > 0.0 && z.e_hi < 190.0) {
        bands += 1;
        let combs = set
            .resonances
            .iter()
            .filter(|x| x.origin == ResonanceOrigin::BlochComb && x.energy > z.e_lo && x.energy < z.e_hi)
            .count();
        if combs != 3 {
            bad.push(format!("band [{}, {}] has {combs} comb resonances", z.e_lo, z.e_hi));
        }
    }
    if let Some(x) = set.resonances.iter().find(|x| x.reflection >= 1e-6) {
        bad.push(format!("resonance at {} has |R| = {}", x.energy, x.reflection));
    }
    let detail = format!(
        "{} comb resonances classified, {} gap samples, {bands} interior bands of the reference cell, {} failures",
        points(r, "comb_double"),
        points(r, "gap_resonance_free") * 50,
        bad.len()
    );
    let ok = bad.is_empty() && bands > 0;
    report(6, ok, &detail, *elapsed + start.elapsed(), Duration::from_secs(60));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_7_resonance_density_decay() {
    let start = Instant::now();
    let cell = kronig_penney();
    let q = Quasimomentum::new(cell.clone(), 150.0).unwrap();
    let errs = resonance_density_errors(&cell, &q, &[4, 8, 16, 32], 140.0, 2000).unwrap();
    let scaled: Vec<String> = errs.iter().map(|e| format!("n={} n*err={:.4}", e.n, e.scaled)).collect();
    let ok = errs.windows(2).all(|w| w[1].scaled <= 1.1 * w[0].scaled);
    report(7, ok, &scaled.join(", "), start.elapsed(), Duration::from_secs(120));
    assert!(ok, "{scaled:?}");
}

#[test]
fn criterion_8_heterogeneous_counts() {
    let start = Instant::now();
    let r = run_suite(Suite::Theorem3, &Campaign::for_suite(Suite::Theorem3, SEED)).unwrap();
    let bad = failing(&r, &["hetero_sum_bound", "hetero_zero_energy", "hetero_oracle"]);
    let oracle_instances: std::collections::BTreeSet<usize> =
        r.records.iter().filter(|x| x.check == "hetero_oracle").map(|x| x.instance).collect();
    let detail = format!(
        "{} instances, {} grid points, oracle on {} instances, {} failures",
        r.instances.len(),
        points(&r, "hetero_sum_bound"),
        oracle_instances.len(),
        bad.len()
    );
    let ok = bad.is_empty() && r.instances.len() == 20 && oracle_instances.len() == 5;
    report(8, ok, &detail, start.elapsed(), Duration::from_secs(120));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_9_free_closed_forms() {
    let start = Instant::now();
    let free = CellPotential::zero(1.0).unwrap();
    let q = Quasimomentum::new(free.clone(), 120.0).unwrap();
    let mut worst = 0.0_f64;
    for i in 1..=200 {
        let e = 100.0 * i as f64 / 200.0;
        worst = worst.max((quasimomentum_at(&q, e).unwrap() - e.sqrt()).abs());
    }
    for n in [1u32, 3, 8] {
        let pot = n_cell(&free, n).unwrap();
        let len = n as f64;
        let spectrum = sl_eigenvalues(&pot, &BoundaryConditions::dirichlet(), -1.0, 100.0).unwrap();
        let expected: Vec<f64> = (1..).map(|j| (j as f64 * PI / len).powi(2)).take_while(|&e| e <= 100.0).collect();
        assert_eq!(spectrum.eigenvalues.len(), expected.len());
        for (got, want) in spectrum.eigenvalues.iter().zip(&expected) {
            worst = worst.max((got - want).abs());
        }
        for k in [0.3, 1.0, 4.2, 9.7] {
            let s = n_cell_scattering(Scatterer::NCell(&pot), k).unwrap();
            worst = worst.max((s.t - Complex64::from_polar(1.0, k * len)).norm()).max(s.r.norm());
        }
    }
    let ok = worst < 1e-9;
    report(9, ok, &format!("max deviation {worst:.2e}"), start.elapsed(), Duration::from_secs(1));
    assert!(ok);
}

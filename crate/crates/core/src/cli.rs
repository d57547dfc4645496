//! Command-line front end.

use std::ffi::OsString;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bands::{discriminant, quasimomentum_at, scan_zones, Quasimomentum, ZoneKind};
use crate::boundary::{periodic_count, periodic_spectrum, sl_count, sl_eigenvalues, BoundaryConditions, Flavor};
use crate::potential::{load_potential_file, CellPotential, NCellPotential, Potential};
use crate::scatter::{count_bound_states, find_resonances, n_cell, n_cell_scattering, wavenumber, Scatterer};
use crate::verify::{run_suite, Campaign, CountReport, Suite};
use crate::{Error, Result, Tolerances};

/// Which end of the interval an angle token describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Parse a boundary angle: a number of radians, a multiple of pi such as
/// `0.25pi`, or `dirichlet` / `neumann`.
pub fn parse_angle(token: &str, end: End) -> Result<f64> {
    let t = token.trim();
    let angle = match t.to_ascii_lowercase().as_str() {
        "dirichlet" => match end {
            End::Left => 0.0,
            End::Right => PI,
        },
        "neumann" => FRAC_PI_2,
        "pi" => PI,
        lower => match lower.strip_suffix("pi") {
            Some(m) => m.trim().parse::<f64>().map(|m| m * PI),
            None => lower.parse::<f64>(),
        }
        .map_err(|_| Error::Domain(format!("bad angle {t:?}: expected radians, <x>pi, dirichlet or neumann")))?,
    };
    if !angle.is_finite() {
        return Err(Error::Domain(format!("angle {t:?} is not finite")));
    }
    Ok(angle)
}

pub fn parse_flavor(token: &str) -> Result<Flavor> {
    token.trim().parse()
}

#[derive(Debug, Parser)]
#[command(name = "ncell", version, about = "Spectra, scattering and counting checks for n-cell potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Potential document (cell, ncell or hetero).
    #[arg(long = "pot", visible_alias = "cell", value_name = "FILE")]
    pot: PathBuf,
    /// Cell count; overrides the count stored in an ncell document.
    #[arg(long, value_name = "INT")]
    n: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct Window {
    #[arg(long, allow_negative_numbers = true)]
    emin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    emax: f64,
    #[arg(long, default_value_t = 2000)]
    grid: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discriminant, quasimomentum and zone of each grid energy.
    Bands {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
    },
    /// Transmission and reflection amplitudes on an energy grid.
    Scatter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
    },
    /// Perfect-transmission energies of the n-cell potential.
    Resonances {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
    },
    /// Eigenvalues with separated boundary conditions.
    Sl {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
        #[arg(long, default_value = "dirichlet")]
        alpha: String,
        #[arg(long, default_value = "dirichlet")]
        beta: String,
    },
    /// Periodic or skew-periodic eigenvalues with multiplicity.
    Periodic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
        #[arg(long, default_value = "periodic")]
        flavor: String,
    },
    /// One counting-function value: bound states by default, or the
    /// separated or periodic count when boundary flags are given.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long = "E", allow_negative_numbers = true)]
        energy: f64,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        flavor: Option<String>,
    },
    /// Run a verification campaign and emit its report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Cell counts, comma separated; overrides the suite default.
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// Tabular output, written as CSV or as a JSON array of objects.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<serde_json::Value>) {
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::Io(e.to_string());
                w.write_record(&self.header).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    }))
                    .map_err(io)?;
                }
                w.into_inner().map_err(|e| Error::Io(e.to_string()))
            }
            Format::Json => {
                let objects: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| self.header.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect())
                    .collect();
                let mut out = serde_json::to_vec_pretty(&objects).map_err(|e| Error::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(Error::from),
        None => match std::io::stdout().write_all(bytes) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e)),
            _ => Ok(()),
        },
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || points < 2 {
        return Err(Error::Domain(format!("empty energy window [{lo}, {hi}] with {points} points")));
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

/// The cell and cell count described by a document and an optional `--n`.
fn periodic_input(common: &Common) -> Result<(CellPotential, u64)> {
    match load_potential_file(&common.pot)? {
        Potential::Cell(c) => Ok((c, common.n.unwrap_or(1))),
        Potential::NCell(p) => Ok((p.cell().clone(), common.n.unwrap_or(p.n() as u64))),
        Potential::Hetero(_) => Err(Error::Domain("this command needs a cell or ncell document".into())),
    }
}

enum Loaded {
    Periodic(NCellPotential),
    Hetero(crate::potential::HeteroPotential),
}

fn any_input(common: &Common) -> Result<Loaded> {
    match load_potential_file(&common.pot)? {
        Potential::Hetero(h) => {
            if common.n.is_some() {
                return Err(Error::Domain("--n does not apply to a hetero document".into()));
            }
            Ok(Loaded::Hetero(h))
        }
        _ => {
            let (cell, n) = periodic_input(common)?;
            Ok(Loaded::Periodic(n_cell(&cell, n as u32)?))
        }
    }
}

fn cell_count(n: u64) -> Result<u32> {
    u32::try_from(n).ok().filter(|&n| n >= 1).ok_or_else(|| Error::Domain(format!("cell count {n} out of range")))
}

fn bands(common: &Common, w: &Window) -> Result<()> {
    let (cell, _) = periodic_input(common)?;
    let lo = w.emin.unwrap_or(cell.min_segment_value().min(0.0) - 1.0);
    let table = scan_zones(&cell, w.emax, w.grid)?;
    let q = Quasimomentum::from_table(cell.clone(), table);
    let mut t = Table::new(&["E", "TrM", "p", "zone_kind", "gap_index"]);
    for e in grid(lo, w.emax, w.grid)? {
        let zone = q.table().locate(e)?;
        let gap = match zone.kind {
            ZoneKind::Forbidden => zone.gap_index.map_or(serde_json::Value::Null, |g| g.into()),
            ZoneKind::Allowed => serde_json::Value::Null,
        };
        t.push(vec![num(e), num(discriminant(&cell, e)), num(quasimomentum_at(&q, e)?), zone.kind.as_str().into(), gap]);
    }
    emit(&t.render(common.format)?, common.out.as_deref())
}

fn scatter(common: &Common, w: &Window) -> Result<()> {
    let pot = any_input(common)?;
    let lo = w.emin.unwrap_or(0.0).max(0.0);
    let mut t = Table::new(&["E", "ReT", "ImT", "|T|^2", "ReR", "ImR"]);
    for e in grid(lo, w.emax, w.grid)?.into_iter().filter(|&e| e > 0.0) {
        let k = wavenumber(e)?;
        let s = match &pot {
            Loaded::Periodic(p) => n_cell_scattering(Scatterer::NCell(p), k)?,
            Loaded::Hetero(h) => n_cell_scattering(Scatterer::Hetero(h), k)?,
        };
        t.push(vec![num(e), num(s.t.re), num(s.t.im), num(s.t.norm_sqr()), num(s.r.re), num(s.r.im)]);
    }
    emit(&t.render(common.format)?, common.out.as_deref())
}

fn resonances(common: &Common, w: &Window) -> Result<()> {
    let (cell, n) = periodic_input(common)?;
    let q = Quasimomentum::new(cell.clone(), w.emax)?;
    let set = find_resonances(&cell, cell_count(n)?, w.emin.unwrap_or(0.0).max(0.0), w.emax, &q)?;
    if set.all_pass {
        eprintln!("free cell: every positive energy transmits perfectly");
    }
    let mut t = Table::new(&["lambda", "origin", "|R|"]);
    for r in &set.resonances {
        t.push(vec![num(r.energy), r.origin.as_str().into(), num(r.reflection)]);
    }
    emit(&t.render(common.format)?, common.out.as_deref())
}

fn boundary(alpha: &str, beta: &str) -> Result<BoundaryConditions> {
    BoundaryConditions::normalized(parse_angle(alpha, End::Left)?, parse_angle(beta, End::Right)?)
}

fn sl(common: &Common, w: &Window, alpha: &str, beta: &str) -> Result<()> {
    let bc = boundary(alpha, beta)?;
    let spectrum = match any_input(common)? {
        Loaded::Periodic(p) => sl_eigenvalues(&p, &bc, w.emin.unwrap_or(f64::NEG_INFINITY), w.emax)?,
        Loaded::Hetero(h) => sl_eigenvalues(&h, &bc, w.emin.unwrap_or(f64::NEG_INFINITY), w.emax)?,
    };
    let mut t = Table::new(&["E_j", "j"]);
    for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
        t.push(vec![num(e), (spectrum.first_index + i as u64).into()]);
    }
    emit(&t.render(common.format)?, common.out.as_deref())
}

fn periodic(common: &Common, w: &Window, flavor: &str) -> Result<()> {
    let flavor = parse_flavor(flavor)?;
    let (cell, n) = periodic_input(common)?;
    let q = Quasimomentum::new(cell, w.emax)?;
    let spectrum = periodic_spectrum(&q, n, flavor, &Tolerances::default())?;
    let lo = w.emin.unwrap_or(f64::NEG_INFINITY);
    let mut t = Table::new(&["E_j", "multiplicity"]);
    for &(e, m) in spectrum.eigenvalues.iter().filter(|(e, _)| *e >= lo) {
        t.push(vec![num(e), m.into()]);
    }
    emit(&t.render(common.format)?, common.out.as_deref())
}

fn count(common: &Common, energy: f64, alpha: Option<&str>, beta: Option<&str>, flavor: Option<&str>) -> Result<()> {
    let value = match (alpha, beta, flavor) {
        (None, None, None) => match any_input(common)? {
            Loaded::Periodic(p) => count_bound_states(&p, energy)?,
            Loaded::Hetero(h) => count_bound_states(&h, energy)?,
        },
        (_, _, None) => {
            let bc = boundary(alpha.unwrap_or("dirichlet"), beta.unwrap_or("dirichlet"))?;
            match any_input(common)? {
                Loaded::Periodic(p) => sl_count(&p, &bc, energy),
                Loaded::Hetero(h) => sl_count(&h, &bc, energy),
            }
        }
        (None, None, Some(f)) => {
            let (cell, n) = periodic_input(common)?;
            let q = Quasimomentum::new(cell, energy.max(0.0) + 10.0)?;
            periodic_count(&q, n, parse_flavor(f)?, energy)?
        }
        _ => return Err(Error::Domain("--flavor cannot be combined with --alpha/--beta".into())),
    };
    emit(format!("{value}\n").as_bytes(), common.out.as_deref())
}

fn verify(suite: &str, seed: u64, n: &[u64], grid: Option<usize>, out: Option<&Path>, format: Format) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    let configure = |s: Suite| {
        let mut c = Campaign::for_suite(s, seed);
        if !n.is_empty() {
            c.n_list = n.to_vec();
        }
        if let Some(g) = grid {
            c.grid = g;
        }
        c
    };
    let report = if suite == Suite::All {
        let parts = Suite::EACH.iter().map(|&s| run_suite(s, &configure(s))).collect::<Result<Vec<_>>>()?;
        CountReport::merge(Suite::All, seed, parts)
    } else {
        run_suite(suite, &configure(suite))?
    };
    let bytes = match format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "check", "seed", "instance", "n", "label", "points", "failed", "E", "value", "lo", "hi", "pass", "advisory",
            ]);
            for r in &report.records {
                t.push(vec![
                    r.check.clone().into(),
                    r.seed.into(),
                    r.instance.into(),
                    r.n.into(),
                    r.label.clone().into(),
                    r.points.into(),
                    r.failed.into(),
                    r.energy.map_or(serde_json::Value::Null, num),
                    num(r.value),
                    num(r.lo),
                    num(r.hi),
                    r.pass.into(),
                    r.advisory.into(),
                ]);
            }
            t.render(Format::Csv)?
        }
    };
    emit(&bytes, out)?;
    let s = report.summary;
    eprintln!("{}: {} passed, {} failed, {} advisory failures", report.suite, s.pass, s.fail, s.advisory_fail);
    for f in report.failures().take(10) {
        eprintln!(
            "FAIL {} seed={} instance={} n={} {} E={:?}: {} not in [{}, {}]",
            f.check, f.seed, f.instance, f.n, f.label, f.energy, f.value, f.lo, f.hi
        );
    }
    Ok(report.passed())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Parse { .. } | Error::Domain(_) | Error::Io(_) | Error::OutOfRange { .. } => 2,
        Error::ScanDiverged { .. } | Error::BandEdge { .. } => 1,
    }
}

/// Run the command line and return the process exit code: 0 on success,
/// 1 when a check fails or a computation breaks down, 2 on usage errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Bands { common, window } => bands(common, window).map(|_| true),
        Command::Scatter { common, window } => scatter(common, window).map(|_| true),
        Command::Resonances { common, window } => resonances(common, window).map(|_| true),
        Command::Sl { common, window, alpha, beta } => sl(common, window, alpha, beta).map(|_| true),
        Command::Periodic { common, window, flavor } => periodic(common, window, flavor).map(|_| true),
        Command::Count { common, energy, alpha, beta, flavor } => {
            count(common, *energy, alpha.as_deref(), beta.as_deref(), flavor.as_deref()).map(|_| true)
        }
        Command::Verify { suite, seed, n, grid, out, format } => verify(suite, *seed, n, *grid, out.as_deref(), *format),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_tokens() {
        assert_eq!(parse_angle("dirichlet", End::Left).unwrap(), 0.0);
        assert_eq!(parse_angle("Dirichlet", End::Right).unwrap(), PI);
        assert_eq!(parse_angle("neumann", End::Right).unwrap(), FRAC_PI_2);
        assert_eq!(parse_angle("0.25pi", End::Left).unwrap(), 0.25 * PI);
        assert_eq!(parse_angle("pi", End::Left).unwrap(), PI);
        assert_eq!(parse_angle(" 1.5 ", End::Left).unwrap(), 1.5);
        for bad in ["", "nan", "inf", "robin", "pipi", "1e999"] {
            assert!(parse_angle(bad, End::Left).is_err(), "{bad}");
        }
    }

    #[test]
    fn flavor_tokens() {
        assert_eq!(parse_flavor("skew").unwrap(), Flavor::Skew);
        assert_eq!(parse_flavor(" periodic").unwrap(), Flavor::Periodic);
        assert!(parse_flavor("antiperiodic").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_cli(["ncell", "bands", "--bogus"]), 2);
        assert_eq!(run_cli(["ncell"]), 2);
        assert_eq!(run_cli(["ncell", "verify", "--suite", "nope"]), 2);
        assert_eq!(run_cli(["ncell", "count", "--pot", "/nonexistent.json", "--E", "-1"]), 2);
    }
}

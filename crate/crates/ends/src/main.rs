//! Command-line front end: classification, spectral cross-validation,
//! stochastic analysis, and consistency verification for configured ends.

use clap::{Args, Parser, Subcommand};
use ends::config::{Config, ResolvedEnd};
use ends::criteria::{sup_criterion, CriterionCase, Verdict};
use ends::error::{EndsError, Result};
use ends::profile::RadialProfile;
use ends::quad::TailKind;
use ends::report::{best_upper_bound, converged_dirichlet, run_classify, ManifoldReport};
use ends::spectrum::mazja_estimate;
use ends::stochastic::{completeness_verdict, mc_explosion, Completeness};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "ends", version, about = "Classify the spectrum over manifold ends")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the discreteness pipeline on every configured end.
    Classify(Common),
    /// Emit eigenvalue-curve and bounds data as CSV.
    Spectrum(Common),
    /// Feller test, ODE corroboration, and Monte Carlo explosion fractions.
    Stochastic(Common),
    /// Run the cross-module consistency checks (built-in corpus by default).
    Verify(Common),
    /// Full pipeline with a mandatory JSON report.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Directory for CSV plot data (one file per end).
    #[arg(long, value_name = "DIR")]
    csv: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated t grid, e.g. "1,2,4,8".
    #[arg(long, value_name = "LIST")]
    t_grid: Option<String>,
    /// Discreteness threshold override for B(t_max).
    #[arg(long, value_name = "EPS")]
    tol_disc: Option<f64>,
    /// Essential-spectrum threshold override for B(t_max).
    #[arg(long, value_name = "EPS")]
    tol_ess: Option<f64>,
    /// Suppress the stdout summary.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ENDS_NUM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Classify(c) => cmd_classify(c, false),
        Cmd::Report(c) => cmd_classify(c, true),
        Cmd::Spectrum(c) => cmd_spectrum(c),
        Cmd::Stochastic(c) => cmd_stochastic(c),
        Cmd::Verify(c) => cmd_verify(c),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| EndsError::Config(format!("bad t-grid entry '{s}'")))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(EndsError::Config("t-grid is empty".into()));
    }
    if grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(EndsError::Config("t-grid entries must be finite and >= 0".into()));
    }
    Ok(grid)
}

/// Load the config and fold the CLI overrides into it. Returns the config,
/// its raw text (for the digest), and its directory (for relative paths).
fn load(common: &Common, sweep_override: bool) -> Result<(Config, String, PathBuf)> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| EndsError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)?;
    let mut cfg = Config::from_str(&text)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(grid) = &common.t_grid {
        let grid = parse_grid(grid)?;
        if sweep_override {
            cfg.run.t_grid = Some(grid);
        } else {
            cfg.run.spectral_t_grid = Some(grid);
        }
    }
    if let Some(v) = common.tol_disc {
        cfg.run.eps_disc = Some(v);
    }
    if let Some(v) = common.tol_ess {
        cfg.run.eps_ess = Some(v);
    }
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((cfg, text, base))
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Discrete => "discrete",
        Verdict::NotDiscrete => "not_discrete",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn exit_for(report: &ManifoldReport) -> u8 {
    if report.any_inconclusive() {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn cmd_classify(common: &Common, require_out: bool) -> Result<u8> {
    if require_out && common.out.is_none() {
        return Err(EndsError::Config("report requires --out".into()));
    }
    let (cfg, text, base) = load(common, true)?;
    let report = run_classify(&cfg, &text, &base)?;
    if let Some(out) = &common.out {
        std::fs::write(out, report.to_json())?;
    }
    if let Some(dir) = &common.csv {
        std::fs::create_dir_all(dir)?;
        for end in &report.ends {
            write_end_csv(dir, end)?;
        }
    }
    if !common.quiet {
        for end in &report.ends {
            println!(
                "{}: {} ({}); completeness: {:?}",
                end.label,
                verdict_word(end.criterion.verdict),
                end.criterion.rationale,
                end.completeness.verdict
            );
        }
        println!("overall: {}", verdict_word(report.overall));
    }
    Ok(exit_for(&report))
}

fn write_end_csv(dir: &Path, end: &ends::report::EndReport) -> Result<()> {
    let path = dir.join(format!("{}.csv", file_stem(&end.label)));
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "t,R,N,lambda,richardson,lower_bound,upper_bound")?;
    for (row, b) in end.curve.iter().zip(&end.bounds) {
        let (r_end, n, lambda, rich) = match &row.point {
            Some(pt) => (
                format!("{}", pt.estimate.r_end),
                format!("{}", pt.estimate.n),
                format!("{}", pt.estimate.lambda),
                format!("{}", pt.estimate.richardson),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let upper = b.upper.map(|u| format!("{u}")).unwrap_or_default();
        writeln!(f, "{},{},{},{},{},{},{}", row.t, r_end, n, lambda, rich, b.lower, upper)?;
    }
    Ok(())
}

fn cmd_spectrum(common: &Common) -> Result<u8> {
    let (cfg, text, base) = load(common, false)?;
    let report = run_classify(&cfg, &text, &base)?;
    match &common.csv {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for end in &report.ends {
                write_end_csv(dir, end)?;
            }
            if !common.quiet {
                println!("wrote {} CSV file(s) to {}", report.ends.len(), dir.display());
            }
        }
        None => {
            // no directory: print the same rows to stdout
            for end in &report.ends {
                println!("# {}", end.label);
                println!("t,R,N,lambda,richardson,lower_bound,upper_bound");
                for (row, b) in end.curve.iter().zip(&end.bounds) {
                    if let Some(pt) = &row.point {
                        println!(
                            "{},{},{},{},{},{},{}",
                            row.t,
                            pt.estimate.r_end,
                            pt.estimate.n,
                            pt.estimate.lambda,
                            pt.estimate.richardson,
                            b.lower,
                            b.upper.map(|u| format!("{u}")).unwrap_or_default()
                        );
                    }
                }
            }
        }
    }
    if let Some(out) = &common.out {
        std::fs::write(out, report.to_json())?;
    }
    Ok(exit_for(&report))
}

fn cmd_stochastic(common: &Common) -> Result<u8> {
    let (cfg, _text, base) = load(common, false)?;
    let ends = cfg.resolve(&base)?;
    let mut any_inconclusive = false;
    for end in &ends {
        let cv = completeness_verdict(&end.profile);
        let frac = mc_explosion(
            &end.profile,
            cfg.run.mc_paths,
            cfg.run.mc_horizon,
            cfg.run.mc_barrier,
            cfg.run.seed,
        )?;
        if cv.verdict == Completeness::Inconclusive {
            any_inconclusive = true;
        }
        if !common.quiet {
            println!(
                "{}: {:?} (feller {:?}); explosion fraction {frac:.4} \
                 (n={}, T={}, R={}, seed={})",
                end.label,
                cv.verdict,
                cv.feller.kind(),
                cfg.run.mc_paths,
                cfg.run.mc_horizon,
                cfg.run.mc_barrier,
                cfg.run.seed
            );
        }
    }
    Ok(if any_inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK })
}

const CORPUS: [&str; 8] =
    ["1", "r+1", "exp(-r)", "exp(r)", "exp(-r^2)", "exp(r^2)", "exp(r^3)", "(1+r)^(-2)"];

struct Check {
    name: String,
    pass: bool,
    margin: String,
}

fn duality_checks(p: &RadialProfile, label: &str, out: &mut Vec<Check>) -> Result<()> {
    let inv = p.reciprocal();
    for t in [1.0, 4.0] {
        let a = sup_criterion(p, t, CriterionCase::Infinite)?;
        let b = sup_criterion(&inv, t, CriterionCase::Finite)?;
        let (pass, margin) = match (a.b.kind(), b.b.kind()) {
            (TailKind::Convergent(x), TailKind::Convergent(y)) => {
                let rel = (x - y).abs() / x.abs().max(1e-300);
                (rel <= 1e-8, format!("rel dev {rel:.2e}"))
            }
            (ka, kb) => (ka == kb, format!("{ka:?} vs {kb:?}")),
        };
        out.push(Check { name: format!("duality {label} t={t}"), pass, margin });
    }
    Ok(())
}

fn mazja_checks(p: &RadialProfile, label: &str, out: &mut Vec<Check>) -> Result<()> {
    for t in [1.0, 4.0] {
        let sup = sup_criterion(p, t, CriterionCase::Infinite)?;
        if let TailKind::Convergent(b) = sup.b.kind() {
            let m = mazja_estimate(p, t)?;
            let dev = (m * b - 1.0).abs();
            out.push(Check {
                name: format!("mazja identity {label} t={t}"),
                pass: dev <= 1e-6,
                margin: format!("|m*B - 1| = {dev:.2e}"),
            });
        }
    }
    Ok(())
}

fn cmd_verify(common: &Common) -> Result<u8> {
    let profiles: Vec<(String, RadialProfile)> = match &common.config {
        Some(_) => {
            let (cfg, _text, base) = load(common, true)?;
            cfg.resolve(&base)?
                .into_iter()
                .map(|ResolvedEnd { label, profile, .. }| (label, profile))
                .collect()
        }
        None => CORPUS
            .iter()
            .map(|text| Ok((text.to_string(), RadialProfile::parse(text)?)))
            .collect::<Result<_>>()?,
    };

    let mut checks: Vec<Check> = Vec::new();
    for (label, p) in &profiles {
        duality_checks(p, label, &mut checks)?;
        mazja_checks(p, label, &mut checks)?;

        let full = ends::criteria::classify_discreteness(p)?;
        let simple = ends::criteria::classify_discreteness_simplified(p)?;
        checks.push(Check {
            name: format!("theorem/corollary {label}"),
            pass: full.verdict == simple.verdict,
            margin: format!("{:?} vs {:?}", full.verdict, simple.verdict),
        });

        let cv = completeness_verdict(p);
        checks.push(Check {
            name: format!("incomplete=>discrete {label}"),
            pass: !(full.verdict == Verdict::NotDiscrete
                && cv.verdict == Completeness::Incomplete),
            margin: format!("{:?} / {:?}", full.verdict, cv.verdict),
        });

        for t in [1.0, 2.0, 4.0, 8.0] {
            let lower = ends::criteria::lambda0_lower_bound(p, t, 0.0)?;
            let row = converged_dirichlet(p, t, 500);
            if let Some(pt) = &row.point {
                let d = pt.estimate.richardson;
                let upper = best_upper_bound(p, t);
                let upper_ok = upper.map_or(true, |(u, _)| d <= 1.05 * u);
                checks.push(Check {
                    name: format!("sandwich {label} t={t}"),
                    pass: lower <= 1.05 * d && upper_ok,
                    margin: format!(
                        "{lower:.4e} <= {d:.4e} <= {}",
                        upper.map(|(u, _)| format!("{u:.4e}")).unwrap_or_else(|| "-".into())
                    ),
                });
            }
        }
    }

    let mut all_pass = true;
    for c in &checks {
        all_pass &= c.pass;
        if !common.quiet {
            println!("{} {:<40} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.margin);
        }
    }
    if !common.quiet {
        println!("{} checks, {} failed", checks.len(), checks.iter().filter(|c| !c.pass).count());
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

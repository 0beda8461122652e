//! Command-line driver. Exit status: 0 when every asserted invariant holds,
//! 1 when one fails, 2 on configuration or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use quasiperiodic::example9::{verify_example, Example9Options};
use quasiperiodic::levelset::{build_chart, chart_grid_check, cosine_ground_state};
use quasiperiodic::lyapunov::{
    deviation_stats, lyapunov_avalanche, lyapunov_direct, s_value, LyapunovEstimate, Sampler,
};
use quasiperiodic::scan::{edge_estimate, export, gap_persistence, spectrum_scan, Format, ScanConfig};
use quasiperiodic::verify::{resultant_closed_forms, run_suite, Check};

#[derive(Parser, Debug)]
#[command(name = "quasiperiodic", version, about = "Quasiperiodic Schrödinger operator laboratory")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Window length.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Phases per dimension.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Frequency preset: golden, sqrt2, sqrt2-sqrt3.
    #[arg(long, global = true)]
    omega: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, json or text.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum scan over the phase grid with gap detection.
    Scan {
        /// Extra grid densities for the persistence check, e.g. `60,90`.
        #[arg(long, value_delimiter = ',')]
        refine: Vec<usize>,
    },
    /// Lowest eigenvalue over the grid against λ·min V.
    Edges,
    /// Lyapunov exponent L_N by direct products and by the avalanche expansion.
    Lyapunov {
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Block length for the avalanche estimate.
        #[arg(long, default_value_t = 10)]
        ell: usize,
    },
    /// Deviation statistics of (1/N) log‖M_N‖ from L_N.
    Ldt {
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Genericity conditions for the cosine family.
    Genericity {
        /// Run the full condition check for V = cos 2πx + s cos 2πy.
        #[arg(long)]
        example: bool,
        #[arg(long, default_value_t = 8.0)]
        k: f64,
    },
    /// Level-set chart on a ground-state eigenvalue surface.
    Levelset {
        /// Grid points per axis of the (y, E) check.
        #[arg(long, default_value_t = 32)]
        points: usize,
    },
    /// The invariant suite.
    Verify,
}

/// Keys accepted in a configuration file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lambda: Option<f64>,
    s: Option<f64>,
    #[serde(rename = "N")]
    n: Option<usize>,
    grid: Option<usize>,
    omega: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
    potential: Option<String>,
    eps_gap: Option<f64>,
    boundary_tol: Option<f64>,
    energy: Option<f64>,
    samples: Option<usize>,
}

struct Settings {
    file: FileConfig,
    lambda: Option<f64>,
    s: Option<f64>,
    n: Option<usize>,
    grid: Option<usize>,
    omega: Option<String>,
    seed: u64,
    out: Option<PathBuf>,
    format: Option<String>,
}

impl Settings {
    fn load(c: Common) -> Result<Self> {
        let file = match &c.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        Ok(Self {
            lambda: c.lambda.or(file.lambda),
            s: c.s.or(file.s),
            n: c.n.or(file.n),
            grid: c.grid.or(file.grid),
            omega: c.omega.or_else(|| file.omega.clone()),
            seed: c.seed.or(file.seed).unwrap_or(0),
            out: c.out.or_else(|| file.out.clone()),
            format: c.format.or_else(|| file.format.clone()),
            file,
        })
    }

    fn scan_config(&self) -> ScanConfig {
        let d = ScanConfig::default();
        ScanConfig {
            potential: self.file.potential.clone().unwrap_or(d.potential),
            s: self.s.unwrap_or(d.s),
            omega: self.omega.clone().unwrap_or(d.omega),
            lambda: self.lambda.unwrap_or(d.lambda),
            n: self.n.unwrap_or(d.n),
            grid: self.grid.unwrap_or(d.grid),
            eps_gap: self.file.eps_gap.or(d.eps_gap),
            seed: self.seed,
            boundary_tol: self.file.boundary_tol.or(d.boundary_tol),
            out: self.out.clone(),
        }
    }

    fn format(&self) -> Result<Option<Format>> {
        match self.format.as_deref() {
            None | Some("text") => Ok(None),
            Some(f) => f.parse().map(Some).map_err(anyhow::Error::msg),
        }
    }
}

fn emit<T: Serialize>(settings: &Settings, value: &T, text: &str) -> Result<()> {
    match settings.format()? {
        Some(Format::Json) => {
            let json = serde_json::to_string_pretty(value)?;
            match &settings.out {
                Some(p) => write_file(p, &json)?,
                None => println!("{json}"),
            }
        }
        Some(Format::Csv) => bail!("csv output is only available for `scan`"),
        None => {
            print!("{text}");
            if let Some(p) = &settings.out {
                write_file(p, text)?;
            }
        }
    }
    Ok(())
}

fn write_file(p: &Path, s: &str) -> Result<()> {
    fs::write(p, s).with_context(|| format!("writing {}", p.display()))
}

fn estimate_line(e: &LyapunovEstimate) -> String {
    format!(
        "{:?}: L_N = {:.6} ± {:.2e} ({} samples)\n",
        e.method, e.value, e.stderr, e.samples
    )
}

fn check_lines(checks: &[Check]) -> String {
    checks
        .iter()
        .map(|c| {
            format!(
                "{} {} ({:.1} s): {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.seconds,
                c.detail
            )
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    let settings = Settings::load(cli.common)?;
    match cli.command {
        Command::Scan { refine } => {
            let cfg = settings.scan_config();
            let model = cfg.model()?;
            let (report, persistent) = if refine.is_empty() {
                (spectrum_scan(&cfg)?, None)
            } else {
                let mut levels = refine.clone();
                levels.push(cfg.grid);
                let p = gap_persistence(&cfg, &levels)?;
                let n = p.persistent.len();
                (p.finest, Some(n))
            };
            let radius = model.spectral_radius_bound();
            let contained = report.contained_in(radius);
            println!(
                "{} eigenvalues in [{:.6}, {:.6}], {} discarded by the boundary filter",
                report.eigenvalues.len(),
                report.edge_low,
                report.edge_high,
                report.discarded
            );
            println!("eps_gap = {:.3e}, {} interior gaps", report.eps_gap, report.gaps.len());
            for g in report.gaps.iter().filter(|g| g.width > 10.0 * report.eps_gap) {
                println!("  gap ({:.6}, {:.6}) width {:.4}", g.left, g.right, g.width);
            }
            if let Some(n) = persistent {
                println!("{n} persistent gaps across grids {refine:?} and {}", cfg.grid);
            }
            println!("note: {}", report.note);
            if let Some(p) = &settings.out {
                export(&report, settings.format()?.unwrap_or(Format::Csv), p)?;
            }
            Ok(contained)
        }
        Command::Edges => {
            let cfg = settings.scan_config();
            let e = edge_estimate(&cfg)?;
            let text = format!(
                "lambda = {}: E_low = {:.10}, |E_low/λ − min V| = {:.3e} ≤ {:.3e} + {:.3e}: {}\n",
                e.lambda,
                e.edge,
                e.deviation,
                e.bound,
                e.slack,
                if e.holds { "holds" } else { "VIOLATED" }
            );
            emit(&settings, &e, &text)?;
            Ok(e.holds)
        }
        Command::Lyapunov { energy, samples, ell } => {
            let cfg = settings.scan_config();
            let model = cfg.model()?;
            let energy = energy.or(settings.file.energy).unwrap_or(0.0);
            let samples = samples.or(settings.file.samples).unwrap_or(2000);
            let n = settings.n.unwrap_or(200);
            let sampler = Sampler::Kronecker { seed: settings.seed };
            let direct = lyapunov_direct(&model, energy, n, &sampler, samples);
            let mut text = estimate_line(&direct);
            let upper = LyapunovEstimate::upper_bound(&model, energy);
            let mut ok = direct.value <= upper;
            let mut out = vec![direct];
            if n % ell == 0 && n / ell >= 2 {
                let (ap, fallbacks) = lyapunov_avalanche(&model, energy, n, ell, &sampler, samples);
                text.push_str(&estimate_line(&ap));
                text.push_str(&format!("avalanche fallbacks: {fallbacks}\n"));
                ok &= ap.value <= upper;
                out.push(ap);
            }
            text.push_str(&format!("upper bound log(2 + λ‖V‖ + |E|) = {upper:.6}\n"));
            emit(&settings, &out, &text)?;
            Ok(ok)
        }
        Command::Ldt { energy, samples } => {
            let cfg = settings.scan_config();
            let model = cfg.model()?;
            let energy = energy.or(settings.file.energy).unwrap_or(0.0);
            let samples = samples.or(settings.file.samples).unwrap_or(2000).max(100);
            let n = settings.n.unwrap_or(100);
            let sv = s_value(&model, energy);
            let nf = n as f64;
            let thresholds: Vec<f64> = [0.3, 0.5, 0.7, 0.9].iter().map(|p| sv * nf.powf(*p)).collect();
            let stats = deviation_stats(
                &model,
                energy,
                n,
                &thresholds,
                &Sampler::Kronecker { seed: settings.seed },
                samples,
            );
            let mut text = format!("N = {n}, L_N = {:.6}\n", stats.n_l / nf);
            for (t, m) in stats.thresholds.iter().zip(&stats.measures) {
                text.push_str(&format!("  mes{{|log‖M_N‖ − N L_N| > {t:.3}}} = {m:.4}\n"));
            }
            emit(&settings, &stats, &text)?;
            Ok(true)
        }
        Command::Genericity { example, k } => {
            if example {
                let s = settings.s.unwrap_or(0.7);
                let opts = Example9Options {
                    seed: settings.seed,
                    ..Example9Options::default()
                };
                let rep = verify_example(s, k, &opts)?;
                let text = format!(
                    "s = {s}, K = {k}\n  (i) {}\n  (ii) {}\n  (iii) {} (worst bad fraction {:.4})\n  (iv) {} (worst bad fraction {:.4})\n  antipodal shift bad fraction {:.4} (not aggregated)\n  all: {}\n",
                    rep.condition_i,
                    rep.condition_ii,
                    rep.condition_iii.pass,
                    rep.condition_iii.worst_bad_fraction,
                    rep.condition_iv.pass,
                    rep.condition_iv.worst_bad_fraction,
                    rep.antipodal.bad_fraction,
                    rep.all_pass
                );
                emit(&settings, &rep, &text)?;
                Ok(rep.all_pass)
            } else {
                let c = resultant_closed_forms(settings.seed, 50);
                emit(&settings, &c, &check_lines(std::slice::from_ref(&c)))?;
                Ok(c.pass)
            }
        }
        Command::Levelset { points } => {
            let s = settings.s.unwrap_or(0.7);
            let lambda = settings.lambda.unwrap_or(100.0);
            let half = (settings.n.unwrap_or(41) / 2) as i64;
            let f = cosine_ground_state(s, lambda, half)?;
            let chart = build_chart(&f, &[0.02, 0.01], 1.0)?;
            let rep = chart_grid_check(&f, &chart, points, 1e-12);
            let ok = rep.passes(1e-10);
            let text = format!(
                "chart at (0.02, 0.01) from the minimum: μ = {:.4e}, r = {:.3e}, r' = {:.3e}\n  {} points, max residual {:.2e}, g-bound failures {}, worst |g|/bound {:.3}\n",
                chart.mu,
                chart.r,
                chart.r_prime,
                rep.points,
                rep.max_residual,
                rep.bound_failures,
                rep.worst_bound_ratio
            );
            emit(&settings, &rep, &text)?;
            Ok(ok)
        }
        Command::Verify => {
            let suite = run_suite(settings.seed);
            emit(&settings, &suite, &check_lines(&suite.checks))?;
            Ok(suite.all_pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! digitfrac: build missing-digit systems, certify Fourier l1-dimension
//! bounds, count rational points on and near the fractal, and run metric
//! Diophantine approximation experiments.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 3 when a
//! budget or state cap is exceeded.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use digitfrac::approx::{
    gallagher_sum_mu, intrinsic_hits, khinchin_sum_lebesgue, khinchin_sum_mu, limsup_fraction,
    Mode, Psi,
};
use digitfrac::counting::{count_near, slab_system, CountQuery, CountingError};
use digitfrac::fourier::{fourier_coefficient, l1_lower_bound, l1_partial_sum, FourierError};
use digitfrac::rat::rat_to_f64;
use digitfrac::MeasuresError;

use digitfrac_cli::config::{CommandSpec, ExperimentConfig};
use digitfrac_cli::emit::{fmt_f64, write_csv, Meta};
use digitfrac_cli::sysload::{load_system, system_hash};
use digitfrac_cli::{parse_delta, parse_list, parse_rat_list};

#[derive(Parser)]
#[command(name = "digitfrac", version, about)]
struct Cli {
    /// Worker threads (default: DIGITFRAC_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every randomized experiment.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Run from a JSON experiment config instead of a subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a digit system and report whether it is proper.
    Validate {
        #[arg(long)]
        system: String,
    },
    /// Print the Hausdorff dimension log(#D)/log(b).
    Dim {
        #[arg(long)]
        system: String,
    },
    /// Certified Fourier coefficient at one integer frequency.
    #[command(name = "fourier-coeff")]
    FourierCoeff {
        #[arg(long)]
        system: String,
        /// Comma-separated integer frequency vector.
        #[arg(long)]
        xi: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// l1 partial sums over lattice boxes, one row per Q.
    L1sum {
        #[arg(long)]
        system: String,
        #[arg(long = "q-values")]
        q_values: String,
        #[arg(long = "tol-per-term", default_value_t = 1e-12)]
        tol_per_term: f64,
    },
    /// Certified lower bound on the Fourier l1 dimension.
    L1bound {
        #[arg(long)]
        system: String,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        grid: f64,
    },
    /// Exact rational-point counts near the fractal.
    Count {
        #[arg(long)]
        system: String,
        /// Comma-separated height bounds.
        #[arg(long = "Q")]
        q_values: String,
        /// Literal rational ("0", "1/7") or power form ("Q^-0.5", "2*Q^-1").
        #[arg(long)]
        delta: String,
    },
    /// Emit the slab system with the given parameters as JSON.
    Slab {
        #[arg(long)]
        base: u32,
        /// Digits kept in the last coordinate.
        #[arg(long)]
        digits: u32,
        #[arg(long)]
        dim: usize,
    },
    /// Simultaneous approximation sums or Monte Carlo window fractions.
    Khinchin {
        #[arg(long)]
        system: String,
        /// Family and parameter, e.g. power_t:2 or constant:0.3.
        #[arg(long)]
        psi: String,
        /// Comma-separated inhomogeneous shift (default zero).
        #[arg(long)]
        y: Option<String>,
        #[arg(long = "n-max")]
        n_max: Option<u64>,
        /// "mu" (exact measure sums) or "lebesgue" (reference volumes).
        #[arg(long, default_value = "mu")]
        measure: String,
        /// Dyadic window range "j0:j1" for Monte Carlo fractions.
        #[arg(long = "mc-windows")]
        mc_windows: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Multiplicative approximation brackets or window fractions.
    Gallagher {
        #[arg(long)]
        system: String,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        y: Option<String>,
        #[arg(long = "n-max")]
        n_max: Option<u64>,
        #[arg(long = "mc-windows")]
        mc_windows: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Intrinsic approximation witnesses on the fractal.
    Intrinsic {
        #[arg(long)]
        system: String,
        /// Comma-separated rational coordinates.
        #[arg(long)]
        x: String,
        #[arg(long)]
        tau: f64,
        #[arg(long = "Q")]
        q_max: u64,
    },
}

enum CliError {
    Usage(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Budget(m) => m,
        }
    }
}

fn from_measures(e: MeasuresError) -> CliError {
    match e {
        MeasuresError::StateSpaceExceeded
        | MeasuresError::DenominatorTooLarge
        | MeasuresError::RegionBudget => CliError::Budget(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn from_fourier(e: FourierError) -> CliError {
    match e {
        FourierError::TolTooTight { .. } | FourierError::BudgetExceeded { .. } => {
            CliError::Budget(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    }
}

fn from_counting(e: CountingError) -> CliError {
    match e {
        CountingError::DimTooLarge(_) => CliError::Budget(e.to_string()),
        CountingError::Measures(m) => from_measures(m),
        _ => CliError::Usage(e.to_string()),
    }
}

fn from_approx(e: digitfrac::approx::ApproxError) -> CliError {
    match e {
        digitfrac::approx::ApproxError::Measures(m) => from_measures(m),
        other => CliError::Usage(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (system, spec, seed, threads, output) = match (&cli.config, cli.command) {
        (Some(path), None) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config: {e}");
                    return ExitCode::from(2);
                }
            };
            let cfg = match ExperimentConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: bad config: {e}");
                    return ExitCode::from(2);
                }
            };
            (
                cfg.system,
                cfg.command,
                cfg.seed,
                cli.threads.or(cfg.threads),
                cli.output.or(cfg.output.map(PathBuf::from)),
            )
        }
        (None, Some(cmd)) => {
            let (system, spec) = to_spec(cmd);
            (system, spec, cli.seed, cli.threads, cli.output)
        }
        _ => {
            eprintln!("error: provide exactly one of --config or a subcommand");
            return ExitCode::from(2);
        }
    };

    let threads = threads
        .or_else(|| {
            std::env::var("DIGITFRAC_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match execute(&system, &spec, seed, output.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn to_spec(cmd: Cmd) -> (String, CommandSpec) {
    match cmd {
        Cmd::Validate { system } => (system, CommandSpec::Validate),
        Cmd::Dim { system } => (system, CommandSpec::Dim),
        Cmd::FourierCoeff { system, xi, tol } => (system, CommandSpec::FourierCoeff { xi, tol }),
        Cmd::L1sum {
            system,
            q_values,
            tol_per_term,
        } => (
            system,
            CommandSpec::L1sum {
                q_values,
                tol_per_term,
            },
        ),
        Cmd::L1bound {
            system,
            level,
            grid,
        } => (system, CommandSpec::L1bound { level, grid }),
        Cmd::Count {
            system,
            q_values,
            delta,
        } => (system, CommandSpec::Count { q_values, delta }),
        Cmd::Slab { base, digits, dim } => (
            String::new(),
            CommandSpec::Slab { base, digits, dim },
        ),
        Cmd::Khinchin {
            system,
            psi,
            y,
            n_max,
            measure,
            mc_windows,
            samples,
        } => (
            system,
            CommandSpec::Khinchin {
                psi,
                y,
                n_max,
                measure,
                mc_windows,
                samples,
            },
        ),
        Cmd::Gallagher {
            system,
            psi,
            y,
            n_max,
            mc_windows,
            samples,
        } => (
            system,
            CommandSpec::Gallagher {
                psi,
                y,
                n_max,
                mc_windows,
                samples,
            },
        ),
        Cmd::Intrinsic {
            system,
            x,
            tau,
            q_max,
        } => (system, CommandSpec::Intrinsic { x, tau, q_max }),
    }
}

fn write_output(output: Option<&std::path::Path>, content: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
        None => {
            std::io::stdout()
                .write_all(content)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(())
        }
    }
}

fn parse_windows(s: &str) -> Result<(u32, u32), CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("expected j0:j1, got '{s}'")))?;
    let j0: u32 = a
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad window start '{a}'")))?;
    let j1: u32 = b
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad window end '{b}'")))?;
    if j0 > j1 || j1 >= 63 {
        return Err(CliError::Usage("window range out of order".into()));
    }
    Ok((j0, j1))
}

fn execute(
    system: &str,
    spec: &CommandSpec,
    seed: u64,
    output: Option<&std::path::Path>,
) -> Result<(), CliError> {
    // The slab command builds its system from parameters.
    if let CommandSpec::Slab { base, digits, dim } = spec {
        let sys = slab_system(*base, *digits, *dim).map_err(from_counting)?;
        return write_output(output, sys.to_json().as_bytes());
    }

    let sys = load_system(system).map_err(CliError::Usage)?;
    let meta = |command: &str, notes: Vec<String>| Meta {
        command: command.into(),
        system_hash: system_hash(&sys),
        seed,
        notes,
    };

    match spec {
        CommandSpec::Slab { .. } => unreachable!(),
        CommandSpec::Validate => {
            let text = format!("ok proper={}\n", sys.is_proper());
            write_output(output, text.as_bytes())
        }
        CommandSpec::Dim => {
            let text = format!(
                "dim_H = {}\nproper = {}\n",
                sys.hausdorff_dim(),
                sys.is_proper()
            );
            write_output(output, text.as_bytes())
        }
        CommandSpec::FourierCoeff { xi, tol } => {
            let freq: Vec<i64> = parse_list(xi).map_err(CliError::Usage)?;
            let c = fourier_coefficient(&sys, &freq, *tol).map_err(from_fourier)?;
            let doc = json!({
                "meta": meta("fourier-coeff", vec![]).json_value(),
                "xi": freq,
                "re": c.value.re,
                "im": c.value.im,
                "abs": c.value.norm(),
                "err": c.err,
            });
            write_output(output, format!("{:#}\n", doc).as_bytes())
        }
        CommandSpec::L1sum {
            q_values,
            tol_per_term,
        } => {
            let qs: Vec<u64> = parse_list(q_values).map_err(CliError::Usage)?;
            let mut rows = Vec::new();
            for q in qs {
                let s = l1_partial_sum(&sys, q, *tol_per_term).map_err(from_fourier)?;
                rows.push(vec![q.to_string(), fmt_f64(s.value)]);
            }
            let m = meta("l1sum", vec![format!("tol_per_term={tol_per_term}")]);
            let mut buf = Vec::new();
            write_csv(&mut buf, &m, &["Q", "partial_sum"], &rows)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(output, &buf)
        }
        CommandSpec::L1bound { level, grid } => {
            let r = l1_lower_bound(&sys, *level, *grid).map_err(from_fourier)?;
            let doc = json!({
                "meta": meta("l1bound", vec![]).json_value(),
                "level": r.level,
                "grid_step": r.grid_step,
                "grid_max": r.grid_max,
                "lipschitz": r.lipschitz,
                "certified_sup": r.certified_sup,
                "bound": r.bound,
                "vacuous": r.vacuous,
            });
            write_output(output, format!("{:#}\n", doc).as_bytes())
        }
        CommandSpec::Count { q_values, delta } => {
            let qs: Vec<u64> = parse_list(q_values).map_err(CliError::Usage)?;
            let mut rows = Vec::new();
            for q_max in qs {
                let d = parse_delta(delta, q_max).map_err(CliError::Usage)?;
                let r = count_near(
                    &sys,
                    &CountQuery {
                        q_max,
                        delta: d.clone(),
                    },
                )
                .map_err(from_counting)?;
                rows.push(vec![
                    q_max.to_string(),
                    d.to_string(),
                    r.count.to_string(),
                    fmt_f64(r.heuristic),
                    r.ratio.map(fmt_f64).unwrap_or_default(),
                    r.exact.to_string(),
                ]);
            }
            let m = meta("count", vec![format!("delta_spec={delta}")]);
            let mut buf = Vec::new();
            write_csv(
                &mut buf,
                &m,
                &["Q", "delta", "count", "heuristic", "ratio", "exact"],
                &rows,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(output, &buf)
        }
        CommandSpec::Khinchin {
            psi,
            y,
            n_max,
            measure,
            mc_windows,
            samples,
        } => {
            let psi = Psi::parse(psi).map_err(from_approx)?;
            let shift = shift_vec(y.as_deref(), sys.dim())?;
            if let Some(wspec) = mc_windows {
                return run_windows(
                    &sys, &psi, &shift, wspec, Mode::Sim, *samples, seed, "khinchin", output,
                );
            }
            let n_max = n_max.ok_or_else(|| {
                CliError::Usage("khinchin needs --n-max or --mc-windows".into())
            })?;
            match measure.as_str() {
                "mu" => {
                    let run =
                        khinchin_sum_mu(&sys, &psi, &shift, n_max).map_err(from_approx)?;
                    let rows: Vec<Vec<String>> = run
                        .rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.n.to_string(),
                                fmt_f64(r.term.to_f64()),
                                fmt_f64(r.partial.to_f64()),
                            ]
                        })
                        .collect();
                    let m = meta(
                        "khinchin",
                        vec![
                            format!("psi={}", psi.label()),
                            format!("measure=mu"),
                            format!("clipped={}", run.clipped.len()),
                        ],
                    );
                    let mut buf = Vec::new();
                    write_csv(&mut buf, &m, &["n", "term", "partial_sum"], &rows)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    write_output(output, &buf)
                }
                "lebesgue" => {
                    let rows_data = khinchin_sum_lebesgue(&psi, sys.dim(), n_max);
                    let rows: Vec<Vec<String>> = rows_data
                        .iter()
                        .map(|(n, t, p)| vec![n.to_string(), fmt_f64(*t), fmt_f64(*p)])
                        .collect();
                    let m = meta(
                        "khinchin",
                        vec![format!("psi={}", psi.label()), "measure=lebesgue".into()],
                    );
                    let mut buf = Vec::new();
                    write_csv(&mut buf, &m, &["n", "term", "partial_sum"], &rows)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    write_output(output, &buf)
                }
                other => Err(CliError::Usage(format!(
                    "unknown measure '{other}' (mu or lebesgue)"
                ))),
            }
        }
        CommandSpec::Gallagher {
            psi,
            y,
            n_max,
            mc_windows,
            samples,
        } => {
            let psi = Psi::parse(psi).map_err(from_approx)?;
            let shift = shift_vec(y.as_deref(), sys.dim())?;
            if let Some(wspec) = mc_windows {
                return run_windows(
                    &sys, &psi, &shift, wspec, Mode::Mult, *samples, seed, "gallagher", output,
                );
            }
            let n_max = n_max.ok_or_else(|| {
                CliError::Usage("gallagher needs --n-max or --mc-windows".into())
            })?;
            let run = gallagher_sum_mu(&sys, &psi, &shift, n_max).map_err(from_approx)?;
            let rows: Vec<Vec<String>> = run
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_f64(r.lower.to_f64()),
                        fmt_f64(r.upper.to_f64()),
                        fmt_f64(r.lower_partial.to_f64()),
                        fmt_f64(r.upper_partial.to_f64()),
                    ]
                })
                .collect();
            let m = meta(
                "gallagher",
                vec![
                    format!("psi={}", psi.label()),
                    format!("clipped={}", run.clipped.len()),
                ],
            );
            let mut buf = Vec::new();
            write_csv(
                &mut buf,
                &m,
                &[
                    "n",
                    "lower_term",
                    "upper_term",
                    "lower_partial_sum",
                    "upper_partial_sum",
                ],
                &rows,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(output, &buf)
        }
        CommandSpec::Intrinsic { x, tau, q_max } => {
            let point = parse_rat_list(x).map_err(CliError::Usage)?;
            let hits = intrinsic_hits(&sys, &point, *tau, *q_max).map_err(from_approx)?;
            let rows: Vec<Vec<String>> = hits
                .iter()
                .map(|h| {
                    vec![
                        h.n.to_string(),
                        h.a.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(";"),
                        fmt_f64(h.dist),
                    ]
                })
                .collect();
            let m = meta("intrinsic", vec![format!("tau={tau}")]);
            let mut buf = Vec::new();
            write_csv(&mut buf, &m, &["n", "a", "dist"], &rows)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(output, &buf)
        }
    }
}

fn shift_vec(y: Option<&str>, dim: usize) -> Result<Vec<f64>, CliError> {
    match y {
        None => Ok(vec![0.0; dim]),
        Some(s) => {
            let v = parse_rat_list(s).map_err(CliError::Usage)?;
            if v.len() != dim {
                return Err(CliError::Usage(format!(
                    "shift has {} coordinates, system dimension is {dim}",
                    v.len()
                )));
            }
            Ok(v.iter().map(rat_to_f64).collect())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_windows(
    sys: &digitfrac::DigitSystem,
    psi: &Psi,
    shift: &[f64],
    wspec: &str,
    mode: Mode,
    samples: u64,
    seed: u64,
    cmd: &str,
    output: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let (j0, j1) = parse_windows(wspec)?;
    let mut rows = Vec::new();
    for j in j0..=j1 {
        let n0 = 1u64 << j;
        let n1 = 1u64 << (j + 1);
        let f = limsup_fraction(sys, psi, shift, n0, n1, mode, samples, seed)
            .map_err(from_approx)?;
        rows.push(vec![
            format!("{n0}:{n1}"),
            fmt_f64(f.fraction),
            fmt_f64(f.ci_lo),
            fmt_f64(f.ci_hi),
        ]);
    }
    let m = Meta {
        command: format!("{cmd}-mc"),
        system_hash: system_hash(sys),
        seed,
        notes: vec![format!("psi={}", psi.label()), format!("samples={samples}")],
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, &m, &["window", "fraction", "ci_lo", "ci_hi"], &rows)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    write_output(output, &buf)
}

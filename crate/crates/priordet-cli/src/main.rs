//! Command-line front end: evaluates risks, runs estimators, computes
//! divergences and margin profiles, verifies the two-hypothesis construction,
//! and drives the Monte Carlo experiments. Results land in an output
//! directory together with a `manifest.json` naming every file; stdout
//! carries the primary JSON result and nothing nondeterministic.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use priordet::density::{sample_labeled, sample_unlabeled};
use priordet::detector::risk_report;
use priordet::divergences::{divergence_report, DivergenceKind};
use priordet::estimators::{mle_labeled, mle_unlabeled, EstimateMode};
use priordet::experiments::{
    boundary_adapted_grids, concentration_probe, fit_rate, lipschitz_probe,
    run_excess_risk_curve, ExperimentConfig, MarginExponent,
};
use priordet::lowerbound::{
    construct_two_hypotheses, kl_budget_check, lower_bound_constants, minimax_floor,
    symmetric_difference,
};
use priordet::margin::{default_t_grid, fit_margin_exponent};

use config::{FileConfig, ScenarioArgs};
use output::{config_hash, OutputWriter};

/// CLI failure modes mapped to exit codes: usage/config errors exit 2,
/// numeric or I/O failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<priordet::Error> for CliError {
    fn from(e: priordet::Error) -> Self {
        match &e {
            priordet::Error::InvalidParameter { .. } | priordet::Error::EmptyInput(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "priordet",
    version,
    about = "Detectors from known class-conditional densities and estimated priors"
)]
struct Cli {
    /// JSON config file; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for result files and the run manifest.
    #[arg(long, global = true, default_value = "priordet-out")]
    out: PathBuf,
    /// Master seed; echoed in the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo loops (0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the risk of plugging a given prior into the detector.
    Risk {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Prior plugged into the detector (defaults to the true prior).
        #[arg(long)]
        q_used: Option<f64>,
    },
    /// Sample a dataset and estimate the prior by trimmed MLE.
    Estimate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Sample size.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compute divergences between the class-conditional densities.
    Divergence {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated kinds: tv, hellinger_sq, chi_sq.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
    },
    /// Probe the margin probability over a grid and fit the exponent.
    Margin {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated probe grid.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
    },
    /// Build and verify the two-hypothesis construction.
    Lowerbound {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        /// Sample size the instance is tuned to.
        #[arg(long)]
        n: Option<usize>,
        /// Sample sizes to tabulate the floor at.
        #[arg(long, value_delimiter = ',')]
        floor_ns: Option<Vec<usize>>,
    },
    /// Monte Carlo excess-risk curve over a sample-size grid plus rate fit.
    Rates {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        /// Margin exponent for the rate fit ("inf" for the flat case).
        #[arg(long)]
        alpha: Option<String>,
        /// Floor constant for the theoretical overlay column.
        #[arg(long)]
        overlay_c_prime: Option<f64>,
    },
    /// Probe the prior-Lipschitz constant of the regression function.
    Lipschitz {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trim bounds to probe (defaults to the scenario theta).
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
    },
    /// Empirical tail probabilities of the estimator at one sample size.
    Concentration {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Labeled,
    Unlabeled,
}

impl From<ModeArg> for EstimateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Labeled => EstimateMode::Labeled,
            ModeArg::Unlabeled => EstimateMode::Unlabeled,
        }
    }
}

const DEFAULT_SEED: u64 = 42;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    init_threads(cli.threads)?;
    let mut writer = OutputWriter::create(&cli.out)?;

    let effective = match &cli.command {
        Command::Risk { scenario, q_used } => {
            let scenario = scenario.resolve(&file)?;
            let q_used = q_used
                .or(file.risk.as_ref().and_then(|s| s.q_used))
                .unwrap_or(scenario.q());
            let report = risk_report(&scenario, q_used)?;
            let doc = serde_json::to_value(&report).unwrap();
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            writer.write_json("risk.json", &report)?;
            writer.write_text(
                "risk.csv",
                &format!(
                    "{}\n{}\n",
                    priordet::RiskReport::csv_header(),
                    report.csv_row()
                ),
            )?;
            serde_json::json!({
                "command": "risk",
                "scenario": config::scenario_value(&scenario),
                "q_used": q_used,
                "seed": seed,
            })
        }
        Command::Estimate { scenario, mode, n } => {
            let scenario = scenario.resolve(&file)?;
            let section = file.estimate.clone().unwrap_or_default();
            let mode: EstimateMode = mode
                .map(EstimateMode::from)
                .or(section.mode)
                .unwrap_or(EstimateMode::Labeled);
            let n = n.or(section.n).unwrap_or(1000);
            let result = match mode {
                EstimateMode::Labeled => {
                    let ds = sample_labeled(&scenario, n, seed)?;
                    mle_labeled(&ds.ys, scenario.theta())?
                }
                EstimateMode::Unlabeled => {
                    let ds = sample_unlabeled(&scenario, n, seed)?;
                    mle_unlabeled(scenario.pair(), &ds, scenario.theta(), 1e-9)?
                }
            };
            println!("{}", serde_json::to_string_pretty(&result).unwrap());
            writer.write_json("estimate.json", &result)?;
            serde_json::json!({
                "command": "estimate",
                "scenario": config::scenario_value(&scenario),
                "mode": mode,
                "n": n,
                "seed": seed,
            })
        }
        Command::Divergence { scenario, kinds } => {
            let scenario = scenario.resolve(&file)?;
            let kinds = kinds
                .clone()
                .or(file.divergence.as_ref().and_then(|s| s.kinds.clone()))
                .unwrap_or_else(|| vec!["tv".into(), "hellinger_sq".into(), "chi_sq".into()]);
            let mut reports = Vec::new();
            for kind in &kinds {
                let kind = match kind.as_str() {
                    "tv" => DivergenceKind::Tv,
                    "hellinger_sq" => DivergenceKind::HellingerSq,
                    "chi_sq" => DivergenceKind::ChiSq,
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown divergence kind: {other}"
                        )))
                    }
                };
                reports.push(divergence_report(config::pair_of(&scenario), kind)?);
            }
            println!("{}", serde_json::to_string_pretty(&reports).unwrap());
            writer.write_json("divergences.json", &reports)?;
            serde_json::json!({
                "command": "divergence",
                "scenario": config::scenario_value(&scenario),
                "kinds": kinds,
                "seed": seed,
            })
        }
        Command::Margin { scenario, t_grid } => {
            let scenario = scenario.resolve(&file)?;
            let grid = t_grid
                .clone()
                .or(file.margin.as_ref().and_then(|s| s.t_grid.clone()))
                .unwrap_or_else(default_t_grid);
            let profile = fit_margin_exponent(&scenario, &grid)?;
            let summary = serde_json::json!({
                "alpha_hat": finite_or_null(profile.alpha_hat),
                "c0_hat": profile.c0_hat,
                "r2": profile.r_squared,
                "infinite": profile.infinite,
                "gap_c": profile.gap_c,
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            writer.write_text("margin.csv", &profile.to_csv())?;
            writer.write_json("margin_summary.json", &summary)?;
            serde_json::json!({
                "command": "margin",
                "scenario": config::scenario_value(&scenario),
                "t_grid": grid,
                "seed": seed,
            })
        }
        Command::Lowerbound {
            kappa,
            c,
            n,
            floor_ns,
        } => {
            let section = file.lowerbound.clone().unwrap_or_default();
            let kappa = kappa.or(section.kappa).unwrap_or(2.0);
            let c = c.or(section.c).unwrap_or(0.01);
            let n = n.or(section.n).unwrap_or(100);
            let floor_ns = floor_ns
                .clone()
                .or(section.floor_ns)
                .unwrap_or_else(|| vec![100, 1_000, 10_000]);
            let inst = construct_two_hypotheses(kappa, c, n)?;
            let profile =
                fit_margin_exponent(&inst.scenario(0, 0.1)?, &inst.margin_grid(0))?;
            let consts = lower_bound_constants(inst.alpha, profile.c0_hat, inst.tau_star());
            let (kl, budget) = kl_budget_check(&inst);
            let d_delta = symmetric_difference(&inst)?;
            let floors: Vec<serde_json::Value> = floor_ns
                .iter()
                .map(|&m| {
                    serde_json::json!({
                        "n": m,
                        "floor": minimax_floor(m, inst.alpha, consts.c_prime),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "instance": &inst,
                "kl": {"value": kl, "budget": budget},
                "d_delta": d_delta,
                "constants": consts,
                "margin_fit": {
                    "alpha_hat": profile.alpha_hat,
                    "c0_hat": profile.c0_hat,
                    "r2": profile.r_squared,
                },
                "floors": floors,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            writer.write_json("lowerbound.json", &doc)?;
            serde_json::json!({
                "command": "lowerbound",
                "kappa": kappa,
                "c": c,
                "n": n,
                "floor_ns": floor_ns,
                "seed": seed,
            })
        }
        Command::Rates {
            scenario,
            mode,
            n_grid,
            trials,
            alpha,
            overlay_c_prime,
        } => {
            let scenario = scenario.resolve(&file)?;
            let section = file.rates.clone().unwrap_or_default();
            let mode: EstimateMode = mode
                .map(EstimateMode::from)
                .or(section.mode)
                .unwrap_or(EstimateMode::Labeled);
            let n_grid = n_grid
                .clone()
                .or(section.n_grid)
                .unwrap_or_else(priordet::experiments::default_n_grid);
            let trials = trials
                .or(section.trials)
                .unwrap_or(priordet::experiments::DEFAULT_TRIALS);
            let exponent = match alpha.as_deref() {
                Some("inf") | Some("infinite") => MarginExponent::Infinite,
                Some(v) => MarginExponent::Finite(v.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("alpha must be a number or 'inf', got {v}"))
                })?),
                None => MarginExponent::Finite(section.alpha.unwrap_or(1.0)),
            };
            let overlay_c_prime = overlay_c_prime.or(section.overlay_c_prime);
            let config = ExperimentConfig {
                scenario: scenario.clone(),
                mode,
                n_grid,
                trials,
                master_seed: seed,
            };
            let curve = run_excess_risk_curve(&config)?;
            let fit = fit_rate(&curve, exponent)?;
            println!("{}", serde_json::to_string_pretty(&fit).unwrap());
            writer.write_text("rates.csv", &curve.to_csv())?;
            writer.write_json("rate_fit.json", &fit)?;
            emit_plot_data(&mut writer, &curve, exponent, overlay_c_prime)?;
            serde_json::json!({
                "command": "rates",
                "scenario": config::scenario_value(&scenario),
                "mode": mode,
                "n_grid": config.n_grid,
                "trials": trials,
                "seed": seed,
            })
        }
        Command::Lipschitz { scenario, thetas } => {
            let scenario = scenario.resolve(&file)?;
            let thetas = thetas
                .clone()
                .or(file.lipschitz.as_ref().and_then(|s| s.thetas.clone()))
                .unwrap_or_else(|| vec![scenario.theta()]);
            let mut probes = Vec::new();
            for &theta in &thetas {
                let bound = 1.0 / (4.0 * theta * (1.0 - theta));
                let (x_grid, q_grid) = boundary_adapted_grids(scenario.pair(), theta)?;
                let sup = lipschitz_probe(scenario.pair(), theta, &x_grid, &q_grid)?;
                probes.push(serde_json::json!({
                    "theta": theta,
                    "bound": bound,
                    "probe_sup": sup,
                    "ratio": sup / bound,
                }));
            }
            let doc = serde_json::Value::Array(probes);
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            writer.write_json("lipschitz.json", &doc)?;
            serde_json::json!({
                "command": "lipschitz",
                "scenario": config::scenario_value(&scenario),
                "thetas": thetas,
                "seed": seed,
            })
        }
        Command::Concentration {
            scenario,
            mode,
            n,
            eps_grid,
            trials,
        } => {
            let scenario = scenario.resolve(&file)?;
            let section = file.concentration.clone().unwrap_or_default();
            let mode: EstimateMode = mode
                .map(EstimateMode::from)
                .or(section.mode)
                .unwrap_or(EstimateMode::Labeled);
            let n = n.or(section.n).unwrap_or(400);
            let eps_grid = eps_grid.clone().or(section.eps_grid).unwrap_or_else(|| {
                vec![0.0, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1]
            });
            let trials = trials.or(section.trials).unwrap_or(2000);
            let table = concentration_probe(&scenario, mode, n, &eps_grid, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&table).unwrap());
            writer.write_text("concentration.csv", &table.to_csv())?;
            writer.write_json("concentration_summary.json", &table)?;
            serde_json::json!({
                "command": "concentration",
                "scenario": config::scenario_value(&scenario),
                "mode": mode,
                "n": n,
                "eps_grid": eps_grid,
                "trials": trials,
                "seed": seed,
            })
        }
    };

    writer.finish(&config_hash(&effective), seed)?;
    Ok(())
}

/// Plot-ready CSV (curve plus theoretical overlay columns) and a companion
/// JSON with the overlay series.
fn emit_plot_data(
    writer: &mut OutputWriter,
    curve: &priordet::ExcessRiskCurve,
    exponent: MarginExponent,
    overlay_c_prime: Option<f64>,
) -> Result<(), CliError> {
    let ns: Vec<usize> = curve.points.iter().map(|p| p.n).collect();
    let bound_thm2: Vec<f64> = ns.iter().map(|&n| 0.5 * (n as f64).powf(-0.5)).collect();
    let floor_thm3: Option<Vec<f64>> = match (overlay_c_prime, exponent) {
        (Some(cp), MarginExponent::Finite(alpha)) => Some(
            ns.iter()
                .map(|&n| minimax_floor(n, alpha, cp))
                .collect(),
        ),
        _ => None,
    };
    let mut csv = String::from("n,mean_excess,stderr,bound_thm2");
    if floor_thm3.is_some() {
        csv.push_str(",floor_thm3");
    }
    csv.push('\n');
    for (i, p) in curve.points.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}",
            p.n, p.mean_excess, p.stderr, bound_thm2[i]
        ));
        if let Some(f) = &floor_thm3 {
            csv.push_str(&format!(",{}", f[i]));
        }
        csv.push('\n');
    }
    writer.write_text("plot_data.csv", &csv)?;
    writer.write_json(
        "plot_overlays.json",
        &serde_json::json!({
            "n": ns,
            "bound_thm2": bound_thm2,
            "floor_thm3": floor_thm3,
        }),
    )?;
    Ok(())
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

#[cfg(feature = "parallel")]
fn init_threads(threads: usize) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: usize) -> Result<(), CliError> {
    Ok(())
}

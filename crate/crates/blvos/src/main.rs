//! Command-line frontend: reproducible experiments over the BL-VOS multiplier
//! model with machine-readable reports.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use blvos::circuit::{
    build_multiplier, dump_netlist, validate, BlockTag, MultiplierSpec, Structure,
};
use blvos::config::{config_hash, ModelConfig};
use blvos::engine::{Multiplier, PairedMultiplier, TabulatedMultiplier};
use blvos::explore::{
    enumerate_space, evaluate_candidates, pareto_front, select, Constraint, Objective, Selection,
};
use blvos::imgbench::{load_pgm, run_app, save_pgm, App};
use blvos::metrics::{characterize_logged, ErrorReport, SamplePlan};
use blvos::reliability::{
    aged_characterize, aged_delay_increment, pv_trials, AgedClocking, PvPlan,
};
use blvos::report::{csv_line, Report};
use blvos::timesim::{tabulate_reset, SimMode, TimedNetlist};
use blvos::volt::Vdd;
use blvos::Error;

#[derive(Parser)]
#[command(name = "blvos", version, about = "Voltage-overscaled approximate multiplier laboratory")]
struct Cli {
    /// Master seed recorded in every report.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (0 = all cores). Results never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// JSON model-table override file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Operand width in bits.
    #[arg(long, default_value_t = 8)]
    n: u32,
    /// Lower-part width in bits (0 < k < n).
    #[arg(long, default_value_t = 4)]
    k: u32,
    /// blvos0 | blvos1 | blvos2 | blvos3 | blvos4
    #[arg(long, default_value = "blvos0")]
    structure: String,
    /// "nominal" or an approximate level such as 0.55.
    #[arg(long, default_value = "nominal")]
    vdd: String,
    /// Remove the least-significant product columns (4 when no value given).
    #[arg(long, value_name = "COLS", num_args = 0..=1, default_missing_value = "4")]
    truncate: Option<u32>,
    /// Power-gated sub-products, e.g. --gate-blocks ll,hl
    #[arg(long, value_delimiter = ',', value_name = "BLOCKS")]
    gate_blocks: Vec<String>,
}

#[derive(Args, Clone)]
struct PlanArgs {
    /// Sample count (default 10,000 for n ≤ 8 else 1,000,000).
    #[arg(long)]
    samples: Option<u64>,
    /// reset | paired
    #[arg(long, default_value = "paired")]
    mode: String,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the error metrics of one configuration.
    Characterize {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// JSON report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a one-row CSV projection.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the raw (a, b, exact, approx) sample log.
        #[arg(long)]
        log_samples: Option<PathBuf>,
    },
    /// Sweep (structure, k, voltage), extract the Pareto front and select
    /// against constraints.
    Explore {
        /// Operand width in bits.
        #[arg(long, default_value_t = 8)]
        n: u32,
        /// Lower-part widths (defaults: 2,4,6 for n ≤ 8; 4,8,12 otherwise).
        #[arg(long, value_delimiter = ',')]
        k_set: Vec<u32>,
        /// Structures to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [
            "blvos1".to_string(), "blvos2".to_string(), "blvos3".to_string(), "blvos4".to_string()
        ])]
        structures: Vec<String>,
        /// Approximate voltage levels to sweep (defaults to all configured).
        #[arg(long, value_delimiter = ',')]
        voltages: Vec<f64>,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        max_mred: Option<f64>,
        #[arg(long)]
        max_nmed: Option<f64>,
        #[arg(long)]
        max_med: Option<f64>,
        /// Relative energy budget vs the exact baseline.
        #[arg(long)]
        energy_budget: Option<f64>,
        /// min-energy | min-mred
        #[arg(long, default_value = "min-energy")]
        objective: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep table, one row per design point.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Delay degradation and error drift after years of stress.
    Age {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 10.0)]
        years: f64,
        /// rescaled | design-time sampling clock for the aged run.
        #[arg(long, default_value = "rescaled")]
        clocking: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Process-variation Monte Carlo over gate delays.
    Pv {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// Per-gate relative delay sigma (3σ = 10% at the default).
        #[arg(long, default_value_t = 0.0333)]
        sigma: f64,
        #[arg(long, default_value_t = 5000)]
        trials: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial metric log CSV.
        #[arg(long)]
        trial_log: Option<PathBuf>,
    },
    /// Run an image application through the simulated multiplier.
    Image {
        #[command(flatten)]
        spec: SpecArgs,
        /// sharpen | smooth
        #[arg(long)]
        app: String,
        /// Input PGM (P2 or P5, maxval 255).
        #[arg(long)]
        input: PathBuf,
        /// reset (tabulated) | paired
        #[arg(long, default_value = "reset")]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Save the approximate output image.
        #[arg(long)]
        save_output: Option<PathBuf>,
        /// Save the exact-pipeline reference image.
        #[arg(long)]
        save_reference: Option<PathBuf>,
    },
    /// Print the gate-level netlist of a configuration.
    DumpNetlist {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Capping the pool must happen before any parallel work; a failure
        // here only means a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn parse_vdd(s: &str) -> Result<Vdd, CliError> {
    if s.eq_ignore_ascii_case("nominal") {
        Ok(Vdd::Nominal)
    } else {
        s.parse::<f64>()
            .map(Vdd::Level)
            .map_err(|_| usage(format!("--vdd must be `nominal` or a voltage, got `{s}`")))
    }
}

fn parse_mode(s: &str) -> Result<SimMode, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "reset" => Ok(SimMode::Reset),
        "paired" => Ok(SimMode::Paired),
        other => Err(usage(format!("--mode must be reset or paired, got `{other}`"))),
    }
}

fn parse_gated(blocks: &[String]) -> Result<BTreeSet<BlockTag>, CliError> {
    let mut out = BTreeSet::new();
    for b in blocks {
        let tag = match b.to_ascii_lowercase().as_str() {
            "" => continue,
            "ll" => BlockTag::Ll,
            "hl" => BlockTag::Hl,
            "lh" => BlockTag::Lh,
            other => {
                return Err(usage(format!(
                    "--gate-blocks accepts ll, hl, lh; got `{other}`"
                )))
            }
        };
        out.insert(tag);
    }
    Ok(out)
}

struct Resolved {
    spec: MultiplierSpec,
    vdd: Vdd,
}

fn resolve_spec(args: &SpecArgs) -> Result<Resolved, CliError> {
    let structure = Structure::parse(&args.structure).map_err(usage)?;
    let mut spec = MultiplierSpec::new(args.n, args.k, structure);
    spec.truncation = args.truncate.unwrap_or(0);
    spec.gated_blocks = parse_gated(&args.gate_blocks)?;
    spec.validate().map_err(usage)?;
    let vdd = parse_vdd(&args.vdd)?;
    Ok(Resolved { spec, vdd })
}

fn resolve_plan(args: &PlanArgs, n: u32, seed: u64) -> Result<SamplePlan, CliError> {
    let mode = parse_mode(&args.mode)?;
    let count = args.samples.unwrap_or_else(|| SamplePlan::default_count(n));
    if count == 0 {
        return Err(usage("--samples must be positive"));
    }
    Ok(SamplePlan::new(count, seed, mode))
}

fn load_models(path: &Option<PathBuf>) -> Result<(ModelConfig, String), CliError> {
    match path {
        None => {
            let cfg = ModelConfig::default();
            cfg.validate().map_err(usage)?;
            Ok((cfg, "default".to_string()))
        }
        Some(p) => {
            let cfg = ModelConfig::load(p).map_err(usage)?;
            Ok((cfg, p.display().to_string()))
        }
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn vdd_label(vdd: Vdd) -> String {
    vdd.label()
}

fn gated_label(spec: &MultiplierSpec) -> String {
    if spec.gated_blocks.is_empty() {
        "-".to_string()
    } else {
        spec.gated_blocks
            .iter()
            .map(|t| t.name().to_lowercase())
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn characterize_csv(spec: &MultiplierSpec, vdd: Vdd, report: &ErrorReport) -> String {
    let header = "n,k,structure,vdd,truncation,gated,mode,samples,seed,exhaustive,er,med,mred,nmed,mean_err,var_err,excluded_zero_exact\n";
    let row = csv_line(&[
        spec.n.to_string(),
        spec.k.to_string(),
        spec.structure.to_string(),
        vdd_label(vdd),
        spec.truncation.to_string(),
        gated_label(spec),
        report.mode.to_string(),
        report.samples.to_string(),
        report.seed.to_string(),
        report.exhaustive.to_string(),
        report.er.to_string(),
        report.med.to_string(),
        report.mred.to_string(),
        report.nmed.to_string(),
        report.mean_err.to_string(),
        report.var_err.to_string(),
        report.excluded_zero_exact.to_string(),
    ]);
    format!("{header}{row}")
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (models, model_source) = load_models(&cli.config)?;
    let seed = cli.seed;
    let threads = cli.threads;

    match cli.command {
        Command::Characterize { spec, plan, out, csv, log_samples } => {
            let r = resolve_spec(&spec)?;
            let plan = resolve_plan(&plan, r.spec.n, seed)?;
            let resolved = serde_json::json!({
                "spec": r.spec, "vdd": r.vdd, "plan": plan,
            });
            let hash = config_hash(&(&models, &resolved));
            let net = build_multiplier(&r.spec, &models.delay).map_err(usage)?;
            let tn = Arc::new(
                TimedNetlist::new(&net, r.spec.structure, r.vdd, &models).map_err(usage)?,
            );
            let (ch, log) = characterize_logged(&tn, &plan);
            if let Some(path) = &log_samples {
                let mut text = String::from("a,b,exact,approx\n");
                for (a, b, exact, approx) in &log {
                    text.push_str(&format!("{a},{b},{exact},{approx}\n"));
                }
                write_file(path, &text)?;
            }
            if let Some(path) = &csv {
                write_file(path, &characterize_csv(&r.spec, r.vdd, &ch.report))?;
            }
            let report = Report::new(
                "characterize",
                seed,
                threads,
                model_source,
                hash,
                resolved,
                serde_json::json!({ "metrics": ch.report, "energy_total": ch.energy }),
            );
            write_or_print(&out, &report.to_json())
        }

        Command::Explore {
            n,
            k_set,
            structures,
            voltages,
            plan,
            max_mred,
            max_nmed,
            max_med,
            energy_budget,
            objective,
            out,
            csv,
        } => {
            let k_set = if k_set.is_empty() {
                if n <= 8 {
                    vec![2, 4, 6]
                } else {
                    vec![4, 8, 12]
                }
            } else {
                k_set
            };
            let structures: Vec<Structure> = structures
                .iter()
                .map(|s| Structure::parse(s))
                .collect::<Result<_, _>>()
                .map_err(usage)?;
            let voltages = if voltages.is_empty() {
                models.voltage.approx_levels.clone()
            } else {
                voltages
            };
            let objective = match objective.to_ascii_lowercase().as_str() {
                "min-energy" => Objective::MinEnergy,
                "min-mred" => Objective::MinMred,
                other => {
                    return Err(usage(format!(
                        "--objective must be min-energy or min-mred, got `{other}`"
                    )))
                }
            };
            let plan = resolve_plan(&plan, n, seed)?;
            let candidates =
                enumerate_space(n, &k_set, &structures, &voltages, &models).map_err(usage)?;
            let constraint = Constraint {
                max_mred,
                max_nmed,
                max_med,
                energy_budget_rel: energy_budget,
                objective,
            };
            let resolved = serde_json::json!({
                "n": n, "k_set": k_set, "structures": structures,
                "voltages": voltages, "plan": plan, "constraint": constraint,
            });
            let hash = config_hash(&(&models, &resolved));
            let points = evaluate_candidates(&candidates, &plan, &models)?;
            let front = pareto_front(&points);
            let selection = select(&points, &constraint);
            if let Some(path) = &csv {
                let mut text = String::from(
                    "n,k,structure,vdd,mode,samples,seed,er,med,mred,nmed,energy_rel,shifters\n",
                );
                for p in &points {
                    text.push_str(&csv_line(&[
                        p.spec.n.to_string(),
                        p.spec.k.to_string(),
                        p.spec.structure.to_string(),
                        vdd_label(p.vdd),
                        p.metrics.mode.to_string(),
                        p.metrics.samples.to_string(),
                        p.metrics.seed.to_string(),
                        p.metrics.er.to_string(),
                        p.metrics.med.to_string(),
                        p.metrics.mred.to_string(),
                        p.metrics.nmed.to_string(),
                        p.energy_rel.to_string(),
                        p.shifters.to_string(),
                    ]));
                }
                write_file(path, &text)?;
            }
            let infeasible = matches!(selection, Selection::Infeasible);
            let report = Report::new(
                "explore",
                seed,
                threads,
                model_source,
                hash,
                resolved,
                serde_json::json!({
                    "points": points,
                    "pareto_front": front,
                    "selection": selection,
                    "infeasible": infeasible,
                }),
            );
            write_or_print(&out, &report.to_json())
        }

        Command::Age { spec, plan, years, clocking, out } => {
            if years < 0.0 {
                return Err(usage("--years must be non-negative"));
            }
            let r = resolve_spec(&spec)?;
            let plan = resolve_plan(&plan, r.spec.n, seed)?;
            let clocking = match clocking.to_ascii_lowercase().as_str() {
                "rescaled" => AgedClocking::Rescaled,
                "design-time" => AgedClocking::DesignTime,
                other => {
                    return Err(usage(format!(
                        "--clocking must be rescaled or design-time, got `{other}`"
                    )))
                }
            };
            let resolved = serde_json::json!({
                "spec": r.spec, "vdd": r.vdd, "plan": plan,
                "years": years, "clocking": clocking,
            });
            let hash = config_hash(&(&models, &resolved));
            let net = build_multiplier(&r.spec, &models.delay).map_err(usage)?;
            let delay = aged_delay_increment(&net, &r.spec, r.vdd, &models, years)?;
            let drift =
                aged_characterize(&net, &r.spec, r.vdd, &models, years, &plan, clocking)?;
            let report = Report::new(
                "age",
                seed,
                threads,
                model_source,
                hash,
                resolved,
                serde_json::json!({ "delay": delay, "error_drift": drift }),
            );
            write_or_print(&out, &report.to_json())
        }

        Command::Pv { spec, plan, sigma, trials, out, trial_log } => {
            let r = resolve_spec(&spec)?;
            let plan = resolve_plan(&plan, r.spec.n, seed)?;
            let pv = PvPlan { sigma_rel: sigma, trials, seed, floor: 0.05 };
            pv.validate().map_err(usage)?;
            let resolved = serde_json::json!({
                "spec": r.spec, "vdd": r.vdd, "plan": plan, "pv": pv,
            });
            let hash = config_hash(&(&models, &resolved));
            let net = build_multiplier(&r.spec, &models.delay).map_err(usage)?;
            let tn = Arc::new(
                TimedNetlist::new(&net, r.spec.structure, r.vdd, &models).map_err(usage)?,
            );
            let (pv_report, log) = pv_trials(&tn, &pv, &plan)?;
            if let Some(path) = &trial_log {
                let mut text = String::from("trial,med,mred,nmed\n");
                for (trial, med, mred, nmed) in &log {
                    text.push_str(&format!("{trial},{med},{mred},{nmed}\n"));
                }
                write_file(path, &text)?;
            }
            let report = Report::new(
                "pv",
                seed,
                threads,
                model_source,
                hash,
                resolved,
                serde_json::json!({ "pv": pv_report }),
            );
            write_or_print(&out, &report.to_json())
        }

        Command::Image { spec, app, input, mode, out, save_output, save_reference } => {
            let r = resolve_spec(&spec)?;
            let app = match app.to_ascii_lowercase().as_str() {
                "sharpen" => App::Sharpen,
                "smooth" => App::Smooth,
                other => {
                    return Err(usage(format!(
                        "--app must be sharpen or smooth, got `{other}`"
                    )))
                }
            };
            let mode = parse_mode(&mode)?;
            let resolved = serde_json::json!({
                "spec": r.spec, "vdd": r.vdd, "app": app, "mode": mode,
                "input": input.display().to_string(),
            });
            let hash = config_hash(&(&models, &resolved));
            let image = load_pgm(&input).map_err(Error::from)?;

            let net = build_multiplier(&r.spec, &models.delay).map_err(usage)?;
            let tn = Arc::new(
                TimedNetlist::new(&net, r.spec.structure, r.vdd, &models).map_err(usage)?,
            );
            let baseline_spec = MultiplierSpec::new(r.spec.n, r.spec.k, Structure::Blvos0);
            let baseline_net = build_multiplier(&baseline_spec, &models.delay).map_err(usage)?;
            let baseline_tn = Arc::new(
                TimedNetlist::new(&baseline_net, Structure::Blvos0, Vdd::Nominal, &models)
                    .map_err(usage)?,
            );

            let mut approx_mul: Box<dyn Multiplier> = match mode {
                SimMode::Reset => {
                    let table = tabulate_reset(&tn, &hash)?;
                    Box::new(TabulatedMultiplier::new(Arc::new(table)))
                }
                SimMode::Paired => Box::new(PairedMultiplier::new(tn)),
            };
            // The baseline is always tabulated: it is exact and reused per call.
            let baseline_table = tabulate_reset(&baseline_tn, &hash)?;
            let mut exact_mul: Box<dyn Multiplier> =
                Box::new(TabulatedMultiplier::new(Arc::new(baseline_table)));

            let run = run_app(app, &image, &models.kernels, approx_mul.as_mut(), exact_mul.as_mut())?;
            if let Some(path) = &save_output {
                save_pgm(&run.output, path).map_err(Error::from)?;
            }
            if let Some(path) = &save_reference {
                save_pgm(&run.reference, path).map_err(Error::from)?;
            }
            let report = Report::new(
                "image",
                seed,
                threads,
                model_source,
                hash,
                resolved,
                serde_json::json!({ "app_report": run.report }),
            );
            write_or_print(&out, &report.to_json())
        }

        Command::DumpNetlist { spec, out } => {
            let r = resolve_spec(&spec)?;
            let net = build_multiplier(&r.spec, &models.delay).map_err(usage)?;
            let diags = validate(&net);
            if !diags.is_empty() {
                return Err(CliError::Runtime(format!(
                    "netlist failed validation: {}",
                    diags[0]
                )));
            }
            write_or_print(&out, &dump_netlist(&net))
        }
    }
}

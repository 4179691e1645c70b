//! `evflow` command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 an equilibrium did not reach
//! its gap tolerance (outputs are still written), 3 I/O failure.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evflow::assign::AssignmentResult;
use evflow::config::{validate, ScenarioConfig, StrategyBlock};
use evflow::demand::write_demand;
use evflow::fixtures;
use evflow::io::write_json;
use evflow::pipeline::{self, Engine, ExportFormat, Inputs, RunOptions};
use evflow::strategy::{PlanMode, StrategyParams};
use evflow::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "evflow", version, about = "Event traffic assignment and demand management")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config and every file it references.
    Validate(ConfigArg),
    /// Baseline user equilibrium without the event.
    Baseline(StageArgs),
    /// Tourist demand generated from sessions and residences.
    EventDemand(StageArgs),
    /// One event scenario.
    Assign {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        /// Selfish fraction for `mixed`, in [0, 1].
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Shift trips near transit stations onto rapid transit and re-assign.
    Strategy {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Marginal)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1.0)]
        radius_km: f64,
        #[arg(long, default_value_t = 1000)]
        top_k: usize,
        /// Share of each selected OD's vehicles moved to transit.
        #[arg(long, default_value_t = 0.6)]
        fraction: f64,
    },
    /// Full run with impact metrics, cached by config hash.
    Metrics(RunArgs),
    /// Full run with the selfish-fraction and top-k sweeps, exported as tables.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Selfish fractions; defaults to the config's or 0, 0.25, 0.5, 0.75, 1.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Top-k values; defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        top_k: Vec<usize>,
        /// Where the tables go.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the tables of a finished run.
    Export {
        /// Run directory.
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Write a synthetic dataset and a `config.toml` reading it.
    Fixture {
        #[arg(value_enum)]
        name: FixtureArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// HTTP service for jobs and what-if queries.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory holding `config.toml`; runs are stored under `runs/`.
        #[arg(long)]
        data: PathBuf,
        /// Concurrent solver jobs.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Args)]
struct ConfigArg {
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Args)]
struct StageArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Path-search threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Run store; each run goes to a subdirectory named after its config hash.
    #[arg(long, default_value = "runs")]
    runs: PathBuf,
    /// Recompute even if a finished run with the same hash exists.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Habit,
    Selfish,
    Altruism,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Marginal,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureArg {
    /// Two routes, an Olympic lane and one venue.
    Diamond,
    /// The classic paradox network.
    Braess,
    /// Origins sharing one overloaded link, all near transit.
    Bottleneck,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Csv { .. } | Error::Json(_) => EXIT_IO,
            Error::NotFound { kind: "run", .. } => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: an equilibrium stopped before reaching its gap tolerance");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `Ok(converged)` on success.
fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Validate(a) => {
            let config = load(&a.config)?;
            let report = validate(&config);
            if report.is_ok() {
                println!("ok");
                Ok(true)
            } else {
                print!("{report}");
                Err(Failure {
                    code: EXIT_INVALID,
                    message: format!("{} violation(s)", report.violations.len()),
                })
            }
        }
        Command::Baseline(s) => {
            let inputs = inputs(&s.config)?;
            let r = Engine::new(&inputs, s.workers).baseline()?;
            Ok(save_result(&s.out, &r)?)
        }
        Command::EventDemand(s) => {
            let inputs = inputs(&s.config)?;
            let event = Engine::new(&inputs, s.workers).event_demand()?;
            let csv = s.out.join("tourist_demand.csv");
            write_demand(&csv, [&event.delta])?;
            write_json(&s.out.join("event_demand.json"), &event)?;
            println!("{}", csv.display());
            println!(
                "tourist vehicles {:.1}, transit persons {:.1}",
                event.tourist.total_vehicles(),
                event.tourist.transit.iter().map(|t| t.persons).sum::<f64>()
            );
            Ok(true)
        }
        Command::Assign { stage, scenario, lambda } => {
            if lambda.is_some() && !matches!(scenario, ScenarioArg::Mixed) {
                return Err(invalid("--lambda applies to --scenario mixed only"));
            }
            let inputs = inputs(&stage.config)?;
            let engine = Engine::new(&inputs, stage.workers);
            let event = engine.event_demand()?;
            let r = match scenario {
                ScenarioArg::Selfish => engine.selfish(&event)?,
                ScenarioArg::Altruism => engine.altruism(&event)?,
                ScenarioArg::Habit | ScenarioArg::Mixed => {
                    let baseline = engine.baseline()?;
                    let habit = engine.habit(&baseline, &event)?;
                    match (scenario, lambda) {
                        (ScenarioArg::Mixed, Some(l)) => {
                            if !(0.0..=1.0).contains(&l) {
                                return Err(invalid(format!("--lambda {l} outside [0, 1]")));
                            }
                            engine.mixed(&habit, &event, l)?
                        }
                        (ScenarioArg::Mixed, None) => return Err(invalid("--scenario mixed needs --lambda")),
                        _ => habit,
                    }
                }
            };
            Ok(save_result(&stage.out, &r)?)
        }
        Command::Strategy {
            stage,
            mode,
            radius_km,
            top_k,
            fraction,
        } => {
            let params = StrategyParams {
                radius_km,
                top_k,
                reduction_fraction: fraction,
                mode: match mode {
                    ModeArg::Marginal => PlanMode::Marginal,
                    ModeArg::Uniform => PlanMode::Uniform,
                },
            };
            params.validate()?;
            let inputs = inputs(&stage.config)?;
            let engine = Engine::new(&inputs, stage.workers);
            let event = engine.event_demand()?;
            let selfish = engine.selfish(&event)?;
            let plan = engine.strategy(&event, &selfish, &params)?;
            let dir = stage.out.join("strategy").join(params.mode.to_string());
            pipeline::write_plan_tables(&dir, &plan)?;
            println!(
                "{}: removed {:.1} veh/h ({:.2}% of demand), collective time saving {:.2}%",
                params.mode, plan.savings.removed_vehicles, plan.savings.demand_removed_pct, plan.savings.saving_pct
            );
            Ok(selfish.converged && plan.savings.converged)
        }
        Command::Metrics(a) => {
            let config = load(&a.config)?;
            let run = pipeline::run_pipeline(&config, &a.runs, &options(&a))?;
            let summary = run.metrics()?;
            println!("{}", run.dir.display());
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).map_err(Error::from)?
            );
            Ok(run.manifest.converged())
        }
        Command::Sweep {
            run,
            lambdas,
            top_k,
            out,
        } => {
            let mut config = load(&run.config)?;
            if !lambdas.is_empty() {
                config.scenarios.sweep = lambdas;
            } else if config.scenarios.sweep.is_empty() {
                config.scenarios.sweep = vec![0.0, 0.25, 0.5, 0.75, 1.0];
            }
            if !top_k.is_empty() {
                match config.strategy.as_mut() {
                    Some(s) => s.sweep_top_k = top_k,
                    None => return Err(invalid("--top-k needs a [strategy] block in the config")),
                }
            }
            let report = validate(&config);
            if !report.is_ok() {
                return Err(invalid(report.to_string()));
            }
            let r = pipeline::run_pipeline(&config, &run.runs, &options(&run))?;
            pipeline::export(&r.dir, &out, ExportFormat::Csv)?;
            println!("{}", out.join("lambda_sweep.csv").display());
            println!("{}", out.join("topk_sweep.csv").display());
            Ok(r.manifest.converged())
        }
        Command::Export { run, out, format } => {
            let format = match format {
                FormatArg::Csv => ExportFormat::Csv,
                FormatArg::Json => ExportFormat::Json,
            };
            for f in pipeline::export(&run, &out, format)? {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Command::Fixture { name, out } => {
            let bundle = match name {
                FixtureArg::Diamond => fixtures::diamond(),
                FixtureArg::Braess => fixtures::braess(),
                FixtureArg::Bottleneck => fixtures::bottleneck(),
            };
            std::fs::create_dir_all(&out).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("{}: {e}", out.display()),
            })?;
            let config = fixture_config(&bundle, &out)?;
            let path = out.join("config.toml");
            std::fs::write(&path, config.to_toml()?).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("{}: {e}", path.display()),
            })?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Serve {
            port,
            data,
            workers,
            host,
        } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure {
                code: EXIT_IO,
                message: e.to_string(),
            })?;
            rt.block_on(evflow_service::serve(SocketAddr::new(host, port), &data, workers))
                .map_err(|e| Failure {
                    code: EXIT_IO,
                    message: e.to_string(),
                })?;
            Ok(true)
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    if !path.is_file() {
        return Err(Failure {
            code: EXIT_IO,
            message: format!("cannot read config {}", path.display()),
        });
    }
    Ok(ScenarioConfig::load(path)?)
}

fn inputs(path: &Path) -> Result<Inputs, Failure> {
    let config = load(path)?;
    let report = validate(&config);
    if !report.is_ok() {
        print!("{report}");
        return Err(invalid(format!("{} violation(s)", report.violations.len())));
    }
    Ok(Inputs::load(&config)?)
}

/// Config for a fixture written into `dir`, with file names relative to it
/// and the sweeps and strategy block filled in.
fn fixture_config(bundle: &fixtures::Bundle, dir: &Path) -> Result<ScenarioConfig, Failure> {
    let mut config = bundle.config(dir)?;
    let d = &mut config.data;
    let relative = |p: &mut PathBuf| {
        if let Some(name) = p.file_name() {
            *p = PathBuf::from(name);
        }
    };
    for p in [&mut d.nodes, &mut d.links, &mut d.zones, &mut d.demand] {
        relative(p);
    }
    for p in [&mut d.venues, &mut d.sessions, &mut d.residences, &mut d.lines, &mut d.overlay]
        .into_iter()
        .flatten()
    {
        relative(p);
    }
    if d.venues.is_some() {
        config.scenarios.sweep = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    }
    if d.lines.is_some() {
        config.strategy = Some(StrategyBlock {
            radius_km: 1.0,
            top_k: 2,
            reduction_fraction: 0.6,
            mode: PlanMode::Marginal,
            sweep_top_k: vec![1, 2, 3],
            commuter_occupancy: 1.0,
        });
    }
    Ok(config)
}

fn options(a: &RunArgs) -> RunOptions {
    RunOptions {
        force: a.force,
        workers: a.workers,
        progress: None,
    }
}

fn save_result(out: &Path, r: &AssignmentResult) -> Result<bool, Error> {
    let label = r.scenario.to_string();
    let dir = out.join(&label);
    pipeline::write_result_tables(&dir, r)?;
    write_json(&out.join(format!("{label}.json")), r)?;
    println!("{}", dir.display());
    println!(
        "{label}: collective time {:.1} veh-min, {} iterations, relative gap {}",
        r.total_time(),
        r.iterations,
        r.relative_gap.map_or("n/a".to_string(), |g| format!("{g:.2e}"))
    );
    Ok(r.converged)
}

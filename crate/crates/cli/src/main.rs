//! `plt`: batch front end for preflearn.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error (including a
//! `reproduce` run that misses a threshold).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use preflearn::bench::{reproduce, Manifest};
use preflearn::dataset::{parse_dual_file, parse_single_file, Dataset, ParserOptions};
use preflearn::evaluation::Metric;
use preflearn::experiment::{
    load_model, run_experiment, select_features, write_outputs, ExperimentConfig, NoObserver, ProgressEvent, Report,
};
use preflearn::monitor::{CancelFlag, Silent};
use preflearn::synthetic::{gen_dataset, SynthSpec};
use preflearn_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "plt", version, about = "Preference learning experiments", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset in dual-file and single-file form.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment, print its report and write its outputs.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Overrides the config's model path.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Print progress events to standard error.
        #[arg(long)]
        progress: bool,
    },
    /// Score a labelled dataset with a saved model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Single file, or the objects file when --orders is given.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        orders: Option<PathBuf>,
        /// Parser options as JSON; defaults to a headed comma-separated file.
        #[arg(long)]
        options: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MetricArg::PairwiseAccuracy)]
        metric: MetricArg,
    },
    /// Run only the feature selection of a config and print its trace.
    Select {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Render a JSON report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Rerun the benchmark manifest and compare against its thresholds.
    Reproduce {
        #[arg(long, default_value = "configs/reproduce.json")]
        manifest: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    PairwiseAccuracy,
    SpearmanRho,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let config = ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match seed {
        Some(s) => config.with_seed(s),
        None => config,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen { spec, out, seed } => {
            let text = std::fs::read(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut spec: SynthSpec = serde_json::from_slice(&text).context("parsing the generator spec")?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let data = gen_dataset(&spec)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let (objects, orders, dual) = data.to_dual_file();
            let (single, single_opts) = data.to_single_file();
            write(&out.join("objects.csv"), &objects)?;
            write(&out.join("orders.csv"), &orders)?;
            write(&out.join("dual_options.json"), &serde_json::to_string_pretty(&dual)?)?;
            write(&out.join("pairs.csv"), &single)?;
            write(&out.join("pairs_options.json"), &serde_json::to_string_pretty(&single_opts)?)?;
            write(&out.join("utility.json"), &serde_json::to_string_pretty(&data.utility)?)?;
            println!(
                "wrote {} objects and {} pairs to {}",
                data.table.len(),
                data.prefs.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            config,
            seed,
            report,
            model,
            progress,
        } => {
            let mut config = read_config(&config, seed)?;
            if report.is_some() {
                config.output.report = report;
            }
            if model.is_some() {
                config.output.model = model;
            }
            let printer = |e: &ProgressEvent| {
                let msg = e.message.as_deref().unwrap_or("");
                eprintln!("[{:>5.1}%] {} {msg}", e.percent, e.phase.title());
            };
            let outcome = if progress {
                run_experiment(&config, &printer, &CancelFlag::new())
            } else {
                run_experiment(&config, &NoObserver, &CancelFlag::new())
            };
            print!("{}", outcome.report.to_text());
            write_outputs(&outcome, &config)?;
            if !outcome.completed() {
                bail!("the experiment did not complete");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            model,
            data,
            orders,
            options,
            metric,
        } => {
            let model = load_model(&model)?;
            let options: ParserOptions = match options {
                Some(p) => serde_json::from_slice(&std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?)
                    .context("parsing the parser options")?,
                None => ParserOptions {
                    has_header: true,
                    ..ParserOptions::default()
                },
            };
            let read = |p: &Path| std::fs::read(p).with_context(|| format!("reading {}", p.display()));
            let (table, order_set) = match &orders {
                Some(o) => parse_dual_file(&read(&data)?, &read(o)?, &options)?,
                None => parse_single_file(&read(&data)?, &options)?,
            };
            let dataset = Dataset::new(table, order_set)?;
            let (metric, name) = match metric {
                MetricArg::PairwiseAccuracy => (Metric::PairwiseAccuracy, "pairwise_accuracy"),
                MetricArg::SpearmanRho => (Metric::SpearmanRho, "spearman_rho"),
            };
            println!("{name}: {}", model.evaluate(&dataset, metric)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Select { config, seed } => {
            let config = read_config(&config, seed)?;
            let sel = select_features(&config, &Silent)?;
            println!("{:>5}  {:<24} score", "round", "feature");
            for s in &sel.trace {
                println!("{:>5}  {:<24} {:.6}", s.round, s.feature, s.score);
            }
            println!("selected: {}", sel.selected.join(", "));
            println!("stopped: {}", sel.stop_reason);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            host,
            workers,
            data_dir,
        } => {
            let mut config = ServiceConfig::default();
            if let Some(w) = workers {
                config.workers = w;
            }
            if let Some(d) = data_dir {
                config.data_dir = d;
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().context("parsing the listen address")?;
            eprintln!("serving on http://{addr}");
            tokio::runtime::Runtime::new()?.block_on(preflearn_service::serve(addr, config))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, format } => {
            let bytes = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = Report::from_json(&bytes)?;
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reproduce { manifest, seed, json } => {
            let manifest = Manifest::from_file(&manifest)?;
            let result = reproduce(&manifest, seed);
            print!("{}", result.to_table());
            if let Some(p) = json {
                write(&p, &serde_json::to_string_pretty(&result)?)?;
            }
            if result.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("some checks missed their thresholds");
                Ok(ExitCode::from(2))
            }
        }
    }
}

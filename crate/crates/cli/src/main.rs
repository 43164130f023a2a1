use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use cap_core::diagnostics::{
    demo_observations, likelihood_from_observations, likelihood_surface, mean_pairwise_kl, restart_dispersion,
    variance_vs_kl_curve, Demo,
};
use cap_core::harness::{
    convert_flusight_dir, emit_report, load_dataset, phi_trace, replay, truth_from_states, write_panels, ReplayOptions,
    RunConfig, RunDir,
};
use cap_core::ingest::{parse_component_csv, parse_population_csv, parse_truth_csv, ForecastDataset, ForecastPanel};
use cap_core::{Epiweek, Error, Season};
use clap::{Args, Parser, Subcommand};

/// Cluster-Aggregate-Pool ensembles for binned ILI forecasts.
#[derive(Parser)]
#[command(name = "capflu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build season panels and the truth table from raw files.
    Ingest(IngestArgs),
    /// Replay seasons week by week and write ensemble artifacts.
    Replay(ReplayArgs),
    /// Summarize the scored artifacts of a run directory.
    Report {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Redundancy and identifiability diagnostics.
    Diagnose {
        #[command(subcommand)]
        which: Diagnose,
    },
    /// Print the weekly threshold, clusters and leaders of CAP runs.
    PhiTrace {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct IngestArgs {
    /// Run configuration supplying forecasts, truth and seasons.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Canonical forecast CSV files or directories.
    #[arg(long)]
    forecasts: Vec<PathBuf>,
    /// Archive directory laid out as <model>/EWww-YYYY-*.csv.
    #[arg(long)]
    flusight: Vec<PathBuf>,
    /// Truth CSV (region,epiweek,wili).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// State-level ILI CSV (state,epiweek,ili); needs --populations.
    #[arg(long, requires = "populations")]
    state_ili: Option<PathBuf>,
    /// State populations CSV (state,region,population).
    #[arg(long)]
    populations: Option<PathBuf>,
    /// Seasons to write, e.g. 2016/2017,2017; defaults to every season present.
    #[arg(long, value_delimiter = ',')]
    seasons: Vec<Season>,
    /// Output run directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output run directory; an existing one is resumed.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Stop after this issue week (YYYYWW).
    #[arg(long)]
    stop_after: Option<Epiweek>,
}

#[derive(Subcommand)]
enum Diagnose {
    /// EM from random starting weights; one CSV row per restart.
    Restarts {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// duplicated, disjoint, overlapping or triple.
        #[arg(long, default_value = "duplicated")]
        demo: String,
        /// Observations in the demo fixture.
        #[arg(long, default_value_t = 40)]
        obs: usize,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixture variance against KL divergence for two normals.
    VarianceKl {
        #[arg(long, default_value_t = 0.75)]
        mean_a: f64,
        #[arg(long, default_value_t = 0.75)]
        from: f64,
        #[arg(long, default_value_t = 1.5)]
        to: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        weight: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-likelihood of the three-model demo on a simplex grid.
    Surface {
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 40)]
        obs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symmetrized KL between models averaged over every forecast cell.
    Kl {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to one season.
        #[arg(long)]
        season: Option<Season>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Box::new(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    if !path.is_file() {
        bail!(Error::Config(format!("config file {} not found", path.display())));
    }
    Ok(RunConfig::load(path)?)
}

fn ingest(args: IngestArgs) -> anyhow::Result<()> {
    let config = args.config.as_deref().map(load_config).transpose()?;
    let mut panel = ForecastPanel::new();
    let mut sources: Vec<PathBuf> = config.as_ref().map(|c| c.forecasts.clone()).unwrap_or_default();
    sources.extend(args.forecasts);
    for src in &sources {
        let files: Vec<PathBuf> = if src.is_dir() {
            let mut v: Vec<PathBuf> = fs::read_dir(src)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            v.retain(|p| p.extension().is_some_and(|e| e == "csv"));
            v.sort();
            v
        } else {
            vec![src.clone()]
        };
        for f in files {
            let file = fs::File::open(&f).with_context(|| format!("cannot open {}", f.display()))?;
            panel.merge(parse_component_csv(file).with_context(|| f.display().to_string())?)?;
        }
    }
    for dir in &args.flusight {
        panel.merge(convert_flusight_dir(dir)?)?;
    }
    if panel.is_empty() {
        bail!(Error::Config("no forecasts given (use --config, --forecasts or --flusight)".into()));
    }
    let truth_path = args.truth.or_else(|| config.as_ref().map(|c| c.truth.clone()));
    let truth = match (truth_path, args.state_ili, args.populations) {
        (Some(p), _, _) => parse_truth_csv(fs::File::open(&p).with_context(|| format!("cannot open {}", p.display()))?)?,
        (None, Some(states), Some(pops)) => {
            let pops = parse_population_csv(fs::File::open(&pops)?)?;
            truth_from_states(fs::File::open(&states)?, &pops)?
        }
        _ => bail!(Error::Config("no truth given (use --truth or --state-ili with --populations)".into())),
    };
    let dataset = ForecastDataset::new(panel, truth);
    let mut seasons = if !args.seasons.is_empty() {
        args.seasons
    } else if let Some(c) = &config {
        c.seasons.clone()
    } else {
        dataset.seasons().into_iter().collect()
    };
    seasons.sort();
    seasons.dedup();
    let run = RunDir::new(&args.out);
    write_panels(&dataset, &seasons, &run)?;
    println!(
        "{} forecasts from {} models; seasons {} written to {}",
        dataset.cells().map(|(_, m)| m.len()).sum::<usize>(),
        dataset.roster().len(),
        seasons.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "),
        run.panel_dir().display()
    );
    Ok(())
}

fn run_replay(args: ReplayArgs) -> anyhow::Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let dataset = load_dataset(&config)?;
    let run = RunDir::new(&args.out);
    let summary = replay(
        &config,
        &dataset,
        &run,
        ReplayOptions {
            stop_after: args.stop_after,
        },
    )?;
    println!(
        "{} week artifacts written, {} reused, in {}",
        summary.weeks_computed,
        summary.weeks_reused,
        run.root().display()
    );
    Ok(())
}

fn report(out: &Path) -> anyhow::Result<()> {
    if !out.is_dir() {
        bail!("run directory {} does not exist", out.display());
    }
    let bundle = emit_report(&RunDir::new(out))?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "variant,group,n,mean_log_score,pit_auc,mean_brier_integral")?;
    for r in &bundle.summary {
        writeln!(
            stdout,
            "{},{},{},{:.4},{:.4},{:.4}",
            r.variant, r.group, r.n, r.mean_log_score, r.pit_auc, r.mean_brier_integral
        )?;
    }
    for f in &bundle.files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn diagnose(which: Diagnose) -> anyhow::Result<()> {
    match which {
        Diagnose::Restarts {
            n,
            seed,
            demo,
            obs,
            out,
        } => {
            let demo: Demo = demo.parse()?;
            let lik = likelihood_from_observations(&demo_observations::<f64>(demo, obs, seed)?)?;
            let report = restart_dispersion(&lik, n, seed)?;
            let k = lik.columns();
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            let mut header = vec!["restart".to_string()];
            header.extend((1..=k).map(|i| format!("init_{i}")));
            header.extend((1..=k).map(|i| format!("weight_{i}")));
            header.extend(["log_likelihood", "iterations", "converged"].map(String::from));
            w.write_record(&header)?;
            for r in &report.restarts {
                let mut row = vec![r.index.to_string()];
                row.extend(r.initial.iter().map(ToString::to_string));
                row.extend(r.weights.iter().map(ToString::to_string));
                row.extend([r.log_likelihood.to_string(), r.iterations.to_string(), r.converged.to_string()]);
                w.write_record(&row)?;
            }
            w.flush()?;
            let sds: Vec<String> = report.weight_sd.iter().map(|s| format!("{s:.4}")).collect();
            eprintln!(
                "weight sd [{}], log-likelihood spread {:.3e}{}",
                sds.join(", "),
                report.likelihood_spread,
                if report.degenerate { " (degenerate likelihood)" } else { "" }
            );
        }
        Diagnose::VarianceKl {
            mean_a,
            from,
            to,
            step,
            sigma,
            weight,
            out,
        } => {
            if step.is_nan() || step <= 0.0 || to < from {
                bail!(Error::Config("need step > 0 and to >= from".into()));
            }
            let n = ((to - from) / step + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| from + step * i as f64).collect();
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["mean_a", "mean_b", "kl", "kl_binned", "variance"])?;
            for p in variance_vs_kl_curve(mean_a, &grid, sigma, weight)? {
                w.write_record([p.mean_a, p.mean_b, p.kl, p.kl_binned, p.variance].map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
        Diagnose::Surface { steps, obs, seed, out } => {
            let lik = likelihood_from_observations(&demo_observations::<f64>(Demo::Triple, obs, seed)?)?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["weight_1", "weight_2", "weight_3", "log_likelihood"])?;
            for p in likelihood_surface(&lik, steps)? {
                let mut row: Vec<String> = p.weights.iter().map(ToString::to_string).collect();
                row.push(p.log_likelihood.to_string());
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        Diagnose::Kl { config, season, out } => {
            let config = load_config(&config)?;
            let dataset = load_dataset(&config)?;
            let models: Vec<_> = dataset.roster().iter().cloned().collect();
            let cells: Vec<_> = dataset
                .cells()
                .filter(|(k, _)| season.is_none_or(|s| s.contains(k.issue_week)))
                .map(|(_, m)| m.clone())
                .collect();
            let m = mean_pairwise_kl(&models, &cells);
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            let mut header = vec!["model".to_string()];
            header.extend(models.iter().map(ToString::to_string));
            w.write_record(&header)?;
            for (i, model) in models.iter().enumerate() {
                let mut row = vec![model.to_string()];
                row.extend(m.row(i).iter().map(ToString::to_string));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Replay(args) => run_replay(args),
        Command::Report { out } => report(&out),
        Command::Diagnose { which } => diagnose(which),
        Command::PhiTrace { out } => {
            if !out.is_dir() {
                bail!("run directory {} does not exist", out.display());
            }
            phi_trace(&RunDir::new(&out), io::stdout().lock())?;
            Ok(())
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
            || matches!(c.downcast_ref::<Error>(), Some(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe)
            || c.to_string().contains("Broken pipe")
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

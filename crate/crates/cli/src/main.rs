use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qdiode::model::AuxConfig;
use qdiode::observables::{rectification_factor, zero_current_threshold, ObservableError};
use qdiode::solver::{steady_state, SteadyReport};
use qdiode::sweep::{
    emit, figure_preset, parse_document, parse_preparation, run_sweep_with, spec_from_document, Execution, Format,
    SeriesSection, SweepSection, SweepSpec, FIGURE_IDS,
};

#[derive(Parser)]
#[command(name = "qdiode", version, about = "Quantum thermal diode with auxiliary atoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Svg,
    Text,
}

#[derive(clap::Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

#[derive(clap::Args)]
struct Threads {
    /// Worker threads; 1 runs serially. Defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state of one device.
    Steady {
        config: PathBuf,
        /// Auxiliary preparation: excited, ground, mask:eg.., p:.., mixed:.., pure:..
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Time evolution from left and right atoms excited.
    Evolve {
        config: PathBuf,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        threads: Threads,
    },
    /// Run a sweep document.
    Sweep {
        file: PathBuf,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        threads: Threads,
    },
    /// Run a figure preset.
    Figure {
        id: String,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        threads: Threads,
    },
}

fn execution(threads: &Threads) -> Result<Execution> {
    Ok(match threads.threads {
        None => Execution::Parallel,
        Some(0) => bail!("--threads must be at least 1"),
        Some(1) => Execution::Serial,
        Some(n) => Execution::ParallelWith { threads: n },
    })
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn table_format(output: &Output) -> Result<Format> {
    match output.format {
        None | Some(OutFormat::Csv) => Ok(Format::Csv),
        Some(OutFormat::Svg) => Ok(Format::Svg),
        Some(OutFormat::Text) => bail!("tables are written as csv or svg"),
    }
}

fn run_spec(spec: &SweepSpec, output: &Output, threads: &Threads) -> Result<()> {
    let format = table_format(output)?;
    let table = run_sweep_with(spec, execution(threads)?)?;
    write_out(output.out.as_deref(), &emit(&table, format)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn steady(config: &Path, weights: Option<&str>, output: &Output) -> Result<()> {
    let doc = parse_document(&read(config)?)?;
    let device = doc.device_config()?;
    let preparation = weights.map(parse_preparation).transpose().map_err(anyhow::Error::msg)?;
    let report = steady_state(&device, preparation.as_ref())?;
    let reverse = steady_state(&device.swapped_temperatures(), preparation.as_ref())?;
    let factor = match rectification_factor(report.heat_left, reverse.heat_left, zero_current_threshold(&device)) {
        Ok(r) => Some(r),
        Err(ObservableError::BothCurrentsZero { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let text = match output.format.unwrap_or(OutFormat::Text) {
        OutFormat::Text => plain_report(&report, reverse.heat_left, factor, device.n_aux()),
        OutFormat::Csv => csv_report(&report, reverse.heat_left, factor),
        OutFormat::Svg => bail!("steady reports are written as text or csv"),
    };
    write_out(output.out.as_deref(), text.as_bytes())
}

fn plain_report(r: &SteadyReport, reverse: f64, factor: Option<f64>, n_aux: usize) -> String {
    let mut s = String::new();
    s += &format!("heat_left        {:.16e}\n", r.heat_left);
    s += &format!("heat_right       {:.16e}\n", r.heat_right);
    if let Some(q) = r.heat_aux {
        s += &format!("heat_aux         {q:.16e}\n");
    }
    s += &format!("heat_left_rev    {reverse:.16e}\n");
    match factor {
        Some(f) => s += &format!("rectification    {f:.16e}\n"),
        None => s += "rectification    undefined (both currents zero)\n",
    }
    s += &format!("residual         {:.3e}\n", r.residual);
    if !r.cycle_rates.is_empty() {
        s += "subspace  weight  cycle_rate\n";
        let weights = r.weights.as_ref();
        for (m, f) in r.cycle_rates.iter().enumerate() {
            let w = weights.map_or(0.0, |w| w.get(m + 1));
            if w > 0.0 {
                let label = AuxConfig::from_subspace(n_aux, m + 1).label();
                s += &format!("{:>8}  {w:.6}  {f:.16e}\n", if label.is_empty() { "-".into() } else { label });
            }
        }
    }
    s += "index population\n";
    for (i, p) in r.populations.iter().enumerate() {
        s += &format!("{:>5} {p:.16e}\n", i + 1);
    }
    s
}

fn csv_report(r: &SteadyReport, reverse: f64, factor: Option<f64>) -> String {
    let mut s = format!("# tool: qdiode {}\n", env!("CARGO_PKG_VERSION"));
    s += &format!("# heat_left: {:.16e}\n# heat_right: {:.16e}\n", r.heat_left, r.heat_right);
    if let Some(q) = r.heat_aux {
        s += &format!("# heat_aux: {q:.16e}\n");
    }
    s += &format!("# heat_left_reverse: {reverse:.16e}\n");
    s += &format!("# rectification: {}\n", factor.map_or("undefined".into(), |f| format!("{f:.16e}")));
    s += "index,population\n";
    for (i, p) in r.populations.iter().enumerate() {
        s += &format!("{},{p:.16e}\n", i + 1);
    }
    s
}

fn evolve(
    config: &Path,
    weights: Option<String>,
    t_final: Option<f64>,
    points: usize,
    output: &Output,
    threads: &Threads,
) -> Result<()> {
    let mut doc = parse_document(&read(config)?)?;
    let has_time_sweep = doc.sweep.as_ref().and_then(|s| s.parameter.as_deref()) == Some("time");
    if t_final.is_some() || !has_time_sweep {
        let Some(t) = t_final else {
            bail!("give --t-final or a [sweep] section with parameter = \"time\"");
        };
        doc.sweep = Some(SweepSection {
            parameter: Some("time".into()),
            min: Some(0.0),
            max: Some(t),
            count: Some(points),
            values: None,
        });
    }
    if let Some(w) = weights {
        doc.series = vec![SeriesSection {
            preparation: Some(w),
            ..SeriesSection::default()
        }];
    }
    run_spec(&spec_from_document(doc)?, output, threads)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Steady { config, weights, output } => steady(&config, weights.as_deref(), &output),
        Command::Evolve {
            config,
            weights,
            t_final,
            points,
            output,
            threads,
        } => evolve(&config, weights, t_final, points, &output, &threads),
        Command::Sweep { file, output, threads } => {
            let spec = qdiode::sweep::parse_run_config(&read(&file)?)?;
            run_spec(&spec, &output, &threads)
        }
        Command::Figure { id, output, threads } => {
            let spec = figure_preset(&id).with_context(|| format!("known figures: {}", FIGURE_IDS.join(", ")))?;
            log::info!("figure {id}: {} series over {} points", spec.series.len(), spec.grid.len());
            run_spec(&spec, &output, &threads)
        }
    }
}

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use noiseshape_sr::bench::{
    plot_svg, read_records, run_experiment, summarize, write_aborts, write_records, write_summary,
    ExperimentConfig,
};
use noiseshape_sr::decode::{decode_beta, decode_msq_scaled, DecoderOptions, SolverOptions};
use noiseshape_sr::quantize::{beta_quantize, msq_scaled, select_parameters};
use noiseshape_sr::sampling::fourier_sample;
use noiseshape_sr::AtomicMeasure;

#[derive(Parser)]
#[command(name = "nssr", version, about = "Noise-shaping quantization for spectral super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded MSQ vs beta-quantization sweep.
    Run {
        /// Flat `key = value` config; defaults apply when omitted.
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the trial count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Per-(lambda, K, method) statistics of a records file.
    Summarize {
        records: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG of mean error against lambda.
    Plot {
        records: PathBuf,
        #[arg(long, default_value = "error_vs_lambda.svg")]
        out: PathBuf,
    },
    /// Print the default config.
    Config,
    /// Sample, quantize and decode one measure given as `location re im` lines.
    Decode {
        measure: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Beta)]
        method: MethodArg,
        #[arg(long, default_value_t = 41)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        lambda: usize,
        #[arg(short = 'k', long = "levels", default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 64)]
        grid_factor: usize,
        /// Per-step solver trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the estimate here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Msq,
    Beta,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_records(path: &Path) -> Result<Vec<noiseshape_sr::bench::TrialRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_records(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn run(config: Option<PathBuf>, seed: Option<u64>, trials: Option<usize>, out: PathBuf) -> Result<()> {
    let mut cfg = match &config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_text(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.txt"), cfg.to_text())?;

    let records = run_experiment(&cfg)?;
    write_records(&records, create(&out.join("records.csv"))?)?;
    write_aborts(&records, create(&out.join("aborts.csv"))?)?;
    let summary = summarize(&records);
    write_summary(&summary, create(&out.join("summary.csv"))?)?;
    fs::write(out.join("error_vs_lambda.svg"), plot_svg(&summary))?;

    let aborted = records.iter().filter(|r| r.outcome.is_err()).count();
    eprintln!(
        "{} records, {} aborted, written to {}",
        records.len() - aborted,
        aborted,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn decode(
    measure: PathBuf,
    method: MethodArg,
    m: usize,
    lambda: usize,
    k: usize,
    alpha: f64,
    grid_factor: usize,
    trace: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let text = fs::read_to_string(&measure).with_context(|| format!("reading {}", measure.display()))?;
    let mu = AtomicMeasure::from_text(&text)?;
    if m == 0 || lambda == 0 {
        bail!("m and lambda must be positive");
    }
    let y = fourier_sample(&mu, m * lambda);
    let opts = DecoderOptions {
        grid_factor,
        solver: SolverOptions {
            record_trace: trace.is_some(),
            ..SolverOptions::default()
        },
        ..DecoderOptions::default()
    };
    let dec = match method {
        MethodArg::Msq => {
            let q = msq_scaled(&y, k, alpha)?.q;
            decode_msq_scaled(&q, k, alpha, &opts)?
        }
        MethodArg::Beta => {
            let cfg = select_parameters(k, lambda, alpha)?;
            let q = beta_quantize(&y, &cfg)?.q;
            decode_beta(&q, &cfg.plan(m)?, &cfg, &opts)?
        }
    };
    let report = &dec.recovered.report;
    eprintln!(
        "noise bound {:.6e}, objective {:.9}, gap {:.3e}, residual {:.6e}, {} Newton steps",
        dec.noise_bound, report.objective, report.gap_bound, report.feasibility_residual, report.newton_steps
    );
    if let Some(path) = trace {
        let mut w = create(&path)?;
        writeln!(w, "step,barrier_weight,dual_objective,residual,decrement,step_length")?;
        for t in &report.trace {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t.step, t.barrier_weight, t.dual_objective, t.residual, t.decrement, t.step_length
            )?;
        }
        w.flush()?;
    }
    let body = dec.estimate.to_text();
    match out {
        Some(p) => fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            trials,
            out,
        } => run(config, seed, trials, out),
        Command::Summarize { records, out } => {
            let summary = summarize(&load_records(&records)?);
            match out {
                Some(p) => write_summary(&summary, create(&p)?)?,
                None => write_summary(&summary, io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Plot { records, out } => {
            let summary = summarize(&load_records(&records)?);
            fs::write(&out, plot_svg(&summary)).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Command::Config => {
            print!("{}", ExperimentConfig::default().to_text());
            Ok(())
        }
        Command::Decode {
            measure,
            method,
            m,
            lambda,
            k,
            alpha,
            grid_factor,
            trace,
            out,
        } => decode(measure, method, m, lambda, k, alpha, grid_factor, trace, out),
    }
}

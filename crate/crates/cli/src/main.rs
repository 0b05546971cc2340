//! `synsq`: synthesise signals, add noise, run synchrosqueezed wave packet
//! transforms, score them and run seeded experiments.
//!
//! Exit codes: 0 success, 1 parameter error, 2 input/format error,
//! 3 internal invariant violation.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synsq::io::{GridFile, RunConfig};
use synsq::metrics::{emd_score, ideal_for_oracle, IdealDistribution};
use synsq::signals::{add_noise, synth, NoiseKind, NoiseSpec, OracleId};
use synsq::statlab::{run_plan, ExperimentPlan};
use synsq::{redundant_sst, selective_max_sst, stack_2d, Error, Result, SqueezeMode, ThresholdMode};

#[derive(Parser)]
#[command(name = "synsq", version, about = "Synchrosqueezed wave packet transforms")]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a benchmark signal: chirp, benchmark, warped2d or plane:<hz>.
    Synth {
        generator: String,
        #[arg(long, default_value_t = 1024)]
        fs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add seeded noise to a signal grid.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        /// White Gaussian variance per sample.
        #[arg(long)]
        sigma2: Option<f64>,
        /// Split the Gaussian variance between real and imaginary parts.
        #[arg(long)]
        circular: bool,
        /// Alpha-stable noise: stability index.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        dispersion: f64,
        #[arg(long, default_value_t = 0.0)]
        location: f64,
        /// Largest modulus of the rescaled alpha-stable draw.
        #[arg(long, default_value_t = 15.0)]
        target_linf: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synchrosqueezed transform of a signal grid.
    Sst {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        red: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// Analysed band as `lo:hi` in Hz.
        #[arg(long, value_parser = parse_band)]
        band: Option<(f64, f64)>,
        /// `full` or `selective-max`.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SqueezeMode>,
        /// Width of the frequency bins in Hz.
        #[arg(long)]
        vbin: Option<f64>,
        /// `r` (scaled) or `s` (unscaled) magnitude threshold.
        #[arg(long, value_parser = parse_threshold)]
        threshold: Option<ThresholdMode>,
        /// 2D: comma-separated x2 rows to evaluate.
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
        /// 2D: sum the second frequency axis at this row slot.
        #[arg(long)]
        stack: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Earth mover's distance of a distribution against an oracle ridge or a
    /// reference distribution.
    Emd {
        tf: PathBuf,
        #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
        oracle: Option<String>,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Append a CSV row (with header when the file is new).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment plan and write its table as CSV.
    Experiment {
        plan: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_band(text: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn parse_mode(text: &str) -> std::result::Result<SqueezeMode, String> {
    match text {
        "full" => Ok(SqueezeMode::Full),
        "selective-max" => Ok(SqueezeMode::SelectiveMax),
        _ => Err("expected full or selective-max".into()),
    }
}

fn parse_threshold(text: &str) -> std::result::Result<ThresholdMode, String> {
    match text {
        "r" | "R" => Ok(ThresholdMode::R),
        "s" | "S" => Ok(ThresholdMode::S),
        _ => Err("expected r or s".into()),
    }
}

fn init_threads() -> Result<()> {
    let Ok(text) = std::env::var("SYNSQ_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::param(format!("SYNSQ_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::internal(e.to_string()))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_toml(&fs::read_to_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Synth { generator, fs, out } => {
            let sig = synth(&generator, fs)?;
            GridFile::from_signal(&sig)?.write(&out)?;
            println!("{} samples {:?}", sig.samples.len(), sig.shape());
        }
        Cmd::Noise {
            input,
            sigma2,
            circular,
            alpha,
            beta,
            dispersion,
            location,
            target_linf,
            seed,
            out,
        } => {
            let sig = GridFile::read(&input)?.to_signal()?;
            let kind = match (alpha, sigma2) {
                (Some(_), Some(_)) => return Err(Error::param("give either --sigma2 or --alpha, not both")),
                (Some(alpha), None) => NoiseKind::AlphaStable {
                    alpha,
                    beta,
                    dispersion,
                    location,
                    target_linf,
                },
                (None, Some(sigma2)) => NoiseKind::WhiteGaussian { sigma2, circular },
                (None, None) => cfg
                    .noise
                    .map(|n| n.kind)
                    .ok_or_else(|| Error::param("no noise given: use --sigma2, --alpha or a [noise] section"))?,
            };
            let seed = seed.or(cfg.noise.map(|n| n.seed)).unwrap_or(0);
            let noisy = add_noise(&sig, &NoiseSpec { kind, seed })?;
            GridFile::from_signal(&noisy)?.write(&out)?;
            if let Some(rec) = noisy.provenance.noise.last() {
                match rec.rescale_divisor {
                    Some(d) => println!("snr_db={} rescale_divisor={d}", rec.snr_db),
                    None => println!("snr_db={}", rec.snr_db),
                }
            }
        }
        Cmd::Sst {
            input,
            s,
            red,
            delta,
            band,
            mode,
            vbin,
            threshold,
            rows,
            stack,
            out,
        } => {
            let sig = GridFile::read(&input)?.to_signal()?;
            let f = &mut cfg.frame;
            f.s = s.unwrap_or(f.s);
            f.red = red.unwrap_or(f.red);
            f.band = band.or(f.band);
            let q = &mut cfg.squeeze;
            q.delta = delta.unwrap_or(q.delta);
            q.mode = mode.unwrap_or(q.mode);
            q.v_bin = vbin.unwrap_or(q.v_bin);
            q.threshold_mode = threshold.unwrap_or(q.threshold_mode);
            q.rows = rows.or(q.rows.take());
            cfg.squeeze.validate()?;
            let spec = cfg.frame.spec(sig.dim, sig.len)?;
            let mut tf = match cfg.squeeze.mode {
                SqueezeMode::Full => redundant_sst(&sig, &spec, &cfg.squeeze)?,
                SqueezeMode::SelectiveMax => selective_max_sst(&sig, &spec, &cfg.squeeze)?,
            };
            if let Some(slot) = stack {
                tf = stack_2d(&tf, slot)?;
            }
            let mut grid = GridFile::from_distribution(&tf, &sig.provenance)?;
            // everything needed to rerun the transform
            grid.header.attrs.insert("frame".into(), serde_json::to_value(&spec)?);
            grid.header.attrs.insert("squeeze".into(), serde_json::to_value(&cfg.squeeze)?);
            grid.write(&out)?;
            println!("dropped={} retained_energy={} masked_energy={}", tf.dropped, tf.total(), tf.energy);
        }
        Cmd::Emd {
            tf,
            oracle,
            reference,
            out,
        } => {
            let t = GridFile::read(&tf)?.to_distribution()?;
            if t.v_axes.len() != 1 || t.t.ndim() != 2 {
                return Err(Error::input("EMD needs a (v, b) distribution; run sst with --stack for 2D"));
            }
            let (ideal, against) = match (&oracle, &reference) {
                (Some(id), _) => (ideal_for_oracle(OracleId::parse(id)?, t.v_axes[0], t.lattice.len)?, id.clone()),
                (None, Some(r)) => {
                    let r = GridFile::read(r)?.to_distribution()?;
                    if r.v_axes.len() != 1 || r.t.ndim() != 2 {
                        return Err(Error::input("reference must be a (v, b) distribution"));
                    }
                    let d = r
                        .t
                        .into_dimensionality()
                        .map_err(|e| Error::input(e.to_string()))?;
                    let ideal = IdealDistribution {
                        d,
                        v_axis: r.v_axes[0],
                        out_of_band: Vec::new(),
                    };
                    (ideal, reference.as_ref().map(|p| p.display().to_string()).unwrap_or_default())
                }
                (None, None) => return Err(Error::param("give --oracle or --reference")),
            };
            let report = emd_score(&t, &ideal)?;
            println!("{}", report.emd);
            if let Some(path) = out {
                let new = !path.exists();
                let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
                if new {
                    writeln!(file, "tf,against,emd,scored,empty,out_of_band")?;
                }
                writeln!(
                    file,
                    "{},{},{},{},{},{}",
                    tf.display(),
                    against,
                    report.emd,
                    report.scored,
                    report.empty,
                    report.out_of_band
                )?;
            }
        }
        Cmd::Experiment {
            plan,
            seed,
            trials,
            out,
        } => {
            let mut plan = match plan {
                Some(p) => ExperimentPlan::from_toml(&fs::read_to_string(p)?)?,
                None => cfg
                    .experiment
                    .take()
                    .ok_or_else(|| Error::param("no plan file and no [experiment] section"))?
                    .resolved()?,
            };
            plan.seed = seed.unwrap_or(plan.seed);
            plan.trials = trials.or(plan.trials);
            let table = run_plan(&plan)?;
            match out.or(plan.output.clone()) {
                Some(path) => table.write_csv(fs::File::create(path)?)?,
                None => print!("{}", table.to_csv_string()?),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

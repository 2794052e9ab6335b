use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seamtrace_cli::commands::{
    cmd_eval, cmd_extract, cmd_overlay, cmd_study, cmd_sweep, cmd_synth, resolve_config,
};
use seamtrace_cli::exit_code;
use seamtrace_core::{AlphaWeighting, Config, Result, ScoreVariant};

/// Pixel-continuous contour extraction: local seam cutting in overlapped
/// squares along an initial curve, integrated into one global contour.
#[derive(Parser, Debug)]
#[command(name = "seamtrace", version, about)]
struct Cli {
    /// Worker threads (default: all cores; env SEAMTRACE_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigFlags {
    /// JSON config file; explicit flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of squares sampled along the initial curve.
    #[arg(long)]
    squares: Option<usize>,
    /// Square side as a fraction of the bounding-box size.
    #[arg(long = "size-factor")]
    size_factor: Option<f64>,
    /// Gradient weight in [0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Parabola-prior history length.
    #[arg(long)]
    window: Option<usize>,
    /// Covariance kernel support radius in pixels.
    #[arg(long)]
    h: Option<f64>,
    /// Neighborhood size of the integration walk.
    #[arg(long)]
    knn: Option<usize>,
    /// Walk scoring rule: corrected | literal.
    #[arg(long = "score-variant")]
    score_variant: Option<String>,
    /// Seam weighting rule: weighted | unweighted.
    #[arg(long = "alpha-weighting")]
    alpha_weighting: Option<String>,
    /// Explicit error normalizer in pixels (overrides inter-ocular).
    #[arg(long)]
    normalizer: Option<f64>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<Config> {
        let cfg = resolve_config(self.config.as_deref(), |cfg| {
            if let Some(v) = self.squares {
                cfg.square_count = v;
            }
            if let Some(v) = self.size_factor {
                cfg.square_size_factor = v;
            }
            if let Some(v) = self.alpha {
                cfg.alpha = v;
            }
            if let Some(v) = self.window {
                cfg.window = v;
            }
            if let Some(v) = self.h {
                cfg.h = v;
            }
            if let Some(v) = self.knn {
                cfg.knn = v;
            }
            if let Some(v) = &self.score_variant {
                cfg.score_variant = match v.as_str() {
                    "literal" => ScoreVariant::Literal,
                    _ => ScoreVariant::Corrected,
                };
            }
            if let Some(v) = &self.alpha_weighting {
                cfg.alpha_weighting = match v.as_str() {
                    "unweighted" => AlphaWeighting::Unweighted,
                    _ => AlphaWeighting::Weighted,
                };
            }
            if let Some(v) = self.normalizer {
                cfg.normalizer = Some(v);
            }
        })?;
        eprintln!("resolved config: {}", serde_json::to_string(&cfg).unwrap());
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract a contour from an image given an annotation.
    Extract {
        /// Input image (binary PGM P5 or PPM P6, maxval 255).
        #[arg(long)]
        image: PathBuf,
        /// Annotation JSON with at least the landmarks.
        #[arg(long)]
        annotation: PathBuf,
        /// Output contour JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also dump every local seam polyline to this JSON file.
        #[arg(long = "seams-out")]
        seams_out: Option<PathBuf>,
        /// Metrics report path (default: <out>.report.json next to --out).
        #[arg(long = "report-out")]
        report_out: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Evaluate predictions (contour JSON or landmark text) against truth.
    Eval {
        /// Prediction file or directory of predictions.
        #[arg(long)]
        pred: PathBuf,
        /// Directory of truth annotation JSON files.
        #[arg(long)]
        truth: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        /// Also write a cumulative error distribution CSV over DME.
        #[arg(long = "ced-out")]
        ced_out: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Render contours (and optionally seams) over the image as P6.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        /// Contour JSON files; each drawn in a distinct fixed color.
        #[arg(long = "contour")]
        contours: Vec<PathBuf>,
        /// Seams JSON file from `extract --seams-out`.
        #[arg(long)]
        seams: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one config parameter over a grid across a corpus.
    Sweep {
        /// Corpus directory (NNN.pgm + NNN.json pairs).
        #[arg(long)]
        corpus: PathBuf,
        /// Config field to sweep (e.g. alpha, square_count, K).
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Generate a synthetic corpus from a spec file.
    Synth {
        /// Synthetic spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Number of images to generate.
        #[arg(long)]
        count: usize,
        /// Override the spec's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parabola-fit study over annotated ground-truth contours.
    Study {
        /// Directory of annotation JSON files with contours.
        #[arg(long)]
        corpus: PathBuf,
        /// Output histogram CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract {
            image,
            annotation,
            out,
            seams_out,
            report_out,
            flags,
        } => {
            let cfg = flags.resolve()?;
            cmd_extract(
                &image,
                &annotation,
                &cfg,
                &out,
                seams_out.as_deref(),
                report_out.as_deref(),
            )
        }
        Command::Eval {
            pred,
            truth,
            out,
            ced_out,
            flags,
        } => {
            let cfg = flags.resolve()?;
            cmd_eval(&pred, &truth, &cfg, &out, ced_out.as_deref())
        }
        Command::Overlay {
            image,
            contours,
            seams,
            out,
        } => cmd_overlay(&image, &contours, seams.as_deref(), &out),
        Command::Sweep {
            corpus,
            param,
            values,
            out,
            flags,
        } => {
            let cfg = flags.resolve()?;
            cmd_sweep(&corpus, &param, &values, &cfg, &out)
        }
        Command::Synth {
            spec,
            count,
            seed,
            out,
        } => cmd_synth(&spec, count, seed, &out),
        Command::Study { corpus, out, flags } => {
            let cfg = flags.resolve()?;
            cmd_study(&corpus, &cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs.or_else(|| {
        std::env::var("SEAMTRACE_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(j) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

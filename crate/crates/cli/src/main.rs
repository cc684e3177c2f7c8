use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// Error classes, one per exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config values or inconsistent inputs (exit 1).
    Usage(String),
    /// Unreadable, malformed or unwritable files (exit 2).
    Io(String),
    /// A solve hit its iteration cap under `--strict` (exit 3).
    NotConverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::NotConverged(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::NotConverged(m) => f.write_str(m),
        }
    }
}

impl From<rdseg_core::Error> for Failure {
    fn from(e: rdseg_core::Error) -> Self {
        use rdseg_core::Error as E;
        match e {
            E::Io(_) | E::Csv(_) | E::Pgm(_) | E::Markers { .. } => Failure::Io(e.to_string()),
            E::InvalidInput(_) | E::DimensionMismatch { .. } | E::DegenerateFitting(_) => {
                Failure::Usage(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rdseg",
    version,
    about = "Two-phase TV segmentation with a restricted domain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic test image, its truth mask and a run configuration.
    Synth(SynthArgs),
    /// Segment one image at one restriction fraction.
    Segment {
        #[command(flatten)]
        run: RunArgs,
        /// Restriction fraction in [0, 1].
        #[arg(long)]
        q: Option<f64>,
    },
    /// Accuracy and timing over a list of restriction fractions.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated restriction fractions.
        #[arg(long)]
        q_list: Option<String>,
        /// Iteration cap for the reference solution.
        #[arg(long)]
        gt_max_outer: Option<usize>,
        /// Solves per q; the shortest wall time is kept.
        #[arg(long)]
        repeats: Option<usize>,
        /// One solve at a time (default; required for meaningful timings).
        #[arg(long, conflicts_with = "parallel")]
        serial: bool,
        /// Independent solves in parallel; wall times are contended.
        #[arg(long)]
        parallel: bool,
    },
    /// Compare two PGM files.
    Metrics {
        #[arg(value_enum)]
        metric: Metric,
        a: PathBuf,
        b: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Tanimoto overlap of two binary masks.
    E1,
    /// Sum of squared differences of two images scaled to [0, 1].
    E2,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = ["disk", "blobs", "concave"])]
    kind: String,
    /// Side length; overridden by --width/--height.
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Noise standard deviation in gray levels.
    #[arg(long, default_value_t = 20.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image: Option<PathBuf>,
    /// chan_vese or selective.
    #[arg(long)]
    fitting: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Binary PGM to estimate c1/c2 from when they are not given.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// "row col" lines for the selective fitting term.
    #[arg(long)]
    markers: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Divide the fitting term by its largest magnitude.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    inner_steps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// l2, rms or max.
    #[arg(long)]
    stop_norm: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 if a solve stops at its iteration cap.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn settings(
        &self,
        extra: &[(&str, Option<String>)],
    ) -> Result<BTreeMap<String, String>, Failure> {
        let mut map = match &self.config {
            Some(path) => config::read_file(path)?,
            None => BTreeMap::new(),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let num = |v: Option<f64>| v.map(|v| v.to_string());
        let count = |v: Option<usize>| v.map(|v| v.to_string());
        let flags = [
            ("image", path(&self.image)),
            ("fitting", self.fitting.clone()),
            ("c1", num(self.c1)),
            ("c2", num(self.c2)),
            ("mask", path(&self.mask)),
            ("markers", path(&self.markers)),
            ("gamma", num(self.gamma)),
            ("normalize", self.normalize.then(|| "true".to_string())),
            ("lambda", num(self.lambda)),
            ("theta", num(self.theta)),
            ("tau", num(self.tau)),
            ("delta", num(self.delta)),
            ("epsilon", num(self.epsilon)),
            ("max_outer", count(self.max_outer)),
            ("inner_steps", count(self.inner_steps)),
            ("alpha", num(self.alpha)),
            ("stop_norm", self.stop_norm.clone()),
            ("output_dir", path(&self.out)),
        ];
        for (key, value) in flags.into_iter().chain(extra.iter().cloned()) {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        }
        Ok(map)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(a) => commands::synth(&commands::SynthRequest {
            kind: a.kind.parse()?,
            width: a.width.unwrap_or(a.size),
            height: a.height.unwrap_or(a.size),
            noise_sigma: a.noise,
            seed: a.seed,
            out: a.out,
        }),
        Command::Segment { run, q } => {
            let map = run.settings(&[("q", q.map(|v| v.to_string()))])?;
            commands::segment(&config::RunConfig::from_map(&map)?, run.strict)
        }
        Command::Sweep {
            run,
            q_list,
            gt_max_outer,
            repeats,
            serial: _,
            parallel,
        } => {
            let map = run.settings(&[
                ("q_list", q_list),
                ("gt_max_outer", gt_max_outer.map(|v| v.to_string())),
                ("repeats", repeats.map(|v| v.to_string())),
            ])?;
            let mode = if parallel {
                rdseg_core::SweepMode::Parallel
            } else {
                rdseg_core::SweepMode::Serial
            };
            commands::sweep(&config::RunConfig::from_map(&map)?, mode, run.strict)
        }
        Command::Metrics { metric, a, b } => {
            commands::metrics(matches!(metric, Metric::E1), &a, &b)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("rdseg: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

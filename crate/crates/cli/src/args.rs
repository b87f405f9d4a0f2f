use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 0xB0D1;

#[derive(Debug, Parser)]
#[command(name = "chirp-rip", version, about = "Chirp RIP matrices: construction, checks and exponent optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct Common {
    /// Seed for every randomized step.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    pub seed: u64,
    /// Where to write the artifact (JSON report, CSV or ensemble).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sampled,
}

/// Where the columns come from.
#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct Source {
    /// Prime field; the full chirp family over it unless `--input` is given.
    #[arg(long)]
    pub p: Option<u64>,
    /// Ensemble JSON or dense matrix CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Keep only the first this many columns.
    #[arg(long)]
    pub columns: Option<usize>,
}

#[derive(Debug, Subcommand, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build an ensemble over F_p from the A and B constructions.
    Build {
        #[arg(long)]
        p: u64,
        /// Use the x²+Ux construction of A with this m (full F_p otherwise).
        #[arg(long)]
        m: Option<u64>,
        /// Cube side for the construction of B (full F_p otherwise).
        #[arg(long = "M")]
        side: Option<u64>,
        /// Cube dimension for B.
        #[arg(long, default_value_t = 1)]
        r: u32,
        /// Write the dense matrix as CSV instead of the ensemble JSON.
        #[arg(long)]
        dense: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compare closed-form Gram entries with direct summation.
    GramCheck {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Restricted isometry constant of a small ensemble.
    Rip {
        #[command(flatten)]
        source: Source,
        #[arg(long = "K")]
        k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        /// Subsets drawn in sampled mode.
        #[arg(long, default_value_t = 1000)]
        count: u64,
        /// Also check δ_{sK} ≤ 2s·δ_K.
        #[arg(long)]
        s: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Flat and weak flat RIP constants with the two lemma checks.
    FlatRip {
        #[command(flatten)]
        source: Source,
        #[arg(long = "K")]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sumset, difference set and additive energy of a set or embedded cube.
    Energy {
        /// Residue set file (line format or JSON).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long = "M")]
        side: Option<u64>,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Fourier bias of a set and the energy sandwich around it.
    Bias {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Root τ of (1/M)^{2τ} + ((M-1)/M)^τ = 1 and t = 2τ-1.
    Tau {
        #[arg(long = "M")]
        side: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Build A for (m, p) and check its hypothesis by exhaustion.
    #[command(name = "verify-A")]
    VerifyA {
        #[arg(long)]
        m: u64,
        /// Defaults to the smallest prime at least 3^(2m(4m-1)).
        #[arg(long)]
        p: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Maximize ε₁ for one m.
    Optimize {
        #[arg(long)]
        m: u64,
        #[arg(long, default_value = "1/10430")]
        c0: String,
        #[arg(long, default_value_t = 40)]
        precision: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Maximize ε₁ over a grid of m and write the curve as CSV.
    Sweep {
        /// "start:stop:factor"; a 30-point log grid on [1e6, 1e9] by default.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "1/10430")]
        c0: String,
        #[arg(long, default_value_t = 40)]
        precision: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Random instances of the quadratic exponential sum bound.
    Lemma9Check {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 500)]
        count: u64,
        #[command(flatten)]
        common: Common,
    },
    /// S, S′ and T on a random instance, against the Gram inner product.
    Sums {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 20)]
        count: u64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Build { .. } => "build",
            Command::GramCheck { .. } => "gram-check",
            Command::Rip { .. } => "rip",
            Command::FlatRip { .. } => "flat-rip",
            Command::Energy { .. } => "energy",
            Command::Bias { .. } => "bias",
            Command::Tau { .. } => "tau",
            Command::VerifyA { .. } => "verify-A",
            Command::Optimize { .. } => "optimize",
            Command::Sweep { .. } => "sweep",
            Command::Lemma9Check { .. } => "lemma9-check",
            Command::Sums { .. } => "sums",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Build { common, .. }
            | Command::GramCheck { common, .. }
            | Command::Rip { common, .. }
            | Command::FlatRip { common, .. }
            | Command::Energy { common, .. }
            | Command::Bias { common, .. }
            | Command::Tau { common, .. }
            | Command::VerifyA { common, .. }
            | Command::Optimize { common, .. }
            | Command::Sweep { common, .. }
            | Command::Lemma9Check { common, .. }
            | Command::Sums { common, .. } => common,
        }
    }
}

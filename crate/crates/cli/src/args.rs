use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Graphon laboratory: degree laws, level functionals, pull-backs, cut
/// norms, sampling, and the increasing-degree verification.
#[derive(Debug, Parser)]
#[command(name = "graphonlab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discretize a graphon into an n-block grid file.
    Build {
        #[command(flatten)]
        common: Common,
        /// How each cell value is obtained.
        #[arg(long, value_enum, default_value_t = Mode::CellAverage)]
        mode: Mode,
    },
    /// Degree profile D at m midpoints.
    Degrees {
        #[command(flatten)]
        common: Common,
    },
    /// Level functional h at m midpoints.
    Levels {
        #[command(flatten)]
        common: Common,
        /// Exceptional-set tolerance (default: 0 for closed forms, 1e-6 for grids).
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Laws of D and h, and the mean of h over degree bins.
    Laws {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eta: Option<f64>,
        /// Number of equal-width degree bins.
        #[arg(long, default_value_t = 16)]
        bins: usize,
    },
    /// Pull a graphon back along a measure-preserving map and discretize it.
    Pullback {
        #[command(flatten)]
        common: Common,
        /// Map file (mpm-v1). Without it the halves of [0,1] are swapped.
        #[arg(long)]
        map_file: Option<PathBuf>,
    },
    /// Relabel grid blocks by nondecreasing degree.
    Sort {
        #[command(flatten)]
        common: Common,
    },
    /// Cut norm of a grid, or of the difference of two grids.
    Cutnorm {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        other: Other,
        #[arg(long, value_enum, default_value_t = CutMethod::Auto)]
        method: CutMethod,
    },
    /// L1, L2, cut-distance upper bound and invariant lower bound between two graphons.
    Distance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        other: Other,
    },
    /// Run every step of the verification and emit the certificate.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Sample a W-random graph on n vertices.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// L1 distances between degree-sorted discretizations at increasing sizes.
    Diverge {
        #[command(flatten)]
        graphon: GraphonArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Comma-separated, strictly increasing grid sizes.
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20240001)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Counterexample,
    Constant,
    Product,
    Threshold,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Midpoint,
    CellAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutMethod {
    /// Exhaustive up to 24 blocks, local search above.
    Auto,
    Exhaustive,
    Local,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphonArgs {
    #[arg(long, value_enum, default_value_t = Family::Counterexample)]
    pub graphon: Family,
    /// Value of the constant family.
    #[arg(long)]
    pub p: Option<f64>,
    /// Threshold family parameter: W = 1{x + y > 2t}.
    #[arg(long)]
    pub t: Option<f64>,
    /// Grid file (gridgraphon-v1) for `--graphon grid`.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[command(flatten)]
    #[serde(flatten)]
    pub graphon: GraphonArgs,
    /// Resolution for profiles and laws.
    #[arg(long, default_value_t = 65536)]
    pub m: usize,
    /// Grid size (blocks, or vertices for `sample`).
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 20240001)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

/// Second graphon for two-argument commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Other {
    #[arg(long, value_enum)]
    pub other_graphon: Option<Family>,
    #[arg(long)]
    pub other_p: Option<f64>,
    #[arg(long)]
    pub other_t: Option<f64>,
    #[arg(long)]
    pub other_grid_file: Option<PathBuf>,
    /// Map file; the second graphon becomes the pull-back of the first.
    #[arg(long)]
    pub other_map_file: Option<PathBuf>,
}

impl Other {
    pub fn is_empty(&self) -> bool {
        self.other_graphon.is_none() && self.other_map_file.is_none()
    }

    pub fn graphon_args(&self) -> Option<GraphonArgs> {
        self.other_graphon.map(|graphon| GraphonArgs {
            graphon,
            p: self.other_p,
            t: self.other_t,
            grid_file: self.other_grid_file.clone(),
        })
    }
}

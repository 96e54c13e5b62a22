//! Command-line surface. Every flag has a config-file twin; flags win.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "propagator", version, about = "Free-particle propagator toolkit: evaluate, verify, converge, evolve")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Spatial dimension, 1 to 3.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Output directory for reports, CSVs and the run log.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the randomized sample points in `verify`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evaluate the kernel at one boundary condition and print value, modulus,
    /// phase and the classical action in hbar units.
    Kernel(KernelArgs),
    /// Run the verification suite; one JSON report per check, exit 1 if any fails.
    Verify(VerifyArgs),
    /// Convergence studies: slice count on the lattice route, regulator ladder
    /// on the momentum route. Writes CSV.
    Converge(ConvergeArgs),
    /// Evolve a Gaussian packet and write field snapshots plus a summary table.
    Evolve(EvolveArgs),
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Elapsed time, must be positive.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Displacement along the first axis (start pinned at the origin).
    #[arg(long)]
    pub dx: Option<f64>,
    /// Start point, comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// End point, comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Potential offset; presence selects the linear-potential kernel.
    #[arg(long = "V0", allow_hyphen_values = true)]
    pub v0: Option<f64>,
    /// Constant force, comma-separated; presence selects the linear-potential kernel.
    #[arg(long = "F", allow_hyphen_values = true)]
    pub force: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only the named checks (comma-separated).
    #[arg(long)]
    pub only: Option<String>,
    /// Boundary time for the semigroup and lattice checks.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Boundary displacement for the semigroup and lattice checks.
    #[arg(long)]
    pub dx: Option<f64>,
    /// Grid spacing for the field-based checks (default chosen per dimension).
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Grid half-width for the field-based checks.
    #[arg(long)]
    pub extent: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long = "V0", allow_hyphen_values = true)]
    pub v0: Option<f64>,
    #[arg(long = "F", allow_hyphen_values = true)]
    pub force: Option<String>,
    /// Slice counts for the lattice study, comma-separated, at least 3.
    #[arg(long)]
    pub n_list: Option<String>,
    /// Regulator ladder for the momentum study, comma-separated, decreasing.
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Momentum-space cutoff radius.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Momentum-space samples per axis.
    #[arg(long)]
    pub samples_per_axis: Option<usize>,
    /// Fraction of the cutoff ball tapered by the truncation window.
    #[arg(long)]
    pub taper_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Total evolution time, nonnegative.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Initial packet width.
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Initial wavevector, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub k0: Option<String>,
    /// Packet center, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub extent: Option<f64>,
    /// Number of equally spaced snapshots after the initial one.
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long = "V0", allow_hyphen_values = true)]
    pub v0: Option<f64>,
    #[arg(long = "F", allow_hyphen_values = true)]
    pub force: Option<String>,
}

//! Config resolution: built-in defaults, then the flat JSON config file, then
//! explicit CLI flags, later layers winning field by field.

use crate::args::{CommonArgs, ConvergeArgs, EvolveArgs, KernelArgs, VerifyArgs};
use propagator::{
    BoundaryData, KernelSpec, LinearPotentialSpec, PhysicsConfig, RealVector, MAX_DIM,
};
use serde::Deserialize;
use std::path::PathBuf;

/// A usage or configuration problem; the process exits 2. Verification
/// failures exit 1 but travel as ordinary return values, not errors.
#[derive(Debug)]
pub struct CliError(pub String);

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(format!("io error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// One flat document, every field optional. Unknown keys are rejected so a
/// typoed config fails loudly instead of silently running defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<usize>,
    pub mass: Option<f64>,
    pub hbar: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub t: Option<f64>,
    pub dx: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub x: Option<Vec<f64>>,
    pub v0: Option<f64>,
    pub force: Option<Vec<f64>>,
    pub spacing: Option<f64>,
    pub extent: Option<f64>,
    pub sigma0: Option<f64>,
    pub k0: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub snapshots: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub epsilons: Option<Vec<f64>>,
    pub cutoff: Option<f64>,
    pub samples_per_axis: Option<usize>,
    pub taper_fraction: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved run parameters shared by every subcommand.
#[derive(Debug)]
pub struct Settings {
    pub physics: PhysicsConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub file: FileConfig,
}

impl Settings {
    pub fn resolve(common: &CommonArgs) -> CliResult<Self> {
        let file = FileConfig::load(common.config.as_ref())?;
        let dim = common.dim.or(file.dim).unwrap_or(1);
        if dim == 0 || dim > MAX_DIM {
            return Err(CliError::usage(format!("dim must be 1..={MAX_DIM}, got {dim}")));
        }
        let mass = common.mass.or(file.mass).unwrap_or(1.0);
        let hbar = common.hbar.or(file.hbar).unwrap_or(1.0);
        let physics = PhysicsConfig::new(mass, hbar, dim)
            .map_err(|e| CliError::usage(format!("bad physics parameters: {e}")))?;
        let seed = common.seed.or(file.seed).unwrap_or(0);
        let out = common.out.clone().or_else(|| file.out.clone().map(PathBuf::from));
        Ok(Settings { physics, seed, out, file })
    }

    pub fn dim(&self) -> usize {
        self.physics.dim()
    }

    /// Output directory, created on demand. `require` distinguishes commands
    /// that must write files from those that default to the working directory.
    pub fn out_dir(&self, require: bool) -> CliResult<PathBuf> {
        let dir = match (&self.out, require) {
            (Some(d), _) => d.clone(),
            (None, false) => PathBuf::from("."),
            (None, true) => {
                return Err(CliError::usage("this command writes files; pass --out DIR"));
            }
        };
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(dir)
    }
}

pub fn parse_vector(text: &str, dim: usize, what: &str) -> CliResult<RealVector> {
    let comps: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let comps = comps.map_err(|e| CliError::usage(format!("bad {what} '{text}': {e}")))?;
    vector_from(&comps, dim, what)
}

pub fn vector_from(comps: &[f64], dim: usize, what: &str) -> CliResult<RealVector> {
    if comps.len() != dim {
        return Err(CliError::usage(format!(
            "{what} has {} components but dim = {dim}",
            comps.len()
        )));
    }
    RealVector::new(comps).map_err(|e| CliError::usage(format!("bad {what}: {e}")))
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| CliError::usage(format!("bad {what} '{text}': {e}"))))
        .collect()
}

/// Endpoints from either `--dx` (start at the origin) or explicit `--x0`/`--x`.
pub fn resolve_boundary(
    s: &Settings,
    t_flag: Option<f64>,
    dx_flag: Option<f64>,
    x0_flag: Option<&String>,
    x_flag: Option<&String>,
) -> CliResult<BoundaryData> {
    let dim = s.dim();
    let t = t_flag.or(s.file.t).unwrap_or(1.0);
    if !(t.is_finite() && t > 0.0) {
        return Err(CliError::usage("T must be positive"));
    }
    if dx_flag.is_some() && (x0_flag.is_some() || x_flag.is_some()) {
        return Err(CliError::usage("pass either --dx or --x0/--x, not both"));
    }
    let (x0, x) = if let Some(dx) = dx_flag {
        let mut comps = vec![0.0; dim];
        comps[0] = dx;
        (RealVector::zeros(dim), vector_from(&comps, dim, "dx")?)
    } else if x0_flag.is_some() || x_flag.is_some() {
        let x0 = match x0_flag {
            Some(txt) => parse_vector(txt, dim, "x0")?,
            None => RealVector::zeros(dim),
        };
        let x = match x_flag {
            Some(txt) => parse_vector(txt, dim, "x")?,
            None => RealVector::zeros(dim),
        };
        (x0, x)
    } else {
        let x0 = match &s.file.x0 {
            Some(v) => vector_from(v, dim, "x0")?,
            None => RealVector::zeros(dim),
        };
        let x = match (&s.file.x, s.file.dx) {
            (Some(v), _) => vector_from(v, dim, "x")?,
            (None, Some(dx)) => {
                let mut comps = vec![0.0; dim];
                comps[0] = dx;
                vector_from(&comps, dim, "dx")?
            }
            (None, None) => {
                let mut comps = vec![0.0; dim];
                comps[0] = 1.0;
                vector_from(&comps, dim, "dx")?
            }
        };
        (x0, x)
    };
    BoundaryData::new(x0, x, t).map_err(|e| CliError::usage(format!("bad boundary: {e}")))
}

/// Kernel choice: any potential flag or config key selects the linear kernel;
/// otherwise free. A zero potential still routes through the linear kernel,
/// whose value then matches the free one bit for bit.
pub fn resolve_kernel(
    s: &Settings,
    v0_flag: Option<f64>,
    force_flag: Option<&String>,
) -> CliResult<KernelSpec> {
    let dim = s.dim();
    let force = match force_flag {
        Some(txt) => Some(parse_vector(txt, dim, "force")?),
        None => match &s.file.force {
            Some(v) => Some(vector_from(v, dim, "force")?),
            None => None,
        },
    };
    let v0 = v0_flag.or(s.file.v0);
    if v0.is_none() && force.is_none() {
        return Ok(KernelSpec::Free);
    }
    let force = force.unwrap_or_else(|| RealVector::zeros(dim));
    Ok(KernelSpec::LinearPotential(LinearPotentialSpec::new(v0.unwrap_or(0.0), force)))
}

pub use resolved_args::*;

/// Per-command argument bundles after merging with the config file.
mod resolved_args {
    use super::*;

    pub struct KernelRun {
        pub b: BoundaryData,
        pub spec: KernelSpec,
    }

    pub fn resolve_kernel_run(s: &Settings, a: &KernelArgs) -> CliResult<KernelRun> {
        let b = resolve_boundary(s, a.t, a.dx, a.x0.as_ref(), a.x.as_ref())?;
        let spec = resolve_kernel(s, a.v0, a.force.as_ref())?;
        Ok(KernelRun { b, spec })
    }

    pub struct VerifyRun {
        pub only: Option<Vec<String>>,
        pub t: f64,
        pub dx: f64,
        pub spacing: Option<f64>,
        pub extent: Option<f64>,
    }

    pub fn resolve_verify_run(s: &Settings, a: &VerifyArgs) -> CliResult<VerifyRun> {
        let t = a.t.or(s.file.t).unwrap_or(1.0);
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::usage("T must be positive"));
        }
        let only = match &a.only {
            Some(txt) => Some(parse_list::<String>(txt, "check name")?),
            None => None,
        };
        Ok(VerifyRun {
            only,
            t,
            dx: a.dx.or(s.file.dx).unwrap_or(1.0),
            spacing: a.spacing.or(s.file.spacing),
            extent: a.extent.or(s.file.extent),
        })
    }

    pub struct ConvergeRun {
        pub b: BoundaryData,
        pub spec: KernelSpec,
        pub n_list: Vec<usize>,
        pub epsilons: Option<Vec<f64>>,
        pub cutoff: Option<f64>,
        pub samples_per_axis: Option<usize>,
        pub taper_fraction: Option<f64>,
    }

    pub fn resolve_converge_run(s: &Settings, a: &ConvergeArgs) -> CliResult<ConvergeRun> {
        let b = resolve_boundary(s, a.t, a.dx, None, None)?;
        let spec = resolve_kernel(s, a.v0, a.force.as_ref())?;
        let n_list = match &a.n_list {
            Some(txt) => parse_list::<usize>(txt, "n_list")?,
            None => s.file.n_list.clone().unwrap_or_else(|| vec![2, 4, 8, 16]),
        };
        let epsilons = match &a.epsilons {
            Some(txt) => Some(parse_list::<f64>(txt, "epsilons")?),
            None => s.file.epsilons.clone(),
        };
        Ok(ConvergeRun {
            b,
            spec,
            n_list,
            epsilons,
            cutoff: a.cutoff.or(s.file.cutoff),
            samples_per_axis: a.samples_per_axis.or(s.file.samples_per_axis),
            taper_fraction: a.taper_fraction.or(s.file.taper_fraction),
        })
    }

    pub struct EvolveRun {
        pub t: f64,
        pub sigma0: f64,
        pub k0: RealVector,
        pub center: RealVector,
        pub spacing: f64,
        pub extent: f64,
        pub snapshots: usize,
        pub spec: KernelSpec,
    }

    pub fn resolve_evolve_run(s: &Settings, a: &EvolveArgs) -> CliResult<EvolveRun> {
        let dim = s.dim();
        let t = a.t.or(s.file.t).unwrap_or(2.0);
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::usage("T must be nonnegative"));
        }
        let sigma0 = a.sigma0.or(s.file.sigma0).unwrap_or(1.0);
        let k0 = match &a.k0 {
            Some(txt) => parse_vector(txt, dim, "k0")?,
            None => match &s.file.k0 {
                Some(v) => vector_from(v, dim, "k0")?,
                None => RealVector::zeros(dim),
            },
        };
        let center = match &a.center {
            Some(txt) => parse_vector(txt, dim, "center")?,
            None => match &s.file.center {
                Some(v) => vector_from(v, dim, "center")?,
                None => RealVector::zeros(dim),
            },
        };
        let (default_extent, default_spacing) = match dim {
            1 => (12.0, 0.05),
            2 => (8.0, 0.08),
            _ => (5.0, 0.15),
        };
        let spacing = a.spacing.or(s.file.spacing).unwrap_or(default_spacing);
        let extent = a.extent.or(s.file.extent).unwrap_or(default_extent);
        if !(spacing.is_finite() && spacing > 0.0 && extent.is_finite() && extent > spacing) {
            return Err(CliError::usage(format!(
                "need 0 < spacing < extent, got spacing = {spacing}, extent = {extent}"
            )));
        }
        let snapshots = a.snapshots.or(s.file.snapshots).unwrap_or(4);
        if snapshots == 0 {
            return Err(CliError::usage("snapshots must be at least 1"));
        }
        let spec = resolve_kernel(s, a.v0, a.force.as_ref())?;
        Ok(EvolveRun { t, sigma0, k0, center, spacing, extent, snapshots, spec })
    }
}

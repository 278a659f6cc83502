use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "sobolev-gauge",
    version,
    about = "Geometric probes of Sobolev extension domains with decreasing integrability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate |B(x,r) ∩ Ω| for one or more radii.
    Volume(VolumeArgs),
    /// Density ratios |B|/|B∩Ω| over dyadic radii, with the growth fit.
    Density(DensityArgs),
    /// Intrinsic distance between point pairs on a grid graph.
    Geodesic(GeodesicArgs),
    /// Local metric-equivalence constant M(x,r).
    MScale(MScaleArgs),
    /// Far-set test function and its Lipschitz, gradient and support checks.
    Vaisala(VaisalaArgs),
    /// Discrete variational p-capacity of a condenser.
    Capacity(CapacityArgs),
    /// Lower estimate of Φ on a ball from the reflection extension operator.
    PhiEstimate(PhiEstimateArgs),
    /// Probe a necessary condition on a domain and aggregate a norm bound.
    Check(CheckArgs),
    /// q_max = 2p/(α+1) for the Hölder cusp over a range of p.
    AdmissibleRegion(AdmissibleArgs),
    /// Lower bound for the extension norm from the K or M field.
    NormBound(NormBoundArgs),
}

/// Where and how to write results. Not part of the config echo.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format for stdout or --output.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, conflicts_with = "output_dir")]
    pub output: Option<PathBuf>,
    /// Write both `<command>.csv` and `<command>.json` into this directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// A point or tuple given as comma-separated numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Tuple(pub Vec<f64>);

pub fn parse_tuple(s: &str) -> Result<Tuple, String> {
    let v = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number"))
                .and_then(|x| if x.is_finite() { Ok(x) } else { Err(format!("'{t}' is not finite")) })
        })
        .collect::<Result<Vec<f64>, String>>()?;
    Ok(Tuple(v))
}

/// Nonnegative integer, also accepting exponent notation such as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15) {
        return Err(format!("'{s}' is not a nonnegative integer"));
    }
    Ok(x as u64)
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a finite number")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum StencilArg {
    #[value(name = "8")]
    #[serde(rename = "8")]
    Eight,
    #[value(name = "16")]
    #[serde(rename = "16")]
    Sixteen,
}

impl From<StencilArg> for sobolev_gauge::metric::Stencil {
    fn from(s: StencilArg) -> Self {
        match s {
            StencilArg::Eight => sobolev_gauge::metric::Stencil::Eight,
            StencilArg::Sixteen => sobolev_gauge::metric::Stencil::Sixteen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    /// Exact vertical sections where the domain has them, else rejection.
    Auto,
    Rejection,
}

/// Volume quadrature settings shared by several subcommands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct VolumeMethodArgs {
    /// Monte Carlo samples per ball (accepts 1e5).
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub sampler: SamplerArg,
    /// Use midpoint quadrature with this cell side instead of Monte Carlo.
    #[arg(long, value_parser = parse_finite)]
    pub grid_h: Option<f64>,
}

impl VolumeMethodArgs {
    pub fn method(&self) -> sobolev_gauge::geometry::Method {
        use sobolev_gauge::geometry::Method;
        match (self.grid_h, self.sampler) {
            (Some(h), _) => Method::Grid { h },
            (None, SamplerArg::Auto) => Method::MonteCarlo { samples: self.samples },
            (None, SamplerArg::Rejection) => Method::Rejection { samples: self.samples },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VolumeArgs {
    /// Domain description (JSON file).
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub center: Tuple,
    /// One or more radii, comma-separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_finite)]
    pub radius: Vec<f64>,
    #[command(flatten)]
    pub method: VolumeMethodArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub center: Tuple,
    /// Largest radius r₀; level k uses r₀·2⁻ᵏ.
    #[arg(long, value_parser = parse_finite)]
    pub radius: f64,
    /// Number of dyadic levels; 4 or more adds the growth fit.
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[command(flatten)]
    pub method: VolumeMethodArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

/// Grid graph settings.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Lattice spacing.
    #[arg(long, value_parser = parse_finite)]
    pub h: f64,
    #[arg(long, value_enum, default_value = "16")]
    pub stencil: StencilArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeodesicArgs {
    #[arg(long)]
    pub domain: PathBuf,
    /// Start point; repeat together with --to for several pairs.
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub from: Vec<Tuple>,
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub to: Vec<Tuple>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MScaleArgs {
    #[arg(long)]
    pub domain: PathBuf,
    /// Base point; may be repeated.
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub center: Vec<Tuple>,
    /// One or more scales, comma-separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_finite)]
    pub r: Vec<f64>,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Directions sampled on the circle of radius r.
    #[arg(long, default_value_t = 32)]
    pub directions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VaisalaArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub from: Vec<Tuple>,
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub to: Vec<Tuple>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StartArg {
    Multilevel,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CapacityArgs {
    /// Condenser description (JSON file with E, U, Omega, p).
    #[arg(long)]
    pub condenser: PathBuf,
    /// Overrides the exponent in the condenser file.
    #[arg(long, value_parser = parse_finite)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_finite)]
    pub h: f64,
    /// Relative energy decrease that counts as converged.
    #[arg(long, default_value_t = 1e-8, value_parser = parse_finite)]
    pub tol: f64,
    #[arg(long, default_value = "200000", value_parser = parse_count)]
    pub max_iter: u64,
    #[arg(long, value_enum, default_value = "multilevel")]
    pub start: StartArg,
    /// Seed for --start random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhiEstimateArgs {
    /// Ball as cx,cy,r.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_tuple)]
    pub ball: Tuple,
    #[arg(long, value_parser = parse_finite)]
    pub p: f64,
    #[arg(long, value_parser = parse_finite)]
    pub q: f64,
    #[arg(long, default_value = "50", value_parser = parse_count)]
    pub family_size: u64,
    /// Cell side; defaults to r/64.
    #[arg(long, value_parser = parse_finite)]
    pub h: Option<f64>,
    /// Half-box Ω = (a,b)×(0,c) of the reflection operator, as a,b,c.
    #[arg(long, allow_hyphen_values = true, default_value = "-4,4,4", value_parser = parse_tuple)]
    pub half_box: Tuple,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionArg {
    Density,
    Metric,
    Capacity,
}

impl From<ConditionArg> for sobolev_gauge::conditions::ConditionId {
    fn from(c: ConditionArg) -> Self {
        use sobolev_gauge::conditions::ConditionId;
        match c {
            ConditionArg::Density => ConditionId::Density,
            ConditionArg::Metric => ConditionId::Metric,
            ConditionArg::Capacity => ConditionId::Capacity,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, value_parser = parse_finite)]
    pub p: f64,
    #[arg(long, value_parser = parse_finite)]
    pub q: f64,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    #[arg(long, default_value_t = 16)]
    pub probes: usize,
    /// Probe ball radius.
    #[arg(long, default_value_t = 0.05, value_parser = parse_finite)]
    pub radius: f64,
    /// Monte Carlo samples per density probe.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub samples: u64,
    /// Grid spacing for metric and capacity probes; defaults to radius/16
    /// (metric) or radius/32 (capacity).
    #[arg(long, value_parser = parse_finite)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value = "16")]
    pub stencil: StencilArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AdmissibleArgs {
    #[arg(long, value_parser = parse_finite)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_finite)]
    pub p_min: f64,
    #[arg(long, value_parser = parse_finite)]
    pub p_max: f64,
    #[arg(long, value_parser = parse_finite)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FieldArg {
    #[value(name = "k", alias = "K")]
    K,
    #[value(name = "m", alias = "M")]
    M,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NormBoundArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, value_parser = parse_finite)]
    pub p: f64,
    #[arg(long, value_parser = parse_finite)]
    pub q: f64,
    /// K: density ratio field; M: metric equivalence field (planar).
    #[arg(long, value_enum)]
    pub field: FieldArg,
    /// One or more scales, comma-separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_finite)]
    pub r: Vec<f64>,
    /// Spacing of the sample lattice.
    #[arg(long, default_value_t = 1.0 / 32.0, value_parser = parse_finite)]
    pub spacing: f64,
    /// Monte Carlo samples per density ratio (K).
    #[arg(long, default_value = "4000", value_parser = parse_count)]
    pub samples: u64,
    /// Graph spacing for M; defaults to the smallest r over 16.
    #[arg(long, value_parser = parse_finite)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value = "16")]
    pub stencil: StencilArg,
    #[arg(long, default_value_t = 32)]
    pub directions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_exponent_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn tuples() {
        assert_eq!(parse_tuple("-0.5, 0").unwrap(), Tuple(vec![-0.5, 0.0]));
        assert!(parse_tuple("1,x").is_err());
        assert!(parse_tuple("1,inf").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

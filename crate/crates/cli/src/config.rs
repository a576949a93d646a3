//! Group, region, wavelet and pipeline specifications.

use std::path::PathBuf;

use orbitlet_core::admissibility::full_region;
use orbitlet_core::expr::Expr;
use orbitlet_core::groups::{Block, CatalogId, CustomChart, GroupChart, TruncationSpec};
use orbitlet_core::linalg::{ChartPoint, Freq};
use orbitlet_core::orbits::Region;
use orbitlet_core::profile::FrequencyProfile;
use orbitlet_core::transform::{Band, Grid, HNodeSpec};
use serde::{Deserialize, Serialize};

use crate::io::json_arg;
use crate::report::CliError;

/// One chart block. Missing or `null` bounds are unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BlockSpec {
    Continuous {
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
        #[serde(default)]
        periodic: bool,
    },
    Discrete {
        #[serde(default)]
        lo: Option<i64>,
        #[serde(default)]
        hi: Option<i64>,
    },
}

impl From<BlockSpec> for Block {
    fn from(b: BlockSpec) -> Self {
        match b {
            BlockSpec::Continuous { lo, hi, periodic } => Block::Continuous {
                lo: lo.unwrap_or(f64::NEG_INFINITY),
                hi: hi.unwrap_or(f64::INFINITY),
                periodic,
            },
            BlockSpec::Discrete { lo, hi } => Block::Discrete {
                lo: lo.unwrap_or(i64::MIN),
                hi: hi.unwrap_or(i64::MAX),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomSpec {
    /// Defaults to √(number of embedding entries).
    #[serde(default)]
    pub ambient_dim: Option<usize>,
    pub blocks: Vec<BlockSpec>,
    /// Row-major entries of h(t) in the variables t1..td.
    pub embed: Vec<Expr>,
    pub density: Expr,
    pub modular: Expr,
}

/// `{"catalog": "SIM2"}`, `{"custom": {...}}`, or a bare catalog id string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Id(CatalogId),
    Catalog { catalog: CatalogId },
    Custom { custom: CustomSpec },
}

impl GroupSpec {
    pub fn chart(&self) -> Result<GroupChart, CliError> {
        match self {
            GroupSpec::Id(id) | GroupSpec::Catalog { catalog: id } => Ok(GroupChart::catalog(*id)),
            GroupSpec::Custom { custom } => {
                let k = custom
                    .ambient_dim
                    .unwrap_or_else(|| (custom.embed.len() as f64).sqrt().round() as usize);
                Ok(GroupChart::custom(CustomChart {
                    ambient_dim: k,
                    blocks: custom.blocks.iter().map(|&b| b.into()).collect(),
                    embed: custom.embed.clone(),
                    density: custom.density.clone(),
                    modular: custom.modular.clone(),
                })?)
            }
        }
    }
}

/// `--group` accepts a catalog id, a JSON file or inline JSON.
pub fn parse_group(arg: &str) -> Result<GroupSpec, CliError> {
    if let Ok(id) = arg.parse::<CatalogId>() {
        return Ok(GroupSpec::Id(id));
    }
    let looks_like_json = arg.trim_start().starts_with('{') || std::path::Path::new(arg).is_file();
    if !looks_like_json {
        return Err(CliError::Config(format!("unknown group `{arg}`")));
    }
    json_arg(arg, "group spec")
}

/// `all`, a Region JSON file, or inline Region JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Keyword(String),
    Region(Region),
}

impl Default for RegionSpec {
    fn default() -> Self {
        RegionSpec::Keyword("all".into())
    }
}

impl RegionSpec {
    pub fn resolve(&self, chart: &GroupChart) -> Result<Region, CliError> {
        match self {
            RegionSpec::Keyword(k) if k.eq_ignore_ascii_case("all") => Ok(full_region(chart)?),
            RegionSpec::Keyword(k) => Err(CliError::Config(format!("unknown region `{k}`"))),
            RegionSpec::Region(r) => Ok(r.clone()),
        }
    }
}

pub fn parse_region(arg: &str) -> Result<RegionSpec, CliError> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(RegionSpec::default());
    }
    Ok(RegionSpec::Region(json_arg(arg, "region")?))
}

/// A wavelet given inline or by file name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WaveletSource {
    Path(PathBuf),
    Inline(FrequencyProfile),
}

impl WaveletSource {
    pub fn load(&self) -> Result<FrequencyProfile, CliError> {
        match self {
            WaveletSource::Inline(p) => Ok(p.clone()),
            WaveletSource::Path(p) => json_arg(&p.to_string_lossy(), "wavelet"),
        }
    }
}

pub fn parse_wavelet(arg: &str) -> Result<FrequencyProfile, CliError> {
    match arg.to_ascii_lowercase().as_str() {
        "shannon" => Ok(FrequencyProfile::shannon()),
        _ => json_arg(arg, "wavelet"),
    }
}

pub fn parse_csv(arg: &str) -> Result<Vec<f64>, CliError> {
    arg.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number `{t}` in `{arg}`")))
        })
        .collect()
}

pub fn parse_freq(arg: &str) -> Result<Freq, CliError> {
    Freq::new(&parse_csv(arg)?).map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse_chart_point(arg: &str) -> Result<ChartPoint, CliError> {
    ChartPoint::new(&parse_csv(arg)?).map_err(|e| CliError::Config(e.to_string()))
}

/// `lo:hi`.
pub fn parse_range(arg: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = arg
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("range `{arg}` is not lo:hi")))?;
    let p = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad range bound `{t}`")))
    };
    let (lo, hi) = (p(a)?, p(b)?);
    if !(hi > lo) {
        return Err(CliError::Config(format!("empty range `{arg}`")));
    }
    Ok((lo, hi))
}

/// H-node layout from `--hnodes` / `--hrange`.
pub fn hnode_spec(chart: &GroupChart, nodes: Option<usize>, range: Option<(f64, f64)>) -> Result<HNodeSpec, CliError> {
    let n = nodes.unwrap_or(orbitlet_core::transform::DEFAULT_H_NODES);
    if n == 0 {
        return Err(CliError::Config("--hnodes must be positive".into()));
    }
    Ok(match range {
        Some((lo, hi)) => HNodeSpec::uniform(chart, lo, hi, n),
        None => HNodeSpec::with_nodes(chart, n),
    })
}

/// Either a centred grid or an explicit one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Centered {
        n: usize,
        dx: f64,
    },
    Explicit {
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
    },
}

impl GridSpec {
    pub fn build(&self, dim: usize) -> Result<Grid, CliError> {
        let g = match self {
            GridSpec::Centered { n, dx } => Grid::centered(dim, *n, *dx),
            GridSpec::Explicit { origin, spacing, shape } => Grid::new(origin.clone(), spacing.clone(), shape.clone()),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        if g.dim() != dim {
            return Err(CliError::Config(format!(
                "grid has dimension {}, group needs {dim}",
                g.dim()
            )));
        }
        if g.shape.iter().any(|&n| n < 2) {
            return Err(CliError::Config("grid sizes must be at least 2 per axis".into()));
        }
        Ok(g)
    }
}

/// Synthesis request used when no wavelet is supplied.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRequest {
    /// Chart coordinates of h₀ for the tiling construction.
    #[serde(default)]
    pub h0: Option<Vec<f64>>,
    /// Ask for the weakly admissible fallback.
    #[serde(default)]
    pub weak: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    #[serde(default = "default_orbits")]
    pub orbits: usize,
    #[serde(default = "default_duplicates")]
    pub duplicates: usize,
    /// Explicit probe frequencies; required for charts without an atlas.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
}

fn default_orbits() -> usize {
    orbitlet_core::admissibility::DEFAULT_PROBE_ORBITS
}

fn default_duplicates() -> usize {
    orbitlet_core::admissibility::DEFAULT_PROBE_DUPLICATES
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            orbits: default_orbits(),
            duplicates: default_duplicates(),
            points: vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripSpec {
    pub grid: GridSpec,
    #[serde(default = "one")]
    pub signals: usize,
    pub band: Band,
    #[serde(default)]
    pub hnodes: Option<HNodeSpec>,
    #[serde(default = "default_isometry_tol")]
    pub isometry_tol: f64,
    #[serde(default = "default_reconstruction_tol")]
    pub reconstruction_tol: f64,
}

fn one() -> usize {
    1
}

fn default_isometry_tol() -> f64 {
    1e-9
}

fn default_reconstruction_tol() -> f64 {
    1e-6
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

/// Everything the pipeline needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub group: GroupSpec,
    #[serde(default)]
    pub region: RegionSpec,
    #[serde(default)]
    pub wavelet: Option<WaveletSource>,
    #[serde(default)]
    pub synthesis: SynthesisRequest,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub truncation: Option<TruncationSpec>,
    #[serde(default)]
    pub round_trip: Option<RoundTripSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{what} must be positive, got {x}")))
            }
        };
        positive(self.tolerance, "tolerance")?;
        if let Some(rt) = &self.round_trip {
            positive(rt.isometry_tol, "isometry_tol")?;
            positive(rt.reconstruction_tol, "reconstruction_tol")?;
            if rt.signals == 0 {
                return Err(CliError::Config("round_trip.signals must be positive".into()));
            }
        }
        if let Some(WaveletSource::Path(p)) = &self.wavelet {
            if !p.is_file() {
                return Err(CliError::Config(format!("wavelet file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_specs_parse() {
        assert_eq!(parse_group("sim2").unwrap(), GroupSpec::Id(CatalogId::Sim2));
        let g = parse_group(r#"{"catalog": "DIAGLINE2"}"#).unwrap();
        assert_eq!(g.chart().unwrap().catalog_id(), Some(CatalogId::DiagLine2));
        let custom = r#"{"custom": {"blocks": [{"type": "continuous"}],
            "embed": ["exp(t1)"], "density": "1", "modular": "exp(-t1)"}}"#;
        let c = parse_group(custom).unwrap().chart().unwrap();
        assert_eq!(c.ambient_dim(), 1);
        assert!(!c.is_unimodular());
        assert!(matches!(parse_group("NOPE"), Err(CliError::Config(_))));
    }

    #[test]
    fn pipeline_config_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"group": "DYADIC1D", "wavelet": {"kind": "annulus", "inner": 1, "outer": 2}}"#)
                .unwrap();
        assert_eq!(c.region, RegionSpec::default());
        assert_eq!(c.tolerance, 1e-6);
        assert_eq!(c.wavelet.unwrap().load().unwrap(), FrequencyProfile::shannon());
        let bad: PipelineConfig = serde_json::from_str(r#"{"group": "SIM2", "tolerance": -1}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ranges_and_points() {
        assert_eq!(parse_range("-2.5:3").unwrap(), (-2.5, 3.0));
        assert!(parse_range("3:3").is_err());
        assert_eq!(parse_freq("1, 2").unwrap(), Freq::pair(1.0, 2.0));
    }
}

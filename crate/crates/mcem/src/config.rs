//! TOML run configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use mcem_core::{validate_params, BoundaryCondition, Domain, ModelSpec, Point, Region, SiteState, VacancyType};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub types: Vec<Vec<u8>>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub region: Option<RegionConfig>,
    pub boundary: Option<BoundaryConfig>,
    pub simulate: Option<SimulateConfig>,
    pub gap: Option<GapConfig>,
    pub reach: Option<ReachConfig>,
    pub crossing: Option<CrossingConfig>,
    pub event: Option<EventConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub origin: Option<Vec<i64>>,
    pub sides: Option<Vec<usize>>,
    /// Explicit site list instead of a box.
    pub sites: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// `closed`, `all-facilitating` or `frozen`.
    pub kind: String,
    /// Facilitated region sites for `all-facilitating`.
    pub sites: Option<Vec<Vec<i64>>>,
    /// State of every frame site not listed in `frame`, for `frozen`.
    pub fill: Option<String>,
    pub frame: Option<Vec<FrameEntry>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub site: Vec<i64>,
    pub state: String,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_max: Option<f64>,
    pub engine: Option<String>,
    pub burn_in: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub subset: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReachConfig {
    pub cap: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingConfig {
    pub h: Option<String>,
    pub ell: Option<usize>,
    pub n: Option<usize>,
    pub orientation: Option<String>,
    pub samples: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub name: Option<String>,
    pub ell: Option<usize>,
    pub n: Option<usize>,
    pub big_l: Option<usize>,
    pub big_l_c: Option<usize>,
    pub width: Option<usize>,
    pub samples: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.spec()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        validate_params(self.dimension, &self.types, &self.q).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn region(&self) -> Result<Region, CliError> {
        let r = self.region.as_ref().ok_or_else(|| CliError::Config("missing [region]".into()))?;
        let d = self.dimension;
        let region = match (&r.origin, &r.sides, &r.sites) {
            (origin, Some(sides), None) => {
                let origin = origin.clone().unwrap_or_else(|| vec![0; d]);
                if origin.len() != d || sides.len() != d {
                    return Err(CliError::Config("region.origin and region.sides need one entry per axis".into()));
                }
                Region::new_box(&origin, sides)
            }
            (None, None, Some(sites)) => {
                let pts = sites.iter().map(|s| point(d, s)).collect::<Result<Vec<_>, _>>()?;
                Region::from_sites(d, &pts)
            }
            _ => return Err(CliError::Config("region needs either sides (and origin) or sites".into())),
        };
        region.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn domain(&self) -> Result<Arc<Domain>, CliError> {
        let spec = self.spec()?;
        let region = self.region()?;
        let boundary = self.boundary_condition(&spec, &region)?;
        Domain::new(spec, region, boundary).map(Arc::new).map_err(|e| CliError::Config(e.to_string()))
    }

    fn boundary_condition(&self, spec: &ModelSpec, region: &Region) -> Result<BoundaryCondition, CliError> {
        let Some(b) = &self.boundary else {
            return Ok(BoundaryCondition::Closed);
        };
        let d = self.dimension;
        match b.kind.as_str() {
            "closed" => Ok(BoundaryCondition::Closed),
            "all-facilitating" => {
                let mut set = BTreeSet::new();
                for s in b.sites.iter().flatten() {
                    let p = point(d, s)?;
                    let i = region
                        .index_of(&p)
                        .ok_or_else(|| CliError::Config(format!("facilitated site {s:?} outside the region")))?;
                    set.insert(i);
                }
                Ok(BoundaryCondition::AllFacilitating(set))
            }
            "frozen" => {
                let fill = parse_state(d, b.fill.as_deref().unwrap_or("*"))?;
                let mut frame: BTreeMap<Point, SiteState> =
                    region.outer_frame(spec.types()).into_iter().map(|p| (p, fill)).collect();
                for e in b.frame.iter().flatten() {
                    let p = point(d, &e.site)?;
                    let slot = frame.get_mut(&p).ok_or_else(|| {
                        CliError::Config(format!("frame site {:?} is not on the outer frame", e.site))
                    })?;
                    *slot = parse_state(d, &e.state)?;
                }
                Ok(BoundaryCondition::Frozen(frame))
            }
            other => Err(CliError::Config(format!("unknown boundary kind {other:?}"))),
        }
    }
}

pub fn point(d: usize, coords: &[i64]) -> Result<Point, CliError> {
    if coords.len() != d {
        return Err(CliError::Config(format!("site {coords:?} does not have {d} coordinates")));
    }
    Ok(Point::new(coords))
}

/// Parses a bit string such as `01`.
pub fn parse_type(d: usize, s: &str) -> Result<VacancyType, CliError> {
    let bits: Vec<u8> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(CliError::Config(format!("bad vacancy type {s:?}"))),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != d {
        return Err(CliError::Config(format!("vacancy type {s:?} does not have {d} bits")));
    }
    VacancyType::from_bits(&bits).map_err(|e| CliError::Config(e.to_string()))
}

/// `*` (or `neutral`) or a bit string.
pub fn parse_state(d: usize, s: &str) -> Result<SiteState, CliError> {
    match s {
        "*" | "neutral" => Ok(SiteState::Neutral),
        _ => parse_type(d, s).map(SiteState::Vacancy),
    }
}

pub fn state_label(s: SiteState) -> String {
    match s {
        SiteState::Neutral => "*".into(),
        SiteState::Vacancy(h) => h.to_string(),
    }
}

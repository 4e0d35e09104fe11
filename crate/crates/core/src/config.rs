//! JSON experiment configuration: maps (powers, solved families, explicit
//! coefficients), matings and the settings of every pipeline stage.

use crate::error::{Error, Result};
use crate::portrait::{solve_family, CompiledFamily, FamilySolution, FamilySpec};
use crate::rational::RationalMap;
use crate::realizer::{MatingSpec, ACCEPT_TOL, NEWTON_TOL};
use crate::render::Viewport;
use crate::sphere::C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn c(z: [f64; 2]) -> C64 {
    C64::new(z[0], z[1])
}

/// Chooses one solution of a family: those whose named point lands on the
/// marked basin boundary (if requested), then the one nearest `near`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default)]
    pub on_boundary: Option<String>,
    /// Target parameter values, one `[re, im]` per parameter.
    #[serde(default)]
    pub near: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSource {
    /// `z^degree`, marked at 0 with local degree `degree`.
    Power { degree: usize },
    /// A solution of a parametrized family.
    Family {
        family: FamilySpec,
        #[serde(default)]
        select: Selector,
    },
    /// Explicit coefficients (ascending powers) and marked centre.
    Coefficients {
        numerator: Vec<[f64; 2]>,
        #[serde(default = "unit_den")]
        denominator: Vec<[f64; 2]>,
        #[serde(default)]
        center: [f64; 2],
        d0: usize,
    },
}

fn unit_den() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0]]
}

/// A concrete map with its marked superattracting centre.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedMap {
    pub name: String,
    pub map: RationalMap,
    pub center: C64,
    pub d0: usize,
    /// The selected family solution, for family sources.
    pub solution: Option<FamilySolution>,
    /// Every accepted solution of the family, in seed order.
    pub all_solutions: Vec<FamilySolution>,
}

impl MapSource {
    pub fn resolve(&self, seed: u64, tol: f64) -> Result<ResolvedMap> {
        match self {
            MapSource::Power { degree } => Ok(ResolvedMap {
                name: format!("z^{degree}"),
                map: RationalMap::power(*degree),
                center: C64::new(0.0, 0.0),
                d0: *degree,
                solution: None,
                all_solutions: Vec::new(),
            }),
            MapSource::Coefficients { numerator, denominator, center, d0 } => Ok(ResolvedMap {
                name: "explicit".into(),
                map: RationalMap::new(numerator.iter().map(|z| c(*z)).collect(), denominator.iter().map(|z| c(*z)).collect())?,
                center: c(*center),
                d0: *d0,
                solution: None,
                all_solutions: Vec::new(),
            }),
            MapSource::Family { family, select } => {
                let fam = CompiledFamily::new(family)?;
                let out = solve_family(family, &fam.default_seeds(seed), tol)?;
                let mut pool: Vec<&FamilySolution> = out.solutions.iter().collect();
                if let Some(p) = &select.on_boundary {
                    pool.retain(|s| s.boundary_angles.get(p).is_some_and(|a| a.is_some()));
                }
                let chosen = match &select.near {
                    Some(target) => pool.into_iter().min_by(|a, b| {
                        let dist = |s: &FamilySolution| -> f64 {
                            s.params.iter().zip(target).map(|(p, t)| (p - c(*t)).norm_sqr()).sum()
                        };
                        dist(a).total_cmp(&dist(b))
                    }),
                    None => pool.into_iter().next(),
                }
                .ok_or_else(|| Error::NoRealization(format!("family {} has no solution matching the selector", family.name)))?;
                Ok(ResolvedMap {
                    name: family.name.clone(),
                    map: chosen.map.clone(),
                    center: fam.center_at(&chosen.params)?,
                    d0: family.d0,
                    solution: Some(chosen.clone()),
                    all_solutions: out.solutions.clone(),
                })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MateConfig {
    pub f: MapSource,
    pub g: MapSource,
    #[serde(default = "one")]
    pub k: usize,
    /// Random normal-form maps used as Newton seeds.
    #[serde(default = "seed_maps")]
    pub seed_maps: usize,
}

fn one() -> usize {
    1
}
fn seed_maps() -> usize {
    128
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewportConfig {
    pub center: [f64; 2],
    pub width: f64,
    pub pixels: [usize; 2],
}

impl ViewportConfig {
    pub fn viewport(&self) -> Result<Viewport> {
        Viewport::new(c(self.center), self.width, (self.pixels[0], self.pixels[1]))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    /// Side length of the default square viewport.
    #[serde(default = "pixels")]
    pub pixels: usize,
    #[serde(default = "yes")]
    pub png: bool,
}

fn max_iter() -> usize {
    300
}
fn pixels() -> usize {
    512
}
fn yes() -> bool {
    true
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { max_iter: max_iter(), pixels: pixels(), png: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingConfig {
    #[serde(default = "gluing_samples")]
    pub samples: usize,
    #[serde(default = "epsilon")]
    pub epsilon: f64,
    /// Boundary samples of the model collars.
    #[serde(default = "collar")]
    pub collar: usize,
    #[serde(default = "model_samples")]
    pub model_samples: usize,
}

fn gluing_samples() -> usize {
    2048
}
fn epsilon() -> f64 {
    1e-4
}
fn collar() -> usize {
    4096
}
fn model_samples() -> usize {
    512
}

impl Default for GluingConfig {
    fn default() -> Self {
        GluingConfig { samples: gluing_samples(), epsilon: epsilon(), collar: collar(), model_samples: model_samples() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesConfig {
    #[serde(default = "curve_count")]
    pub count: usize,
    #[serde(default = "curve_vertices")]
    pub vertices: usize,
    /// Samples of the interface curve used as `T`.
    #[serde(default = "interface_samples")]
    pub interface_samples: usize,
    /// Pullback depth for the `ev` check; the eventual-periodicity bound of
    /// `P_f` when absent.
    #[serde(default)]
    pub pullbacks: Option<usize>,
}

fn curve_count() -> usize {
    50
}
fn curve_vertices() -> usize {
    256
}
fn interface_samples() -> usize {
    1024
}

impl Default for CurvesConfig {
    fn default() -> Self {
        CurvesConfig { count: curve_count(), vertices: curve_vertices(), interface_samples: interface_samples(), pullbacks: None }
    }
}

/// One experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// A single map (for `solve` and `render`).
    #[serde(default)]
    pub map: Option<MapSource>,
    /// A pair of maps to glue and mate.
    #[serde(default)]
    pub mate: Option<MateConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Newton tolerance for family solving.
    #[serde(default = "newton_tol")]
    pub tol: f64,
    /// Acceptance tolerance for realized relations.
    #[serde(default = "accept_tol")]
    pub accept_tol: f64,
    #[serde(default)]
    pub viewport: Option<ViewportConfig>,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default)]
    pub gluing: GluingConfig,
    #[serde(default)]
    pub curves: CurvesConfig,
}

fn newton_tol() -> f64 {
    NEWTON_TOL
}
fn accept_tol() -> f64 {
    ACCEPT_TOL
}

impl Config {
    /// Parses a JSON document; syntax and schema errors carry the line and
    /// column reported by the parser.
    pub fn parse(text: &str) -> Result<Config> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Built-in configuration by name (`f`, `g`, `fg`, `z2f`, `z2z2`,
    /// `fixed`).
    pub fn builtin(name: &str) -> Result<Config> {
        let text = match name {
            "f" => include_str!("../../../configs/f.json"),
            "g" => include_str!("../../../configs/g.json"),
            "fg" => include_str!("../../../configs/fg.json"),
            "z2f" => include_str!("../../../configs/z2f.json"),
            "z2z2" => include_str!("../../../configs/z2z2.json"),
            "fixed" => include_str!("../../../configs/fixed.json"),
            _ => return Err(Error::Invalid(format!("no built-in configuration named {name}"))),
        };
        Config::parse(text)
    }

    pub fn mating(&self) -> Result<(ResolvedMap, ResolvedMap, MatingSpec)> {
        let m = self.mate.as_ref().ok_or_else(|| Error::Invalid(format!("config {} has no mate section", self.name)))?;
        let f = m.f.resolve(self.seed, self.tol)?;
        let g = m.g.resolve(self.seed, self.tol)?;
        if f.d0 != g.d0 {
            return Err(Error::ChartMismatch(format!("local degrees {} and {} differ", f.d0, g.d0)));
        }
        let spec = MatingSpec { f: f.map.clone(), g: g.map.clone(), f_center: f.center, g_center: g.center, d0: f.d0, k: m.k };
        Ok((f, g, spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in ["f", "g", "fg", "z2f", "z2z2", "fixed"] {
            Config::builtin(name).unwrap();
        }
    }

    #[test]
    fn parse_error_has_position() {
        let err = Config::parse("{\n  \"name\": \"x\",\n  \"seed\": oops\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = Config::parse("{\"name\": \"x\", \"bogus\": 1}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn power_source() {
        let cfg = Config::parse(r#"{"name": "sq", "map": {"kind": "power", "degree": 2}}"#).unwrap();
        let m = cfg.map.unwrap().resolve(0, 1e-12).unwrap();
        assert_eq!(m.map, RationalMap::power(2));
        assert_eq!(m.d0, 2);
    }
}

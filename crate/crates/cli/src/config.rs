//! Experiment configuration: JSON on disk, flag overrides on the command line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use holonomy_core::oracles::EtaConvention;
use holonomy_core::{Coord, FrameGauge, LoopPath, ModelSpec, ParamPoint, ParametricSystem};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// An angle or scalar as written by the user: a number in radians, or a
/// string such as `"0.5pi"`, `"-pi/3"` or `"2*pi"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Number(f64),
    Text(String),
}

impl Angle {
    pub fn radians(&self) -> Result<f64, Failure> {
        match self {
            Angle::Number(x) => Ok(*x),
            Angle::Text(s) => parse_angle(s),
        }
    }
}

impl From<f64> for Angle {
    fn from(x: f64) -> Self {
        Angle::Number(x)
    }
}

fn parse_number(s: &str, whole: &str) -> Result<f64, Failure> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Failure::Validation(format!("cannot read `{whole}` as a number")))
}

/// Parses `1.25`, `pi`, `-pi`, `0.5pi`, `0.5*pi`, `pi/4`, `3pi/4`.
pub fn parse_angle(text: &str) -> Result<f64, Failure> {
    let s: String = text.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    let Some(at) = s.find("pi") else {
        return parse_number(&s, text);
    };
    let (head, tail) = (&s[..at], &s[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => parse_number(h, text)?,
    };
    let div = match tail {
        "" => 1.0,
        t => match t.strip_prefix('/') {
            Some(d) => parse_number(d, text)?,
            None => return Err(Failure::Validation(format!("cannot read `{text}` as an angle"))),
        },
    };
    if div == 0.0 {
        return Err(Failure::Validation(format!("division by zero in `{text}`")));
    }
    Ok(coef * PI / div)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Job {
    #[default]
    Holonomy,
    Evolve,
    Verify,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// The loop, with the coordinates it does not move given in `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopConfig {
    /// `coord` advanced by 2π.
    Coordinate {
        coord: Coord,
        #[serde(default)]
        base: BTreeMap<Coord, Angle>,
    },
    /// Berry model only; vertices are `[theta, phi]`.
    SphericalPolygon {
        vertices: Vec<[Angle; 2]>,
        #[serde(default)]
        base: BTreeMap<Coord, Angle>,
    },
    Polyline {
        vertices: Vec<BTreeMap<Coord, Angle>>,
        #[serde(default = "yes")]
        closed: bool,
        #[serde(default)]
        base: BTreeMap<Coord, Angle>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    /// Integration steps, or the starting point when `refine` is on.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "yes")]
    pub refine: bool,
    #[serde(default = "default_refine_tolerance")]
    pub refine_tolerance: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Kicks (or flow steps) for `evolve`.
    #[serde(default = "default_kicks")]
    pub kicks: usize,
    #[serde(default = "default_sweep_kicks")]
    pub sweep_kicks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    /// Allowed operator-norm distance from the closed form in `verify`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_eta")]
    pub eta_convention: EtaConvention,
    #[serde(default = "default_gauge")]
    pub gauge: FrameGauge,
}

fn default_steps() -> usize {
    1024
}
fn default_refine_tolerance() -> f64 {
    1e-6
}
fn default_max_steps() -> usize {
    1 << 20
}
fn default_kicks() -> usize {
    1 << 14
}
fn default_sweep_kicks() -> Vec<usize> {
    vec![1 << 10, 1 << 12, 1 << 14, 1 << 16]
}
fn default_tolerance() -> f64 {
    1e-5
}
fn default_eta() -> EtaConvention {
    EtaConvention::Swapped
}
fn default_gauge() -> FrameGauge {
    FrameGauge::ParallelTransport
}

impl Default for NumericConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("numeric defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(rename = "loop")]
    pub path: LoopConfig,
    #[serde(default)]
    pub job: Job,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub numeric: NumericConfig,
}

fn point_from(model: &ModelSpec, values: &BTreeMap<Coord, Angle>) -> Result<ParamPoint, Failure> {
    let allowed: Vec<Coord> = model.coords().into_iter().map(|(c, _)| c).collect();
    let mut pt = ParamPoint::new();
    for (coord, v) in values {
        if !allowed.contains(coord) {
            return Err(Failure::Validation(format!("{} has no `{coord}` coordinate", model.name())));
        }
        pt.set(*coord, v.radians()?);
    }
    Ok(pt)
}

fn complete(model: &ModelSpec, mut pt: ParamPoint) -> Result<ParamPoint, Failure> {
    if *model == ModelSpec::BerrySpinHalf && pt.get(Coord::B).is_none() {
        pt.set(Coord::B, 1.0);
    }
    for (coord, _) in model.coords() {
        if pt.get(coord).is_none() {
            return Err(Failure::Validation(format!("missing coordinate `{coord}` for {}", model.name())));
        }
    }
    Ok(pt)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        let n = &self.numeric;
        let positive = [
            ("tolerance", n.tolerance),
            ("refine_tolerance", n.refine_tolerance),
            ("total_time", n.total_time.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Validation(format!("`{name}` must be positive, got {v}")));
            }
        }
        if n.steps < 2 || n.max_steps < n.steps {
            return Err(Failure::Validation(format!(
                "need 2 ≤ steps ≤ max_steps, got steps {} and max_steps {}",
                n.steps, n.max_steps
            )));
        }
        if n.kicks < 2 || n.sweep_kicks.iter().any(|&k| k < 2) || n.sweep_kicks.is_empty() {
            return Err(Failure::Validation("kick counts must be at least 2".into()));
        }
        self.loop_path().map(|_| ())
    }

    pub fn loop_path(&self) -> Result<LoopPath, Failure> {
        let model = &self.model;
        let path = match &self.path {
            LoopConfig::Coordinate { coord, base } => {
                if !model.coords().iter().any(|(c, _)| c == coord) {
                    return Err(Failure::Validation(format!("{} has no `{coord}` coordinate", model.name())));
                }
                LoopPath::coordinate_loop(complete(model, point_from(model, base)?)?, *coord)
            }
            LoopConfig::SphericalPolygon { vertices, base } => {
                if *model != ModelSpec::BerrySpinHalf {
                    return Err(Failure::Validation("spherical polygons need the berry_spin_half model".into()));
                }
                let verts = vertices
                    .iter()
                    .map(|[t, p]| Ok((t.radians()?, p.radians()?)))
                    .collect::<Result<Vec<_>, Failure>>()?;
                let (t0, p0) = *verts.first().ok_or_else(|| Failure::Validation("empty polygon".into()))?;
                let start = point_from(model, base)?.with(Coord::Theta, t0).with(Coord::Phi, p0);
                LoopPath::spherical_polygon(complete(model, start)?, verts)
            }
            LoopConfig::Polyline { vertices, closed, base } => {
                let base = point_from(model, base)?;
                let verts = vertices
                    .iter()
                    .map(|v| {
                        let mut pt = base;
                        for (c, x) in point_from(model, v)?.coords() {
                            pt.set(c, x);
                        }
                        complete(model, pt)
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                let start = *verts.first().ok_or_else(|| Failure::Validation("empty polyline".into()))?;
                LoopPath::polyline(start, verts, *closed)
            }
        };
        path.map_err(Failure::from)
    }
}

/// `berry`, `map_spin_half:q=0,p=1` or `map_spin_threehalf:0,1`.
pub fn parse_model(text: &str) -> Result<ModelSpec, Failure> {
    let (name, ints) = text.split_once(':').unwrap_or((text, ""));
    let mut q = None;
    let mut p = None;
    for (k, part) in ints.split(',').filter(|s| !s.is_empty()).enumerate() {
        let (key, val) = match part.split_once('=') {
            Some((key, val)) => (key.trim(), val),
            None => (if k == 0 { "q" } else { "p" }, part),
        };
        let v: i32 = val
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("`{val}` is not an integer in `{text}`")))?;
        match key {
            "q" => q = Some(v),
            "p" => p = Some(v),
            other => return Err(Failure::Validation(format!("unknown model parameter `{other}`"))),
        }
    }
    let need = |x: Option<i32>, which: &str| {
        x.ok_or_else(|| Failure::Validation(format!("`{name}` needs the integer `{which}`")))
    };
    match name.trim() {
        "berry" | "berry_spin_half" => Ok(ModelSpec::BerrySpinHalf),
        "map_spin_half" | "spin_half" => Ok(ModelSpec::MapSpinHalf { q: need(q, "q")?, p: need(p, "p")? }),
        "map_spin_threehalf" | "spin_threehalf" => Ok(ModelSpec::MapSpinThreehalf {
            q: need(q, "q")?,
            p: need(p, "p")?,
        }),
        other => Err(Failure::Validation(format!("unknown model `{other}`"))),
    }
}

fn parse_assignments(text: &str) -> Result<BTreeMap<Coord, Angle>, Failure> {
    let mut out = BTreeMap::new();
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::Validation(format!("expected `name=value`, got `{part}`")))?;
        let coord = Coord::from_name(k.trim())
            .ok_or_else(|| Failure::Validation(format!("unknown coordinate `{}`", k.trim())))?;
        parse_angle(v)?;
        out.insert(coord, Angle::Text(v.trim().to_string()));
    }
    Ok(out)
}

/// `lambda:mu=1,lambda=0,theta=0.3pi` for a coordinate loop, or
/// `polygon:0.2pi/0,0.4pi/0.5pi,0.3pi/pi` for a geodesic polygon.
pub fn parse_loop(text: &str) -> Result<LoopConfig, Failure> {
    let (head, rest) = text.split_once(':').unwrap_or((text, ""));
    if head.trim() == "polygon" {
        let vertices = rest
            .split(',')
            .map(|v| {
                let (t, p) = v
                    .split_once('/')
                    .ok_or_else(|| Failure::Validation(format!("expected `theta/phi`, got `{v}`")))?;
                parse_angle(t)?;
                parse_angle(p)?;
                Ok([Angle::Text(t.trim().into()), Angle::Text(p.trim().into())])
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        return Ok(LoopConfig::SphericalPolygon {
            vertices,
            base: BTreeMap::new(),
        });
    }
    let coord = Coord::from_name(head.trim())
        .ok_or_else(|| Failure::Validation(format!("unknown loop coordinate `{}`", head.trim())))?;
    Ok(LoopConfig::Coordinate {
        coord,
        base: parse_assignments(rest)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle(" 1.25 ").unwrap(), 1.25);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("abc").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn models() {
        assert_eq!(parse_model("berry").unwrap(), ModelSpec::BerrySpinHalf);
        assert_eq!(parse_model("map_spin_half:q=0,p=3").unwrap(), ModelSpec::MapSpinHalf { q: 0, p: 3 });
        assert_eq!(parse_model("spin_threehalf:1,2").unwrap(), ModelSpec::MapSpinThreehalf { q: 1, p: 2 });
        assert!(parse_model("map_spin_half:q=1").is_err());
        assert!(parse_model("rotor").is_err());
    }

    #[test]
    fn loops_from_flags() {
        let l = parse_loop("lambda:mu=1,lambda=0,theta=0.5pi").unwrap();
        let LoopConfig::Coordinate { coord, base } = &l else { panic!() };
        assert_eq!(*coord, Coord::Lambda);
        assert_eq!(base[&Coord::Theta].radians().unwrap(), PI / 2.0);
        assert!(parse_loop("zeta:mu=1").is_err());
        assert!(parse_loop("polygon:0.2pi/0,0.4pi/0.5pi,0.3pi/pi").is_ok());
    }

    #[test]
    fn unknown_coordinates_are_rejected() {
        let cfg = ExperimentConfig {
            model: ModelSpec::BerrySpinHalf,
            path: parse_loop("phi:theta=1,mu=2").unwrap(),
            job: Job::Holonomy,
            output: OutputConfig::default(),
            numeric: NumericConfig::default(),
        };
        assert!(matches!(cfg.validate(), Err(Failure::Validation(_))));
    }
}

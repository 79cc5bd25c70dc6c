//! Closed-form holonomy matrices for the bundled loops, evaluated without
//! the integrator.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{block_diag, c, identity, mat_exp, pauli, wrap_phase, CMatrix};
use crate::models::{kick_strengths, spectral_data, Coord, ModelSpec, ParamPoint};
use crate::path::{cross, dot, unit, LoopPath, PathShape};

/// Guard band for floors of quantities that must not be integers.
const FLOOR_GUARD: f64 = 1e-12;

/// Which closed loop a prediction refers to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopKind {
    /// One coordinate advanced by 2π, the others fixed.
    Coordinate { coord: Coord },
    /// Berry model: a geodesic polygon of field directions `(θ, φ)`.
    SphericalPolygon { vertices: Vec<(f64, f64)> },
}

impl LoopKind {
    pub fn of(path: &LoopPath) -> Result<Self> {
        match &path.shape {
            PathShape::Coordinate { coord, from, to } if path.closed && (to - from - 2.0 * PI).abs() < 1e-12 => {
                Ok(LoopKind::Coordinate { coord: *coord })
            }
            PathShape::SphericalPolygon { vertices } => Ok(LoopKind::SphericalPolygon {
                vertices: vertices.clone(),
            }),
            _ => Err(Error::Unsupported(
                "no closed form for this loop; use a full coordinate circle or a spherical polygon".into(),
            )),
        }
    }
}

/// Reading of the inline angle `η_j` used in the `C_χ` holonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaConvention {
    /// `η₂ = arg(cosΘ cosη + i sinη)`, the same angle as `η₁`.
    Printed,
    /// `cosη₂ = cosη/β₂`, `sinη₂ = cosΘ sinη/β₂`, the unit vector along
    /// the `C_χ` Wilczek-Zee connection.
    Swapped,
}

/// The closed form that produced a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    BerrySolidAngle,
    BerryMeridian,
    BerryLatitude,
    MeridianSign,
    LatitudeCap,
    KickLoop,
    KramersMeridianSign,
    KramersKickLoop,
    KramersZenithAzimuth,
    KramersAzimuth,
    KramersChi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub m_expected: CMatrix,
    pub formula: Formula,
    pub inputs: BTreeMap<String, f64>,
}

/// Signed solid angle enclosed by a geodesic polygon of `(θ, φ)` vertices,
/// positive when the loop runs counterclockwise seen from outside.
///
/// A latitude circle at zenith `θ` traversed with increasing `φ` gives
/// `2π(1 − cos θ)`.
pub fn solid_angle(vertices: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<[f64; 3]> = Vec::with_capacity(vertices.len());
    for &(t, p) in vertices {
        let v = unit(t, p);
        if pts.last().map_or(true, |last| dot(last, &v) < 1.0 - 1e-15) {
            pts.push(v);
        }
    }
    while pts.len() > 1 && dot(&pts[0], &pts[pts.len() - 1]) >= 1.0 - 1e-15 {
        pts.pop();
    }
    if pts.len() < 3 {
        return 0.0;
    }
    let north = [0.0, 0.0, 1.0];
    let south = [0.0, 0.0, -1.0];
    // the fan degenerates at vertices antipodal to the apex
    let use_north = pts.iter().all(|v| dot(v, &south) < 1.0 - 1e-6);
    let apex = if use_north { north } else { south };
    let mut total = 0.0;
    for k in 0..pts.len() {
        let (b, cc) = (&pts[k], &pts[(k + 1) % pts.len()]);
        let num = dot(&apex, &cross(b, cc));
        let den = 1.0 + dot(&apex, b) + dot(b, cc) + dot(cc, &apex);
        total += 2.0 * num.atan2(den);
    }
    if use_north {
        total
    } else {
        total + 4.0 * PI * azimuthal_winding(&pts)
    }
}

fn azimuthal_winding(pts: &[[f64; 3]]) -> f64 {
    let mut sum = 0.0;
    for k in 0..pts.len() {
        let (a, b) = (&pts[k], &pts[(k + 1) % pts.len()]);
        sum += wrap_phase(b[1].atan2(b[0]) - a[1].atan2(a[0]));
    }
    (sum / (2.0 * PI)).round()
}

fn guarded_floor(x: f64, what: &str) -> Result<i64> {
    let nearest = x.round();
    if (x - nearest).abs() < FLOOR_GUARD {
        return Err(Error::Degeneracy(format!(
            "{what} = {x} is an integer: the loop touches the degeneracy set"
        )));
    }
    Ok(x.floor() as i64)
}

/// `⌊(B_λ + B_μ)/π⌋ − ⌊(B_λ − B_μ)/π⌋`.
pub fn index_r(b_lam: f64, b_mu: f64) -> Result<i64> {
    let plus = guarded_floor((b_lam + b_mu) / PI, "(B_λ + B_μ)/π")?;
    let minus = guarded_floor((b_lam - b_mu) / PI, "(B_λ − B_μ)/π")?;
    Ok(plus - minus)
}

/// The meridian-loop sign built from the squares of the `(r₊, r₋)` lattice:
/// `exp{iπ(1 + ⌊r₊⌋ − ⌊r₋⌋)}` with `r± = (B_λ ± B_μ)/π`.
pub fn meridian_sign_from_lattice(b_lam: f64, b_mu: f64) -> Result<f64> {
    let r_plus = (b_lam + b_mu) / PI;
    let r_minus = (b_lam - b_mu) / PI;
    let (fp, fm) = (guarded_floor(r_plus, "r₊")?, guarded_floor(r_minus, "r₋")?);
    Ok(c(0.0, PI * (1 + fp - fm) as f64).exp().re.round())
}

fn integers(model: &ModelSpec) -> Result<(i32, i32)> {
    model
        .integers()
        .ok_or_else(|| Error::Unsupported(format!("{} has no kick integers", model.name())))
}

/// Net change of the zenith angle `Θ` over one traversal of the loop, as
/// given by the case analysis of each loop.
pub fn theta_winding(model: &ModelSpec, kind: &LoopKind, base: &ParamPoint) -> Result<f64> {
    let LoopKind::Coordinate { coord } = kind else {
        return Err(Error::Unsupported("zenith winding is defined for coordinate loops".into()));
    };
    if *model == ModelSpec::BerrySpinHalf {
        return match coord {
            Coord::Theta => Ok(2.0 * PI),
            Coord::Phi | Coord::B => Ok(0.0),
            other => Err(Error::Unsupported(format!("the Berry model has no `{other}` loop"))),
        };
    }
    let (q, p) = integers(model)?;
    let (b_mu, b_lam) = kick_strengths(q, p, base.require(Coord::Mu)?, base.require(Coord::Lambda)?);
    match coord {
        Coord::Theta => {
            let r = index_r(b_lam, b_mu)?;
            Ok(if r % 2 == 0 {
                2.0 * PI * if (r / 2) % 2 == 0 { 1.0 } else { -1.0 }
            } else {
                0.0
            })
        }
        Coord::Lambda => {
            let k = guarded_floor(b_mu / PI, "B_μ/π")?;
            Ok(sign_pow(k) * PI * (2.0 - p as f64))
        }
        Coord::Mu => {
            let k = guarded_floor(b_lam / PI, "B_λ/π")?;
            Ok(sign_pow(k) * PI * (2.0 - q as f64))
        }
        Coord::Phi => Ok(0.0),
        Coord::Eta | Coord::Chi if matches!(model, ModelSpec::MapSpinThreehalf { .. }) => Ok(0.0),
        other => Err(Error::Unsupported(format!("{} has no `{other}` loop", model.name()))),
    }
}

fn sign_pow(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Net change of the principal zenith angle along sampled loop points,
/// unwrapped continuously.
pub fn traced_theta_winding(model: &ModelSpec, path: &LoopPath, steps: usize) -> Result<f64> {
    let pts = path.sample_points(steps);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for pt in &pts[1..pts.len() - 1] {
        let z = match model {
            ModelSpec::BerrySpinHalf => pt.require(Coord::Theta)?,
            _ => spectral_data(integers(model)?.0, integers(model)?.1, pt)?.zenith,
        };
        if let Some(pz) = prev {
            total += if *model == ModelSpec::BerrySpinHalf { z - pz } else { wrap_phase(z - pz) };
        }
        prev = Some(z);
    }
    Ok(total)
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn su2(generator: &CMatrix, angle: f64) -> CMatrix {
    mat_exp(generator, c(0.0, -angle)).expect("finite generator")
}

/// Block rotation `[[cos(x/2) I, −sin(x/2) I], [sin(x/2) I, cos(x/2) I]]`.
fn kramers_rotation(winding: f64) -> CMatrix {
    let (s, co) = (winding / 2.0).sin_cos();
    let mut m = CMatrix::zeros(4, 4);
    for i in 0..2 {
        m[(i, i)] = c(co, 0.0);
        m[(i + 2, i + 2)] = c(co, 0.0);
        m[(i, i + 2)] = c(-s, 0.0);
        m[(i + 2, i)] = c(s, 0.0);
    }
    m
}

fn block_swap(sign: f64) -> CMatrix {
    kramers_rotation(PI) * c(sign, 0.0)
}

/// The published holonomy matrix `M(C)` for `kind` starting at `base`.
pub fn predict(
    model: &ModelSpec,
    kind: &LoopKind,
    base: &ParamPoint,
    convention: EtaConvention,
) -> Result<Prediction> {
    let [sx, sy, sz] = pauli();
    match (model, kind) {
        (ModelSpec::BerrySpinHalf, LoopKind::SphericalPolygon { vertices }) => {
            let omega = solid_angle(vertices);
            Ok(Prediction {
                m_expected: su2(&sz, omega / 2.0),
                formula: Formula::BerrySolidAngle,
                inputs: inputs(&[("solid_angle", omega)]),
            })
        }
        (ModelSpec::BerrySpinHalf, LoopKind::Coordinate { coord: Coord::Theta }) => Ok(Prediction {
            m_expected: su2(&sy, PI),
            formula: Formula::BerryMeridian,
            inputs: inputs(&[("phi", base.get_or(Coord::Phi, 0.0))]),
        }),
        (ModelSpec::BerrySpinHalf, LoopKind::Coordinate { coord: Coord::Phi }) => {
            let theta = base.require(Coord::Theta)?;
            Ok(Prediction {
                m_expected: su2(&sz, PI * (1.0 - theta.cos())),
                formula: Formula::BerryLatitude,
                inputs: inputs(&[("theta", theta)]),
            })
        }
        (ModelSpec::MapSpinHalf { q, p }, LoopKind::Coordinate { coord }) => {
            let (b_mu, b_lam) = kick_strengths(*q, *p, base.require(Coord::Mu)?, base.require(Coord::Lambda)?);
            match coord {
                Coord::Theta => {
                    let r = index_r(b_lam, b_mu)?;
                    Ok(Prediction {
                        m_expected: identity(2) * c(sign_pow(1 + r), 0.0),
                        formula: Formula::MeridianSign,
                        inputs: inputs(&[("b_mu", b_mu), ("b_lam", b_lam), ("r", r as f64)]),
                    })
                }
                Coord::Phi => {
                    let zenith = spectral_data(*q, *p, base)?.zenith;
                    Ok(Prediction {
                        m_expected: su2(&sz, PI * (1.0 - zenith.cos())),
                        formula: Formula::LatitudeCap,
                        inputs: inputs(&[("zenith", zenith)]),
                    })
                }
                Coord::Lambda | Coord::Mu => {
                    let (k, n, k_name) = if *coord == Coord::Lambda {
                        (guarded_floor(b_mu / PI, "B_μ/π")?, *p, "k")
                    } else {
                        (guarded_floor(b_lam / PI, "B_λ/π")?, *q, "k")
                    };
                    let (half_s, half_c) = ((n as f64) * PI / 2.0).sin_cos();
                    let sk = sign_pow(k);
                    let m = CMatrix::from_row_slice(
                        2,
                        2,
                        &[c(-half_c, 0.0), c(-sk * half_s, 0.0), c(sk * half_s, 0.0), c(-half_c, 0.0)],
                    );
                    Ok(Prediction {
                        m_expected: m,
                        formula: Formula::KickLoop,
                        inputs: inputs(&[(k_name, k as f64), ("q", *q as f64), ("p", *p as f64)]),
                    })
                }
                other => Err(Error::Unsupported(format!("no closed form for the spin-½ map `{other}` loop"))),
            }
        }
        (ModelSpec::MapSpinThreehalf { q, p }, LoopKind::Coordinate { coord }) => {
            let (b_mu, b_lam) = kick_strengths(*q, *p, base.require(Coord::Mu)?, base.require(Coord::Lambda)?);
            let eta = base.get_or(Coord::Eta, 0.0);
            match coord {
                Coord::Theta => {
                    let r = index_r(b_lam, b_mu)?;
                    Ok(Prediction {
                        m_expected: identity(4) * c(sign_pow(1 + r), 0.0),
                        formula: Formula::KramersMeridianSign,
                        inputs: inputs(&[("b_mu", b_mu), ("b_lam", b_lam), ("r", r as f64)]),
                    })
                }
                Coord::Lambda | Coord::Mu => {
                    // λ loops are governed by p and ⌊B_μ/π⌋, μ loops by q and ⌊B_λ/π⌋
                    let (n, k) = if *coord == Coord::Lambda {
                        (*p, guarded_floor(b_mu / PI, "B_μ/π")?)
                    } else {
                        (*q, guarded_floor(b_lam / PI, "B_λ/π")?)
                    };
                    let m = if n.rem_euclid(2) == 0 {
                        identity(4) * c(sign_pow(1 + (n / 2) as i64), 0.0)
                    } else {
                        block_swap(sign_pow(k + ((n - 1) / 2) as i64))
                    };
                    Ok(Prediction {
                        m_expected: m,
                        formula: Formula::KramersKickLoop,
                        inputs: inputs(&[("k", k as f64), ("q", *q as f64), ("p", *p as f64)]),
                    })
                }
                Coord::Eta => {
                    let zenith = spectral_data(*q, *p, base)?.zenith;
                    let omega = 2.0 * PI * (1.0 - zenith.cos());
                    Ok(Prediction {
                        m_expected: block_diag(&[&su2(&sy, -omega / 2.0), &su2(&sy, omega / 2.0)]),
                        formula: Formula::KramersZenithAzimuth,
                        inputs: inputs(&[("zenith", zenith), ("omega", omega)]),
                    })
                }
                Coord::Phi | Coord::Chi => {
                    let zenith = spectral_data(*q, *p, base)?.zenith;
                    let (st, ct) = zenith.sin_cos();
                    let (se, ce) = eta.sin_cos();
                    let printed = se.atan2(ct * ce);
                    let (beta, angle, formula) = if *coord == Coord::Phi {
                        ((1.0 - (st * ce).powi(2)).sqrt(), printed, Formula::KramersAzimuth)
                    } else {
                        let beta = (1.0 - (st * se).powi(2)).sqrt();
                        let angle = match convention {
                            EtaConvention::Printed => printed,
                            EtaConvention::Swapped => (ct * se).atan2(ce),
                        };
                        (beta, angle, Formula::KramersChi)
                    };
                    let omega = 2.0 * PI * (1.0 - beta);
                    let (sa, ca) = angle.sin_cos();
                    let plus = &sz * c(ca, 0.0) + &sx * c(sa, 0.0);
                    let minus = &sz * c(ca, 0.0) - &sx * c(sa, 0.0);
                    let lower = if *coord == Coord::Phi {
                        su2(&minus, -omega / 2.0)
                    } else {
                        su2(&minus, omega / 2.0)
                    };
                    Ok(Prediction {
                        m_expected: block_diag(&[&su2(&plus, omega / 2.0), &lower]),
                        formula,
                        inputs: inputs(&[("zenith", zenith), ("eta", eta), ("beta", beta), ("eta_j", angle), ("omega", omega)]),
                    })
                }
                other => Err(Error::Unsupported(format!("no closed form for the spin-3/2 map `{other}` loop"))),
            }
        }
        (m, k) => Err(Error::Unsupported(format!("no closed form for {} along {k:?}", m.name()))),
    }
}

/// `predict` for the loop traced by `path`.
pub fn predict_path(model: &ModelSpec, path: &LoopPath, convention: EtaConvention) -> Result<Prediction> {
    predict(model, &LoopKind::of(path)?, &path.start(), convention)
}

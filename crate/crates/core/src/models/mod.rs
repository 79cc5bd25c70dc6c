//! The bundled parameterized systems.
//!
//! * [`ModelSpec::BerrySpinHalf`]: `H(B) = B·σ` for a spin-½ in a static field.
//! * [`ModelSpec::MapSpinHalf`]: the symmetric three-kick spin-½ quantum map
//!   on the `(μ, λ)` torus, with integers `(q, p)`.
//! * [`ModelSpec::MapSpinThreehalf`]: its spin-3/2 extension built from the
//!   time-reversal-invariant `τ_α` operators; every level is Kramers doubled.
//!
//! New systems plug into the rest of the crate by implementing
//! [`ParametricSystem`]. Only the three bundled models ship closed-form
//! connections and oracle predictions.

mod berry;
mod maps;
pub mod tau;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::framegauge::{ConnectionSample, Frame};
use crate::matcore::CMatrix;

pub use maps::{kick_strengths, spectral_data, zenith_derivative, SpectralData};
pub use tau::{quaternionic_eigs, tau_combination, tau_matrices, time_reversal_k, TauAlgebra};

/// Default tolerance on the defining residuals of the degeneracy sets.
pub const DEGENERACY_PREDICATE_TOL: f64 = 1e-9;

/// Named parameter coordinates. Angles are radians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coord {
    Mu,
    Lambda,
    Theta,
    Eta,
    Chi,
    Phi,
    B,
}

impl Coord {
    pub const ALL: [Coord; 7] = [
        Coord::Mu,
        Coord::Lambda,
        Coord::Theta,
        Coord::Eta,
        Coord::Chi,
        Coord::Phi,
        Coord::B,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coord::Mu => "mu",
            Coord::Lambda => "lambda",
            Coord::Theta => "theta",
            Coord::Eta => "eta",
            Coord::Chi => "chi",
            Coord::Phi => "phi",
            Coord::B => "b",
        }
    }

    pub fn from_name(s: &str) -> Option<Coord> {
        Coord::ALL.into_iter().find(|c| c.name() == s)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Topology of a coordinate direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Circle,
    SphereZenith,
    SphereAzimuth,
    Ray,
}

/// A point in parameter space. Coordinates are stored unreduced; periodic
/// ones are never wrapped behind the caller's back.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParamPoint {
    values: [Option<f64>; 7],
}

impl ParamPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, coord: Coord, value: f64) -> Self {
        self.values[coord.index()] = Some(value);
        self
    }

    pub fn set(&mut self, coord: Coord, value: f64) {
        self.values[coord.index()] = Some(value);
    }

    pub fn get(&self, coord: Coord) -> Option<f64> {
        self.values[coord.index()]
    }

    pub fn require(&self, coord: Coord) -> Result<f64> {
        self.get(coord)
            .ok_or_else(|| Error::Domain(format!("parameter point is missing `{coord}`")))
    }

    pub fn get_or(&self, coord: Coord, default: f64) -> f64 {
        self.get(coord).unwrap_or(default)
    }

    pub fn coords(&self) -> impl Iterator<Item = (Coord, f64)> + '_ {
        Coord::ALL
            .into_iter()
            .filter_map(|c| self.get(c).map(|v| (c, v)))
    }

    /// Component-wise `self + t·(other − self)` over the coordinates present in both.
    pub fn lerp(&self, other: &ParamPoint, t: f64) -> ParamPoint {
        let mut out = *self;
        for c in Coord::ALL {
            if let (Some(a), Some(b)) = (self.get(c), other.get(c)) {
                out.set(c, a + t * (b - a));
            }
        }
        out
    }

    /// Adds `scale·delta` to every coordinate present in both points.
    pub fn offset(&self, delta: &ParamPoint, scale: f64) -> ParamPoint {
        let mut out = *self;
        for c in Coord::ALL {
            if let (Some(a), Some(d)) = (self.get(c), delta.get(c)) {
                out.set(c, a + scale * d);
            }
        }
        out
    }

    pub fn difference(&self, other: &ParamPoint) -> ParamPoint {
        let mut out = ParamPoint::new();
        for c in Coord::ALL {
            if let (Some(a), Some(b)) = (self.get(c), other.get(c)) {
                out.set(c, a - b);
            }
        }
        out
    }
}

impl Serialize for ParamPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<Coord, f64> = self.coords().collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ParamPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<Coord, f64>::deserialize(deserializer)?;
        Ok(map
            .into_iter()
            .fold(ParamPoint::new(), |p, (c, v)| p.with(c, v)))
    }
}

/// What generates the dynamics at a parameter point.
#[derive(Clone, Debug)]
pub enum Generator {
    /// A one-period (Floquet) or one-kick unitary.
    Unitary(CMatrix),
    /// A Hamiltonian; unitaries are built by the dynamics layer.
    Hamiltonian(CMatrix),
}

impl Generator {
    pub fn matrix(&self) -> &CMatrix {
        match self {
            Generator::Unitary(m) | Generator::Hamiltonian(m) => m,
        }
    }
}

/// Classification against the published degeneracy sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    Clear,
    OnLine,
    OnLatticePoint,
}

/// A parameterized quantum system whose adiabatic holonomies can be computed.
pub trait ParametricSystem: Sync {
    fn dim(&self) -> usize;

    /// Coordinates the system depends on.
    fn coords(&self) -> Vec<(Coord, Topology)>;

    fn generator(&self, point: &ParamPoint) -> Result<Generator>;

    /// Groups of frame columns forming degenerate eigenspaces, in frame order.
    fn clusters(&self) -> Vec<Vec<usize>> {
        (0..self.dim()).map(|k| vec![k]).collect()
    }

    /// Closed-form eigenframe at `point`. Systems with a zenith angle accept
    /// an explicit (unwrapped) branch of it through `zenith`.
    fn analytic_frame(&self, point: &ParamPoint, zenith: Option<f64>) -> Result<Frame>;

    /// Principal-branch zenith angle used by the closed-form frame, if any.
    fn zenith(&self, _point: &ParamPoint) -> Result<Option<f64>> {
        Ok(None)
    }

    fn analytic_connection(
        &self,
        _point: &ParamPoint,
        _zenith: Option<f64>,
        direction: Coord,
    ) -> Result<ConnectionSample> {
        Err(Error::Unsupported(format!(
            "no closed-form connection along `{direction}`"
        )))
    }

    fn degeneracy(&self, _point: &ParamPoint, _tol: f64) -> Degeneracy {
        Degeneracy::Clear
    }

    /// Whether the straight segment between two nearby samples touches the
    /// degeneracy set. The default only checks the endpoints.
    fn segment_degeneracy(&self, a: &ParamPoint, b: &ParamPoint, tol: f64) -> Degeneracy {
        match self.degeneracy(a, tol) {
            Degeneracy::Clear => self.degeneracy(b, tol),
            d => d,
        }
    }
}

/// One of the bundled systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelSpec {
    BerrySpinHalf,
    MapSpinHalf { q: i32, p: i32 },
    MapSpinThreehalf { q: i32, p: i32 },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::BerrySpinHalf => "berry_spin_half",
            ModelSpec::MapSpinHalf { .. } => "map_spin_half",
            ModelSpec::MapSpinThreehalf { .. } => "map_spin_threehalf",
        }
    }

    pub fn is_map(&self) -> bool {
        !matches!(self, ModelSpec::BerrySpinHalf)
    }

    /// `(q, p)` for the map models.
    pub fn integers(&self) -> Option<(i32, i32)> {
        match *self {
            ModelSpec::BerrySpinHalf => None,
            ModelSpec::MapSpinHalf { q, p } | ModelSpec::MapSpinThreehalf { q, p } => Some((q, p)),
        }
    }

    /// The map unitary at `point`; the Berry model has no intrinsic map.
    pub fn unitary_at(&self, point: &ParamPoint) -> Result<CMatrix> {
        match *self {
            ModelSpec::BerrySpinHalf => Err(Error::Unsupported(
                "the Berry model is a Hamiltonian; build its unitary through dynamics".into(),
            )),
            ModelSpec::MapSpinHalf { q, p } => maps::spin_half_unitary(q, p, point),
            ModelSpec::MapSpinThreehalf { q, p } => maps::spin_three_half_unitary(q, p, point),
        }
    }

    pub fn hamiltonian_at(&self, point: &ParamPoint) -> Result<CMatrix> {
        match self {
            ModelSpec::BerrySpinHalf => berry::hamiltonian(point),
            _ => Err(Error::Unsupported(format!("{} is a quantum map", self.name()))),
        }
    }

    pub fn spectral_data(&self, point: &ParamPoint) -> Result<SpectralData> {
        match *self {
            ModelSpec::BerrySpinHalf => Err(Error::Unsupported(
                "spectral data is defined for the map models".into(),
            )),
            ModelSpec::MapSpinHalf { q, p } | ModelSpec::MapSpinThreehalf { q, p } => {
                spectral_data(q, p, point)
            }
        }
    }

    /// Closed-form eigenvectors at `point` in the published gauge.
    pub fn eigenvectors_at(&self, point: &ParamPoint) -> Result<Frame> {
        self.analytic_frame(point, None)
    }

    /// Classifies `point` against the degeneracy sets with the default tolerance.
    pub fn degeneracy_predicate(&self, point: &ParamPoint) -> Degeneracy {
        self.degeneracy(point, DEGENERACY_PREDICATE_TOL)
    }

    /// Checks that `point` carries every coordinate the model needs.
    pub fn validate_point(&self, point: &ParamPoint) -> Result<()> {
        for (c, _) in self.coords() {
            if c == Coord::B {
                continue;
            }
            point.require(c)?;
        }
        Ok(())
    }
}

impl ParametricSystem for ModelSpec {
    fn dim(&self) -> usize {
        match self {
            ModelSpec::MapSpinThreehalf { .. } => 4,
            _ => 2,
        }
    }

    fn coords(&self) -> Vec<(Coord, Topology)> {
        use Coord::*;
        use Topology::*;
        match self {
            ModelSpec::BerrySpinHalf => vec![(Theta, SphereZenith), (Phi, SphereAzimuth), (B, Ray)],
            ModelSpec::MapSpinHalf { .. } => vec![
                (Mu, Circle),
                (Lambda, Circle),
                (Theta, SphereZenith),
                (Phi, SphereAzimuth),
            ],
            ModelSpec::MapSpinThreehalf { .. } => vec![
                (Mu, Circle),
                (Lambda, Circle),
                (Theta, SphereZenith),
                (Eta, SphereZenith),
                (Chi, SphereAzimuth),
                (Phi, SphereAzimuth),
            ],
        }
    }

    fn generator(&self, point: &ParamPoint) -> Result<Generator> {
        match self {
            ModelSpec::BerrySpinHalf => berry::hamiltonian(point).map(Generator::Hamiltonian),
            _ => self.unitary_at(point).map(Generator::Unitary),
        }
    }

    fn clusters(&self) -> Vec<Vec<usize>> {
        match self {
            ModelSpec::MapSpinThreehalf { .. } => vec![vec![0, 1], vec![2, 3]],
            _ => vec![vec![0], vec![1]],
        }
    }

    fn analytic_frame(&self, point: &ParamPoint, zenith: Option<f64>) -> Result<Frame> {
        match *self {
            ModelSpec::BerrySpinHalf => berry::frame(point),
            ModelSpec::MapSpinHalf { q, p } => maps::spin_half_frame(q, p, point, zenith),
            ModelSpec::MapSpinThreehalf { q, p } => maps::spin_three_half_frame(q, p, point, zenith),
        }
    }

    fn zenith(&self, point: &ParamPoint) -> Result<Option<f64>> {
        match *self {
            ModelSpec::BerrySpinHalf => Ok(None),
            ModelSpec::MapSpinHalf { q, p } | ModelSpec::MapSpinThreehalf { q, p } => {
                Ok(Some(spectral_data(q, p, point)?.zenith))
            }
        }
    }

    fn analytic_connection(
        &self,
        point: &ParamPoint,
        zenith: Option<f64>,
        direction: Coord,
    ) -> Result<ConnectionSample> {
        match *self {
            ModelSpec::BerrySpinHalf => berry::connection(point, direction),
            ModelSpec::MapSpinHalf { q, p } => maps::spin_half_connection(q, p, point, zenith, direction),
            ModelSpec::MapSpinThreehalf { q, p } => {
                maps::spin_three_half_connection(q, p, point, zenith, direction)
            }
        }
    }

    fn degeneracy(&self, point: &ParamPoint, tol: f64) -> Degeneracy {
        match *self {
            ModelSpec::BerrySpinHalf => berry::degeneracy(point, tol),
            ModelSpec::MapSpinHalf { q, p } | ModelSpec::MapSpinThreehalf { q, p } => {
                maps::degeneracy(q, p, point, tol)
            }
        }
    }

    fn segment_degeneracy(&self, a: &ParamPoint, b: &ParamPoint, tol: f64) -> Degeneracy {
        match *self {
            ModelSpec::BerrySpinHalf => berry::segment_degeneracy(a, b, tol),
            ModelSpec::MapSpinHalf { q, p } | ModelSpec::MapSpinThreehalf { q, p } => {
                maps::segment_degeneracy(q, p, a, b, tol)
            }
        }
    }
}

//! Direct time evolution along a slowly varied parameter, and its
//! comparison with the adiabatic holonomy prediction `f(s') M(C) D f(s')†`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::framegauge::{
    block_diagonal_part, extract_pattern, holonomy_matrix, trace_frames, FrameGauge, HolonomyResult,
};
use crate::matcore::{c, diag, eigenvalues, identity, mat_exp, CMatrix, ONE};
use crate::models::{Coord, Generator, ModelSpec, ParamPoint, ParametricSystem};
use crate::path::LoopPath;

/// Default step count for the holonomy that enters a prediction.
pub const PREDICTION_STEPS: usize = 4096;

/// `L` parameter values `s_l = s(l/L)`, `l = 0 … L−1`, uniform in the path
/// parameter. The path end `s(1)` is where the last step lands, not a kick.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub path: LoopPath,
    pub kicks: usize,
    /// Total time of a Hamiltonian flow; defaults to `kicks` (unit steps).
    pub total_time: Option<f64>,
}

impl Schedule {
    pub fn new(path: LoopPath, kicks: usize) -> Result<Self> {
        if kicks == 0 {
            return Err(Error::Domain("a schedule needs at least one kick".into()));
        }
        Ok(Self {
            path,
            kicks,
            total_time: None,
        })
    }

    pub fn with_total_time(mut self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("total time must be positive, got {t}")));
        }
        self.total_time = Some(t);
        Ok(self)
    }

    pub fn points(&self) -> Vec<ParamPoint> {
        (0..self.kicks)
            .map(|l| self.path.point_at(l as f64 / self.kicks as f64))
            .collect()
    }

    pub fn time_step(&self) -> f64 {
        self.total_time.unwrap_or(self.kicks as f64) / self.kicks as f64
    }
}

/// `U(s_{L−1}) ⋯ U(s_1) U(s_0)`.
pub fn stroboscopic_evolve(model: &ModelSpec, schedule: &Schedule) -> Result<CMatrix> {
    let mut total = identity(model.dim());
    for pt in schedule.points() {
        total = model.unitary_at(&pt)? * total;
    }
    Ok(total)
}

/// `∏ exp(−iH(s̄_l)ε)` with `ε = T/L` and `s̄_l` the midpoint of
/// `s(l/L)` and `s((l+1)/L)`, later factors on the left.
pub fn hamiltonian_flow(model: &ModelSpec, path: &LoopPath, total_time: f64, steps: usize) -> Result<CMatrix> {
    if steps == 0 {
        return Err(Error::Domain("the flow needs at least one step".into()));
    }
    let eps = total_time / steps as f64;
    let mut total = identity(model.dim());
    for l in 0..steps {
        let a = path.point_at(l as f64 / steps as f64);
        let b = path.point_at((l + 1) as f64 / steps as f64);
        let h = model.hamiltonian_at(&a.lerp(&b, 0.5))?;
        total = mat_exp(&h, c(0.0, -eps))? * total;
    }
    Ok(total)
}

/// Exact evolution next to its adiabatic prediction.
#[derive(Clone, Debug)]
pub struct EvolutionReport {
    pub u_whole: CMatrix,
    pub adiabatic_prediction: CMatrix,
    /// `min_α ‖U_whole − e^{iα} f M D f†‖`.
    pub deviation: f64,
    /// `D = ∏ Z(s_l)` in the continued labels.
    pub dynamical_factor: CMatrix,
    pub holonomy: HolonomyResult,
    /// Frame at the loop start.
    pub frame: CMatrix,
    /// `f† U_whole f D⁻¹`, the holonomy read off the exact evolution.
    pub m_from_evolution: CMatrix,
    /// Largest-overlap image of each initial eigenvector.
    pub permutation: Vec<usize>,
}

/// Operator-norm distance between unitaries after the best global phase.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let rel = b.adjoint() * a;
    let mut phases: Vec<f64> = eigenvalues(&rel)?.iter().map(|z| z.arg()).collect();
    phases.sort_by(f64::total_cmp);
    let n = phases.len();
    let mut widest_gap: f64 = 0.0;
    for k in 0..n {
        let next = if k + 1 < n { phases[k + 1] } else { phases[0] + std::f64::consts::TAU };
        widest_gap = widest_gap.max(next - phases[k]);
    }
    let arc = (std::f64::consts::TAU - widest_gap).max(0.0);
    Ok(2.0 * (arc / 4.0).sin())
}

/// Runs the exact evolution for `schedule` and compares it with
/// `f(s') M(C) D f(s')†`. Maps are kicked; Hamiltonians flow with unit
/// steps unless the schedule sets a total time.
pub fn adiabatic_predict(model: &ModelSpec, schedule: &Schedule) -> Result<EvolutionReport> {
    let holonomy = holonomy_matrix(model, &schedule.path, PREDICTION_STEPS)?;
    adiabatic_predict_with(model, schedule, holonomy)
}

/// [`adiabatic_predict`] with a precomputed holonomy for the schedule's loop.
pub fn adiabatic_predict_with(
    model: &ModelSpec,
    schedule: &Schedule,
    holonomy: HolonomyResult,
) -> Result<EvolutionReport> {
    let l = schedule.kicks;
    if l < 2 {
        return Err(Error::Domain("an adiabatic comparison needs at least 2 kicks".into()));
    }
    let n = model.dim();
    let (u_whole, phases) = if model.is_map() {
        let u = stroboscopic_evolve(model, schedule)?;
        let frames = trace_frames(model, &schedule.path, l, FrameGauge::ParallelTransport)?;
        let lv = frames.interior_levels();
        let mut d = vec![ONE; n];
        for z in &lv[..l] {
            for (acc, zk) in d.iter_mut().zip(z) {
                *acc *= zk;
                *acc /= acc.norm();
            }
        }
        (u, d)
    } else {
        let t = schedule.total_time.unwrap_or(l as f64);
        let eps = t / l as f64;
        let u = hamiltonian_flow(model, &schedule.path, t, l)?;
        let frames = trace_frames(model, &schedule.path, 2 * l, FrameGauge::ParallelTransport)?;
        let lv = frames.interior_levels();
        let mut phase = vec![0.0; n];
        for k in 0..l {
            for (acc, e) in phase.iter_mut().zip(&lv[2 * k + 1]) {
                *acc -= e.re * eps;
            }
        }
        (u, phase.iter().map(|p| c(0.0, *p).exp()).collect())
    };
    let frame = model.analytic_frame(&schedule.path.start(), None)?.columns;
    let d = diag(&phases);
    let prediction = &frame * &holonomy.m * &d * frame.adjoint();
    let deviation = phase_aligned_distance(&u_whole, &prediction)?;
    let in_frame = frame.adjoint() * &u_whole * &frame;
    let d_inv = diag(&phases.iter().map(|z| z.conj()).collect::<Vec<Complex64>>());
    let m_from_evolution = &in_frame * d_inv;
    let permutation = extract_pattern(&in_frame, &holonomy.clusters).permutation;
    Ok(EvolutionReport {
        u_whole,
        adiabatic_prediction: prediction,
        deviation,
        dynamical_factor: d,
        holonomy,
        frame,
        m_from_evolution,
        permutation,
    })
}

/// Fujikawa's Hamiltonian matrix `F = f†Hf − A ṡ` in the model's frame,
/// with the parameter moving along `direction` at rate `sdot`.
pub fn fujikawa_f(model: &ModelSpec, point: &ParamPoint, direction: Coord, sdot: f64) -> Result<CMatrix> {
    let Generator::Hamiltonian(h) = model.generator(point)? else {
        return Err(Error::Unsupported(format!("{} is a map, not a Hamiltonian", model.name())));
    };
    let f = model.analytic_frame(point, None)?.columns;
    let a = model.analytic_connection(point, None, direction)?;
    let rotated = f.adjoint() * h * &f;
    Ok(rotated - a.a * c(sdot, 0.0))
}

/// Diagonal part `F^D = H^D − A^D ṡ` over the eigenvalue clusters.
pub fn fujikawa_f_diagonal(model: &ModelSpec, point: &ParamPoint, direction: Coord, sdot: f64) -> Result<CMatrix> {
    Ok(block_diagonal_part(
        &fujikawa_f(model, point, direction, sdot)?,
        &model.clusters(),
    ))
}

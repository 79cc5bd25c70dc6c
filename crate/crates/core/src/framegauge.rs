//! Frames, their continuation along paths, gauge connections and the
//! holonomy factors `W(C)`, `B(C)` and `M(C) = W(C)B(C)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{
    c, eig_hermitian, eig_unitary, eigenvalues, hermitian_part, identity, ordered_exp,
    polar_unitary, unitarity_defect, wrap_phase, CMatrix, PathOrdering, SampledCurve,
    DEGENERACY_TOL, IM, ONE,
};
use crate::models::{Coord, Degeneracy, Generator, ParamPoint, ParametricSystem, DEGENERACY_PREDICATE_TOL};
use crate::path::LoopPath;

const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Minimal overlap magnitude accepted when matching columns between steps.
const MATCH_FLOOR: f64 = 0.5;
/// An `|M_nm|` above this joins the permutation pattern.
pub const PATTERN_THRESHOLD: f64 = 0.99;
/// Residuals above this are reported as a pattern-extraction warning.
pub const RESIDUAL_WARNING: f64 = 1e-3;

/// An ordered orthonormal basis living at a parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub columns: CMatrix,
    /// Quantum-number label carried by each column.
    pub labels: Vec<usize>,
    pub param: ParamPoint,
}

impl Frame {
    pub fn new(columns: CMatrix, param: ParamPoint) -> Result<Self> {
        let labels = (0..columns.ncols()).collect();
        Self::with_labels(columns, labels, param)
    }

    pub fn with_labels(columns: CMatrix, labels: Vec<usize>, param: ParamPoint) -> Result<Self> {
        if !columns.is_square() || labels.len() != columns.ncols() {
            return Err(Error::Dimension(format!(
                "frame of shape {}×{} with {} labels",
                columns.nrows(),
                columns.ncols(),
                labels.len()
            )));
        }
        let defect = unitarity_defect(&columns);
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::Precondition(format!(
                "frame columns are not orthonormal: ‖f†f − I‖ = {defect:.3e}"
            )));
        }
        Ok(Self { columns, labels, param })
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }
}

/// `A(s)` with its block-diagonal part `A^D(s)` over the eigenvalue clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionSample {
    pub s: f64,
    pub a: CMatrix,
    pub a_diag: CMatrix,
}

impl ConnectionSample {
    pub fn from_parts(s: f64, a: CMatrix, a_diag: CMatrix) -> Self {
        Self { s, a, a_diag }
    }

    pub fn from_connection(s: f64, a: CMatrix, clusters: &[Vec<usize>]) -> Self {
        let a_diag = block_diagonal_part(&a, clusters);
        Self { s, a, a_diag }
    }
}

/// `m` restricted to the diagonal blocks given by `clusters`.
pub fn block_diagonal_part(m: &CMatrix, clusters: &[Vec<usize>]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for cl in clusters {
        for &i in cl {
            for &j in cl {
                out[(i, j)] = m[(i, j)];
            }
        }
    }
    out
}

/// How frame phases (and bases inside degenerate clusters) are fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameGauge {
    /// Discrete parallel transport: Löwdin alignment of each cluster with
    /// the previous step, so `A^D → 0` in the continuum limit.
    ParallelTransport,
    /// Column-by-column matching with real-positive overlaps; inside a
    /// cluster the columns are Gram-Schmidt orthonormalized in order.
    MaxOverlap,
    /// The model's closed-form frame with a continuously unwrapped zenith.
    Model,
}

/// Frames sampled along a path, including one extra sample past each end.
#[derive(Clone, Debug)]
pub struct LoopFrames {
    /// Curve parameter at the interior samples `k = 0 ..= n`.
    pub s: Vec<f64>,
    /// `n + 3` points: `t = −1/n, 0, 1/n, …, 1, 1 + 1/n`.
    pub points: Vec<ParamPoint>,
    pub frames: Vec<Frame>,
    /// Diagonal of `f†Uf` (maps) or `f†Hf` (Hamiltonians) per sample.
    pub levels: Vec<Vec<Complex64>>,
    pub clusters: Vec<Vec<usize>>,
    pub closed: bool,
}

impl LoopFrames {
    pub fn steps(&self) -> usize {
        self.s.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    /// The frames at `k = 0 ..= n`.
    pub fn interior(&self) -> &[Frame] {
        &self.frames[1..self.frames.len() - 1]
    }

    pub fn interior_levels(&self) -> &[Vec<Complex64>] {
        &self.levels[1..self.levels.len() - 1]
    }
}

struct Eigen {
    vectors: CMatrix,
    clusters: Vec<Vec<usize>>,
}

fn eigen_at(system: &dyn ParametricSystem, point: &ParamPoint) -> Result<(Generator, Eigen)> {
    let generator = system.generator(point)?;
    let eig = match &generator {
        Generator::Unitary(u) => {
            let e = eig_unitary(u, DEGENERACY_TOL)?;
            Eigen {
                vectors: e.eigenvectors,
                clusters: e.clusters,
            }
        }
        Generator::Hamiltonian(h) => {
            let e = eig_hermitian(h, DEGENERACY_TOL)?;
            Eigen {
                vectors: e.eigenvectors,
                clusters: e.clusters,
            }
        }
    };
    Ok((generator, eig))
}

fn cluster_sizes(clusters: &[Vec<usize>]) -> Vec<usize> {
    let mut s: Vec<usize> = clusters.iter().map(Vec::len).collect();
    s.sort_unstable();
    s
}

fn sub_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Aligns the eigenbasis at the next step with the previous frame.
fn match_step(
    prev: &CMatrix,
    eig: &Eigen,
    clusters: &[Vec<usize>],
    gauge: FrameGauge,
    step: usize,
) -> Result<CMatrix> {
    let n = prev.nrows();
    let overlap = prev.adjoint() * &eig.vectors;
    let mut used = vec![false; eig.clusters.len()];
    let mut next = CMatrix::zeros(n, n);
    for cl in clusters {
        let mut best: Option<(usize, f64)> = None;
        for (e, ecl) in eig.clusters.iter().enumerate() {
            if ecl.len() != cl.len() {
                continue;
            }
            let w: f64 = cl
                .iter()
                .flat_map(|&i| ecl.iter().map(move |&j| (i, j)))
                .map(|(i, j)| overlap[(i, j)].norm_sqr())
                .sum::<f64>()
                / cl.len() as f64;
            if best.map_or(true, |(_, bw)| w > bw) {
                best = Some((e, w));
            }
        }
        let (e, w) = best.ok_or_else(|| Error::Continuation {
            step,
            reason: "no eigenspace of matching dimension".into(),
        })?;
        if w.sqrt() <= MATCH_FLOOR {
            return Err(Error::Continuation {
                step,
                reason: format!("best overlap {:.3} is below {MATCH_FLOOR}; refine the path", w.sqrt()),
            });
        }
        if used[e] {
            return Err(Error::Continuation {
                step,
                reason: "ambiguous matching: two frame clusters claim one eigenspace".into(),
            });
        }
        used[e] = true;
        let v = sub_columns(&eig.vectors, &eig.clusters[e]);
        let f = sub_columns(prev, cl);
        let aligned = match gauge {
            FrameGauge::MaxOverlap => gram_schmidt_projection(&v, &f),
            _ => &v * polar_unitary(&(v.adjoint() * &f)),
        };
        for (k, &col) in cl.iter().enumerate() {
            next.set_column(col, &aligned.column(k));
        }
    }
    Ok(next)
}

/// Projects each column of `f` into span(`v`) and orthonormalizes in order.
fn gram_schmidt_projection(v: &CMatrix, f: &CMatrix) -> CMatrix {
    let proj = v * (v.adjoint() * f);
    let mut out = CMatrix::zeros(proj.nrows(), proj.ncols());
    for j in 0..proj.ncols() {
        let mut col = proj.column(j).into_owned();
        for k in 0..j {
            let prev = out.column(k).into_owned();
            let amp = prev.dotc(&col);
            col -= prev * amp;
        }
        let norm = col.norm();
        out.set_column(j, &(col / c(norm, 0.0)));
    }
    out
}

fn levels_of(generator: &Generator, frame: &CMatrix) -> Vec<Complex64> {
    let z = frame.adjoint() * generator.matrix() * frame;
    (0..frame.ncols())
        .map(|k| match generator {
            Generator::Unitary(_) => z[(k, k)] / z[(k, k)].norm(),
            Generator::Hamiltonian(_) => c(z[(k, k)].re, 0.0),
        })
        .collect()
}

fn unwrap_sequence(raw: &[f64], anchor: usize) -> Vec<f64> {
    let mut out = raw.to_vec();
    for k in 1..out.len() {
        out[k] = out[k - 1] + wrap_phase(raw[k] - out[k - 1]);
    }
    let shift = out[anchor] - raw[anchor];
    out.iter().map(|x| x - shift).collect()
}

/// Checks that no path segment touches the system's degeneracy set.
pub fn check_path_degeneracy(system: &dyn ParametricSystem, points: &[ParamPoint]) -> Result<()> {
    for (k, w) in points.windows(2).enumerate() {
        let d = system.segment_degeneracy(&w[0], &w[1], DEGENERACY_PREDICATE_TOL);
        if d != Degeneracy::Clear {
            let what = match d {
                Degeneracy::OnLine => "a degeneracy line",
                _ => "a degeneracy point",
            };
            return Err(Error::Degeneracy(format!(
                "path touches {what} between samples {k} and {}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Frames along `path` at `steps + 1` samples plus one past each end.
///
/// The start frame is the model's closed-form frame. Later frames are
/// matched to their predecessor by maximal overlap, never by eigenvalue
/// order.
pub fn trace_frames(
    system: &dyn ParametricSystem,
    path: &LoopPath,
    steps: usize,
    gauge: FrameGauge,
) -> Result<LoopFrames> {
    if steps < 2 {
        return Err(Error::Domain(format!("need at least 2 steps, got {steps}")));
    }
    let points = path.sample_points(steps);
    check_path_degeneracy(system, &points[1..points.len() - 1])?;
    let clusters = system.clusters();
    let n = system.dim();

    let zeniths = if gauge == FrameGauge::Model {
        let raw: Option<Vec<f64>> = points
            .iter()
            .map(|p| system.zenith(p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect();
        raw.map(|r| unwrap_sequence(&r, 1))
    } else {
        None
    };

    let mut frames: Vec<Option<Frame>> = vec![None; points.len()];
    let mut levels: Vec<Vec<Complex64>> = vec![Vec::new(); points.len()];
    let start = system.analytic_frame(&points[1], zeniths.as_ref().map(|z| z[1]))?;
    if start.dim() != n {
        return Err(Error::Dimension("closed-form frame has the wrong size".into()));
    }

    let expected = cluster_sizes(&clusters);
    let visit = |k: usize, prev: Option<&CMatrix>| -> Result<(CMatrix, Vec<Complex64>)> {
        let (generator, eig) = eigen_at(system, &points[k])?;
        if cluster_sizes(&eig.clusters) != expected {
            return Err(Error::Degeneracy(format!(
                "eigenvalue clusters change along the path at sample {k}"
            )));
        }
        let cols = match (gauge, prev) {
            (FrameGauge::Model, _) | (_, None) => {
                let z = zeniths.as_ref().map(|z| z[k]);
                system.analytic_frame(&points[k], z)?.columns
            }
            (_, Some(prev)) => match_step(prev, &eig, &clusters, gauge, k)?,
        };
        let lv = levels_of(&generator, &cols);
        Ok((cols, lv))
    };

    let (first, lv) = visit(1, None)?;
    levels[1] = lv;
    frames[1] = Some(Frame::new(first.clone(), points[1])?);
    let mut prev = first.clone();
    for k in 2..points.len() {
        let (cols, lv) = visit(k, Some(&prev))?;
        levels[k] = lv;
        frames[k] = Some(Frame::new(cols.clone(), points[k])?);
        prev = cols;
    }
    let (cols, lv) = visit(0, Some(&first))?;
    levels[0] = lv;
    frames[0] = Some(Frame::new(cols, points[0])?);

    if gauge == FrameGauge::Model {
        verify_model_frames(system, &frames, &points)?;
    }

    Ok(LoopFrames {
        s: path.sample_params(steps),
        points,
        frames: frames.into_iter().map(|f| f.expect("all samples visited")).collect(),
        levels,
        clusters,
        closed: path.closed,
    })
}

fn verify_model_frames(
    system: &dyn ParametricSystem,
    frames: &[Option<Frame>],
    points: &[ParamPoint],
) -> Result<()> {
    for (k, (f, p)) in frames.iter().zip(points).enumerate() {
        let f = f.as_ref().expect("visited");
        let g = system.generator(p)?;
        let z = f.columns.adjoint() * g.matrix() * &f.columns;
        let off = (&z - block_diagonal_part(&z, &system.clusters())).norm();
        if off > 1e-8 * (1.0 + z.norm()) {
            return Err(Error::Continuation {
                step: k,
                reason: format!("closed-form frame does not diagonalize the generator (off-diagonal {off:.2e})"),
            });
        }
    }
    Ok(())
}

/// Frames along the path, one per interior sample.
pub fn continue_frame(
    system: &dyn ParametricSystem,
    path: &LoopPath,
    steps: usize,
    gauge: FrameGauge,
) -> Result<Vec<Frame>> {
    Ok(trace_frames(system, path, steps, gauge)?.interior().to_vec())
}

/// Central-difference connection `A = i f†(f₊ − f₋)/(2h)`, Hermitized.
pub fn connection_at(
    prev: &Frame,
    mid: &Frame,
    next: &Frame,
    h: f64,
    s: f64,
    clusters: &[Vec<usize>],
) -> Result<ConnectionSample> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Domain(format!("connection spacing must be nonzero, got {h}")));
    }
    let diff = (&next.columns - &prev.columns) * c(1.0 / (2.0 * h), 0.0);
    let raw = mid.columns.adjoint() * diff * IM;
    Ok(ConnectionSample::from_connection(s, hermitian_part(&raw), clusters))
}

/// Closed-form connection of `system` at `point` along `direction`.
pub fn analytic_connection(
    system: &dyn ParametricSystem,
    point: &ParamPoint,
    direction: Coord,
) -> Result<ConnectionSample> {
    system.analytic_connection(point, None, direction)
}

/// `W(C) = exp_→(−i∮A ds)`.
pub fn wilson_line(connection: &SampledCurve) -> Result<CMatrix> {
    ordered_exp(connection, PathOrdering::Right, c(0.0, -1.0))
}

/// `B(C) = exp_←(+i∮A^D ds)`.
pub fn geometric_factor(connection_diag: &SampledCurve) -> Result<CMatrix> {
    ordered_exp(connection_diag, PathOrdering::Left, c(0.0, 1.0))
}

/// Permutation and level phases read off a holonomy matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    /// `permutation[n] = m` when column `n` of `M` is carried by row `m`.
    pub permutation: Vec<usize>,
    pub level_phases: Vec<Complex64>,
    pub residual: f64,
    pub warning: Option<String>,
}

/// Thresholds `M` cluster block by cluster block.
pub fn extract_pattern(m: &CMatrix, clusters: &[Vec<usize>]) -> Pattern {
    let n = m.nrows();
    let mut permutation = vec![usize::MAX; n];
    let mut level_phases = vec![ONE; n];
    let mut in_pattern = vec![vec![false; n]; n];
    let mut warning = None;
    let mut row_used = vec![false; clusters.len()];
    for col_cl in clusters {
        let k = col_cl.len();
        let weights: Vec<f64> = clusters
            .iter()
            .map(|row_cl| {
                if row_cl.len() != k {
                    return 0.0;
                }
                let fro: f64 = row_cl
                    .iter()
                    .flat_map(|&i| col_cl.iter().map(move |&j| m[(i, j)].norm_sqr()))
                    .sum();
                (fro / k as f64).sqrt()
            })
            .collect();
        let hits: Vec<usize> = (0..clusters.len())
            .filter(|&r| weights[r] > PATTERN_THRESHOLD)
            .collect();
        let target = if hits.len() == 1 {
            hits[0]
        } else {
            warning.get_or_insert_with(|| {
                format!("column block {col_cl:?} has {} entries above {PATTERN_THRESHOLD}", hits.len())
            });
            (0..clusters.len())
                .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
                .unwrap_or(0)
        };
        if row_used[target] {
            warning.get_or_insert_with(|| "pattern is not a permutation".into());
        }
        row_used[target] = true;
        let row_cl = &clusters[target];
        for (idx, &j) in col_cl.iter().enumerate() {
            permutation[j] = row_cl[idx.min(row_cl.len() - 1)];
            for &i in row_cl {
                in_pattern[i][j] = true;
            }
        }
        let block = CMatrix::from_fn(row_cl.len(), k, |a, b| m[(row_cl[a], col_cl[b])]);
        let phases = if k == 1 {
            vec![block[(0, 0)]]
        } else if row_cl.len() == k {
            eigenvalues(&block).unwrap_or_else(|_| vec![ONE; k])
        } else {
            vec![ONE; k]
        };
        for (idx, &j) in col_cl.iter().enumerate() {
            let z = phases[idx];
            level_phases[j] = if z.norm() > 0.0 { z / z.norm() } else { ONE };
        }
    }
    let mut residual = 0.0;
    for i in 0..n {
        for j in 0..n {
            if !in_pattern[i][j] {
                residual += m[(i, j)].norm_sqr();
            }
        }
    }
    let residual = residual.sqrt();
    if warning.is_none() && residual > RESIDUAL_WARNING {
        warning = Some(format!("off-pattern residual {residual:.3e}"));
    }
    Pattern {
        permutation,
        level_phases,
        residual,
        warning,
    }
}

/// The holonomy factors of one loop evaluation.
#[derive(Clone, Debug)]
pub struct HolonomyResult {
    pub w: CMatrix,
    pub b: CMatrix,
    pub m: CMatrix,
    pub permutation: Vec<usize>,
    pub level_phases: Vec<Complex64>,
    pub residual: f64,
    pub warning: Option<String>,
    pub steps: usize,
    pub clusters: Vec<Vec<usize>>,
}

impl HolonomyResult {
    fn assemble(w: CMatrix, b: CMatrix, steps: usize, clusters: Vec<Vec<usize>>) -> Self {
        let m = &w * &b;
        let pat = extract_pattern(&m, &clusters);
        Self {
            w,
            b,
            m,
            permutation: pat.permutation,
            level_phases: pat.level_phases,
            residual: pat.residual,
            warning: pat.warning,
            steps,
            clusters,
        }
    }

    /// Eigenphases of `M`, sorted.
    pub fn eigenphases(&self) -> Result<Vec<f64>> {
        let mut ph: Vec<f64> = eigenvalues(&self.m)?.iter().map(|z| z.arg()).collect();
        ph.sort_by(f64::total_cmp);
        Ok(ph)
    }
}

/// Frames, connections and holonomy of one discretized loop.
#[derive(Clone, Debug)]
pub struct HolonomyRun {
    pub frames: LoopFrames,
    /// One sample per interior point `k = 0 ..= n`.
    pub connections: Vec<ConnectionSample>,
    pub holonomy: HolonomyResult,
}

/// Finite-difference connections at every interior sample.
pub fn connections_along(frames: &LoopFrames) -> Result<Vec<ConnectionSample>> {
    let h = frames.spacing();
    (0..=frames.steps())
        .map(|k| {
            connection_at(
                &frames.frames[k],
                &frames.frames[k + 1],
                &frames.frames[k + 2],
                h,
                frames.s[k],
                &frames.clusters,
            )
        })
        .collect()
}

/// Integrates sampled connections into `W`, `B` and `M`.
pub fn integrate_connections(
    connections: &[ConnectionSample],
    clusters: &[Vec<usize>],
) -> Result<HolonomyResult> {
    let full = SampledCurve::new(connections.iter().map(|x| (x.s, x.a.clone())).collect(), true);
    let diag = SampledCurve::new(connections.iter().map(|x| (x.s, x.a_diag.clone())).collect(), true);
    let (full, diag) = match (full, diag) {
        (Ok(f), Ok(d)) => (f, d),
        _ => {
            // decreasing parameter: integrate in the reversed variable
            let flip = |x: &ConnectionSample, m: &CMatrix| (-x.s, -m.clone());
            let f = SampledCurve::new(connections.iter().map(|x| flip(x, &x.a)).collect(), true)?;
            let d = SampledCurve::new(connections.iter().map(|x| flip(x, &x.a_diag)).collect(), true)?;
            (f, d)
        }
    };
    let w = wilson_line(&full)?;
    let b = geometric_factor(&diag)?;
    Ok(HolonomyResult::assemble(w, b, connections.len() - 1, clusters.to_vec()))
}

fn check_closed(system: &dyn ParametricSystem, path: &LoopPath) -> Result<()> {
    if !path.closed {
        return Err(Error::Precondition("holonomy needs a closed loop".into()));
    }
    let a = system.generator(&path.point_at(0.0))?;
    let b = system.generator(&path.point_at(1.0))?;
    let gap = (a.matrix() - b.matrix()).norm();
    if gap > 1e-9 * (1.0 + a.matrix().norm()) {
        return Err(Error::Precondition(format!(
            "the generator is not periodic along the loop: ‖G(end) − G(start)‖ = {gap:.3e}"
        )));
    }
    Ok(())
}

pub fn holonomy_run(
    system: &dyn ParametricSystem,
    path: &LoopPath,
    steps: usize,
    gauge: FrameGauge,
) -> Result<HolonomyRun> {
    check_closed(system, path)?;
    let frames = trace_frames(system, path, steps, gauge)?;
    let connections = connections_along(&frames)?;
    let holonomy = integrate_connections(&connections, &frames.clusters)?;
    Ok(HolonomyRun {
        frames,
        connections,
        holonomy,
    })
}

/// `M(C)` at a fixed step count in the parallel-transport gauge.
pub fn holonomy_matrix(system: &dyn ParametricSystem, path: &LoopPath, steps: usize) -> Result<HolonomyResult> {
    holonomy_matrix_with(system, path, steps, FrameGauge::ParallelTransport)
}

pub fn holonomy_matrix_with(
    system: &dyn ParametricSystem,
    path: &LoopPath,
    steps: usize,
    gauge: FrameGauge,
) -> Result<HolonomyResult> {
    Ok(holonomy_run(system, path, steps, gauge)?.holonomy)
}

/// Step doubling for [`holonomy_auto`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement {
    pub initial_steps: usize,
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            initial_steps: 1024,
            tolerance: 1e-6,
            max_steps: 1 << 20,
        }
    }
}

/// Doubles the step count until successive `M` agree to the tolerance.
/// The last result carries a warning if the cap was hit first.
pub fn holonomy_auto(
    system: &dyn ParametricSystem,
    path: &LoopPath,
    gauge: FrameGauge,
    refine: Refinement,
) -> Result<HolonomyResult> {
    let mut steps = refine.initial_steps.max(2);
    let mut prev = holonomy_matrix_with(system, path, steps, gauge)?;
    while steps < refine.max_steps {
        steps *= 2;
        let next = holonomy_matrix_with(system, path, steps, gauge)?;
        let change = crate::matcore::op_norm(&(&next.m - &prev.m));
        prev = next;
        if change < refine.tolerance {
            return Ok(prev);
        }
    }
    prev.warning
        .get_or_insert_with(|| format!("step refinement stopped at the cap of {steps}"));
    Ok(prev)
}

/// Quasienergies (maps) or energies (Hamiltonians) of each frame label along
/// a path, unwrapped continuously for maps.
pub fn track_levels(
    system: &dyn ParametricSystem,
    path: &LoopPath,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let frames = trace_frames(system, path, steps, FrameGauge::ParallelTransport)?;
    let lv = frames.interior_levels();
    let is_map = matches!(system.generator(&path.start())?, Generator::Unitary(_));
    let n = system.dim();
    let mut out = vec![Vec::with_capacity(lv.len()); n];
    for (label, series) in out.iter_mut().enumerate() {
        if is_map {
            let raw: Vec<f64> = lv.iter().map(|z| -z[label].arg()).collect();
            *series = unwrap_sequence(&raw, 0);
        } else {
            *series = lv.iter().map(|z| z[label].re).collect();
        }
    }
    Ok(out)
}

/// Form restriction of a gauge map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeForm {
    General,
    /// `U(1)^N` phases times a permutation.
    DiagTimesPermutation,
}

/// A unitary-valued function `G` on parameter space.
#[derive(Clone)]
pub struct GaugeMap {
    func: Arc<dyn Fn(&ParamPoint) -> CMatrix + Send + Sync>,
    pub form: GaugeForm,
}

impl std::fmt::Debug for GaugeMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugeMap").field("form", &self.form).finish()
    }
}

impl GaugeMap {
    pub fn new<F>(form: GaugeForm, func: F) -> Self
    where
        F: Fn(&ParamPoint) -> CMatrix + Send + Sync + 'static,
    {
        Self {
            func: Arc::new(func),
            form,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(GaugeForm::DiagTimesPermutation, move |_| identity(n))
    }

    pub fn constant(g: CMatrix, form: GaugeForm) -> Self {
        Self::new(form, move |_| g.clone())
    }

    /// `G(s) = P·diag(e^{iα_k(s)})` with `P[perm[j], j] = 1`.
    pub fn phases_with_permutation<F>(perm: Vec<usize>, phases: F) -> Self
    where
        F: Fn(&ParamPoint) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(GaugeForm::DiagTimesPermutation, move |p| {
            let alpha = phases(p);
            let n = perm.len();
            let mut g = CMatrix::zeros(n, n);
            for (j, &i) in perm.iter().enumerate() {
                g[(i, j)] = c(0.0, alpha[j]).exp();
            }
            g
        })
    }

    /// `G` at `point`, validated as unitary (and of the declared form).
    pub fn at(&self, point: &ParamPoint) -> Result<CMatrix> {
        let g = (self.func)(point);
        let defect = unitarity_defect(&g);
        if defect > 1e-10 {
            return Err(Error::Precondition(format!(
                "gauge map is not unitary: ‖G†G − I‖ = {defect:.3e}"
            )));
        }
        if self.form == GaugeForm::DiagTimesPermutation {
            for j in 0..g.ncols() {
                let nonzero = (0..g.nrows()).filter(|&i| g[(i, j)].norm() > 1e-12).count();
                if nonzero != 1 {
                    return Err(Error::Precondition(
                        "gauge map is not a phase-times-permutation matrix".into(),
                    ));
                }
            }
        }
        Ok(g)
    }
}

fn gauge_clusters(g: &CMatrix, clusters: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = clusters
        .iter()
        .map(|cl| {
            (0..g.ncols())
                .filter(|&j| cl.iter().map(|&i| g[(i, j)].norm_sqr()).sum::<f64>() > 0.5)
                .collect::<Vec<_>>()
        })
        .filter(|cl| !cl.is_empty())
        .collect();
    out.sort();
    out
}

/// Transforms frames, connections and holonomy factors by `G`:
/// `f → fG`, `A → G†AG + iG†∂G`, `W → G(s')†WG(s'')`, `B → G(s'')†BG(s')`,
/// `M → G(s')†MG(s')`.
pub fn apply_gauge(run: &HolonomyRun, gauge: &GaugeMap) -> Result<HolonomyRun> {
    let frames = &run.frames;
    let gs: Vec<CMatrix> = frames
        .points
        .iter()
        .map(|p| gauge.at(p))
        .collect::<Result<_>>()?;
    let n_interior = frames.steps();
    let g_start = &gs[1];
    let g_end = &gs[n_interior + 1];
    let clusters = gauge_clusters(g_start, &frames.clusters);

    let new_frames: Vec<Frame> = frames
        .frames
        .iter()
        .zip(&gs)
        .map(|(f, g)| {
            let labels = (0..g.ncols())
                .map(|j| (0..g.nrows()).max_by(|&a, &b| g[(a, j)].norm().total_cmp(&g[(b, j)].norm())).map_or(j, |i| f.labels[i]))
                .collect();
            Frame::with_labels(&f.columns * g, labels, f.param)
        })
        .collect::<Result<_>>()?;
    let new_levels: Vec<Vec<Complex64>> = frames
        .levels
        .iter()
        .zip(&gs)
        .map(|(lv, g)| {
            (0..g.ncols())
                .map(|j| (0..g.nrows()).map(|i| lv[i] * g[(i, j)].norm_sqr()).sum())
                .collect()
        })
        .collect();

    let h = frames.spacing();
    let connections: Vec<ConnectionSample> = run
        .connections
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let g = &gs[k + 1];
            let dg = (&gs[k + 2] - &gs[k]) * c(1.0 / (2.0 * h), 0.0);
            let a = g.adjoint() * &x.a * g + g.adjoint() * dg * IM;
            ConnectionSample::from_connection(x.s, a, &clusters)
        })
        .collect();

    let hol = &run.holonomy;
    let w = g_start.adjoint() * &hol.w * g_end;
    let b = g_end.adjoint() * &hol.b * g_start;
    let mut holonomy = HolonomyResult::assemble(w, b, hol.steps, clusters.clone());
    // M transforms by G(s') alone; W·B already equals that up to G(s'')G(s'')†
    holonomy.m = g_start.adjoint() * &hol.m * g_start;
    let pat = extract_pattern(&holonomy.m, &clusters);
    holonomy.permutation = pat.permutation;
    holonomy.level_phases = pat.level_phases;
    holonomy.residual = pat.residual;
    holonomy.warning = pat.warning;

    Ok(HolonomyRun {
        frames: LoopFrames {
            s: frames.s.clone(),
            points: frames.points.clone(),
            frames: new_frames,
            levels: new_levels,
            clusters,
            closed: frames.closed,
        },
        connections,
        holonomy,
    })
}

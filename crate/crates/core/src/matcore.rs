//! Dense complex linear algebra for small (N ≤ 16) matrices.
//!
//! Matrix exponentials, eigen-decompositions of unitary and Hermitian
//! matrices with degenerate-cluster detection, and ordered exponentials of
//! sampled matrix-valued curves. Eigenvector phases and ordering returned
//! here are arbitrary; fixing them is the job of [`crate::framegauge`].

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Default tolerance on eigenphase differences for clustering.
pub const DEGENERACY_TOL: f64 = 1e-8;

const UNITARITY_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a square matrix from row-major complex entries.
pub fn from_rows(n: usize, rows: &[Complex64]) -> CMatrix {
    assert_eq!(rows.len(), n * n, "expected {} entries", n * n);
    CMatrix::from_row_slice(n, n, rows)
}

pub fn from_real_rows(n: usize, rows: &[f64]) -> CMatrix {
    assert_eq!(rows.len(), n * n, "expected {} entries", n * n);
    CMatrix::from_fn(n, n, |i, j| c(rows[i * n + j], 0.0))
}

pub fn diag(values: &[Complex64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(m: &CMatrix, what: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} has non-finite entries")))
    }
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Block-diagonal matrix with `blocks` along the diagonal.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((offset, offset), (k, k)).copy_from(b);
        offset += k;
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `‖U†U − I‖` in the operator norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    op_norm(&(u.adjoint() * u - identity(n)))
}

/// `‖H − H†‖` in the operator norm.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    op_norm(&(h - h.adjoint()))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Wraps a phase into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

// Padé(13) coefficients and the 1-norm bound below which no scaling is needed.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaling-and-squaring Padé(13) exponential of a general matrix.
fn expm_pade(x: &CMatrix) -> Result<CMatrix> {
    let n = x.nrows();
    let nrm = norm1(x);
    let squarings = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = x.scale(0.5f64.powi(squarings));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Domain("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// `exp(scale · H)`.
///
/// For Hermitian `H` and purely imaginary `scale` the exponential is built
/// from the eigen-decomposition of `H` and is unitary to rounding. Any other
/// input goes through scaling-and-squaring with a Padé(13) approximant.
pub fn mat_exp(h: &CMatrix, scale: Complex64) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "mat_exp needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    ensure_finite(h, "mat_exp input")?;
    if !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::Domain("mat_exp scale is not finite".into()));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let herm_tol = 1e-12 * (1.0 + h.norm());
    if scale.re == 0.0 && hermiticity_defect(h) <= herm_tol {
        let eig = SymmetricEigen::new(hermitian_part(h));
        let phases: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&w| (scale * w).exp())
            .collect();
        let v = &eig.eigenvectors;
        return Ok(v * diag(&phases) * v.adjoint());
    }
    expm_pade(&h.map(|z| z * scale))
}

/// Groups indices whose values lie within `tol` of each other under the
/// supplied distance; clusters are returned sorted by their first index.
fn cluster_by<F: Fn(usize, usize) -> f64>(n: usize, tol: f64, dist: F) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(i, j) < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Eigen-decomposition of a unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Unimodular eigenvalues, one per column of `eigenvectors`.
    pub eigenvalues: Vec<Complex64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: CMatrix,
    /// Index groups whose eigenphases differ by less than the tolerance.
    pub clusters: Vec<Vec<usize>>,
}

impl UnitaryEigen {
    pub fn eigenphases(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.arg()).collect()
    }
}

/// Eigen-decomposition of a unitary matrix via its complex Schur form.
///
/// A unitary matrix is normal, so its Schur form is diagonal and the Schur
/// vectors are an orthonormal eigenbasis even inside degenerate subspaces.
pub fn eig_unitary(u: &CMatrix, degeneracy_tol: f64) -> Result<UnitaryEigen> {
    if !u.is_square() {
        return Err(Error::Dimension("eig_unitary needs a square matrix".into()));
    }
    ensure_finite(u, "eig_unitary input")?;
    let defect = unitarity_defect(u);
    if defect > UNITARITY_TOL {
        return Err(Error::Precondition(format!(
            "matrix is not unitary: ‖U†U − I‖ = {defect:.3e}"
        )));
    }
    let n = u.nrows();
    let schur = nalgebra::Schur::try_new(u.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Domain("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let eigenvalues: Vec<Complex64> = (0..n).map(|i| t[(i, i)] / t[(i, i)].norm()).collect();
    let clusters = cluster_by(n, degeneracy_tol, |i, j| {
        wrap_phase(eigenvalues[i].arg() - eigenvalues[j].arg()).abs()
    });
    Ok(UnitaryEigen {
        eigenvalues,
        eigenvectors: q,
        clusters,
    })
}

/// Eigenvalues of a general square matrix, read off its complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvalues needs a square matrix".into()));
    }
    ensure_finite(m, "eigenvalues input")?;
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Domain("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Unitary factor `U` of the polar decomposition `m = U P`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested with u");
    let v_t = svd.v_t.expect("svd requested with v_t");
    u * v_t
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub clusters: Vec<Vec<usize>>,
}

pub fn eig_hermitian(h: &CMatrix, degeneracy_tol: f64) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::Dimension("eig_hermitian needs a square matrix".into()));
    }
    ensure_finite(h, "eig_hermitian input")?;
    let defect = hermiticity_defect(h);
    if defect > 1e-10 * (1.0 + h.norm()) {
        return Err(Error::Precondition(format!(
            "matrix is not Hermitian: ‖H − H†‖ = {defect:.3e}"
        )));
    }
    let eig = SymmetricEigen::new(hermitian_part(h));
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let clusters = cluster_by(n, degeneracy_tol, |i, j| {
        (eigenvalues[i] - eigenvalues[j]).abs()
    });
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
        clusters,
    })
}

/// A matrix-valued function sampled at strictly increasing parameter values.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    samples: Vec<(f64, CMatrix)>,
    closed: bool,
}

impl SampledCurve {
    pub fn new(samples: Vec<(f64, CMatrix)>, closed: bool) -> Result<Self> {
        if let Some((_, first)) = samples.first() {
            let dim = first.nrows();
            for (k, (s, m)) in samples.iter().enumerate() {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::Dimension(format!(
                        "sample {k} is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if !s.is_finite() {
                    return Err(Error::Domain(format!("sample {k} has non-finite s")));
                }
                ensure_finite(m, "curve sample")?;
            }
            if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Domain(
                    "curve samples must be strictly increasing in s".into(),
                ));
            }
        }
        Ok(Self { samples, closed })
    }

    /// Samples `f` at `n + 1` evenly spaced points of `[s0, s1]`.
    pub fn from_fn<F>(s0: f64, s1: f64, n: usize, closed: bool, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> CMatrix,
    {
        let samples = (0..=n)
            .map(|k| {
                let s = s0 + (s1 - s0) * k as f64 / n as f64;
                (s, f(s))
            })
            .collect();
        Self::new(samples, closed)
    }

    pub fn samples(&self) -> &[(f64, CMatrix)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |(_, m)| m.nrows())
    }

    pub fn map<F: FnMut(&CMatrix) -> CMatrix>(&self, mut f: F) -> Self {
        Self {
            samples: self.samples.iter().map(|(s, m)| (*s, f(m))).collect(),
            closed: self.closed,
        }
    }
}

/// Direction in which later path segments are composed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOrdering {
    /// `exp_←`: later segments multiply from the left.
    Left,
    /// `exp_→`: later segments multiply from the right (anti-ordered).
    Right,
}

/// Ordered exponential of `scale · ∫ A(s) ds` over a sampled curve.
///
/// Each segment contributes `exp(scale · Ā · Δs)` where `Ā` is the mean of
/// the segment's end samples, which is the segment midpoint value to
/// `O(Δs²)`; the composite rule is second order.
pub fn ordered_exp(curve: &SampledCurve, ordering: PathOrdering, scale: Complex64) -> Result<CMatrix> {
    let samples = curve.samples();
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "ordered_exp needs at least two samples, got {}",
            samples.len()
        )));
    }
    let n = curve.dim();
    let mut acc = identity(n);
    for w in samples.windows(2) {
        let (s0, a0) = (&w[0].0, &w[0].1);
        let (s1, a1) = (&w[1].0, &w[1].1);
        let mid = (a0 + a1).scale(0.5);
        let step = mat_exp(&mid, scale * (s1 - s0))?;
        acc = match ordering {
            PathOrdering::Left => step * acc,
            PathOrdering::Right => acc * step,
        };
    }
    Ok(acc)
}

/// Pauli matrices `σ_x, σ_y, σ_z`.
pub fn pauli() -> [CMatrix; 3] {
    [
        from_rows(2, &[ZERO, ONE, ONE, ZERO]),
        from_rows(2, &[ZERO, -IM, IM, ZERO]),
        from_rows(2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

//! Time-reversal-invariant operators on the spin-3/2 space.
//!
//! Everything here works in the basis `(e₁, Ke₁, e₂, Ke₂)` with
//! `e₁ = |3/2, 3/2⟩`, `e₂ = |3/2, −1/2⟩` and `K` the fermionic time
//! reversal (`K² = −1`). The five `τ_α` generate a Clifford algebra; its
//! eigenvectors are built through the quaternionic structure in which right
//! multiplication by `j` acts as `K`.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::framegauge::Frame;
use crate::matcore::{block_diag, c, identity, pauli, CMatrix, IM, ONE, ZERO};
use crate::models::ParamPoint;

/// The five Clifford generators and the four frame-rotation generators.
#[derive(Clone, Debug)]
pub struct TauAlgebra {
    pub generators: [CMatrix; 5],
    pub g_matrices: [CMatrix; 4],
    pub basis_labels: [&'static str; 4],
}

fn blocks(a: &CMatrix, b: &CMatrix, cc: &CMatrix, d: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(4, 4);
    out.view_mut((0, 0), (2, 2)).copy_from(a);
    out.view_mut((0, 2), (2, 2)).copy_from(b);
    out.view_mut((2, 0), (2, 2)).copy_from(cc);
    out.view_mut((2, 2), (2, 2)).copy_from(d);
    out
}

pub fn tau_matrices() -> TauAlgebra {
    let [sx, sy, sz] = pauli();
    let i2 = identity(2);
    let o2 = CMatrix::zeros(2, 2);
    let i = IM;
    let generators = [
        block_diag(&[&i2, &(-&i2)]),
        blocks(&o2, &sy.map(|z| z * i), &sy.map(|z| -z * i), &o2),
        blocks(&o2, &sx.map(|z| -z * i), &sx.map(|z| z * i), &o2),
        blocks(&o2, &i2, &i2, &o2),
        blocks(&o2, &sz.map(|z| -z * i), &sz.map(|z| z * i), &o2),
    ];
    let g_matrices = [
        blocks(&o2, &i2.map(|z| -z * i), &i2.map(|z| z * i), &o2),
        block_diag(&[&(-&sy), &sy]),
        block_diag(&[&sz, &(-&sz)]),
        block_diag(&[&sz, &sz]),
    ];
    TauAlgebra {
        generators,
        g_matrices,
        basis_labels: ["e1", "Ke1", "e2", "Ke2"],
    }
}

/// `Σ_α n_α τ_α`.
pub fn tau_combination(n: &[f64; 5]) -> CMatrix {
    let alg = tau_matrices();
    alg.generators
        .iter()
        .zip(n)
        .fold(CMatrix::zeros(4, 4), |acc, (t, &w)| acc + t.scale(w))
}

/// Fermionic time reversal on a 4-vector in the `(e₁, Ke₁, e₂, Ke₂)` basis.
///
/// `K(z₁e₁ + w₁Ke₁ + z₂e₂ + w₂Ke₂) = −w̄₁e₁ + z̄₁Ke₁ − w̄₂e₂ + z̄₂Ke₂`.
pub fn time_reversal_k(v: &[Complex64; 4]) -> [Complex64; 4] {
    [-v[1].conj(), v[0].conj(), -v[3].conj(), v[2].conj()]
}

/// Applies [`time_reversal_k`] to column `j` of `m`.
pub fn time_reversal_column(m: &CMatrix, j: usize) -> [Complex64; 4] {
    time_reversal_k(&[m[(0, j)], m[(1, j)], m[(2, j)], m[(3, j)]])
}

/// A quaternion `z + j·w` with complex `z`, `w` (`j·c = c̄·j`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub z: Complex64,
    pub w: Complex64,
}

impl Quaternion {
    pub const J: Quaternion = Quaternion { z: ZERO, w: ONE };

    pub fn new(z: Complex64, w: Complex64) -> Self {
        Self { z, w }
    }

    pub fn complex(z: Complex64) -> Self {
        Self { z, w: ZERO }
    }

    /// `cos x + h sin x`, valid for any `h` with `h² = −1`.
    pub fn exp_unit(h: Quaternion, x: f64) -> Self {
        Quaternion::complex(c(x.cos(), 0.0)) + h.scale(x.sin())
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            z: self.z * s,
            w: self.w * s,
        }
    }

    pub fn norm_sqr(self) -> f64 {
        self.z.norm_sqr() + self.w.norm_sqr()
    }
}

impl std::ops::Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.z + o.z, self.w + o.w)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    // (z₁ + j w₁)(z₂ + j w₂) = (z₁z₂ − w̄₁w₂) + j(z̄₁w₂ + w₁z₂)
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.z * o.z - self.w.conj() * o.w,
            self.z.conj() * o.w + self.w * o.z,
        )
    }
}

/// Complex 4-vector of `e₁ q₁ + e₂ q₂` (right quaternionic action).
pub fn quaternionic_to_complex(q1: Quaternion, q2: Quaternion) -> [Complex64; 4] {
    [q1.z, q1.w, q2.z, q2.w]
}

/// Eigenframe `(ξ₊, Kξ₊, ξ₋, Kξ₋)` of `τ(n)` for
/// `n = (cos θ, sin θ sin η cos χ, sin θ sin η sin χ, sin θ cos η cos φ, sin θ cos η sin φ)`,
/// obtained from the 2×2 quaternionic eigenproblem and carrying the phase
/// `e^{−i(φ+χ)/2}` on `ξ±`.
pub fn quaternionic_frame_columns(theta: f64, eta: f64, chi: f64, phi: f64) -> CMatrix {
    let h = Quaternion::new(ZERO, c(0.0, phi + chi).exp());
    let left = Quaternion::exp_unit(h, -eta / 2.0);
    let right = Quaternion::exp_unit(h, eta / 2.0);
    let lift = Quaternion::complex(c(0.0, phi).exp());
    let gauge = Quaternion::complex(c(0.0, -(phi + chi) / 2.0).exp());
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());

    let xi_plus = quaternionic_to_complex(
        left.scale(ct) * gauge,
        (lift * right).scale(st) * gauge,
    );
    let xi_minus = quaternionic_to_complex(
        left.scale(-st) * gauge,
        (lift * right).scale(ct) * gauge,
    );
    let k_plus = time_reversal_k(&xi_plus);
    let k_minus = time_reversal_k(&xi_minus);
    let cols = [xi_plus, k_plus, xi_minus, k_minus];
    CMatrix::from_fn(4, 4, |i, j| cols[j][i])
}

/// The orthonormal pair `|d₁⟩, |d₂⟩` in closed form.
pub fn d_vectors(eta: f64, chi: f64, phi: f64) -> ([Complex64; 4], [Complex64; 4]) {
    let (ce, se) = ((eta / 2.0).cos(), (eta / 2.0).sin());
    let sum = (phi + chi) / 2.0;
    let diff = (phi - chi) / 2.0;
    let d1 = [
        c(0.0, -sum).exp() * ce,
        -c(0.0, sum).exp() * se,
        ZERO,
        ZERO,
    ];
    let d2 = [ZERO, ZERO, c(0.0, diff).exp() * ce, c(0.0, -diff).exp() * se];
    (d1, d2)
}

/// Angles `(θ, η, χ, φ)` of a unit 5-vector in the spherical parameterization.
pub fn spherical_angles(n: &[f64; 5]) -> (f64, f64, f64, f64) {
    let r12 = n[1].hypot(n[2]);
    let r34 = n[3].hypot(n[4]);
    let theta = r12.hypot(r34).atan2(n[0]);
    let eta = r12.atan2(r34);
    let chi = if r12 > 0.0 { n[2].atan2(n[1]) } else { 0.0 };
    let phi = if r34 > 0.0 { n[4].atan2(n[3]) } else { 0.0 };
    (theta, eta, chi, phi)
}

pub fn unit_vector_from_angles(theta: f64, eta: f64, chi: f64, phi: f64) -> [f64; 5] {
    let st = theta.sin();
    [
        theta.cos(),
        chi.cos() * eta.sin() * st,
        chi.sin() * eta.sin() * st,
        phi.cos() * eta.cos() * st,
        phi.sin() * eta.cos() * st,
    ]
}

/// Eigenframe of `τ(n)` for a unit 5-vector `n`, columns `(ξ₊, Kξ₊, ξ₋, Kξ₋)`.
pub fn quaternionic_eigs(n: &[f64; 5]) -> Result<Frame> {
    let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "quaternionic_eigs needs a unit vector, ‖n‖ = {norm}"
        )));
    }
    let (theta, eta, chi, phi) = spherical_angles(n);
    let point = ParamPoint::new()
        .with(crate::models::Coord::Theta, theta)
        .with(crate::models::Coord::Eta, eta)
        .with(crate::models::Coord::Chi, chi)
        .with(crate::models::Coord::Phi, phi);
    Frame::new(quaternionic_frame_columns(theta, eta, chi, phi), point)
}

/// 4×4 matrix of `exp(−iπJ_y) K₀` restricted to the action on basis vectors:
/// column `j` is the image of basis vector `j` of the `|3/2, M⟩` basis
/// ordered `M = 3/2, 1/2, −1/2, −3/2`.
pub fn spin_three_half_rotation_pi_y() -> Result<CMatrix> {
    // J_y = (J₊ − J₋)/(2i), ⟨M+1|J₊|M⟩ = √(j(j+1) − M(M+1))
    let ms: [f64; 4] = [1.5, 0.5, -0.5, -1.5];
    let j = 1.5f64;
    let mut jy = CMatrix::zeros(4, 4);
    for (col, &m) in ms.iter().enumerate() {
        for (row, &mp) in ms.iter().enumerate() {
            if (mp - (m + 1.0)).abs() < 1e-12 {
                let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
                jy[(row, col)] += c(0.0, -0.5) * amp;
            }
            if (mp - (m - 1.0)).abs() < 1e-12 {
                let amp = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
                jy[(row, col)] -= c(0.0, -0.5) * amp;
            }
        }
    }
    crate::matcore::mat_exp(&jy, c(0.0, -std::f64::consts::PI))
}

/// 4×4 matrix assembled from four 2×2 blocks, row-major.
pub(crate) fn two_by_two_blocks(a: &CMatrix, b: &CMatrix, cc: &CMatrix, d: &CMatrix) -> CMatrix {
    blocks(a, b, cc, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{hermiticity_defect, mat_exp, op_norm, unitarity_defect};
    use rand::{Rng, SeedableRng};

    fn rng() -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(0x7a05)
    }

    fn col(m: &CMatrix, j: usize) -> [Complex64; 4] {
        [m[(0, j)], m[(1, j)], m[(2, j)], m[(3, j)]]
    }

    fn inner(a: &[Complex64; 4], b: &[Complex64; 4]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn clifford_relations_hold_exactly() {
        let alg = tau_matrices();
        for a in 0..5 {
            assert!(hermiticity_defect(&alg.generators[a]) == 0.0);
            assert_eq!(alg.generators[a].trace(), ZERO);
            for b in 0..5 {
                let ta = &alg.generators[a];
                let tb = &alg.generators[b];
                let anti = ta * tb + tb * ta;
                let want = if a == b { identity(4).scale(2.0) } else { CMatrix::zeros(4, 4) };
                assert!(op_norm(&(anti - want)) < 1e-14, "{{τ{a}, τ{b}}}");
            }
        }
    }

    #[test]
    fn tau_zero_is_block_diagonal() {
        let t = tau_combination(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let want = CMatrix::from_fn(4, 4, |i, j| {
            if i != j {
                ZERO
            } else if i < 2 {
                ONE
            } else {
                -ONE
            }
        });
        assert_eq!(t, want);
    }

    #[test]
    fn combination_squares_to_norm() {
        let mut r = rng();
        for _ in 0..20 {
            let n: [f64; 5] = std::array::from_fn(|_| r.gen_range(-2.0..2.0));
            let t = tau_combination(&n);
            let nn: f64 = n.iter().map(|x| x * x).sum();
            assert!(op_norm(&(&t * &t - identity(4).scale(nn))) < 1e-13);
        }
    }

    #[test]
    fn exponential_of_unit_combination_is_cos_minus_i_sin() {
        let mut r = rng();
        let raw: [f64; 5] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = raw.map(|x| x / norm);
        let t = tau_combination(&n);
        let lam = 0.7f64;
        let got = mat_exp(&t, c(0.0, -lam)).unwrap();
        let want = identity(4).scale(lam.cos()) - t.map(|z| z * IM * lam.sin());
        assert!(op_norm(&(got - want)) < 1e-14);
    }

    #[test]
    fn symmetric_product_identity() {
        let alg = tau_matrices();
        let lam = 0.37f64;
        for a in 0..5 {
            let e = mat_exp(&alg.generators[a], c(0.0, -lam)).unwrap();
            for b in 0..5 {
                let got = &e * &alg.generators[b] * &e;
                let want = if a == b {
                    alg.generators[b].scale((2.0 * lam).cos())
                        - identity(4).map(|z| z * IM * (2.0 * lam).sin())
                } else {
                    alg.generators[b].clone()
                };
                assert!(op_norm(&(got - want)) < 1e-14, "α={a}, β={b}");
            }
        }
    }

    #[test]
    fn g_matrices_are_tau_products() {
        let alg = tau_matrices();
        let t = &alg.generators;
        let g = &alg.g_matrices;
        let i = IM;
        assert!(op_norm(&(&g[0] - (&t[0] * &t[3]).map(|z| -i * z))) < 1e-15);
        assert!(op_norm(&(&g[1] - (&t[1] * &t[3]).map(|z| i * z))) < 1e-15);
        assert!(op_norm(&(&g[2] - (&t[3] * &t[4]).map(|z| -i * z))) < 1e-15);
        assert!(op_norm(&(&g[3] - (&t[1] * &t[2]).map(|z| -i * z))) < 1e-15);
    }

    #[test]
    fn k_maps_e1_to_ke1_and_squares_to_minus_one() {
        let e1 = [ONE, ZERO, ZERO, ZERO];
        assert_eq!(time_reversal_k(&e1), [ZERO, ONE, ZERO, ZERO]);
        let mut r = rng();
        for _ in 0..10 {
            let v: [Complex64; 4] = std::array::from_fn(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
            let kk = time_reversal_k(&time_reversal_k(&v));
            for k in 0..4 {
                assert!((kk[k] + v[k]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn k_is_antilinear() {
        let e2 = [ZERO, ZERO, ONE, ZERO];
        let ie2 = e2.map(|z| z * IM);
        let k = time_reversal_k(&ie2);
        let ke2 = time_reversal_k(&e2);
        for j in 0..4 {
            assert!((k[j] - (-IM) * ke2[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn k_matches_rotation_by_pi_about_y_in_the_jm_basis() {
        // |3/2,M⟩ order M = 3/2, 1/2, −1/2, −3/2; e₁ = idx 0, Ke₁ = idx 3,
        // e₂ = idx 2, Ke₂ = idx 1.
        let rot = spin_three_half_rotation_pi_y().unwrap();
        assert!(unitarity_defect(&rot) < 1e-13);
        // Real basis vectors are fixed by K₀, so K|b⟩ = rot·|b⟩.
        assert!((rot[(3, 0)] - ONE).norm() < 1e-12, "K e₁ = +|3/2,−3/2⟩");
        assert!((rot[(1, 2)] - ONE).norm() < 1e-12, "K e₂ = +|3/2,1/2⟩");
        assert!((rot[(0, 3)] + ONE).norm() < 1e-12, "K Ke₁ = −e₁");
        assert!((rot[(2, 1)] + ONE).norm() < 1e-12, "K Ke₂ = −e₂");
    }

    #[test]
    fn tau_generators_commute_with_k() {
        let alg = tau_matrices();
        let mut r = rng();
        let v: [Complex64; 4] = std::array::from_fn(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let vm = CMatrix::from_fn(4, 1, |i, _| v[i]);
        for t in &alg.generators {
            let tv = t * &vm;
            let k_tv = time_reversal_k(&[tv[0], tv[1], tv[2], tv[3]]);
            let kv = time_reversal_k(&v);
            let kvm = CMatrix::from_fn(4, 1, |i, _| kv[i]);
            let t_kv = t * kvm;
            for j in 0..4 {
                assert!((k_tv[j] - t_kv[j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn quaternion_units_multiply_as_expected() {
        let i = Quaternion::complex(IM);
        let j = Quaternion::J;
        let k = i * j;
        let minus_one = Quaternion::complex(-ONE);
        assert_eq!(i * i, minus_one);
        assert_eq!(j * j, minus_one);
        assert_eq!(k * k, minus_one);
        // ij = −ji
        let ji = j * i;
        assert_eq!(ji, k.scale(-1.0));
    }

    #[test]
    fn quaternionic_frame_diagonalizes_tau() {
        let mut r = rng();
        for _ in 0..25 {
            let (th, et, ch, ph) = (
                r.gen_range(0.0..std::f64::consts::PI),
                r.gen_range(0.0..std::f64::consts::PI),
                r.gen_range(0.0..std::f64::consts::TAU),
                r.gen_range(0.0..std::f64::consts::TAU),
            );
            let n = unit_vector_from_angles(th, et, ch, ph);
            let f = quaternionic_eigs(&n).unwrap();
            let t = tau_combination(&n);
            let cols = &f.columns;
            assert!(unitarity_defect(cols) < 1e-13);
            let lam = crate::matcore::diag(&[ONE, ONE, -ONE, -ONE]);
            assert!(op_norm(&(&t * cols - cols * lam)) < 1e-13);
        }
    }

    #[test]
    fn frame_matches_d_vector_closed_forms() {
        let mut r = rng();
        for _ in 0..25 {
            let (th, et, ch, ph): (f64, f64, f64, f64) = (
                r.gen_range(-6.0..6.0),
                r.gen_range(-6.0..6.0),
                r.gen_range(-6.0..6.0),
                r.gen_range(-6.0..6.0),
            );
            let cols = quaternionic_frame_columns(th, et, ch, ph);
            let (d1, d2) = d_vectors(et, ch, ph);
            assert!(inner(&d1, &d2).norm() < 1e-15);
            assert!((inner(&d1, &d1).re - 1.0).abs() < 1e-14);
            assert!((inner(&d2, &d2).re - 1.0).abs() < 1e-14);
            let (ct, st) = ((th / 2.0).cos(), (th / 2.0).sin());
            let xp: [Complex64; 4] = std::array::from_fn(|k| d1[k] * ct + d2[k] * st);
            let xm: [Complex64; 4] = std::array::from_fn(|k| -d1[k] * st + d2[k] * ct);
            let kd1 = time_reversal_k(&d1);
            let kd2 = time_reversal_k(&d2);
            let kxm: [Complex64; 4] = std::array::from_fn(|k| -kd1[k] * st + kd2[k] * ct);
            for k in 0..4 {
                assert!((cols[(k, 0)] - xp[k]).norm() < 1e-14);
                assert!((cols[(k, 2)] - xm[k]).norm() < 1e-14);
                assert!((cols[(k, 3)] - kxm[k]).norm() < 1e-14);
            }
            // ⟨Kξ₊|ξ₊⟩ = 0
            assert!(inner(&col(&cols, 1), &col(&cols, 0)).norm() < 1e-14);
        }
    }

    #[test]
    fn kd_closed_forms() {
        let (et, ch, ph) = (0.4, 1.3, -0.8);
        let (d1, d2) = d_vectors(et, ch, ph);
        let (ce, se) = ((et / 2.0).cos(), (et / 2.0).sin());
        let sum = (ph + ch) / 2.0;
        let diff = (ph - ch) / 2.0;
        let kd1_want = [c(0.0, -sum).exp() * se, c(0.0, sum).exp() * ce, ZERO, ZERO];
        let kd2_want = [ZERO, ZERO, -c(0.0, diff).exp() * se, c(0.0, -diff).exp() * ce];
        let kd1 = time_reversal_k(&d1);
        let kd2 = time_reversal_k(&d2);
        for k in 0..4 {
            assert!((kd1[k] - kd1_want[k]).norm() < 1e-15);
            assert!((kd2[k] - kd2_want[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn quaternionic_eigs_of_tau_zero_is_standard_basis() {
        let f = quaternionic_eigs(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        // Each column is a basis vector up to a phase.
        let order = [0usize, 1, 2, 3];
        for (j, &row) in order.iter().enumerate() {
            assert!((f.columns[(row, j)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quaternionic_eigs_rejects_non_unit() {
        assert!(quaternionic_eigs(&[1.0, 1.0, 0.0, 0.0, 0.0]).is_err());
    }
}

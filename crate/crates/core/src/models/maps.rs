//! The symmetric three-kick maps for spin-½ and spin-3/2.
//!
//! Both share the same spectrum: `z± = exp{−i((μq + λp)/2 ± Δ/2)}`, and the
//! same zenith angle `Θ` of the rotation axis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::framegauge::{ConnectionSample, Frame};
use crate::matcore::{block_diag, c, identity, mat_exp, pauli, CMatrix};
use crate::models::berry::spinor_frame;
use crate::models::tau::{
    quaternionic_frame_columns, tau_combination, tau_matrices, two_by_two_blocks,
    unit_vector_from_angles,
};
use crate::models::{Coord, Degeneracy, ParamPoint};

/// Below this `sin(Δ/2)` the zenith angle is undefined.
const GAP_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralData {
    /// `[z₊, z₋]`.
    pub eigenvalues: [Complex64; 2],
    /// `[E₊, E₋]` with `z± = e^{−iE±}`, not reduced mod 2π.
    pub quasienergies: [f64; 2],
    /// `Δ ∈ [0, 2π]`.
    pub gap: f64,
    /// Principal zenith angle `Θ ∈ (−π, π]`.
    pub zenith: f64,
    pub b_mu: f64,
    pub b_lam: f64,
}

/// Kick strengths `(B_μ, B_λ)`.
pub fn kick_strengths(q: i32, p: i32, mu: f64, lambda: f64) -> (f64, f64) {
    ((2.0 - q as f64) * mu / 2.0, (2.0 - p as f64) * lambda / 2.0)
}

/// `(l̃₀, l̃⊥, cos(Δ/2))` where `l̃⊥ = sin θ sin B_λ`.
fn axis_components(b_mu: f64, b_lam: f64, theta: f64) -> (f64, f64, f64) {
    let (sm, cm) = b_mu.sin_cos();
    let (sl, cl) = b_lam.sin_cos();
    let x = sm * cl + theta.cos() * cm * sl;
    let y = theta.sin() * sl;
    let cos_half = cm * cl - theta.cos() * sm * sl;
    (x, y, cos_half)
}

pub fn spectral_data(q: i32, p: i32, point: &ParamPoint) -> Result<SpectralData> {
    let mu = point.require(Coord::Mu)?;
    let lambda = point.require(Coord::Lambda)?;
    let theta = point.require(Coord::Theta)?;
    let (b_mu, b_lam) = kick_strengths(q, p, mu, lambda);
    let (x, y, cos_half) = axis_components(b_mu, b_lam, theta);
    let gap = 2.0 * cos_half.clamp(-1.0, 1.0).acos();
    if x.hypot(y) < GAP_FLOOR {
        let which = match degeneracy(q, p, point, 1e-6) {
            Degeneracy::OnLine => "on a degeneracy line (sin θ = 0, (B_λ ± B_μ)/π integer)",
            _ => "at a degeneracy lattice point (B_μ/π and B_λ/π integers)",
        };
        return Err(Error::Degeneracy(format!("Δ = {gap:.3e} mod 2π: point lies {which}")));
    }
    let base = (mu * q as f64 + lambda * p as f64) / 2.0;
    let quasienergies = [base + gap / 2.0, base - gap / 2.0];
    Ok(SpectralData {
        eigenvalues: quasienergies.map(|e| c(0.0, -e).exp()),
        quasienergies,
        gap,
        zenith: y.atan2(x),
        b_mu,
        b_lam,
    })
}

/// `∂Θ/∂x` for `x ∈ {θ, μ, λ}`; zero for the remaining coordinates.
pub fn zenith_derivative(q: i32, p: i32, point: &ParamPoint, direction: Coord) -> Result<f64> {
    let theta = point.require(Coord::Theta)?;
    let (b_mu, b_lam) = kick_strengths(
        q,
        p,
        point.require(Coord::Mu)?,
        point.require(Coord::Lambda)?,
    );
    let (sm, cm) = b_mu.sin_cos();
    let (sl, cl) = b_lam.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (x, y, _) = axis_components(b_mu, b_lam, theta);
    let (dx, dy) = match direction {
        Coord::Theta => (-st * cm * sl, ct * sl),
        Coord::Lambda => {
            let k = (2.0 - p as f64) / 2.0;
            ((-sm * sl + ct * cm * cl) * k, st * cl * k)
        }
        Coord::Mu => {
            let k = (2.0 - q as f64) / 2.0;
            ((cm * cl - ct * sm * sl) * k, 0.0)
        }
        _ => return Ok(0.0),
    };
    let r2 = x * x + y * y;
    if r2.sqrt() < GAP_FLOOR {
        return Err(Error::Degeneracy("zenith angle undefined at Δ ≡ 0".into()));
    }
    Ok((x * dy - y * dx) / r2)
}

fn kick(generator: &CMatrix, offset: f64, weight: f64, strength: f64) -> Result<CMatrix> {
    let n = generator.nrows();
    let h = identity(n) * c(offset, 0.0) + generator * c(weight, 0.0);
    mat_exp(&h, c(0.0, -strength))
}

fn symmetric_product(q: i32, p: i32, mu: f64, lambda: f64, axis: &CMatrix, tilted: &CMatrix) -> Result<CMatrix> {
    let (qf, pf) = (q as f64, p as f64);
    let outer = kick(axis, qf / 2.0, (2.0 - qf) / 2.0, mu / 2.0)?;
    let inner = kick(tilted, pf / 2.0, (2.0 - pf) / 2.0, lambda)?;
    Ok(&outer * inner * &outer)
}

pub(crate) fn spin_half_unitary(q: i32, p: i32, point: &ParamPoint) -> Result<CMatrix> {
    let mu = point.require(Coord::Mu)?;
    let lambda = point.require(Coord::Lambda)?;
    let theta = point.require(Coord::Theta)?;
    let phi = point.require(Coord::Phi)?;
    let [sx, sy, sz] = pauli();
    let n_sigma = sx * c(theta.sin() * phi.cos(), 0.0)
        + sy * c(theta.sin() * phi.sin(), 0.0)
        + &sz * c(theta.cos(), 0.0);
    symmetric_product(q, p, mu, lambda, &sz, &n_sigma)
}

pub(crate) fn spin_three_half_unitary(q: i32, p: i32, point: &ParamPoint) -> Result<CMatrix> {
    let mu = point.require(Coord::Mu)?;
    let lambda = point.require(Coord::Lambda)?;
    let n = unit_vector_from_angles(
        point.require(Coord::Theta)?,
        point.require(Coord::Eta)?,
        point.require(Coord::Chi)?,
        point.require(Coord::Phi)?,
    );
    let tau0 = tau_matrices().generators[0].clone();
    symmetric_product(q, p, mu, lambda, &tau0, &tau_combination(&n))
}

fn resolve_zenith(q: i32, p: i32, point: &ParamPoint, zenith: Option<f64>) -> Result<f64> {
    match zenith {
        Some(z) => Ok(z),
        None => Ok(spectral_data(q, p, point)?.zenith),
    }
}

pub(crate) fn spin_half_frame(q: i32, p: i32, point: &ParamPoint, zenith: Option<f64>) -> Result<Frame> {
    let big_theta = resolve_zenith(q, p, point, zenith)?;
    let phi = point.require(Coord::Phi)?;
    Frame::new(spinor_frame(big_theta, phi), *point)
}

pub(crate) fn spin_three_half_frame(
    q: i32,
    p: i32,
    point: &ParamPoint,
    zenith: Option<f64>,
) -> Result<Frame> {
    let big_theta = resolve_zenith(q, p, point, zenith)?;
    let cols = quaternionic_frame_columns(
        big_theta,
        point.require(Coord::Eta)?,
        point.require(Coord::Chi)?,
        point.require(Coord::Phi)?,
    );
    Frame::new(cols, *point)
}

fn real(m: CMatrix, s: f64) -> CMatrix {
    m * c(s, 0.0)
}

pub(crate) fn spin_half_connection(
    q: i32,
    p: i32,
    point: &ParamPoint,
    zenith: Option<f64>,
    direction: Coord,
) -> Result<ConnectionSample> {
    let big_theta = resolve_zenith(q, p, point, zenith)?;
    let s = point.require(direction).or_else(|_| {
        Err(Error::Unsupported(format!(
            "map_spin_half has no `{direction}` coordinate"
        )))
    })?;
    let [sx, sy, sz] = pauli();
    let (a, ad) = match direction {
        Coord::Theta | Coord::Mu | Coord::Lambda => {
            let d = zenith_derivative(q, p, point, direction)?;
            (real(sy, 0.5 * d), CMatrix::zeros(2, 2))
        }
        Coord::Phi => (
            real(sz.clone(), 0.5 * big_theta.cos()) - real(sx, 0.5 * big_theta.sin()),
            real(sz, 0.5 * big_theta.cos()),
        ),
        other => {
            return Err(Error::Unsupported(format!(
                "map_spin_half has no `{other}` coordinate"
            )))
        }
    };
    Ok(ConnectionSample::from_parts(s, a, ad))
}

pub(crate) fn spin_three_half_connection(
    q: i32,
    p: i32,
    point: &ParamPoint,
    zenith: Option<f64>,
    direction: Coord,
) -> Result<ConnectionSample> {
    let big_theta = resolve_zenith(q, p, point, zenith)?;
    let s = point.require(direction).or_else(|_| {
        Err(Error::Unsupported(format!(
            "map_spin_threehalf has no `{direction}` coordinate"
        )))
    })?;
    let eta = point.require(Coord::Eta)?;
    let (st, ct) = big_theta.sin_cos();
    let (se, ce) = eta.sin_cos();
    let [sx, sy, sz] = pauli();
    let half = |m: CMatrix| real(m, 0.5);
    let (a, ad) = match direction {
        Coord::Theta | Coord::Mu | Coord::Lambda => {
            let d = zenith_derivative(q, p, point, direction)?;
            let g1 = tau_matrices().g_matrices[0].clone();
            (real(g1, 0.5 * d), CMatrix::zeros(4, 4))
        }
        Coord::Eta => {
            let a = two_by_two_blocks(
                &real(sy.clone(), -ct),
                &real(sy.clone(), st),
                &real(sy.clone(), st),
                &real(sy.clone(), ct),
            );
            let ad = block_diag(&[&real(sy.clone(), -ct), &real(sy.clone(), ct)]);
            (half(a), half(ad))
        }
        Coord::Phi => {
            let z_part = two_by_two_blocks(
                &real(sz.clone(), ct),
                &real(sz.clone(), -st),
                &real(sz.clone(), -st),
                &real(sz.clone(), -ct),
            );
            let x_part = block_diag(&[&sx, &sx]);
            let a = real(z_part, ce) + real(x_part.clone(), se);
            let ad = real(block_diag(&[&sz, &(-&sz)]), ct * ce) + real(x_part, se);
            (half(a), half(ad))
        }
        Coord::Chi => {
            let z_part = block_diag(&[&sz, &sz]);
            let x_part = two_by_two_blocks(
                &real(sx.clone(), ct),
                &real(sx.clone(), -st),
                &real(sx.clone(), -st),
                &real(sx.clone(), -ct),
            );
            let a = real(z_part.clone(), ce) + real(x_part, se);
            let ad = real(z_part, ce) + real(block_diag(&[&sx, &(-&sx)]), ct * se);
            (half(a), half(ad))
        }
        other => {
            return Err(Error::Unsupported(format!(
                "map_spin_threehalf has no `{other}` coordinate"
            )))
        }
    };
    Ok(ConnectionSample::from_parts(s, a, ad))
}

fn distance_to_integer(x: f64) -> f64 {
    (x - x.round()).abs()
}

pub(crate) fn degeneracy(q: i32, p: i32, point: &ParamPoint, tol: f64) -> Degeneracy {
    let (Some(mu), Some(lambda)) = (point.get(Coord::Mu), point.get(Coord::Lambda)) else {
        return Degeneracy::Clear;
    };
    let theta = point.get_or(Coord::Theta, std::f64::consts::FRAC_PI_2);
    let (b_mu, b_lam) = kick_strengths(q, p, mu, lambda);
    let pi = std::f64::consts::PI;
    if distance_to_integer(b_mu / pi) <= tol && distance_to_integer(b_lam / pi) <= tol {
        return Degeneracy::OnLatticePoint;
    }
    if theta.sin().abs() <= tol && distance_to_integer((b_lam + theta.cos() * b_mu) / pi) <= tol {
        return Degeneracy::OnLine;
    }
    Degeneracy::Clear
}

/// Checks whether the segment between two nearby points passes through the
/// degeneracy set, using the chord of the rotation-axis vector `(l̃₀, l̃⊥)`.
pub(crate) fn segment_degeneracy(q: i32, p: i32, a: &ParamPoint, b: &ParamPoint, tol: f64) -> Degeneracy {
    for pt in [a, b] {
        let d = degeneracy(q, p, pt, tol);
        if d != Degeneracy::Clear {
            return d;
        }
    }
    let axis = |pt: &ParamPoint| -> Option<(f64, f64, f64)> {
        let (b_mu, b_lam) = kick_strengths(q, p, pt.get(Coord::Mu)?, pt.get(Coord::Lambda)?);
        let theta = pt.get(Coord::Theta)?;
        let (x, y, _) = axis_components(b_mu, b_lam, theta);
        Some((x, y, theta.sin().abs()))
    };
    let (Some((xa, ya, sa)), Some((xb, yb, sb))) = (axis(a), axis(b)) else {
        return Degeneracy::Clear;
    };
    let (dx, dy) = (xb - xa, yb - ya);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (-(xa * dx + ya * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let dist = (xa + t * dx).hypot(ya + t * dy);
    if dist <= tol + 2.0 * len2 {
        if sa.min(sb) < 1e-6 {
            Degeneracy::OnLine
        } else {
            Degeneracy::OnLatticePoint
        }
    } else {
        Degeneracy::Clear
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{eig_unitary, op_norm, DEGENERACY_TOL};
    use std::f64::consts::PI;

    fn half_point(mu: f64, lambda: f64, theta: f64, phi: f64) -> ParamPoint {
        ParamPoint::new()
            .with(Coord::Mu, mu)
            .with(Coord::Lambda, lambda)
            .with(Coord::Theta, theta)
            .with(Coord::Phi, phi)
    }

    #[test]
    fn identity_at_zero_strength() {
        let u = spin_half_unitary(1, 3, &half_point(0.0, 0.0, 0.4, 0.2)).unwrap();
        assert!(op_norm(&(u - identity(2))) < 1e-15);
    }

    #[test]
    fn product_matches_closed_form() {
        let [sx, sy, sz] = pauli();
        for &(q, p) in &[(0, 1), (1, 1), (3, 0), (-1, 2)] {
            let pt = half_point(0.8, 2.1, 1.1, -0.6);
            let u = spin_half_unitary(q, p, &pt).unwrap();
            let sd = spectral_data(q, p, &pt).unwrap();
            let (st, ct) = sd.zenith.sin_cos();
            let axis = &sx * c(st * (-0.6f64).cos(), 0.0) + &sy * c(st * (-0.6f64).sin(), 0.0) + &sz * c(ct, 0.0);
            let base = (0.8 * q as f64 + 2.1 * p as f64) / 2.0;
            let h = identity(2) * c(base, 0.0) + axis * c(sd.gap / 2.0, 0.0);
            let closed = mat_exp(&h, c(0.0, -1.0)).unwrap();
            assert!(op_norm(&(u - closed)) < 1e-12, "q={q} p={p}");
        }
    }

    #[test]
    fn constant_gap_at_quarter_turn() {
        // θ = π/2 and B_μ = π/2 give Δ = π for every λ
        for lambda in [0.0, 0.7, 2.5] {
            let sd = spectral_data(0, 1, &half_point(PI / 2.0, lambda, PI / 2.0, 0.0)).unwrap();
            assert!((sd.gap - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_without_tilted_kick() {
        let sd = spectral_data(1, 2, &half_point(1.3, 0.9, 0.7, 0.0)).unwrap();
        let b_mu: f64 = 0.5 * 1.3;
        assert!((sd.gap - 2.0 * b_mu.cos().acos()).abs() < 1e-12);
    }

    #[test]
    fn eigenphases_match_spectral_example() {
        let pt = half_point(PI, 0.0, PI / 2.0, 0.0);
        // λ = 0 with B_μ = π/2 is off both degeneracy sets
        let u = spin_half_unitary(1, 1, &pt).unwrap();
        let sd = spectral_data(1, 1, &pt).unwrap();
        let eig = eig_unitary(&u, DEGENERACY_TOL).unwrap();
        for z in sd.eigenvalues {
            assert!(eig.eigenvalues.iter().any(|w| (w - z).norm() < 1e-10));
        }
    }

    #[test]
    fn odd_q_shift_conjugates_by_axis() {
        let [_, _, sz] = pauli();
        let a = spin_half_unitary(1, 1, &half_point(0.3, 0.7, 0.9, 0.4)).unwrap();
        let b = spin_half_unitary(1, 1, &half_point(0.3 + 2.0 * PI, 0.7, 0.9, 0.4)).unwrap();
        assert!(op_norm(&(&a - &b)) > 0.1);
        assert!(op_norm(&(&sz * a * &sz - b)) < 1e-12);
    }

    #[test]
    fn degeneracy_examples() {
        // θ = 0 with B_λ + B_μ = π
        let line = half_point(PI, PI / 2.0, 0.0, 0.0);
        assert_eq!(degeneracy(1, 0, &line, 1e-9), Degeneracy::OnLine);
        let lattice = half_point(2.0 * PI, 4.0 * PI, 0.4, 0.0);
        assert_eq!(degeneracy(1, 1, &lattice, 1e-9), Degeneracy::OnLatticePoint);
        let clear = half_point(PI, PI, PI / 2.0, 0.0);
        assert_eq!(degeneracy(1, 1, &clear, 1e-9), Degeneracy::Clear);
        assert!(spectral_data(1, 0, &line).is_err());
    }

    #[test]
    fn segment_detects_line_crossing() {
        let a = half_point(0.5, 2.0 * PI - 1.01, 0.0, 0.0);
        let b = half_point(0.5, 2.0 * PI - 0.99, 0.0, 0.0);
        assert_eq!(segment_degeneracy(0, 1, &a, &b, 1e-9), Degeneracy::OnLine);
        let c2 = half_point(0.5, 0.3, 1.0, 0.0);
        let d2 = half_point(0.5, 0.31, 1.0, 0.0);
        assert_eq!(segment_degeneracy(0, 1, &c2, &d2, 1e-9), Degeneracy::Clear);
    }

    #[test]
    fn zenith_derivatives_match_differences() {
        let pt = half_point(0.8, 2.1, 1.1, 0.0);
        let h = 1e-6;
        for coord in [Coord::Theta, Coord::Mu, Coord::Lambda] {
            let x = pt.get(coord).unwrap();
            let zp = spectral_data(1, 3, &pt.with(coord, x + h)).unwrap().zenith;
            let zm = spectral_data(1, 3, &pt.with(coord, x - h)).unwrap().zenith;
            let fd = (zp - zm) / (2.0 * h);
            let an = zenith_derivative(1, 3, &pt, coord).unwrap();
            assert!((fd - an).abs() < 1e-7, "{coord}: {fd} vs {an}");
        }
    }
}

use crate::error::{Error, Result};
use crate::framegauge::{ConnectionSample, Frame};
use crate::matcore::{c, pauli, CMatrix, ZERO};
use crate::models::{Coord, Degeneracy, ParamPoint};

fn angles(point: &ParamPoint) -> Result<(f64, f64, f64)> {
    Ok((
        point.require(Coord::Theta)?,
        point.require(Coord::Phi)?,
        point.get_or(Coord::B, 1.0),
    ))
}

pub(crate) fn hamiltonian(point: &ParamPoint) -> Result<CMatrix> {
    let (theta, phi, b) = angles(point)?;
    let [sx, sy, sz] = pauli();
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    Ok((sx * c(n[0], 0.0) + sy * c(n[1], 0.0) + sz * c(n[2], 0.0)) * c(b, 0.0))
}

/// Frame columns `(ξ₊, ξ₋)` at zenith `theta` and azimuth `phi`, with the
/// `e^{∓iφ/2}` phases on the up/down components.
pub(crate) fn spinor_frame(theta: f64, phi: f64) -> CMatrix {
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let em = c(0.0, -phi / 2.0).exp();
    let ep = c(0.0, phi / 2.0).exp();
    CMatrix::from_row_slice(2, 2, &[em * ct, -em * st, ep * st, ep * ct])
}

pub(crate) fn frame(point: &ParamPoint) -> Result<Frame> {
    let (theta, phi, b) = angles(point)?;
    let cols = if b >= 0.0 {
        spinor_frame(theta, phi)
    } else {
        // ξ₊ belongs to +|B| only for positive field strength
        let f = spinor_frame(theta, phi);
        CMatrix::from_fn(2, 2, |i, j| f[(i, 1 - j)])
    };
    Frame::new(cols, *point)
}

pub(crate) fn spinor_connection(theta_like: f64, direction_zenith: Option<f64>, azimuthal: bool) -> (CMatrix, CMatrix) {
    let [sx, sy, sz] = pauli();
    if azimuthal {
        let a = (sz.clone() * c(theta_like.cos(), 0.0) - sx * c(theta_like.sin(), 0.0)) * c(0.5, 0.0);
        let ad = sz * c(0.5 * theta_like.cos(), 0.0);
        (a, ad)
    } else {
        let d = direction_zenith.unwrap_or(1.0);
        (sy * c(0.5 * d, 0.0), CMatrix::from_element(2, 2, ZERO))
    }
}

pub(crate) fn connection(point: &ParamPoint, direction: Coord) -> Result<ConnectionSample> {
    let (theta, phi, _) = angles(point)?;
    let (a, ad) = match direction {
        Coord::Theta => spinor_connection(theta, Some(1.0), false),
        Coord::Phi => spinor_connection(theta, None, true),
        Coord::B => (CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)),
        other => {
            return Err(Error::Unsupported(format!(
                "the Berry model has no `{other}` coordinate"
            )))
        }
    };
    let s = match direction {
        Coord::Theta => theta,
        Coord::Phi => phi,
        _ => point.get_or(Coord::B, 1.0),
    };
    Ok(ConnectionSample::from_parts(s, a, ad))
}

pub(crate) fn degeneracy(point: &ParamPoint, tol: f64) -> Degeneracy {
    if point.get_or(Coord::B, 1.0).abs() <= tol {
        Degeneracy::OnLatticePoint
    } else {
        Degeneracy::Clear
    }
}

pub(crate) fn segment_degeneracy(a: &ParamPoint, b: &ParamPoint, tol: f64) -> Degeneracy {
    let (ba, bb) = (a.get_or(Coord::B, 1.0), b.get_or(Coord::B, 1.0));
    if ba.abs() <= tol || bb.abs() <= tol || ba.signum() != bb.signum() {
        Degeneracy::OnLatticePoint
    } else {
        Degeneracy::Clear
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{c, op_norm};
    use std::f64::consts::PI;

    fn at(theta: f64, phi: f64) -> ParamPoint {
        ParamPoint::new().with(Coord::Theta, theta).with(Coord::Phi, phi).with(Coord::B, 1.3)
    }

    #[test]
    fn frame_diagonalizes_hamiltonian() {
        for &(t, p) in &[(0.3, 0.1), (1.2, -2.0), (2.9, 4.0), (4.0, 1.0)] {
            let pt = at(t, p);
            let f = frame(&pt).unwrap().columns;
            let h = hamiltonian(&pt).unwrap();
            let d = f.adjoint() * h * &f;
            let want = crate::matcore::diag(&[c(1.3, 0.0), c(-1.3, 0.0)]);
            assert!(op_norm(&(d - want)) < 1e-12);
        }
    }

    #[test]
    fn north_pole_column_is_spin_up_up_to_phase() {
        let f = frame(&at(0.0, 0.7)).unwrap().columns;
        assert!((f[(0, 0)] - c(0.0, -0.35).exp()).norm() < 1e-15);
        assert!(f[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn full_meridian_flips_frame_sign() {
        let f0 = frame(&at(0.0, 0.4)).unwrap().columns;
        let f1 = frame(&at(2.0 * PI, 0.4)).unwrap().columns;
        assert!(op_norm(&(f0 + f1)) < 1e-14);
    }

    #[test]
    fn field_zero_is_degenerate() {
        let p = at(1.0, 1.0).with(Coord::B, 0.0);
        assert_eq!(degeneracy(&p, 1e-9), Degeneracy::OnLatticePoint);
        assert_eq!(degeneracy(&at(1.0, 1.0), 1e-9), Degeneracy::Clear);
    }
}

use std::f64::consts::PI;

use holonomy_core::matcore::{
    c, eig_unitary, hermiticity_defect, identity, mat_exp, op_norm, ordered_exp, unitarity_defect,
    wrap_phase, CMatrix, PathOrdering, SampledCurve, DEGENERACY_TOL,
};
use holonomy_core::models::{tau_combination, tau_matrices, time_reversal_k};
use holonomy_core::oracles::{index_r, solid_angle};
use holonomy_core::{dynamics, Coord, ModelSpec, ParamPoint, ParametricSystem};
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian(n: usize, entries: &[f64]) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = c(entries[k], 0.0);
        k += 1;
        for j in i + 1..n {
            h[(i, j)] = c(entries[k], entries[k + 1]);
            h[(j, i)] = h[(i, j)].conj();
            k += 2;
        }
    }
    h
}

fn hermitian_strategy() -> impl Strategy<Value = CMatrix> {
    (2usize..=5).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| hermitian(n, &v))
    })
}

fn half_point() -> impl Strategy<Value = ParamPoint> {
    (-7.0f64..7.0, -7.0f64..7.0, 0.0f64..PI, -PI..PI).prop_map(|(mu, lambda, theta, phi)| {
        ParamPoint::new()
            .with(Coord::Mu, mu)
            .with(Coord::Lambda, lambda)
            .with(Coord::Theta, theta)
            .with(Coord::Phi, phi)
    })
}

fn three_half_point() -> impl Strategy<Value = ParamPoint> {
    (half_point(), 0.0f64..PI, -PI..PI)
        .prop_map(|(p, eta, chi)| p.with(Coord::Eta, eta).with(Coord::Chi, chi))
}

fn shifted(p: &ParamPoint, coord: Coord, by: f64) -> ParamPoint {
    p.with(coord, p.get(coord).unwrap() + by)
}

fn sorted_phases(zs: impl IntoIterator<Item = Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = zs.into_iter().map(|z| z.arg()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Multiset distance between two sets of angles on the circle.
fn phase_sets_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let hit = (0..b.len()).find(|&j| !used[j] && wrap_phase(x - b[j]).abs() < tol);
        if let Some(j) = hit {
            used[j] = true;
        }
        hit.is_some()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_of_hermitian_is_unitary(h in hermitian_strategy(), t in -10.0f64..10.0) {
        let u = mat_exp(&h, c(0.0, -t)).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-10);
    }

    #[test]
    fn left_and_right_orderings_are_adjoint(
        hs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 9), 2..12),
    ) {
        let curve = SampledCurve::new(
            hs.iter().enumerate().map(|(k, v)| (k as f64 * 0.3, hermitian(3, v))).collect(),
            false,
        ).unwrap();
        let left = ordered_exp(&curve, PathOrdering::Left, c(0.0, 1.0)).unwrap();
        let right = ordered_exp(&curve, PathOrdering::Right, c(0.0, -1.0)).unwrap();
        prop_assert!(op_norm(&(left - right.adjoint())) < 1e-12);
    }

    #[test]
    fn maps_are_periodic_in_lambda(pt in half_point(), q in -3i32..5, p in -3i32..5) {
        for model in [ModelSpec::MapSpinHalf { q, p }] {
            let a = model.unitary_at(&pt).unwrap();
            let b = model.unitary_at(&shifted(&pt, Coord::Lambda, 2.0 * PI)).unwrap();
            prop_assert!(op_norm(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn maps_are_periodic_in_mu_for_even_q(pt in three_half_point(), half_q in -2i32..3, p in -3i32..5) {
        let q = 2 * half_q;
        for model in [ModelSpec::MapSpinHalf { q, p }, ModelSpec::MapSpinThreehalf { q, p }] {
            let a = model.unitary_at(&pt).unwrap();
            let b = model.unitary_at(&shifted(&pt, Coord::Mu, 2.0 * PI)).unwrap();
            prop_assert!(op_norm(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn odd_q_mu_shift_conjugates_by_the_kick_axis(pt in three_half_point(), q in prop::sample::select(vec![-1, 1, 3]), p in -2i32..4) {
        let m = ModelSpec::MapSpinThreehalf { q, p };
        let tau0 = tau_matrices().generators[0].clone();
        let a = m.unitary_at(&pt).unwrap();
        let b = m.unitary_at(&shifted(&pt, Coord::Mu, 2.0 * PI)).unwrap();
        prop_assert!(op_norm(&(&tau0 * a * &tau0 - b)) < 1e-12);
    }

    #[test]
    fn spectra_follow_the_gap_formula(pt in three_half_point(), q in -2i32..4, p in -2i32..4) {
        for model in [ModelSpec::MapSpinHalf { q, p }, ModelSpec::MapSpinThreehalf { q, p }] {
            let Ok(sd) = model.spectral_data(&pt) else { continue };
            prop_assert!((sd.eigenvalues[0].norm() - 1.0).abs() < 1e-14);
            let eig = eig_unitary(&model.unitary_at(&pt).unwrap(), DEGENERACY_TOL).unwrap();
            let copies = model.dim() / 2;
            let want: Vec<f64> = sd.eigenvalues.iter().flat_map(|z| std::iter::repeat(z.arg()).take(copies)).collect();
            prop_assert!(phase_sets_match(&sorted_phases(eig.eigenvalues.iter().copied()), &want, 1e-10));
        }
    }

    #[test]
    fn closed_form_eigenvectors_satisfy_the_eigen_equation(pt in three_half_point(), q in -2i32..4, p in -2i32..4) {
        for model in [ModelSpec::MapSpinHalf { q, p }, ModelSpec::MapSpinThreehalf { q, p }] {
            let Ok(sd) = model.spectral_data(&pt) else { continue };
            if sd.gap < 1e-3 || sd.gap > 2.0 * PI - 1e-3 { continue; }
            let f = model.eigenvectors_at(&pt).unwrap().columns;
            let u = model.unitary_at(&pt).unwrap();
            let n = model.dim();
            for j in 0..n {
                let z = sd.eigenvalues[if j < n / 2 { 0 } else { 1 }];
                let col = f.column(j).into_owned();
                prop_assert!((&u * &col - col * z).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn kramers_pairs_are_orthogonal(pt in three_half_point(), q in -2i32..4, p in -2i32..4) {
        let model = ModelSpec::MapSpinThreehalf { q, p };
        let Ok(f) = model.eigenvectors_at(&pt) else { return Ok(()) };
        let f = f.columns;
        prop_assert!(f.column(1).dotc(&f.column(0)).norm() < 1e-12);
        prop_assert!(f.column(3).dotc(&f.column(2)).norm() < 1e-12);
    }

    #[test]
    fn time_reversal_squares_to_minus_one(re in prop::array::uniform4(-1.0f64..1.0), im in prop::array::uniform4(-1.0f64..1.0)) {
        let v: [Complex64; 4] = std::array::from_fn(|k| c(re[k], im[k]));
        let kk = time_reversal_k(&time_reversal_k(&v));
        for k in 0..4 {
            prop_assert!((kk[k] + v[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn tau_combinations_square_to_the_norm(n in prop::array::uniform5(-2.0f64..2.0)) {
        let t = tau_combination(&n);
        let norm2: f64 = n.iter().map(|x| x * x).sum();
        prop_assert!(op_norm(&(&t * &t - identity(4) * c(norm2, 0.0))) < 1e-13);
        prop_assert!(hermiticity_defect(&t) < 1e-15);
    }

    #[test]
    fn index_r_gains_two_per_half_turn_of_b_mu(b_lam in -6.0f64..6.0, b_mu in -6.0f64..6.0) {
        let near_int = |x: f64| (x - x.round()).abs() < 1e-6;
        prop_assume!(!near_int((b_lam + b_mu) / PI) && !near_int((b_lam - b_mu) / PI));
        let r0 = index_r(b_lam, b_mu).unwrap();
        let r1 = index_r(b_lam, b_mu + PI).unwrap();
        prop_assert_eq!(r1, r0 + 2);
    }

    #[test]
    fn reversing_a_polygon_negates_its_solid_angle(
        verts in prop::collection::vec((0.2f64..1.3, -PI..PI), 3..8),
    ) {
        let fwd = solid_angle(&verts);
        let rev: Vec<(f64, f64)> = verts.iter().rev().copied().collect();
        let back = solid_angle(&rev);
        prop_assert!(wrap_phase((fwd + back) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn fujikawa_matrix_is_hermitian(theta in 0.05f64..3.1, phi in -PI..PI, b in 0.2f64..3.0, sdot in -5.0f64..5.0) {
        let pt = ParamPoint::new().with(Coord::Theta, theta).with(Coord::Phi, phi).with(Coord::B, b);
        for dir in [Coord::Theta, Coord::Phi, Coord::B] {
            let f = dynamics::fujikawa_f(&ModelSpec::BerrySpinHalf, &pt, dir, sdot).unwrap();
            prop_assert!(hermiticity_defect(&f) < 1e-10);
        }
    }

    #[test]
    fn param_points_round_trip_through_json(pt in three_half_point()) {
        let s = serde_json::to_string(&pt).unwrap();
        let back: ParamPoint = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, pt);
    }
}

#[test]
fn ordered_exponential_converges_at_second_order() {
    // a smooth non-commuting curve on [0, 2]
    let a = |s: f64| {
        hermitian(2, &[s.sin(), 0.3 * s, (2.0 * s).cos(), -0.5 * s.cos()])
    };
    let at = |n: usize| {
        let curve = SampledCurve::from_fn(0.0, 2.0, n, false, a).unwrap();
        ordered_exp(&curve, PathOrdering::Right, c(0.0, -1.0)).unwrap()
    };
    let reference = at(1 << 14);
    let e1 = op_norm(&(at(64) - &reference));
    let e2 = op_norm(&(at(128) - &reference));
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "observed order {order}");
}

#[test]
fn berry_clusters_are_singletons() {
    assert_eq!(ModelSpec::BerrySpinHalf.clusters(), vec![vec![0], vec![1]]);
    assert_eq!(ModelSpec::MapSpinThreehalf { q: 0, p: 1 }.clusters(), vec![vec![0, 1], vec![2, 3]]);
}

use std::f64::consts::FRAC_PI_2;

use holonomy_core::framegauge::{
    analytic_connection, connection_at, continue_frame, geometric_factor, holonomy_run, wilson_line,
};
use holonomy_core::matcore::{c, identity, mat_exp, op_norm, pauli, unitarity_defect, CMatrix, SampledCurve};
use holonomy_core::oracles::solid_angle;
use holonomy_core::{
    holonomy_matrix, holonomy_matrix_with, Coord, Error, FrameGauge, LoopPath, ModelSpec, ParamPoint,
    ParametricSystem,
};

fn berry(theta: f64, phi: f64) -> ParamPoint {
    ParamPoint::new().with(Coord::Theta, theta).with(Coord::Phi, phi).with(Coord::B, 1.0)
}

fn half(mu: f64, lambda: f64, theta: f64, phi: f64) -> ParamPoint {
    ParamPoint::new()
        .with(Coord::Mu, mu)
        .with(Coord::Lambda, lambda)
        .with(Coord::Theta, theta)
        .with(Coord::Phi, phi)
}

fn three_half(mu: f64, lambda: f64, theta: f64) -> ParamPoint {
    half(mu, lambda, theta, 0.3).with(Coord::Eta, 0.6).with(Coord::Chi, 0.4)
}

fn bundled_loops() -> Vec<(ModelSpec, LoopPath)> {
    let mut out = Vec::new();
    let b = berry(1.1, 0.2);
    for coord in [Coord::Theta, Coord::Phi] {
        out.push((ModelSpec::BerrySpinHalf, LoopPath::coordinate_loop(b, coord).unwrap()));
    }
    out.push((
        ModelSpec::BerrySpinHalf,
        LoopPath::spherical_polygon(b, vec![(0.4, 0.1), (1.0, 1.2), (0.9, 2.9), (0.5, -1.5)]).unwrap(),
    ));
    for (q, p) in [(0, 1), (4, 3), (0, 0)] {
        let m = ModelSpec::MapSpinHalf { q, p };
        for coord in [Coord::Theta, Coord::Phi, Coord::Lambda, Coord::Mu] {
            out.push((m, LoopPath::coordinate_loop(half(1.0, 0.7, 1.0, 0.3), coord).unwrap()));
        }
    }
    for (q, p) in [(0, 1), (4, 4)] {
        let m = ModelSpec::MapSpinThreehalf { q, p };
        for coord in [Coord::Theta, Coord::Lambda, Coord::Mu, Coord::Eta, Coord::Phi, Coord::Chi] {
            out.push((m, LoopPath::coordinate_loop(three_half(1.0, 0.7, 1.0), coord).unwrap()));
        }
    }
    out
}

#[test]
fn zero_area_loop_has_trivial_holonomy() {
    // out along a meridian and back
    let v = vec![berry(0.5, 0.3), berry(1.2, 0.3), berry(0.5, 0.3).with(Coord::Phi, 0.3)];
    let path = LoopPath::polyline(berry(0.5, 0.3), v, true).unwrap();
    let hol = holonomy_matrix(&ModelSpec::BerrySpinHalf, &path, 1024).unwrap();
    assert!(op_norm(&(&hol.m - identity(2))) < 1e-6);
    assert_eq!(hol.permutation, vec![0, 1]);
}

#[test]
fn generic_berry_loop_follows_the_solid_angle() {
    let verts = vec![(0.3, 0.0), (1.1, 0.8), (0.7, 2.0)];
    let path = LoopPath::spherical_polygon(berry(0.3, 0.0), verts.clone()).unwrap();
    let hol = holonomy_matrix(&ModelSpec::BerrySpinHalf, &path, 4096).unwrap();
    let [_, _, sz] = pauli();
    let want = mat_exp(&sz, c(0.0, -solid_angle(&verts) / 2.0)).unwrap();
    assert!(op_norm(&(&hol.m - want)) < 1e-5);
}

#[test]
fn odd_p_lambda_loop_is_a_swap() {
    let m = ModelSpec::MapSpinHalf { q: 0, p: 1 };
    let path = LoopPath::coordinate_loop(half(1.0, 0.0, 1.0, 0.0), Coord::Lambda).unwrap();
    let hol = holonomy_matrix(&m, &path, 4096).unwrap();
    let want = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    assert!(op_norm(&(&hol.m - want)) < 1e-5);
    assert_eq!(hol.permutation, vec![1, 0]);
}

#[test]
fn wilson_lines_of_berry_loops() {
    let m = ModelSpec::BerrySpinHalf;
    let lat = LoopPath::coordinate_loop(berry(0.9, 0.0), Coord::Phi).unwrap();
    let run = holonomy_run(&m, &lat, 2048, FrameGauge::Model).unwrap();
    let curve = SampledCurve::new(run.connections.iter().map(|x| (x.s, x.a.clone())).collect(), true).unwrap();
    assert!(op_norm(&(wilson_line(&curve).unwrap() + identity(2))) < 1e-5);

    let mer = LoopPath::coordinate_loop(berry(0.0, 0.4), Coord::Theta).unwrap();
    let run = holonomy_run(&m, &mer, 2048, FrameGauge::Model).unwrap();
    assert!(op_norm(&(&run.holonomy.w + identity(2))) < 1e-5);
    assert!(op_norm(&(&run.holonomy.b - identity(2))) < 1e-12);
}

#[test]
fn zero_connection_gives_identity_factors() {
    let z = SampledCurve::from_fn(0.0, 1.0, 8, true, |_| CMatrix::zeros(3, 3)).unwrap();
    assert!(op_norm(&(wilson_line(&z).unwrap() - identity(3))) == 0.0);
    assert!(op_norm(&(geometric_factor(&z).unwrap() - identity(3))) == 0.0);
}

#[test]
fn kramers_eta_loop_geometric_factor_is_block_diagonal() {
    let m = ModelSpec::MapSpinThreehalf { q: 0, p: 1 };
    let path = LoopPath::coordinate_loop(three_half(1.0, 0.7, 1.0), Coord::Eta).unwrap();
    let run = holonomy_run(&m, &path, 2048, FrameGauge::Model).unwrap();
    let b = &run.holonomy.b;
    for i in 0..2 {
        for j in 2..4 {
            assert!(b[(i, j)].norm() < 1e-12 && b[(j, i)].norm() < 1e-12);
        }
    }
    // W(C_η) = −1, so B carries M up to sign
    assert!(op_norm(&(&run.holonomy.w + identity(4))) < 1e-5);
    assert!(op_norm(&(b + &run.holonomy.m)) < 1e-5);
}

#[test]
fn bundled_loops_are_unitary_and_parallel_transport_is_flat() {
    for (model, path) in bundled_loops() {
        let hol = match holonomy_matrix(&model, &path, 4096) {
            Ok(h) => h,
            Err(Error::Precondition(_)) => continue,
            Err(e) => panic!("{model:?} {path:?}: {e}"),
        };
        assert!(unitarity_defect(&hol.m) < 1e-6, "{model:?} {:?}", path.direction());
        assert!(op_norm(&(&hol.b - identity(model.dim()))) < 1e-6);
        assert!(op_norm(&(&hol.m - &hol.w)) < 1e-6);
        for z in &hol.level_phases {
            assert!((z.norm() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn single_valued_frames_have_no_permutation() {
    for (model, path) in bundled_loops() {
        let Ok(frames) = continue_frame(&model, &path, 1024, FrameGauge::MaxOverlap) else { continue };
        let (first, last) = (&frames[0].columns, &frames[frames.len() - 1].columns);
        if op_norm(&(first - last)) < 1e-6 {
            let hol = holonomy_matrix(&model, &path, 1024).unwrap();
            let ident: Vec<usize> = (0..model.dim()).collect();
            assert_eq!(hol.permutation, ident);
        }
    }
}

#[test]
fn gauges_agree_on_the_holonomy() {
    for (model, path) in bundled_loops() {
        let Ok(pt) = holonomy_matrix_with(&model, &path, 2048, FrameGauge::ParallelTransport) else { continue };
        for gauge in [FrameGauge::MaxOverlap, FrameGauge::Model] {
            let other = holonomy_matrix_with(&model, &path, 2048, gauge).unwrap();
            assert!(op_norm(&(&other.m - &pt.m)) < 1e-5, "{model:?} {:?} {gauge:?}", path.direction());
        }
    }
}

#[test]
fn open_paths_and_non_periodic_loops_are_refused() {
    let open = LoopPath::coordinate_segment(berry(0.4, 0.0), Coord::Phi, 0.0, 1.0);
    assert!(matches!(
        holonomy_matrix(&ModelSpec::BerrySpinHalf, &open, 64),
        Err(Error::Precondition(_))
    ));
    let odd_q = LoopPath::coordinate_loop(half(0.0, 0.7, 1.0, 0.3), Coord::Mu).unwrap();
    assert!(matches!(
        holonomy_matrix(&ModelSpec::MapSpinHalf { q: 1, p: 1 }, &odd_q, 64),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn loop_through_a_degeneracy_line_is_refused() {
    // at θ = 0 the λ loop crosses B_λ + B_μ ∈ πℤ
    let path = LoopPath::coordinate_loop(half(0.6, 0.0, 0.0, 0.0), Coord::Lambda).unwrap();
    assert!(matches!(
        holonomy_matrix(&ModelSpec::MapSpinHalf { q: 0, p: 1 }, &path, 1024),
        Err(Error::Degeneracy(_))
    ));
}

fn difference_error(model: &ModelSpec, point: &ParamPoint, dir: Coord, h: f64) -> f64 {
    let frame = |x: f64| {
        let pt = point.with(dir, point.get(dir).unwrap() + x);
        model.analytic_frame(&pt, None).unwrap()
    };
    let s = point.get(dir).unwrap();
    let fd = connection_at(&frame(-h), &frame(0.0), &frame(h), h, s, &model.clusters()).unwrap();
    let exact = analytic_connection(model, point, dir).unwrap();
    op_norm(&(fd.a - exact.a)).max(op_norm(&(fd.a_diag - exact.a_diag)))
}

#[test]
fn difference_connections_converge_at_second_order() {
    let cases: Vec<(ModelSpec, ParamPoint, Vec<Coord>)> = vec![
        (ModelSpec::BerrySpinHalf, berry(1.1, 0.4), vec![Coord::Theta, Coord::Phi]),
        (
            ModelSpec::MapSpinHalf { q: 1, p: 3 },
            half(1.0, 0.7, 1.0, 0.3),
            vec![Coord::Theta, Coord::Phi, Coord::Lambda, Coord::Mu],
        ),
        (
            ModelSpec::MapSpinThreehalf { q: 0, p: 1 },
            three_half(1.0, 0.7, 1.0),
            vec![Coord::Theta, Coord::Mu, Coord::Lambda, Coord::Eta, Coord::Phi, Coord::Chi],
        ),
    ];
    for (model, pt, dirs) in cases {
        for dir in dirs {
            let e1 = difference_error(&model, &pt, dir, 1e-2);
            let e2 = difference_error(&model, &pt, dir, 5e-3);
            let order = (e1 / e2).log2();
            assert!(order >= 1.9, "{model:?} {dir}: {e1:.3e} → {e2:.3e}");
        }
    }
}

#[test]
fn berry_phi_connection_on_the_equator() {
    let a = analytic_connection(&ModelSpec::BerrySpinHalf, &berry(FRAC_PI_2, 0.0), Coord::Phi).unwrap();
    let [sx, _, _] = pauli();
    assert!(op_norm(&(a.a + sx * c(0.5, 0.0))) < 1e-15);
    assert!(analytic_connection(&ModelSpec::BerrySpinHalf, &berry(1.0, 0.0), Coord::Mu).is_err());
}

#[test]
fn reversed_latitude_inverts_the_holonomy() {
    let path = LoopPath::coordinate_loop(berry(0.7, 0.0), Coord::Phi).unwrap();
    let fwd = holonomy_matrix(&ModelSpec::BerrySpinHalf, &path, 2048).unwrap();
    let back = holonomy_matrix(&ModelSpec::BerrySpinHalf, &path.reversed(), 2048).unwrap();
    assert!(op_norm(&(&fwd.m * &back.m - identity(2))) < 1e-5);
}

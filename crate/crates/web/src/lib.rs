//! Browser bindings for the holonomy toolkit.
//!
//! Every export takes plain numbers and returns a JSON string; errors come
//! back as `{"error": "..."}` so the page never has to catch.

use std::f64::consts::PI;

use holonomy_core::framegauge::track_levels;
use holonomy_core::matcore::op_norm;
use holonomy_core::models::kick_strengths;
use holonomy_core::oracles::{index_r, meridian_sign_from_lattice, predict_path, EtaConvention};
use holonomy_core::{holonomy_auto, CMatrix, Coord, FrameGauge, LoopPath, ModelSpec, ParamPoint, Refinement};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn model(spin: u32, q: i32, p: i32) -> Result<ModelSpec, String> {
    match spin {
        1 => Ok(ModelSpec::MapSpinHalf { q, p }),
        3 => Ok(ModelSpec::MapSpinThreehalf { q, p }),
        _ => Err(format!("spin must be 1 (for 1/2) or 3 (for 3/2), got {spin}")),
    }
}

fn coord(name: &str) -> Result<Coord, String> {
    match name {
        "mu" => Ok(Coord::Mu),
        "lambda" => Ok(Coord::Lambda),
        "theta" => Ok(Coord::Theta),
        "phi" => Ok(Coord::Phi),
        "eta" => Ok(Coord::Eta),
        "chi" => Ok(Coord::Chi),
        other => Err(format!("unknown loop coordinate `{other}`")),
    }
}

/// Base point; η and χ only matter for spin 3/2.
fn base(mu: f64, lambda: f64, theta: f64, phi: f64) -> ParamPoint {
    ParamPoint::new()
        .with(Coord::Mu, mu)
        .with(Coord::Lambda, lambda)
        .with(Coord::Theta, theta)
        .with(Coord::Eta, 0.7)
        .with(Coord::Chi, 0.4)
        .with(Coord::Phi, phi)
}

fn matrix(m: &CMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Quasienergy of each level along a coordinate loop.
pub fn levels_value(
    spin: u32,
    q: i32,
    p: i32,
    along: &str,
    point: [f64; 4],
    samples: usize,
) -> Result<Value, String> {
    let m = model(spin, q, p)?;
    let path = LoopPath::coordinate_loop(base(point[0], point[1], point[2], point[3]), coord(along)?)
        .map_err(|e| e.to_string())?;
    let series = track_levels(&m, &path, samples.max(8)).map_err(|e| e.to_string())?;
    let (t0, t1) = path.param_range();
    let n = series.first().map_or(0, Vec::len);
    let t: Vec<f64> = (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1).max(1) as f64).collect();
    Ok(json!({ "t": t, "levels": series }))
}

/// Integrated holonomy beside its closed form.
pub fn holonomy_value(spin: u32, q: i32, p: i32, along: &str, point: [f64; 4]) -> Result<Value, String> {
    let m = model(spin, q, p)?;
    let path = LoopPath::coordinate_loop(base(point[0], point[1], point[2], point[3]), coord(along)?)
        .map_err(|e| e.to_string())?;
    let refine = Refinement {
        initial_steps: 512,
        tolerance: 1e-6,
        max_steps: 1 << 15,
    };
    let hol = holonomy_auto(&m, &path, FrameGauge::ParallelTransport, refine).map_err(|e| e.to_string())?;
    let mut out = json!({
        "M": matrix(&hol.m),
        "permutation": hol.permutation,
        "steps": hol.steps,
        "residual": hol.residual,
    });
    match predict_path(&m, &path, EtaConvention::Swapped) {
        Ok(want) => {
            out["expected"] = matrix(&want.m_expected);
            out["formula"] = serde_json::to_value(want.formula).unwrap_or(Value::Null);
            out["error"] = json!(op_norm(&(&hol.m - &want.m_expected)));
        }
        Err(e) => out["no_closed_form"] = json!(e.to_string()),
    }
    Ok(out)
}

/// Meridian sign and index `r` over a `cells × cells` grid of the (μ, λ)
/// torus. Each cell is sampled slightly off centre, since symmetric grids
/// put centres exactly on degeneracy lines; cells still on a line are `null`.
pub fn sign_map_value(q: i32, p: i32, cells: usize) -> Result<Value, String> {
    if !(2..=200).contains(&cells) {
        return Err(format!("cells must be in 2..=200, got {cells}"));
    }
    let step = 2.0 * PI / cells as f64;
    let (nudge_mu, nudge_lam) = (0.5 + 0.01 * std::f64::consts::SQRT_2, 0.5 + 0.01 * 3f64.sqrt());
    let mut sign = Vec::with_capacity(cells);
    let mut index = Vec::with_capacity(cells);
    for i in 0..cells {
        let lambda = (i as f64 + nudge_lam) * step;
        let (mut s_row, mut r_row) = (Vec::new(), Vec::new());
        for j in 0..cells {
            let mu = (j as f64 + nudge_mu) * step;
            let (b_mu, b_lam) = kick_strengths(q, p, mu, lambda);
            s_row.push(meridian_sign_from_lattice(b_lam, b_mu).ok());
            r_row.push(index_r(b_lam, b_mu).ok());
        }
        sign.push(s_row);
        index.push(r_row);
    }
    Ok(json!({ "step": step, "sign": sign, "r": index }))
}

#[wasm_bindgen]
pub fn levels(spin: u32, q: i32, p: i32, along: &str, mu: f64, lambda: f64, theta: f64, phi: f64, samples: usize) -> String {
    respond(levels_value(spin, q, p, along, [mu, lambda, theta, phi], samples))
}

#[wasm_bindgen]
pub fn holonomy(spin: u32, q: i32, p: i32, along: &str, mu: f64, lambda: f64, theta: f64, phi: f64) -> String {
    respond(holonomy_value(spin, q, p, along, [mu, lambda, theta, phi]))
}

#[wasm_bindgen]
pub fn sign_map(q: i32, p: i32, cells: usize) -> String {
    respond(sign_map_value(q, p, cells))
}

//! Browser demo: beam patterns, single-antenna rate regions and fixed-array
//! rate regions, computed by the core crate and drawn on a canvas.

use ma_physi::channel::{sample_channel, Apv, Position2D, ScenarioParams};
use ma_physi::inner::{solve_inner, InnerProblem, SolverTolerances};
use ma_physi::los::ula_beam_gain;
use ma_physi::outer::{build_grid, fpa_apv};
use ma_physi::rates::{single_ma_position_search, time_sharing_slots, TsApvMode};
use wasm_bindgen::prelude::*;

/// Normalised gain `|a(θ)ᴴa(θ₀)|²/N` of an `n`-element array with spacing
/// `d` wavelengths steered to `steer_deg`, sampled at `points` angles over
/// `[-90°, 90°]`. Returns `[angle, gain, angle, gain, ...]`.
pub fn beam_pattern(n: usize, d: f64, steer_deg: f64, points: usize) -> Vec<f64> {
    let s0 = steer_deg.to_radians().sin();
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let deg = -90.0 + 180.0 * i as f64 / (points.max(2) - 1) as f64;
        let g = ula_beam_gain(d, n, deg.to_radians().sin() - s0);
        out.push(deg);
        out.push(g);
    }
    out
}

/// Boundary of one region as `[r_ms, Rc, ...]`; infeasible points are skipped.
fn flatten(points: impl IntoIterator<Item = (f64, Option<f64>)>) -> Vec<f64> {
    points
        .into_iter()
        .filter_map(|(r, rc)| rc.map(|v| [r, v]))
        .flatten()
        .collect()
}

/// Single movable antenna on an `m × m` grid over an `a_over_lambda` square:
/// PHY-SI with the best common position, then time sharing with a position
/// per slot. The two curves are concatenated, the first entry holding the
/// length of the PHY-SI part.
pub fn single_ma_region(seed: u64, m: usize, a_over_lambda: f64, points: usize) -> Result<Vec<f64>, String> {
    let scenario = ScenarioParams::default();
    let channel = sample_channel(&scenario, seed, 0);
    let grid = build_grid(a_over_lambda * scenario.wavelength(), m).map_err(|e| e.to_string())?;
    let power = scenario.tx_power();
    let slots = time_sharing_slots(&channel, &TsApvMode::SinglePerSlot(grid.clone()), power).map_err(|e| e.to_string())?;
    let reqs: Vec<f64> = (0..points)
        .map(|i| slots.multicast * i as f64 / (points.max(2) - 1) as f64)
        .collect();
    let phy = flatten(
        reqs.iter()
            .map(|&r| (r, single_ma_position_search(&channel, &grid, power, r).ok().map(|(_, v)| v.max(0.0)))),
    );
    let ts = flatten(reqs.iter().map(|&r| (r, slots.secrecy_at(r))));
    let mut out = vec![phy.len() as f64];
    out.extend(phy);
    out.extend(ts);
    Ok(out)
}

/// Rate region of a half-wavelength array of `n` antennas at the centre.
pub fn fpa_region(seed: u64, n: usize, points: usize) -> Result<Vec<f64>, String> {
    if n == 0 || n > 8 {
        return Err("antenna count must be between 1 and 8".into());
    }
    let scenario = ScenarioParams::default();
    let channel = sample_channel(&scenario, seed, 0);
    let apv: Apv = fpa_apv(n, scenario.wavelength());
    let (h1, h2) = channel.channels(&apv);
    let (power, noise) = (scenario.tx_power(), scenario.noise_power());
    let tol = SolverTolerances::default();
    let cap = InnerProblem::new(h1.clone(), h2.clone(), power, 0.0, noise)
        .map_err(|e| e.to_string())?
        .multicast_capacity();
    Ok(flatten((0..points).map(|i| {
        let r = cap * i as f64 / (points.max(2) - 1) as f64;
        let sol = InnerProblem::new(h1.clone(), h2.clone(), power, r, noise)
            .ok()
            .and_then(|p| solve_inner(&p, &tol).secrecy_rate());
        (r, sol)
    })))
}

/// Grid positions of the single-antenna grid, for drawing.
pub fn grid_positions(m: usize, a_over_lambda: f64) -> Vec<f64> {
    let lambda = ScenarioParams::default().wavelength();
    build_grid(a_over_lambda * lambda, m)
        .map(|g| g.points.iter().flat_map(|p: &Position2D| [p.x / lambda, p.y / lambda]).collect())
        .unwrap_or_default()
}

#[wasm_bindgen(js_name = beamPattern)]
pub fn beam_pattern_js(n: usize, d: f64, steer_deg: f64, points: usize) -> Vec<f64> {
    beam_pattern(n, d, steer_deg, points)
}

#[wasm_bindgen(js_name = singleMaRegion)]
pub fn single_ma_region_js(seed: u32, m: usize, a_over_lambda: f64, points: usize) -> Result<Vec<f64>, JsError> {
    single_ma_region(seed as u64, m, a_over_lambda, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fpaRegion)]
pub fn fpa_region_js(seed: u32, n: usize, points: usize) -> Result<Vec<f64>, JsError> {
    fpa_region(seed as u64, n, points).map_err(|e| JsError::new(&e))
}

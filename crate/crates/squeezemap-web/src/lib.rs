//! wasm-bindgen exports for the static demo page in `www/`.
//!
//! Each export wraps a plain function that returns `squeezemap::Result`, so
//! the numerics can be tested natively.

use squeezemap::encircling::{self, Direction, EncirclingPath};
use squeezemap::linalg;
use squeezemap::sensing::{self, SensorConfig};
use squeezemap::topology::{self, KagomeParams};
use squeezemap::Result;
use wasm_bindgen::prelude::*;

/// Rows of (ω_p, flux) flattened, followed by the peak positions.
pub struct FluxData {
    pub omegas: Vec<f64>,
    pub flux: Vec<f64>,
    pub peaks: Vec<f64>,
}

pub fn flux_data(delta: f64, nu: f64, kappa: f64, epsilon: f64, omega_max: f64, points: usize) -> Result<FluxData> {
    let cfg = SensorConfig::new(delta, nu, kappa, epsilon)?;
    let omegas = sensing::uniform_grid(-omega_max, omega_max, points.max(3));
    let flux = sensing::flux_spectrum(&cfg, &omegas)?;
    let peaks = sensing::find_peaks(&omegas, &flux).iter().map(|p| p.omega).collect();
    Ok(FluxData { omegas, flux, peaks })
}

/// Rows of (t, |c₊|, |c₋|, E_N) for a loop started on the c₊ branch.
pub fn encircle_rows(center_g: f64, radius: f64, duration: f64, steps: usize, ccw: bool) -> Result<Vec<[f64; 4]>> {
    let dir = if ccw { Direction::Ccw } else { Direction::Cw };
    let path = EncirclingPath::new(center_g, radius, duration, dir, 1.0)?;
    let reference = EncirclingPath::new(center_g, radius, duration, Direction::Ccw, 1.0)?;
    let run = encircling::run_encircling(&path, &encircling::initial_branch_state(&reference), steps.max(2), 1e-9)?;
    Ok((0..run.trace.times.len())
        .map(|k| [run.trace.times[k], run.trace.c_plus[k].norm(), run.trace.c_minus[k].norm(), run.entanglement[k]])
        .collect())
}

/// Real parts of the six Kagome bands along Γ → M → K → Γ, rows of
/// (path coordinate, E₁..E₆), plus max |Im| over the path.
pub fn kagome_rows(omega0: f64, j: f64, nu: f64, per_leg: usize) -> (Vec<[f64; 7]>, f64) {
    let p = KagomeParams::new(omega0, j, nu);
    let third = std::f64::consts::TAU / 3.0;
    let corners = [(0.0, 0.0), (std::f64::consts::PI, 0.0), (third, third), (0.0, 0.0)];
    let n = per_leg.max(2);
    let mut rows = Vec::new();
    let mut max_imag = 0.0f64;
    let mut s = 0.0;
    for leg in corners.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        for k in 0..n {
            let f = k as f64 / n as f64;
            let (t1, t2) = (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
            let mut ev = linalg::eigenvalues(&topology::kagome_bloch(&p, t1, t2));
            ev.sort_by(|x, y| x.re.total_cmp(&y.re));
            max_imag = ev.iter().fold(max_imag, |m, z| m.max(z.im.abs()));
            let mut row = [s + f * len; 7];
            for (slot, z) in row[1..].iter_mut().zip(&ev) {
                *slot = z.re;
            }
            rows.push(row);
        }
        s += len;
    }
    (rows, max_imag)
}

fn js_err(e: squeezemap::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// [ω₀, F₀, ω₁, F₁, ...]; peaks via `flux_peaks`.
#[wasm_bindgen]
pub fn flux_spectrum(delta: f64, nu: f64, kappa: f64, epsilon: f64, omega_max: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    let d = flux_data(delta, nu, kappa, epsilon, omega_max, points).map_err(js_err)?;
    Ok(d.omegas.iter().zip(&d.flux).flat_map(|(w, f)| [*w, *f]).collect())
}

#[wasm_bindgen]
pub fn flux_peaks(delta: f64, nu: f64, kappa: f64, epsilon: f64, omega_max: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    Ok(flux_data(delta, nu, kappa, epsilon, omega_max, points).map_err(js_err)?.peaks)
}

/// Flattened rows of four: t, |c₊|, |c₋|, E_N.
#[wasm_bindgen]
pub fn encircle_trace(center_g: f64, radius: f64, duration: f64, steps: usize, ccw: bool) -> std::result::Result<Vec<f64>, JsError> {
    Ok(encircle_rows(center_g, radius, duration, steps, ccw).map_err(js_err)?.concat())
}

/// Flattened rows of seven: s, E₁..E₆. The final entry is max |Im E|.
#[wasm_bindgen]
pub fn kagome_bands(omega0: f64, j: f64, nu: f64, per_leg: usize) -> Vec<f64> {
    let (rows, max_imag) = kagome_rows(omega0, j, nu, per_leg);
    let mut out = rows.concat();
    out.push(max_imag);
    out
}

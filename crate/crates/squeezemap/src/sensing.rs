//! Exceptional-point sensing observables: the reflected flux of a driven
//! degenerate parametric amplifier and eigenvalue-splitting scaling laws.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{build_hoep_trimer, build_pt_dimer};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub delta: f64,
    pub nu: f64,
    pub kappa: f64,
    /// Dispersive perturbation, entering as δ → δ + ε.
    pub epsilon: f64,
}

impl SensorConfig {
    pub fn new(delta: f64, nu: f64, kappa: f64, epsilon: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidInput("kappa must be positive".into()));
        }
        if ![delta, nu, epsilon].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite sensor parameter".into()));
        }
        Ok(Self { delta, nu, kappa, epsilon })
    }

    pub fn effective_detuning(&self) -> f64 {
        self.delta + self.epsilon
    }

    /// True in the lasing region δ_eff² + (κ/2)² ≤ ν².
    pub fn above_threshold(&self) -> bool {
        let d = self.effective_detuning();
        d * d + self.kappa * self.kappa / 4.0 <= self.nu * self.nu
    }
}

/// Reflected flux normalised to the input flux,
/// 1 + 2κ²ν² / (f² + κ²(δ² − ν²)) with f = ω_p² + κ²/4 − δ² + ν².
pub fn reflection_flux(cfg: &SensorConfig, omega_p: f64) -> Result<f64> {
    let d = cfg.effective_detuning();
    let (k2, n2) = (cfg.kappa * cfg.kappa, cfg.nu * cfg.nu);
    let f = omega_p * omega_p + k2 / 4.0 - d * d + n2;
    let den = f * f + k2 * (d * d - n2);
    if den.abs() < 1e-14 * k2 * k2 {
        return Err(Error::PoleEncountered { omega_p });
    }
    Ok(1.0 + 2.0 * k2 * n2 / den)
}

pub fn flux_spectrum(cfg: &SensorConfig, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas.par_iter().map(|&w| reflection_flux(cfg, w)).collect()
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
}

/// Local maxima higher than 1 + 0.01·(max − 1), refined by a parabola
/// through the three bracketing samples. The grid must be uniform.
pub fn find_peaks(omegas: &[f64], values: &[f64]) -> Vec<Peak> {
    let n = omegas.len().min(values.len());
    if n < 3 {
        return Vec::new();
    }
    let max = values[..n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = 1.0 + 0.01 * (max - 1.0);
    let h = omegas[1] - omegas[0];
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        let (l, m, r) = (values[i - 1], values[i], values[i + 1]);
        if m > l && m >= r && m > threshold {
            let curv = l - 2.0 * m + r;
            let (shift, height) = if curv < 0.0 {
                let s = 0.5 * (l - r) / curv;
                (s, m - 0.25 * (l - r) * s)
            } else {
                (0.0, m)
            };
            peaks.push(Peak { omega: omegas[i] + shift * h, height });
        }
    }
    peaks
}

/// Leading-order EP splitting 2√(2g₀ε).
pub fn ep_splitting_prediction(g0: f64, epsilon: f64) -> f64 {
    2.0 * (2.0 * g0 * epsilon).sqrt()
}

/// Exact eigenvalue splitting of the dimer at the EP γ = 2g₀ after g₀ → g₀ + ε.
pub fn dimer_splitting(g0: f64, epsilon: f64) -> f64 {
    max_pairwise_distance(&linalg::eigenvalues(build_pt_dimer(g0 + epsilon, 2.0 * g0).matrix()))
}

/// Splitting of the trimer at its third-order EP g = √2γ/4 with the middle
/// site detuned by ε.
pub fn hoep_splitting(gamma: f64, epsilon: f64) -> f64 {
    let g = std::f64::consts::SQRT_2 * gamma / 4.0;
    max_pairwise_distance(&linalg::eigenvalues(build_hoep_trimer(g, gamma, epsilon).matrix()))
}

fn max_pairwise_distance(v: &[linalg::C64]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingScan {
    pub epsilons: Vec<f64>,
    pub splittings: Vec<f64>,
    pub fitted_exponent: f64,
}

fn check_decades(epsilons: &[f64]) -> Result<()> {
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Precondition("all epsilons must be positive".into()));
    }
    let lo = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = epsilons.iter().copied().fold(0.0, f64::max);
    if hi / lo < 1e3 * (1.0 - 1e-9) {
        return Err(Error::Precondition("epsilons must span at least three decades".into()));
    }
    Ok(())
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn hoep_scaling_scan(gamma: f64, epsilons: &[f64]) -> Result<ScalingScan> {
    check_decades(epsilons)?;
    let splittings: Vec<f64> = epsilons.iter().map(|&e| hoep_splitting(gamma, e)).collect();
    let fitted_exponent = loglog_slope(epsilons, &splittings);
    Ok(ScalingScan { epsilons: epsilons.to_vec(), splittings, fitted_exponent })
}

/// The second-order analogue on the dimer, with g₀ = γ/2.
pub fn dimer_scaling_scan(gamma: f64, epsilons: &[f64]) -> Result<ScalingScan> {
    check_decades(epsilons)?;
    let splittings: Vec<f64> = epsilons.iter().map(|&e| dimer_splitting(gamma / 2.0, e)).collect();
    let fitted_exponent = loglog_slope(epsilons, &splittings);
    Ok(ScalingScan { epsilons: epsilons.to_vec(), splittings, fitted_exponent })
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    uniform_grid(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undriven_flux_is_unity() {
        let cfg = SensorConfig::new(1.0, 0.0, 1.0, 0.0).unwrap();
        for w in [-3.0, 0.0, 0.4, 7.0] {
            assert_eq!(reflection_flux(&cfg, w).unwrap(), 1.0);
        }
    }

    #[test]
    fn flux_at_the_ep() {
        let cfg = SensorConfig::new(12.5, 12.5, 1.0, 0.0).unwrap();
        assert!((reflection_flux(&cfg, 0.0).unwrap() - 5001.0).abs() < 1e-9);
    }

    #[test]
    fn splitting_prediction() {
        assert!((ep_splitting_prediction(0.5, 0.01) - 0.2).abs() < 1e-15);
        assert_eq!(ep_splitting_prediction(0.5, 0.0), 0.0);
        let exact = dimer_splitting(0.5, 0.01);
        assert!((exact - 2.0 * (0.01f64 + 1e-4).sqrt()).abs() < 1e-12);
        assert!((exact / 0.2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn lorentzian_peak() {
        let w = uniform_grid(-5.0, 5.0, 1001);
        let p: Vec<f64> = w.iter().map(|x| 1.0 + 10.0 / (1.0 + (x - 0.123).powi(2))).collect();
        let peaks = find_peaks(&w, &p);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].omega - 0.123).abs() < 0.001);
    }

    #[test]
    fn narrow_scan_rejected() {
        assert!(hoep_scaling_scan(1.0, &[1e-3, 1e-2]).is_err());
        assert!(hoep_scaling_scan(1.0, &[0.0, 1e-3, 1.0]).is_err());
    }
}

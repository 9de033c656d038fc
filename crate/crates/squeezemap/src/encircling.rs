//! Dynamical encircling of the dimer's exceptional point, realised on the
//! four-mode QMFS amplifier, and the entanglement it generates.
//!
//! The pseudo-modes are ẑ_j = â_j + b̂_j†. They commute with each other and
//! obey the classical equations i dẑ/dt = ℋ_ω(t) ẑ.

use nalgebra::DVector;

use crate::dynamics::{apply_symplectic, evolve_propagator, log_negativity, qmfs_symplectic, GaussianState};
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMat, RMat, C64};
use crate::models::build_detuned_dimer;
use crate::spectral::NonHermitianHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Cw,
    Ccw,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Ccw => 1.0,
            Direction::Cw => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Ccw => "ccw",
            Direction::Cw => "cw",
        }
    }
}

/// Circle g(t) = g₀ + ε cos φ(t), ω(t) = ε sin φ(t), φ(t) = φ₀ ± 2πt/T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncirclingPath {
    pub center_g: f64,
    pub radius: f64,
    pub duration: f64,
    pub direction: Direction,
    pub gamma: f64,
    pub phi0: f64,
}

impl EncirclingPath {
    pub fn new(center_g: f64, radius: f64, duration: f64, direction: Direction, gamma: f64) -> Result<Self> {
        if !(duration > 0.0) || !(radius >= 0.0) || !center_g.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidInput("path needs finite parameters, T > 0 and radius >= 0".into()));
        }
        Ok(Self { center_g, radius, duration, direction, gamma, phi0: 0.0 })
    }

    /// Loop centred on the EP g₀ = γ/2.
    pub fn around_ep(gamma: f64, radius: f64, duration: f64, direction: Direction) -> Result<Self> {
        Self::new(gamma / 2.0, radius, duration, direction, gamma)
    }

    pub fn with_phi0(mut self, phi0: f64) -> Self {
        self.phi0 = phi0;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.direction = match self.direction {
            Direction::Cw => Direction::Ccw,
            Direction::Ccw => Direction::Cw,
        };
        self
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.phi0 + self.direction.sign() * std::f64::consts::TAU * t / self.duration
    }

    /// (g, ω) at time t.
    pub fn path_at(&self, t: f64) -> (f64, f64) {
        let p = self.phase(t);
        (self.center_g + self.radius * p.cos(), self.radius * p.sin())
    }

    pub fn hamiltonian_at(&self, t: f64) -> CMat {
        let (g, w) = self.path_at(t);
        build_detuned_dimer(w, g, self.gamma).matrix().clone()
    }

    pub fn hamiltonian(&self) -> NonHermitianHamiltonian {
        let p = *self;
        NonHermitianHamiltonian::time_dependent(move |t| p.hamiltonian_at(t)).expect("finite path")
    }

    pub fn times(&self, n_steps: usize) -> Vec<f64> {
        (0..=n_steps).map(|k| self.duration * k as f64 / n_steps as f64).collect()
    }
}

pub fn path_at(path: &EncirclingPath, t: f64) -> (f64, f64) {
    path.path_at(t)
}

/// Instantaneous eigenpairs (λ, r) with λ² = (ω + iγ/2)² + g² and
/// r = (ρ, 1)/√(1 + ρ²), ρ = (ω + iγ/2 + λ)/g, so that rᵀr = 1.
pub fn instantaneous_pairs(g: f64, omega: f64, gamma: f64) -> [(C64, [C64; 2]); 2] {
    let w = c(omega, gamma / 2.0);
    let lam = (w * w + cr(g * g)).sqrt();
    let pair = |l: C64| {
        let rho = (w + l) / cr(g);
        let n = (cr(1.0) + rho * rho).sqrt();
        (l, [rho / n, cr(1.0) / n])
    };
    [pair(lam), pair(-lam)]
}

fn hnorm(v: &[C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn overlap(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn normalized_overlap(a: &[C64; 2], b: &[C64; 2]) -> f64 {
    overlap(a, b).norm() / (hnorm(a) * hnorm(b))
}

fn bilinear(r: &[C64; 2], z: &[C64]) -> C64 {
    r[0] * z[0] + r[1] * z[1]
}

#[derive(Debug, Clone)]
pub struct EigenframeTrace {
    pub times: Vec<f64>,
    pub lambda_plus: Vec<C64>,
    pub lambda_minus: Vec<C64>,
    pub r_plus: Vec<[C64; 2]>,
    pub r_minus: Vec<[C64; 2]>,
    pub c_plus: Vec<C64>,
    pub c_minus: Vec<C64>,
    /// Smallest normalised overlap between consecutive tracked vectors.
    pub min_overlap: f64,
}

impl EigenframeTrace {
    /// True when r₊(T) is closer to r₋(0) than to r₊(0).
    pub fn branches_swapped(&self) -> bool {
        let end = self.r_plus.last().expect("non-empty trace");
        normalized_overlap(end, &self.r_minus[0]) > normalized_overlap(end, &self.r_plus[0])
    }

    pub fn final_amplitudes(&self) -> (C64, C64) {
        (*self.c_plus.last().expect("amplitudes"), *self.c_minus.last().expect("amplitudes"))
    }
}

const TRACKING_CONFIDENCE: f64 = 0.9;

/// Branch-tracked instantaneous eigenframe on a uniform grid of n_steps
/// intervals. Labels at t = 0 follow the principal square root.
pub fn eigenframe_trace(path: &EncirclingPath, n_steps: usize) -> Result<EigenframeTrace> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be positive".into()));
    }
    let times = path.times(n_steps);
    let gscale = path.gamma.abs().max(path.center_g.abs()).max(1e-300);
    let mut tr = EigenframeTrace {
        times: times.clone(),
        lambda_plus: Vec::with_capacity(times.len()),
        lambda_minus: Vec::with_capacity(times.len()),
        r_plus: Vec::with_capacity(times.len()),
        r_minus: Vec::with_capacity(times.len()),
        c_plus: Vec::new(),
        c_minus: Vec::new(),
        min_overlap: 1.0,
    };
    for &t in &times {
        let (g, w) = path.path_at(t);
        let [(lp, rp), (lm, rm)] = instantaneous_pairs(g, w, path.gamma);
        if (lp - lm).norm() <= 1e-10 * gscale || !(rp[0].is_finite() && rm[0].is_finite()) {
            return Err(Error::BranchCrossing { t, overlap: 0.0 });
        }
        let (mut lp, mut rp, mut lm, mut rm) = (lp, rp, lm, rm);
        if let (Some(pp), Some(pm)) = (tr.r_plus.last(), tr.r_minus.last()) {
            let keep = normalized_overlap(pp, &rp) + normalized_overlap(pm, &rm);
            let swap = normalized_overlap(pp, &rm) + normalized_overlap(pm, &rp);
            if swap > keep {
                std::mem::swap(&mut lp, &mut lm);
                std::mem::swap(&mut rp, &mut rm);
            }
            for (prev, v) in [(pp, &mut rp), (pm, &mut rm)] {
                if overlap(prev, v).re < 0.0 {
                    v[0] = -v[0];
                    v[1] = -v[1];
                }
            }
            let conf = normalized_overlap(pp, &rp).min(normalized_overlap(pm, &rm));
            tr.min_overlap = tr.min_overlap.min(conf);
            if conf < TRACKING_CONFIDENCE {
                return Err(Error::BranchCrossing { t, overlap: conf });
            }
        }
        tr.lambda_plus.push(lp);
        tr.lambda_minus.push(lm);
        tr.r_plus.push(rp);
        tr.r_minus.push(rm);
    }
    Ok(tr)
}

/// Pseudo-mode means ⟨ẑ_j⟩ = ⟨â_j⟩ + ⟨b̂_j⟩* for modes ordered (a₁..a_N, b₁..b_N).
pub fn pseudo_mode_means(state: &GaussianState) -> Vec<C64> {
    let m = state.mode_means();
    let n = m.len() / 2;
    (0..n).map(|j| m[j] + m[n + j].conj()).collect()
}

/// State with ⟨â⟩ = z, ⟨b̂⟩ = 0 and vacuum fluctuations, so ⟨ẑ⟩ = z.
pub fn coherent_pseudo_state(z: &[C64]) -> GaussianState {
    let mut alpha = z.to_vec();
    alpha.extend(std::iter::repeat(cr(0.0)).take(z.len()));
    GaussianState::coherent(&alpha)
}

/// Coherent state with ⟨c₊(0)⟩ = 1, ⟨c₋(0)⟩ = 0 on the path's start frame.
pub fn initial_branch_state(path: &EncirclingPath) -> GaussianState {
    let (g, w) = path.path_at(0.0);
    let [(_, rp), _] = instantaneous_pairs(g, w, path.gamma);
    coherent_pseudo_state(&rp)
}

/// Pure zero-mean state whose QMFS quadratures have variance e^{2λ₀}/2
/// along ξ (direction r₊(0)) and e^{−2λ₀}/2 along ξ⊥ (direction r₋(0)*),
/// completed over the conjugate quadratures by the inverse covariance.
pub fn build_asymmetric_state(lambda0: f64, r_plus: &[C64; 2], r_minus: &[C64; 2]) -> Result<GaussianState> {
    if !(lambda0 >= 0.0) || !lambda0.is_finite() {
        return Err(Error::InvalidInput("lambda0 must be finite and non-negative".into()));
    }
    let e1 = [r_plus[0] / cr(hnorm(r_plus)), r_plus[1] / cr(hnorm(r_plus))];
    let e2 = [r_minus[0].conj() / cr(hnorm(r_minus)), r_minus[1].conj() / cr(hnorm(r_minus))];
    let ov = overlap(&e1, &e2).norm();
    if ov > 1e-10 {
        return Err(Error::Precondition(format!("frame is not orthogonal (overlap {ov:.3e})")));
    }
    // columns: ξ real, ξ imaginary, ξ⊥ real, ξ⊥ imaginary, in (x₊₁, x₊₂, p₋₁, p₋₂)
    let mut r = RMat::zeros(4, 4);
    for (k, (v, ph)) in [(e1, cr(1.0)), (e1, linalg::I), (e2, cr(1.0)), (e2, linalg::I)].into_iter().enumerate() {
        for j in 0..2 {
            let z = ph * v[j];
            r[(j, k)] = z.re;
            r[(2 + j, k)] = z.im;
        }
    }
    let s = (2.0 * lambda0).exp();
    let d = RMat::from_diagonal(&DVector::from_vec(vec![s, s, 1.0 / s, 1.0 / s])) * 0.5;
    let sq = &r * d * r.transpose();
    let sc = sq.clone().try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })? * 0.25;
    let mut cfull = RMat::zeros(8, 8);
    cfull.view_mut((0, 0), (4, 4)).copy_from(&sq);
    cfull.view_mut((4, 4), (4, 4)).copy_from(&sc);
    // rows (x₊, p₋, p₊, −x₋) in terms of (x_a, x_b, p_a, p_b)
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = RMat::zeros(8, 8);
    for j in 0..2 {
        k[(j, j)] = h;
        k[(j, 2 + j)] = h;
        k[(2 + j, 4 + j)] = h;
        k[(2 + j, 6 + j)] = -h;
        k[(4 + j, 4 + j)] = h;
        k[(4 + j, 6 + j)] = h;
        k[(6 + j, j)] = -h;
        k[(6 + j, 2 + j)] = h;
    }
    let cov = k.transpose() * cfull * &k;
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianState::new(DVector::zeros(8), cov)
}

/// ⟨ẑ_j† ẑ_k⟩ including the mean contribution.
pub fn pseudo_mode_moments(state: &GaussianState) -> CMat {
    let m = state.n_modes();
    let n = m / 2;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // x₊_j = (x_aj + x_bj)/√2, p₋_j = (p_aj − p_bj)/√2
    let mut t = RMat::zeros(2 * n, 2 * m);
    for j in 0..n {
        t[(j, j)] = h;
        t[(j, n + j)] = h;
        t[(n + j, m + j)] = h;
        t[(n + j, m + n + j)] = -h;
    }
    let cov = &t * &state.cov * t.transpose();
    let mean = &t * &state.mean;
    CMat::from_fn(n, n, |j, k| {
        let xx = cov[(j, k)] + mean[j] * mean[k];
        let pp = cov[(n + j, n + k)] + mean[n + j] * mean[n + k];
        let xp = cov[(j, n + k)] + mean[j] * mean[n + k];
        let px = cov[(n + j, k)] + mean[n + j] * mean[k];
        c(xx + pp, xp - px)
    })
}

/// ⟨c†c⟩ for c = rᵀẑ.
pub fn branch_population(state: &GaussianState, r: &[C64; 2]) -> f64 {
    let mm = pseudo_mode_moments(state);
    let mut s = cr(0.0);
    for j in 0..2 {
        for k in 0..2 {
            s += r[j].conj() * r[k] * mm[(j, k)];
        }
    }
    s.re
}

#[derive(Debug, Clone)]
pub struct EncirclingRun {
    pub path: EncirclingPath,
    pub trace: EigenframeTrace,
    pub states: Vec<GaussianState>,
    pub propagators: Vec<CMat>,
    pub entanglement: Vec<f64>,
    pub max_symplectic_residual: f64,
}

impl EncirclingRun {
    pub fn final_state(&self) -> &GaussianState {
        self.states.last().expect("non-empty run")
    }
}

/// Evolves a four-mode Gaussian state around the loop and records the
/// branch amplitudes ⟨c±(t)⟩ = r±(t)ᵀ⟨ẑ(t)⟩ and E_N between the a and b modes.
pub fn run_encircling(path: &EncirclingPath, initial: &GaussianState, n_steps: usize, rtol: f64) -> Result<EncirclingRun> {
    if initial.n_modes() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: initial.n_modes() });
    }
    let mut trace = eigenframe_trace(path, n_steps)?;
    let series = evolve_propagator(&path.hamiltonian(), &trace.times, rtol)?;
    let mut states = Vec::with_capacity(series.times.len());
    let mut entanglement = Vec::with_capacity(series.times.len());
    let mut worst = 0.0f64;
    for (k, u) in series.propagators.iter().enumerate() {
        let s = qmfs_symplectic(u)?;
        worst = worst.max(s.symplectic_residual());
        let st = apply_symplectic(initial, &s)?;
        entanglement.push(log_negativity(&st, &[0, 1])?);
        let z = pseudo_mode_means(&st);
        trace.c_plus.push(bilinear(&trace.r_plus[k], &z));
        trace.c_minus.push(bilinear(&trace.r_minus[k], &z));
        states.push(st);
    }
    Ok(EncirclingRun {
        path: *path,
        trace,
        states,
        propagators: series.propagators,
        entanglement,
        max_symplectic_residual: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralityMetric {
    /// max_t |E_N^CW(t) − E_N^CCW(t)| in ebits.
    pub entanglement_gap: f64,
    /// ln(|c₊/c₋|_CCW · |c₋/c₊|_CW) at the final time; NaN for zero-mean states.
    pub amplitude_log_ratio: f64,
}

pub fn chirality_metric(run_cw: &EncirclingRun, run_ccw: &EncirclingRun) -> ChiralityMetric {
    let entanglement_gap = run_cw
        .entanglement
        .iter()
        .zip(&run_ccw.entanglement)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (cp_ccw, cm_ccw) = run_ccw.trace.final_amplitudes();
    let (cp_cw, cm_cw) = run_cw.trace.final_amplitudes();
    let amplitude_log_ratio = (cp_ccw.norm() / cm_ccw.norm()).ln() + (cm_cw.norm() / cp_cw.norm()).ln();
    ChiralityMetric { entanglement_gap, amplitude_log_ratio }
}

/// cosh λ_s = ½√(tr U†U + 2) for a chiral-symmetric two-mode propagator.
pub fn squeezing_from_trace(u: &CMat) -> f64 {
    let tr = (u.adjoint() * u).trace().re;
    (0.5 * (tr + 2.0).sqrt()).max(1.0).acosh()
}

//! Propagators of i dU/dt = H(t) U, the symplectic maps they induce on the
//! doubled QMFS system, Bloch-Messiah factors and Gaussian states.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, block2, c, cr, frob, CMat, RMat, C64, I};
use crate::spectral::NonHermitianHamiltonian;

/// Propagator norm beyond which integration is abandoned.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct PropagatorSeries {
    pub times: Vec<f64>,
    pub propagators: Vec<CMat>,
    pub tolerance: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl PropagatorSeries {
    pub fn last(&self) -> &CMat {
        self.propagators.last().expect("non-empty series")
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Integrates i dU/dt = H(t) U from U(0) = I with an embedded 5(4)
/// Runge-Kutta pair and PI step control. Steps are clipped so every grid
/// time is hit exactly.
pub fn evolve_propagator(h: &NonHermitianHamiltonian, t_grid: &[f64], rtol: f64) -> Result<PropagatorSeries> {
    if !(rtol > 0.0) {
        return Err(Error::InvalidInput("rtol must be positive".into()));
    }
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(Error::InvalidInput("time grid must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
    }
    let n = h.dim();
    let rhs = |t: f64, u: &CMat| -> CMat { (h.at(t) * u) * c(0.0, -1.0) };
    let mut u = linalg::identity(n);
    let mut t = 0.0;
    let mut out = PropagatorSeries {
        times: vec![0.0],
        propagators: vec![u.clone()],
        tolerance: rtol,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let t_end = *t_grid.last().unwrap();
    let hnorm = frob(&h.at(0.0)).max(1e-12);
    let mut step = (0.01 / hnorm).min(t_end.max(1e-12));
    let mut err_prev: f64 = 1.0;
    let mut k1 = rhs(t, &u);
    for &target in &t_grid[1..] {
        while t < target {
            let last = target - t <= step * (1.0 + 1e-12);
            let hstep = if last { target - t } else { step };
            if hstep < 1e-14 * t_end.max(1.0) {
                return Err(Error::StepFailure { t, reason: "step size underflow".into() });
            }
            let mut k: Vec<CMat> = Vec::with_capacity(7);
            k.push(k1.clone());
            for s in 1..7 {
                let mut y = u.clone();
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        y += kj * cr(hstep * A[s][j]);
                    }
                }
                k.push(rhs(t + C[s] * hstep, &y));
            }
            let mut unew = u.clone();
            for j in 0..6 {
                if A[6][j] != 0.0 {
                    unew += &k[j] * cr(hstep * A[6][j]);
                }
            }
            let mut errm = linalg::zeros(n, n);
            for j in 0..7 {
                if E[j] != 0.0 {
                    errm += &k[j] * cr(hstep * E[j]);
                }
            }
            let scale = rtol * max_abs(&u).max(max_abs(&unew));
            let err = max_abs(&errm) / scale;
            if !err.is_finite() {
                return Err(Error::StepFailure { t, reason: "non-finite step".into() });
            }
            if err <= 1.0 {
                t = if last { target } else { t + hstep };
                u = unew;
                k1 = k.swap_remove(6);
                out.accepted_steps += 1;
                if max_abs(&u) > OVERFLOW_GUARD {
                    return Err(Error::StepFailure { t, reason: "propagator norm exceeded the overflow guard".into() });
                }
                let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0) };
                err_prev = err.max(1e-4);
                let grown = hstep * fac.clamp(0.2, 5.0);
                // a clipped final step says nothing about the natural step size
                step = if last { step.max(grown) } else { grown };
            } else {
                out.rejected_steps += 1;
                step = hstep * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        out.times.push(target);
        out.propagators.push(u.clone());
    }
    Ok(out)
}

/// Mode-operator symplectic map c → A c + B c† on M modes.
#[derive(Debug, Clone)]
pub struct SymplecticTransform {
    pub a_block: CMat,
    pub b_block: CMat,
    /// The N×N non-Hermitian propagator this transform was built from.
    pub propagator: Option<CMat>,
}

impl SymplecticTransform {
    pub fn identity(m: usize) -> Self {
        Self { a_block: linalg::identity(m), b_block: linalg::zeros(m, m), propagator: None }
    }

    pub fn n_modes(&self) -> usize {
        self.a_block.nrows()
    }

    /// Real 2M×2M matrix acting on (x₁..x_M, p₁..p_M).
    pub fn real_matrix(&self) -> RMat {
        let s = &self.a_block + &self.b_block;
        let d = &self.a_block - &self.b_block;
        let m = self.n_modes();
        let mut r = RMat::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                r[(i, j)] = s[(i, j)].re;
                r[(i, m + j)] = -d[(i, j)].im;
                r[(m + i, j)] = s[(i, j)].im;
                r[(m + i, m + j)] = d[(i, j)].re;
            }
        }
        r
    }

    /// max(‖AA† − BB† − I‖, ‖ABᵀ − BAᵀ‖), Frobenius.
    pub fn symplectic_residual(&self) -> f64 {
        let a = &self.a_block;
        let b = &self.b_block;
        let r1 = a * a.adjoint() - b * b.adjoint() - linalg::identity(self.n_modes());
        let r2 = a * b.transpose() - b * a.transpose();
        frob(&r1).max(frob(&r2))
    }
}

/// Symplectic map of the 2N-mode QMFS system (a₁..a_N, b₁..b_N) generated
/// by the pseudo-mode propagator U:
/// A = ½ diag(U + U†⁻¹, U* + Uᵀ⁻¹), B = ½ [[0, U − U†⁻¹], [U* − Uᵀ⁻¹, 0]].
pub fn qmfs_symplectic(u: &CMat) -> Result<SymplecticTransform> {
    let n = u.nrows();
    if !u.is_square() {
        return Err(Error::InvalidInput("propagator must be square".into()));
    }
    let cond = linalg::condition_number(u);
    if !(cond <= 1e10) {
        return Err(Error::IllConditioned { condition: cond });
    }
    let v = u.adjoint().try_inverse().ok_or(Error::IllConditioned { condition: cond })?;
    let p = (u + &v) * cr(0.5);
    let q = (u - &v) * cr(0.5);
    let z = linalg::zeros(n, n);
    Ok(SymplecticTransform {
        a_block: linalg::block_diag(&p, &p.conjugate()),
        b_block: block2(&z, &q, &q.conjugate(), &z),
        propagator: Some(u.clone()),
    })
}

#[derive(Debug, Clone)]
pub struct BlochMessiahFactors {
    pub u_bm: CMat,
    pub v_bm: CMat,
    pub d_a: Vec<f64>,
    pub d_b: Vec<f64>,
    pub squeeze_params: Vec<f64>,
    /// Set when some singular value of U is within 1e-10 of 1, where the
    /// squeezing axis is undefined and the +1 branch is taken.
    pub degenerate: bool,
}

impl BlochMessiahFactors {
    fn diag(v: &[f64]) -> CMat {
        CMat::from_fn(v.len(), v.len(), |i, j| if i == j { cr(v[i]) } else { cr(0.0) })
    }

    pub fn a_reconstructed(&self) -> CMat {
        &self.u_bm * Self::diag(&self.d_a) * self.v_bm.adjoint()
    }

    pub fn b_reconstructed(&self) -> CMat {
        &self.u_bm * Self::diag(&self.d_b) * self.v_bm.transpose()
    }

    pub fn reconstruction_residual(&self, s: &SymplecticTransform) -> f64 {
        let ra = frob(&(self.a_reconstructed() - &s.a_block));
        let rb = frob(&(self.b_reconstructed() - &s.b_block));
        ra.max(rb) / frob(&s.a_block).max(1.0)
    }

    /// max |d_a² − d_b² − 1|.
    pub fn constraint_residual(&self) -> f64 {
        self.d_a
            .iter()
            .zip(&self.d_b)
            .map(|(a, b)| (a * a - b * b - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Bloch-Messiah factors A = U_BM D_A V_BM†, B = U_BM D_B V_BMᵀ of a QMFS
/// transform, from the SVD U = W₁ D W₂† of its propagator.
pub fn bloch_messiah(s: &SymplecticTransform) -> Result<BlochMessiahFactors> {
    let u = s
        .propagator
        .as_ref()
        .ok_or_else(|| Error::Precondition("transform carries no QMFS propagator".into()))?;
    let n = u.nrows();
    let d = linalg::svd(u);
    let w1 = d.u;
    let w2h = d.v_t;
    let mut degenerate = false;
    let wu: Vec<C64> = d
        .s
        .iter()
        .map(|&x| {
            let gap = x - 1.0 / x;
            if gap.abs() < 1e-10 {
                degenerate = true;
                cr(1.0)
            } else if gap > 0.0 {
                cr(1.0)
            } else {
                I
            }
        })
        .collect();
    let wu_m = CMat::from_fn(n, n, |i, j| if i == j { wu[i] } else { cr(0.0) });
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let id = linalg::identity(n) * cr(h);
    let rot_u = block2(&id, &(-id.clone()), &id, &id);
    let rot_v = block2(&id, &id, &(-id.clone()), &id);
    let phase = linalg::block_diag(&linalg::identity(n), &(linalg::identity(n) * I));
    let u_bm = linalg::block_diag(&w1, &w1.conjugate()) * rot_u * linalg::block_diag(&wu_m, &wu_m.conjugate()) * &phase;
    let v_bm_h = linalg::block_diag(&wu_m.conjugate(), &wu_m) * rot_v * linalg::block_diag(&w2h, &w2h.conjugate());
    let v_bm = v_bm_h.adjoint() * &phase;
    let mut d_a = Vec::with_capacity(2 * n);
    let mut d_b = Vec::with_capacity(2 * n);
    for _ in 0..2 {
        for &x in &d.s {
            d_a.push((x + 1.0 / x) / 2.0);
            d_b.push((1.0 / x - x).abs() / 2.0);
        }
    }
    let squeeze_params = d_a.iter().map(|&a| a.max(1.0).acosh()).collect();
    Ok(BlochMessiahFactors { u_bm, v_bm, d_a, d_b, squeeze_params, degenerate })
}

/// Zero-or-displaced Gaussian state on M modes, quadratures ordered
/// (x₁..x_M, p₁..p_M), covariance σ_jk = ⟨{Δr_j, Δr_k}⟩/2 so vacuum is I/2.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: RMat,
}

pub fn symplectic_form(m: usize) -> RMat {
    let mut o = RMat::zeros(2 * m, 2 * m);
    for k in 0..m {
        o[(k, m + k)] = 1.0;
        o[(m + k, k)] = -1.0;
    }
    o
}

impl GaussianState {
    pub fn vacuum(m: usize) -> Self {
        Self { mean: DVector::zeros(2 * m), cov: RMat::identity(2 * m, 2 * m) * 0.5 }
    }

    /// Coherent state with ⟨c_k⟩ = alpha_k.
    pub fn coherent(alpha: &[C64]) -> Self {
        let m = alpha.len();
        let mut s = Self::vacuum(m);
        for (k, a) in alpha.iter().enumerate() {
            s.mean[k] = std::f64::consts::SQRT_2 * a.re;
            s.mean[m + k] = std::f64::consts::SQRT_2 * a.im;
        }
        s
    }

    pub fn new(mean: DVector<f64>, cov: RMat) -> Result<Self> {
        let d = mean.len();
        if d % 2 != 0 || cov.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, found: cov.nrows() });
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::InvalidInput("covariance must be symmetric".into()));
        }
        let s = Self { mean, cov };
        s.check_physical(1e-9)?;
        Ok(s)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    /// Smallest eigenvalue of σ + iΩ/2, relative to ‖σ‖.
    pub fn uncertainty_margin(&self) -> f64 {
        let m = self.n_modes();
        let o = symplectic_form(m);
        let h = CMat::from_fn(2 * m, 2 * m, |i, j| c(self.cov[(i, j)], 0.5 * o[(i, j)]));
        let (vals, _) = linalg::hermitian_eig(&h);
        vals[0] / self.cov.norm().max(1.0)
    }

    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let min_eig = self.uncertainty_margin();
        if min_eig < -tol {
            return Err(Error::UnphysicalState { min_eig });
        }
        Ok(())
    }

    /// ⟨c_k†c_k⟩ for every mode.
    pub fn photon_numbers(&self) -> Vec<f64> {
        let m = self.n_modes();
        (0..m)
            .map(|k| {
                let var = self.cov[(k, k)] + self.cov[(m + k, m + k)];
                let mean = self.mean[k].powi(2) + self.mean[m + k].powi(2);
                (var + mean - 1.0) / 2.0
            })
            .collect()
    }

    /// ⟨c_k⟩.
    pub fn mode_means(&self) -> Vec<C64> {
        let m = self.n_modes();
        (0..m)
            .map(|k| c(self.mean[k], self.mean[m + k]) / cr(std::f64::consts::SQRT_2))
            .collect()
    }

    /// det(2σ), equal to 1 for pure states.
    pub fn purity_det(&self) -> f64 {
        (&self.cov * 2.0).determinant()
    }
}

pub fn apply_symplectic(state: &GaussianState, s: &SymplecticTransform) -> Result<GaussianState> {
    if state.n_modes() != s.n_modes() {
        return Err(Error::DimensionMismatch { expected: s.n_modes(), found: state.n_modes() });
    }
    let r = s.real_matrix();
    let cov = &r * &state.cov * r.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState { mean: &r * &state.mean, cov })
}

/// Symplectic eigenvalues of a positive-definite covariance, ascending.
pub fn symplectic_eigenvalues(cov: &RMat) -> Vec<f64> {
    let m = cov.nrows() / 2;
    let o = symplectic_form(m);
    let k = linalg::from_real(&(&o * cov)) * I;
    let mut v: Vec<f64> = linalg::eigenvalues(&k).iter().map(|z| z.norm()).collect();
    v.sort_by(f64::total_cmp);
    v.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Logarithmic negativity in ebits (log base 2) between `partition` and the
/// remaining modes.
pub fn log_negativity(state: &GaussianState, partition: &[usize]) -> Result<f64> {
    let m = state.n_modes();
    if partition.is_empty() || partition.len() >= m || partition.iter().any(|&k| k >= m) {
        return Err(Error::InvalidInput("partition must be a nonempty proper subset of modes".into()));
    }
    state.check_physical(1e-8)?;
    let mut flip = vec![1.0; 2 * m];
    for &k in partition {
        flip[m + k] = -1.0;
    }
    let pt = RMat::from_fn(2 * m, 2 * m, |i, j| flip[i] * flip[j] * state.cov[(i, j)]);
    Ok(symplectic_eigenvalues(&pt)
        .into_iter()
        .map(|nu| (-(2.0 * nu).log2()).max(0.0))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_transform_of_identity_propagator() {
        let s = qmfs_symplectic(&linalg::identity(2)).unwrap();
        assert!(frob(&(s.a_block - linalg::identity(4))) < 1e-15);
        assert!(frob(&s.b_block) < 1e-15);
    }

    #[test]
    fn unitary_propagator_has_no_squeezing() {
        let u = linalg::from_rows(&[&[c(0.6, 0.0), c(0.0, 0.8)], &[c(0.0, 0.8), c(0.6, 0.0)]]);
        let s = qmfs_symplectic(&u).unwrap();
        assert!(frob(&s.b_block) < 1e-14);
        let bm = bloch_messiah(&s).unwrap();
        assert!(bm.squeeze_params.iter().all(|&x| x < 1e-7));
        assert!(bm.d_b.iter().all(|&x| x < 1e-14));
    }

    #[test]
    fn diagonal_squeeze_singular_values() {
        let r: f64 = 0.7;
        let u = linalg::from_rows(&[&[cr(r.exp()), cr(0.0)], &[cr(0.0), cr((-r).exp())]]);
        let s = qmfs_symplectic(&u).unwrap();
        let sv = linalg::singular_values(&s.b_block);
        assert!(sv.iter().all(|&x| (x - r.sinh()).abs() < 1e-12));
        let bm = bloch_messiah(&s).unwrap();
        assert!(bm.reconstruction_residual(&s) < 1e-12);
    }

    #[test]
    fn ill_conditioned_propagator_rejected() {
        let u = linalg::from_rows(&[&[cr(1e6), cr(0.0)], &[cr(0.0), cr(1e-6)]]);
        assert!(matches!(qmfs_symplectic(&u), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn vacuum_has_no_negativity() {
        assert_eq!(log_negativity(&GaussianState::vacuum(2), &[0]).unwrap(), 0.0);
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let s = GaussianState { mean: DVector::zeros(2), cov: RMat::identity(2, 2) * 0.1 };
        assert!(matches!(s.check_physical(1e-9), Err(Error::UnphysicalState { .. })));
    }

    #[test]
    fn constant_hamiltonian_matches_exponential() {
        let m = linalg::from_rows(&[&[c(0.3, 0.2), cr(0.5)], &[cr(0.5), c(-0.1, -0.4)]]);
        let h = NonHermitianHamiltonian::new(m.clone()).unwrap();
        let rtol = 1e-10;
        let series = evolve_propagator(&h, &[0.0, 1.0, 2.5], rtol).unwrap();
        let want = (m * c(0.0, -2.5)).exp();
        assert!(frob(&(series.last() - &want)) < 10.0 * rtol * frob(&want));
    }
}

//! Unitary maps from non-Hermitian Hamiltonians to Hermitian bosonic
//! dynamical matrices, the canonical PT form, and the existence tests for
//! equal-mode-count mappings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, block2, c, cr, frob, CMat, RMat, C64, I};
use crate::models::{build_pt_chain, BosonicQuadraticHamiltonian, PtChainSpec};
use crate::spectral::{pt_residual, NonHermitianHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    /// Two-level H onto one degenerate parametric amplifier mode.
    DpaHalf,
    /// 2N-mode PT chain onto a 2N-mode non-degenerate amplifier.
    NdpaSameCount,
    /// Arbitrary N-mode H onto a 2N-mode QMFS amplifier.
    QmfsDoubled,
}

#[derive(Debug, Clone)]
pub struct MappingCertificate {
    pub source: NonHermitianHamiltonian,
    pub target: BosonicQuadraticHamiltonian,
    pub unitary: CMat,
    pub residual: f64,
    pub kind: MappingKind,
    /// Multiple of the identity removed from the source before mapping.
    pub trace_shift: C64,
}

fn pauli() -> [CMat; 3] {
    let z = cr(0.0);
    let o = cr(1.0);
    [
        linalg::from_rows(&[&[z, o], &[o, z]]),
        linalg::from_rows(&[&[z, c(0.0, -1.0)], &[c(0.0, 1.0), z]]),
        linalg::from_rows(&[&[o, z], &[z, -o]]),
    ]
}

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Some unit vector orthogonal to `a`.
fn perpendicular(a: [f64; 3]) -> [f64; 3] {
    let trial = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    unit(cross(a, trial)).expect("nonzero cross product")
}

/// SU(2) element whose adjoint action is the rotation `o`:
/// U σ_k U† = Σ_j o[j][k] σ_j.
fn su2_from_rotation(o: [[f64; 3]; 3]) -> CMat {
    let s = pauli();
    let r: Vec<CMat> = (0..3)
        .map(|k| (0..3).fold(linalg::zeros(2, 2), |acc, j| acc + &s[j] * cr(o[j][k])))
        .collect();
    let basis = [linalg::identity(2), s[0].clone(), s[1].clone(), s[2].clone()];
    let best = basis
        .iter()
        .map(|x| (0..3).fold(x.clone(), |acc, k| acc + &r[k] * x * &s[k]))
        .max_by(|a, b| frob(a).total_cmp(&frob(b)))
        .expect("four candidates");
    let n = frob(&best) / std::f64::consts::SQRT_2;
    best / cr(n)
}

/// Maps a two-level H = h₀ + (c + i d)·σ with c ⟂ d onto the DPA with
/// δ = |c|, ν = |d|.
pub fn dpa_map(h: &NonHermitianHamiltonian, tol: f64) -> Result<MappingCertificate> {
    let m = h.matrix();
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 2, found: m.nrows() });
    }
    let h0 = (m[(0, 0)] + m[(1, 1)]) / cr(2.0);
    let s = pauli();
    let z: Vec<C64> = s.iter().map(|p| (p * m).trace() / cr(2.0)).collect();
    let cv = [z[0].re, z[1].re, z[2].re];
    let dv = [z[0].im, z[1].im, z[2].im];
    let cn = dot(cv, cv).sqrt();
    let dn = dot(dv, dv).sqrt();
    let cd = dot(cv, dv);
    if cd.abs() > tol * cn * dn {
        return Err(Error::NotPtEquivalent { dot: cd });
    }
    let (ch, dh) = match (unit(cv), unit(dv)) {
        (Some(ch), Some(dh)) => (ch, unit(cross(cross(ch, dh), ch)).unwrap_or(perpendicular(ch))),
        (Some(ch), None) => (ch, perpendicular(ch)),
        (None, Some(dh)) => (perpendicular(dh), dh),
        (None, None) => ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
    };
    let mid = cross(ch, dh);
    let o = [dh, mid, ch];
    // the adjoint action sends n·σ to (O n)·σ, so the rotation matrix is O
    let rot = [[o[0][0], o[0][1], o[0][2]], [o[1][0], o[1][1], o[1][2]], [o[2][0], o[2][1], o[2][2]]];
    let u = su2_from_rotation(rot);
    let target = crate::models::build_dpa(cn, dn)?;
    let shifted = m - linalg::identity(2) * h0;
    let residual = frob(&(&u * shifted * u.adjoint() - target.dynamical_matrix())) / frob(m).max(f64::MIN_POSITIVE);
    Ok(MappingCertificate {
        source: h.clone(),
        target,
        unitary: u,
        residual,
        kind: MappingKind::DpaHalf,
        trace_shift: h0,
    })
}

/// H₂ = [[Σ̃ + iΓ_N, J̃], [J̃*, Σ̃* − iΓ_N]] with transform·H·transform† = H₂.
#[derive(Debug, Clone)]
pub struct CanonicalPtForm {
    pub sigma_tilde: CMat,
    pub j_tilde: CMat,
    /// Diagonal of Γ_N, nonincreasing.
    pub gamma_n: Vec<f64>,
    pub transform: CMat,
}

impl CanonicalPtForm {
    pub fn n(&self) -> usize {
        self.gamma_n.len()
    }

    pub fn gamma_matrix(&self) -> CMat {
        let n = self.n();
        CMat::from_fn(n, n, |i, j| if i == j { cr(self.gamma_n[i]) } else { cr(0.0) })
    }

    pub fn matrix(&self) -> CMat {
        let g = self.gamma_matrix() * I;
        block2(
            &(&self.sigma_tilde + &g),
            &self.j_tilde,
            &self.j_tilde.conjugate(),
            &(self.sigma_tilde.conjugate() - &g),
        )
    }
}

/// Groups of indices whose values agree within `tol` (input sorted).
fn degenerate_groups(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (vals[*g.last().unwrap()] - v).abs() <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    groups
}

/// Deterministic orthonormal basis of the column span of `b` built by
/// projecting unit vectors in order.
fn canonical_basis(b: &CMat) -> CMat {
    let (n, m) = b.shape();
    let proj = b * b.adjoint();
    let mut out: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(m);
    for k in 0..n {
        if out.len() == m {
            break;
        }
        let mut v: nalgebra::DVector<C64> = proj.column(k).into_owned();
        for q in &out {
            let ov = q.dotc(&v);
            v -= q * ov;
        }
        let nv = v.norm();
        if nv > 1e-3 {
            out.push(v / cr(nv));
        }
    }
    CMat::from_columns(&out)
}

/// Reduces a PT-symmetric H (parity σ_{N,x}) to canonical form.
pub fn canonical_pt_form(h: &NonHermitianHamiltonian, tol: f64) -> Result<CanonicalPtForm> {
    let m = h.matrix();
    let dim = m.nrows();
    if dim % 2 != 0 {
        return Err(Error::InvalidInput("PT Hamiltonian must have even dimension".into()));
    }
    let n = dim / 2;
    let scale = frob(m).max(f64::MIN_POSITIVE);
    let res = pt_residual(m, &linalg::sigma_nx(n));
    if res > tol * scale {
        return Err(Error::NotPtSymmetric { residual: res });
    }
    let gamma_pt = (m - m.adjoint()) / c(0.0, 2.0);
    let (vals, vecs) = linalg::hermitian_eig(&gamma_pt);
    let smallest = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if smallest < tol * scale {
        return Err(Error::RankDeficientGainLoss { smallest });
    }
    // positive half, descending
    let pos: Vec<usize> = (n..dim).rev().collect();
    let gamma_n: Vec<f64> = pos.iter().map(|&k| vals[k]).collect();
    let groups = degenerate_groups(&gamma_n, 1e-8 * gamma_n[0].abs().max(f64::MIN_POSITIVE));
    let mut p = linalg::zeros(dim, n);
    for g in &groups {
        let b = CMat::from_fn(dim, g.len(), |i, j| vecs[(i, pos[g[j]])]);
        let basis = canonical_basis(&b);
        for (j, &col) in g.iter().enumerate() {
            let mut v = basis.column(j).into_owned();
            linalg::gauge_fix(&mut v);
            p.set_column(col, &v);
        }
    }
    let q = linalg::sigma_nx(n) * p.conjugate();
    let u_gamma = CMat::from_fn(dim, dim, |i, j| if i < n { p[(j, i)].conj() } else { q[(j, i - n)].conj() });
    let ut = &u_gamma * linalg::sigma_nx(n) * u_gamma.transpose();
    let u12 = linalg::sub(&ut, 0, n, n, n);
    let right = linalg::block_diag(&linalg::identity(n), &u12.conjugate());
    let transform = right * u_gamma;
    let h2 = &transform * m * transform.adjoint();
    let herm = linalg::hermitian_part(&h2);
    let sigma_tilde = linalg::sub(&herm, 0, 0, n, n);
    let j_tilde = linalg::sub(&herm, 0, n, n, n);
    Ok(CanonicalPtForm { sigma_tilde, j_tilde, gamma_n, transform })
}

/// Maps a PT chain with real symmetric Ω, Γ, J onto the NDPA
/// μ_a = Ω + J, μ_b = J − Ω, ν = iΓ via U_tb = (1/√2)[[I, I], [I, −I]].
pub fn pt_chain_to_ndpa(spec: &PtChainSpec) -> Result<MappingCertificate> {
    let mut problems = Vec::new();
    for (name, m) in [("Omega", &spec.omega), ("Gamma", &spec.gamma), ("J", &spec.j)] {
        if (m - m.transpose()).amax() > 1e-12 {
            problems.push(format!("{name} is not symmetric"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            problems.push(format!("{name} is not finite"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::ConditionsViolated(problems));
    }
    let source = build_pt_chain(spec);
    chain_certificate(source, &spec.omega, &spec.gamma, &spec.j)
}

/// As [`pt_chain_to_ndpa`] for complex coefficient blocks, which are
/// rejected unless real.
pub fn pt_blocks_to_ndpa(omega: &CMat, gamma: &CMat, j: &CMat) -> Result<MappingCertificate> {
    let mut problems = Vec::new();
    for (name, m) in [("Omega", omega), ("Gamma", gamma), ("J", j)] {
        if m.iter().any(|z| z.im.abs() > 1e-12) {
            problems.push(format!("{name} is not real"));
        }
        if (m - m.transpose()).iter().any(|z| z.norm() > 1e-12) {
            problems.push(format!("{name} is not symmetric"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::ConditionsViolated(problems));
    }
    let re = |m: &CMat| m.map(|z| z.re);
    let spec = PtChainSpec::from_blocks(re(omega), re(gamma), re(j))?;
    pt_chain_to_ndpa(&spec)
}

fn chain_certificate(source: NonHermitianHamiltonian, omega: &RMat, gamma: &RMat, j: &RMat) -> Result<MappingCertificate> {
    let n = omega.nrows();
    let om = linalg::from_real(omega);
    let jm = linalg::from_real(j);
    let target = BosonicQuadraticHamiltonian::paired(&om + &jm, &jm - &om, linalg::from_real(gamma) * I)?;
    let u = linalg::hadamard_blocks(n);
    let residual = frob(&(&u * source.matrix() * u.adjoint() - target.dynamical_matrix()))
        / frob(source.matrix()).max(f64::MIN_POSITIVE);
    Ok(MappingCertificate {
        source,
        target,
        unitary: u,
        residual,
        kind: MappingKind::NdpaSameCount,
        trace_shift: cr(0.0),
    })
}

/// 2N-mode QMFS realisation: μ_a = (H + H†)/2, μ_b = −μ_aᵀ, ν = (H − H†)/2.
///
/// The certificate's unitary U₄ = (1/√2)[[I, I], [I, −I]] brings the
/// dynamical matrix to diag(H, H†); the residual measures
/// ‖U₄ diag(H, H†) U₄† − M‖/‖H‖.
pub fn qmfs_construct(h: &NonHermitianHamiltonian) -> MappingCertificate {
    let m = h.matrix();
    let n = m.nrows();
    let a = linalg::hermitian_part(m);
    let b = linalg::antihermitian_part(m);
    let target = BosonicQuadraticHamiltonian::paired(a.clone(), -a.transpose(), b)
        .expect("Hermitian parts are Hermitian");
    let u = linalg::hadamard_blocks(n);
    let doubled = linalg::block_diag(m, &m.adjoint());
    let residual = frob(&(&u * doubled * u.adjoint() - target.dynamical_matrix())) / frob(m).max(f64::MIN_POSITIVE);
    MappingCertificate {
        source: h.clone(),
        target,
        unitary: u,
        residual,
        kind: MappingKind::QmfsDoubled,
        trace_shift: cr(0.0),
    }
}

#[derive(Debug, Clone)]
pub enum Witness {
    Exists { w12: CMat, residual: f64 },
    NoWitness { best_residual: f64 },
}

impl Witness {
    pub fn exists(&self) -> bool {
        matches!(self, Witness::Exists { .. })
    }

    pub fn residual(&self) -> f64 {
        match self {
            Witness::Exists { residual, .. } => *residual,
            Witness::NoWitness { best_residual } => *best_residual,
        }
    }
}

pub const WITNESS_SEEDS: usize = 64;

/// Linear-plus-unitary search problem: find unitary w in the commutant of a
/// real diagonal matrix with ‖L(w)‖ = 0, L real-linear.
struct WitnessProblem {
    n: usize,
    entries: Vec<(usize, usize)>,
    a: RMat,
    scale: f64,
}

impl WitnessProblem {
    fn new<F>(diag: &[f64], scale: f64, conditions: F) -> Self
    where
        F: Fn(&CMat) -> Vec<CMat>,
    {
        let n = diag.len();
        let dnorm = diag.iter().map(|x| x * x).sum::<f64>().sqrt();
        let gtol = 1e-8 * dnorm.max(f64::MIN_POSITIVE);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if (diag[i] - diag[j]).abs() <= gtol {
                    entries.push((i, j));
                }
            }
        }
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * entries.len());
        for &(i, j) in &entries {
            for part in [cr(1.0), I] {
                let mut w = linalg::zeros(n, n);
                w[(i, j)] = part;
                let r = conditions(&w);
                let mut col = Vec::new();
                for m in &r {
                    col.extend(m.iter().flat_map(|z| [z.re, z.im]));
                }
                cols.push(col);
            }
        }
        let rows = cols.first().map_or(0, |c| c.len());
        let a = RMat::from_fn(rows, cols.len(), |i, j| cols[j][i]);
        Self { n, entries, a, scale: scale.max(f64::MIN_POSITIVE) }
    }

    fn to_vec(&self, w: &CMat) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            2 * self.entries.len(),
            self.entries.iter().flat_map(|&(i, j)| [w[(i, j)].re, w[(i, j)].im]),
        )
    }

    fn to_mat(&self, x: &nalgebra::DVector<f64>) -> CMat {
        let mut w = linalg::zeros(self.n, self.n);
        for (k, &(i, j)) in self.entries.iter().enumerate() {
            w[(i, j)] = c(x[2 * k], x[2 * k + 1]);
        }
        w
    }

    fn residual(&self, u: &CMat) -> f64 {
        (&self.a * self.to_vec(u)).norm() / self.scale
    }

    fn run_seed(&self, null: &RMat, seed: u64) -> (CMat, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * self.entries.len();
        let mut gauss = |k: usize| nalgebra::DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let mut u = if null.ncols() > 0 {
            let x = null * gauss(null.ncols());
            linalg::polar_unitary(&self.to_mat(&x))
        } else {
            linalg::polar_unitary(&self.to_mat(&gauss(dim)))
        };
        if null.ncols() > 0 {
            for _ in 0..400 {
                let x = self.to_vec(&u);
                let proj = null * (null.transpose() * x);
                if proj.norm() < 1e-12 {
                    break;
                }
                u = linalg::polar_unitary(&self.to_mat(&proj));
                if self.residual(&u) < 1e-14 {
                    break;
                }
            }
        }
        let ata = self.a.transpose() * &self.a;
        let lip = ata.norm().max(f64::MIN_POSITIVE);
        let mut f = self.residual(&u).powi(2);
        let mut step = 1.0 / lip;
        for _ in 0..600 {
            if f < 1e-30 {
                break;
            }
            let x = self.to_vec(&u);
            let grad = &ata * &x * 2.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = linalg::polar_unitary(&self.to_mat(&(&x - &grad * step)));
                let ft = self.residual(&trial).powi(2);
                if ft < f {
                    u = trial;
                    f = ft;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let r = self.residual(&u);
        (u, r)
    }

    fn search(&self, tol: f64, seed: u64) -> Witness {
        let anorm = self.a.norm().max(1.0);
        let null = linalg::real_null_space(&self.a, 1e-10 * anorm);
        let runs: Vec<(CMat, f64)> = (0..WITNESS_SEEDS as u64)
            .into_par_iter()
            .map(|s| self.run_seed(&null, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(s)))
            .collect();
        let (w, r) = runs
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one seed");
        if r <= tol {
            Witness::Exists { w12: w, residual: r }
        } else {
            Witness::NoWitness { best_residual: r }
        }
    }
}

/// Searches for a unitary w₁₂ with [w₁₂, Γ_N] = 0, w₁₂J̃* = J̃w₁₂† and
/// w₁₂Σ̃* = Σ̃w₁₂. Residuals are relative to max(‖J̃‖, ‖Σ̃‖, ‖Γ_N‖).
pub fn pt_to_pa_existence(form: &CanonicalPtForm, tol: f64) -> Witness {
    pt_to_pa_existence_seeded(form, tol, 0)
}

pub fn pt_to_pa_existence_seeded(form: &CanonicalPtForm, tol: f64, seed: u64) -> Witness {
    let j = form.j_tilde.clone();
    let s = form.sigma_tilde.clone();
    let scale = frob(&j).max(frob(&s)).max(frob(&form.gamma_matrix()));
    let problem = WitnessProblem::new(&form.gamma_n, scale, |w| {
        vec![w * j.conjugate() - &j * w.adjoint(), w * s.conjugate() - &s * w]
    });
    problem.search(tol, seed)
}

/// The (Σ, Δ, D_ν) reduction of a dynamical matrix with equal species sizes:
/// V M V† = [[Σ + Δ, D_ν], [−D_ν, Δ − Σ]].
#[derive(Debug, Clone)]
pub struct CanonicalPaForm {
    pub sigma: CMat,
    pub delta: CMat,
    pub d_nu: Vec<f64>,
    pub transform: CMat,
}

pub fn canonical_pa_form(hb: &BosonicQuadraticHamiltonian, tol: f64) -> Result<CanonicalPaForm> {
    let (p, q) = (hb.mu_a().nrows(), hb.mu_b().nrows());
    if p != q {
        return Err(Error::DimensionMismatch { expected: p, found: q });
    }
    let d = linalg::svd(hb.nu());
    let smallest = d.s.last().copied().unwrap_or(0.0);
    if smallest < tol {
        return Err(Error::DegeneratePairing { smallest });
    }
    let va = d.u.adjoint();
    let vb = d.v_t.clone();
    let tl = &va * hb.mu_a() * va.adjoint();
    let br = -(&vb * hb.mu_b().transpose() * vb.adjoint());
    let delta = (&tl + &br) * cr(0.5);
    let sigma = (&tl - &br) * cr(0.5);
    Ok(CanonicalPaForm { sigma, delta, d_nu: d.s, transform: linalg::block_diag(&va, &vb) })
}

/// Searches for a unitary w₁₂ with [w₁₂, D_ν] = 0, Σw₁₂ᵀ = w₁₂Σ* and
/// Δw₁₂ = w₁₂Δ*.
pub fn pa_to_pt_existence(hb: &BosonicQuadraticHamiltonian, tol: f64) -> Result<Witness> {
    pa_to_pt_existence_seeded(hb, tol, 0)
}

pub fn pa_to_pt_existence_seeded(hb: &BosonicQuadraticHamiltonian, tol: f64, seed: u64) -> Result<Witness> {
    let form = canonical_pa_form(hb, tol)?;
    let s = form.sigma.clone();
    let dl = form.delta.clone();
    let dn = form.d_nu.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = frob(&s).max(frob(&dl)).max(dn);
    let problem = WitnessProblem::new(&form.d_nu, scale, |w| {
        vec![&s * w.transpose() - w * s.conjugate(), &dl * w - w * dl.conjugate()]
    });
    Ok(problem.search(tol, seed))
}

/// The four-mode tight-binding counterexample in canonical form:
/// Σ̃ = gσ_x, J̃ = diag(g, g + iδ), Γ_N = γ/2.
pub fn tb4_model(g: f64, gamma: f64, delta: f64) -> NonHermitianHamiltonian {
    let z = cr(0.0);
    let e = linalg::from_rows(&[&[c(0.0, gamma / 2.0), cr(g)], &[cr(g), c(0.0, gamma / 2.0)]]);
    let f = linalg::from_rows(&[&[cr(g), z], &[z, c(g, delta)]]);
    NonHermitianHamiltonian::new(block2(&e, &f, &f.conjugate(), &e.conjugate())).expect("finite model")
}

/// Four-mode amplifier g(a₁†a₂ − b₁†b₂) + δ(i a₁†a₂ − i b₁†b₂) + ν₁a₁†b₁† + ν₂a₂†b₂† + h.c.
pub fn pa4_model(g: f64, nu1: f64, nu2: f64, delta: f64) -> BosonicQuadraticHamiltonian {
    let z = cr(0.0);
    let mu_a = linalg::from_rows(&[&[z, c(g, delta)], &[c(g, -delta), z]]);
    let mu_b = linalg::from_rows(&[&[z, c(-g, -delta)], &[c(-g, delta), z]]);
    let nu = linalg::from_rows(&[&[cr(nu1), z], &[z, cr(nu2)]]);
    BosonicQuadraticHamiltonian::paired(mu_a, mu_b, nu).expect("Hermitian blocks")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::*;

    #[test]
    fn dimer_maps_to_dpa() {
        let cert = dpa_map(&build_pt_dimer(0.8, 0.6), 1e-10).unwrap();
        assert!(cert.residual < 1e-12, "{}", cert.residual);
        assert!((cert.target.mu_a()[(0, 0)].re - 0.8).abs() < 1e-14);
        assert!((cert.target.nu()[(0, 0)].im - 0.3).abs() < 1e-14);
        assert!(linalg::unitarity_residual(&cert.unitary) < 1e-12);
    }

    #[test]
    fn detuned_dimer_is_not_dpa_equivalent() {
        assert!(matches!(
            dpa_map(&build_detuned_dimer(0.1, 0.55, 1.0), 1e-10),
            Err(Error::NotPtEquivalent { .. })
        ));
    }

    #[test]
    fn hermitian_two_level_maps_with_zero_drive() {
        let m = linalg::from_rows(&[&[cr(0.3), c(0.2, -0.4)], &[c(0.2, 0.4), cr(-0.1)]]);
        let cert = dpa_map(&NonHermitianHamiltonian::new(m).unwrap(), 1e-10).unwrap();
        assert_eq!(cert.target.nu()[(0, 0)].norm(), 0.0);
        assert!(cert.residual < 1e-12);
        assert!((cert.trace_shift - cr(0.1)).norm() < 1e-15);
    }

    #[test]
    fn dimer_canonical_form() {
        let f = canonical_pt_form(&build_pt_dimer(0.8, 0.6), 1e-10).unwrap();
        assert!(f.sigma_tilde[(0, 0)].norm() < 1e-14);
        assert!((f.j_tilde[(0, 0)] - cr(0.8)).norm() < 1e-14);
        assert!((f.gamma_n[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn zero_gain_loss_is_rank_deficient() {
        let h = NonHermitianHamiltonian::new(linalg::sigma_nx(1)).unwrap();
        assert!(matches!(canonical_pt_form(&h, 1e-10), Err(Error::RankDeficientGainLoss { .. })));
    }

    #[test]
    fn qmfs_of_pure_gain() {
        let h = NonHermitianHamiltonian::new(linalg::identity(2) * c(0.0, 0.7)).unwrap();
        let cert = qmfs_construct(&h);
        assert!(frob(cert.target.mu_a()) < 1e-15);
        assert!(frob(&(cert.target.nu() - linalg::identity(2) * c(0.0, 0.7))) < 1e-15);
        assert!(cert.residual < 1e-15);
    }

    #[test]
    fn chain_complex_block_rejected() {
        let om = linalg::identity(2);
        let ga = linalg::identity(2);
        let j = linalg::identity(2) * c(1.0, 0.2);
        assert!(matches!(pt_blocks_to_ndpa(&om, &ga, &j), Err(Error::ConditionsViolated(_))));
    }

    #[test]
    fn scalar_witness_exists() {
        let f = canonical_pt_form(&build_pt_dimer(0.8, 0.6), 1e-10).unwrap();
        match pt_to_pa_existence(&f, 1e-10) {
            Witness::Exists { w12, .. } => assert!((w12[(0, 0)].norm() - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}

//! Concrete Hamiltonians on both sides of the mapping.
//!
//! Bosonic Hamiltonians are stored in block form. For a pair of species the
//! Heisenberg equations close on the operator vector (a_1..a_p, b_1†..b_q†)
//! and the dynamical matrix is
//!
//! ```text
//! M = [[ mu_a,   nu      ],
//!      [ -nu†,  -mu_b^T  ]]
//! ```
//!
//! For a single species the vector is (a, a†), `mu_b = mu_a` and `nu` is
//! symmetric. The species sizes p and q may differ, which is what the
//! closed three-operator subsystem of the HOEP amplifier needs.

use crate::error::{Error, Result};
use crate::linalg::{self, block2, c, cr, CMat, RMat, C64, I};
use crate::spectral::NonHermitianHamiltonian;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    /// One species: operator vector (a, a†).
    Single,
    /// Two species: operator vector (a, b†).
    Paired,
}

#[derive(Debug, Clone)]
pub struct BosonicQuadraticHamiltonian {
    species: Species,
    mu_a: CMat,
    mu_b: CMat,
    nu: CMat,
}

fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl BosonicQuadraticHamiltonian {
    /// Two-species Hamiltonian a†μ_a a + b†μ_b b + (a†ν b† + h.c.).
    pub fn paired(mu_a: CMat, mu_b: CMat, nu: CMat) -> Result<Self> {
        if !mu_a.is_square() || !mu_b.is_square() {
            return Err(Error::InvalidInput("mu blocks must be square".into()));
        }
        if nu.shape() != (mu_a.nrows(), mu_b.nrows()) {
            return Err(Error::DimensionMismatch {
                expected: mu_a.nrows() * mu_b.nrows(),
                found: nu.nrows() * nu.ncols(),
            });
        }
        if hermiticity_defect(&mu_a) > HERMITIAN_TOL || hermiticity_defect(&mu_b) > HERMITIAN_TOL {
            return Err(Error::InvalidInput("mu_a and mu_b must be Hermitian".into()));
        }
        Ok(Self { species: Species::Paired, mu_a, mu_b, nu })
    }

    /// Single-species Hamiltonian a†μ a + ½(a†ν a† + h.c.), ν symmetric.
    pub fn single(mu: CMat, nu: CMat) -> Result<Self> {
        if !mu.is_square() || nu.shape() != mu.shape() {
            return Err(Error::InvalidInput("mu and nu must be square and equal in size".into()));
        }
        if hermiticity_defect(&mu) > HERMITIAN_TOL {
            return Err(Error::InvalidInput("mu must be Hermitian".into()));
        }
        let asym = (&nu - nu.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidInput("single-species pairing must be symmetric".into()));
        }
        Ok(Self { species: Species::Single, mu_b: mu.clone(), mu_a: mu, nu })
    }

    pub fn species(&self) -> Species {
        self.species
    }

    pub fn mu_a(&self) -> &CMat {
        &self.mu_a
    }

    pub fn mu_b(&self) -> &CMat {
        &self.mu_b
    }

    pub fn nu(&self) -> &CMat {
        &self.nu
    }

    /// Number of physical bosonic modes.
    pub fn n_modes(&self) -> usize {
        match self.species {
            Species::Single => self.mu_a.nrows(),
            Species::Paired => self.mu_a.nrows() + self.mu_b.nrows(),
        }
    }

    /// Dimension of the operator vector the dynamical matrix acts on.
    pub fn dim(&self) -> usize {
        self.mu_a.nrows() + self.mu_b.nrows()
    }

    /// diag(I_p, -I_q), the metric the dynamical matrix is pseudo-Hermitian with.
    pub fn sigma_z(&self) -> CMat {
        linalg::sigma_z(self.mu_a.nrows(), self.mu_b.nrows())
    }

    pub fn dynamical_matrix(&self) -> CMat {
        block2(
            &self.mu_a,
            &self.nu,
            &(-self.nu.adjoint()),
            &(-self.mu_b.transpose()),
        )
    }

    /// Generator G of i d/dt (c, c†) = G (c, c†) over all physical modes c,
    /// with c = (a, b) for paired species.
    pub fn full_generator(&self) -> CMat {
        let (e, f) = match self.species {
            Species::Single => (self.mu_a.clone(), self.nu.clone()),
            Species::Paired => {
                let p = self.mu_a.nrows();
                let q = self.mu_b.nrows();
                let e = linalg::block_diag(&self.mu_a, &self.mu_b);
                let f = block2(
                    &linalg::zeros(p, p),
                    &self.nu,
                    &self.nu.transpose(),
                    &linalg::zeros(q, q),
                );
                (e, f)
            }
        };
        block2(&e, &f, &(-f.conjugate()), &(-e.conjugate()))
    }

    /// Real matrix K with dq/dt = K q for the quadratures
    /// q = (x_1..x_n, p_1..p_n), x = (c + c†)/√2, p = -i(c - c†)/√2.
    pub fn quadrature_generator(&self) -> RMat {
        let n = self.n_modes();
        let g = self.full_generator();
        let t = quadrature_transform(n);
        let k = &t * (g * c(0.0, -1.0)) * t.adjoint();
        k.map(|z| z.re)
    }
}

/// Unitary T mapping (c, c†) to (x, p).
pub fn quadrature_transform(n: usize) -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let id = linalg::identity(n);
    block2(&(&id * cr(h)), &(&id * cr(h)), &(&id * c(0.0, -h)), &(&id * c(0.0, h)))
}

pub fn build_pt_dimer(g: f64, gamma: f64) -> NonHermitianHamiltonian {
    build_detuned_dimer(0.0, g, gamma)
}

/// (ω + iγ/2)σ_z + gσ_x.
pub fn build_detuned_dimer(omega: f64, g: f64, gamma: f64) -> NonHermitianHamiltonian {
    let d = c(omega, gamma / 2.0);
    let m = linalg::from_rows(&[&[d, cr(g)], &[cr(g), -d]]);
    NonHermitianHamiltonian::new(m).expect("finite dimer")
}

/// Gain-neutral-loss trimer with detuning ε on the middle site.
pub fn build_hoep_trimer(g: f64, gamma: f64, epsilon: f64) -> NonHermitianHamiltonian {
    let z = cr(0.0);
    let m = linalg::from_rows(&[
        &[c(0.0, gamma / 2.0), cr(g), z],
        &[cr(g), cr(epsilon), cr(g)],
        &[z, cr(g), c(0.0, -gamma / 2.0)],
    ]);
    NonHermitianHamiltonian::new(m).expect("finite trimer")
}

/// Degenerate parametric amplifier with dynamical matrix δσ_z + iνσ_x.
pub fn build_dpa(delta: f64, nu: f64) -> Result<BosonicQuadraticHamiltonian> {
    if nu < 0.0 {
        return Err(Error::InvalidInput("the drive amplitude nu must be non-negative".into()));
    }
    BosonicQuadraticHamiltonian::single(
        CMat::from_element(1, 1, cr(delta)),
        CMat::from_element(1, 1, c(0.0, nu)),
    )
}

/// Three-mode amplifier ε b†b + (√2 g a₂†b + i(ν/2) a₁†a₂† + h.c.).
///
/// The closed operator set is (b, a₂, a₁†), so the first species holds
/// (b, a₂) and the second holds a₁.
pub fn build_hoep_ndpa(g: f64, nu: f64, epsilon: f64) -> Result<BosonicQuadraticHamiltonian> {
    if nu < 0.0 {
        return Err(Error::InvalidInput("the drive amplitude nu must be non-negative".into()));
    }
    let s = std::f64::consts::SQRT_2 * g;
    let mu_a = linalg::from_rows(&[&[cr(epsilon), cr(s)], &[cr(s), cr(0.0)]]);
    let mu_b = CMat::from_element(1, 1, cr(0.0));
    let pair = linalg::from_rows(&[&[cr(0.0)], &[c(0.0, nu / 2.0)]]);
    BosonicQuadraticHamiltonian::paired(mu_a, mu_b, pair)
}

/// Coefficients of a 2N-site PT chain after relabelling c_{-j} → a_j,
/// c_j → b_j.
///
/// Hoppings are indexed by bond j = -(N-1)..=(N-1) at array position
/// j + N - 1. Gains are indexed by site j ∈ {-N..-1, 1..N} at positions
/// 0..2N-1 from left to right. The coefficient matrices follow
/// Ω_{l,l+1} = Ω_{l+1,l} = t_l, Γ_ll = γ_l/2 and J_11 = t_0.
#[derive(Debug, Clone)]
pub struct PtChainSpec {
    pub n_pairs: usize,
    pub hoppings: Vec<f64>,
    pub gains: Vec<f64>,
    pub omega: RMat,
    pub gamma: RMat,
    pub j: RMat,
}

const PT_TOL: f64 = 1e-12;

impl PtChainSpec {
    pub fn new(hoppings: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() || gains.len() % 2 != 0 {
            return Err(Error::InvalidInput("gains must have even length 2N".into()));
        }
        let n = gains.len() / 2;
        if hoppings.len() != 2 * n - 1 {
            return Err(Error::DimensionMismatch { expected: 2 * n - 1, found: hoppings.len() });
        }
        if hoppings.iter().chain(gains.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite chain parameter".into()));
        }
        let bond = |j: isize| hoppings[(j + n as isize - 1) as usize];
        let site = |j: isize| {
            let idx = if j < 0 { j + n as isize } else { j + n as isize - 1 };
            gains[idx as usize]
        };
        for j in 1..n as isize {
            if (bond(j) - bond(-j)).abs() > PT_TOL {
                return Err(Error::PtViolation(format!("t_{j} != t_-{j}")));
            }
        }
        for j in 1..=n as isize {
            if (site(j) + site(-j)).abs() > PT_TOL {
                return Err(Error::PtViolation(format!("gamma_{j} != -gamma_-{j}")));
            }
        }
        let mut omega = RMat::zeros(n, n);
        for l in 1..n {
            omega[(l - 1, l)] = bond(l as isize);
            omega[(l, l - 1)] = bond(l as isize);
        }
        let gamma = RMat::from_fn(n, n, |a, b| if a == b { site(a as isize + 1) / 2.0 } else { 0.0 });
        let mut jm = RMat::zeros(n, n);
        jm[(0, 0)] = bond(0);
        Ok(Self { n_pairs: n, hoppings, gains, omega, gamma, j: jm })
    }

    /// Dimerised chain t_j = t + (-1)^j t', γ_j = (-1)^j γ₀ on sites j > 0.
    pub fn ssh(n_pairs: usize, t: f64, t_prime: f64, gamma0: f64) -> Result<Self> {
        let n = n_pairs as isize;
        let sign = |j: isize| if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let hoppings = (-(n - 1)..n).map(|j| t + sign(j) * t_prime).collect();
        let gains = (-n..=n)
            .filter(|&j| j != 0)
            .map(|j| if j > 0 { sign(j) * gamma0 } else { -sign(-j) * gamma0 })
            .collect();
        Self::new(hoppings, gains)
    }

    /// General blocks (Ω, Γ, J) without the nearest-neighbour structure.
    /// Validity is checked by the mapping that consumes them.
    pub fn from_blocks(omega: RMat, gamma: RMat, j: RMat) -> Result<Self> {
        let n = omega.nrows();
        if !omega.is_square() || gamma.shape() != (n, n) || j.shape() != (n, n) {
            return Err(Error::InvalidInput("Omega, Gamma, J must be square and equal in size".into()));
        }
        Ok(Self { n_pairs: n, hoppings: vec![], gains: vec![], omega, gamma, j })
    }
}

/// [[Ω + iΓ, J], [J, Ω - iΓ]].
pub fn build_pt_chain(spec: &PtChainSpec) -> NonHermitianHamiltonian {
    let om = linalg::from_real(&spec.omega);
    let ga = linalg::from_real(&spec.gamma) * I;
    let j = linalg::from_real(&spec.j);
    NonHermitianHamiltonian::new(block2(&(&om + &ga), &j, &j, &(&om - &ga))).expect("finite chain")
}

/// Eigenvalues of the PT dimer, ±√(g² - γ²/4).
pub fn pt_dimer_eigenvalues(g: f64, gamma: f64) -> [C64; 2] {
    let lam = C64::new(g * g - gamma * gamma / 4.0, 0.0).sqrt();
    [-lam, lam]
}

//! Biorthogonal eigensystems, exceptional-point detection and symmetry checks.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, frob, CMat, RMat, C64};
use crate::models::BosonicQuadraticHamiltonian;

pub const DEFAULT_TOL: f64 = 1e-8;

type Generator = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// Effective Hamiltonian of a set of coupled-mode equations i dψ/dt = ℋψ,
/// optionally time dependent.
#[derive(Clone)]
pub struct NonHermitianHamiltonian {
    matrix: CMat,
    generator: Option<Generator>,
}

impl fmt::Debug for NonHermitianHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonHermitianHamiltonian")
            .field("matrix", &self.matrix)
            .field("time_dependent", &self.generator.is_some())
            .finish()
    }
}

impl NonHermitianHamiltonian {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() == 0 || !matrix.is_square() {
            return Err(Error::InvalidInput("Hamiltonian must be square and non-empty".into()));
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::InvalidInput("Hamiltonian has non-finite entries".into()));
        }
        Ok(Self { matrix, generator: None })
    }

    pub fn time_dependent<F>(generator: F) -> Result<Self>
    where
        F: Fn(f64) -> CMat + Send + Sync + 'static,
    {
        let matrix = generator(0.0);
        let mut h = Self::new(matrix)?;
        h.generator = Some(Arc::new(generator));
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn is_time_dependent(&self) -> bool {
        self.generator.is_some()
    }

    pub fn at(&self, t: f64) -> CMat {
        match &self.generator {
            Some(g) => g(t),
            None => self.matrix.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        frob(&self.matrix)
    }
}

impl From<CMat> for NonHermitianHamiltonian {
    fn from(m: CMat) -> Self {
        Self::new(m).expect("valid Hamiltonian matrix")
    }
}

#[derive(Debug, Clone)]
pub struct BiorthogonalEigensystem {
    pub eigenvalues: Vec<C64>,
    /// Columns r_j.
    pub right_vectors: CMat,
    /// Columns l_j with l_j† r_k = δ_jk.
    pub left_vectors: CMat,
    pub condition: f64,
    pub symplectic_signs: Option<Vec<i8>>,
}

impl BiorthogonalEigensystem {
    /// ‖Σ λ_j r_j l_j† − H‖ / ‖H‖.
    pub fn reconstruction_residual(&self, h: &CMat) -> f64 {
        let n = self.eigenvalues.len();
        let d = CMat::from_fn(n, n, |i, j| if i == j { self.eigenvalues[i] } else { C64::new(0.0, 0.0) });
        let back = &self.right_vectors * d * self.left_vectors.adjoint();
        frob(&(back - h)) / frob(h).max(f64::MIN_POSITIVE)
    }

    pub fn biorthogonality_residual(&self) -> f64 {
        let n = self.eigenvalues.len();
        let g = self.left_vectors.adjoint() * &self.right_vectors;
        frob(&(g - linalg::identity(n)))
    }

    /// Signs of r_j† η r_j, the symplectic norms for a bosonic metric η.
    pub fn with_symplectic_signs(mut self, eta: &CMat) -> Self {
        let signs = (0..self.eigenvalues.len())
            .map(|k| {
                let r = self.right_vectors.column(k);
                let q = (r.adjoint() * eta * r)[(0, 0)].re;
                if q >= 0.0 { 1 } else { -1 }
            })
            .collect();
        self.symplectic_signs = Some(signs);
        self
    }
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Right eigenvectors gauge-fixed and sorted by (Re, Im); left vectors from
/// the inverse adjoint of the right-vector matrix.
pub fn biorthogonal_eig(h: &NonHermitianHamiltonian, tol: f64) -> Result<BiorthogonalEigensystem> {
    biorthogonal_eig_matrix(h.matrix(), tol)
}

pub fn biorthogonal_eig_matrix(m: &CMat, tol: f64) -> Result<BiorthogonalEigensystem> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let e = linalg::eig(m);
    let n = e.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sort_key(&e.values[a], &e.values[b]));
    let eigenvalues: Vec<C64> = order.iter().map(|&k| e.values[k]).collect();
    let mut right = CMat::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let mut v: DVector<C64> = e.vectors.column(k).into_owned();
        linalg::gauge_fix(&mut v);
        right.set_column(j, &v);
    }
    let condition = linalg::condition_number(&right);
    if !(condition <= 1.0 / tol) {
        return Err(Error::DefectiveMatrix { condition });
    }
    let inv = right.clone().try_inverse().ok_or(Error::DefectiveMatrix { condition })?;
    Ok(BiorthogonalEigensystem {
        eigenvalues,
        right_vectors: right,
        left_vectors: inv.adjoint(),
        condition,
        symplectic_signs: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpReport {
    pub is_defective: bool,
    pub ep_order: usize,
    pub cluster_center: C64,
    pub defect_metric: f64,
}

/// Detects coalescing eigenpairs.
///
/// A Jordan block of size k splits under round-off into a ring of radius
/// about ‖H‖·ε^{1/k}, so clustering and the eigenvector rank test both use
/// the threshold √tol (relative) rather than tol itself. The EP order of a
/// cluster of m eigenvalues whose eigenvectors span rank r is m − r + 1.
pub fn ep_detect(h: &NonHermitianHamiltonian, tol: f64) -> EpReport {
    ep_detect_matrix(h.matrix(), tol)
}

pub fn ep_detect_matrix(m: &CMat, tol: f64) -> EpReport {
    let n = m.nrows();
    let scale = frob(m).max(f64::MIN_POSITIVE);
    let thresh = tol.sqrt();
    let e = linalg::eig(m);
    let radius = thresh * scale;
    let clusters = cluster(&e.values, radius);
    let mut best = EpReport {
        is_defective: false,
        ep_order: 1,
        cluster_center: e.values.first().copied().unwrap_or_default(),
        defect_metric: 1.0,
    };
    for members in clusters {
        let center = members.iter().map(|&k| e.values[k]).sum::<C64>() / C64::new(members.len() as f64, 0.0);
        let vecs = CMat::from_fn(n, members.len(), |i, j| e.vectors[(i, members[j])]);
        let s = linalg::singular_values(&vecs);
        let smax = s[0].max(f64::MIN_POSITIVE);
        let rank = s.iter().filter(|&&x| x > thresh * smax).count().max(1);
        let order = members.len() - rank + 1;
        let metric = s.last().copied().unwrap_or(0.0) / smax;
        if order > best.ep_order || (order == best.ep_order && metric < best.defect_metric) {
            best = EpReport { is_defective: order >= 2, ep_order: order, cluster_center: center, defect_metric: metric };
        }
    }
    best
}

/// Single-linkage clusters of points closer than `radius`.
fn cluster(vals: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_index = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_index[r] == usize::MAX {
            root_index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_index[r]].push(i);
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtPhase {
    Unbroken,
    Broken,
    ExceptionalPoint,
}

pub fn classify_pt_phase(h: &NonHermitianHamiltonian, tol: f64) -> PtPhase {
    let m = h.matrix();
    if ep_detect_matrix(m, tol).ep_order >= 2 {
        return PtPhase::ExceptionalPoint;
    }
    let scale = frob(m);
    let max_imag = linalg::eigenvalues(m).iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag >= tol * scale {
        PtPhase::Broken
    } else {
        PtPhase::Unbroken
    }
}

/// ‖M† − η M η⁻¹‖ ≤ tol·‖M‖.
pub fn check_pseudo_hermitian(m: &CMat, eta: &CMat, tol: f64) -> Result<bool> {
    if eta.shape() != m.shape() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: eta.nrows() });
    }
    if linalg::condition_number(eta) > 1e12 {
        return Err(Error::SingularEta);
    }
    let inv = eta.clone().try_inverse().ok_or(Error::SingularEta)?;
    let res = frob(&(m.adjoint() - eta * m * inv));
    Ok(res <= tol * frob(m).max(f64::MIN_POSITIVE))
}

/// ‖H* − P H P⁻¹‖ ≤ tol·‖H‖ with time reversal as complex conjugation.
pub fn check_pt_symmetry(h: &CMat, parity: &CMat, tol: f64) -> bool {
    pt_residual(h, parity) <= tol * frob(h).max(f64::MIN_POSITIVE)
}

pub fn pt_residual(h: &CMat, parity: &CMat) -> f64 {
    frob(&(h.conjugate() - parity * h * parity.adjoint()))
}

/// Orthonormal real coefficient vectors v of the conserved quadratures v·q.
///
/// v·q is conserved when Kᵀv = 0, K being the quadrature generator of
/// [`BosonicQuadraticHamiltonian::quadrature_generator`].
pub fn conserved_quadratures(hb: &BosonicQuadraticHamiltonian, tol: f64) -> Vec<DVector<f64>> {
    let kt = quadrature_dynamical_matrix(hb);
    let scale = kt.norm().max(1.0);
    let ns = linalg::real_null_space(&kt, tol * scale);
    (0..ns.ncols()).map(|j| ns.column(j).into_owned()).collect()
}

/// The real matrix Kᵀ acting on quadrature coefficient vectors.
pub fn quadrature_dynamical_matrix(hb: &BosonicQuadraticHamiltonian) -> RMat {
    hb.quadrature_generator().transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};
    use crate::models::*;

    #[test]
    fn sigma_x_eigensystem() {
        let h = NonHermitianHamiltonian::new(linalg::sigma_nx(1)).unwrap();
        let e = biorthogonal_eig(&h, DEFAULT_TOL).unwrap();
        assert!((e.eigenvalues[0] - cr(-1.0)).norm() < 1e-14);
        assert!((e.eigenvalues[1] - cr(1.0)).norm() < 1e-14);
        assert!(e.biorthogonality_residual() < 1e-12);
    }

    #[test]
    fn dimer_eigenvalues_and_defectiveness() {
        let e = biorthogonal_eig(&build_pt_dimer(1.0, 1.0), DEFAULT_TOL).unwrap();
        assert!((e.eigenvalues[1].re - 0.75f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            biorthogonal_eig(&build_pt_dimer(0.5, 1.0), DEFAULT_TOL),
            Err(Error::DefectiveMatrix { .. })
        ));
    }

    #[test]
    fn ep_orders() {
        let r = ep_detect(&build_pt_dimer(0.5, 1.0), DEFAULT_TOL);
        assert_eq!(r.ep_order, 2);
        assert!(r.cluster_center.norm() < 1e-6);
        let r = ep_detect(&build_hoep_trimer(2f64.sqrt() / 4.0, 1.0, 0.0), DEFAULT_TOL);
        assert_eq!(r.ep_order, 3);
        assert!(r.cluster_center.norm() < 1e-4);
        let id = NonHermitianHamiltonian::new(linalg::identity(4)).unwrap();
        let r = ep_detect(&id, DEFAULT_TOL);
        assert_eq!(r.ep_order, 1);
        assert!(!r.is_defective);
    }

    #[test]
    fn phases() {
        assert_eq!(classify_pt_phase(&build_pt_dimer(1.0, 1.0), DEFAULT_TOL), PtPhase::Unbroken);
        assert_eq!(classify_pt_phase(&build_pt_dimer(0.4, 1.0), DEFAULT_TOL), PtPhase::Broken);
        assert_eq!(classify_pt_phase(&build_pt_dimer(0.5, 1.0), DEFAULT_TOL), PtPhase::ExceptionalPoint);
    }

    #[test]
    fn pseudo_hermiticity_examples() {
        let m = build_dpa(1.0, 0.7).unwrap().dynamical_matrix();
        assert!(check_pseudo_hermitian(&m, &linalg::sigma_z(1, 1), 1e-12).unwrap());
        let gain = linalg::identity(2) * c(0.0, 1.0);
        assert!(!check_pseudo_hermitian(&gain, &linalg::sigma_z(1, 1), 1e-12).unwrap());
        assert!(matches!(
            check_pseudo_hermitian(&gain, &linalg::zeros(2, 2), 1e-12),
            Err(Error::SingularEta)
        ));
    }

    #[test]
    fn pt_symmetry_examples() {
        let px = linalg::sigma_nx(1);
        assert!(check_pt_symmetry(build_pt_dimer(0.7, 0.3).matrix(), &px, 1e-12));
        assert!(!check_pt_symmetry(build_detuned_dimer(0.1, 0.55, 1.0).matrix(), &px, 1e-12));
    }

    #[test]
    fn conserved_quadrature_counts() {
        let q = conserved_quadratures(&build_dpa(1.0, 1.0).unwrap(), 1e-10);
        assert_eq!(q.len(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[0][0].abs() - s).abs() < 1e-12 && (q[0][1].abs() - s).abs() < 1e-12);
        assert!(conserved_quadratures(&build_dpa(2.0, 1.0).unwrap(), 1e-10).is_empty());
        let hoep = build_hoep_ndpa(2f64.sqrt() / 4.0, 1.0, 0.0).unwrap();
        assert_eq!(conserved_quadratures(&hoep, 1e-10).len(), 2);
    }
}

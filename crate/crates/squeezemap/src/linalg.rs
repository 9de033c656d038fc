//! Dense complex linear algebra on top of `nalgebra`.
//!
//! nalgebra supplies the Schur form, SVD and Hermitian eigensolver. This
//! module adds what it lacks: eigenvectors of a general complex matrix
//! (triangular back-substitution on the Schur factor), null spaces,
//! polar factors and spectrum matching.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn from_real(m: &RMat) -> CMat {
    m.map(cr)
}

pub fn from_rows(rows: &[&[C64]]) -> CMat {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(r, c, |i, j| rows[i][j])
}

/// Block matrix [[a, b], [c, d]].
pub fn block2(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    assert_eq!(b.shape(), (r1, c2));
    assert_eq!(cc.shape(), (r2, c1));
    let mut m = zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((0, c1), (r1, c2)).copy_from(b);
    m.view_mut((r1, 0), (r2, c1)).copy_from(cc);
    m.view_mut((r1, c1), (r2, c2)).copy_from(d);
    m
}

pub fn block_diag(a: &CMat, d: &CMat) -> CMat {
    block2(a, &zeros(a.nrows(), d.ncols()), &zeros(d.nrows(), a.ncols()), d)
}

pub fn sub(m: &CMat, r0: usize, c0: usize, r: usize, cc: usize) -> CMat {
    m.view((r0, c0), (r, cc)).into_owned()
}

pub fn frob(m: &CMat) -> f64 {
    m.norm()
}

/// sigma_x on N-blocks: [[0, I], [I, 0]].
pub fn sigma_nx(n: usize) -> CMat {
    block2(&zeros(n, n), &identity(n), &identity(n), &zeros(n, n))
}

/// diag(I_p, -I_q).
pub fn sigma_z(p: usize, q: usize) -> CMat {
    let mut m = identity(p + q);
    for k in p..p + q {
        m[(k, k)] = cr(-1.0);
    }
    m
}

/// (1/sqrt 2) [[I, I], [I, -I]].
pub fn hadamard_blocks(n: usize) -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let id = identity(n) * cr(h);
    block2(&id, &id, &id, &(-id.clone()))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

pub fn antihermitian_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * cr(0.5)
}

/// Singular value decomposition with singular values sorted descending.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v_t: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let d = m.clone().svd(true, true);
    let u = d.u.expect("svd u");
    let v_t = d.v_t.expect("svd v_t");
    let mut idx: Vec<usize> = (0..d.singular_values.len()).collect();
    idx.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let s = idx.iter().map(|&k| d.singular_values[k]).collect();
    let u = CMat::from_fn(u.nrows(), idx.len(), |i, j| u[(i, idx[j])]);
    let v_t = CMat::from_fn(idx.len(), v_t.ncols(), |i, j| v_t[(idx[i], j)]);
    Svd { u, s, v_t }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Ratio of largest to smallest singular value (infinite when singular).
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Unitary polar factor U V† of W = U S V†.
pub fn polar_unitary(w: &CMat) -> CMat {
    let d = svd(w);
    &d.u * &d.v_t
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    frob(&(u.adjoint() * u - identity(u.ncols())))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(m);
    let e = h.symmetric_eigen();
    let n = e.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |i, j| e.eigenvectors[(i, idx[j])]);
    (vals, vecs)
}

/// Eigenvalues and unnormalised right eigenvectors of a general complex
/// square matrix.
pub struct Eig {
    pub values: Vec<C64>,
    pub vectors: CMat,
}

pub fn eig(m: &CMat) -> Eig {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eig needs a square matrix");
    if n == 0 {
        return Eig { values: vec![], vectors: zeros(0, 0) };
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Eig { values: vec![C64::new(0.0, 0.0); n], vectors: identity(n) };
    }
    let (q, t) = schur_with_retries(m, scale);
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let tnorm = frob(&t).max(f64::MIN_POSITIVE);
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);
    let mut x = zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        x[(k, k)] = cr(1.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[(j, k)];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < smin {
                d = cr(smin);
            }
            x[(i, k)] = -s / d;
        }
        let nrm = x.column(k).norm();
        if nrm > 1e100 {
            let mut col = x.column_mut(k);
            col /= cr(nrm);
        }
    }
    let mut v = q * x;
    for k in 0..n {
        let nrm = v.column(k).norm();
        if nrm > 0.0 {
            let mut col = v.column_mut(k);
            col /= cr(nrm);
        }
    }
    Eig { values, vectors: v }
}

/// Complex Schur form with an iteration cap. When QR stalls, a rotated and
/// shifted copy is tried and the result mapped back.
fn schur_with_retries(m: &CMat, scale: f64) -> (CMat, CMat) {
    let n = m.nrows();
    let cap = 30 * n.max(4);
    for attempt in 0..8 {
        let shift = if attempt == 0 {
            cr(0.0)
        } else {
            let a = 0.7 + 1.3 * attempt as f64;
            C64::new(a.cos(), a.sin()) * (0.37 * attempt as f64 * scale)
        };
        // a fixed unitary rotation breaks exact block structure that can stall QR
        let rot = if attempt == 0 {
            identity(n)
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(attempt as u64);
            random_unitary(n, &mut rng)
        };
        let shifted = rot.adjoint() * m * &rot + identity(n) * shift;
        if let Some(s) = shifted.try_schur(f64::EPSILON, cap) {
            let (q, t) = s.unpack();
            return (rot * q, t - identity(n) * shift);
        }
    }
    panic!("Schur iteration failed to converge");
}

pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    eig(m).values
}

/// Rotate a vector so its largest-magnitude component is real and positive
/// and scale it to unit 2-norm.
pub fn gauge_fix(v: &mut DVector<C64>) {
    let nrm = v.norm();
    if nrm == 0.0 {
        return;
    }
    let mut best = 0;
    let mut bmag = -1.0;
    for (k, z) in v.iter().enumerate() {
        // small slack so ties resolve to the first index deterministically
        if z.norm() > bmag * (1.0 + 1e-12) {
            bmag = z.norm();
            best = k;
        }
    }
    let phase = v[best] / v[best].norm();
    let f = phase.conj() / nrm;
    for z in v.iter_mut() {
        *z *= f;
    }
}

/// Orthonormal basis of the right null space of a real matrix, as columns.
/// Singular values at or below `tol` count as zero.
pub fn real_null_space(a: &RMat, tol: f64) -> RMat {
    let (m, n) = a.shape();
    if n == 0 {
        return RMat::zeros(0, 0);
    }
    let padded = if m < n {
        let mut p = RMat::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = padded.svd(false, true);
    let v_t = d.v_t.expect("svd v_t");
    let cols: Vec<usize> = (0..d.singular_values.len())
        .filter(|&k| d.singular_values[k] <= tol)
        .collect();
    RMat::from_fn(n, cols.len(), |i, j| v_t[(cols[j], i)])
}

/// Orthonormal basis of the null space of a complex matrix.
pub fn null_space(a: &CMat, tol: f64) -> CMat {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = padded.svd(false, true);
    let v_t = d.v_t.expect("svd v_t");
    let cols: Vec<usize> = (0..d.singular_values.len())
        .filter(|&k| d.singular_values[k] <= tol)
        .collect();
    CMat::from_fn(n, cols.len(), |i, j| v_t[(cols[j], i)].conj())
}

/// Largest distance between two spectra after greedy nearest pairing.
/// Returns infinity when the lengths differ.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; n];
    let mut used_b = vec![false; n];
    let mut worst = 0.0f64;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
            matched += 1;
            if matched == n {
                break;
            }
        }
    }
    worst
}

/// Haar-random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_complex(n, n, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for k in 0..n {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        let mut col = u.column_mut(k);
        col *= ph;
    }
    u
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_complex<R: Rng + ?Sized>(r: usize, cc: usize, rng: &mut R) -> CMat {
    CMat::from_fn(r, cc, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im) * cr(std::f64::consts::FRAC_1_SQRT_2)
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_complex(n, n, rng);
    hermitian_part(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eig_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..8 {
            let m = random_complex(n, n, &mut rng);
            let e = eig(&m);
            for k in 0..n {
                let r = e.vectors.column(k);
                let res = (&m * r - r * e.values[k]).norm();
                assert!(res < 1e-12 * frob(&m).max(1.0), "n={n} k={k} res={res}");
            }
        }
    }

    #[test]
    fn eig_handles_upper_triangular_input() {
        let m = from_rows(&[&[cr(1.0), cr(2.0)], &[cr(0.0), cr(3.0)]]);
        let e = eig(&m);
        let mut re: Vec<f64> = e.values.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] - 1.0).abs() < 1e-14 && (re[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_complex(4, 3, &mut rng);
        let d = svd(&m);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let s = CMat::from_fn(d.s.len(), d.s.len(), |i, j| if i == j { cr(d.s[i]) } else { cr(0.0) });
        let back = &d.u * s * &d.v_t;
        assert!(frob(&(back - m)) < 1e-12);
    }

    #[test]
    fn real_null_space_of_wide_matrix() {
        let a = RMat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = real_null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!((&a * &ns).norm() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_unitary(5, &mut rng);
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn spectrum_distance_matches_permutations() {
        let a = vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.5)];
        let b = vec![c(-2.0, 0.5), c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(spectrum_distance(&a, &b), 0.0);
    }
}

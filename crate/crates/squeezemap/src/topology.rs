//! Band topology of non-Hermitian Bloch Hamiltonians and bosonic dynamical
//! matrices, with the parametrically driven Kagome lattice as the worked
//! model.
//!
//! Momenta are given in reduced coordinates θ = (k·a₁, k·a₂) ∈ [0, 2π)²,
//! so k·a₃ = −θ₁ − θ₂. [`cartesian_k`] converts to Cartesian k.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, block2, c, cr, frob, CMat, C64, I};

pub const LATTICE_A1: [f64; 2] = [-1.0, -1.732_050_807_568_877_2];
pub const LATTICE_A2: [f64; 2] = [2.0, 0.0];
pub const LATTICE_A3: [f64; 2] = [-1.0, 1.732_050_807_568_877_2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KagomeParams {
    pub omega0: f64,
    pub j: f64,
    pub nu: f64,
    pub phi: f64,
}

impl KagomeParams {
    pub fn new(omega0: f64, j: f64, nu: f64) -> Self {
        Self { omega0, j, nu, phi: TAU / 3.0 }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    fn phases(&self) -> [f64; 3] {
        [0.0, self.phi, 2.0 * self.phi]
    }
}

/// Cartesian k with k·a₁ = θ₁ and k·a₂ = θ₂.
pub fn cartesian_k(theta1: f64, theta2: f64) -> [f64; 2] {
    let kx = theta2 / 2.0;
    let ky = -(theta1 + kx) / LATTICE_A1[1].abs();
    [kx, ky]
}

/// Reduced coordinates of a Cartesian k.
pub fn reduced_k(k: [f64; 2]) -> (f64, f64) {
    (k[0] * LATTICE_A1[0] + k[1] * LATTICE_A1[1], k[0] * LATTICE_A2[0] + k[1] * LATTICE_A2[1])
}

/// Nearest-neighbour structure factors τ(k) of the Kagome lattice.
pub fn kagome_tau(theta1: f64, theta2: f64) -> CMat {
    let e = |x: f64| c(x.cos(), x.sin());
    let one = cr(1.0);
    let t3 = -theta1 - theta2;
    let z = cr(0.0);
    linalg::from_rows(&[
        &[z, one + e(-theta1), one + e(t3)],
        &[one + e(theta1), z, one + e(-theta2)],
        &[one + e(-t3), one + e(theta2), z],
    ])
}

fn pairing_block(p: &KagomeParams) -> CMat {
    let ph = p.phases();
    CMat::from_fn(3, 3, |i, j| if i == j { c(ph[i].cos(), ph[i].sin()) * cr(-p.nu) } else { cr(0.0) })
}

/// 6×6 dynamical matrix [[ω₀ − Jτ, h], [−h†, −ω₀ + Jτ]], h = −ν e^{iΦ}.
pub fn kagome_bloch(p: &KagomeParams, theta1: f64, theta2: f64) -> CMat {
    let k = linalg::identity(3) * cr(p.omega0) - kagome_tau(theta1, theta2) * cr(p.j);
    let h = pairing_block(p);
    block2(&k, &h, &(-h.adjoint()), &(-k.clone()))
}

/// U_K = (1/√2)[[e^{2iΦ}, e^{2iΦ}], [i e^{−2iΦ}, −i e^{−2iΦ}]].
pub fn kagome_unitary(p: &KagomeParams) -> CMat {
    let ph = p.phases();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let d = |s: f64| CMat::from_fn(3, 3, |i, j| if i == j { c((2.0 * s * ph[i]).cos(), (2.0 * s * ph[i]).sin()) * cr(h) } else { cr(0.0) });
    let p2 = d(1.0);
    let m2 = d(-1.0);
    block2(&p2, &p2, &(&m2 * I), &(&m2 * (-I)))
}

/// U_K† ℋ_eff U_K, the balanced gain/loss form.
pub fn kagome_pt_bloch(p: &KagomeParams, theta1: f64, theta2: f64) -> CMat {
    let u = kagome_unitary(p);
    u.adjoint() * kagome_bloch(p, theta1, theta2) * u
}

type Sampler = Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>;

/// A k-dependent matrix field over the reduced Brillouin zone.
#[derive(Clone)]
pub struct BlochField {
    pub bands: usize,
    sampler: Sampler,
    pub sigma_norm: Option<CMat>,
}

impl std::fmt::Debug for BlochField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlochField")
            .field("bands", &self.bands)
            .field("sigma_norm", &self.sigma_norm.is_some())
            .finish()
    }
}

impl BlochField {
    pub fn new<F>(bands: usize, sampler: F) -> Self
    where
        F: Fn(f64, f64) -> CMat + Send + Sync + 'static,
    {
        Self { bands, sampler: Arc::new(sampler), sigma_norm: None }
    }

    pub fn with_sigma_norm(mut self, eta: CMat) -> Self {
        self.sigma_norm = Some(eta);
        self
    }

    pub fn sample(&self, theta1: f64, theta2: f64) -> CMat {
        (self.sampler)(theta1, theta2)
    }

    /// max ‖H(k) − H(k + 2π e_i)‖ over the given points.
    pub fn periodicity_residual(&self, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|&(a, b)| {
                let h = self.sample(a, b);
                frob(&(&h - self.sample(a + TAU, b))).max(frob(&(&h - self.sample(a, b + TAU))))
            })
            .fold(0.0, f64::max)
    }
}

pub fn kagome_field(p: KagomeParams) -> BlochField {
    BlochField::new(6, move |a, b| kagome_bloch(&p, a, b)).with_sigma_norm(linalg::sigma_z(3, 3))
}

pub fn kagome_pt_field(p: KagomeParams) -> BlochField {
    let u = kagome_unitary(&p);
    let eta = u.adjoint() * linalg::sigma_z(3, 3) * &u;
    BlochField::new(6, move |a, b| kagome_pt_bloch(&p, a, b)).with_sigma_norm(eta)
}

/// Eigendata at one k, bands ordered by symplectic sign (negative first)
/// when a metric is present, then by real part.
#[derive(Debug, Clone)]
struct KPoint {
    values: Vec<C64>,
    right: CMat,
    left: CMat,
    signs: Vec<i8>,
}

fn kpoint(field: &BlochField, a: f64, b: f64) -> Result<KPoint> {
    let h = field.sample(a, b);
    let e = linalg::eig(&h);
    let n = e.values.len();
    let signs: Vec<i8> = match &field.sigma_norm {
        Some(eta) => (0..n)
            .map(|k| {
                let r = e.vectors.column(k);
                if (r.adjoint() * eta * r)[(0, 0)].re >= 0.0 { 1 } else { -1 }
            })
            .collect(),
        None => vec![1; n],
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        signs[x]
            .cmp(&signs[y])
            .then(e.values[x].re.total_cmp(&e.values[y].re))
            .then(e.values[x].im.total_cmp(&e.values[y].im))
    });
    let right = CMat::from_fn(n, n, |i, j| e.vectors[(i, order[j])]);
    let cond = linalg::condition_number(&right);
    let inv = right
        .clone()
        .try_inverse()
        .filter(|_| cond < 1e12)
        .ok_or(Error::DefectiveMatrix { condition: cond })?;
    Ok(KPoint {
        values: order.iter().map(|&k| e.values[k]).collect(),
        right,
        left: inv.adjoint(),
        signs: order.iter().map(|&k| signs[k]).collect(),
    })
}

/// Eigendata on the n×n grid θ = 2π(i, j)/n, row-major in i.
pub struct BandGrid {
    pub n: usize,
    points: Vec<KPoint>,
}

impl BandGrid {
    fn at(&self, i: usize, j: usize) -> &KPoint {
        &self.points[(i % self.n) * self.n + (j % self.n)]
    }

    pub fn eigenvalues(&self, i: usize, j: usize) -> &[C64] {
        &self.at(i, j).values
    }

    /// Largest |Im λ| over the grid.
    pub fn max_imag(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.values.iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Symplectic signs at the first grid point.
    pub fn signs(&self) -> &[i8] {
        &self.points[0].signs
    }

    /// Minimum over the grid of the distance from the bands in `group` to
    /// all other bands.
    pub fn gap_min(&self, group: &[usize]) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let mut g = f64::INFINITY;
                for &b in group {
                    for (k, v) in p.values.iter().enumerate() {
                        if !group.contains(&k) {
                            g = g.min((p.values[b] - v).norm());
                        }
                    }
                }
                g
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn band_grid(field: &BlochField, grid: usize) -> Result<BandGrid> {
    if grid < 2 {
        return Err(Error::InvalidInput("grid must be at least 2".into()));
    }
    let points: Result<Vec<KPoint>> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            kpoint(field, TAU * i as f64 / grid as f64, TAU * j as f64 / grid as f64)
        })
        .collect();
    let points = points?;
    if let Some(first) = points.first() {
        if points.iter().any(|p| p.signs != first.signs) {
            return Err(Error::BandTouching { band: 0, gap: 0.0 });
        }
    }
    Ok(BandGrid { n: grid, points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernResult {
    pub value: f64,
    pub rounded: i64,
    pub gap_min: f64,
}

/// Minimum band separation for a Chern number to be defined.
pub const GAP_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Link {
    Biorthogonal,
    Symplectic,
}

fn overlap_det(p: &KPoint, q: &KPoint, group: &[usize], link: Link, eta: Option<&CMat>) -> C64 {
    let m = group.len();
    let o = CMat::from_fn(m, m, |a, b| {
        let (x, y) = (group[a], group[b]);
        match link {
            Link::Biorthogonal => p.left.column(x).dotc(&q.right.column(y)),
            Link::Symplectic => {
                let eta = eta.expect("symplectic link needs a metric");
                let lx = p.left.column(x);
                let ly = q.left.column(y);
                let nx = (lx.adjoint() * eta * lx)[(0, 0)].re.abs().sqrt();
                let ny = (ly.adjoint() * eta * ly)[(0, 0)].re.abs().sqrt();
                (lx.adjoint() * eta * ly)[(0, 0)] / cr(nx * ny)
            }
        }
    });
    o.determinant()
}

fn plaquette_sum(grid: &BandGrid, group: &[usize], link: Link, eta: Option<&CMat>) -> f64 {
    let n = grid.n;
    let total: f64 = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let a = grid.at(i, j);
            let b = grid.at(i + 1, j);
            let cc = grid.at(i + 1, j + 1);
            let d = grid.at(i, j + 1);
            let w = overlap_det(a, b, group, link, eta)
                * overlap_det(b, cc, group, link, eta)
                * overlap_det(cc, d, group, link, eta)
                * overlap_det(d, a, group, link, eta);
            w.arg()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total / TAU
}

fn chern_group(grid: &BandGrid, group: &[usize], link: Link, eta: Option<&CMat>) -> Result<ChernResult> {
    let gap_min = grid.gap_min(group);
    if !(gap_min > GAP_THRESHOLD) {
        return Err(Error::BandTouching { band: group[0], gap: gap_min });
    }
    let value = plaquette_sum(grid, group, link, eta);
    Ok(ChernResult { value, rounded: value.round() as i64, gap_min })
}

/// Biorthogonal plaquette Chern number of one band.
pub fn chern_lr(field: &BlochField, band: usize, grid: usize) -> Result<ChernResult> {
    check_band(field, band)?;
    chern_group(&band_grid(field, grid)?, &[band], Link::Biorthogonal, None)
}

/// Chern number from symplectically normalised left eigenvectors with
/// σ-weighted links.
pub fn chern_symplectic(field: &BlochField, band: usize, grid: usize) -> Result<ChernResult> {
    check_band(field, band)?;
    let eta = field
        .sigma_norm
        .as_ref()
        .ok_or_else(|| Error::Precondition("field has no symplectic metric".into()))?;
    chern_group(&band_grid(field, grid)?, &[band], Link::Symplectic, Some(eta))
}

fn check_band(field: &BlochField, band: usize) -> Result<()> {
    if band >= field.bands {
        return Err(Error::InvalidInput(format!("band {band} out of range 0..{}", field.bands)));
    }
    Ok(())
}

/// Chern numbers of a group of bands that touch each other but are
/// separated from the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupChern {
    pub bands: Vec<usize>,
    pub lr: ChernResult,
    pub symplectic: Option<ChernResult>,
}

/// Splits bands into maximal runs of consecutive (same-sign) bands whose
/// separation closes somewhere on the grid, then evaluates the multiplet
/// Chern number of each run.
pub fn chern_all(field: &BlochField, grid: usize) -> Result<Vec<GroupChern>> {
    let g = band_grid(field, grid)?;
    let signs = g.signs().to_vec();
    let n = field.bands;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for b in 1..n {
        let touching = signs[b] == signs[b - 1]
            && g.points.iter().any(|p| (p.values[b] - p.values[b - 1]).norm() <= GAP_THRESHOLD);
        if touching {
            groups.last_mut().unwrap().push(b);
        } else {
            groups.push(vec![b]);
        }
    }
    groups
        .into_iter()
        .map(|bands| {
            let lr = chern_group(&g, &bands, Link::Biorthogonal, None)?;
            let symplectic = match &field.sigma_norm {
                Some(eta) => Some(chern_group(&g, &bands, Link::Symplectic, Some(eta))?),
                None => None,
            };
            Ok(GroupChern { bands, lr, symplectic })
        })
        .collect()
}

/// Largest |Im λ| of the Kagome dynamical matrix over an n×n grid.
pub fn kagome_max_imag(p: &KagomeParams, grid: usize) -> f64 {
    (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            let h = kagome_bloch(p, TAU * i as f64 / grid as f64, TAU * j as f64 / grid as f64);
            linalg::eigenvalues(&h).iter().map(|z| z.im.abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Rejects parameter sets whose spectrum is not real on the grid.
pub fn check_stable(p: &KagomeParams, grid: usize, tol: f64) -> Result<()> {
    let max_imag = kagome_max_imag(p, grid);
    if max_imag > tol * (p.omega0.abs() + 4.0 * p.j.abs() + p.nu.abs()) {
        return Err(Error::Unstable { max_imag });
    }
    Ok(())
}

/// Result of scanning ω₀ for a stable, gapped point with quantised Chern
/// numbers.
#[derive(Debug, Clone)]
pub struct TopologicalPoint {
    pub params: KagomeParams,
    pub groups: Vec<GroupChern>,
}

/// Walks ω₀ = start, start + step, ... and returns the first stable point
/// whose bands are all isolated, quantised to `quant_tol`, and carry some
/// nonzero Chern number.
pub fn scan_topological_point(j: f64, nu: f64, start: f64, step: f64, max_points: usize, grid: usize, quant_tol: f64) -> Option<TopologicalPoint> {
    for k in 0..max_points {
        let p = KagomeParams::new(start + step * k as f64, j, nu);
        if check_stable(&p, grid, 1e-9).is_err() {
            continue;
        }
        let Ok(groups) = chern_all(&kagome_field(p), grid) else { continue };
        let isolated = groups.iter().all(|g| g.bands.len() == 1);
        let quantised = groups.iter().all(|g| (g.lr.value - g.lr.rounded as f64).abs() < quant_tol);
        let nontrivial = groups.iter().any(|g| g.lr.rounded != 0);
        if isolated && quantised && nontrivial {
            return Some(TopologicalPoint { params: p, groups });
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct StripSpectrum {
    pub width: usize,
    pub k_par: Vec<f64>,
    /// Eigenvalues per k_par, sorted by (Re, Im).
    pub energies: Vec<Vec<C64>>,
    /// Fraction of each eigenvector's weight in the outer two cells.
    pub edge_weights: Vec<Vec<f64>>,
    /// Symplectic sign of each eigenvector.
    pub signs: Vec<Vec<i8>>,
}

/// Bonds (s, s', m₁, m₂): site s of cell R couples to s' of cell R + m₁a₁ + m₂a₂.
const BONDS: [(usize, usize, i64, i64); 6] = [
    (0, 1, 0, 0),
    (0, 1, -1, 0),
    (0, 2, 0, 0),
    (0, 2, -1, -1),
    (1, 2, 0, 0),
    (1, 2, 0, -1),
];

/// Strip periodic along a₂ (momentum k_par = k·a₂) and open along a₁.
pub fn strip_matrix(p: &KagomeParams, width: usize, k_par: f64) -> CMat {
    let dim = 3 * width;
    let mut t = linalg::zeros(dim, dim);
    for n1 in 0..width as i64 {
        for &(s, sp, m1, m2) in &BONDS {
            let n2 = n1 + m1;
            if n2 < 0 || n2 >= width as i64 {
                continue;
            }
            let ph = c((k_par * m2 as f64).cos(), (k_par * m2 as f64).sin());
            let a = 3 * n1 as usize + s;
            let b = 3 * n2 as usize + sp;
            t[(a, b)] += ph;
            t[(b, a)] += ph.conj();
        }
    }
    let k = linalg::identity(dim) * cr(p.omega0) - t * cr(p.j);
    let h1 = pairing_block(p);
    let mut h = linalg::zeros(dim, dim);
    for n in 0..width {
        h.view_mut((3 * n, 3 * n), (3, 3)).copy_from(&h1);
    }
    block2(&k, &h, &(-h.adjoint()), &(-k.clone()))
}

pub fn strip_spectrum(p: &KagomeParams, width: usize, k_par: &[f64]) -> Result<StripSpectrum> {
    if width < 8 {
        return Err(Error::Precondition("strip width must be at least 8 cells".into()));
    }
    let dim = 3 * width;
    let eta = linalg::sigma_z(dim, dim);
    let rows: Vec<(Vec<C64>, Vec<f64>, Vec<i8>)> = k_par
        .par_iter()
        .map(|&k| {
            let m = strip_matrix(p, width, k);
            let e = linalg::eig(&m);
            let mut order: Vec<usize> = (0..e.values.len()).collect();
            order.sort_by(|&a, &b| e.values[a].re.total_cmp(&e.values[b].re).then(e.values[a].im.total_cmp(&e.values[b].im)));
            let vals = order.iter().map(|&i| e.values[i]).collect();
            let weights = order
                .iter()
                .map(|&i| {
                    let v = e.vectors.column(i);
                    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                    let edge: f64 = (0..2 * dim)
                        .filter(|&r| {
                            let cell = (r % dim) / 3;
                            cell < 2 || cell + 2 >= width
                        })
                        .map(|r| v[r].norm_sqr())
                        .sum();
                    edge / total
                })
                .collect();
            let signs = order
                .iter()
                .map(|&i| {
                    let v = e.vectors.column(i);
                    if (v.adjoint() * &eta * v)[(0, 0)].re >= 0.0 { 1 } else { -1 }
                })
                .collect();
            (vals, weights, signs)
        })
        .collect();
    let mut out = StripSpectrum { width, k_par: k_par.to_vec(), energies: vec![], edge_weights: vec![], signs: vec![] };
    for (v, w, s) in rows {
        out.energies.push(v);
        out.edge_weights.push(w);
        out.signs.push(s);
    }
    Ok(out)
}

/// A strip eigenstate whose energy lies outside every bulk band projected
/// onto its k_par.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InGapState {
    pub k_index: usize,
    pub energy: C64,
    pub edge_weight: f64,
    /// Distance to the nearest projected bulk band.
    pub depth: f64,
}

/// Range [min, max] of Re λ for each bulk band at fixed k·a₂, over n_theta
/// samples of k·a₁.
pub fn projected_bands(p: &KagomeParams, k_par: f64, n_theta: usize) -> Result<Vec<(f64, f64)>> {
    let field = kagome_field(*p);
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); 6];
    for i in 0..n_theta {
        let kp = kpoint(&field, TAU * i as f64 / n_theta as f64, k_par)?;
        for (r, v) in ranges.iter_mut().zip(&kp.values) {
            r.0 = r.0.min(v.re);
            r.1 = r.1.max(v.re);
        }
    }
    Ok(ranges)
}

/// Strip states lying more than `margin` outside all projected bulk bands.
pub fn in_gap_states(p: &KagomeParams, strip: &StripSpectrum, n_theta: usize, margin: f64) -> Result<Vec<InGapState>> {
    let mut out = Vec::new();
    for (k_index, &k) in strip.k_par.iter().enumerate() {
        let ranges = projected_bands(p, k, n_theta)?;
        for (e, &w) in strip.energies[k_index].iter().zip(&strip.edge_weights[k_index]) {
            let inside = ranges.iter().any(|&(lo, hi)| e.re >= lo - margin && e.re <= hi + margin);
            if inside {
                continue;
            }
            let depth = ranges
                .iter()
                .map(|&(lo, hi)| (lo - e.re).max(e.re - hi))
                .fold(f64::INFINITY, f64::min);
            out.push(InGapState { k_index, energy: *e, edge_weight: w, depth });
        }
    }
    Ok(out)
}

/// Energy window (top of `band`, bottom of `band + 1`) that is free of bulk
/// states over the whole n×n grid, if one exists. Bands follow the
/// sign-then-real ordering of [`chern_all`].
pub fn global_gap(p: &KagomeParams, band: usize, grid: usize) -> Result<Option<(f64, f64)>> {
    if band + 1 >= 6 {
        return Err(Error::InvalidInput(format!("no band above {band}")));
    }
    let g = band_grid(&kagome_field(*p), grid)?;
    let (mut top, mut bottom) = (f64::NEG_INFINITY, f64::INFINITY);
    for pt in &g.points {
        top = top.max(pt.values[band].re);
        bottom = bottom.min(pt.values[band + 1].re);
    }
    let scale = p.omega0.abs() + 4.0 * p.j.abs() + p.nu.abs();
    Ok((bottom - top > GAP_THRESHOLD * scale).then_some((top, bottom)))
}

/// Signed number of edge branches crossing a reference energy as k_par
/// winds once, per edge. Upward crossings count +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeFlow {
    pub left: i32,
    pub right: i32,
}

/// Spectral flow through `energy`, which must lie in a global gap. Each
/// eigenvalue is assigned to the edge holding the centre of mass of its
/// weight (outer quarter of the strip); crossings are read off the
/// eigenvalue of each edge closest to `energy` at consecutive k_par.
pub fn edge_spectral_flow(p: &KagomeParams, width: usize, energy: f64, n_k: usize) -> Result<EdgeFlow> {
    if width < 8 {
        return Err(Error::Precondition("strip width must be at least 8 cells".into()));
    }
    let ks: Vec<f64> = (0..n_k).map(|i| TAU * i as f64 / n_k as f64).collect();
    let dim = 3 * width;
    // nearest eigenvalue to `energy` localized on (left, right) at each k
    let nearest: Vec<[Option<f64>; 2]> = ks
        .par_iter()
        .map(|&k| {
            let e = linalg::eig(&strip_matrix(p, width, k));
            let mut best = [None::<f64>; 2];
            for (i, z) in e.values.iter().enumerate() {
                let v = e.vectors.column(i);
                let total: f64 = v.iter().map(|x| x.norm_sqr()).sum();
                let centre = (0..2 * dim).map(|r| ((r % dim) / 3) as f64 * v[r].norm_sqr()).sum::<f64>() / total;
                let side = if centre < 0.25 * (width - 1) as f64 {
                    0
                } else if centre > 0.75 * (width - 1) as f64 {
                    1
                } else {
                    continue;
                };
                if best[side].is_none_or(|b: f64| (z.re - energy).abs() < (b - energy).abs()) {
                    best[side] = Some(z.re);
                }
            }
            best
        })
        .collect();
    let mut flow = [0i32; 2];
    for i in 0..n_k {
        let j = (i + 1) % n_k;
        for side in 0..2 {
            if let (Some(a), Some(b)) = (nearest[i][side], nearest[j][side]) {
                if (a - energy) * (b - energy) < 0.0 {
                    flow[side] += if b > a { 1 } else { -1 };
                }
            }
        }
    }
    Ok(EdgeFlow { left: flow[0], right: flow[1] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeAwayReport {
    pub equal: bool,
    pub max_deviation: f64,
    /// The gauge argument applies to the φ = 2π/3 flux pattern only.
    pub checked_pattern: bool,
}

/// At ν = 0, compares the spectrum with the union of ±(ω₀ − Jτ(k)) spectra
/// on an n×n grid.
pub fn gauge_away_check(p: &KagomeParams, grid: usize) -> Result<GaugeAwayReport> {
    if p.nu != 0.0 {
        return Err(Error::Precondition("gauge-away check requires nu = 0".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..grid {
        for j in 0..grid {
            let (a, b) = (TAU * i as f64 / grid as f64, TAU * j as f64 / grid as f64);
            let got = linalg::eigenvalues(&kagome_bloch(p, a, b));
            let k = linalg::identity(3) * cr(p.omega0) - kagome_tau(a, b) * cr(p.j);
            let (vals, _) = linalg::hermitian_eig(&k);
            let want: Vec<C64> = vals.iter().flat_map(|&v| [cr(v), cr(-v)]).collect();
            worst = worst.max(linalg::spectrum_distance(&got, &want));
        }
    }
    let scale = p.omega0.abs() + 4.0 * p.j.abs();
    Ok(GaugeAwayReport {
        equal: worst <= 1e-10 * scale.max(1.0),
        max_deviation: worst,
        checked_pattern: (p.phi - TAU / 3.0).abs() < 1e-12,
    })
}

/// Uniform momentum grid over [−π, π).
pub fn k_parallel_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + TAU * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_at_gamma_point() {
        let t = kagome_tau(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 2.0 };
                assert!((t[(i, j)] - cr(want)).norm() < 1e-15);
            }
        }
        let p = KagomeParams::new(2.0, 1.0, 0.0);
        let k = linalg::identity(3) * cr(p.omega0) - t;
        let (vals, _) = linalg::hermitian_eig(&k);
        assert!((vals[0] + 2.0).abs() < 1e-12 && (vals[1] - 4.0).abs() < 1e-12 && (vals[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cartesian_round_trip() {
        let (a, b) = reduced_k(cartesian_k(0.3, -1.1));
        assert!((a - 0.3).abs() < 1e-14 && (b + 1.1).abs() < 1e-14);
    }

    #[test]
    fn pt_form_has_onsite_gain_and_loss() {
        let p = KagomeParams::new(2.0, 1.0, 0.2);
        let m = kagome_pt_bloch(&p, 0.4, 1.3);
        for s in 0..3 {
            assert!((m[(s, s)] - c(0.0, -0.2)).norm() < 1e-12);
            assert!((m[(3 + s, 3 + s)] - c(0.0, 0.2)).norm() < 1e-12);
        }
        let d = linalg::sub(&m, 0, 3, 3, 3);
        let dl = linalg::sub(&m, 3, 0, 3, 3);
        assert!(frob(&(d - dl)) < 1e-12);
    }

    #[test]
    fn strip_blocks_have_bdg_structure() {
        let p = KagomeParams::new(4.5, 1.0, 0.2);
        let w = 8;
        let m = strip_matrix(&p, w, 0.7);
        assert_eq!(m.nrows(), 6 * w);
        let k = linalg::sub(&m, 0, 0, 3 * w, 3 * w);
        let h = linalg::sub(&m, 0, 3 * w, 3 * w, 3 * w);
        assert!(frob(&(&k - k.adjoint())) < 1e-14);
        assert!(frob(&(linalg::sub(&m, 3 * w, 3 * w, 3 * w, 3 * w) + &k)) < 1e-14);
        assert!(frob(&(linalg::sub(&m, 3 * w, 0, 3 * w, 3 * w) + h.adjoint())) < 1e-14);
        // each interior A site has four neighbours
        let row = 3 * 4;
        let bonds = (0..3 * w).filter(|&c| c != row && k[(row, c)].norm() > 0.0).count();
        assert_eq!(bonds, 4);
    }
}

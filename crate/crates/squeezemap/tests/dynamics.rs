use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use squeezemap::dynamics::*;
use squeezemap::encircling::{Direction, EncirclingPath};
use squeezemap::linalg::{self, c, cr, frob, CMat, RMat, C64};
use squeezemap::models::{build_detuned_dimer, build_pt_dimer};
use squeezemap::spectral::NonHermitianHamiltonian;
use squeezemap::Error;

/// exp(−iHt) for traceless 2×2 H, using H² = −det(H)·I.
fn expm_traceless_2x2(h: &CMat, t: f64) -> CMat {
    let lam = (-h.determinant()).sqrt();
    let id = linalg::identity(2);
    let sinc = if lam.norm() < 1e-12 { cr(t) } else { (lam * cr(t)).sin() / lam };
    id * (lam * cr(t)).cos() - h * (linalg::I * sinc)
}

/// Classic fixed-step RK4 for i dU/dt = H(t) U.
fn rk4<F: Fn(f64) -> CMat>(h: F, t_end: f64, steps: usize) -> CMat {
    let dt = t_end / steps as f64;
    let mi = c(0.0, -1.0);
    let mut u = linalg::identity(2);
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = h(t) * &u * mi;
        let k2 = h(t + dt / 2.0) * (&u + &k1 * cr(dt / 2.0)) * mi;
        let k3 = h(t + dt / 2.0) * (&u + &k2 * cr(dt / 2.0)) * mi;
        let k4 = h(t + dt) * (&u + &k3 * cr(dt)) * mi;
        u += (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(dt / 6.0);
    }
    u
}

#[test]
fn constant_dimer_propagator_matches_closed_form() {
    for (w, g, gamma) in [(0.0, 1.0, 1.0), (0.2, 0.3, 1.0), (0.0, 0.5, 1.0)] {
        let h = build_detuned_dimer(w, g, gamma);
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
        let s = evolve_propagator(&h, &grid, 1e-10).unwrap();
        for (t, u) in s.times.iter().zip(&s.propagators) {
            let want = expm_traceless_2x2(h.matrix(), *t);
            assert!(frob(&(u - &want)) <= 1e-8 * frob(&want).max(1.0), "t {t}");
        }
    }
}

#[test]
fn time_dependent_propagator_matches_rk4() {
    let path = EncirclingPath::around_ep(1.0, 0.1, 20.0, Direction::Ccw).unwrap();
    let s = evolve_propagator(&path.hamiltonian(), &path.times(400), 1e-10).unwrap();
    let want = rk4(|t| path.hamiltonian_at(t), 20.0, 40_000);
    assert!(frob(&(s.last() - &want)) <= 1e-7 * frob(&want), "{}", frob(&(s.last() - &want)));
}

#[test]
fn overflow_is_a_step_failure() {
    let h = NonHermitianHamiltonian::new(linalg::from_rows(&[&[c(0.0, 10.0), cr(0.0)], &[cr(0.0), cr(0.0)]])).unwrap();
    let r = evolve_propagator(&h, &[0.0, 5.0], 1e-8);
    assert!(matches!(r, Err(Error::StepFailure { .. })));
}

#[test]
fn two_mode_squeezed_vacuum_negativity() {
    for r in [0.1f64, 0.7, 1.5] {
        let s = SymplecticTransform {
            a_block: linalg::identity(2) * cr(r.cosh()),
            b_block: linalg::sigma_nx(1) * cr(r.sinh()),
            propagator: None,
        };
        assert!(s.symplectic_residual() < 1e-12);
        let st = apply_symplectic(&GaussianState::vacuum(2), &s).unwrap();
        let en = log_negativity(&st, &[0]).unwrap();
        assert!((en - 2.0 * r / std::f64::consts::LN_2).abs() < 1e-10);
        let n = st.photon_numbers();
        assert!(n.iter().all(|x| (x - r.sinh().powi(2)).abs() < 1e-12));
    }
}

#[test]
fn bloch_messiah_needs_a_propagator() {
    assert!(matches!(bloch_messiah(&SymplecticTransform::identity(2)), Err(Error::Precondition(_))));
}

#[test]
fn bloch_messiah_on_fifty_random_propagators() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let u = linalg::random_complex(2, 2, &mut rng);
        let s = qmfs_symplectic(&u).unwrap();
        let bm = bloch_messiah(&s).unwrap();
        assert!(bm.reconstruction_residual(&s) <= 1e-9);
        assert!(bm.constraint_residual() <= 1e-10);
        assert!(linalg::unitarity_residual(&bm.u_bm) < 1e-10);
        assert!(linalg::unitarity_residual(&bm.v_bm) < 1e-10);
    }
}

#[test]
fn unphysical_covariance_rejected() {
    let r = GaussianState::new(DVector::zeros(4), RMat::identity(4, 4) * 0.1);
    assert!(matches!(r, Err(Error::UnphysicalState { .. })));
}

#[test]
fn bad_partitions_rejected() {
    let v = GaussianState::vacuum(2);
    assert!(log_negativity(&v, &[]).is_err());
    assert!(log_negativity(&v, &[0, 1]).is_err());
    assert!(log_negativity(&v, &[5]).is_err());
}

#[test]
fn coherent_state_means() {
    let a = [c(0.3, -0.2), c(1.0, 0.5)];
    let st = GaussianState::coherent(&a);
    let m = st.mode_means();
    for (x, y) in m.iter().zip(&a) {
        assert!((x - y).norm() < 1e-15);
    }
    let n = st.photon_numbers();
    assert!((n[1] - 1.25).abs() < 1e-14);
}

#[test]
fn propagator_series_counts_steps() {
    let s = evolve_propagator(&build_pt_dimer(1.0, 1.0), &[0.0, 1.0, 2.0], 1e-10).unwrap();
    assert_eq!(s.propagators.len(), 3);
    assert!(s.accepted_steps >= 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn liouville_determinant(seed in 0u64..10_000, t in 0.1f64..2.0) {
        let m = linalg::random_complex(2, 2, &mut ChaCha8Rng::seed_from_u64(seed)) * cr(0.5);
        let tr = m.trace();
        let s = evolve_propagator(&NonHermitianHamiltonian::new(m).unwrap(), &[0.0, t], 1e-11).unwrap();
        let want = (linalg::I * (-tr) * cr(t)).exp();
        prop_assert!((s.last().determinant() - want).norm() < 1e-8 * want.norm().max(1.0));
    }

    #[test]
    fn qmfs_transforms_are_symplectic(seed in 0u64..10_000, n in 1usize..4) {
        let u = linalg::random_complex(n, n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(linalg::condition_number(&u) < 1e6);
        let s = qmfs_symplectic(&u).unwrap();
        prop_assert!(s.symplectic_residual() <= 1e-8 * linalg::condition_number(&u).powi(2));
        let r = s.real_matrix();
        let o = symplectic_form(2 * n);
        prop_assert!((&r * &o * r.transpose() - &o).norm() <= 1e-8 * r.norm().powi(2));
    }

    #[test]
    fn purity_is_preserved(seed in 0u64..10_000) {
        let u = linalg::random_complex(2, 2, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(linalg::condition_number(&u) < 1e4);
        let st = apply_symplectic(&GaussianState::vacuum(4), &qmfs_symplectic(&u).unwrap()).unwrap();
        prop_assert!((st.purity_det() - 1.0).abs() < 1e-8);
        let nu = symplectic_eigenvalues(&st.cov);
        prop_assert!(nu.iter().all(|x| (x - 0.5).abs() < 1e-8));
    }

    #[test]
    fn vacuum_photons_follow_the_trace_law(seed in 0u64..10_000) {
        let u: CMat = linalg::random_complex(1, 1, &mut ChaCha8Rng::seed_from_u64(seed));
        let s = qmfs_symplectic(&u).unwrap();
        let st = apply_symplectic(&GaussianState::vacuum(2), &s).unwrap();
        let x: C64 = u[(0, 0)];
        let n = (x.norm() - 1.0 / x.norm()).powi(2) / 4.0;
        prop_assert!(st.photon_numbers().iter().all(|p| (p - n).abs() < 1e-9 * n.max(1.0)));
    }
}

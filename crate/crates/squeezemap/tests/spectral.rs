use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use squeezemap::linalg::{self, c, cr, frob, spectrum_distance, C64};
use squeezemap::models::*;
use squeezemap::spectral::*;
use squeezemap::Error;

fn dimer_closed_form(g: f64, gamma: f64) -> [C64; 2] {
    let d = g * g - gamma * gamma / 4.0;
    let l = if d >= 0.0 { cr(d.sqrt()) } else { c(0.0, (-d).sqrt()) };
    [l, -l]
}

#[test]
fn dimer_spectrum_over_a_grid() {
    let mut worst = 0.0f64;
    for i in 0..50 {
        for j in 0..50 {
            let g = 0.013 + 1.9 * i as f64 / 49.0;
            let gamma = 0.021 + 3.7 * j as f64 / 49.0;
            let got = linalg::eigenvalues(build_pt_dimer(g, gamma).matrix());
            worst = worst.max(spectrum_distance(&got, &dimer_closed_form(g, gamma)));
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn library_dimer_formula_matches() {
    for (g, gamma) in [(1.0, 1.0), (0.2, 1.0), (0.5, 1.0), (3.0, 0.1)] {
        let a = pt_dimer_eigenvalues(g, gamma);
        assert!(spectrum_distance(&a, &dimer_closed_form(g, gamma)) < 1e-15);
    }
}

#[test]
fn pt_phase_boundary_by_bisection() {
    for gamma in [0.3, 1.0, 2.7] {
        let broken = |g: f64| classify_pt_phase(&build_pt_dimer(g, gamma), DEFAULT_TOL) == PtPhase::Broken;
        let (mut lo, mut hi) = (0.0, 2.0 * gamma);
        assert!(broken(lo + 1e-3) && !broken(hi));
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if broken(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - gamma / 2.0).abs() < 1e-6 * gamma, "gamma {gamma}: boundary {lo}");
    }
}

#[test]
fn phases_on_either_side() {
    assert_eq!(classify_pt_phase(&build_pt_dimer(1.0, 1.0), DEFAULT_TOL), PtPhase::Unbroken);
    assert_eq!(classify_pt_phase(&build_pt_dimer(0.2, 1.0), DEFAULT_TOL), PtPhase::Broken);
    assert_eq!(classify_pt_phase(&build_pt_dimer(0.5, 1.0), DEFAULT_TOL), PtPhase::ExceptionalPoint);
}

#[test]
fn ep_orders() {
    assert_eq!(ep_detect(&build_pt_dimer(0.5, 1.0), DEFAULT_TOL).ep_order, 2);
    let g3 = 2f64.sqrt() / 4.0;
    let r = ep_detect(&build_hoep_trimer(g3, 1.0, 0.0), DEFAULT_TOL);
    assert_eq!(r.ep_order, 3);
    assert!(r.cluster_center.norm() < 1e-4);
    assert!(!ep_detect(&build_pt_dimer(0.9, 1.0), DEFAULT_TOL).is_defective);
}

#[test]
fn biorthogonal_eig_rejects_the_ep() {
    let r = biorthogonal_eig(&build_pt_dimer(0.5, 1.0), DEFAULT_TOL);
    assert!(matches!(r, Err(Error::DefectiveMatrix { .. })));
}

#[test]
fn dimer_is_pseudo_hermitian_and_pt_symmetric() {
    let h = build_pt_dimer(0.7, 1.0);
    let sx = linalg::sigma_nx(1);
    assert!(check_pseudo_hermitian(h.matrix(), &sx, 1e-12).unwrap());
    assert!(check_pt_symmetry(h.matrix(), &sx, 1e-12));
    assert!(!check_pt_symmetry(build_detuned_dimer(0.3, 0.7, 1.0).matrix(), &linalg::identity(2), 1e-12));
    let singular = linalg::from_rows(&[&[cr(1.0), cr(1.0)], &[cr(1.0), cr(1.0)]]);
    assert!(matches!(check_pseudo_hermitian(h.matrix(), &singular, 1e-12), Err(Error::SingularEta)));
}

#[test]
fn conserved_quadrature_counts() {
    let dpa = build_dpa(0.8, 0.8).unwrap();
    let q = conserved_quadratures(&dpa, 1e-10);
    assert_eq!(q.len(), 1);
    let k = quadrature_dynamical_matrix(&dpa);
    assert!((&k * &q[0]).norm() <= 1e-10);
    assert!(conserved_quadratures(&build_dpa(1.3, 0.8).unwrap(), 1e-10).is_empty());

    let hoep = build_hoep_ndpa(2f64.sqrt() / 4.0, 1.0, 0.0).unwrap();
    let q = conserved_quadratures(&hoep, 1e-10);
    assert_eq!(q.len(), 2);
    let k = quadrature_dynamical_matrix(&hoep);
    for v in &q {
        assert!((&k * v).norm() <= 1e-10);
    }
}

#[test]
fn time_dependent_hamiltonian_samples_its_generator() {
    let h = NonHermitianHamiltonian::time_dependent(|t| build_pt_dimer(1.0 + t, 1.0).matrix().clone()).unwrap();
    assert!(h.is_time_dependent());
    assert!(frob(&(h.at(0.5) - build_pt_dimer(1.5, 1.0).matrix())) < 1e-15);
}

#[test]
fn non_finite_matrix_rejected() {
    let m = linalg::from_rows(&[&[cr(f64::NAN), cr(0.0)], &[cr(0.0), cr(1.0)]]);
    assert!(NonHermitianHamiltonian::new(m).is_err());
}

#[test]
fn pt_chain_spectrum_is_conjugation_closed() {
    let h = build_pt_chain(&PtChainSpec::ssh(4, 1.0, 0.3, 0.2).unwrap());
    let ev = linalg::eigenvalues(h.matrix());
    let conj: Vec<C64> = ev.iter().map(|z| z.conj()).collect();
    assert!(spectrum_distance(&ev, &conj) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimer_eigenvalues_random(g in 0.01f64..5.0, gamma in 0.01f64..5.0) {
        prop_assume!((g - gamma / 2.0).abs() > 1e-3);
        let got = linalg::eigenvalues(build_pt_dimer(g, gamma).matrix());
        prop_assert!(spectrum_distance(&got, &dimer_closed_form(g, gamma)) < 1e-11);
    }

    #[test]
    fn phase_invariant_under_unitary_conjugation(g in 0.05f64..2.0, gamma in 0.05f64..2.0, seed in 0u64..1000) {
        prop_assume!((g - gamma / 2.0).abs() > 0.05);
        let h = build_pt_dimer(g, gamma);
        let u = linalg::random_unitary(2, &mut ChaCha8Rng::seed_from_u64(seed));
        let rotated = NonHermitianHamiltonian::new(u.adjoint() * h.matrix() * &u).unwrap();
        prop_assert_eq!(classify_pt_phase(&h, DEFAULT_TOL), classify_pt_phase(&rotated, DEFAULT_TOL));
    }

    #[test]
    fn biorthogonal_system_reconstructs(seed in 0u64..10_000, n in 2usize..6) {
        let m = linalg::random_complex(n, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let e = biorthogonal_eig_matrix(&m, DEFAULT_TOL).unwrap();
        prop_assert!(e.reconstruction_residual(&m) < 1e-10 * e.condition.max(1.0));
        prop_assert!(e.biorthogonality_residual() < 1e-10 * e.condition.max(1.0));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0].re <= w[1].re));
    }

    #[test]
    fn bdg_spectrum_has_particle_hole_pairs(delta in -2.0f64..2.0, nu in 0.0f64..2.0) {
        let ev = linalg::eigenvalues(&build_dpa(delta, nu).unwrap().dynamical_matrix());
        let neg: Vec<C64> = ev.iter().map(|z| -z.conj()).collect();
        prop_assert!(spectrum_distance(&ev, &neg) < 1e-10);
    }
}

use nalgebra::DVector;
use proptest::prelude::*;
use squeezemap::dynamics::GaussianState;
use squeezemap::encircling::*;
use squeezemap::linalg::{self, cr, frob, C64};
use squeezemap::Error;

const GAMMA: f64 = 1.0;
const RADIUS: f64 = 0.1;
const DURATION: f64 = 20.0;
const STEPS: usize = 2000;
const RTOL: f64 = 1e-10;

fn ep_loop(d: Direction) -> EncirclingPath {
    EncirclingPath::around_ep(GAMMA, RADIUS, DURATION, d).unwrap()
}

fn asymmetric_state(path: &EncirclingPath) -> GaussianState {
    let (g, w) = path.path_at(0.0);
    let [(_, rp), (_, rm)] = instantaneous_pairs(g, w, path.gamma);
    build_asymmetric_state(10f64.ln(), &rp, &rm).unwrap()
}

#[test]
fn path_orientation_and_closure() {
    let ccw = ep_loop(Direction::Ccw);
    let cw = ep_loop(Direction::Cw);
    let (g, w) = ccw.path_at(DURATION / 4.0);
    assert!((g - 0.5).abs() < 1e-12 && (w - RADIUS).abs() < 1e-12);
    let (_, w) = cw.path_at(DURATION / 4.0);
    assert!((w + RADIUS).abs() < 1e-12);
    let (a, b) = (ccw.path_at(0.0), ccw.path_at(DURATION));
    assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    assert_eq!(path_at(&ccw, 3.0), ccw.path_at(3.0));
}

#[test]
fn invalid_paths_rejected() {
    assert!(EncirclingPath::new(0.5, 0.1, 0.0, Direction::Ccw, 1.0).is_err());
    assert!(EncirclingPath::new(0.5, -0.1, 1.0, Direction::Ccw, 1.0).is_err());
}

#[test]
fn branch_swap_bookkeeping() {
    for d in [Direction::Ccw, Direction::Cw] {
        assert!(eigenframe_trace(&ep_loop(d), STEPS).unwrap().branches_swapped());
        let far = EncirclingPath::new(GAMMA / 2.0 + 3.0 * RADIUS, RADIUS, DURATION, d, GAMMA).unwrap();
        assert!(!eigenframe_trace(&far, STEPS).unwrap().branches_swapped());
    }
}

#[test]
fn tracking_fails_through_the_ep() {
    let p = EncirclingPath::around_ep(GAMMA, 0.0, DURATION, Direction::Ccw).unwrap();
    assert!(matches!(eigenframe_trace(&p, STEPS), Err(Error::BranchCrossing { .. })));
}

#[test]
fn chiral_switching() {
    let ccw = ep_loop(Direction::Ccw);
    let cw = ep_loop(Direction::Cw);
    let st = initial_branch_state(&ccw);
    let a = run_encircling(&ccw, &st, STEPS, RTOL).unwrap();
    let b = run_encircling(&cw, &st, STEPS, RTOL).unwrap();
    let (p, m) = a.trace.final_amplitudes();
    assert!(p.norm() > m.norm(), "ccw {} {}", p.norm(), m.norm());
    let (p, m) = b.trace.final_amplitudes();
    assert!(m.norm() > p.norm(), "cw {} {}", p.norm(), m.norm());
    assert!((a.trace.c_plus[0] - cr(1.0)).norm() < 1e-12);
    assert!(a.trace.c_minus[0].norm() < 1e-12);
    assert!(chirality_metric(&b, &a).amplitude_log_ratio > 0.0);
}

#[test]
fn vacuum_entanglement_is_direction_blind_and_closed_form() {
    let v = GaussianState::vacuum(4);
    let a = run_encircling(&ep_loop(Direction::Ccw), &v, STEPS, RTOL).unwrap();
    let b = run_encircling(&ep_loop(Direction::Cw), &v, STEPS, RTOL).unwrap();
    let (ea, eb) = (*a.entanglement.last().unwrap(), *b.entanglement.last().unwrap());
    assert!((ea - eb).abs() <= 1e-8);
    // pure state whose a-subsystem is two uncorrelated thermal modes with
    // n = sinh²λ_s each: E_N = 2·(2λ_s)/ln 2
    let ls = squeezing_from_trace(a.propagators.last().unwrap());
    assert!((ea - 4.0 * ls / std::f64::consts::LN_2).abs() <= 1e-6 * ea.max(1.0), "{ea} vs {}", 4.0 * ls / std::f64::consts::LN_2);
    let n = ls.sinh().powi(2);
    for p in a.final_state().photon_numbers() {
        assert!((p - n).abs() <= 1e-8 * n.max(1.0));
    }
    assert!((ls - squeezing_from_trace(b.propagators.last().unwrap())).abs() < 1e-9);
}

#[test]
fn transpose_duality_of_the_loop_propagators() {
    let a = run_encircling(&ep_loop(Direction::Ccw), &GaussianState::vacuum(4), STEPS, RTOL).unwrap();
    let b = run_encircling(&ep_loop(Direction::Cw), &GaussianState::vacuum(4), STEPS, RTOL).unwrap();
    let (ua, ub) = (a.propagators.last().unwrap(), b.propagators.last().unwrap());
    assert!(frob(&(ub - ua.transpose())) <= 1e-7 * frob(ua));
}

#[test]
fn mean_amplitudes_follow_the_bare_propagator() {
    let path = ep_loop(Direction::Cw);
    let z0 = [C64::new(0.3, -0.1), C64::new(-0.2, 0.4)];
    let run = run_encircling(&path, &coherent_pseudo_state(&z0), 400, RTOL).unwrap();
    let z0v = DVector::from_vec(z0.to_vec());
    for (st, u) in run.states.iter().zip(&run.propagators).step_by(20) {
        let want = u * &z0v;
        let got = DVector::from_vec(pseudo_mode_means(st));
        assert!((got - &want).norm() <= 10.0 * RTOL * want.norm().max(1.0));
    }
}

#[test]
fn entanglement_is_nonnegative_and_starts_equal() {
    let ccw = ep_loop(Direction::Ccw);
    let st = asymmetric_state(&ccw);
    let a = run_encircling(&ccw, &st, 500, RTOL).unwrap();
    let b = run_encircling(&ep_loop(Direction::Cw), &st, 500, RTOL).unwrap();
    assert!(a.entanglement.iter().chain(&b.entanglement).all(|&e| e >= 0.0));
    assert!((a.entanglement[0] - b.entanglement[0]).abs() <= 1e-12);
    assert!(a.max_symplectic_residual <= 1e-8 && b.max_symplectic_residual <= 1e-8);
    assert_eq!(chirality_metric(&a, &a).entanglement_gap, 0.0);
}

#[test]
fn asymmetric_state_properties() {
    let path = ep_loop(Direction::Ccw);
    let (g, w) = path.path_at(0.0);
    let [(_, rp), (_, rm)] = instantaneous_pairs(g, w, GAMMA);
    let vac = build_asymmetric_state(0.0, &rp, &rm).unwrap();
    assert!((vac.cov.clone() - linalg::RMat::identity(8, 8) * 0.5).norm() < 1e-12);

    let st = build_asymmetric_state(10f64.ln(), &rp, &rm).unwrap();
    let total: f64 = st.photon_numbers().iter().sum();
    assert!((total - 100.0).abs() <= 20.0, "{total}");
    assert!((st.purity_det() - 1.0).abs() < 1e-8);
    assert!(build_asymmetric_state(-1.0, &rp, &rm).is_err());
    assert!(matches!(build_asymmetric_state(1.0, &rp, &rp), Err(Error::Precondition(_))));
}

#[test]
fn halving_the_step_leaves_metrics_unchanged() {
    let ccw = ep_loop(Direction::Ccw);
    let cw = ep_loop(Direction::Cw);
    let metric = |st: &GaussianState, n: usize| {
        let a = run_encircling(&ccw, st, n, RTOL).unwrap();
        let b = run_encircling(&cw, st, n, RTOL).unwrap();
        chirality_metric(&b, &a)
    };
    let coherent = initial_branch_state(&ccw);
    let (a1, a2) = (metric(&coherent, STEPS), metric(&coherent, 2 * STEPS));
    assert!((a1.amplitude_log_ratio - a2.amplitude_log_ratio).abs() < 1e-6);
    let squeezed = asymmetric_state(&ccw);
    let (e1, e2) = (metric(&squeezed, STEPS), metric(&squeezed, 2 * STEPS));
    assert!((e1.entanglement_gap - e2.entanglement_gap).abs() < 1e-6 * e2.entanglement_gap);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn instantaneous_pairs_are_eigenpairs(g in 0.05f64..2.0, w in -0.5f64..0.5) {
        for (lam, r) in instantaneous_pairs(g, w, GAMMA) {
            let m = squeezemap::models::build_detuned_dimer(w, g, GAMMA);
            let rv = DVector::from_vec(r.to_vec());
            prop_assert!((m.matrix() * &rv - &rv * lam).norm() < 1e-10);
            prop_assert!((r[0] * r[0] + r[1] * r[1] - cr(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn vacuum_direction_blindness_for_any_centre(g0 in 0.3f64..1.5) {
        let mk = |d| EncirclingPath::new(g0, RADIUS, DURATION, d, GAMMA).unwrap();
        prop_assume!((g0 - GAMMA / 2.0).abs() > 0.02 && (g0 - GAMMA / 2.0).abs() < RADIUS - 0.02 || (g0 - GAMMA / 2.0).abs() > RADIUS + 0.02);
        let a = run_encircling(&mk(Direction::Ccw), &GaussianState::vacuum(4), 400, RTOL).unwrap();
        let b = run_encircling(&mk(Direction::Cw), &GaussianState::vacuum(4), 400, RTOL).unwrap();
        prop_assert!((a.entanglement.last().unwrap() - b.entanglement.last().unwrap()).abs() <= 1e-8);
    }
}

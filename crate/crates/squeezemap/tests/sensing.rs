use proptest::prelude::*;
use squeezemap::sensing::*;
use squeezemap::Error;

/// Peak positions from f(ω) = 0, the minima of the flux denominator.
fn peak_oracle(cfg: &SensorConfig) -> Option<f64> {
    let d = cfg.effective_detuning();
    let w2 = d * d - cfg.nu * cfg.nu - cfg.kappa * cfg.kappa / 4.0;
    (w2 > 0.0).then(|| w2.sqrt())
}

#[test]
fn perturbed_ep_gives_two_peaks() {
    let cfg = SensorConfig::new(12.5, 12.5, 1.0, 0.7).unwrap();
    let w = uniform_grid(-10.0, 10.0, 20_001);
    let flux = flux_spectrum(&cfg, &w).unwrap();
    let peaks = find_peaks(&w, &flux);
    assert_eq!(peaks.len(), 2);
    let split = peaks[1].omega - peaks[0].omega;
    let oracle = 2.0 * peak_oracle(&cfg).unwrap();
    assert!((split - oracle).abs() < 1e-3, "{split} vs {oracle}");
    let predicted = ep_splitting_prediction(12.5, 0.7);
    assert!((predicted - 8.366).abs() < 1e-3);
    assert!((split / predicted - 1.0).abs() < 0.05);
}

#[test]
fn unperturbed_ep_gives_one_central_peak() {
    let cfg = SensorConfig::new(12.5, 12.5, 1.0, 0.0).unwrap();
    let w = uniform_grid(-10.0, 10.0, 20_001);
    let peaks = find_peaks(&w, &flux_spectrum(&cfg, &w).unwrap());
    assert_eq!(peaks.len(), 1);
    assert!(peaks[0].omega.abs() < 1e-6);
    assert!(peak_oracle(&cfg).is_none());
}

#[test]
fn threshold_is_a_pole() {
    let cfg = SensorConfig::new(0.0, 0.5, 1.0, 0.0).unwrap();
    assert!(cfg.above_threshold());
    assert!(matches!(reflection_flux(&cfg, 0.0), Err(Error::PoleEncountered { .. })));
    assert!(!SensorConfig::new(12.5, 12.5, 1.0, 0.0).unwrap().above_threshold());
}

#[test]
fn invalid_kappa_rejected() {
    assert!(SensorConfig::new(1.0, 1.0, 0.0, 0.0).is_err());
    assert!(SensorConfig::new(1.0, 1.0, -1.0, 0.0).is_err());
    assert!(SensorConfig::new(f64::NAN, 1.0, 1.0, 0.0).is_err());
}

#[test]
fn third_order_ep_scales_as_cube_root() {
    let eps = log_grid(1e-6, 1e-3, 13);
    let s = hoep_scaling_scan(1.0, &eps).unwrap();
    assert!((s.fitted_exponent - 1.0 / 3.0).abs() < 0.02, "{}", s.fitted_exponent);
    let d = dimer_scaling_scan(1.0, &eps).unwrap();
    assert!((d.fitted_exponent - 0.5).abs() < 0.02, "{}", d.fitted_exponent);
}

#[test]
fn dimer_splitting_matches_closed_form() {
    // g₀ + ε at γ = 2g₀ splits by 2√(2g₀ε + ε²)
    for (g0, e) in [(0.5f64, 1e-4f64), (1.0, 0.01), (2.0, 0.3)] {
        let want = 2.0 * (2.0 * g0 * e + e * e).sqrt();
        assert!((dimer_splitting(g0, e) - want).abs() < 1e-9 * want.max(1.0));
    }
}

#[test]
fn loglog_slope_of_a_power_law() {
    let x = log_grid(1e-3, 1.0, 7);
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.7)).collect();
    assert!((loglog_slope(&x, &y) - 0.7).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_even(delta in -5.0f64..5.0, nu in 0.0f64..5.0, eps in -1.0f64..1.0, w in 0.0f64..20.0) {
        let cfg = SensorConfig::new(delta, nu, 1.0, eps).unwrap();
        prop_assume!(!cfg.above_threshold());
        let a = reflection_flux(&cfg, w).unwrap();
        let b = reflection_flux(&cfg, -w).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn below_threshold_reflection_amplifies(delta in -5.0f64..5.0, nu in 0.0f64..5.0, w in -20.0f64..20.0) {
        let cfg = SensorConfig::new(delta, nu, 1.0, 0.0).unwrap();
        prop_assume!(!cfg.above_threshold());
        prop_assert!(reflection_flux(&cfg, w).unwrap() >= 1.0);
    }

    #[test]
    fn peaks_sit_at_the_oracle(eps in 0.3f64..2.0) {
        let cfg = SensorConfig::new(12.5, 12.5, 1.0, eps).unwrap();
        let w = uniform_grid(-15.0, 15.0, 30_001);
        let peaks = find_peaks(&w, &flux_spectrum(&cfg, &w).unwrap());
        let o = peak_oracle(&cfg).unwrap();
        prop_assert_eq!(peaks.len(), 2);
        prop_assert!((peaks[1].omega - o).abs() < 1e-3 && (peaks[0].omega + o).abs() < 1e-3);
    }
}

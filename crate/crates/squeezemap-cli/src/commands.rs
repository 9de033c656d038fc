use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use squeezemap::dynamics::{bloch_messiah, evolve_propagator, qmfs_symplectic, GaussianState};
use squeezemap::encircling::{self, Direction, EncirclingPath, EncirclingRun};
use squeezemap::linalg::{self, CMat, C64};
use squeezemap::mapping::{self, MappingCertificate};
use squeezemap::models::{self, PtChainSpec};
use squeezemap::sensing::{self, SensorConfig};
use squeezemap::spectral::{self, NonHermitianHamiltonian, PtPhase};
use squeezemap::topology::{self, KagomeParams};
use squeezemap::{Error, Result};

use crate::config::*;
use crate::output::{num, Artifact, Cell, Csv};

pub struct Outcome {
    pub summary: String,
    pub artifacts: Vec<Artifact>,
}

fn complex(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn complex_list(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| complex(*z)).collect())
}

fn phase_name(p: PtPhase) -> &'static str {
    match p {
        PtPhase::Unbroken => "unbroken",
        PtPhase::Broken => "broken",
        PtPhase::ExceptionalPoint => "exceptional-point",
    }
}

fn check_points(name: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Precondition(format!("{name} must be at least {min}")));
    }
    Ok(())
}

fn spectrum_model(p: &SpectrumParams, g: f64) -> Result<NonHermitianHamiltonian> {
    Ok(match p.model {
        SpectrumModel::PtDimer => models::build_pt_dimer(g, p.gamma),
        SpectrumModel::DetunedDimer => models::build_detuned_dimer(p.omega, g, p.gamma),
        SpectrumModel::HoepTrimer => models::build_hoep_trimer(g, p.gamma, p.epsilon),
        SpectrumModel::Ssh => models::build_pt_chain(&PtChainSpec::ssh(p.n_pairs, g, p.t_prime, p.gamma)?),
    })
}

pub fn spectrum(p: &SpectrumParams) -> Result<Outcome> {
    check_points("points", p.points, 2)?;
    let h = spectrum_model(p, p.g)?;
    let ev = linalg::eigenvalues(h.matrix());
    let ep = spectral::ep_detect(&h, p.tol);
    let phase = spectral::classify_pt_phase(&h, p.tol);
    let dim = h.dim();
    let mut header = vec!["g".to_string(), "phase".to_string()];
    for k in 1..=dim {
        header.push(format!("re_lambda_{k}"));
        header.push(format!("im_lambda_{k}"));
    }
    let mut csv = Csv::with_header(header);
    for k in 0..p.points {
        let g = p.g_min + (p.g_max - p.g_min) * k as f64 / (p.points - 1) as f64;
        let hk = spectrum_model(p, g)?;
        let mut row = vec![Cell::F(g), Cell::S(phase_name(spectral::classify_pt_phase(&hk, p.tol)).into())];
        for z in linalg::eigenvalues(hk.matrix()) {
            row.push(Cell::F(z.re));
            row.push(Cell::F(z.im));
        }
        csv.row(&row);
    }
    let result = json!({
        "eigenvalues": complex_list(&ev),
        "phase": phase_name(phase),
        "ep_order": ep.ep_order,
        "is_defective": ep.is_defective,
        "defect_metric": num(ep.defect_metric),
        "dimension": dim,
    });
    Ok(Outcome {
        summary: format!("{} eigenvalues, phase {}, EP order {}", dim, phase_name(phase), ep.ep_order),
        artifacts: vec![Artifact::csv("", csv), Artifact::json("", &result)],
    })
}

fn certificate_json(cert: &MappingCertificate) -> (Value, Csv) {
    let src: Vec<C64> = linalg::eigenvalues(cert.source.matrix()).iter().map(|z| z - cert.trace_shift).collect();
    let dst = match cert.kind {
        mapping::MappingKind::QmfsDoubled => linalg::eigenvalues(&cert.target.full_generator()),
        _ => linalg::eigenvalues(&cert.target.dynamical_matrix()),
    };
    let expected: Vec<C64> = match cert.kind {
        mapping::MappingKind::QmfsDoubled => src.iter().flat_map(|l| [*l, l.conj(), -l, -l.conj()]).collect(),
        _ => src.clone(),
    };
    let mut csv = Csv::new(&["side", "index", "re", "im"]);
    for (side, list) in [("source", &src), ("target", &dst)] {
        for (k, z) in list.iter().enumerate() {
            csv.row(&[Cell::S(side.into()), Cell::I(k as i64), Cell::F(z.re), Cell::F(z.im)]);
        }
    }
    let v = json!({
        "kind": format!("{:?}", cert.kind),
        "residual": num(cert.residual),
        "unitarity_residual": num(linalg::unitarity_residual(&cert.unitary)),
        "trace_shift": complex(cert.trace_shift),
        "source_eigenvalues": complex_list(&src),
        "target_eigenvalues": complex_list(&dst),
        "spectrum_distance": num(linalg::spectrum_distance(&dst, &expected)),
        "target_modes": cert.target.n_modes(),
    });
    (v, csv)
}

pub fn map(p: &MapParams, seed: u64) -> Result<Outcome> {
    let witness_json = |w: mapping::Witness| {
        let exists = w.exists();
        let v = json!({"kind": format!("{:?}", p.kind).to_lowercase(), "exists": exists, "residual": num(w.residual()), "seed": seed});
        (exists, w.residual(), v)
    };
    let cert = match p.kind {
        MapKind::Dpa => mapping::dpa_map(&models::build_pt_dimer(p.g, p.gamma), p.tol)?,
        MapKind::Qmfs => mapping::qmfs_construct(&models::build_detuned_dimer(p.omega, p.g, p.gamma)),
        MapKind::PtChain => mapping::pt_chain_to_ndpa(&PtChainSpec::ssh(p.n_pairs, p.g, p.t_prime, p.gamma)?)?,
        MapKind::Tb4 => {
            let form = mapping::canonical_pt_form(&mapping::tb4_model(p.g, p.gamma, p.delta), p.tol)?;
            let (exists, r, v) = witness_json(mapping::pt_to_pa_existence_seeded(&form, p.tol, seed));
            return Ok(Outcome {
                summary: format!("tb-4 witness {} (residual {r:.3e})", if exists { "exists" } else { "not found" }),
                artifacts: vec![Artifact::json("", &v)],
            });
        }
        MapKind::Pa4 => {
            let hb = mapping::pa4_model(p.g, p.nu1, p.nu2, p.delta);
            let (exists, r, v) = witness_json(mapping::pa_to_pt_existence_seeded(&hb, p.tol, seed)?);
            return Ok(Outcome {
                summary: format!("PA-4 witness {} (residual {r:.3e})", if exists { "exists" } else { "not found" }),
                artifacts: vec![Artifact::json("", &v)],
            });
        }
    };
    let (v, csv) = certificate_json(&cert);
    Ok(Outcome {
        summary: format!("{:?} mapping, residual {:.3e}, {} target modes", cert.kind, cert.residual, cert.target.n_modes()),
        artifacts: vec![Artifact::csv("", csv), Artifact::json("", &v)],
    })
}

pub fn sense(p: &SenseParams) -> Result<Outcome> {
    match p.mode {
        SenseMode::Flux => {
            check_points("points", p.points, 3)?;
            let cfg = SensorConfig::new(p.delta, p.nu, p.kappa, p.epsilon)?;
            let w = sensing::uniform_grid(p.omega_min, p.omega_max, p.points);
            let flux = sensing::flux_spectrum(&cfg, &w)?;
            let peaks = sensing::find_peaks(&w, &flux);
            let mut csv = Csv::new(&["omega_p", "flux"]);
            for (x, y) in w.iter().zip(&flux) {
                csv.row(&[Cell::F(*x), Cell::F(*y)]);
            }
            let splitting = (peaks.len() == 2).then(|| peaks[1].omega - peaks[0].omega);
            let predicted = sensing::ep_splitting_prediction(p.nu, p.epsilon.max(0.0));
            let v = json!({
                "peaks": peaks.len(),
                "peak_positions": peaks.iter().map(|q| num(q.omega)).collect::<Vec<_>>(),
                "peak_heights": peaks.iter().map(|q| num(q.height)).collect::<Vec<_>>(),
                "splitting": splitting.map_or(Value::Null, num),
                "predicted_splitting": num(predicted),
                "above_threshold": cfg.above_threshold(),
            });
            let split_text = splitting.map_or("n/a".to_string(), |s| format!("{s:.4}"));
            Ok(Outcome {
                summary: format!("{} peaks, splitting {split_text} (predicted {predicted:.4})", peaks.len()),
                artifacts: vec![Artifact::csv("", csv), Artifact::json("", &v)],
            })
        }
        SenseMode::HoepScaling | SenseMode::DimerScaling => {
            let eps = sensing::log_grid(p.eps_min, p.eps_max, p.eps_points);
            let scan = if p.mode == SenseMode::HoepScaling {
                sensing::hoep_scaling_scan(p.gamma, &eps)?
            } else {
                sensing::dimer_scaling_scan(p.gamma, &eps)?
            };
            let mut csv = Csv::new(&["epsilon", "splitting"]);
            for (e, s) in scan.epsilons.iter().zip(&scan.splittings) {
                csv.row(&[Cell::F(*e), Cell::F(*s)]);
            }
            let v = json!({"fitted_exponent": num(scan.fitted_exponent), "points": scan.epsilons.len()});
            Ok(Outcome {
                summary: format!("fitted exponent {:.4}", scan.fitted_exponent),
                artifacts: vec![Artifact::csv("", csv), Artifact::json("", &v)],
            })
        }
    }
}

fn trajectory_csv(run: &EncirclingRun) -> Csv {
    let mut header: Vec<String> = ["t", "g", "omega", "re_c_plus", "im_c_plus", "re_c_minus", "im_c_minus", "e_n"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for r in 1..=2 {
        for c in 1..=2 {
            header.push(format!("reU_{r}{c}"));
            header.push(format!("imU_{r}{c}"));
        }
    }
    let mut csv = Csv::with_header(header);
    for (k, &t) in run.trace.times.iter().enumerate() {
        let (g, w) = run.path.path_at(t);
        let (cp, cm) = (run.trace.c_plus[k], run.trace.c_minus[k]);
        let mut row = vec![
            Cell::F(t),
            Cell::F(g),
            Cell::F(w),
            Cell::F(cp.re),
            Cell::F(cp.im),
            Cell::F(cm.re),
            Cell::F(cm.im),
            Cell::F(run.entanglement[k]),
        ];
        let u: &CMat = &run.propagators[k];
        for r in 0..2 {
            for c in 0..2 {
                row.push(Cell::F(u[(r, c)].re));
                row.push(Cell::F(u[(r, c)].im));
            }
        }
        csv.row(&row);
    }
    csv
}

fn run_summary(run: &EncirclingRun) -> Value {
    let (cp, cm) = run.trace.final_amplitudes();
    json!({
        "final_c_plus": complex(cp),
        "final_c_minus": complex(cm),
        "final_e_n": num(*run.entanglement.last().expect("entanglement")),
        "lambda_s": num(encircling::squeezing_from_trace(run.propagators.last().expect("propagator"))),
        "branches_swapped": run.trace.branches_swapped(),
        "max_symplectic_residual": num(run.max_symplectic_residual),
        "photons": run.final_state().photon_numbers().iter().map(|x| num(*x)).collect::<Vec<_>>(),
    })
}

pub fn encircle(p: &EncircleParams) -> Result<Outcome> {
    let path = |d| EncirclingPath::new(p.center_g, p.radius, p.duration, d, p.gamma).map(|q| q.with_phi0(p.phi0));
    let reference = path(Direction::Ccw)?;
    let initial = match p.initial {
        InitialState::Branch => encircling::initial_branch_state(&reference),
        InitialState::Vacuum => GaussianState::vacuum(4),
        InitialState::Asymmetric => {
            let (g, w) = reference.path_at(0.0);
            let [(_, rp), (_, rm)] = encircling::instantaneous_pairs(g, w, p.gamma);
            encircling::build_asymmetric_state(p.lambda0, &rp, &rm)?
        }
    };
    let dirs: &[Direction] = match p.direction {
        DirectionChoice::Ccw => &[Direction::Ccw],
        DirectionChoice::Cw => &[Direction::Cw],
        DirectionChoice::Both => &[Direction::Ccw, Direction::Cw],
    };
    let mut runs = Vec::new();
    for &d in dirs {
        runs.push((d, encircling::run_encircling(&path(d)?, &initial, p.steps, p.rtol)?));
    }
    let mut artifacts = Vec::new();
    let mut result = serde_json::Map::new();
    for (d, run) in &runs {
        artifacts.push(Artifact::csv(&format!("-{}", d.name()), trajectory_csv(run)));
        result.insert(d.name().to_string(), run_summary(run));
    }
    let mut summary = format!("{} run(s) of {} steps", runs.len(), p.steps);
    if let [(_, ccw), (_, cw)] = runs.as_slice() {
        let m = encircling::chirality_metric(cw, ccw);
        result.insert(
            "chirality".into(),
            json!({"entanglement_gap": num(m.entanglement_gap), "amplitude_log_ratio": num(m.amplitude_log_ratio)}),
        );
        summary.push_str(&format!(", entanglement gap {:.4}, amplitude log ratio {:.4}", m.entanglement_gap, m.amplitude_log_ratio));
    }
    artifacts.push(Artifact::json("", &Value::Object(result)));
    Ok(Outcome { summary, artifacts })
}

fn kagome(omega0: f64, j: f64, nu: f64, phi: f64) -> KagomeParams {
    KagomeParams::new(omega0, j, nu).with_phi(phi)
}

pub fn chern(p: &ChernParams) -> Result<Outcome> {
    check_points("grid", p.grid, 3)?;
    let (params, groups) = if p.scan {
        let t = topology::scan_topological_point(p.j, p.nu, p.scan_start, p.scan_step, p.scan_points, p.grid, 1e-3)
            .ok_or_else(|| Error::Precondition("no stable topological point in the scan range".into()))?;
        (t.params, t.groups)
    } else {
        let params = kagome(p.omega0, p.j, p.nu, p.phi);
        topology::check_stable(&params, p.grid, 1e-9)?;
        let field = match p.form {
            KagomeForm::Bloch => topology::kagome_field(params),
            KagomeForm::Pt => topology::kagome_pt_field(params),
        };
        (params, topology::chern_all(&field, p.grid)?)
    };
    let mut csv = Csv::new(&["group", "bands", "chern_lr", "chern_symplectic", "rounded", "gap_min"]);
    let mut list = Vec::new();
    for (k, g) in groups.iter().enumerate() {
        let bands = g.bands.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
        let sym = g.symplectic.map_or(f64::NAN, |s| s.value);
        csv.row(&[Cell::I(k as i64), Cell::S(bands), Cell::F(g.lr.value), Cell::F(sym), Cell::I(g.lr.rounded), Cell::F(g.lr.gap_min)]);
        list.push(json!({
            "bands": g.bands,
            "chern_lr": num(g.lr.value),
            "chern_symplectic": num(sym),
            "rounded": g.lr.rounded,
            "gap_min": num(g.lr.gap_min),
        }));
    }
    let rounded: Vec<i64> = groups.iter().map(|g| g.lr.rounded).collect();
    let v = json!({
        "omega0": num(params.omega0),
        "j": num(params.j),
        "nu": num(params.nu),
        "grid": p.grid,
        "groups": list,
        "max_imag": num(topology::kagome_max_imag(&params, p.grid)),
    });
    Ok(Outcome {
        summary: format!("ω0 = {}, Chern numbers {rounded:?}", params.omega0),
        artifacts: vec![Artifact::csv("", csv), Artifact::json("", &v)],
    })
}

pub fn strip(p: &StripParams) -> Result<Outcome> {
    check_points("k_points", p.k_points, 2)?;
    let params = kagome(p.omega0, p.j, p.nu, p.phi);
    let ks = topology::k_parallel_grid(p.k_points);
    let s = topology::strip_spectrum(&params, p.width, &ks)?;
    let mut csv = Csv::new(&["k_par", "index", "re", "im", "edge_weight", "sign"]);
    for (ki, k) in s.k_par.iter().enumerate() {
        for (n, z) in s.energies[ki].iter().enumerate() {
            csv.row(&[Cell::F(*k), Cell::I(n as i64), Cell::F(z.re), Cell::F(z.im), Cell::F(s.edge_weights[ki][n]), Cell::I(s.signs[ki][n] as i64)]);
        }
    }
    let states = topology::in_gap_states(&params, &s, p.n_theta, p.margin)?;
    let max_weight = states.iter().map(|st| st.edge_weight).fold(0.0, f64::max);
    let mut flows = Vec::new();
    if p.flow {
        for band in [0, 1, 3, 4] {
            if let Some((lo, hi)) = topology::global_gap(&params, band, p.grid)? {
                let f = topology::edge_spectral_flow(&params, p.width, 0.5 * (lo + hi), p.k_points)?;
                flows.push(json!({"above_band": band, "energy": num(0.5 * (lo + hi)), "left": f.left, "right": f.right}));
            }
        }
    }
    let v = json!({
        "width": p.width,
        "k_points": p.k_points,
        "in_gap_states": states.len(),
        "max_in_gap_edge_weight": num(max_weight),
        "flows": flows,
    });
    Ok(Outcome {
        summary: format!("{} in-gap states, max edge weight {max_weight:.3}, {} gap flows", states.len(), flows.len()),
        artifacts: vec![Artifact::csv("", csv), Artifact::json("", &v)],
    })
}

pub fn qmfs_check(p: &QmfsCheckParams, seed: u64) -> Result<Outcome> {
    check_points("samples", p.samples, 1)?;
    check_points("max_modes", p.max_modes, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = Csv::new(&["sample", "modes", "residual", "spectrum_distance", "symplectic_residual", "bloch_messiah_residual"]);
    let mut worst = [0.0f64; 4];
    for k in 0..p.samples {
        let n = rng.random_range(1..=p.max_modes);
        let m: CMat = linalg::random_complex(n, n, &mut rng) * linalg::cr(p.scale);
        let h = NonHermitianHamiltonian::new(m.clone())?;
        let cert = mapping::qmfs_construct(&h);
        let want: Vec<C64> = linalg::eigenvalues(&m).iter().flat_map(|l| [*l, l.conj(), -l, -l.conj()]).collect();
        let dist = linalg::spectrum_distance(&linalg::eigenvalues(&cert.target.full_generator()), &want);
        let u = evolve_propagator(&h, &[0.0, p.time], 1e-11)?;
        let s = qmfs_symplectic(u.last())?;
        let bm = bloch_messiah(&s)?;
        let row = [cert.residual, dist, s.symplectic_residual(), bm.reconstruction_residual(&s)];
        for (w, r) in worst.iter_mut().zip(row) {
            *w = w.max(r);
        }
        csv.row(&[Cell::I(k as i64), Cell::I(n as i64), Cell::F(row[0]), Cell::F(row[1]), Cell::F(row[2]), Cell::F(row[3])]);
    }
    let v = json!({
        "samples": p.samples,
        "seed": seed,
        "max_residual": num(worst[0]),
        "max_spectrum_distance": num(worst[1]),
        "max_symplectic_residual": num(worst[2]),
        "max_bloch_messiah_residual": num(worst[3]),
    });
    Ok(Outcome {
        summary: format!("{} samples, max spectrum distance {:.3e}, max symplectic residual {:.3e}", p.samples, worst[1], worst[2]),
        artifacts: vec![Artifact::csv("", csv), Artifact::json("", &v)],
    })
}

//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them all).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use doa_core::array_model::{
    exact_covariance, forward_backward, sample_covariance, steering_vector, uniform_grid,
    ArrayGeometry, CovarianceEstimate,
};
use doa_core::classical::{capon_spectrum, das_spectrum};
use doa_core::cli::records_to_csv;
use doa_core::estimate::{Method, MethodParams};
use doa_core::eval::{find_peaks, run_campaign, summarize, CampaignConfig};
use doa_core::ml::{ml_estimate, MlMethod};
use doa_core::simulate::{generate_snapshots, Scenario};
use doa_core::sparse::{l1_svd, sbl, spice, AngularDictionary};
use doa_core::subspace::{
    esprit, estimate_source_count, music_spectrum, root_music, subspace_split, unitary_esprit,
    SourceCountCriterion,
};
use doa_core::CMat;

fn geom8() -> ArrayGeometry {
    ArrayGeometry::half_wavelength(8).unwrap()
}

fn report(criterion: &str, ok: bool, start: Instant, detail: &str) {
    println!(
        "{}: {} ({:.2}s) {}",
        criterion,
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64(),
        detail
    );
    assert!(ok, "{criterion} failed: {detail}");
}

#[test]
fn criterion_1_exact_covariance_orthogonality() {
    let start = Instant::now();
    let g = geom8();
    let truth = [-10.0, 10.0];
    let cov = exact_covariance(&g, &truth, &[1.0, 1.0], 1.0, None).unwrap();
    let split = subspace_split(&cov, 2).unwrap();

    let mut worst = 0.0f64;
    for &theta in &truth {
        let a = steering_vector(&g, theta).unwrap();
        worst = worst.max((split.noise_basis.adjoint() * &a).norm());
    }
    report(
        "criterion 1 (exact-covariance orthogonality)",
        worst < 1e-8,
        start,
        &format!("max ‖Un^H a(θ)‖ = {worst:.3e}"),
    );
}

#[test]
fn criterion_2_exact_recovery_suite() {
    let start = Instant::now();
    let g = geom8();
    let cases: [&[f64]; 3] = [&[12.3], &[-7.6, 14.2], &[-33.3, 3.7, 28.9]];
    let grid = uniform_grid(0.1);

    let mut ok = true;
    let mut detail = String::new();
    for sigma2 in [0.0, 0.01] {
        for truth in cases {
            let powers = vec![1.0; truth.len()];
            let cov = exact_covariance(&g, truth, &powers, sigma2, None).unwrap();
            let k = truth.len();
            let split = subspace_split(&cov, k).unwrap();

            let mut check = |name: &str, angles: &[f64], tol: f64| {
                if angles.len() != k {
                    ok = false;
                    detail = format!("{name} returned {} angles for K={k}", angles.len());
                    return;
                }
                for (a, t) in angles.iter().zip(truth) {
                    if (a - t).abs() > tol {
                        ok = false;
                        detail =
                            format!("{name} σ²={sigma2} truth {truth:?}: got {a:.6} for {t}");
                    }
                }
            };

            check("root-music", &root_music(&split, &g, k).unwrap().angles_deg, 1e-3);
            check("esprit", &esprit(&split, &g, k).unwrap().angles_deg, 1e-3);
            check(
                "unitary-esprit",
                &unitary_esprit(&cov, &g, k).unwrap().angles_deg,
                1e-3,
            );
            check(
                "dml",
                &ml_estimate(&cov, &g, k, MlMethod::Dml).unwrap().angles_deg,
                1e-3,
            );
            let spectrum = music_spectrum(&split, &g, &grid).unwrap();
            check("music", &find_peaks(&spectrum, k).angles_deg, 0.1 + 1e-9);
        }
    }
    report("criterion 2 (exact-recovery suite)", ok, start, &detail);
}

#[test]
fn criterion_3_capon_never_exceeds_das() {
    let start = Instant::now();
    let g = geom8();
    let grid = uniform_grid(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(303);

    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    for _ in 0..1000 {
        let gm = CMat::from_fn(8, 8, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let hpd = &gm * gm.adjoint() + CMat::identity(8, 8).scale(0.05);
        let cov = CovarianceEstimate::new(hpd, 100).unwrap();
        let das = das_spectrum(&cov, &g, &grid).unwrap();
        let capon = capon_spectrum(&cov, &g, &grid, 0.0).unwrap();
        for (c, d) in capon.values().iter().zip(das.values()) {
            if *c > d * (1.0 + 1e-12) {
                ok = false;
            }
            worst_ratio = worst_ratio.max(c / d);
        }
    }
    report(
        "criterion 3 (Capon dominance, 1000 covariances)",
        ok,
        start,
        &format!("max P_Capon/P_DAS = {worst_ratio:.12}"),
    );
}

#[test]
fn criterion_4_coherent_source_suite() {
    let start = Instant::now();
    let g = geom8();
    let truth = [-10.0, 10.0];
    let b = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
    let cov = exact_covariance(&g, &truth, &[1.0, 1.0], 0.01, Some(&b)).unwrap();
    let grid = uniform_grid(0.1);

    // how many true sources a top-2 peak list hits within the tolerance
    let hits = |angles: &[f64], tol: f64| -> usize {
        truth
            .iter()
            .filter(|t| angles.iter().any(|a| (*a - **t).abs() <= tol))
            .count()
    };

    let plain = {
        let split = subspace_split(&cov, 2).unwrap();
        let spectrum = music_spectrum(&split, &g, &grid).unwrap();
        find_peaks(&spectrum, 2)
    };
    let plain_hits = hits(&plain.angles_deg, 0.2);

    let fb = {
        let split = subspace_split(&forward_backward(&cov), 2).unwrap();
        let spectrum = music_spectrum(&split, &g, &grid).unwrap();
        find_peaks(&spectrum, 2)
    };
    let fb_hits = hits(&fb.angles_deg, 0.2);

    let ok = plain_hits < 2 && fb_hits == 2;
    report(
        "criterion 4 (coherent-source suite)",
        ok,
        start,
        &format!(
            "plain MUSIC peaks {:?} ({} within 0.2°, {} raw maxima); FB peaks {:?} ({} within 0.2°)",
            plain.angles_deg, plain_hits, plain.diagnostics["peaks_found"], fb.angles_deg, fb_hits
        ),
    );
}

fn sanity_campaign() -> CampaignConfig {
    CampaignConfig {
        geometry: geom8(),
        source_angles_deg: vec![-10.0, 10.0],
        source_powers: vec![1.0, 1.0],
        coherent: false,
        random_sources: None,
        methods: vec![Method::Das, Method::Music, Method::RootMusic, Method::Esprit],
        snr_db_list: vec![20.0],
        n_list: vec![200],
        trials: 100,
        master_seed: 20260811,
        method_params: MethodParams::default(),
    }
}

#[test]
fn criterion_5_monte_carlo_sanity() {
    let start = Instant::now();
    let records = run_campaign(&sanity_campaign(), 0, false).unwrap();
    let summaries = summarize(&records);

    let mut ok = true;
    let mut detail = String::new();
    for s in &summaries {
        match s.method {
            Method::Music | Method::RootMusic | Method::Esprit => {
                let rmse = s.rmse_deg.unwrap_or(f64::INFINITY);
                detail.push_str(&format!("{} rmse {:.3}°; ", s.method, rmse));
                if !(rmse.is_finite() && rmse < 0.5) || s.failures > 0 {
                    ok = false;
                }
            }
            Method::Das => {
                detail.push_str(&format!("das resolution {:.2}; ", s.resolution_probability));
                if s.resolution_probability < 0.9 {
                    ok = false;
                }
            }
            _ => {}
        }
    }
    report("criterion 5 (Monte Carlo sanity)", ok, start, &detail);
}

#[test]
fn criterion_6_source_enumeration() {
    let start = Instant::now();
    let g = geom8();
    let trials = 200;
    let mut mdl_correct = 0;
    let mut aic_ge_mdl = true;
    for trial in 0..trials {
        let s = Scenario::new(g, vec![-20.0, 20.0], 10.0, 500, 600 + trial).unwrap();
        let cov = sample_covariance(&generate_snapshots(&s));
        let eig = cov.eigen();
        let mdl =
            estimate_source_count(&eig.eigenvalues, 500, SourceCountCriterion::Mdl).unwrap();
        let aic =
            estimate_source_count(&eig.eigenvalues, 500, SourceCountCriterion::Aic).unwrap();
        if mdl == 2 {
            mdl_correct += 1;
        }
        if aic < mdl {
            aic_ge_mdl = false;
        }
    }
    let rate = mdl_correct as f64 / trials as f64;
    report(
        "criterion 6 (source enumeration)",
        rate >= 0.9 && aic_ge_mdl,
        start,
        &format!("MDL correct rate {rate:.3}; AIC ≥ MDL everywhere: {aic_ge_mdl}"),
    );
}

#[test]
fn criterion_7_solver_monotonicity() {
    let start = Instant::now();
    let g = geom8();
    let dict = AngularDictionary::with_default_grid(&g).unwrap();
    let mut ok = true;
    let mut detail = String::new();

    for seed in 0..10u64 {
        let s = Scenario::new(g, vec![-12.0, 17.0], 10.0, 100, 700 + seed).unwrap();
        let snaps = generate_snapshots(&s);
        let cov = sample_covariance(&snaps);

        let sp = spice(&cov, &dict, 0.0, 60, 1e-10).unwrap();
        if sp.objective_history.windows(2).any(|w| w[1] > w[0]) {
            ok = false;
            detail = format!("SPICE objective rose (seed {seed})");
        }

        let l1 = l1_svd(&snaps, 2, &dict, 0.5).unwrap();
        if l1.objective_history.windows(2).any(|w| w[1] > w[0]) {
            ok = false;
            detail = format!("L1-SVD objective rose (seed {seed})");
        }

        let sb = sbl(&snaps, &dict, 40, 1e-5).unwrap();
        if sb.evidence_steps.iter().any(|(pre, post)| *post < pre - 1e-8) {
            ok = false;
            detail = format!("SBL evidence dropped (seed {seed})");
        }

        let ml = ml_estimate(&cov, &g, 2, MlMethod::Dml).unwrap();
        if ml.cost_history.windows(2).any(|w| w[1] > w[0]) {
            ok = false;
            detail = format!("ML cost rose (seed {seed})");
        }
    }
    report("criterion 7 (solver monotonicity, 10 seeds each)", ok, start, &detail);
}

#[test]
fn criterion_8_determinism_and_parallel_equivalence() {
    let start = Instant::now();
    let config = CampaignConfig {
        methods: vec![Method::Music, Method::Esprit],
        snr_db_list: vec![10.0, 20.0],
        n_list: vec![100],
        trials: 10,
        ..sanity_campaign()
    };
    let csv_a = records_to_csv(&run_campaign(&config, 1, false).unwrap());
    let csv_b = records_to_csv(&run_campaign(&config, 1, false).unwrap());
    let csv_c = records_to_csv(&run_campaign(&config, 8, false).unwrap());
    let ok = csv_a == csv_b && csv_a == csv_c && csv_a.lines().count() == 1 + 2 * 2 * 10;
    report(
        "criterion 8 (determinism and parallel equivalence)",
        ok,
        start,
        &format!(
            "repeat identical: {}, 1-vs-8 workers identical: {}",
            csv_a == csv_b,
            csv_a == csv_c
        ),
    );
}

#[test]
fn criterion_9_root_music_vs_spectral_music() {
    let start = Instant::now();
    let g = geom8();
    let grid = uniform_grid(0.01);
    let mut ok = true;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let s = Scenario::new(g, vec![-10.0, 10.0], 10.0, 200, 900 + seed).unwrap();
        let cov = sample_covariance(&generate_snapshots(&s));
        let split = subspace_split(&cov, 2).unwrap();
        let rm = root_music(&split, &g, 2).unwrap();
        let spectral = find_peaks(&music_spectrum(&split, &g, &grid).unwrap(), 2);
        if spectral.angles_deg.len() != 2 {
            ok = false;
            continue;
        }
        for (a, b) in rm.angles_deg.iter().zip(&spectral.angles_deg) {
            worst = worst.max((a - b).abs());
            if (a - b).abs() > 0.05 {
                ok = false;
            }
        }
    }
    report(
        "criterion 9 (Root-MUSIC vs spectral MUSIC)",
        ok,
        start,
        &format!("max per-source disagreement {worst:.4}°"),
    );
}

//! Peak finding, estimate/truth matching, RMSE and resolution metrics, and
//! the Monte Carlo campaign runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::array_model::{ArrayGeometry, SpatialSpectrum};
use crate::error::{DoaError, Result};
use crate::estimate::{run_method, DoaEstimate, Method, MethodParams};
use crate::simulate::{generate_snapshots, trial_seed, Scenario};

/// One refined spectrum peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Parabolically interpolated peak location.
    pub angle_deg: f64,
    /// Spectrum value at the grid point (pre-interpolation).
    pub value: f64,
}

/// All strict interior local maxima of a spectrum, strongest first, each
/// location refined by a parabola through the three surrounding samples.
pub fn spectrum_peaks(spectrum: &SpatialSpectrum) -> Vec<Peak> {
    let angles = spectrum.angles_deg();
    let values = spectrum.values();
    let mut peaks = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] > values[i + 1] {
            peaks.push(Peak {
                angle_deg: parabolic_vertex(
                    angles[i - 1],
                    angles[i],
                    angles[i + 1],
                    values[i - 1],
                    values[i],
                    values[i + 1],
                ),
                value: values[i],
            });
        }
    }
    peaks.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap()
            .then(a.angle_deg.partial_cmp(&b.angle_deg).unwrap())
    });
    peaks
}

/// Vertex of the parabola through three (possibly non-uniform) samples,
/// clamped to the bracketing interval.
fn parabolic_vertex(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let d0 = (y0 - y1) * (x2 - x1) * (x2 - x1);
    let d2 = (y2 - y1) * (x1 - x0) * (x1 - x0);
    let denom = (y0 - y1) * (x2 - x1) + (y2 - y1) * (x1 - x0);
    if denom.abs() < 1e-300 {
        return x1;
    }
    let vertex = x1 + 0.5 * (d0 - d2) / denom;
    vertex.clamp(x0, x2)
}

/// The `k` strongest peaks of a spectrum. Returns fewer when the spectrum
/// has fewer local maxima; callers treat a short list as unresolved.
pub fn find_peaks(spectrum: &SpatialSpectrum, k_sources: usize) -> DoaEstimate {
    let peaks = spectrum_peaks(spectrum);
    let found = peaks.len();
    let angles: Vec<f64> = peaks
        .into_iter()
        .take(k_sources)
        .map(|p| p.angle_deg)
        .collect();
    let mut est = DoaEstimate::new(angles);
    est.diagnostics.insert("peaks_found".into(), found as f64);
    est
}

/// Optimal (minimum sum of squared errors) assignment of estimates to truth
/// plus the resulting RMSE in degrees.
///
/// Brute-force over permutations up to K = 6; beyond that a greedy
/// nearest-neighbour match is used and a warning logged.
pub fn match_and_rmse(estimates_deg: &[f64], truth_deg: &[f64]) -> Result<(f64, Vec<usize>)> {
    if estimates_deg.len() != truth_deg.len() {
        return Err(DoaError::InvalidInput(format!(
            "{} estimates for {} true angles",
            estimates_deg.len(),
            truth_deg.len()
        )));
    }
    let k = truth_deg.len();
    if k == 0 {
        return Ok((0.0, Vec::new()));
    }
    let assignment = if k <= 6 {
        best_permutation(estimates_deg, truth_deg)
    } else {
        log::warn!("match_and_rmse with K = {k} > 6 falls back to greedy matching");
        greedy_assignment(estimates_deg, truth_deg)
    };
    let sse: f64 = assignment
        .iter()
        .enumerate()
        .map(|(t, &e)| (estimates_deg[e] - truth_deg[t]).powi(2))
        .sum();
    Ok(((sse / k as f64).sqrt(), assignment))
}

/// Exhaustive search over permutations; `result[t]` is the index of the
/// estimate assigned to truth `t`.
fn best_permutation(estimates: &[f64], truth: &[f64]) -> Vec<usize> {
    let k = truth.len();
    let mut indices: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    permute(&mut indices, 0, &mut |perm| {
        let sse: f64 = perm
            .iter()
            .enumerate()
            .map(|(t, &e)| (estimates[e] - truth[t]).powi(2))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, perm.to_vec()));
        }
    });
    best.unwrap().1
}

fn permute(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

fn greedy_assignment(estimates: &[f64], truth: &[f64]) -> Vec<usize> {
    let k = truth.len();
    let mut taken = vec![false; k];
    let mut assignment = vec![0usize; k];
    for (t, &target) in truth.iter().enumerate() {
        let mut best = (f64::MAX, 0usize);
        for (e, &est) in estimates.iter().enumerate() {
            if !taken[e] {
                let d = (est - target).abs();
                if d < best.0 {
                    best = (d, e);
                }
            }
        }
        taken[best.1] = true;
        assignment[t] = best.1;
    }
    assignment
}

/// One Monte Carlo trial of one method.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub snr_db: f64,
    pub n_snapshots: usize,
    pub m_sensors: usize,
    pub scenario_fingerprint: String,
    pub trial_index: u64,
    /// Whatever the estimator produced, sorted; may be shorter than K on
    /// partial failures.
    pub estimated_angles_deg: Vec<f64>,
    /// Present iff estimation succeeded with the full source count.
    pub rmse_deg: Option<f64>,
    pub resolved: bool,
    pub wall_time_s: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.rmse_deg.is_none()
    }
}

/// Fraction of trials that resolved every source.
pub fn resolution_probability(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(DoaError::InvalidInput(
            "resolution probability of an empty record list".into(),
        ));
    }
    let resolved = records.iter().filter(|r| r.resolved).count();
    Ok(resolved as f64 / records.len() as f64)
}

/// Per-trial random source positions: `k` angles drawn uniformly over
/// ±`span_deg` with at least `min_separation_deg` between any two.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RandomSources {
    pub k: usize,
    #[serde(default = "default_random_span")]
    pub span_deg: f64,
    #[serde(default = "default_min_separation")]
    pub min_separation_deg: f64,
}

fn default_random_span() -> f64 {
    60.0
}

fn default_min_separation() -> f64 {
    5.0
}

/// Monte Carlo campaign: methods × SNR grid × snapshot grid × trials.
///
/// Source positions are either the fixed `source_angles_deg` or, when
/// `random_sources` is set, drawn per trial from that trial's seed stream
/// (unit powers); in both cases every method within a trial sees the same
/// data.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub geometry: ArrayGeometry,
    pub source_angles_deg: Vec<f64>,
    pub source_powers: Vec<f64>,
    pub coherent: bool,
    pub random_sources: Option<RandomSources>,
    pub methods: Vec<Method>,
    pub snr_db_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
    pub method_params: MethodParams,
}

impl CampaignConfig {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(DoaError::Config("campaign has no methods".into()));
        }
        if self.snr_db_list.is_empty() || self.n_list.is_empty() {
            return Err(DoaError::Config("empty SNR or snapshot grid".into()));
        }
        match &self.random_sources {
            None => {
                if self.source_angles_deg.is_empty() {
                    return Err(DoaError::Config("campaign needs at least one source".into()));
                }
                if self.source_angles_deg.len() != self.source_powers.len() {
                    return Err(DoaError::Config("angles/powers length mismatch".into()));
                }
            }
            Some(r) => {
                if r.k == 0 {
                    return Err(DoaError::Config("random_sources.k must be at least 1".into()));
                }
                if !(r.span_deg > 0.0 && r.span_deg <= 90.0) {
                    return Err(DoaError::Config("random_sources.span_deg must lie in (0, 90]".into()));
                }
                if r.min_separation_deg < 0.0
                    || (r.k as f64 - 1.0) * r.min_separation_deg > 1.8 * r.span_deg
                {
                    return Err(DoaError::Config(
                        "random_sources: k sources with that separation cannot fit the span".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn k_sources(&self) -> usize {
        match &self.random_sources {
            Some(r) => r.k,
            None => self.source_angles_deg.len(),
        }
    }
}

/// Smallest pairwise separation of a truth set.
fn min_separation(angles: &[f64]) -> f64 {
    let mut min = f64::MAX;
    for i in 0..angles.len() {
        for j in (i + 1)..angles.len() {
            min = min.min((angles[i] - angles[j]).abs());
        }
    }
    min
}

/// Draw `k` sorted angles uniformly over ±span with the required minimum
/// separation, by rejection from a dedicated stream.
fn draw_random_sources(spec: &RandomSources, seed: u64) -> Vec<f64> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut angles: Vec<f64> = (0..spec.k)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * spec.span_deg)
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if spec.k < 2 || min_separation(&angles) >= spec.min_separation_deg {
            return angles;
        }
    }
}

/// Run a campaign and return one record per (method, SNR, N, trial).
///
/// Deterministic given the master seed: every trial draws its data from a
/// stream keyed by (cell, trial), so the records are identical for any
/// `workers` count. `measure_time == false` writes 0 wall times, making the
/// output fully byte-reproducible. Individual estimator failures are
/// recorded, never propagated.
pub fn run_campaign(
    config: &CampaignConfig,
    workers: usize,
    measure_time: bool,
) -> Result<Vec<TrialRecord>> {
    config.validate()?;

    let mut tasks = Vec::new();
    for (snr_idx, &snr_db) in config.snr_db_list.iter().enumerate() {
        for (n_idx, &n) in config.n_list.iter().enumerate() {
            let cell = (snr_idx * config.n_list.len() + n_idx) as u64;
            for trial in 0..config.trials {
                tasks.push((snr_db, n, cell, trial));
            }
        }
    }

    let run_all = || -> Vec<TrialRecord> {
        tasks
            .par_iter()
            .map(|&(snr_db, n, cell, trial)| run_trial(config, snr_db, n, cell, trial, measure_time))
            .flatten()
            .collect()
    };
    let mut records = if workers == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| DoaError::Config(format!("worker pool: {e}")))?;
        pool.install(run_all)
    };

    records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.snr_db.partial_cmp(&b.snr_db).unwrap())
            .then(a.n_snapshots.cmp(&b.n_snapshots))
            .then(a.trial_index.cmp(&b.trial_index))
    });
    Ok(records)
}

fn run_trial(
    config: &CampaignConfig,
    snr_db: f64,
    n: usize,
    cell: u64,
    trial: u64,
    measure_time: bool,
) -> Vec<TrialRecord> {
    let seed = trial_seed(trial_seed(config.master_seed, cell), trial);
    let truth = match &config.random_sources {
        // a sub-stream separate from the snapshot noise stream
        Some(spec) => draw_random_sources(spec, trial_seed(seed, u64::MAX)),
        None => config.source_angles_deg.clone(),
    };
    let powers = if config.random_sources.is_some() {
        vec![1.0; truth.len()]
    } else {
        config.source_powers.clone()
    };
    let scenario = Scenario::with_powers(
        config.geometry,
        truth.clone(),
        powers,
        snr_db,
        n,
        config.coherent,
        seed,
    )
    .expect("campaign scenario validated up front");
    let fingerprint = scenario.fingerprint();
    let snapshots = generate_snapshots(&scenario);
    let k = config.k_sources();
    let half_sep = min_separation(&truth) / 2.0;

    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = run_method(&snapshots, method, k, &config.method_params);
            let wall_time_s = if measure_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };

            let (angles, rmse, resolved) = match outcome {
                Ok(est) if est.angles_deg.len() == k => {
                    match match_and_rmse(&est.angles_deg, &truth) {
                        Ok((rmse, assignment)) => {
                            let resolved = k == 1
                                || assignment.iter().enumerate().all(|(t, &e)| {
                                    (est.angles_deg[e] - truth[t]).abs() < half_sep
                                });
                            (est.angles_deg, Some(rmse), resolved)
                        }
                        Err(_) => (est.angles_deg, None, false),
                    }
                }
                Ok(est) => (est.angles_deg, None, false),
                Err(_) => (Vec::new(), None, false),
            };

            TrialRecord {
                method,
                snr_db,
                n_snapshots: n,
                m_sensors: config.geometry.m_sensors(),
                scenario_fingerprint: fingerprint.clone(),
                trial_index: trial,
                estimated_angles_deg: angles,
                rmse_deg: rmse,
                resolved,
                wall_time_s,
            }
        })
        .collect()
}

/// Aggregate row for one (method, SNR, N) cell.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub snr_db: f64,
    pub n_snapshots: usize,
    pub trials: usize,
    pub failures: usize,
    /// Aggregate RMSE `√(mean over trials and sources of squared error)`,
    /// absent when every trial failed.
    pub rmse_deg: Option<f64>,
    pub resolution_probability: f64,
    pub mean_wall_time_s: f64,
}

/// Aggregate records per (method, SNR, N) cell, deterministic order.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<(Method, u64, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.method, r.snr_db.to_bits(), r.n_snapshots))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((method, snr_bits, n), rs)| {
            let trials = rs.len();
            let failures = rs.iter().filter(|r| r.failed()).count();
            let successes: Vec<f64> = rs.iter().filter_map(|r| r.rmse_deg).collect();
            let rmse_deg = if successes.is_empty() {
                None
            } else {
                Some(
                    (successes.iter().map(|r| r * r).sum::<f64>() / successes.len() as f64)
                        .sqrt(),
                )
            };
            let resolved = rs.iter().filter(|r| r.resolved).count();
            let wall: f64 = rs.iter().map(|r| r.wall_time_s).sum();
            CellSummary {
                method,
                snr_db: f64::from_bits(snr_bits),
                n_snapshots: n,
                trials,
                failures,
                rmse_deg,
                resolution_probability: resolved as f64 / trials as f64,
                mean_wall_time_s: wall / trials as f64,
            }
        })
        .collect()
}

/// The double-sum RMSE over raw records: `√(Σ_m Σ_k err²/(MK))`, recomputed
/// from the stored angles; the cross-check for [`summarize`].
pub fn aggregate_rmse(records: &[TrialRecord], truth_deg: &[f64]) -> Option<f64> {
    let k = truth_deg.len();
    let mut sse = 0.0;
    let mut trials = 0usize;
    for r in records {
        if r.failed() || r.estimated_angles_deg.len() != k {
            continue;
        }
        let (_, assignment) = match_and_rmse(&r.estimated_angles_deg, truth_deg).ok()?;
        sse += assignment
            .iter()
            .enumerate()
            .map(|(t, &e)| (r.estimated_angles_deg[e] - truth_deg[t]).powi(2))
            .sum::<f64>();
        trials += 1;
    }
    if trials == 0 {
        None
    } else {
        Some((sse / (trials * k) as f64).sqrt())
    }
}

//! Config-driven frontend: JSON schemas, the snapshot binary format, CSV
//! writers and the subcommand implementations behind the `doa` binary.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::array_model::{sample_covariance, ArrayGeometry, SnapshotMatrix, SpatialSpectrum};
use crate::classical::{capon_spectrum, das_spectrum, default_capon_loading};
use crate::error::{DoaError, Result};
use crate::estimate::{run_method, DoaEstimate, Method, MethodParams, DEFAULT_GRID_STEP};
use crate::eval::{run_campaign, summarize, CampaignConfig, CellSummary, RandomSources, TrialRecord};
use crate::simulate::{generate_snapshots, Scenario};
use crate::sparse::{sbl, spice, AngularDictionary, DEFAULT_SPARSE_GRID_STEP};
use crate::subspace::{music_spectrum, subspace_split};
use crate::{CMat, Result as DoaResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ESTIMATION: i32 = 2;

/// Exit code for an error per the CLI contract: config/usage problems exit
/// 1, estimation failures exit 2.
pub fn exit_code_for(err: &DoaError) -> i32 {
    if err.is_usage_error() {
        EXIT_CONFIG
    } else {
        EXIT_ESTIMATION
    }
}

/// Single-line JSON error payload for stderr.
pub fn error_json(err: &DoaError) -> String {
    let kind = match err {
        DoaError::InvalidInput(_) => "invalid-input",
        DoaError::SingularMatrix(_) => "singular-matrix",
        DoaError::DegenerateInput(_) => "degenerate-input",
        DoaError::IllConditionedManifold(_) => "ill-conditioned-manifold",
        DoaError::EstimationFailure(_) => "estimation-failure",
        DoaError::Config(_) => "config",
        DoaError::Io(_) => "io",
    };
    serde_json::json!({ "error": err.to_string(), "kind": kind }).to_string()
}

// ───────────────────────── JSON config schema ─────────────────────────

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub m: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesConfig {
    pub angles: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<f64>>,
    #[serde(default)]
    pub coherent: bool,
}

/// SNR in dB; accepts a JSON number or the strings "inf"/"-inf" (JSON has no
/// infinity literal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDb(pub f64);

impl Serialize for SnrDb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SnrDb(v)),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(SnrDb(f64::INFINITY)),
                "-inf" | "-Infinity" => Ok(SnrDb(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "snr_db must be a number or \"inf\", got \"{other}\""
                ))),
            },
        }
    }
}

/// The scenario configuration shared by `simulate`, `estimate` and
/// `spectrum`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub sources: SourcesConfig,
    pub snr_db: SnrDb,
    pub n_snapshots: usize,
    pub seed: u64,
    #[serde(default)]
    pub method_params: MethodParams,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DoaError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| DoaError::Config(format!("{}: {e}", path.display())))
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.geometry.m, self.geometry.spacing)
            .map_err(|e| DoaError::Config(e.to_string()))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let geometry = self.geometry()?;
        let powers = self
            .sources
            .powers
            .clone()
            .unwrap_or_else(|| vec![1.0; self.sources.angles.len()]);
        Scenario::with_powers(
            geometry,
            self.sources.angles.clone(),
            powers,
            self.snr_db.0,
            self.n_snapshots,
            self.sources.coherent,
            self.seed,
        )
        .map_err(|e| DoaError::Config(e.to_string()))
    }
}

/// Campaign configuration file: the scenario base plus the benchmark grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    pub geometry: GeometryConfig,
    pub sources: SourcesConfig,
    /// Per-trial random source positions; overrides `sources.angles`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_sources: Option<RandomSources>,
    pub methods: Vec<String>,
    pub snr_db_list: Vec<SnrDb>,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub method_params: MethodParams,
}

impl CampaignFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DoaError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| DoaError::Config(format!("{}: {e}", path.display())))
    }

    pub fn campaign(&self) -> Result<CampaignConfig> {
        let geometry = ArrayGeometry::new(self.geometry.m, self.geometry.spacing)
            .map_err(|e| DoaError::Config(e.to_string()))?;
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>>>()?;
        let powers = self
            .sources
            .powers
            .clone()
            .unwrap_or_else(|| vec![1.0; self.sources.angles.len()]);
        Ok(CampaignConfig {
            geometry,
            source_angles_deg: self.sources.angles.clone(),
            source_powers: powers,
            coherent: self.sources.coherent,
            random_sources: self.random_sources,
            methods,
            snr_db_list: self.snr_db_list.iter().map(|s| s.0).collect(),
            n_list: self.n_list.clone(),
            trials: self.trials,
            master_seed: self.master_seed,
            method_params: self.method_params.clone(),
        })
    }
}

// ───────────────────────── snapshot binary format ─────────────────────────

const SNAPSHOT_MAGIC: &[u8; 4] = b"DOAS";
const SNAPSHOT_VERSION: u16 = 1;

/// Write a snapshot matrix: magic "DOAS", version u16, M u32, N u32, then
/// row-major complex entries as little-endian (f64 re, f64 im) pairs.
pub fn write_snapshots<W: Write>(mut w: W, snapshots: &SnapshotMatrix) -> Result<()> {
    let data = snapshots.data();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(data.nrows() as u32).to_le_bytes())?;
    w.write_all(&(data.ncols() as u32).to_le_bytes())?;
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            let z = data[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a snapshot matrix written by [`write_snapshots`]; the geometry comes
/// from the run config because the file only carries dimensions.
pub fn read_snapshots<R: Read>(mut r: R, geometry: ArrayGeometry) -> Result<SnapshotMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(DoaError::Config("not a DOAS snapshot file".into()));
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)?;
    let version = u16::from_le_bytes(buf2);
    if version != SNAPSHOT_VERSION {
        return Err(DoaError::Config(format!(
            "unsupported snapshot file version {version}"
        )));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let m = u32::from_le_bytes(buf4) as usize;
    r.read_exact(&mut buf4)?;
    let n = u32::from_le_bytes(buf4) as usize;
    if m != geometry.m_sensors() {
        return Err(DoaError::Config(format!(
            "snapshot file has {m} rows but the config geometry has {} sensors",
            geometry.m_sensors()
        )));
    }
    let mut data = CMat::zeros(m, n);
    let mut buf8 = [0u8; 8];
    for i in 0..m {
        for j in 0..n {
            r.read_exact(&mut buf8)?;
            let re = f64::from_le_bytes(buf8);
            r.read_exact(&mut buf8)?;
            let im = f64::from_le_bytes(buf8);
            data[(i, j)] = num_complex::Complex64::new(re, im);
        }
    }
    SnapshotMatrix::new(data, geometry)
}

// ───────────────────────── CSV writers ─────────────────────────

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Benchmark records CSV with the fixed column set.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out =
        String::from("method,snr_db,n_snapshots,m_sensors,trial,angles,rmse_deg,resolved,wall_time_s,failed\n");
    for r in records {
        let angles = r
            .estimated_angles_deg
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method,
            r.snr_db,
            r.n_snapshots,
            r.m_sensors,
            r.trial_index,
            angles,
            fmt_opt(r.rmse_deg),
            r.resolved,
            r.wall_time_s,
            r.failed()
        ));
    }
    out
}

/// Aggregate summary CSV, one row per (method, SNR, N) cell.
pub fn summaries_to_csv(summaries: &[CellSummary]) -> String {
    let mut out = String::from(
        "method,snr_db,n_snapshots,trials,failures,rmse_deg,resolution_probability,mean_wall_time_s\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.method,
            s.snr_db,
            s.n_snapshots,
            s.trials,
            s.failures,
            fmt_opt(s.rmse_deg),
            s.resolution_probability,
            s.mean_wall_time_s
        ));
    }
    out
}

pub fn spectrum_to_csv(spectrum: &SpatialSpectrum) -> String {
    let mut out = String::from("angle_deg,value\n");
    for (a, v) in spectrum.angles_deg().iter().zip(spectrum.values()) {
        out.push_str(&format!("{a},{v}\n"));
    }
    out
}

// ───────────────────────── subcommands ─────────────────────────

/// `simulate`: generate snapshots from a config and write the binary file.
pub fn cmd_simulate(config_path: &Path, out_path: &Path) -> Result<()> {
    let config = RunConfig::from_path(config_path)?;
    let snapshots = generate_snapshots(&config.scenario()?);
    let file = std::fs::File::create(out_path)?;
    write_snapshots(std::io::BufWriter::new(file), &snapshots)
}

/// Estimate output as printed on stdout.
#[derive(Debug, Serialize)]
pub struct EstimateOutput {
    pub method: Method,
    pub angles_deg: Vec<f64>,
    pub diagnostics: std::collections::BTreeMap<String, f64>,
}

/// `estimate`: run one method on simulated or loaded snapshots; returns the
/// JSON line for stdout.
pub fn cmd_estimate(
    method_name: &str,
    config_path: &Path,
    input: Option<&Path>,
) -> Result<String> {
    let config = RunConfig::from_path(config_path)?;
    let method: Method = method_name.parse()?;
    let snapshots = match input {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            read_snapshots(std::io::BufReader::new(file), config.geometry()?)?
        }
        None => generate_snapshots(&config.scenario()?),
    };
    let k = config
        .method_params
        .resolve_k(&snapshots, config.sources.angles.len())?;
    let estimate = run_method(&snapshots, method, k, &config.method_params)?;
    estimate_json(method, &estimate)
}

/// Serialize an estimate exactly as the CLI prints it.
pub fn estimate_json(method: Method, estimate: &DoaEstimate) -> Result<String> {
    let out = EstimateOutput {
        method,
        angles_deg: estimate.angles_deg.clone(),
        diagnostics: estimate.diagnostics.clone(),
    };
    serde_json::to_string(&out).map_err(|e| DoaError::Config(format!("serialize: {e}")))
}

/// `spectrum`: write the angle/value CSV of a spectral method.
pub fn cmd_spectrum(method_name: &str, config_path: &Path, out_path: &Path) -> Result<()> {
    let config = RunConfig::from_path(config_path)?;
    let method: Method = method_name.parse()?;
    if !method.has_spectrum() {
        return Err(DoaError::Config(format!(
            "method '{method}' has no spectrum; use one of: das, capon, music, sbl, spice"
        )));
    }
    let scenario = config.scenario()?;
    let snapshots = generate_snapshots(&scenario);
    let geometry = *snapshots.geometry();
    let params = &config.method_params;

    let spectrum = match method {
        Method::Das => {
            let cov = sample_covariance(&snapshots);
            das_spectrum(&cov, &geometry, &grid_for(params, DEFAULT_GRID_STEP))?
        }
        Method::Capon => {
            let cov = sample_covariance(&snapshots);
            let loading = params.loading.unwrap_or_else(|| default_capon_loading(&cov));
            capon_spectrum(&cov, &geometry, &grid_for(params, DEFAULT_GRID_STEP), loading)?
        }
        Method::Music => {
            let cov = sample_covariance(&snapshots);
            let k = params.resolve_k(&snapshots, config.sources.angles.len())?;
            let split = subspace_split(&cov, k)?;
            music_spectrum(&split, &geometry, &grid_for(params, DEFAULT_GRID_STEP))?
        }
        Method::Sbl => {
            let dict = dict_for(&geometry, params)?;
            let res = sbl(
                &snapshots,
                &dict,
                params.max_iter.unwrap_or(200),
                params.tol.unwrap_or(1e-4),
            )?;
            SpatialSpectrum::new(dict.grid_deg().to_vec(), res.gamma)?
        }
        Method::Spice => {
            let cov = sample_covariance(&snapshots);
            let dict = dict_for(&geometry, params)?;
            let res = spice(
                &cov,
                &dict,
                params.lambda.unwrap_or(0.0),
                params.max_iter.unwrap_or(200),
                params.tol.unwrap_or(1e-8),
            )?;
            SpatialSpectrum::new(dict.grid_deg().to_vec(), res.powers)?
        }
        _ => unreachable!("has_spectrum checked above"),
    };
    std::fs::write(out_path, spectrum_to_csv(&spectrum))?;
    Ok(())
}

fn grid_for(params: &MethodParams, default_step: f64) -> Vec<f64> {
    crate::array_model::uniform_grid(params.grid_step_deg.unwrap_or(default_step))
}

fn dict_for(geometry: &ArrayGeometry, params: &MethodParams) -> DoaResult<AngularDictionary> {
    match params.grid_step_deg {
        Some(step) => AngularDictionary::new(geometry, crate::array_model::uniform_grid(step)),
        None => AngularDictionary::new(
            geometry,
            crate::array_model::uniform_grid(DEFAULT_SPARSE_GRID_STEP),
        ),
    }
}

/// `benchmark`: run a campaign and write the records CSV plus the aggregate
/// summary CSV (default `<out>.summary.csv`).
pub fn cmd_benchmark(
    campaign_path: &Path,
    out_path: &Path,
    summary_path: Option<&Path>,
    workers: usize,
    measure_time: bool,
) -> Result<()> {
    let file = CampaignFile::from_path(campaign_path)?;
    let config = file.campaign()?;
    let records = run_campaign(&config, workers, measure_time)?;
    std::fs::write(out_path, records_to_csv(&records))?;
    let summary = summaries_to_csv(&summarize(&records));
    let summary_path = summary_path
        .map(PathBuf::from)
        .unwrap_or_else(|| default_summary_path(out_path));
    std::fs::write(summary_path, summary)?;
    Ok(())
}

pub fn default_summary_path(out_path: &Path) -> PathBuf {
    out_path.with_extension("summary.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Method;

    #[test]
    fn snr_accepts_numbers_and_inf() {
        let c: SnrDb = serde_json::from_str("12.5").unwrap();
        assert_eq!(c.0, 12.5);
        let c: SnrDb = serde_json::from_str("\"inf\"").unwrap();
        assert!(c.0.is_infinite() && c.0 > 0.0);
        assert!(serde_json::from_str::<SnrDb>("\"loud\"").is_err());
        assert_eq!(serde_json::to_string(&SnrDb(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&SnrDb(3.0)).unwrap(), "3.0");
    }

    #[test]
    fn run_config_parses_and_validates() {
        let json = r#"{
            "geometry": {"m": 8, "spacing": 0.5},
            "sources": {"angles": [-10, 10], "coherent": false},
            "snr_db": 20,
            "n_snapshots": 100,
            "seed": 7
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        let scenario = config.scenario().unwrap();
        assert_eq!(scenario.k_sources(), 2);
        assert_eq!(scenario.source_powers, vec![1.0, 1.0]);

        let bad = r#"{"geometry": {"m": 8}, "sources": {"angles": []}, "snr_db": 0,
                      "n_snapshots": 0, "seed": 1}"#;
        let config: RunConfig = serde_json::from_str(bad).unwrap();
        assert!(config.scenario().is_err());
    }

    #[test]
    fn snapshot_file_round_trip() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let s = Scenario::new(g, vec![5.0], 10.0, 17, 3).unwrap();
        let snapshots = generate_snapshots(&s);
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &snapshots).unwrap();
        assert_eq!(&buf[..4], b"DOAS");
        assert_eq!(buf.len(), 4 + 2 + 4 + 4 + 4 * 17 * 16);
        let back = read_snapshots(buf.as_slice(), g).unwrap();
        assert_eq!(back.data().as_slice(), snapshots.data().as_slice());

        // wrong geometry rejected
        let g6 = ArrayGeometry::half_wavelength(6).unwrap();
        assert!(read_snapshots(buf.as_slice(), g6).is_err());
        // truncated file rejected
        assert!(read_snapshots(&buf[..20], g).is_err());
    }

    #[test]
    fn csv_shapes() {
        let records = vec![TrialRecord {
            method: Method::Das,
            snr_db: 10.0,
            n_snapshots: 100,
            m_sensors: 8,
            scenario_fingerprint: "x".into(),
            trial_index: 0,
            estimated_angles_deg: vec![-10.0, 10.25],
            rmse_deg: Some(0.25),
            resolved: true,
            wall_time_s: 0.0,
        }];
        let csv = records_to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,snr_db,n_snapshots,m_sensors,trial,angles,rmse_deg,resolved,wall_time_s,failed"
        );
        assert_eq!(lines.next().unwrap(), "das,10,100,8,0,-10;10.25,0.25,true,0,false");

        let failed = vec![TrialRecord {
            rmse_deg: None,
            resolved: false,
            estimated_angles_deg: vec![],
            ..records[0].clone()
        }];
        let csv = records_to_csv(&failed);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,false,0,true"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&DoaError::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code_for(&DoaError::InvalidInput("x".into())), EXIT_CONFIG);
        assert_eq!(
            exit_code_for(&DoaError::EstimationFailure("x".into())),
            EXIT_ESTIMATION
        );
        assert_eq!(
            exit_code_for(&DoaError::SingularMatrix("x".into())),
            EXIT_ESTIMATION
        );
        let j = error_json(&DoaError::EstimationFailure("boom".into()));
        assert!(j.starts_with('{') && j.ends_with('}') && !j.contains('\n'));
    }
}

//! Simulate a two-source scenario and compare a few estimators on it.
//!
//! Run with `cargo run --release --example quickstart`.

use doa_core::array_model::ArrayGeometry;
use doa_core::estimate::{run_method, Method, MethodParams};
use doa_core::simulate::{generate_snapshots, Scenario};

fn main() {
    let geometry = ArrayGeometry::half_wavelength(8).unwrap();
    let scenario = Scenario::new(geometry, vec![-10.0, 10.0], 10.0, 200, 42).unwrap();
    let snapshots = generate_snapshots(&scenario);
    println!(
        "two sources at ±10°, SNR {} dB, {} snapshots\n",
        scenario.snr_db, scenario.n_snapshots
    );

    for method in [
        Method::Das,
        Method::Capon,
        Method::Music,
        Method::RootMusic,
        Method::Esprit,
        Method::UnitaryEsprit,
        Method::Dml,
        Method::Spice,
    ] {
        match run_method(&snapshots, method, 2, &MethodParams::default()) {
            Ok(est) => {
                let angles: Vec<String> =
                    est.angles_deg.iter().map(|a| format!("{a:7.3}°")).collect();
                println!("{:<15} {}", method.to_string(), angles.join("  "));
            }
            Err(e) => println!("{:<15} failed: {e}", method.to_string()),
        }
    }
}

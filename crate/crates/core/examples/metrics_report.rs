//! Ranks every method over several simulated drives.

use wichins::dataset::{calibrate, CalibrationConfig};
use wichins::eval::{compare, Method};
use wichins::sim::{scenarios, simulate};
use wichins::{PipelineOptions, VehicleConfig};

fn main() -> wichins::Result<()> {
    let mut sets = Vec::new();
    for (i, name) in ["straight", "circle", "figure-eight"].into_iter().enumerate() {
        let trajectory = scenarios::by_name(name).expect("built-in scenario");
        let raw = simulate(&scenarios::noisy(trajectory, 100 + i as u64))?.recording;
        sets.push((name.to_string(), calibrate(&raw, &CalibrationConfig::default())?.apply(&raw)));
    }
    let config = VehicleConfig::from_recording(&sets[0].1);
    let cmp = compare(&sets, &Method::ALL, &config, &PipelineOptions::default())?;
    print!("{}", cmp.report.to_csv());
    let order: Vec<&str> = cmp.report.ranking().iter().map(|m| m.name()).collect();
    println!("\nranking by mean position error: {}", order.join(" < "));
    Ok(())
}

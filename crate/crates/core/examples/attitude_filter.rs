//! Attitude filter on a simulated drive compared with chassis strapdown.

use wichins::baselines::{run_chassis_ins, InitialAttitude};
use wichins::sim::{scenarios, simulate};
use wichins::{run_wichins, Mode, PipelineOptions, VehicleConfig};

fn main() -> wichins::Result<()> {
    let sim = simulate(&scenarios::noisy(scenarios::figure_eight(), 21))?;
    let rec = &sim.recording;
    let config = VehicleConfig::from_recording(rec);
    let filtered = run_wichins(rec, &config, Mode::TwoWheel, &PipelineOptions::default())?;
    let strapdown = run_chassis_ins(rec, &config, InitialAttitude::default());

    let worst = |sol: &wichins::NavSolution| {
        sol.samples
            .iter()
            .zip(&sim.truth)
            .map(|(s, t)| (s.euler.roll - t.body.euler.roll).abs().max((s.euler.pitch - t.body.euler.pitch).abs()))
            .fold(0.0, f64::max)
    };
    println!("largest roll/pitch error, filter:     {:.2e} rad", worst(&filtered));
    println!("largest roll/pitch error, strapdown:  {:.2e} rad", worst(&strapdown));
    println!("attitude updates rejected by the gate: {}", filtered.diagnostics.attitude_gated);
    Ok(())
}

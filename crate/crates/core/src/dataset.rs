//! Recording storage, static calibration and ground-truth alignment.
//!
//! A recording directory holds one CSV per IMU, one ground-truth CSV and a
//! `manifest.txt` binding them together:
//!
//! ```text
//! format_version = 1
//! imu_rate_hz = 120
//! gt_rate_hz = 5
//! chassis_stream = chassis.csv
//! ground_truth = ground_truth.csv
//! wheel_ids = rl,rr
//! wheel.rl.stream = wheel_rl.csv
//! wheel.rl.hub_position_m = 0,-0.73,0
//! wheel.rl.rolling_radius_m = 0.295
//! wheel.rl.sensor_offset_m = 0
//! wheel.rl.side = left
//! wheel.rl.steerable = false
//! ```
//!
//! IMU CSV columns are `t_s,gx_rads,gy_rads,gz_rads,ax_ms2,ay_ms2,az_ms2`
//! (a `t_ms` time column is accepted and converted). Ground truth columns are
//! `t_s,rn_m,re_m,rd_m,vn_ms,ve_ms,vd_ms`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geo::Vec3;
use crate::kinematics::{Side, WheelGeometry};
use crate::ori::STANDARD_GRAVITY;
use crate::pipeline::NavSolution;
use crate::sim::NoiseSpec;

pub const MANIFEST: &str = "manifest.txt";
pub const IMU_HEADER: [&str; 7] = ["t_s", "gx_rads", "gy_rads", "gz_rads", "ax_ms2", "ay_ms2", "az_ms2"];
pub const GT_HEADER: [&str; 7] = ["t_s", "rn_m", "re_m", "rd_m", "vn_ms", "ve_ms", "vd_ms"];
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub gyro: Vec3,
    pub accel: Vec3,
}

impl ImuSample {
    pub fn new(t: f64, gyro: Vec3, accel: Vec3) -> Self {
        Self { t, gyro, accel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WheelStream {
    pub id: String,
    pub geometry: WheelGeometry,
    pub samples: Vec<ImuSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub imu_rate_hz: f64,
    pub gt_rate_hz: f64,
    pub chassis: Vec<ImuSample>,
    pub wheels: Vec<WheelStream>,
    pub ground_truth: Vec<GroundTruthSample>,
}

impl Recording {
    pub fn wheel_geometries(&self) -> Vec<WheelGeometry> {
        self.wheels.iter().map(|w| w.geometry.clone()).collect()
    }

    pub fn duration(&self) -> f64 {
        match (self.chassis.first(), self.chassis.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

fn fmt_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    cells.join(",")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_imu_csv(path: &Path, samples: &[ImuSample]) -> Result<()> {
    let mut s = IMU_HEADER.join(",");
    s.push('\n');
    for x in samples {
        let g = x.gyro;
        let a = x.accel;
        s.push_str(&fmt_row(&[x.t, g.x, g.y, g.z, a.x, a.y, a.z]));
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn write_ground_truth_csv(path: &Path, samples: &[GroundTruthSample]) -> Result<()> {
    let mut s = GT_HEADER.join(",");
    s.push('\n');
    for x in samples {
        let (r, v) = (x.position, x.velocity);
        s.push_str(&fmt_row(&[x.t, r.x, r.y, r.z, v.x, v.y, v.z]));
        s.push('\n');
    }
    write_text(path, &s)
}

/// Reads a seven-column numeric table with the given header. A `t_ms` first
/// column is rescaled to seconds.
fn read_table(path: &Path, header: &[&str; 7]) -> Result<Vec<[f64; 7]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut time_scale = 1.0;
    let matches = got.len() == 7
        && got[1..].iter().zip(&header[1..]).all(|(a, b)| a == b)
        && match got[0].as_str() {
            "t_s" => true,
            "t_ms" => {
                time_scale = 1e-3;
                true
            }
            _ => false,
        };
    if !matches {
        return Err(Error::Schema {
            file: path.to_path_buf(),
            message: format!("expected columns {}, found {}", header.join(","), got.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if rec.len() != 7 {
            return Err(Error::Schema {
                file: path.to_path_buf(),
                message: format!("row {} has {} fields", i + 1, rec.len()),
            });
        }
        let mut row = [0.0; 7];
        for (j, cell) in rec.iter().enumerate() {
            row[j] = cell.parse().map_err(|_| Error::Schema {
                file: path.to_path_buf(),
                message: format!("row {}: '{cell}' is not a number", i + 1),
            })?;
        }
        row[0] *= time_scale;
        rows.push(row);
    }
    check_monotonic(path, rows.iter().map(|r| r[0]))?;
    Ok(rows)
}

fn check_monotonic(path: &Path, times: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !(t > prev) {
            return Err(Error::NonMonotonic {
                file: path.to_path_buf(),
                row: i + 1,
            });
        }
        prev = t;
    }
    Ok(())
}

pub fn read_imu_csv(path: &Path) -> Result<Vec<ImuSample>> {
    Ok(read_table(path, &IMU_HEADER)?
        .into_iter()
        .map(|r| ImuSample::new(r[0], Vec3::new(r[1], r[2], r[3]), Vec3::new(r[4], r[5], r[6])))
        .collect())
}

pub fn read_ground_truth_csv(path: &Path) -> Result<Vec<GroundTruthSample>> {
    Ok(read_table(path, &GT_HEADER)?
        .into_iter()
        .map(|r| GroundTruthSample {
            t: r[0],
            position: Vec3::new(r[1], r[2], r[3]),
            velocity: Vec3::new(r[4], r[5], r[6]),
        })
        .collect())
}

/// Fails when the mean sample rate is more than 1% away from `expected`.
pub fn check_rate(path: &Path, samples: &[ImuSample], expected: f64) -> Result<()> {
    if samples.len() < 2 {
        return Ok(());
    }
    let span = samples[samples.len() - 1].t - samples[0].t;
    let measured = (samples.len() - 1) as f64 / span;
    if (measured - expected).abs() > 0.01 * expected {
        return Err(Error::RateOutOfTolerance {
            file: path.to_path_buf(),
            measured_hz: measured,
            expected_hz: expected,
        });
    }
    Ok(())
}

/// Flat `key = value` manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("manifest line {}: expected key = value", i + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("manifest is missing '{key}'")))
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("manifest '{key}' = '{v}' is not a number")))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.get(key).is_some() {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn vector(&self, key: &str) -> Result<Vec3> {
        let v = self.require(key)?;
        let parts: Vec<f64> = v
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("manifest '{key}' = '{v}' is not a 3-vector")))?;
        match parts.as_slice() {
            [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
            _ => Err(Error::Config(format!("manifest '{key}' needs three components"))),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

fn wheel_entries(m: &mut Manifest, w: &WheelStream) {
    let g = &w.geometry;
    let p = |k: &str| format!("wheel.{}.{k}", w.id);
    m.set(p("stream"), format!("wheel_{}.csv", w.id));
    m.set(p("hub_position_m"), fmt_row(&g.hub_position));
    m.set(p("rolling_radius_m"), g.rolling_radius);
    m.set(p("sensor_offset_m"), g.sensor_offset);
    m.set(
        p("side"),
        match g.side {
            Side::Left => "left",
            Side::Right => "right",
        },
    );
    m.set(p("steerable"), g.steerable);
}

/// Writes all streams and the manifest into `dir`, creating it if needed.
pub fn write_recording(dir: &Path, rec: &Recording) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut m = Manifest::default();
    m.set("format_version", FORMAT_VERSION);
    m.set("imu_rate_hz", rec.imu_rate_hz);
    m.set("gt_rate_hz", rec.gt_rate_hz);
    m.set("chassis_stream", "chassis.csv");
    m.set("ground_truth", "ground_truth.csv");
    let ids: Vec<&str> = rec.wheels.iter().map(|w| w.id.as_str()).collect();
    m.set("wheel_ids", ids.join(","));
    write_imu_csv(&dir.join("chassis.csv"), &rec.chassis)?;
    write_ground_truth_csv(&dir.join("ground_truth.csv"), &rec.ground_truth)?;
    for w in &rec.wheels {
        wheel_entries(&mut m, w);
        write_imu_csv(&dir.join(format!("wheel_{}.csv", w.id)), &w.samples)?;
    }
    write_text(&dir.join(MANIFEST), &m.render())
}

fn parse_side(s: &str) -> Result<Side> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        _ => Err(Error::Config(format!("wheel side '{s}' is neither left nor right"))),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    s.parse()
        .map_err(|_| Error::Config(format!("'{s}' is not true or false")))
}

/// Loads a recording from its directory or manifest path.
pub fn load_recording(path: &Path) -> Result<Recording> {
    let manifest_path: PathBuf = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
    let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let m = Manifest::parse(&text)?;
    let version = m.number_or("format_version", FORMAT_VERSION as f64)?;
    if version != FORMAT_VERSION as f64 {
        return Err(Error::Config(format!("unsupported format_version {version}")));
    }
    let imu_rate = m.number_or("imu_rate_hz", 120.0)?;
    let gt_rate = m.number_or("gt_rate_hz", 5.0)?;
    let chassis_path = dir.join(
        m.get("chassis_stream")
            .ok_or_else(|| Error::MissingStream("chassis_stream".into()))?,
    );
    let chassis = read_imu_csv(&chassis_path)?;
    check_rate(&chassis_path, &chassis, imu_rate)?;
    let ground_truth = match m.get("ground_truth") {
        Some(p) => read_ground_truth_csv(&dir.join(p))?,
        None => Vec::new(),
    };
    let mut wheels = Vec::new();
    let ids = m.get("wheel_ids").unwrap_or("");
    for id in ids.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let key = |k: &str| format!("wheel.{id}.{k}");
        let stream = m
            .get(&key("stream"))
            .ok_or_else(|| Error::MissingStream(format!("wheel '{id}'")))?;
        let file = dir.join(stream);
        let samples = read_imu_csv(&file)?;
        check_rate(&file, &samples, imu_rate)?;
        let geometry = WheelGeometry {
            hub_position: {
                let h = m.vector(&key("hub_position_m"))?;
                [h.x, h.y, h.z]
            },
            rolling_radius: m.number_or(&key("rolling_radius_m"), 0.295)?,
            sensor_offset: m.number_or(&key("sensor_offset_m"), 0.0)?,
            side: parse_side(m.require(&key("side"))?)?,
            steerable: m.get(&key("steerable")).map(parse_bool).transpose()?.unwrap_or(false),
        };
        geometry.validate()?;
        wheels.push(WheelStream {
            id: id.to_string(),
            geometry,
            samples,
        });
    }
    Ok(Recording {
        imu_rate_hz: imu_rate,
        gt_rate_hz: gt_rate,
        chassis,
        wheels,
        ground_truth,
    })
}

/// Constant offsets estimated for one IMU.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorBias {
    pub gyro: Vec3,
    pub accel: Vec3,
    /// Accelerometer residual spread exceeded three times the nominal noise.
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub window_s: f64,
    pub chassis: SensorBias,
    pub wheels: Vec<SensorBias>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub window_s: f64,
    pub gravity: f64,
    /// Expected per-sample noise of the sensors.
    pub noise: NoiseSpec,
    /// Motion is declared when the gyro spread exceeds this many sigmas.
    pub motion_factor: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            window_s: 5.0,
            gravity: STANDARD_GRAVITY,
            noise: NoiseSpec::tactical_grade(0),
            motion_factor: 5.0,
        }
    }
}

fn mean_and_std(values: &[Vec3]) -> (Vec3, Vec3) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<Vec3>() / n;
    let var = values
        .iter()
        .map(|v| (v - mean).component_mul(&(v - mean)))
        .sum::<Vec3>()
        / n;
    (mean, var.map(f64::sqrt))
}

fn estimate_bias(name: &str, samples: &[ImuSample], cfg: &CalibrationConfig, rate: f64) -> Result<SensorBias> {
    let t0 = samples
        .first()
        .ok_or_else(|| Error::MissingStream(format!("{name} has no samples")))?
        .t;
    let window: Vec<&ImuSample> = samples.iter().take_while(|s| s.t - t0 <= cfg.window_s).collect();
    let gyros: Vec<Vec3> = window.iter().map(|s| s.gyro).collect();
    let accels: Vec<Vec3> = window.iter().map(|s| s.accel).collect();
    let (g_mean, g_std) = mean_and_std(&gyros);
    let (a_mean, a_std) = mean_and_std(&accels);
    let limit = cfg.motion_factor * cfg.noise.gyro_sigma(rate);
    if g_std.max() > limit {
        return Err(Error::CalibrationMotion(format!(
            "{name}: gyro spread {:.3e} rad/s exceeds {:.3e}",
            g_std.max(),
            limit
        )));
    }
    let norm = a_mean.norm();
    let accel = if norm > 0.0 { a_mean - a_mean * (cfg.gravity / norm) } else { Vec3::zeros() };
    Ok(SensorBias {
        gyro: g_mean,
        accel,
        noisy: a_std.max() > 3.0 * cfg.noise.accel_sigma(rate).max(f64::MIN_POSITIVE),
    })
}

/// Estimates constant biases from the stationary window at the start.
pub fn calibrate(rec: &Recording, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    let rate = rec.imu_rate_hz;
    Ok(CalibrationResult {
        window_s: cfg.window_s,
        chassis: estimate_bias("chassis", &rec.chassis, cfg, rate)?,
        wheels: rec
            .wheels
            .iter()
            .map(|w| estimate_bias(&w.id, &w.samples, cfg, rate))
            .collect::<Result<_>>()?,
    })
}

impl CalibrationResult {
    /// Copy of `rec` with the biases subtracted from every sample.
    pub fn apply(&self, rec: &Recording) -> Recording {
        let fix = |s: &[ImuSample], b: &SensorBias| -> Vec<ImuSample> {
            s.iter()
                .map(|x| ImuSample::new(x.t, x.gyro - b.gyro, x.accel - b.accel))
                .collect()
        };
        let mut out = rec.clone();
        out.chassis = fix(&rec.chassis, &self.chassis);
        for (w, b) in out.wheels.iter_mut().zip(&self.wheels) {
            w.samples = fix(&w.samples, b);
        }
        out
    }
}

/// Estimate and truth at one ground-truth epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub t: f64,
    pub est_position: Vec3,
    pub gt_position: Vec3,
    pub est_velocity: Vec3,
    pub gt_velocity: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    pub pairs: Vec<AlignedPair>,
    /// Rotation about the vertical applied to the estimate, rad.
    pub heading_correction: f64,
}

/// Travel needed before the initial course is considered known, metres.
pub const COURSE_DISTANCE: f64 = 2.0;

fn lerp(a: &Vec3, b: &Vec3, u: f64) -> Vec3 {
    a + (b - a) * u
}

/// Ground-truth displacement that counts as the start of travel, metres.
const MOTION_THRESHOLD: f64 = 0.01;

/// Epoch indices bracketing the first `COURSE_DISTANCE` of ground-truth
/// travel: the last sample before motion starts and the first sample that
/// far from it. Any stationary lead-in is excluded, so position drift while
/// parked does not tilt the estimated chord.
fn course_window(points: &[Vec3]) -> Option<(usize, usize)> {
    let p0 = points.first()?;
    let planar = |d: Vec3| d.x.hypot(d.y);
    let moving = points.iter().position(|p| planar(p - p0) > MOTION_THRESHOLD)?;
    let start = moving.saturating_sub(1);
    let end = (start..points.len()).find(|&j| planar(points[j] - points[start]) >= COURSE_DISTANCE)?;
    Some((start, end))
}

fn chord_course(points: &[Vec3], (a, b): (usize, usize)) -> f64 {
    let d = points[b] - points[a];
    d.y.atan2(d.x)
}

/// Interpolates the estimate to ground-truth epochs, moves it to the truth
/// start point and rotates it so the initial courses agree.
pub fn align_ground_truth(nav: &NavSolution, gt: &[GroundTruthSample]) -> Result<AlignedSeries> {
    let s = &nav.samples;
    let (Some(first), Some(last)) = (s.first(), s.last()) else {
        return Err(Error::InsufficientOverlap(0));
    };
    let mut est_p = Vec::new();
    let mut est_v = Vec::new();
    let mut truth = Vec::new();
    let mut k = 0;
    for g in gt.iter().filter(|g| g.t >= first.t && g.t <= last.t) {
        while k + 1 < s.len() && s[k + 1].t < g.t {
            k += 1;
        }
        let (a, b) = if k + 1 < s.len() { (&s[k], &s[k + 1]) } else { (&s[k], &s[k]) };
        let u = if b.t > a.t { ((g.t - a.t) / (b.t - a.t)).clamp(0.0, 1.0) } else { 0.0 };
        est_p.push(lerp(&a.position, &b.position, u));
        est_v.push(lerp(&a.velocity_nav, &b.velocity_nav, u));
        truth.push(*g);
    }
    if truth.len() < 2 {
        return Err(Error::InsufficientOverlap(truth.len()));
    }
    let gt_p: Vec<Vec3> = truth.iter().map(|g| g.position).collect();
    let correction = course_window(&gt_p)
        .map(|w| crate::geo::wrap(chord_course(&gt_p, w) - chord_course(&est_p, w)))
        .unwrap_or(0.0);
    let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), correction);
    let origin_est = est_p[0];
    let origin_gt = gt_p[0];
    let pairs = truth
        .iter()
        .zip(est_p.iter().zip(&est_v))
        .map(|(g, (p, v))| AlignedPair {
            t: g.t,
            est_position: origin_gt + rot * (p - origin_est),
            gt_position: g.position,
            est_velocity: rot * v,
            gt_velocity: g.velocity,
        })
        .collect();
    Ok(AlignedSeries {
        pairs,
        heading_correction: correction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::NavSample;
    use crate::geo::EulerAngles;
    use approx::assert_abs_diff_eq;

    fn stationary(n: usize, bias: Vec3, noise: Option<u64>) -> Vec<ImuSample> {
        let spec = NoiseSpec::tactical_grade(noise.unwrap_or(0));
        let mut gen = crate::sim::ImuNoise::new(&NoiseSpec { gyro_bias: 0.0, accel_bias: 0.0, ..spec }, 0, 120.0);
        (0..n)
            .map(|k| {
                let g = bias;
                let a = Vec3::new(0.0, 0.0, -STANDARD_GRAVITY);
                let (g, a) = if noise.is_some() { gen.corrupt(&g, &a) } else { (g, a) };
                ImuSample::new(k as f64 / 120.0, g, a)
            })
            .collect()
    }

    fn recording(chassis: Vec<ImuSample>) -> Recording {
        Recording {
            imu_rate_hz: 120.0,
            gt_rate_hz: 5.0,
            chassis,
            wheels: Vec::new(),
            ground_truth: Vec::new(),
        }
    }

    #[test]
    fn three_row_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let rec = recording(stationary(3, Vec3::zeros(), None));
        write_recording(dir.path(), &rec).unwrap();
        let back = load_recording(dir.path()).unwrap();
        assert_eq!(back.chassis.len(), 3);
        assert_eq!(back.chassis, rec.chassis);
    }

    #[test]
    fn millisecond_timestamps_convert() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "t_ms,gx_rads,gy_rads,gz_rads,ax_ms2,ay_ms2,az_ms2\n0,0,0,0,0,0,-9.8\n8.5,0,0,0,0,0,-9.8\n").unwrap();
        let s = read_imu_csv(&p).unwrap();
        assert_abs_diff_eq!(s[1].t, 0.0085, epsilon = 1e-15);
    }

    #[test]
    fn duplicate_timestamp_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "t_s,gx_rads,gy_rads,gz_rads,ax_ms2,ay_ms2,az_ms2\n0,0,0,0,0,0,0\n0.1,0,0,0,0,0,0\n0.1,0,0,0,0,0,0\n").unwrap();
        match read_imu_csv(&p) {
            Err(Error::NonMonotonic { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n").unwrap();
        assert!(matches!(read_imu_csv(&p), Err(Error::Schema { .. })));
    }

    #[test]
    fn rate_tolerance() {
        let s: Vec<ImuSample> = (0..100).map(|k| ImuSample::new(k as f64 / 100.0, Vec3::zeros(), Vec3::zeros())).collect();
        assert!(matches!(check_rate(Path::new("x"), &s, 120.0), Err(Error::RateOutOfTolerance { .. })));
        let s: Vec<ImuSample> = (0..100).map(|k| ImuSample::new(k as f64 / 120.5, Vec3::zeros(), Vec3::zeros())).collect();
        assert!(check_rate(Path::new("x"), &s, 120.0).is_ok());
    }

    #[test]
    fn calibration_recovers_gyro_bias() {
        let b = Vec3::new(1e-3, -1e-3, 1e-3);
        let rec = recording(stationary(1200, b, Some(5)));
        let cal = calibrate(&rec, &CalibrationConfig::default()).unwrap();
        assert!((cal.chassis.gyro - b).abs().max() < 1e-4);
    }

    #[test]
    fn zero_bias_stays_small() {
        let rec = recording(stationary(1200, Vec3::zeros(), Some(6)));
        let cal = calibrate(&rec, &CalibrationConfig::default()).unwrap();
        let sigma = NoiseSpec::tactical_grade(0).gyro_sigma(120.0);
        assert!(cal.chassis.gyro.abs().max() < 3.0 * sigma / (601f64).sqrt());
        let again = calibrate(&cal.apply(&rec), &CalibrationConfig::default()).unwrap();
        assert!(again.chassis.gyro.abs().max() < 1e-12);
        assert!(again.chassis.accel.abs().max() < 1e-9);
    }

    #[test]
    fn motion_is_detected() {
        let mut s = stationary(1200, Vec3::zeros(), None);
        for (k, x) in s.iter_mut().enumerate() {
            x.gyro.z = 0.3 * (k as f64 * 0.05).sin();
        }
        assert!(matches!(
            calibrate(&recording(s), &CalibrationConfig::default()),
            Err(Error::CalibrationMotion(_))
        ));
    }

    fn nav(samples: Vec<(f64, Vec3, Vec3)>) -> NavSolution {
        NavSolution {
            samples: samples
                .into_iter()
                .map(|(t, p, v)| NavSample {
                    t,
                    position: p,
                    velocity_body: v,
                    velocity_nav: v,
                    euler: EulerAngles::level(),
                    yaw_rate: 0.0,
                })
                .collect(),
            ..NavSolution::default()
        }
    }

    #[test]
    fn identical_series_align_exactly() {
        let v = Vec3::new(1.0, 0.5, 0.0);
        let n = nav((0..=240).map(|k| (k as f64 / 24.0, v * (k as f64 / 24.0), v)).collect());
        let gt: Vec<GroundTruthSample> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.2;
                GroundTruthSample { t, position: v * t, velocity: v }
            })
            .collect();
        let a = align_ground_truth(&n, &gt).unwrap();
        assert_eq!(a.pairs.len(), 50);
        for p in &a.pairs {
            assert_abs_diff_eq!(p.est_position, p.gt_position, epsilon = 1e-9);
        }
    }

    #[test]
    fn half_period_offset_interpolates_linear_motion() {
        let v = Vec3::new(2.0, 0.0, 0.0);
        let n = nav((0..=1200).map(|k| (k as f64 / 120.0, v * (k as f64 / 120.0), v)).collect());
        let gt: Vec<GroundTruthSample> = (0..49)
            .map(|k| {
                let t = 0.1 + k as f64 * 0.2;
                GroundTruthSample { t, position: v * t, velocity: v }
            })
            .collect();
        let a = align_ground_truth(&n, &gt).unwrap();
        for p in &a.pairs {
            assert_abs_diff_eq!(p.est_position, p.gt_position, epsilon = 1e-9);
        }
    }

    #[test]
    fn heading_is_aligned_to_course() {
        let v = Vec3::new(3.0, 0.0, 0.0);
        let n = nav((0..=1200).map(|k| (k as f64 / 120.0, v * (k as f64 / 120.0), v)).collect());
        let dir = Vec3::new(0.0, 3.0, 0.0);
        let gt: Vec<GroundTruthSample> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.2;
                GroundTruthSample { t, position: Vec3::new(5.0, 1.0, 0.0) + dir * t, velocity: dir }
            })
            .collect();
        let a = align_ground_truth(&n, &gt).unwrap();
        assert_abs_diff_eq!(a.heading_correction, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        for p in &a.pairs {
            assert_abs_diff_eq!(p.est_position, p.gt_position, epsilon = 1e-9);
            assert_abs_diff_eq!(p.est_velocity, p.gt_velocity, epsilon = 1e-12);
        }
    }

    #[test]
    fn too_little_overlap() {
        let n = nav(vec![(0.0, Vec3::zeros(), Vec3::zeros()), (1.0, Vec3::zeros(), Vec3::zeros())]);
        let gt = [GroundTruthSample { t: 0.5, position: Vec3::zeros(), velocity: Vec3::zeros() }];
        assert!(matches!(align_ground_truth(&n, &gt), Err(Error::InsufficientOverlap(1))));
    }

    #[test]
    fn parked_drift_does_not_tilt_heading() {
        // Truth parks for 10 s then drives along x at 2 m/s; the estimate
        // creeps 5 mm sideways while parked and is otherwise exact.
        let pos = |t: f64| Vec3::new(2.0 * (t - 10.0).max(0.0), 0.0, 0.0);
        let creep = |t: f64| Vec3::new(0.0, 5e-4 * t.min(10.0), 0.0);
        let n = nav((0..=2400).map(|k| {
            let t = k as f64 / 120.0;
            (t, pos(t) + creep(t), Vec3::zeros())
        }).collect());
        let gt: Vec<GroundTruthSample> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.2;
                GroundTruthSample { t, position: pos(t), velocity: Vec3::zeros() }
            })
            .collect();
        let a = align_ground_truth(&n, &gt).unwrap();
        assert_abs_diff_eq!(a.heading_correction, 0.0, epsilon = 1e-12);
    }
}

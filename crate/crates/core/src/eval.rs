//! Error metrics, method comparison and plot-ready CSV output.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{run_chassis_ins, run_odometry, run_wheel_ins, InitialAttitude, WheelInsOptions};
use crate::dataset::{align_ground_truth, AlignedPair, AlignedSeries, GroundTruthSample, Recording};
use crate::error::{Error, Result};
use crate::geo::{EulerAngles, Vec3};
use crate::pipeline::{run_wichins, Mode, NavSample, NavSolution, PipelineOptions, VehicleConfig};

fn mean_square(errors: impl ExactSizeIterator<Item = f64>) -> Result<f64> {
    let n = errors.len();
    if n == 0 {
        return Err(Error::EmptyInput("metric needs at least one pair"));
    }
    Ok((errors.sum::<f64>() / n as f64).sqrt())
}

/// Root mean square of `|est_k − truth_k|`.
pub fn rmse(est: &[Vec3], truth: &[Vec3]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::Misaligned(format!("{} estimates, {} truths", est.len(), truth.len())));
    }
    mean_square(est.iter().zip(truth).map(|(a, b)| (a - b).norm_squared()))
}

/// As [`rmse`] on the north and east components only.
pub fn rmse_2d(est: &[Vec3], truth: &[Vec3]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::Misaligned(format!("{} estimates, {} truths", est.len(), truth.len())));
    }
    mean_square(est.iter().zip(truth).map(|(a, b)| (a.x - b.x).powi(2) + (a.y - b.y).powi(2)))
}

pub fn prmse(pairs: &[AlignedPair]) -> Result<f64> {
    mean_square(pairs.iter().map(|p| (p.est_position - p.gt_position).norm_squared()))
}

pub fn prmse_2d(pairs: &[AlignedPair]) -> Result<f64> {
    mean_square(pairs.iter().map(|p| {
        let d = p.est_position - p.gt_position;
        d.x * d.x + d.y * d.y
    }))
}

pub fn vrmse(pairs: &[AlignedPair]) -> Result<f64> {
    mean_square(pairs.iter().map(|p| (p.est_velocity - p.gt_velocity).norm_squared()))
}

/// Position error as a percentage of travelled distance.
pub fn tde(prmse: f64, length: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::Domain(format!("trajectory length must be positive, got {length}")));
    }
    Ok(100.0 * prmse / length)
}

/// Sum of horizontal displacements between consecutive truth samples.
pub fn trajectory_length(gt: &[GroundTruthSample]) -> Result<f64> {
    if gt.len() < 2 {
        return Err(Error::EmptyInput("trajectory length needs two samples"));
    }
    Ok(gt
        .windows(2)
        .map(|w| {
            let d = w[1].position - w[0].position;
            d.x.hypot(d.y)
        })
        .sum())
}

/// Estimators available for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    TwoWheel,
    FourWheel,
    Odometry,
    WheelIns,
    ChassisIns,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::TwoWheel,
        Method::FourWheel,
        Method::Odometry,
        Method::WheelIns,
        Method::ChassisIns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TwoWheel => "2wichins",
            Method::FourWheel => "4wichins",
            Method::Odometry => "odo",
            Method::WheelIns => "wmi",
            Method::ChassisIns => "cmi",
        }
    }

    /// Parses a comma-separated list, keeping the given order.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no methods given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// Runs one estimator on a recording.
pub fn run_method(method: Method, rec: &Recording, config: &VehicleConfig, options: &PipelineOptions) -> Result<NavSolution> {
    let init = InitialAttitude::Leveled {
        window: options.leveling_window,
    };
    match method {
        Method::TwoWheel => run_wichins(rec, config, Mode::TwoWheel, options),
        Method::FourWheel => run_wichins(rec, config, Mode::FourWheel, options),
        Method::Odometry => run_odometry(rec, config),
        Method::WheelIns => run_wheel_ins(
            rec,
            config,
            &WheelInsOptions {
                init,
                ..WheelInsOptions::default()
            },
        ),
        Method::ChassisIns => Ok(run_chassis_ins(rec, config, init)),
    }
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub trajectory: String,
    pub method: Method,
    pub n: usize,
    pub length_m: f64,
    pub prmse: f64,
    pub prmse_2d: f64,
    pub vrmse: f64,
    pub tde: f64,
    pub tde_2d: f64,
    /// `100 · mean(PRMSE) / mean(L)`; only on average rows.
    pub tde_aggregate: Option<f64>,
}

pub const AVERAGE: &str = "average";

impl MetricRow {
    pub fn from_pairs(trajectory: &str, method: Method, pairs: &[AlignedPair], length: f64) -> Result<Self> {
        let p = prmse(pairs)?;
        let p2 = prmse_2d(pairs)?;
        Ok(Self {
            trajectory: trajectory.to_string(),
            method,
            n: pairs.len(),
            length_m: length,
            prmse: p,
            prmse_2d: p2,
            vrmse: vrmse(pairs)?,
            tde: tde(p, length)?,
            tde_2d: tde(p2, length)?,
            tde_aggregate: None,
        })
    }

    pub fn is_average(&self) -> bool {
        self.trajectory == AVERAGE
    }
}

pub const REPORT_HEADER: &str =
    "trajectory,method,n,length_m,prmse_m,prmse_2d_m,vrmse_ms,tde_pct,tde_2d_pct,tde_aggregate_pct";

/// Per-trajectory rows followed by one unweighted average row per method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    /// Sorts rows by trajectory then method and appends the averages.
    pub fn from_rows(mut rows: Vec<MetricRow>) -> Self {
        rows.retain(|r| !r.is_average());
        rows.sort_by(|a, b| a.trajectory.cmp(&b.trajectory).then(a.method.cmp(&b.method)));
        let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        let mut averages = Vec::new();
        for m in methods {
            let sel: Vec<&MetricRow> = rows.iter().filter(|r| r.method == m).collect();
            let k = sel.len() as f64;
            let mean = |f: fn(&MetricRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / k;
            let length = mean(|r| r.length_m);
            let p = mean(|r| r.prmse);
            averages.push(MetricRow {
                trajectory: AVERAGE.to_string(),
                method: m,
                n: sel.iter().map(|r| r.n).sum(),
                length_m: length,
                prmse: p,
                prmse_2d: mean(|r| r.prmse_2d),
                vrmse: mean(|r| r.vrmse),
                tde: mean(|r| r.tde),
                tde_2d: mean(|r| r.tde_2d),
                tde_aggregate: (length > 0.0).then(|| 100.0 * p / length),
            });
        }
        rows.extend(averages);
        Self { rows }
    }

    pub fn average(&self, method: Method) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.is_average() && r.method == method)
    }

    pub fn row(&self, trajectory: &str, method: Method) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.trajectory == trajectory && r.method == method)
    }

    /// Methods from best to worst average PRMSE.
    pub fn ranking(&self) -> Vec<Method> {
        let mut avg: Vec<&MetricRow> = self.rows.iter().filter(|r| r.is_average()).collect();
        avg.sort_by(|a, b| a.prmse.total_cmp(&b.prmse));
        avg.into_iter().map(|r| r.method).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let agg = r.tde_aggregate.map(|x| format!("{x}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.trajectory, r.method, r.n, r.length_m, r.prmse, r.prmse_2d, r.vrmse, r.tde, r.tde_2d, agg
            ));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Aligns one solution against truth and scores it.
pub fn evaluate(trajectory: &str, method: Method, nav: &NavSolution, gt: &[GroundTruthSample]) -> Result<(MetricRow, AlignedSeries)> {
    let aligned = align_ground_truth(nav, gt)?;
    let used: Vec<GroundTruthSample> = gt
        .iter()
        .filter(|g| aligned.pairs.first().is_some_and(|p| g.t >= p.t) && aligned.pairs.last().is_some_and(|p| g.t <= p.t))
        .copied()
        .collect();
    let length = trajectory_length(&used)?;
    Ok((MetricRow::from_pairs(trajectory, method, &aligned.pairs, length)?, aligned))
}

/// Result of one method on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub trajectory: String,
    pub method: Method,
    pub solution: NavSolution,
    pub aligned: AlignedSeries,
    pub row: MetricRow,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Comparison {
    pub report: MetricReport,
    /// Sorted by trajectory, then method.
    pub runs: Vec<MethodRun>,
}

/// Runs every method on every trajectory in parallel and merges the
/// results in sorted order.
pub fn compare(
    trajectories: &[(String, Recording)],
    methods: &[Method],
    config: &VehicleConfig,
    options: &PipelineOptions,
) -> Result<Comparison> {
    let jobs: Vec<(usize, Method)> = (0..trajectories.len())
        .flat_map(|t| methods.iter().map(move |&m| (t, m)))
        .collect();
    let mut runs = jobs
        .par_iter()
        .map(|&(t, m)| {
            let (name, rec) = &trajectories[t];
            let solution = run_method(m, rec, config, options)?;
            let (row, aligned) = evaluate(name, m, &solution, &rec.ground_truth)?;
            Ok(MethodRun {
                trajectory: name.clone(),
                method: m,
                solution,
                aligned,
                row,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.trajectory.cmp(&b.trajectory).then(a.method.cmp(&b.method)));
    let report = MetricReport::from_rows(runs.iter().map(|r| r.row.clone()).collect());
    Ok(Comparison { report, runs })
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// `track_<traj>_<method>.csv` and `err_<traj>_<method>.csv`.
pub fn write_track_files(dir: &Path, run: &MethodRun) -> Result<()> {
    let stem = format!("{}_{}", run.trajectory, run.method);
    write_rows(
        &dir.join(format!("track_{stem}.csv")),
        "t_s,est_n_m,est_e_m,est_d_m,gt_n_m,gt_e_m,gt_d_m",
        run.aligned.pairs.iter().map(|p| {
            let (e, g) = (p.est_position, p.gt_position);
            vec![p.t, e.x, e.y, e.z, g.x, g.y, g.z]
        }),
    )?;
    write_rows(
        &dir.join(format!("err_{stem}.csv")),
        "t_s,err_n_m,err_e_m,err_d_m,err_vn_ms,err_ve_ms,err_vd_ms",
        run.aligned.pairs.iter().map(|p| {
            let d = p.est_position - p.gt_position;
            let v = p.est_velocity - p.gt_velocity;
            vec![p.t, d.x, d.y, d.z, v.x, v.y, v.z]
        }),
    )
}

/// `yawrate_<traj>.csv`: estimated heading rate of each method on the
/// epochs of the first.
pub fn write_yaw_rate_file(dir: &Path, trajectory: &str, runs: &[&MethodRun]) -> Result<()> {
    let Some(first) = runs.first() else {
        return Ok(());
    };
    let mut header = String::from("t_s");
    for r in runs {
        header.push_str(&format!(",{}_rads", r.method));
    }
    let n = runs.iter().map(|r| r.solution.samples.len()).min().unwrap_or(0);
    write_rows(
        &dir.join(format!("yawrate_{trajectory}.csv")),
        &header,
        (0..n).map(|k| {
            let mut row = vec![first.solution.samples[k].t];
            row.extend(runs.iter().map(|r| r.solution.samples[k].yaw_rate));
            row
        }),
    )
}

/// Report plus every plot file for a comparison.
pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    cmp.report.write(&dir.join("report.csv"))?;
    for run in &cmp.runs {
        write_track_files(dir, run)?;
    }
    let mut names: Vec<&str> = cmp.runs.iter().map(|r| r.trajectory.as_str()).collect();
    names.dedup();
    for name in names {
        let sel: Vec<&MethodRun> = cmp.runs.iter().filter(|r| r.trajectory == name).collect();
        write_yaw_rate_file(dir, name, &sel)?;
    }
    Ok(())
}

pub const SOLUTION_HEADER: &str =
    "t_s,rn_m,re_m,rd_m,vbx_ms,vby_ms,vbz_ms,vn_ms,ve_ms,vd_ms,roll_rad,pitch_rad,yaw_rad,yaw_rate_rads";

pub fn write_solution(path: &Path, sol: &NavSolution) -> Result<()> {
    write_rows(
        path,
        SOLUTION_HEADER,
        sol.samples.iter().map(|s| {
            let (r, b, n, e) = (s.position, s.velocity_body, s.velocity_nav, s.euler);
            vec![s.t, r.x, r.y, r.z, b.x, b.y, b.z, n.x, n.y, n.z, e.roll, e.pitch, e.yaw, s.yaw_rate]
        }),
    )
}

pub fn read_solution(path: &Path) -> Result<NavSolution> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != SOLUTION_HEADER {
        return Err(Error::Schema {
            file: path.to_path_buf(),
            message: format!("expected columns {SOLUTION_HEADER}"),
        });
    }
    let mut sol = NavSolution::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Schema {
                file: path.to_path_buf(),
                message: format!("row {} is not numeric", i + 1),
            })?;
        if v.len() != 14 {
            return Err(Error::Schema {
                file: path.to_path_buf(),
                message: format!("row {} has {} fields", i + 1, v.len()),
            });
        }
        if sol.samples.last().is_some_and(|s| !(v[0] > s.t)) {
            return Err(Error::NonMonotonic {
                file: path.to_path_buf(),
                row: i + 1,
            });
        }
        sol.samples.push(NavSample {
            t: v[0],
            position: Vec3::new(v[1], v[2], v[3]),
            velocity_body: Vec3::new(v[4], v[5], v[6]),
            velocity_nav: Vec3::new(v[7], v[8], v[9]),
            euler: EulerAngles::new(v[10], v[11], v[12]),
            yaw_rate: v[13],
        });
    }
    Ok(sol)
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::adaptive::AdaptiveConfig;
use crate::random::derive_seed;

use super::design::WallDesign;
use super::run::{run_build, BuildState, EventKind, Mode, NoiseModel};
use super::timing::{Subprocess, TimingModel};
use super::SimError;

/// Per-course mean absolute error of placed brick tops against the course
/// target level. `None` for courses with no placed brick.
pub fn course_mae(state: &BuildState, design: &WallDesign) -> Vec<Option<f64>> {
    let mut acc = vec![(0.0, 0usize); design.courses];
    for p in &state.placed {
        if let (Some(slot), Some(target)) = (
            acc.get_mut(p.course_index),
            state.course_targets.get(p.course_index),
        ) {
            slot.0 += (p.true_pose.translation.z - target).abs();
            slot.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(sum, n)| (n > 0).then(|| sum / n as f64))
        .collect()
}

/// Per-course signed mean of brick top height minus the course target level.
pub fn course_mean_error(state: &BuildState, design: &WallDesign) -> Vec<Option<f64>> {
    let mut acc = vec![(0.0, 0usize); design.courses];
    for p in &state.placed {
        if let (Some(slot), Some(target)) = (
            acc.get_mut(p.course_index),
            state.course_targets.get(p.course_index),
        ) {
            slot.0 += p.true_pose.translation.z - target;
            slot.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(sum, n)| (n > 0).then(|| sum / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub subprocess: Subprocess,
    pub total: f64,
    pub share: f64,
    pub per_brick: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub bricks: usize,
    pub total: f64,
    pub per_brick_total: f64,
}

impl TimingReport {
    fn from_totals(totals: &BTreeMap<Subprocess, f64>, bricks: usize) -> Self {
        let total: f64 = totals.values().sum();
        let per = |x: f64| if bricks == 0 { 0.0 } else { x / bricks as f64 };
        let rows = Subprocess::ALL
            .iter()
            .map(|p| {
                let t = totals.get(p).copied().unwrap_or(0.0);
                TimingRow {
                    subprocess: *p,
                    total: t,
                    share: if total > 0.0 { t / total } else { 0.0 },
                    per_brick: per(t),
                }
            })
            .collect();
        Self {
            rows,
            bricks,
            total,
            per_brick_total: per(total),
        }
    }

    pub fn share(&self, p: Subprocess) -> f64 {
        self.rows
            .iter()
            .find(|r| r.subprocess == p)
            .map_or(0.0, |r| r.share)
    }
}

fn timing_totals(state: &BuildState) -> (BTreeMap<Subprocess, f64>, usize) {
    let mut totals = BTreeMap::new();
    let mut bricks = std::collections::BTreeSet::new();
    for e in &state.events {
        if let EventKind::Subprocess(p) = e.kind {
            *totals.entry(p).or_insert(0.0) += e.duration;
            if let Some(id) = &e.brick_id {
                bricks.insert(id.clone());
            }
        }
    }
    (totals, bricks.len())
}

/// Time spent per sub-process across the build, as totals, shares and
/// per-brick means.
pub fn timing_report(state: &BuildState) -> TimingReport {
    let (totals, bricks) = timing_totals(state);
    TimingReport::from_totals(&totals, bricks)
}

/// Ordinary least-squares line with slope inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// One-sided p-value for `slope > 0`.
    pub p_positive: f64,
    pub ci95: (f64, f64),
}

impl Trend {
    pub fn fit(points: &[(f64, f64)]) -> Option<Self> {
        let n = points.len();
        if n < 3 {
            return None;
        }
        let nf = n as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx <= 0.0 {
            return None;
        }
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let dof = nf - 2.0;
        let stderr = (sse / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof).ok()?;
        let (p_positive, half) = if stderr > 0.0 {
            (1.0 - t.cdf(slope / stderr), t.inverse_cdf(0.975) * stderr)
        } else {
            (if slope > 0.0 { 0.0 } else { 1.0 }, 0.0)
        };
        Some(Self {
            n,
            slope,
            intercept,
            slope_stderr: stderr,
            p_positive,
            ci95: (slope - half, slope + half),
        })
    }

    pub fn ci_contains_zero(&self) -> bool {
        self.ci95.0 <= 0.0 && 0.0 <= self.ci95.1
    }
}

/// Results of many seeded builds of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mode: Mode,
    pub trials: usize,
    /// Per course: (mean, std, number of builds reaching the course), MAE in m.
    pub course_mae: Vec<(f64, f64, usize)>,
    pub completed_rate: f64,
    pub collision_rate: f64,
    pub bond_gap_rate: f64,
    pub timing: TimingReport,
    /// Trend of the absolute per-course mean error over (course index,
    /// |mean error|) of every build.
    pub error_trend: Option<Trend>,
}

/// Runs builds with the seeds `derive_seed(noise.master_seed, i)` for
/// `i in 0..trials`, in parallel. Results are ordered by trial index.
pub fn run_trials(
    design: &WallDesign,
    noise: &NoiseModel,
    mode: Mode,
    timing: &TimingModel,
    cfg: &AdaptiveConfig,
    trials: usize,
) -> Result<Vec<BuildState>, SimError> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let n = noise.with_seed(derive_seed(noise.master_seed, i as u64));
            run_build(design, &n, mode, timing, cfg)
        })
        .collect()
}

pub fn aggregate(states: &[BuildState], design: &WallDesign) -> Aggregate {
    let trials = states.len();
    let mut per_course: Vec<Vec<f64>> = vec![Vec::new(); design.courses];
    let mut points = Vec::new();
    let mut totals = BTreeMap::new();
    let mut bricks = 0;
    for s in states {
        for (k, m) in course_mae(s, design).into_iter().enumerate() {
            if let Some(m) = m {
                per_course[k].push(m);
            }
        }
        for (k, e) in course_mean_error(s, design).into_iter().enumerate() {
            if let Some(e) = e {
                points.push((k as f64, e.abs()));
            }
        }
        let (t, b) = timing_totals(s);
        for (p, v) in t {
            *totals.entry(p).or_insert(0.0) += v;
        }
        bricks += b;
    }
    let rate = |f: &dyn Fn(&BuildState) -> bool| {
        if trials == 0 {
            0.0
        } else {
            states.iter().filter(|s| f(s)).count() as f64 / trials as f64
        }
    };
    Aggregate {
        mode: states.first().map_or(Mode::Adaptive, |s| s.mode),
        trials,
        course_mae: per_course.iter().map(|v| mean_std(v)).collect(),
        completed_rate: rate(&|s| !s.outcome.is_failure()),
        collision_rate: rate(&|s| s.outcome.is_collision()),
        bond_gap_rate: rate(&|s| matches!(s.outcome, super::Outcome::BondGapFailure { .. })),
        timing: TimingReport::from_totals(&totals, bricks),
        error_trend: Trend::fit(&points),
    }
}

fn mean_std(v: &[f64]) -> (f64, f64, usize) {
    let n = v.len();
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let m = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (m, var.sqrt(), n)
}

fn push_timing_rows(out: &mut String, t: &TimingReport) {
    for r in &t.rows {
        let _ = writeln!(
            out,
            "timing_share_pct,{},{:.1},",
            r.subprocess.name(),
            100.0 * r.share
        );
    }
    for r in &t.rows {
        let _ = writeln!(
            out,
            "timing_per_brick_s,{},{:.1},",
            r.subprocess.name(),
            r.per_brick
        );
    }
    let _ = writeln!(out, "timing_per_brick_s,total,{:.1},", t.per_brick_total);
}

/// CSV summary of one build: `metric,key,value,std`.
pub fn build_summary_csv(state: &BuildState, design: &WallDesign) -> String {
    let mut out = String::from("metric,key,value,std\n");
    for (k, m) in course_mae(state, design).into_iter().enumerate() {
        if let Some(m) = m {
            let _ = writeln!(out, "course_mae_mm,{k},{:.4},", m * 1e3);
        }
    }
    let outcome = match &state.outcome {
        super::Outcome::Completed => "completed".to_string(),
        super::Outcome::CollisionFailure { brick_id } => format!("collision:{brick_id}"),
        super::Outcome::BondGapFailure { brick_id } => format!("bond_gap:{brick_id}"),
    };
    let _ = writeln!(out, "outcome,{outcome},{},", state.placed.len());
    push_timing_rows(&mut out, &timing_report(state));
    out
}

/// CSV over many builds: per-course MAE mean/std, outcome rates, timing.
pub fn aggregate_csv(agg: &Aggregate) -> String {
    let mut out = String::from("metric,key,value,std\n");
    for (k, (m, s, n)) in agg.course_mae.iter().enumerate() {
        if *n > 0 {
            let _ = writeln!(out, "course_mae_mm,{k},{:.4},{:.4}", m * 1e3, s * 1e3);
        }
    }
    let _ = writeln!(out, "trials,count,{},", agg.trials);
    let _ = writeln!(out, "outcome_rate,completed,{:.4},", agg.completed_rate);
    let _ = writeln!(out, "outcome_rate,collision,{:.4},", agg.collision_rate);
    let _ = writeln!(out, "outcome_rate,bond_gap,{:.4},", agg.bond_gap_rate);
    if let Some(t) = &agg.error_trend {
        let _ = writeln!(
            out,
            "error_trend,slope_mm_per_course,{:.5},{:.5}",
            t.slope * 1e3,
            t.slope_stderr * 1e3
        );
        let _ = writeln!(out, "error_trend,p_positive,{:.3e},", t.p_positive);
    }
    push_timing_rows(&mut out, &agg.timing);
    out
}

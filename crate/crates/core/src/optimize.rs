//! Derivative-free search over convex bodies given by truncated support
//! functions.
//!
//! Shapes are `h(theta) = R + sum_{m=2}^{M} a_m cos(m theta) + b_m sin(m theta)`
//! rescaled to unit area after every move; candidates with `h + h'' < 0`
//! somewhere are rejected before any solve. The search is a seeded
//! coordinate-wise hill climb with a shrinking step, used to probe the
//! minima of `F_gamma = y - gamma x` and to push the envelopes of the
//! diagram at a fixed abscissa.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{evaluate_shape_with, FemConfig, FemError, ShapeMetrics};
use crate::geometry::{polygon_from_support, ConvexPolygon, GeometryError, SupportFunction};
use crate::shapederiv::{classify_gamma, ShapeDerivError};
use crate::special::{lambda1_ball, unit_disk_radius};

/// Highest Fourier mode of the search space.
pub const ORDER: usize = 8;
/// Boundary samples of the polygon built from a support function.
pub const SUPPORT_SAMPLES: usize = 256;
/// Step factor applied after a run of rejections.
pub const SHRINK: f64 = 0.7;
/// Consecutive rejections that trigger a shrink.
pub const REJECTIONS_PER_SHRINK: usize = 10;
/// The climb has converged once the step multiplier falls below this.
pub const MIN_STEP: f64 = 1e-2;
/// Smallest admissible evaluation budget.
pub const MIN_BUDGET: usize = 100;
/// Relative tolerance on `x` for a pinned probe.
pub const PIN_TOL: f64 = 0.005;
/// Penalty rounds of a probe; the weight grows tenfold each round.
pub const PENALTY_ROUNDS: usize = 3;
pub const PENALTY_RAMP: f64 = 10.0;
pub const TRACE_HEADER: [&str; 5] = ["iteration", "score", "x", "y", "accepted"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("budget {budget} is below the minimum {MIN_BUDGET}")]
    BudgetTooSmall { budget: usize },
    #[error("budget exhausted before the step size converged (best score {})", best.score)]
    BudgetExhausted { best: Box<Optimum> },
    #[error("no candidate within {PIN_TOL} of x = {target} (closest x = {closest})")]
    PinFailed { target: f64, closest: f64 },
    #[error("target x = {target} must exceed lambda_1 of the unit disk {min}")]
    InvalidTarget { target: f64, min: f64 },
    #[error("no admissible candidate could be evaluated")]
    NoCandidate,
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    ShapeDeriv(#[from] ShapeDerivError),
}

impl OptimizeError {
    /// The best-so-far result carried by [`OptimizeError::BudgetExhausted`].
    pub fn into_best(self) -> Option<Optimum> {
        match self {
            Self::BudgetExhausted { best } => Some(*best),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, OptimizeError>;

/// `F_gamma = y - gamma x` in unit-area coordinates.
pub fn f_gamma(metrics: &ShapeMetrics, gamma: f64) -> f64 {
    metrics.y - gamma * metrics.x
}

/// Absolute error estimate of [`f_gamma`] from the solver estimates.
pub fn f_gamma_error(metrics: &ShapeMetrics, gamma: f64) -> f64 {
    metrics.torsion_err * metrics.y + gamma.abs() * metrics.lambda1_err * metrics.x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Total number of proposals over all restarts.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub search_levels: usize,
    pub final_levels: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: 400, restarts: 2, seed: 0, search_levels: 2, final_levels: 3 }
    }
}

/// One row of a search trace. `score` is the best score after the
/// proposal, so it never increases; `x`, `y` are the proposal's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub score: f64,
    pub x: f64,
    pub y: f64,
    pub accepted: bool,
}

pub fn write_trace<W: Write>(trace: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.12e}", r.score),
            format!("{:.12e}", r.x),
            format!("{:.12e}", r.y),
            r.accepted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// State of one hill climb.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub current: SupportFunction,
    pub metrics: ShapeMetrics,
    pub score: f64,
    /// Abscissa pinned by a penalty, if any.
    pub target_x: Option<f64>,
    pub penalty_weight: f64,
    pub seed: u64,
    pub budget: usize,
    pub used: usize,
    /// Step multiplier relative to the per-mode scale `R / (m^2 - 1)`.
    pub step: f64,
}

/// Result of a search, with the final metrics on the finer mesh hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub support: SupportFunction,
    pub polygon: ConvexPolygon,
    pub metrics: ShapeMetrics,
    /// Objective of `metrics`.
    pub score: f64,
    /// Objective of the best candidate during the search.
    pub search_score: f64,
    pub trace: Vec<TraceRow>,
    pub seed: u64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Corner diagnostics of a support function: the smallest radius of
/// curvature `h + h''` and the fraction of normal directions where it is
/// below 5% of the unit-disk radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerStats {
    pub min_curvature_radius: f64,
    pub corner_fraction: f64,
}

pub fn corner_stats(h: &SupportFunction) -> CornerStats {
    let n = 1024;
    let threshold = 0.05 * unit_disk_radius();
    let mut min = f64::INFINITY;
    let mut corners = 0;
    for k in 0..n {
        let (v, _, v2) = h.eval(2.0 * PI * k as f64 / n as f64);
        let rho = v + v2;
        min = min.min(rho);
        if rho < threshold {
            corners += 1;
        }
    }
    CornerStats { min_curvature_radius: min, corner_fraction: corners as f64 / n as f64 }
}

/// Rescales to unit area.
fn unit_area(h: &SupportFunction) -> SupportFunction {
    h.scaled(1.0 / h.area().sqrt())
}

fn mode_scale(m: usize) -> f64 {
    unit_disk_radius() / ((m * m - 1) as f64)
}

/// Disk perturbed by random modes `2..=ORDER`, with total curvature
/// amplitude `sum (m^2 - 1)(|a_m| + |b_m|) = 0.9 R` weighted towards low
/// modes.
fn random_start(rng: &mut ChaCha8Rng) -> SupportFunction {
    let r = unit_disk_radius();
    let mut a = vec![0.0; ORDER];
    let mut b = vec![0.0; ORDER];
    let mut total = 0.0;
    for m in 2..=ORDER {
        for c in [&mut a[m - 1], &mut b[m - 1]] {
            *c = rng.gen_range(-1.0..1.0) * mode_scale(m) / (m * m) as f64;
            total += ((m * m - 1) as f64) * c.abs();
        }
    }
    let k = 0.9 * r / total;
    unit_area(&SupportFunction::new(
        r,
        a.iter().map(|c| c * k).collect(),
        b.iter().map(|c| c * k).collect(),
    ))
}

/// `(1 - t) disk + t S`, where `S` is the Fejer mean of order `ORDER` of the
/// support function of a segment. Every `t in [0, 1]` is convex because the
/// Fejer kernel is positive; `x` grows from the disk value to about 35.
fn segment_blend(t: f64) -> SupportFunction {
    let mut a = vec![0.0; ORDER];
    for k in 1..=ORDER / 2 {
        let m = 2 * k;
        let fejer = 1.0 - m as f64 / (ORDER as f64 + 1.0);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        a[m - 1] = t * fejer * sign * 4.0 / (PI * (4 * k * k - 1) as f64);
    }
    let r = (1.0 - t) * unit_disk_radius() + t * 2.0 / PI;
    unit_area(&SupportFunction::new(r, a, vec![0.0; ORDER]))
}

fn evaluate_support(h: &SupportFunction, config: &FemConfig) -> Option<(ConvexPolygon, ShapeMetrics)> {
    if !h.is_convex() {
        return None;
    }
    let p = polygon_from_support(h, SUPPORT_SAMPLES).ok()?;
    let m = evaluate_shape_with(&p, config).ok()?;
    Some((p, m))
}

/// Outcome of one climb.
struct Climb {
    state: SearchState,
    trace: Vec<TraceRow>,
    converged: bool,
}

/// Hill climb from `start` for at most `budget` proposals. `observe` sees
/// every evaluated candidate.
fn climb(
    start: SupportFunction,
    objective: &dyn Fn(&ShapeMetrics) -> f64,
    budget: usize,
    seed: u64,
    config: &FemConfig,
    observe: &mut dyn FnMut(&SupportFunction, &ShapeMetrics),
    first_iteration: usize,
) -> Option<Climb> {
    let (_, metrics) = evaluate_support(&start, config)?;
    observe(&start, &metrics);
    let mut state = SearchState {
        score: objective(&metrics),
        current: start,
        metrics,
        target_x: None,
        penalty_weight: 0.0,
        seed,
        budget,
        used: 1,
        step: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = vec![TraceRow {
        iteration: first_iteration,
        score: state.score,
        x: metrics.x,
        y: metrics.y,
        accepted: true,
    }];
    let mut rejections = 0;
    let mut converged = false;
    while state.used < budget {
        if state.step < MIN_STEP {
            converged = true;
            break;
        }
        let m = rng.gen_range(2..=ORDER);
        let use_sin = rng.gen_bool(0.5);
        let delta = state.step * mode_scale(m) * rng.gen_range(-1.0..1.0);
        let mut cand = state.current.clone();
        let coeffs = if use_sin { &mut cand.sin_coeffs } else { &mut cand.cos_coeffs };
        coeffs.resize(ORDER, 0.0);
        coeffs[m - 1] += delta;
        let cand = unit_area(&cand);
        state.used += 1;
        let accepted = match evaluate_support(&cand, config) {
            Some((_, cm)) => {
                observe(&cand, &cm);
                let score = objective(&cm);
                let better = score.is_finite() && score < state.score;
                if better {
                    state.current = cand;
                    state.metrics = cm;
                    state.score = score;
                }
                trace.push(TraceRow {
                    iteration: first_iteration + state.used - 1,
                    score: state.score,
                    x: cm.x,
                    y: cm.y,
                    accepted: better,
                });
                better
            }
            None => false,
        };
        if accepted {
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= REJECTIONS_PER_SHRINK {
                state.step *= SHRINK;
                rejections = 0;
            }
        }
    }
    if state.step < MIN_STEP {
        converged = true;
    }
    Some(Climb { state, trace, converged })
}

fn finish(climb: Climb, objective: &dyn Fn(&ShapeMetrics) -> f64, final_cfg: &FemConfig) -> Result<Optimum> {
    let polygon = polygon_from_support(&climb.state.current, SUPPORT_SAMPLES)?;
    let metrics = evaluate_shape_with(&polygon, final_cfg)?;
    Ok(Optimum {
        support: climb.state.current,
        polygon,
        score: objective(&metrics),
        metrics,
        search_score: climb.state.score,
        trace: climb.trace,
        seed: climb.state.seed,
        evaluations: climb.state.used,
        converged: climb.converged,
    })
}

/// [`minimize_f_gamma_with`] with default levels.
pub fn minimize_f_gamma(gamma: f64, budget: usize, restarts: usize, seed: u64) -> Result<Optimum> {
    minimize_f_gamma_with(gamma, &SearchConfig { budget, restarts, seed, ..SearchConfig::default() })
}

/// Minimizes `F_gamma` by parallel hill climbs sharing the budget. When the
/// second variation at the disk is indefinite, the first restart starts
/// from the disk deformed along the descent mode. The best restart is
/// chosen by `(score, seed)`, so the result does not depend on scheduling.
/// Returns [`OptimizeError::BudgetExhausted`] with the best shape when the
/// step had not converged.
pub fn minimize_f_gamma_with(gamma: f64, config: &SearchConfig) -> Result<Optimum> {
    if config.budget < MIN_BUDGET {
        return Err(OptimizeError::BudgetTooSmall { budget: config.budget });
    }
    let restarts = config.restarts.max(1);
    let witness = classify_gamma(gamma)?.negative;
    let per_restart = config.budget / restarts;
    let search_cfg = FemConfig::with_levels(config.search_levels);
    let objective = move |m: &ShapeMetrics| f_gamma(m, gamma);
    let climbs: Vec<Option<Climb>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e_ed0f_57a7);
            let start = match (&witness, r) {
                (Some(w), 0) => {
                    let p = &w.perturbation;
                    let mut h = p.support(0.9 * p.max_epsilon);
                    h.cos_coeffs.resize(ORDER, 0.0);
                    h.sin_coeffs.resize(ORDER, 0.0);
                    unit_area(&h)
                }
                _ => random_start(&mut rng),
            };
            climb(start, &objective, per_restart, seed, &search_cfg, &mut |_, _| {}, 0)
        })
        .collect();
    let best = climbs
        .into_iter()
        .flatten()
        .min_by(|a, b| a.state.score.total_cmp(&b.state.score).then(a.state.seed.cmp(&b.state.seed)))
        .ok_or(OptimizeError::NoCandidate)?;
    let converged = best.converged;
    let out = finish(best, &objective, &FemConfig::with_levels(config.final_levels))?;
    if converged {
        Ok(out)
    } else {
        Err(OptimizeError::BudgetExhausted { best: Box::new(out) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// [`probe_envelope_with`] with default levels and one chain.
pub fn probe_envelope(x_target: f64, sense: Sense, budget: usize, seed: u64) -> Result<Optimum> {
    probe_envelope_with(x_target, sense, &SearchConfig { budget, restarts: 1, seed, ..SearchConfig::default() })
}

/// Extremizes `y` at `x = x_target` by minimizing `+-y + w (x - x_target)^2`
/// over [`PENALTY_ROUNDS`] rounds with `w` growing tenfold per round. The
/// start is the blend of disk and smoothed segment whose `x` is closest to
/// the target. Returns the best candidate seen within [`PIN_TOL`] of the
/// target; its trace is the concatenation of all rounds.
pub fn probe_envelope_with(x_target: f64, sense: Sense, config: &SearchConfig) -> Result<Optimum> {
    let min = lambda1_ball();
    if !(x_target > min) {
        return Err(OptimizeError::InvalidTarget { target: x_target, min });
    }
    if config.budget < MIN_BUDGET {
        return Err(OptimizeError::BudgetTooSmall { budget: config.budget });
    }
    let search_cfg = FemConfig::with_levels(config.search_levels);
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };

    let mut best: Option<(SupportFunction, f64)> = None;
    let mut closest = f64::NAN;
    let mut observe = |h: &SupportFunction, m: &ShapeMetrics| {
        if (m.x - x_target).abs() <= PIN_TOL * x_target {
            let v = sign * m.y;
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((h.clone(), v));
            }
        }
        if closest.is_nan() || (m.x - x_target).abs() < (closest - x_target).abs() {
            closest = m.x;
        }
    };

    // Bisection along the blend for the start.
    let mut used = 0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut start = segment_blend(1.0);
    for _ in 0..12 {
        let t = 0.5 * (lo + hi);
        let h = segment_blend(t);
        used += 1;
        let Some((_, m)) = evaluate_support(&h, &search_cfg) else { break };
        observe(&h, &m);
        start = h;
        if m.x < x_target {
            lo = t;
        } else {
            hi = t;
        }
    }

    let w0 = 1.0 / (0.01 * x_target).powi(2);
    let round_budget = (config.budget - used) / PENALTY_ROUNDS;
    let mut trace = Vec::new();
    let mut last: Option<Climb> = None;
    for round in 0..PENALTY_ROUNDS {
        let w = w0 * PENALTY_RAMP.powi(round as i32);
        let objective = move |m: &ShapeMetrics| sign * m.y + w * (m.x - x_target).powi(2);
        let from = last.as_ref().map_or_else(|| start.clone(), |c| c.state.current.clone());
        let seed = config.seed.wrapping_add(round as u64);
        let Some(mut c) = climb(from, &objective, round_budget, seed, &search_cfg, &mut observe, trace.len()) else {
            break;
        };
        c.state.target_x = Some(x_target);
        c.state.penalty_weight = w;
        trace.append(&mut c.trace);
        last = Some(c);
    }
    let Some((support, _)) = best else {
        return Err(OptimizeError::PinFailed { target: x_target, closest });
    };
    let polygon = polygon_from_support(&support, SUPPORT_SAMPLES)?;
    let metrics = evaluate_shape_with(&polygon, &FemConfig::with_levels(config.final_levels))?;
    if (metrics.x - x_target).abs() > PIN_TOL * x_target {
        return Err(OptimizeError::PinFailed { target: x_target, closest: metrics.x });
    }
    let last = last.ok_or(OptimizeError::NoCandidate)?;
    Ok(Optimum {
        support,
        polygon,
        score: metrics.y,
        search_score: sign * last.state.score,
        metrics,
        trace,
        seed: config.seed,
        evaluations: used + last.state.used * PENALTY_ROUNDS,
        converged: last.converged,
    })
}

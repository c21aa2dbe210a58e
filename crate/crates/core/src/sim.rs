//! Seeded closed-loop simulation of `x(k+1) = A x(k) + B u(k) + w(k)`,
//! `x(0) = 0`, with running-cost, moment and occurrence accumulators.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{
    closed_loop_mismatch, optimal_full_info, Controller, StrategyKind, WDeltaParams,
};
use crate::error::{Error, Result};
use crate::estimator::History;
use crate::matlin::{spectral_norm, spectral_radius, Mat};
use crate::plantspace::{NoiseModel, PlantInstance};

/// States larger than this in absolute value abort the run.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub horizon: usize,
    pub seed: u64,
    /// Index of the independent noise realization under `seed`. Runs that
    /// share `(seed, trajectory)` see the same disturbance sequence.
    pub trajectory: u64,
    pub noise: NoiseModel,
    pub record_stride: usize,
    /// Multiplies the disturbance; 1 except in tests.
    pub noise_scale: f64,
    pub wdelta: WDeltaParams,
    /// Keep the full state and input trajectories in the trace.
    pub keep_trajectory: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 1000,
            seed: 0,
            trajectory: 0,
            noise: NoiseModel::UnitCovariance,
            record_stride: 1,
            noise_scale: 1.0,
            wdelta: WDeltaParams::default(),
            keep_trajectory: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            return Err(Error::Config(
                "noise_scale must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Standard normal vectors indexed by step. Step `k` always reads the same
/// block of the `(seed, trajectory)` ChaCha stream, whatever was drawn before.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    dim: usize,
    words_per_step: u128,
}

fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

impl GaussianStream {
    pub fn new(seed: u64, trajectory: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        GaussianStream {
            rng,
            dim,
            // two u64 (four 32-bit words) per Box–Muller pair
            words_per_step: 4 * dim.div_ceil(2) as u128,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `w(k)` written into `out`.
    pub fn fill(&mut self, k: usize, out: &mut [f64]) {
        self.rng.set_word_pos(k as u128 * self.words_per_step);
        let mut i = 0;
        while i < self.dim {
            let u1 = open_unit(self.rng.next_u64());
            let u2 = open_unit(self.rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
            out[i] = r * c;
            if i + 1 < self.dim {
                out[i + 1] = r * s;
            }
            i += 2;
        }
    }

    pub fn at(&mut self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.fill(k, &mut out);
        out
    }
}

/// One recorded row; the values describe the first `k` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    /// `(1/k) Σ_{t<k} x(t)ᵀQx(t) + u(t)ᵀRu(t)`.
    pub running_cost: f64,
    /// `‖K(k−1) − L(A, B)‖₂` for the gain applied at the last step.
    pub gain_error: f64,
    /// Estimated minus true value for each subsystem's free parameters.
    pub estimate_errors: Vec<Vec<f64>>,
    /// `(1/k) Σ_{t<k} ‖x(t)‖⁴ + ‖u(t)‖⁴`.
    pub moment4: f64,
    /// Steps `t < k` with `‖K^{(i)}(t) − L(A, B)‖₂ > ρ`, per subsystem.
    pub gain_counts: Vec<u64>,
    /// Steps `t < k` whose estimate of subsystem `i` lies in `𝒲_δ`.
    pub wdelta_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub trajectory: u64,
    pub horizon: usize,
    /// `trace X(A, B)`, the optimal ergodic cost of the plant.
    pub trace_x: f64,
    /// Labels of the estimated parameters, per subsystem.
    pub parameter_labels: Vec<Vec<String>>,
    pub rows: Vec<TraceRow>,
    /// Largest running fourth-moment average over all steps.
    pub moment4_sup: f64,
    /// Step at which the overflow guard tripped.
    pub overflow: Option<usize>,
    pub infeasible_events: usize,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
}

impl SimTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Running cost over the whole horizon.
    pub fn final_cost(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.running_cost)
    }

    pub fn row_at(&self, k: usize) -> Option<&TraceRow> {
        self.rows
            .binary_search_by_key(&k, |r| r.k)
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Average stage cost over steps `[⌊t/2⌋, t)`, from the recorded running
    /// costs at `t` and `⌊t/2⌋`.
    pub fn tail_cost_at(&self, t: usize) -> Option<f64> {
        let end = self.row_at(t)?.running_cost;
        let h = t / 2;
        if h == 0 {
            return Some(end);
        }
        let mid = self.row_at(h)?.running_cost;
        Some((t as f64 * end - h as f64 * mid) / (t - h) as f64)
    }

    /// Tail average over the last half of the horizon.
    pub fn tail_cost(&self) -> f64 {
        self.tail_cost_at(self.horizon).unwrap_or(f64::NAN)
    }

    pub fn check(&self) -> Result<()> {
        match self.overflow {
            Some(k) => Err(Error::NumericOverflow(k)),
            None => Ok(()),
        }
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            strategy: self.strategy,
            seed: self.seed,
            trajectory: self.trajectory,
            horizon: self.horizon,
            final_cost: self.final_cost(),
            tail_cost: self.tail_cost(),
            trace_x: self.trace_x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub trajectory: u64,
    pub horizon: usize,
    pub final_cost: f64,
    pub tail_cost: f64,
    pub trace_x: f64,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn quad(m: &Mat, v: &[f64]) -> f64 {
    v.iter().zip(m.mul_vec(v)).map(|(a, b)| a * b).sum()
}

/// Per-subsystem error indicators of a controller's current gains.
struct Indicators {
    gain_error: f64,
    gain_exceeds: Vec<bool>,
    in_wdelta: Vec<bool>,
    estimate_errors: Vec<Vec<f64>>,
}

fn indicators(
    ctrl: &Controller,
    plant: &PlantInstance,
    optimal: &Mat,
    cfg: &SimConfig,
) -> Indicators {
    let gain_error = spectral_norm(&(ctrl.applied_gain() - optimal));
    let gain_exceeds = ctrl
        .gains()
        .iter()
        .map(|g| spectral_norm(&(g - optimal)) > cfg.wdelta.rho)
        .collect();
    let in_wdelta = if ctrl.estimates().is_empty() {
        vec![false; ctrl.gains().len()]
    } else {
        ctrl.estimates()
            .iter()
            .zip(ctrl.gains())
            .map(|(e, g)| {
                closed_loop_mismatch(&e.a_hat, &e.b_hat, g, &plant.a, &plant.b) >= cfg.wdelta.delta
            })
            .collect()
    };
    let estimate_errors = ctrl
        .problems()
        .iter()
        .zip(ctrl.estimates())
        .map(|(p, e)| {
            let truth = p.extract(&plant.a, &plant.b);
            e.theta.iter().zip(truth).map(|(a, b)| a - b).collect()
        })
        .collect();
    Indicators {
        gain_error,
        gain_exceeds,
        in_wdelta,
        estimate_errors,
    }
}

fn should_record(k: usize, cfg: &SimConfig) -> bool {
    k.is_multiple_of(cfg.record_stride) || k == cfg.horizon || k == cfg.horizon / 2
}

/// Runs `controller` on `plant` for `cfg.horizon` steps.
///
/// The controller acts in the plant's own coordinates. With a non-unit
/// [`NoiseModel`] the disturbance is `w = blockdiag(H_i^{1/2}) ξ` with `ξ`
/// standard normal. A state entry beyond [`OVERFLOW_GUARD`] stops the run
/// and sets [`SimTrace::overflow`].
pub fn run_closed_loop(
    plant: &PlantInstance,
    mut controller: Controller,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    cfg.validate()?;
    let n = plant.n();
    let m = plant.m();
    let color = cfg.noise.sqrt_factor(&plant.info)?;
    let optimal = optimal_full_info(plant)?;
    let trace_x =
        crate::matlin::solve_dare(&plant.a, &plant.b, &plant.q, &plant.r, &Default::default())?
            .x
            .trace();
    let n_sub = controller.gains().len();
    let parameter_labels = controller
        .problems()
        .iter()
        .map(|p| p.free_entries().iter().map(|f| f.label()).collect())
        .collect();

    let mut noise = GaussianStream::new(cfg.seed, cfg.trajectory, n);
    let mut xi = vec![0.0; n];
    let mut hist = History::new(&vec![0.0; n], m);
    let mut trace = SimTrace {
        strategy: controller.kind(),
        seed: cfg.seed,
        trajectory: cfg.trajectory,
        horizon: cfg.horizon,
        trace_x,
        parameter_labels,
        rows: Vec::new(),
        moment4_sup: 0.0,
        overflow: None,
        infeasible_events: 0,
        states: Vec::new(),
        inputs: Vec::new(),
    };

    let mut cost_sum = 0.0;
    let mut moment_sum = 0.0;
    let mut gain_counts = vec![0u64; n_sub];
    let mut wdelta_counts = vec![0u64; n_sub];
    let mut cached: Option<(u64, Indicators)> = None;

    for k in 0..cfg.horizon {
        let u = controller.step(&hist)?;
        let x = hist.latest_state();
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::ControllerFailure(format!(
                "non-finite input at step {k}"
            )));
        }
        cost_sum += quad(&plant.q, x) + quad(&plant.r, &u);
        moment_sum += norm_sq(x).powi(2) + norm_sq(&u).powi(2);
        let steps = (k + 1) as f64;
        trace.moment4_sup = trace.moment4_sup.max(moment_sum / steps);

        let rev = controller.revision();
        if cached.as_ref().is_none_or(|(r, _)| *r != rev) {
            cached = Some((rev, indicators(&controller, plant, &optimal, cfg)));
        }
        let ind = &cached.as_ref().expect("indicators computed").1;
        for i in 0..n_sub {
            gain_counts[i] += ind.gain_exceeds[i] as u64;
            wdelta_counts[i] += ind.in_wdelta[i] as u64;
        }

        if cfg.keep_trajectory {
            trace.states.push(x.to_vec());
            trace.inputs.push(u.clone());
        }

        noise.fill(k, &mut xi);
        let w = match &color {
            Some(d) => d.mul_vec(&xi),
            None => xi.clone(),
        };
        let ax = plant.a.mul_vec(x);
        let bu = plant.b.mul_vec(&u);
        let next: Vec<f64> = (0..n)
            .map(|r| ax[r] + bu[r] + cfg.noise_scale * w[r])
            .collect();

        if should_record(k + 1, cfg) {
            trace.rows.push(TraceRow {
                k: k + 1,
                running_cost: cost_sum / steps,
                gain_error: ind.gain_error,
                estimate_errors: ind.estimate_errors.clone(),
                moment4: moment_sum / steps,
                gain_counts: gain_counts.clone(),
                wdelta_counts: wdelta_counts.clone(),
            });
        }
        if next.iter().any(|v| !(v.abs() <= OVERFLOW_GUARD)) {
            trace.overflow = Some(k + 1);
            break;
        }
        hist.push(&u, &next);
    }
    trace.infeasible_events = controller.infeasible_events();
    Ok(trace)
}

/// `trace{Σ (Q + Kᵀ R K)}` with `Σ = (A + BK) Σ (A + BK)ᵀ + W`, the ergodic
/// cost of a static gain under disturbance covariance `W`.
pub fn lyapunov_cost_with(plant: &PlantInstance, gain: &Mat, w: &Mat) -> Result<f64> {
    let c = &plant.a + &(&plant.b * gain);
    let rho = spectral_radius(&c)?;
    if !(rho < 1.0) {
        return Err(Error::UnstableClosedLoop(rho));
    }
    let sigma = stein_solve(&c, w)?;
    let weight = &plant.q + &(&(&gain.transpose() * &plant.r) * gain);
    Ok((&sigma * &weight).trace())
}

/// Ergodic cost of a static gain under unit-covariance noise.
pub fn lyapunov_cost(plant: &PlantInstance, gain: &Mat) -> Result<f64> {
    lyapunov_cost_with(plant, gain, &Mat::identity(plant.n()))
}

/// Solves `Σ = C Σ Cᵀ + W` for a Schur-stable `C` by summing the series
/// `Σ_j C^j W (C^j)ᵀ` in doubling steps.
pub fn stein_solve(c: &Mat, w: &Mat) -> Result<Mat> {
    let mut sigma = w.clone();
    let mut ck = c.clone();
    for _ in 0..200 {
        let inc = &(&ck * &sigma) * &ck.transpose();
        sigma = &sigma + &inc;
        if inc.frobenius_norm() <= 1e-15 * sigma.frobenius_norm().max(1.0) {
            return Ok(sigma.symmetrized());
        }
        ck = &ck * &ck;
        if !ck.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        residual: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub sup: f64,
    pub last: f64,
    pub within_bound: bool,
}

/// Largest running fourth-moment average and whether it stays at or under
/// `bound`.
pub fn moment_tracker(trace: &SimTrace, bound: f64) -> MomentReport {
    MomentReport {
        sup: trace.moment4_sup,
        last: trace.last().map_or(0.0, |r| r.moment4),
        within_bound: trace.moment4_sup <= bound,
    }
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>, sep: &str) -> String {
    v.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn mat_meta(m: &Mat) -> String {
    m.to_rows()
        .iter()
        .map(|r| join(r, " "))
        .collect::<Vec<_>>()
        .join(";")
}

impl SimTrace {
    /// CSV text with `# key=value` metadata lines, a header, and one line
    /// per recorded row. Floats use the shortest exact representation.
    pub fn to_csv(&self, plant: Option<&PlantInstance>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# strategy={}", self.strategy);
        let _ = writeln!(s, "# seed={}", self.seed);
        let _ = writeln!(s, "# trajectory={}", self.trajectory);
        let _ = writeln!(s, "# horizon={}", self.horizon);
        let _ = writeln!(s, "# trace_x={}", self.trace_x);
        if let Some(p) = plant {
            let _ = writeln!(s, "# plant=A:{}|B:{}", mat_meta(&p.a), mat_meta(&p.b));
        }
        if let Some(k) = self.overflow {
            let _ = writeln!(s, "# overflow={k}");
        }
        let mut header = vec!["k".to_string(), "running_cost".into(), "gain_error".into()];
        for (i, labels) in self.parameter_labels.iter().enumerate() {
            header.extend(labels.iter().map(|l| format!("err_{}_{l}", i + 1)));
        }
        header.push("moment4".into());
        let n_sub = self.rows.first().map_or(0, |r| r.gain_counts.len());
        header.extend((1..=n_sub).map(|i| format!("gain_count_{i}")));
        header.extend((1..=n_sub).map(|i| format!("wdelta_count_{i}")));
        let _ = writeln!(s, "{}", header.join(","));
        for r in &self.rows {
            let mut cells = vec![
                r.k.to_string(),
                r.running_cost.to_string(),
                r.gain_error.to_string(),
            ];
            cells.extend(r.estimate_errors.iter().flatten().map(|v| v.to_string()));
            cells.push(r.moment4.to_string());
            cells.extend(r.gain_counts.iter().map(|v| v.to_string()));
            cells.extend(r.wdelta_counts.iter().map(|v| v.to_string()));
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Parses [`SimTrace::to_csv`] output. The trajectory and the fourth
    /// moment supremum are not stored and come back empty / as the largest
    /// recorded value.
    pub fn from_csv(text: &str) -> Result<SimTrace> {
        let bad = |what: &str| Error::Config(format!("trace csv: {what}"));
        let mut meta = std::collections::HashMap::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
            lines.next();
        }
        let get = |k: &str| meta.get(k).ok_or_else(|| bad(&format!("missing {k}")));
        let num = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| bad(k)) };
        let strategy: StrategyKind = get("strategy")?.parse()?;
        let trace_x: f64 = get("trace_x")?.parse().map_err(|_| bad("trace_x"))?;
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split(',')
            .collect();

        let mut labels: Vec<Vec<String>> = Vec::new();
        for h in &header {
            if let Some(rest) = h.strip_prefix("err_") {
                let (i, l) = rest
                    .split_once('_')
                    .ok_or_else(|| bad("parameter column"))?;
                let i: usize = i.parse().map_err(|_| bad("parameter column"))?;
                if labels.len() < i {
                    labels.resize(i, Vec::new());
                }
                labels[i - 1].push(l.to_string());
            }
        }
        let n_sub = header
            .iter()
            .filter(|h| h.starts_with("gain_count_"))
            .count();
        let n_par: usize = labels.iter().map(Vec::len).sum();
        if header.len() != 4 + n_par + 2 * n_sub {
            return Err(bad("unexpected columns"));
        }

        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                return Err(bad("ragged row"));
            }
            let f = |i: usize| cells[i].parse::<f64>().map_err(|_| bad("number"));
            let c = |i: usize| cells[i].parse::<u64>().map_err(|_| bad("count"));
            let mut at = 3;
            let mut estimate_errors = Vec::new();
            for l in &labels {
                estimate_errors.push((at..at + l.len()).map(f).collect::<Result<Vec<_>>>()?);
                at += l.len();
            }
            let moment4 = f(at)?;
            at += 1;
            rows.push(TraceRow {
                k: cells[0].parse().map_err(|_| bad("k"))?,
                running_cost: f(1)?,
                gain_error: f(2)?,
                estimate_errors,
                moment4,
                gain_counts: (at..at + n_sub).map(c).collect::<Result<_>>()?,
                wdelta_counts: (at + n_sub..at + 2 * n_sub).map(c).collect::<Result<_>>()?,
            });
        }
        let moment4_sup = rows.iter().map(|r| r.moment4).fold(0.0, f64::max);
        Ok(SimTrace {
            strategy,
            seed: num("seed")?,
            trajectory: num("trajectory")?,
            horizon: num("horizon")? as usize,
            trace_x,
            parameter_labels: labels,
            rows,
            moment4_sup,
            overflow: meta.get("overflow").and_then(|v| v.parse().ok()),
            infeasible_events: 0,
            states: Vec::new(),
            inputs: Vec::new(),
        })
    }
}

pub const SUMMARY_HEADER: &str = "strategy,seed,trajectory,horizon,final_cost,tail_cost,trace_x";

impl TraceSummary {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.strategy,
            self.seed,
            self.trajectory,
            self.horizon,
            self.final_cost,
            self.tail_cost,
            self.trace_x
        )
    }
}

/// Summary table with a header line.
pub fn summary_csv(summaries: &[TraceSummary]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for x in summaries {
        s.push_str(&x.csv_line());
        s.push('\n');
    }
    s
}

/// Convenience: build the controller for `kind` and run it.
pub fn simulate_strategy(
    kind: StrategyKind,
    family: &crate::plantspace::PlantFamily,
    plant: &PlantInstance,
    adaptive: &crate::controllers::AdaptiveConfig,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    let controller = Controller::new(kind, family, plant, adaptive)?;
    run_closed_loop(plant, controller, cfg)
}

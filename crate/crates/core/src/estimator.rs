//! Cost-biased least-squares estimation of the unknown model entries.
//!
//! Subcontroller `i` minimizes
//!
//! ```text
//! W(Â, B̂) = μ(k) · trace X(Â, B̂) + Σ_{t=1..k} ‖x(t) − Â x(t−1) − B̂ u(t−1)‖²
//! ```
//!
//! over the entries its mask marks free, inside the family box, with known
//! entries fixed and graph zeros pinned. The residual sum is evaluated from
//! running sufficient statistics, so one objective evaluation costs one
//! Riccati solve plus `O(n (n+m)²)` regardless of the history length.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::{dare_unchecked, Mat};
use crate::optim::{nelder_mead_box, NelderMeadOptions};
use crate::plantspace::{EntryMask, EntryRole, FreeEntry, PlantFamily, PlantInstance, Which};

/// Observation history `{x(0..=k)} ∪ {u(0..k)}` with cached statistics of the
/// regressor `φ(t) = [x(t); u(t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    n: usize,
    m: usize,
    states: Vec<f64>,
    inputs: Vec<f64>,
    /// `Σ φ(t) φ(t)ᵀ`
    phi_phi: Mat,
    /// `Σ x(t+1) φ(t)ᵀ`
    next_phi: Mat,
    /// `Σ x_r(t+1)²` per state row.
    next_sq: Vec<f64>,
}

impl History {
    pub fn new(x0: &[f64], m: usize) -> Self {
        let n = x0.len();
        History {
            n,
            m,
            states: x0.to_vec(),
            inputs: Vec::new(),
            phi_phi: Mat::zeros(n + m, n + m),
            next_phi: Mat::zeros(n, n + m),
            next_sq: vec![0.0; n],
        }
    }

    /// Number of transitions `k` (states hold `k + 1` entries).
    pub fn len(&self) -> usize {
        self.inputs.len() / self.m.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.n..(t + 1) * self.n]
    }

    pub fn input(&self, t: usize) -> &[f64] {
        &self.inputs[t * self.m..(t + 1) * self.m]
    }

    pub fn latest_state(&self) -> &[f64] {
        self.state(self.len())
    }

    /// Appends `u(k)` and the resulting `x(k+1)`.
    pub fn push(&mut self, u: &[f64], x_next: &[f64]) {
        assert_eq!(u.len(), self.m, "input dimension");
        assert_eq!(x_next.len(), self.n, "state dimension");
        let p = self.n + self.m;
        let mut phi = Vec::with_capacity(p);
        phi.extend_from_slice(self.latest_state());
        phi.extend_from_slice(u);
        for i in 0..p {
            for j in 0..p {
                self.phi_phi[(i, j)] += phi[i] * phi[j];
            }
        }
        for r in 0..self.n {
            for j in 0..p {
                self.next_phi[(r, j)] += x_next[r] * phi[j];
            }
            self.next_sq[r] += x_next[r] * x_next[r];
        }
        self.inputs.extend_from_slice(u);
        self.states.extend_from_slice(x_next);
    }

    pub fn phi_phi(&self) -> &Mat {
        &self.phi_phi
    }

    pub fn next_phi(&self) -> &Mat {
        &self.next_phi
    }

    /// `Σ ‖x(t+1) − A x(t) − B u(t)‖²` from the sufficient statistics.
    pub fn residual_sum(&self, a: &Mat, b: &Mat) -> f64 {
        let p = self.n + self.m;
        let mut total = 0.0;
        let mut theta = vec![0.0; p];
        for r in 0..self.n {
            theta[..self.n].copy_from_slice(a.row(r));
            theta[self.n..].copy_from_slice(b.row(r));
            let mut quad = 0.0;
            let mut cross = 0.0;
            for i in 0..p {
                if theta[i] == 0.0 {
                    continue;
                }
                cross += theta[i] * self.next_phi[(r, i)];
                let s = self.phi_phi.row(i);
                quad += theta[i] * theta.iter().zip(s).map(|(t, v)| t * v).sum::<f64>();
            }
            total += self.next_sq[r] - 2.0 * cross + quad;
        }
        total
    }

    /// Same quantity summed sample by sample.
    pub fn residual_sum_naive(&self, a: &Mat, b: &Mat) -> f64 {
        (0..self.len())
            .map(|t| {
                let ax = a.mul_vec(self.state(t));
                let bu = b.mul_vec(self.input(t));
                self.state(t + 1)
                    .iter()
                    .zip(ax.iter().zip(&bu))
                    .map(|(x, (p, q))| (x - p - q).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Weight `μ(k)` of the cost bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MuSchedule {
    /// `μ(k) = √ln(k + e)`: unbounded but `o(log k)`.
    #[default]
    SqrtLog,
    /// Explicit values `μ(0), μ(1), …`; the last value is held afterwards.
    Custom(Vec<f64>),
}

impl MuSchedule {
    pub fn value(&self, k: usize) -> f64 {
        match self {
            MuSchedule::SqrtLog => (k as f64 + std::f64::consts::E).ln().sqrt(),
            MuSchedule::Custom(table) => table.get(k).or(table.last()).copied().unwrap_or(0.0),
        }
    }
}

/// Estimation problem of one subcontroller: which entries are decision
/// variables, their bounds, and the values of everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProblem {
    free: Vec<FreeEntry>,
    base_a: Mat,
    base_b: Mat,
    q: Mat,
    r: Mat,
}

impl EstimationProblem {
    /// Known entries are read from `truth`; that is the information the
    /// subcontroller legitimately holds. Free entries of `truth` are ignored.
    pub fn new(family: &PlantFamily, mask: &EntryMask, truth: &PlantInstance) -> Result<Self> {
        let (n, m) = (family.info.n(), family.info.m());
        if truth.a.shape() != (n, n) || truth.b.shape() != (n, m) {
            return Err(Error::DimensionMismatch(
                "plant does not match family".into(),
            ));
        }
        let mut base_a = Mat::zeros(n, n);
        let mut base_b = Mat::zeros(n, m);
        for (which, base, src) in [
            (Which::A, &mut base_a, &truth.a),
            (Which::B, &mut base_b, &truth.b),
        ] {
            for r in 0..src.rows() {
                for c in 0..src.cols() {
                    if mask.role(which, r, c) == EntryRole::Known {
                        base[(r, c)] = src[(r, c)];
                    }
                }
            }
        }
        Ok(EstimationProblem {
            free: mask.free_entries(family),
            base_a,
            base_b,
            q: truth.q.clone(),
            r: truth.r.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn free_entries(&self) -> &[FreeEntry] {
        &self.free
    }

    pub fn lower(&self) -> Vec<f64> {
        self.free.iter().map(|f| f.lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.free.iter().map(|f| f.hi).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.free.iter().map(FreeEntry::midpoint).collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && self
                .free
                .iter()
                .zip(theta)
                .all(|(f, &v)| v >= f.lo && v <= f.hi)
    }

    pub fn clamp(&self, theta: &mut [f64]) {
        for (f, v) in self.free.iter().zip(theta.iter_mut()) {
            *v = v.clamp(f.lo, f.hi);
        }
    }

    pub fn assemble(&self, theta: &[f64]) -> (Mat, Mat) {
        let mut a = self.base_a.clone();
        let mut b = self.base_b.clone();
        for (f, &v) in self.free.iter().zip(theta) {
            match f.matrix {
                Which::A => a[(f.row, f.col)] = v,
                Which::B => b[(f.row, f.col)] = v,
            }
        }
        (a, b)
    }

    /// Free-entry values of a model.
    pub fn extract(&self, a: &Mat, b: &Mat) -> Vec<f64> {
        self.free
            .iter()
            .map(|f| match f.matrix {
                Which::A => a[(f.row, f.col)],
                Which::B => b[(f.row, f.col)],
            })
            .collect()
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn r(&self) -> &Mat {
        &self.r
    }

    /// Riccati solution of an assembled model, or `None` if infeasible.
    pub fn riccati(&self, theta: &[f64]) -> Option<Mat> {
        let (a, b) = self.assemble(theta);
        dare_unchecked(&a, &b, &self.q, &self.r)
    }

    fn objective_or_inf(&self, theta: &[f64], mu: f64, hist: &History) -> f64 {
        let (a, b) = self.assemble(theta);
        match dare_unchecked(&a, &b, &self.q, &self.r) {
            Some(x) => mu * x.trace() + hist.residual_sum(&a, &b),
            None => f64::INFINITY,
        }
    }
}

/// Cost-biased objective `μ · trace X(Â, B̂) + residual sum`.
pub fn cbml_objective(
    theta: &[f64],
    problem: &EstimationProblem,
    mu: f64,
    hist: &History,
) -> Result<f64> {
    if !problem.contains(theta) {
        return Err(Error::DimensionMismatch(
            "parameter vector outside the box or of the wrong length".into(),
        ));
    }
    let v = problem.objective_or_inf(theta, mu, hist);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InfeasiblePoint)
    }
}

/// Least-squares fit of the free entries, row by row, ignoring the cost bias.
/// Rank-deficient rows get the minimum-norm solution; regressor columns that
/// were never excited keep the box midpoint. The result is clamped to the box.
pub fn pure_ls_start(problem: &EstimationProblem, hist: &History) -> Vec<f64> {
    let n = hist.n();
    let s = hist.phi_phi();
    let c = hist.next_phi();
    let mut theta = problem.midpoint();
    for r in 0..n {
        // (index into theta, regressor column)
        let cols: Vec<(usize, usize)> = problem
            .free
            .iter()
            .enumerate()
            .filter(|(_, f)| f.row == r)
            .map(|(i, f)| (i, f.col + if f.matrix == Which::B { n } else { 0 }))
            .filter(|&(_, col)| s[(col, col)] > 0.0)
            .collect();
        if cols.is_empty() {
            continue;
        }
        let base: Vec<f64> = problem
            .base_a
            .row(r)
            .iter()
            .chain(problem.base_b.row(r))
            .copied()
            .collect();
        let k = cols.len();
        let mut lhs = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for (p, &(_, cp)) in cols.iter().enumerate() {
            let known_part: f64 = base.iter().enumerate().map(|(j, b)| b * s[(cp, j)]).sum();
            rhs[p] = c[(r, cp)] - known_part;
            for (q, &(_, cq)) in cols.iter().enumerate() {
                lhs[(p, q)] = s[(cp, cq)];
            }
        }
        let scale = lhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let svd = lhs.svd(true, true);
        if let Ok(sol) = svd.solve(&rhs, 1e-12 * scale) {
            for (p, &(i, _)) in cols.iter().enumerate() {
                theta[i] = sol[p];
            }
        }
    }
    problem.clamp(&mut theta);
    theta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SolverReport {
    pub starts_used: usize,
    pub best_start: usize,
    pub inner_iterations: usize,
    pub evaluations: usize,
}

/// One subcontroller's model estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEstimate {
    pub a_hat: Mat,
    pub b_hat: Mat,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub report: SolverReport,
}

impl LocalEstimate {
    /// Estimate at a given parameter vector with an unknown objective.
    pub fn at(problem: &EstimationProblem, theta: Vec<f64>) -> Self {
        let (a_hat, b_hat) = problem.assemble(&theta);
        LocalEstimate {
            a_hat,
            b_hat,
            theta,
            objective: f64::NAN,
            report: SolverReport::default(),
        }
    }
}

/// How thoroughly one minimization searches the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchPlan {
    /// Warm start, least-squares start, box midpoint, seeded uniform draws,
    /// and for low dimensions the best point of a coarse grid; a Nelder–Mead
    /// run from each.
    Full,
    /// Warm and least-squares starts only; one Nelder–Mead run from the
    /// better of the two.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub random_starts: usize,
    pub grid_points: usize,
    pub grid_max_dim: usize,
    pub max_iter: usize,
    pub f_tol: f64,
    pub initial_step: f64,
    pub local_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            random_starts: 5,
            grid_points: 25,
            grid_max_dim: 3,
            max_iter: 400,
            f_tol: 1e-9,
            initial_step: 0.1,
            local_step: 0.02,
        }
    }
}

/// Relative tolerance under which two objective values count as tied.
const TIE_TOL: f64 = 1e-12;

fn grid_best(
    problem: &EstimationProblem,
    per_axis: usize,
    f: &mut impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let dim = problem.dim();
    let axis = |f: &FreeEntry, i: usize| {
        if per_axis <= 1 {
            f.midpoint()
        } else {
            f.lo + (f.hi - f.lo) * i as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(dim as u32);
    let mut best = (f64::INFINITY, problem.midpoint());
    let mut point = vec![0.0; dim];
    for idx in 0..total {
        let mut rem = idx;
        for (d, fe) in problem.free.iter().enumerate() {
            point[d] = axis(fe, rem % per_axis);
            rem /= per_axis;
        }
        let v = f(&point);
        if v < best.0 {
            best = (v, point.clone());
        }
    }
    best.1
}

/// Minimizes the cost-biased objective by multi-start box-constrained
/// Nelder–Mead. The returned objective is never above the objective at the
/// warm start or at the least-squares start. Among equal objectives (within
/// a relative 1e-12) the earliest start wins, and the warm start comes first.
pub fn cbml_minimize(
    problem: &EstimationProblem,
    mu: f64,
    hist: &History,
    warm_start: &[f64],
    rng_seed: u64,
    plan: SearchPlan,
    opts: &SearchOptions,
) -> Result<LocalEstimate> {
    if warm_start.len() != problem.dim() {
        return Err(Error::DimensionMismatch("warm start length".into()));
    }
    let mut evaluations = 0usize;
    let mut objective = |theta: &[f64]| {
        evaluations += 1;
        problem.objective_or_inf(theta, mu, hist)
    };
    let lo = problem.lower();
    let hi = problem.upper();

    let mut warm = warm_start.to_vec();
    problem.clamp(&mut warm);
    let ls = pure_ls_start(problem, hist);

    let (starts, step) = match plan {
        SearchPlan::Full => {
            let mut starts = vec![warm, ls, problem.midpoint()];
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            for _ in 0..opts.random_starts {
                starts.push(
                    problem
                        .free
                        .iter()
                        .map(|f| rng.random_range(f.lo..=f.hi))
                        .collect(),
                );
            }
            if problem.dim() > 0 && problem.dim() <= opts.grid_max_dim && opts.grid_points > 0 {
                starts.push(grid_best(problem, opts.grid_points, &mut objective));
            }
            (starts, opts.initial_step)
        }
        SearchPlan::Local => {
            let f_warm = objective(&warm);
            let f_ls = objective(&ls);
            // ls only displaces warm on a strict improvement
            let start = if f_ls < f_warm - TIE_TOL * f_warm.abs().max(1.0) {
                ls
            } else {
                warm
            };
            (vec![start], opts.local_step)
        }
    };

    let nm_opts = NelderMeadOptions {
        max_iter: opts.max_iter,
        f_tol: opts.f_tol,
        initial_step: step,
    };
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    let mut inner_iterations = 0;
    for (idx, start) in starts.iter().enumerate() {
        let run = nelder_mead_box(&mut objective, start, &lo, &hi, &nm_opts);
        inner_iterations += run.iterations;
        let better = match &best {
            None => true,
            Some((_, _, fb)) => run.f < fb - TIE_TOL * fb.abs().max(1.0),
        };
        if better {
            best = Some((idx, run.x, run.f));
        }
    }
    let (best_start, theta, f) = best.expect("at least one start");
    if !f.is_finite() {
        return Err(Error::AllStartsInfeasible);
    }
    let (a_hat, b_hat) = problem.assemble(&theta);
    Ok(LocalEstimate {
        a_hat,
        b_hat,
        theta,
        objective: f,
        report: SolverReport {
            starts_used: starts.len(),
            best_start,
            inner_iterations,
            evaluations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plantspace::{centralized_mask, Density, EntrySpec, InfoStructure};

    fn scalar_family(a: EntrySpec, b: EntrySpec) -> PlantFamily {
        PlantFamily::new(
            InfoStructure::single(1, 1),
            vec![vec![a]],
            vec![vec![b]],
            Mat::identity(1),
            Mat::identity(1),
            Density::Uniform,
        )
        .unwrap()
    }

    fn scalar_problem() -> (EstimationProblem, PlantInstance) {
        let fam = scalar_family(EntrySpec::Free([0.0, 2.0]), EntrySpec::Free([0.5, 1.5]));
        let truth = fam.instance(&[1.0, 1.0]).unwrap();
        let prob = EstimationProblem::new(&fam, &centralized_mask(&fam), &truth).unwrap();
        (prob, truth)
    }

    #[test]
    fn statistics_match_naive_sums() {
        let mut h = History::new(&[0.3, -0.1], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u = [rng.random_range(-1.0..1.0)];
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            h.push(&u, &x);
        }
        let a = Mat::from_rows(&[[0.5, 0.1], [-0.2, 0.9]]).unwrap();
        let b = Mat::from_rows(&[[1.0], [0.3]]).unwrap();
        let fast = h.residual_sum(&a, &b);
        let slow = h.residual_sum_naive(&a, &b);
        assert!((fast - slow).abs() <= 1e-10 * slow, "{fast} vs {slow}");
        assert_eq!(h.len(), 50);
        assert_eq!(h.state(50).len(), 2);
    }

    #[test]
    fn mu_schedule_properties() {
        let mu = MuSchedule::SqrtLog;
        let mut prev_ratio = f64::INFINITY;
        let mut prev = 0.0;
        for e in 2..=9 {
            let k = 10usize.pow(e);
            let v = mu.value(k);
            assert!(v > prev);
            prev = v;
            let ratio = v / (k as f64).ln();
            if k >= 1000 {
                assert!(ratio < prev_ratio);
            }
            prev_ratio = ratio;
        }
        assert_eq!(MuSchedule::Custom(vec![1.0, 2.0]).value(10), 2.0);
    }

    #[test]
    fn golden_objective_with_empty_history() {
        let (prob, _) = scalar_problem();
        let h = History::new(&[0.0], 1);
        let v = cbml_objective(&[1.0, 1.0], &prob, 1.0, &h).unwrap();
        assert!((v - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn objective_is_affine_in_mu() {
        let (prob, truth) = scalar_problem();
        let mut h = History::new(&[0.0], 1);
        let mut x = 0.0;
        for t in 0..20 {
            let u = if t % 3 == 0 { 1.0 } else { -0.5 };
            x = truth.a[(0, 0)] * x * 0.5 + u + 0.1 * (t as f64).sin();
            h.push(&[u], &[x]);
        }
        let theta = [0.8, 1.1];
        let f0 = cbml_objective(&theta, &prob, 0.0, &h).unwrap();
        let f2 = cbml_objective(&theta, &prob, 2.0, &h).unwrap();
        let (a, b) = prob.assemble(&theta);
        assert!((f0 - h.residual_sum(&a, &b)).abs() < 1e-12);
        let tr = prob.riccati(&theta).unwrap().trace();
        assert!((f2 - f0 - 2.0 * tr).abs() < 1e-9);
    }

    #[test]
    fn objective_rejects_out_of_box_and_infeasible() {
        let fam = scalar_family(EntrySpec::Free([1.5, 3.0]), EntrySpec::Free([-1.0, 1.0]));
        let truth = fam.instance(&[2.0, 1.0]).unwrap();
        let prob = EstimationProblem::new(&fam, &centralized_mask(&fam), &truth).unwrap();
        let h = History::new(&[0.0], 1);
        assert_eq!(
            cbml_objective(&[2.0, 0.0], &prob, 1.0, &h),
            Err(Error::InfeasiblePoint)
        );
        assert!(cbml_objective(&[5.0, 0.5], &prob, 1.0, &h).is_err());
    }

    #[test]
    fn ls_start_rules() {
        let (prob, _) = scalar_problem();
        // a single sample x1 = 0.5 * x0 + 1.0 * u0 with x0 = 1, u0 = 1:
        // minimum-norm solution (0.75, 0.75), clamped to the box.
        let mut h = History::new(&[1.0], 1);
        h.push(&[1.0], &[1.5]);
        let th = pure_ls_start(&prob, &h);
        assert!(
            (th[0] - 0.75).abs() < 1e-12 && (th[1] - 0.75).abs() < 1e-12,
            "{th:?}"
        );
        // input never excited: b stays at the midpoint, a fitted
        let mut h = History::new(&[1.0], 1);
        h.push(&[0.0], &[0.4]);
        h.push(&[0.0], &[0.16]);
        let th = pure_ls_start(&prob, &h);
        assert!((th[0] - 0.4).abs() < 1e-12);
        assert_eq!(th[1], 1.0);
        // empty history: midpoint
        assert_eq!(
            pure_ls_start(&prob, &History::new(&[0.0], 1)),
            prob.midpoint()
        );
    }

    #[test]
    fn zero_dimensional_search_returns_truth() {
        let fam = scalar_family(EntrySpec::Free([0.0, 2.0]), EntrySpec::Free([0.5, 1.5]));
        let truth = fam.instance(&[0.7, 1.2]).unwrap();
        let mask = crate::plantspace::known_mask(&fam, 0).unwrap();
        let prob = EstimationProblem::new(&fam, &mask, &truth).unwrap();
        assert_eq!(prob.dim(), 0);
        let mut h = History::new(&[0.0], 1);
        h.push(&[1.0], &[1.5]);
        let est = cbml_minimize(
            &prob,
            0.0,
            &h,
            &[],
            1,
            SearchPlan::Full,
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(est.a_hat, truth.a);
        assert_eq!(est.b_hat, truth.b);
        assert!((est.objective - h.residual_sum(&truth.a, &truth.b)).abs() < 1e-12);
    }

    #[test]
    fn minimize_never_worse_than_its_starts() {
        let (prob, _) = scalar_problem();
        let mut h = History::new(&[0.0], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = 0.0;
        for _ in 0..40 {
            let u: f64 = rng.random_range(-1.0..1.0);
            x = 0.9 * x + 0.8 * u + 0.3 * rng.random_range(-1.0..1.0);
            h.push(&[u], &[x]);
        }
        let warm = [0.2, 1.4];
        for plan in [SearchPlan::Full, SearchPlan::Local] {
            let est =
                cbml_minimize(&prob, 2.0, &h, &warm, 4, plan, &SearchOptions::default()).unwrap();
            let f_warm = cbml_objective(&warm, &prob, 2.0, &h).unwrap();
            let f_ls = cbml_objective(&pure_ls_start(&prob, &h), &prob, 2.0, &h).unwrap();
            assert!(est.objective <= f_warm && est.objective <= f_ls, "{plan:?}");
            assert!(prob.contains(&est.theta));
        }
    }
}

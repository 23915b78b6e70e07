//! Benchmarking statistics and weight learning.
//!
//! Predicted quality scores (PQS) are mapped onto the MOS scale with the
//! monotone four-parameter logistic
//! `f(x) = β1 + β2 / (1 + exp(−β3 (x − β4)))`.

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::PredictorVector;
use crate::error::{Error, Result};
use crate::layout::{Domain, FeatureLayout};
use crate::quality::WeightVector;

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "lists of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min {
        return Err(Error::InsufficientData(format!(
            "{} values, need at least {min}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson linear correlation.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first argument"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second argument"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank-order correlation with average ranks for ties.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    plcc(&average_ranks(x), &average_ranks(y))
}

pub fn rmse(predicted: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(predicted, target, 1)?;
    let sse: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

const LOGISTIC_MIN_POINTS: usize = 5;
const LOGISTIC_MAX_ITERATIONS: usize = 500;
const LOGISTIC_STEP_TOLERANCE: f64 = 1e-9;
// Curvature scale of the near-linear starting point, as β3 times the PQS range.
const NEAR_LINEAR_SLOPE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub beta: [f64; 4],
    /// Sum of squared residuals on the fitted data.
    pub sse: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `beta` is then the best found.
    pub converged: bool,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticModel {
    pub fn predict(&self, x: f64) -> f64 {
        logistic(&self.beta, x)
    }

    pub fn predict_all(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.predict(v)).collect()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let [_, b2, b3, b4] = self.beta;
        let g = sigmoid(b3 * (x - b4));
        b2 * b3 * g * (1.0 - g)
    }
}

#[inline]
fn logistic(beta: &[f64; 4], x: f64) -> f64 {
    beta[0] + beta[1] * sigmoid(beta[2] * (x - beta[3]))
}

fn logistic_sse(beta: &[f64; 4], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - logistic(beta, a);
            r * r
        })
        .sum()
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Levenberg–Marquardt from `start`; only improving steps are taken.
fn levenberg_marquardt(x: &[f64], y: &[f64], start: [f64; 4]) -> LogisticModel {
    let mut beta = start;
    let mut sse = logistic_sse(&beta, x, y);
    let mut lambda = 1e-3;
    for iteration in 1..=LOGISTIC_MAX_ITERATIONS {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        let [_, b2, b3, b4] = beta;
        for (&xi, &yi) in x.iter().zip(y) {
            let g = sigmoid(b3 * (xi - b4));
            let dg = g * (1.0 - g);
            let j = [1.0, g, b2 * dg * (xi - b4), -b2 * dg * b3];
            let r = yi - (beta[0] + b2 * g);
            for p in 0..4 {
                jtr[p] += j[p] * r;
                for q in 0..4 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let trace: f64 = (0..4).map(|p| jtj[p][p]).sum();
        let mut damped = jtj;
        for p in 0..4 {
            damped[p][p] += lambda * (jtj[p][p] + 1e-12 * trace);
        }
        let Some(step) = solve(damped, jtr) else {
            lambda *= 10.0;
            if lambda > 1e30 {
                return LogisticModel {
                    beta,
                    sse,
                    iterations: iteration,
                    converged: true,
                };
            }
            continue;
        };
        let small = norm(&step) < LOGISTIC_STEP_TOLERANCE * norm(&beta).max(1.0);
        let candidate = [
            beta[0] + step[0],
            beta[1] + step[1],
            beta[2] + step[2],
            beta[3] + step[3],
        ];
        let candidate_sse = logistic_sse(&candidate, x, y);
        if candidate_sse.is_finite() && candidate_sse < sse {
            beta = candidate;
            sse = candidate_sse;
            lambda = (lambda / 10.0).max(1e-15);
        } else {
            lambda *= 10.0;
        }
        if small || lambda > 1e30 {
            return LogisticModel {
                beta,
                sse,
                iterations: iteration,
                converged: true,
            };
        }
    }
    LogisticModel {
        beta,
        sse,
        iterations: LOGISTIC_MAX_ITERATIONS,
        converged: false,
    }
}

/// Least-squares line `y ≈ a + b x`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn starting_points(x: &[f64], y: &[f64]) -> [[f64; 4]; 2] {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let x_range = hi - lo;
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_range = y_max - y_min;
    let (a, b) = line_fit(x, y);

    let slope = if b == 0.0 { y_range / x_range } else { b };
    let standard = [y_min, y_range, 4.0 * slope / y_range, median(x)];

    // A logistic this flat is a straight line to within ~1e-10 of the data
    // range, so the fit never does worse than the least-squares line.
    let b3 = NEAR_LINEAR_SLOPE / x_range;
    let b2 = 4.0 * b / b3;
    let near_linear = [a + b * mean(x) - b2 / 2.0, b2, b3, mean(x)];
    [standard, near_linear]
}

fn fit_from(x: &[f64], y: &[f64], extra: Option<[f64; 4]>) -> Result<LogisticModel> {
    check_pair(x, y, LOGISTIC_MIN_POINTS)?;
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ZeroVariance("predicted quality scores"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::ZeroVariance("mean opinion scores"));
    }
    let starts = starting_points(x, y);
    let best = starts
        .iter()
        .chain(extra.as_ref())
        .map(|&s| levenberg_marquardt(x, y, s))
        .filter(|m| m.sse.is_finite())
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
        .ok_or_else(|| Error::NonFinite("logistic fit diverged".into()))?;
    if !best.converged {
        log::debug!("logistic fit hit the iteration cap; using the best parameters found");
    }
    Ok(best)
}

/// Fits the four-parameter logistic mapping PQS onto MOS.
pub fn fit_logistic(pqs: &[f64], mos: &[f64]) -> Result<LogisticModel> {
    fit_from(pqs, mos, None)
}

/// Benchmark indexes of one scoring variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// PLCC between P(MOS) and MOS.
    pub plcc: f64,
    /// SROCC between PQS and MOS (equal to that of P(MOS) for a monotone fit).
    pub srocc: f64,
    /// RMSE between P(MOS) and MOS.
    pub rmse: f64,
    pub model: LogisticModel,
}

pub fn evaluate(pqs: &[f64], mos: &[f64]) -> Result<Evaluation> {
    let model = fit_logistic(pqs, mos)?;
    let predicted = model.predict_all(pqs);
    Ok(Evaluation {
        plcc: plcc(&predicted, mos)?,
        srocc: srocc(pqs, mos)?,
        rmse: rmse(&predicted, mos)?,
        model,
    })
}

/// One subjectively rated stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub content_id: String,
    pub reference_path: PathBuf,
    pub distorted_path: PathBuf,
    pub mos: f64,
    pub predictors: PredictorVector,
}

impl BenchmarkRecord {
    pub fn new(content_id: impl Into<String>, mos: f64, predictors: PredictorVector) -> Self {
        Self {
            content_id: content_id.into(),
            reference_path: PathBuf::new(),
            distorted_path: PathBuf::new(),
            mos,
            predictors,
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

const OBJECTIVE_TOLERANCE: f64 = 1e-10;
const MAX_ALTERNATIONS: usize = 1000;
const INNER_ITERATIONS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedWeights {
    pub weights: WeightVector,
    pub model: LogisticModel,
    /// Sum of squared errors between MOS and the fitted prediction.
    pub objective: f64,
    pub rmse: f64,
    /// Objective after each alternation, starting with equal weights.
    pub trace: Vec<f64>,
    pub converged: bool,
}

struct Problem<'a> {
    rows: Vec<Vec<f64>>,
    mos: &'a [f64],
}

impl Problem<'_> {
    fn scores(&self, w: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(w).map(|(s, w)| s * w).sum())
            .collect()
    }

    fn objective(&self, w: &[f64], beta: &[f64; 4]) -> f64 {
        logistic_sse(beta, &self.scores(w), self.mos)
    }

    /// Minimizes the Gauss–Newton model of the objective in `w` over the
    /// simplex (accelerated projected gradient), then backtracks on the true
    /// objective. Returns the improved weights, if any.
    fn weight_step(
        &self,
        w: &[f64],
        model: &LogisticModel,
        current: f64,
    ) -> Option<(Vec<f64>, f64)> {
        let m = w.len();
        let x = self.scores(w);
        let mut h = vec![vec![0.0; m]; m];
        let mut g = vec![0.0; m];
        for ((row, &xi), &yi) in self.rows.iter().zip(&x).zip(self.mos) {
            let d = model.derivative(xi);
            let r = yi - model.predict(xi);
            for p in 0..m {
                let jp = d * row[p];
                g[p] += jp * r;
                for q in 0..m {
                    h[p][q] += jp * d * row[q];
                }
            }
        }
        let lipschitz: f64 = (0..m).map(|p| h[p][p]).sum();
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return None;
        }
        // Model gradient at v: H (v − w) − g.
        let grad = |v: &[f64]| -> Vec<f64> {
            (0..m)
                .map(|p| (0..m).map(|q| h[p][q] * (v[q] - w[q])).sum::<f64>() - g[p])
                .collect()
        };
        let mut v = w.to_vec();
        let mut z = v.clone();
        let mut t = 1.0_f64;
        for _ in 0..INNER_ITERATIONS {
            let gz = grad(&z);
            let next = project_to_simplex(
                &z.iter()
                    .zip(&gz)
                    .map(|(a, b)| a - b / lipschitz)
                    .collect::<Vec<_>>(),
            );
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            let change: f64 = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            z = next
                .iter()
                .zip(&v)
                .map(|(n, o)| n + momentum * (n - o))
                .collect();
            v = next;
            t = t_next;
            if change < 1e-14 {
                break;
            }
        }
        let mut alpha = 1.0;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + alpha * (b - a)).collect();
            let obj = self.objective(&trial, &model.beta);
            if obj < current {
                let sum: f64 = trial.iter().sum();
                return Some((trial.iter().map(|x| x / sum).collect(), obj));
            }
            alpha *= 0.5;
        }
        None
    }
}

/// Learns simplex-constrained weights over `selection` (0-based feature
/// indices within `domain`) minimizing `Σ (MOS − f(Σ w_j s_j))²`, alternating
/// logistic refits and weight updates from equal weights.
pub fn learn_weights(
    records: &[BenchmarkRecord],
    domain: Domain,
    selection: &[usize],
) -> Result<LearnedWeights> {
    let layout = check_records(records)?;
    let selection = check_selection(layout, domain, selection)?;
    if records.len() < selection.len() + 2 {
        return Err(Error::InsufficientData(format!(
            "{} records for {} weights, need at least {}",
            records.len(),
            selection.len(),
            selection.len() + 2
        )));
    }
    let mos: Vec<f64> = records.iter().map(|r| r.mos).collect();
    let problem = Problem {
        rows: records
            .iter()
            .map(|r| selection.iter().map(|&j| r.predictors.values[j]).collect())
            .collect(),
        mos: &mos,
    };

    let mut w = vec![1.0 / selection.len() as f64; selection.len()];
    let mut model = fit_logistic(&problem.scores(&w), &mos)?;
    let mut objective = model.sse;
    let mut trace = vec![objective];
    let mut converged = selection.len() == 1;
    if !converged {
        for _ in 0..MAX_ALTERNATIONS {
            let (next_w, _) = match problem.weight_step(&w, &model, objective) {
                Some(step) => step,
                None => (w.clone(), objective),
            };
            let next_model = fit_from(&problem.scores(&next_w), &mos, Some(model.beta))?;
            let next_objective = next_model.sse;
            if next_objective > objective {
                converged = true;
                break;
            }
            let improvement = objective - next_objective;
            w = next_w;
            model = next_model;
            objective = next_objective;
            trace.push(objective);
            if improvement < OBJECTIVE_TOLERANCE {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        log::warn!("weight learning hit the alternation cap");
    }

    let mut dense = vec![0.0; layout.features()];
    for (&j, &wj) in selection.iter().zip(&w) {
        dense[j] = wj;
    }
    Ok(LearnedWeights {
        weights: WeightVector::from_dense(layout, domain, &dense)?,
        model,
        objective,
        rmse: (objective / mos.len() as f64).sqrt(),
        trace,
        converged,
    })
}

fn check_records(records: &[BenchmarkRecord]) -> Result<FeatureLayout> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("no benchmark records".into()))?;
    let layout = first.predictors.layout;
    for r in records {
        if r.predictors.layout != layout {
            return Err(Error::LayoutMismatch {
                expected: layout.id(),
                found: r.predictors.layout.id(),
            });
        }
        if !r.mos.is_finite() {
            return Err(Error::NonFinite(format!(
                "MOS of content `{}`",
                r.content_id
            )));
        }
        if r.content_id.is_empty() {
            return Err(Error::InvalidArgument("empty content id".into()));
        }
    }
    Ok(layout)
}

fn check_selection(
    layout: FeatureLayout,
    domain: Domain,
    selection: &[usize],
) -> Result<Vec<usize>> {
    let allowed = layout.domain_indices(domain);
    let unique: BTreeSet<usize> = selection.iter().copied().collect();
    if unique.is_empty() {
        return Err(Error::InvalidArgument("empty predictor selection".into()));
    }
    if unique.len() != selection.len() {
        return Err(Error::InvalidArgument(
            "predictor selection has duplicates".into(),
        ));
    }
    if let Some(j) = unique.iter().find(|j| !allowed.contains(j)) {
        return Err(Error::InvalidArgument(format!(
            "{} is not a predictor of domain {domain} in layout {}",
            layout.column_label(*j),
            layout.id()
        )));
    }
    Ok(unique.into_iter().collect())
}

pub const DEFAULT_MAX_SPLITS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPolicy {
    /// Above this many distinct splits, `max_splits` of them are sampled.
    pub max_splits: usize,
    pub seed: u64,
}

impl Default for SplitPolicy {
    fn default() -> Self {
        Self {
            max_splits: DEFAULT_MAX_SPLITS,
            seed: 0,
        }
    }
}

/// Weights learned on one half of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfResult {
    pub split: usize,
    pub training_contents: Vec<String>,
    pub objective: f64,
    pub rmse: f64,
    pub converged: bool,
    pub weights: WeightVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeavePOut {
    /// Componentwise average over every trained half, renormalized.
    pub weights: WeightVector,
    /// Number of distinct unordered content splits.
    pub total_splits: u128,
    /// Number of splits used (all of them unless sampled).
    pub used_splits: usize,
    pub sampled: bool,
    pub seed: u64,
    pub halves: Vec<HalfResult>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Number of distinct unordered splits of `contents` into two halves whose
/// sizes differ by at most one.
pub fn equal_split_count(contents: usize) -> u128 {
    if contents < 2 {
        return 0;
    }
    let half = contents / 2;
    if contents % 2 == 0 {
        binomial(contents, half) / 2
    } else {
        binomial(contents, half)
    }
}

/// Every first half (as sorted content positions) of the distinct splits. For
/// an even count the first content is pinned to the first half so that each
/// unordered split appears once.
fn enumerate_splits(m: usize) -> Vec<Vec<usize>> {
    fn rec(
        start: usize,
        m: usize,
        left: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            out.push(current.clone());
            return;
        }
        for i in start..=m - left {
            current.push(i);
            rec(i + 1, m, left - 1, current, out);
            current.pop();
        }
    }
    let half = m / 2;
    let mut out = Vec::new();
    let mut current = Vec::new();
    if m % 2 == 0 {
        current.push(0);
        rec(1, m, half - 1, &mut current, &mut out);
    } else {
        rec(0, m, half, &mut current, &mut out);
    }
    out
}

fn sample_splits(m: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let half = m / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut first: Vec<usize> = sample(&mut rng, m, half).into_vec();
        first.sort_unstable();
        if m % 2 == 0 && first[0] != 0 {
            let members: HashSet<usize> = first.iter().copied().collect();
            first = (0..m).filter(|i| !members.contains(i)).collect();
        }
        if seen.insert(first.clone()) {
            out.push(first);
        }
    }
    out
}

/// Content-disjoint leave-p-out: both halves of every equal split train a
/// weight vector, and the result is their average.
pub fn leave_p_out(
    records: &[BenchmarkRecord],
    domain: Domain,
    selection: &[usize],
    policy: &SplitPolicy,
) -> Result<LeavePOut> {
    let layout = check_records(records)?;
    let contents: Vec<String> = records
        .iter()
        .map(|r| r.content_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let m = contents.len();
    if m < 2 {
        return Err(Error::InsufficientData(format!(
            "{m} distinct content, need at least 2"
        )));
    }
    if policy.max_splits == 0 {
        return Err(Error::InvalidArgument("split cap must be positive".into()));
    }
    let total_splits = equal_split_count(m);
    let sampled = total_splits > policy.max_splits as u128;
    let splits = if sampled {
        sample_splits(m, policy.max_splits, policy.seed)
    } else {
        enumerate_splits(m)
    };

    let jobs: Vec<(usize, Vec<usize>)> = splits
        .iter()
        .enumerate()
        .flat_map(|(s, first)| {
            let second: Vec<usize> = (0..m).filter(|i| !first.contains(i)).collect();
            [(s, first.clone()), (s, second)]
        })
        .collect();
    let halves: Vec<HalfResult> = jobs
        .par_iter()
        .map(|(s, members)| -> Result<HalfResult> {
            let names: Vec<String> = members.iter().map(|&i| contents[i].clone()).collect();
            let train: Vec<BenchmarkRecord> = records
                .iter()
                .filter(|r| names.contains(&r.content_id))
                .cloned()
                .collect();
            let learned = learn_weights(&train, domain, selection)?;
            Ok(HalfResult {
                split: *s,
                training_contents: names,
                objective: learned.objective,
                rmse: learned.rmse,
                converged: learned.converged,
                weights: learned.weights,
            })
        })
        .collect::<Result<_>>()?;

    let mut average = vec![0.0; layout.features()];
    for h in &halves {
        for (a, w) in average.iter_mut().zip(h.weights.dense()) {
            *a += w;
        }
    }
    let sum: f64 = average.iter().sum();
    for a in &mut average {
        *a /= sum;
    }
    Ok(LeavePOut {
        weights: WeightVector::from_dense(layout, domain, &average)?,
        total_splits,
        used_splits: splits.len(),
        sampled,
        seed: policy.seed,
        halves,
    })
}

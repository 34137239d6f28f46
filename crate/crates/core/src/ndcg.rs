//! Differentiable ranking loss over soft permutations.
//!
//! A score vector `s` of length `n` induces a soft descending-sort
//! permutation: row `u` (1-based) of the matrix is
//!
//! ```text
//! softmax( ((n + 1 - 2u) * s - A_s 1) / tau ),   A_s[u][v] = |s_u - s_v|
//! ```
//!
//! As `tau -> 0` with distinct scores this converges to the hard
//! permutation matrix of the descending sort. Sinkhorn normalization
//! (alternating column/row balancing, in log space) drives the matrix
//! toward doubly stochastic. The ranking loss soft-sorts the gains
//! `g(r) = 2^r - 1` of the target relevances through the balanced
//! matrix, applies the positional discount `d(j) = 1 / log2(j + 1)`,
//! normalizes by the ideal ordering's value, and negates, so minimizing
//! the loss maximizes ranking agreement; the value lies in `[-1, 0]` up
//! to soft-permutation slack.

use crate::error::{CoreError, Result};
use crate::ops::diff;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::vector::{Matrix, Vector};

/// `g(s) = 2^s - 1`.
pub fn gain<T: Scalar>(s: T) -> T {
    s.exp2() - T::one()
}

/// `d(j) = 1 / log2(j + 1)` for 1-based rank position `j`.
pub fn discount<T: Scalar>(j: usize) -> Result<T> {
    if j < 1 {
        return Err(CoreError::BadRankPosition(j));
    }
    Ok(T::one() / T::from_usize_lossy(j + 1).log2())
}

/// Row-stochastic (optionally Sinkhorn-balanced) approximation of a
/// sorting permutation.
#[derive(Debug, Clone)]
pub struct SoftPermutation<T> {
    p: Matrix<T>,
    tau: T,
    sinkhorn_applied: bool,
}

impl<T: Scalar> SoftPermutation<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn sinkhorn_applied(&self) -> bool {
        self.sinkhorn_applied
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n())
            .map(|u| self.p.row(u).iter().copied().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        (0..self.n())
            .map(|v| (0..self.n()).map(|u| self.p.get(u, v)).sum())
            .collect()
    }
}

/// Target ordering with per-slot relevance.
///
/// `order[pos]` is the slot ranked at (0-based) position `pos`; slot 0
/// is the text slot and must hold the top position. Relevance decreases
/// strictly with position: the slot at 1-based rank `j` of `n` gets
/// relevance `n - j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTarget<T> {
    order: Vec<usize>,
    relevance: Vec<T>,
}

impl<T: Scalar> RankingTarget<T> {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &slot in &order {
            if slot >= n || seen[slot] {
                return Err(CoreError::NotAPermutation { n, order });
            }
            seen[slot] = true;
        }
        if order.first() != Some(&0) {
            return Err(CoreError::TextNotPinnedFirst(order));
        }
        let mut relevance = vec![T::zero(); n];
        for (pos, &slot) in order.iter().enumerate() {
            relevance[slot] = T::from_usize_lossy(n - 1 - pos);
        }
        Ok(Self { order, relevance })
    }

    /// Builds a target from explicit per-slot relevance. The order is
    /// the stable descending argsort. Equal relevances are allowed and
    /// make the ranking objective constant (flagged by the loss).
    pub fn with_relevance(relevance: Vec<T>) -> Result<Self> {
        if relevance.is_empty() {
            return Err(CoreError::Empty {
                op: "RankingTarget::with_relevance",
            });
        }
        if relevance.iter().any(|r| !r.is_finite() || *r < T::zero()) {
            return Err(CoreError::NonFinite("RankingTarget::with_relevance"));
        }
        let mut order: Vec<usize> = (0..relevance.len()).collect();
        order.sort_by(|&a, &b| {
            relevance[b]
                .partial_cmp(&relevance[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        Ok(Self { order, relevance })
    }

    pub fn n_slots(&self) -> usize {
        self.order.len()
    }

    /// Slot index at 0-based position `pos`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Per-slot relevance, indexed by slot.
    pub fn relevance(&self) -> &[T] {
        &self.relevance
    }

    pub fn is_degenerate(&self) -> bool {
        let first = self.relevance[0];
        self.relevance.iter().all(|&r| r == first)
    }

    /// DCG of the ideal (descending-relevance) ordering.
    pub fn max_dcg(&self) -> T {
        let mut sorted = self.relevance.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sorted
            .iter()
            .enumerate()
            .map(|(i, &r)| gain(r) * discount::<T>(i + 1).expect("position >= 1"))
            .sum()
    }
}

/// Sinkhorn stopping parameters. `tol = 0` disables the early exit so
/// the recorded operation count is independent of the input values
/// (needed when finite differences probe the loss).
#[derive(Debug, Clone, Copy)]
pub struct SinkhornConfig<T> {
    pub max_iters: usize,
    pub tol: T,
}

impl<T: Scalar> Default for SinkhornConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 30,
            tol: T::from_f64_lossy(1e-6),
        }
    }
}

/// Builds the soft descending-sort permutation of `scores`.
pub fn soft_permutation<T: Scalar>(scores: &Vector<T>, tau: T) -> Result<SoftPermutation<T>> {
    if !(tau > T::zero()) {
        return Err(CoreError::NonPositiveTau(tau.to_f64().unwrap_or(f64::NAN)));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CoreError::NonFinite("soft_permutation"));
    }
    let mut tape = Tape::new();
    let vars = tape.leaves(scores.as_slice());
    let log_rows = diff_log_soft_permutation(&mut tape, &vars, tau);
    let n = scores.dim();
    let p = Matrix::from_fn(n, n, |u, v| tape.value(log_rows[u][v]).exp());
    Ok(SoftPermutation {
        p,
        tau,
        sinkhorn_applied: false,
    })
}

/// Outcome of Sinkhorn balancing.
#[derive(Debug, Clone)]
pub struct SinkhornOutcome<T> {
    pub perm: SoftPermutation<T>,
    pub converged: bool,
    pub iters: usize,
}

/// Alternating column/row normalization in log space until the worst
/// row or column sum deviates from 1 by at most `tol`, or `max_iters`
/// is reached (best iterate returned with `converged = false`).
pub fn sinkhorn<T: Scalar>(
    p: &SoftPermutation<T>,
    max_iters: usize,
    tol: T,
) -> SinkhornOutcome<T> {
    let mut tape = Tape::new();
    let n = p.n();
    let floor = T::min_positive_value();
    let mut log_rows: Vec<Vec<Var>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|v| tape.leaf(p.p.get(u, v).max(floor).ln()))
                .collect()
        })
        .collect();
    let cfg = SinkhornConfig { max_iters, tol };
    let (converged, iters) = diff_sinkhorn_log(&mut tape, &mut log_rows, &cfg);
    let balanced = Matrix::from_fn(n, n, |u, v| tape.value(log_rows[u][v]).exp());
    SinkhornOutcome {
        perm: SoftPermutation {
            p: balanced,
            tau: p.tau,
            sinkhorn_applied: true,
        },
        converged,
        iters,
    }
}

/// Ranking loss value with diagnostic flags.
#[derive(Debug, Clone, Copy)]
pub struct NdcgLoss<T> {
    pub value: T,
    /// Target relevance was constant; the loss carries no signal.
    pub degenerate: bool,
    pub sinkhorn_converged: bool,
}

/// Value-level ranking loss; runs the differentiable path on a scratch
/// tape.
pub fn neural_ndcg_loss<T: Scalar>(
    scores: &Vector<T>,
    target: &RankingTarget<T>,
    tau: T,
    cfg: &SinkhornConfig<T>,
) -> Result<NdcgLoss<T>> {
    if scores.dim() != target.n_slots() {
        return Err(CoreError::DimMismatch {
            op: "neural_ndcg_loss",
            left: format!("scores dim {}", scores.dim()),
            right: format!("target slots {}", target.n_slots()),
        });
    }
    if !(tau > T::zero()) {
        return Err(CoreError::NonPositiveTau(tau.to_f64().unwrap_or(f64::NAN)));
    }
    let mut tape = Tape::new();
    let vars = tape.leaves(scores.as_slice());
    let parts = diff_neural_ndcg_loss(&mut tape, &vars, target, tau, cfg);
    Ok(NdcgLoss {
        value: tape.value(parts.loss),
        degenerate: parts.degenerate,
        sinkhorn_converged: parts.sinkhorn_converged,
    })
}

/// Log-domain rows of the soft permutation, recorded on the tape.
/// Working in log space keeps tiny-temperature runs finite end to end.
pub fn diff_log_soft_permutation<T: Scalar>(
    tape: &mut Tape<T>,
    scores: &[Var],
    tau: T,
) -> Vec<Vec<Var>> {
    let n = scores.len();
    assert!(n > 0, "soft_permutation: empty scores");
    assert!(tau > T::zero(), "soft_permutation: tau must be positive");
    let inv_tau = T::one() / tau;

    // (A_s 1)_v = sum_w |s_v - s_w|
    let abs_row_sums: Vec<Var> = (0..n)
        .map(|v| {
            let diffs: Vec<Var> = (0..n)
                .filter(|&w| w != v)
                .map(|w| {
                    let d = tape.sub(scores[v], scores[w]);
                    tape.abs(d)
                })
                .collect();
            tape.sum(&diffs)
        })
        .collect();

    (1..=n)
        .map(|u| {
            let coeff = T::from_usize_lossy(n + 1) - T::from_usize_lossy(2 * u);
            let logits: Vec<Var> = (0..n)
                .map(|v| {
                    let scaled = tape.mul_c(scores[v], coeff);
                    let shifted = tape.sub(scaled, abs_row_sums[v]);
                    tape.mul_c(shifted, inv_tau)
                })
                .collect();
            diff::log_softmax(tape, &logits)
        })
        .collect()
}

/// In-place log-domain Sinkhorn balancing. Each iteration normalizes
/// columns then rows, so rows leave exactly normalized; convergence is
/// judged on the worst row/column sum in value space.
pub fn diff_sinkhorn_log<T: Scalar>(
    tape: &mut Tape<T>,
    log_rows: &mut [Vec<Var>],
    cfg: &SinkhornConfig<T>,
) -> (bool, usize) {
    let n = log_rows.len();
    let mut converged = false;
    let mut iters = 0;
    for _ in 0..cfg.max_iters {
        iters += 1;
        for v in 0..n {
            let col: Vec<Var> = (0..n).map(|u| log_rows[u][v]).collect();
            let lse = diff::logsumexp(tape, &col);
            for (u, item) in col.iter().enumerate() {
                log_rows[u][v] = tape.sub(*item, lse);
            }
        }
        for row in log_rows.iter_mut() {
            let lse = diff::logsumexp(tape, row);
            for item in row.iter_mut() {
                *item = tape.sub(*item, lse);
            }
        }
        if cfg.tol > T::zero() {
            let mut worst = T::zero();
            for u in 0..n {
                let rs: T = (0..n).map(|v| tape.value(log_rows[u][v]).exp()).sum();
                worst = worst.max((rs - T::one()).abs());
            }
            for v in 0..n {
                let cs: T = (0..n).map(|u| tape.value(log_rows[u][v]).exp()).sum();
                worst = worst.max((cs - T::one()).abs());
            }
            if worst <= cfg.tol {
                converged = true;
                break;
            }
        }
    }
    (converged, iters)
}

/// Differentiable loss node plus flags.
#[derive(Debug, Clone, Copy)]
pub struct NdcgLossParts {
    pub loss: Var,
    pub degenerate: bool,
    pub sinkhorn_converged: bool,
}

/// Records the full ranking loss for `scores` against `target`.
pub fn diff_neural_ndcg_loss<T: Scalar>(
    tape: &mut Tape<T>,
    scores: &[Var],
    target: &RankingTarget<T>,
    tau: T,
    cfg: &SinkhornConfig<T>,
) -> NdcgLossParts {
    let n = scores.len();
    assert_eq!(n, target.n_slots(), "neural_ndcg_loss: slot count");

    let degenerate = target.is_degenerate();
    let max_dcg = target.max_dcg();
    if max_dcg == T::zero() {
        // all-zero relevance: nothing to rank
        let loss = tape.constant(T::zero());
        return NdcgLossParts {
            loss,
            degenerate: true,
            sinkhorn_converged: true,
        };
    }

    let mut log_rows = diff_log_soft_permutation(tape, scores, tau);
    let (sinkhorn_converged, _) = diff_sinkhorn_log(tape, &mut log_rows, cfg);

    let gains: Vec<T> = target.relevance().iter().map(|&r| gain(r)).collect();
    let mut dcg = tape.constant(T::zero());
    for (u, row) in log_rows.iter().enumerate() {
        let weighted: Vec<Var> = row
            .iter()
            .zip(&gains)
            .map(|(&lp, &g)| {
                let p = tape.exp(lp);
                tape.mul_c(p, g)
            })
            .collect();
        let soft_gain = tape.sum(&weighted);
        let d = discount::<T>(u + 1).expect("position >= 1");
        let term = tape.mul_c(soft_gain, d);
        dcg = tape.add(dcg, term);
    }
    let loss = tape.mul_c(dcg, -T::one() / max_dcg);
    NdcgLossParts {
        loss,
        degenerate,
        sinkhorn_converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::grad_check;

    fn v(xs: &[f64]) -> Vector<f64> {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn gain_and_discount_values() {
        assert_eq!(gain(0.0_f64), 0.0);
        assert_eq!(gain(1.0_f64), 1.0);
        assert_eq!(gain(2.0_f64), 3.0);
        assert!((discount::<f64>(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((discount::<f64>(3).unwrap() - 0.5).abs() < 1e-15);
        assert!((discount::<f64>(7).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(discount::<f64>(0).is_err());
    }

    #[test]
    fn soft_permutation_sharp_identity() {
        let p = soft_permutation(&v(&[2.0, 1.0]), 1e-3).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0]];
        for u in 0..2 {
            for w in 0..2 {
                assert!((p.matrix().get(u, w) - expect[u][w]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn soft_permutation_sharp_swap() {
        let p = soft_permutation(&v(&[1.0, 3.0]), 1e-3).unwrap();
        let expect = [[0.0, 1.0], [1.0, 0.0]];
        for u in 0..2 {
            for w in 0..2 {
                assert!((p.matrix().get(u, w) - expect[u][w]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn soft_permutation_ties_are_uniform() {
        for n in 2..=5 {
            let scores = Vector::new(vec![0.7; n]).unwrap();
            let p = soft_permutation(&scores, 0.5).unwrap();
            for u in 0..n {
                for w in 0..n {
                    assert!((p.matrix().get(u, w) - 1.0 / n as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn soft_permutation_matches_direct_formula() {
        // independent evaluation of the row construction
        let s = [0.4, -1.1, 0.9];
        let tau = 0.7;
        let p = soft_permutation(&v(&s), tau).unwrap();
        let n = 3;
        for u in 1..=n {
            let mut logits = [0.0; 3];
            for w in 0..n {
                let a: f64 = (0..n).map(|k| (s[w] - s[k]).abs()).sum();
                logits[w] = ((n as f64 + 1.0 - 2.0 * u as f64) * s[w] - a) / tau;
            }
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let total: f64 = exps.iter().sum();
            for w in 0..n {
                assert!((p.matrix().get(u - 1, w) - exps[w] / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn soft_permutation_rejects_bad_tau() {
        assert!(soft_permutation(&v(&[1.0, 2.0]), 0.0).is_err());
        assert!(soft_permutation(&v(&[1.0, 2.0]), -1.0).is_err());
    }

    #[test]
    fn soft_permutation_shift_invariant() {
        let base = v(&[0.2, -0.9, 1.4, 0.4]);
        let shifted = Vector::from_fn(4, |i| base[i] + 17.5);
        let p0 = soft_permutation(&base, 0.8).unwrap();
        let p1 = soft_permutation(&shifted, 0.8).unwrap();
        for u in 0..4 {
            for w in 0..4 {
                assert!((p0.matrix().get(u, w) - p1.matrix().get(u, w)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn soft_permutation_hardens_as_tau_drops() {
        let scores = v(&[0.3, 1.2, -0.5, 2.0]);
        // hard descending-sort permutation matrix
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        let mut prev_dist = f64::INFINITY;
        for tau in [1.0, 0.1, 1e-3] {
            let p = soft_permutation(&scores, tau).unwrap();
            let mut dist = 0.0_f64;
            for u in 0..4 {
                for w in 0..4 {
                    let hard = if idx[u] == w { 1.0 } else { 0.0 };
                    dist = dist.max((p.matrix().get(u, w) - hard).abs());
                }
            }
            assert!(dist <= prev_dist + 1e-12, "tau={tau}: {dist} > {prev_dist}");
            prev_dist = dist;
        }
        assert!(prev_dist < 1e-6);
    }

    #[test]
    fn sinkhorn_fixed_point_unchanged() {
        let uniform = SoftPermutation::<f64> {
            p: Matrix::new(3, 3, vec![1.0 / 3.0; 9]).unwrap(),
            tau: 1.0,
            sinkhorn_applied: false,
        };
        let out = sinkhorn(&uniform, 30, 1e-6);
        assert!(out.converged);
        for u in 0..3 {
            for w in 0..3 {
                assert!((out.perm.matrix().get(u, w) - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sinkhorn_balances_columns() {
        let p = SoftPermutation::<f64> {
            p: Matrix::new(2, 2, vec![0.9, 0.1, 0.9, 0.1]).unwrap(),
            tau: 1.0,
            sinkhorn_applied: false,
        };
        let out = sinkhorn(&p, 100, 1e-9);
        assert!(out.converged);
        assert!(out.perm.sinkhorn_applied());
        for s in out.perm.col_sums() {
            assert!((s - 1.0).abs() < 1e-8);
        }
        for s in out.perm.row_sums() {
            assert!((s - 1.0).abs() < 1e-8);
        }

        // independent plain-value oracle run to convergence
        let mut m = [[0.9, 0.1], [0.9, 0.1]];
        for _ in 0..2000 {
            for c in 0..2 {
                let s = m[0][c] + m[1][c];
                m[0][c] /= s;
                m[1][c] /= s;
            }
            for row in m.iter_mut() {
                let s = row[0] + row[1];
                row[0] /= s;
                row[1] /= s;
            }
        }
        for u in 0..2 {
            for w in 0..2 {
                assert!((out.perm.matrix().get(u, w) - m[u][w]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ranking_target_construction() {
        let t = RankingTarget::<f64>::new(vec![0, 2, 1, 3]).unwrap();
        assert_eq!(t.relevance(), &[3.0, 1.0, 2.0, 0.0]);
        assert_eq!(t.order(), &[0, 2, 1, 3]);
        assert!(RankingTarget::<f64>::new(vec![1, 0, 2]).is_err());
        assert!(RankingTarget::<f64>::new(vec![0, 1, 1]).is_err());
    }

    fn exact_ndcg(scores: &[f64], target: &RankingTarget<f64>) -> f64 {
        // brute-force oracle: rank by descending score, accumulate
        // gains/discounts, normalize by the best over all orderings
        let n = scores.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        let dcg: f64 = order
            .iter()
            .enumerate()
            .map(|(pos, &slot)| {
                gain(target.relevance()[slot]) * discount::<f64>(pos + 1).unwrap()
            })
            .sum();

        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 1 {
                return vec![vec![0]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let best = permutations(n)
            .into_iter()
            .map(|perm| {
                perm.iter()
                    .enumerate()
                    .map(|(pos, &slot)| {
                        gain(target.relevance()[slot]) * discount::<f64>(pos + 1).unwrap()
                    })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        dcg / best
    }

    #[test]
    fn loss_is_minus_one_when_scores_match_target() {
        let target = RankingTarget::new(vec![0, 1, 2, 3]).unwrap();
        let scores = v(&[4.0, 3.0, 2.0, 1.0]);
        let out =
            neural_ndcg_loss(&scores, &target, 1e-3, &SinkhornConfig::default()).unwrap();
        assert!((out.value + 1.0).abs() < 1e-3, "loss = {}", out.value);
        assert!(!out.degenerate);
    }

    #[test]
    fn loss_matches_bruteforce_ndcg_over_permutations() {
        let target = RankingTarget::new(vec![0, 2, 1, 3]).unwrap();
        let base = [2.4, 1.2, 0.0, -1.2];
        // every assignment of the base scores to slots
        let mut perms = vec![vec![0usize]];
        for k in 1..4 {
            let mut next = Vec::new();
            for p in &perms {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, k);
                    next.push(q);
                }
            }
            perms = next;
        }
        for perm in perms {
            let scores: Vec<f64> = perm.iter().map(|&i| base[i]).collect();
            let out = neural_ndcg_loss(
                &v(&scores),
                &target,
                1e-3,
                &SinkhornConfig::default(),
            )
            .unwrap();
            let expect = exact_ndcg(&scores, &target);
            assert!(
                (-out.value - expect).abs() < 1e-3,
                "scores {scores:?}: -loss {} vs ndcg {expect}",
                -out.value
            );
        }
    }

    #[test]
    fn equal_relevance_gives_constant_loss_and_zero_gradient() {
        let target = RankingTarget::with_relevance(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(target.is_degenerate());

        let mut tape = Tape::<f64>::new();
        let scores = tape.leaves(&[0.9, 0.1, -0.4]);
        let parts = diff_neural_ndcg_loss(
            &mut tape,
            &scores,
            &target,
            1.0,
            &SinkhornConfig::default(),
        );
        assert!(parts.degenerate);
        tape.backward(parts.loss);
        for &s in &scores {
            assert!(tape.grad(s).abs() < 1e-9, "grad = {}", tape.grad(s));
        }
    }

    #[test]
    fn neg_loss_stays_in_unit_interval() {
        let target = RankingTarget::new(vec![0, 1, 2, 3]).unwrap();
        let cfg = SinkhornConfig {
            max_iters: 200,
            tol: 1e-9,
        };
        for (i, scores) in [
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 3.0, 4.0],
            [4.0, -1.0, 2.5, 0.0],
            [-3.0, 9.0, 1.0, 1.5],
        ]
        .iter()
        .enumerate()
        {
            let out = neural_ndcg_loss(&v(scores), &target, 1.0, &cfg).unwrap();
            let neg = -out.value;
            assert!(neg >= 0.0 && neg <= 1.0 + 1e-6, "case {i}: {neg}");
        }
    }

    #[test]
    fn loss_gradient_passes_finite_difference_check() {
        let target = RankingTarget::new(vec![0, 2, 1, 3]).unwrap();
        // fixed iteration count so finite differences see a smooth map
        let cfg = SinkhornConfig {
            max_iters: 25,
            tol: 0.0,
        };
        let check = grad_check(
            |t, xs| diff_neural_ndcg_loss(t, xs, &target, 1.0, &cfg).loss,
            &[0.8, 0.1, 0.45, -0.6],
            1e-5,
        );
        assert!(check.max_rel_err <= 1e-4, "err = {}", check.max_rel_err);
    }
}

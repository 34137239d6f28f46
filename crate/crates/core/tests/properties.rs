//! Invariant checks over randomized inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semrel_core::ndcg::{sinkhorn, soft_permutation, SinkhornConfig};
use semrel_core::ops::{self, diff};
use semrel_core::srr::{
    diff_srr_loss, SemanticBundle, SrrDims, SrrLossConfig, SrrParamVars, SrrParams, SrrSample,
};
use semrel_core::tape::grad_check;
use semrel_core::ndcg::RankingTarget;
use semrel_core::ops::diff::VarMat;
use semrel_core::{Vector, Vector64};

fn vector_strategy(dim: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, dim)
}

proptest! {
    #[test]
    fn softmax_sums_to_one_and_commutes_with_permutation(
        xs in vector_strategy(1..10),
        seed in 0u64..1000,
    ) {
        let v = Vector64::new(xs.clone()).unwrap();
        let sm = ops::softmax(&v).unwrap();
        let total: f64 = sm.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);

        // permute input, compare against permuted output
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        let permuted = Vector64::from_fn(xs.len(), |i| xs[idx[i]]);
        let sm_permuted = ops::softmax(&permuted).unwrap();
        for i in 0..xs.len() {
            prop_assert!((sm_permuted[i] - sm[idx[i]]).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_scale_invariant(
        a in vector_strategy(2..8),
        b_seed in 0u64..1000,
        c in 0.01..100.0f64,
    ) {
        let va = Vector64::new(a.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(b_seed);
        let vb = Vector64::from_fn(a.len(), |_| rng.gen_range(-5.0..5.0));
        let scaled = Vector64::from_fn(a.len(), |i| c * va[i]);
        let lhs = ops::cosine(&scaled, &vb).unwrap();
        let rhs = ops::cosine(&va, &vb).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn mean_pool_stays_in_convex_hull(
        flat in prop::collection::vec(-10.0..10.0f64, 4..40),
    ) {
        let d = 4;
        let n = flat.len() / d;
        prop_assume!(n >= 1);
        let tokens: Vec<Vector64> = (0..n)
            .map(|k| Vector64::new(flat[k * d..(k + 1) * d].to_vec()).unwrap())
            .collect();
        let pooled = ops::mean_pool(&tokens).unwrap();
        for i in 0..d {
            let lo = tokens.iter().map(|t| t[i]).fold(f64::INFINITY, f64::min);
            let hi = tokens.iter().map(|t| t[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(pooled[i] >= lo - 1e-12 && pooled[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn sinkhorn_rows_exact_and_flag_truthful(
        scores in prop::collection::vec(-10.0..10.0f64, 2..8),
        tau in 0.2..2.0f64,
    ) {
        let tol = 1e-6;
        let p = soft_permutation(&Vector64::new(scores).unwrap(), tau).unwrap();
        let out = sinkhorn(&p, 300, tol);
        // rows leave exactly normalized regardless of convergence
        for s in out.perm.row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-9, "row {s}");
        }
        // the flag promises both sums within tol
        if out.converged {
            for s in out.perm.col_sums() {
                prop_assert!((s - 1.0).abs() < tol * 2.0, "col {s}");
            }
        }
    }
}

#[test]
fn sinkhorn_balances_training_scale_inputs() {
    // score spreads the ranking loss actually produces (softmax weights
    // at moderate temperature)
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let n = rng.gen_range(2..=8usize);
        let scores = Vector64::from_fn(n, |_| rng.gen_range(-1.5..1.5));
        let tau = rng.gen_range(0.5..2.0);
        let p = soft_permutation(&scores, tau).unwrap();
        let out = sinkhorn(&p, 300, 1e-6);
        for s in out.perm.row_sums().into_iter().chain(out.perm.col_sums()) {
            assert!(
                (s - 1.0).abs() < 1e-4,
                "case {case}: sum {s}, converged {}",
                out.converged
            );
        }
    }
}

/// Nudges a value away from zero so ReLU stays locally linear under the
/// finite-difference probes.
fn off_kink(v: f64) -> f64 {
    if v.abs() < 5e-2 {
        v + 0.1
    } else {
        v
    }
}

#[test]
fn every_differentiable_op_passes_fifty_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let dim = rng.gen_range(2..=16usize);
        let x: Vec<f64> = (0..dim).map(|_| off_kink(rng.gen_range(-2.0..2.0))).collect();
        let w: Vec<f64> = (0..dim * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let other: Vec<f64> = (0..dim).map(|_| off_kink(rng.gen_range(-2.0..2.0))).collect();
        let label = rng.gen_range(0..dim);

        // linear composed into a scalar
        let check = grad_check(
            |t, xs| {
                let wm = VarMat::new(2, xs.len(), t.leaves(&w[..xs.len() * 2]));
                let bv = t.leaves(&b);
                let out = diff::linear(t, xs, &wm, &bv);
                t.sum(&out)
            },
            &x,
            1e-5,
        );
        assert!(check.max_rel_err <= 1e-4, "linear case {case}: {}", check.max_rel_err);

        // relu summed (inputs nudged off the kink)
        let check = grad_check(
            |t, xs| {
                let r = diff::relu(t, xs);
                t.sum(&r)
            },
            &x,
            1e-6,
        );
        assert!(check.max_rel_err <= 1e-4, "relu case {case}: {}", check.max_rel_err);

        // softmax probed through a fixed random projection
        let probe: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let check = grad_check(
            |t, xs| {
                let sm = diff::softmax(t, xs);
                let pv = t.leaves(&probe);
                t.dot(&sm, &pv)
            },
            &x,
            1e-5,
        );
        assert!(check.max_rel_err <= 1e-4, "softmax case {case}: {}", check.max_rel_err);

        // mean_pool of two token rows through a dot probe
        let check = grad_check(
            |t, xs| {
                let half = xs.len() / 2;
                let tokens = vec![xs[..half].to_vec(), xs[half..].to_vec()];
                let pooled = diff::mean_pool(t, &tokens);
                let pv = t.leaves(&probe[..half]);
                t.dot(&pooled, &pv)
            },
            &x,
            1e-5,
        );
        assert!(check.max_rel_err <= 1e-4, "mean_pool case {case}: {}", check.max_rel_err);

        // cosine against a fixed partner
        let check = grad_check(
            |t, xs| {
                let ov = t.leaves(&other);
                diff::cosine(t, xs, &ov)
            },
            &x,
            1e-5,
        );
        assert!(check.max_rel_err <= 1e-4, "cosine case {case}: {}", check.max_rel_err);

        // mse against a fixed partner
        let check = grad_check(
            |t, xs| {
                let ov = t.leaves(&other);
                diff::mse(t, xs, &ov)
            },
            &x,
            1e-5,
        );
        assert!(check.max_rel_err <= 1e-4, "mse case {case}: {}", check.max_rel_err);

        // cross-entropy on raw logits
        let check = grad_check(|t, xs| diff::cross_entropy(t, xs, label), &x, 1e-5);
        assert!(
            check.max_rel_err <= 1e-4,
            "cross_entropy case {case}: {}",
            check.max_rel_err
        );
    }
}

#[test]
fn srr_loss_end_to_end_gradient_checks_on_small_configs() {
    // d <= 8, h <= 4, K <= 3, inputs nudged off relu kinks
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let d = rng.gen_range(2..=8usize);
        let h = rng.gen_range(1..=4usize);
        let k = rng.gen_range(2..=3usize);
        let m = rng.gen_range(2..=3usize);
        let dims = SrrDims::new(d, k, m).with_hidden(h);
        let params = SrrParams::<f64>::init(dims, 1000 + case);
        let bundle = SemanticBundle::new(
            Vector::from_fn(d, |_| off_kink(rng.gen_range(-1.0..1.0))),
            (0..m)
                .map(|_| Vector::from_fn(d, |_| off_kink(rng.gen_range(-1.0..1.0))))
                .collect(),
        )
        .unwrap();
        let label = rng.gen_range(0..k);
        let mut fine_order: Vec<usize> = (1..=m).collect();
        for i in (1..fine_order.len()).rev() {
            let j = rng.gen_range(0..=i);
            fine_order.swap(i, j);
        }
        let mut order = vec![0usize];
        order.extend(fine_order);
        let target = RankingTarget::new(order).unwrap();

        let cfg = SrrLossConfig {
            lambda: 1.0,
            tau: 1.0,
            sinkhorn: SinkhornConfig {
                max_iters: 12,
                tol: 0.0,
            },
            ..Default::default()
        };
        let sample = SrrSample {
            bundle: bundle.clone(),
            label,
            target: Some(target.clone()),
        };

        let flat = params.flatten();
        let shapes = (
            params.w1.rows(),
            params.w1.cols(),
            params.w_cls.rows(),
            params.w_cls.cols(),
        );
        let check = grad_check(
            |t, xs| {
                let (h, d, k, d2) = shapes;
                let mut off = 0;
                let mut take = |n: usize| {
                    let s = &xs[off..off + n];
                    off += n;
                    s.to_vec()
                };
                let pv = SrrParamVars {
                    w1: VarMat::new(h, d, take(h * d)),
                    b1: take(h),
                    w2: VarMat::new(1, h, take(h)),
                    b2: take(1),
                    w_cls: VarMat::new(k, d2, take(k * d2)),
                    b_cls: take(k),
                };
                let bv = sample.bundle.leaves(t);
                let batch = vec![(bv, sample.label, sample.target.as_ref())];
                diff_srr_loss(t, &batch, &pv, &cfg).total
            },
            &flat,
            1e-5,
        );
        assert!(
            check.max_rel_err <= 1e-4,
            "srr case {case} (d={d} h={h} k={k} m={m}): {}",
            check.max_rel_err
        );
    }
}

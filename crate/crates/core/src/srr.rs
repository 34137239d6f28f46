//! Semantic relational reasoning head.
//!
//! A sample is a text feature `F_T` plus fine-grained semantic features
//! `F_M` (one per slot, e.g. actions / expressions / interactions), all
//! of dimension `d`. Three relations are scored:
//!
//! * importance — a shared two-layer network maps each feature to a
//!   scalar logit; softmax across the features yields weights `alpha`,
//!   supervised by a ranking loss against an externally derived order
//!   with the text slot pinned first;
//! * complementarity — `beta_M = cos(F_T, F_M)` scales each fine
//!   feature into `C_M = beta_M * F_M`, fused as
//!   `F_Comp = sum_M alpha_M * concat(F_T, C_M)`;
//! * inconsistency — `I_M = F_T - F_M` weighted by `gamma_M =
//!   mse(F_T, F_M)` accumulates the penalty feature
//!   `F_Incons = sum_M gamma_M * I_M`.
//!
//! The classifier reads `F_Comp - lift(F_Incons)` where the penalty is
//! zero-padded into the text half of the fused feature (see
//! [`lift_penalty`]). Classic fusion baselines (sum, Hadamard product,
//! projected differences, and their combination) share the same
//! interface for comparison runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::ndcg::{diff_neural_ndcg_loss, RankingTarget, SinkhornConfig};
use crate::ops::diff::{self, VarMat};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::vector::{Matrix, Vector};

/// Per-sample features: text plus one vector per fine slot, all `d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticBundle<T> {
    text: Vector<T>,
    fine: Vec<Vector<T>>,
}

impl<T: Scalar> SemanticBundle<T> {
    pub fn new(text: Vector<T>, fine: Vec<Vector<T>>) -> Result<Self> {
        if fine.is_empty() {
            return Err(CoreError::Empty {
                op: "SemanticBundle::new",
            });
        }
        let d = text.dim();
        for f in &fine {
            if f.dim() != d {
                return Err(CoreError::DimMismatch {
                    op: "SemanticBundle::new",
                    left: format!("text dim {d}"),
                    right: format!("fine dim {}", f.dim()),
                });
            }
        }
        Ok(Self { text, fine })
    }

    pub fn text(&self) -> &Vector<T> {
        &self.text
    }

    pub fn fine(&self) -> &[Vector<T>] {
        &self.fine
    }

    pub fn dim(&self) -> usize {
        self.text.dim()
    }

    /// Fine-slot count `m`; the score vector has `m + 1` entries.
    pub fn n_fine(&self) -> usize {
        self.fine.len()
    }
}

/// Shape parameters of the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrrDims {
    /// Feature dimension.
    pub d: usize,
    /// Hidden width of the weight network.
    pub h: usize,
    /// Class count.
    pub k: usize,
    /// Fine slot count.
    pub m: usize,
}

impl SrrDims {
    /// Hidden width defaults to `d / 2` (at least 1).
    pub fn new(d: usize, k: usize, m: usize) -> Self {
        Self {
            d,
            h: (d / 2).max(1),
            k,
            m,
        }
    }

    pub fn with_hidden(mut self, h: usize) -> Self {
        self.h = h.max(1);
        self
    }
}

fn uniform_init<T: Scalar>(rng: &mut ChaCha8Rng, fan_in: usize) -> T {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    T::from_f64_lossy(rng.gen_range(-bound..bound))
}

/// Trainable parameters: the shared two-layer weight network and the
/// classifier over the fused `2d` feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrrParams<T> {
    pub w1: Matrix<T>,
    pub b1: Vector<T>,
    pub w2: Matrix<T>,
    pub b2: Vector<T>,
    pub w_cls: Matrix<T>,
    pub b_cls: Vector<T>,
}

impl<T: Scalar> SrrParams<T> {
    /// Seeded uniform init in `±1/sqrt(fan_in)` per tensor.
    pub fn init(dims: SrrDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let SrrDims { d, h, k, .. } = dims;
        Self {
            w1: Matrix::from_fn(h, d, |_, _| uniform_init(&mut rng, d)),
            b1: Vector::from_fn(h, |_| uniform_init(&mut rng, d)),
            w2: Matrix::from_fn(1, h, |_, _| uniform_init(&mut rng, h)),
            b2: Vector::from_fn(1, |_| uniform_init(&mut rng, h)),
            w_cls: Matrix::from_fn(k, 2 * d, |_, _| uniform_init(&mut rng, 2 * d)),
            b_cls: Vector::from_fn(k, |_| uniform_init(&mut rng, 2 * d)),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.cols(), self.w1.rows(), self.w_cls.rows())
    }

    fn check_bundle(&self, bundle: &SemanticBundle<T>) -> Result<()> {
        if self.w1.cols() != bundle.dim() || self.w_cls.cols() != 2 * bundle.dim() {
            return Err(CoreError::DimMismatch {
                op: "srr",
                left: format!("params d {} / cls {}", self.w1.cols(), self.w_cls.cols()),
                right: format!("bundle d {}", bundle.dim()),
            });
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.w1.as_slice().len()
            + self.b1.dim()
            + self.w2.as_slice().len()
            + self.b2.dim()
            + self.w_cls.as_slice().len()
            + self.b_cls.dim()
    }

    /// Flat view in a fixed order (w1, b1, w2, b2, w_cls, b_cls).
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(self.b1.as_slice());
        out.extend_from_slice(self.w2.as_slice());
        out.extend_from_slice(self.b2.as_slice());
        out.extend_from_slice(self.w_cls.as_slice());
        out.extend_from_slice(self.b_cls.as_slice());
        out
    }

    /// Writes a flat view (in [`SrrParams::flatten`] order) back.
    pub fn assign_flat(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.param_count(), "assign_flat length");
        let mut off = 0;
        for dst in [
            self.w1.as_mut_slice(),
            self.b1.as_mut_slice(),
            self.w2.as_mut_slice(),
            self.b2.as_mut_slice(),
            self.w_cls.as_mut_slice(),
            self.b_cls.as_mut_slice(),
        ] {
            dst.copy_from_slice(&flat[off..off + dst.len()]);
            off += dst.len();
        }
    }

    /// Pushes every parameter as a tape leaf.
    pub fn leaves(&self, tape: &mut Tape<T>) -> SrrParamVars {
        SrrParamVars {
            w1: VarMat::new(self.w1.rows(), self.w1.cols(), tape.leaves(self.w1.as_slice())),
            b1: tape.leaves(self.b1.as_slice()),
            w2: VarMat::new(self.w2.rows(), self.w2.cols(), tape.leaves(self.w2.as_slice())),
            b2: tape.leaves(self.b2.as_slice()),
            w_cls: VarMat::new(
                self.w_cls.rows(),
                self.w_cls.cols(),
                tape.leaves(self.w_cls.as_slice()),
            ),
            b_cls: tape.leaves(self.b_cls.as_slice()),
        }
    }
}

/// Tape handles for [`SrrParams`], in flatten order.
#[derive(Debug, Clone)]
pub struct SrrParamVars {
    pub w1: VarMat,
    pub b1: Vec<Var>,
    pub w2: VarMat,
    pub b2: Vec<Var>,
    pub w_cls: VarMat,
    pub b_cls: Vec<Var>,
}

impl SrrParamVars {
    pub fn all_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.w1.vars);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2.vars);
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w_cls.vars);
        out.extend_from_slice(&self.b_cls);
        out
    }
}

/// Tape handles for one bundle.
#[derive(Debug, Clone)]
pub struct BundleVars {
    pub text: Vec<Var>,
    pub fine: Vec<Vec<Var>>,
}

impl<T: Scalar> SemanticBundle<T> {
    pub fn leaves(&self, tape: &mut Tape<T>) -> BundleVars {
        BundleVars {
            text: tape.leaves(self.text.as_slice()),
            fine: self.fine.iter().map(|f| tape.leaves(f.as_slice())).collect(),
        }
    }
}

/// Relation ablation switches. All false runs the full head.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrrOptions {
    /// Skip the learned weighting; fused terms enter with weight 1.
    pub drop_importance: bool,
    /// Skip the cosine scaling; `C_M = F_M`.
    pub drop_complementarity: bool,
    /// Remove the penalty feature entirely.
    pub drop_inconsistency: bool,
}

/// Forward-pass results of the full head.
#[derive(Debug, Clone)]
pub struct SrrOutput<T> {
    /// Importance over `[text, fine...]`; `None` when dropped.
    pub alpha: Option<Vector<T>>,
    /// Complementarity score per fine slot; empty when dropped.
    pub beta: Vec<T>,
    /// Inconsistency score per fine slot; empty when dropped.
    pub gamma: Vec<T>,
    pub f_comp: Vector<T>,
    pub f_incons: Vector<T>,
    pub logits: Vector<T>,
}

/// The per-feature logits of the shared weight network.
pub fn diff_importance_logits<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
    params: &SrrParamVars,
) -> Vec<Var> {
    let score = |tape: &mut Tape<T>, feat: &[Var]| {
        let hidden = diff::linear(tape, feat, &params.w1, &params.b1);
        let act = diff::relu(tape, &hidden);
        diff::linear(tape, &act, &params.w2, &params.b2)[0]
    };
    let mut logits = Vec::with_capacity(1 + bundle.fine.len());
    logits.push(score(tape, &bundle.text));
    for f in &bundle.fine {
        logits.push(score(tape, f));
    }
    logits
}

/// Importance weights `alpha` over `[text, fine...]`.
pub fn diff_importance<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
    params: &SrrParamVars,
) -> Vec<Var> {
    let logits = diff_importance_logits(tape, bundle, params);
    diff::softmax(tape, &logits)
}

/// `beta_M = cos(F_T, F_M)` and `C_M = beta_M * F_M` per fine slot.
pub fn diff_complementarity<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
) -> (Vec<Var>, Vec<Vec<Var>>) {
    let mut betas = Vec::with_capacity(bundle.fine.len());
    let mut enhanced = Vec::with_capacity(bundle.fine.len());
    for f in &bundle.fine {
        let beta = diff::cosine(tape, &bundle.text, f);
        let c: Vec<Var> = f.iter().map(|&x| tape.mul(beta, x)).collect();
        betas.push(beta);
        enhanced.push(c);
    }
    (betas, enhanced)
}

/// `F_Comp = sum_M alpha_M * concat(F_T, C_M)`; the text half collapses
/// to `(sum_M alpha_M) * F_T` by linearity. `alpha` is `None` for the
/// unweighted (importance-dropped) variant.
pub fn diff_fuse_comp<T: Scalar>(
    tape: &mut Tape<T>,
    alpha: Option<&[Var]>,
    bundle: &BundleVars,
    enhanced: &[Vec<Var>],
) -> Vec<Var> {
    let m = bundle.fine.len();
    let fine_alpha: Option<Vec<Var>> = alpha.map(|a| a[1..1 + m].to_vec());

    let text_weight = match &fine_alpha {
        Some(a) => tape.sum(a),
        None => tape.constant(T::from_usize_lossy(m)),
    };
    let mut out: Vec<Var> = bundle
        .text
        .iter()
        .map(|&x| tape.mul(text_weight, x))
        .collect();

    let d = bundle.text.len();
    for i in 0..d {
        let terms: Vec<Var> = enhanced
            .iter()
            .enumerate()
            .map(|(j, c)| match &fine_alpha {
                Some(a) => tape.mul(a[j], c[i]),
                None => c[i],
            })
            .collect();
        out.push(tape.sum(&terms));
    }
    out
}

/// `I_M = F_T - F_M`, `gamma_M = mse(F_T, F_M)`,
/// `F_Incons = sum_M gamma_M * I_M`.
pub fn diff_inconsistency<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
) -> (Vec<Var>, Vec<Vec<Var>>, Vec<Var>) {
    let d = bundle.text.len();
    let mut gammas = Vec::with_capacity(bundle.fine.len());
    let mut diffs = Vec::with_capacity(bundle.fine.len());
    for f in &bundle.fine {
        let i_m: Vec<Var> = bundle
            .text
            .iter()
            .zip(f)
            .map(|(&t, &x)| tape.sub(t, x))
            .collect();
        let gamma = diff::mse(tape, &bundle.text, f);
        gammas.push(gamma);
        diffs.push(i_m);
    }
    let penalty: Vec<Var> = (0..d)
        .map(|i| {
            let terms: Vec<Var> = diffs
                .iter()
                .zip(&gammas)
                .map(|(i_m, &g)| tape.mul(g, i_m[i]))
                .collect();
            tape.sum(&terms)
        })
        .collect();
    (gammas, diffs, penalty)
}

/// Lifts the `d`-dimensional penalty into the `2d` fused space by
/// zero-padding: the penalty opposes the text-anchored half, the
/// enhanced half passes through. Swap this function to try alternate
/// liftings (learned projection, duplication).
pub fn lift_penalty<T: Scalar>(
    tape: &mut Tape<T>,
    f_comp: &[Var],
    f_incons: &[Var],
) -> Vec<Var> {
    let d = f_incons.len();
    assert_eq!(f_comp.len(), 2 * d, "lift_penalty: fused dim vs penalty dim");
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..d {
        out.push(tape.sub(f_comp[i], f_incons[i]));
    }
    out.extend_from_slice(&f_comp[d..]);
    out
}

/// Classifier logits `W_cls (F_Comp - lift(F_Incons)) + b_cls`.
pub fn diff_classify<T: Scalar>(
    tape: &mut Tape<T>,
    f_comp: &[Var],
    f_incons: &[Var],
    params: &SrrParamVars,
) -> Vec<Var> {
    let input = lift_penalty(tape, f_comp, f_incons);
    diff::linear(tape, &input, &params.w_cls, &params.b_cls)
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct SrrForwardVars {
    pub alpha: Option<Vec<Var>>,
    pub beta: Vec<Var>,
    pub gamma: Vec<Var>,
    pub f_comp: Vec<Var>,
    pub f_incons: Vec<Var>,
    pub logits: Vec<Var>,
}

/// Full head forward pass on the tape.
pub fn diff_srr_forward<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
    params: &SrrParamVars,
    opts: SrrOptions,
) -> SrrForwardVars {
    let alpha = if opts.drop_importance {
        None
    } else {
        Some(diff_importance(tape, bundle, params))
    };

    let (beta, enhanced) = if opts.drop_complementarity {
        (Vec::new(), bundle.fine.clone())
    } else {
        diff_complementarity(tape, bundle)
    };

    let f_comp = diff_fuse_comp(tape, alpha.as_deref(), bundle, &enhanced);

    let (gamma, f_incons) = if opts.drop_inconsistency {
        let zeros: Vec<Var> = (0..bundle.text.len())
            .map(|_| tape.constant(T::zero()))
            .collect();
        (Vec::new(), zeros)
    } else {
        let (gamma, _, penalty) = diff_inconsistency(tape, bundle);
        (gamma, penalty)
    };

    let logits = diff_classify(tape, &f_comp, &f_incons, params);
    SrrForwardVars {
        alpha,
        beta,
        gamma,
        f_comp,
        f_incons,
        logits,
    }
}

/// Value-level forward pass (scratch tape).
pub fn srr_forward<T: Scalar>(
    bundle: &SemanticBundle<T>,
    params: &SrrParams<T>,
    opts: SrrOptions,
) -> Result<SrrOutput<T>> {
    params.check_bundle(bundle)?;
    let mut tape = Tape::new();
    let bv = bundle.leaves(&mut tape);
    let pv = params.leaves(&mut tape);
    let fwd = diff_srr_forward(&mut tape, &bv, &pv, opts);
    let clamp = |v: T| v.min(T::one()).max(-T::one());
    let alpha = match &fwd.alpha {
        Some(a) => Some(Vector::new(tape.values(a))?),
        None => None,
    };
    Ok(SrrOutput {
        alpha,
        beta: fwd.beta.iter().map(|&b| clamp(tape.value(b))).collect(),
        gamma: tape.values(&fwd.gamma),
        f_comp: Vector::new(tape.values(&fwd.f_comp))?,
        f_incons: Vector::new(tape.values(&fwd.f_incons))?,
        logits: Vector::new(tape.values(&fwd.logits))?,
    })
}

/// Normalized importance weights for one bundle.
pub fn importance<T: Scalar>(
    bundle: &SemanticBundle<T>,
    params: &SrrParams<T>,
) -> Result<Vector<T>> {
    params.check_bundle(bundle)?;
    let mut tape = Tape::new();
    let bv = bundle.leaves(&mut tape);
    let pv = params.leaves(&mut tape);
    let alpha = diff_importance(&mut tape, &bv, &pv);
    Vector::new(tape.values(&alpha))
}

/// Complementarity scores and enhanced features.
pub fn complementarity<T: Scalar>(
    bundle: &SemanticBundle<T>,
) -> (Vec<T>, Vec<Vector<T>>) {
    let mut tape = Tape::new();
    let bv = bundle.leaves(&mut tape);
    let (beta, enhanced) = diff_complementarity(&mut tape, &bv);
    let clamp = |v: T| v.min(T::one()).max(-T::one());
    (
        beta.iter().map(|&b| clamp(tape.value(b))).collect(),
        enhanced
            .iter()
            .map(|c| Vector::new(tape.values(c)).expect("finite feature"))
            .collect(),
    )
}

/// Fused `2d` representation for explicit weights/features.
pub fn fuse_comp<T: Scalar>(
    alpha: &Vector<T>,
    bundle: &SemanticBundle<T>,
    enhanced: &[Vector<T>],
) -> Result<Vector<T>> {
    if alpha.dim() != 1 + bundle.n_fine() || enhanced.len() != bundle.n_fine() {
        return Err(CoreError::DimMismatch {
            op: "fuse_comp",
            left: format!("alpha {} / enhanced {}", alpha.dim(), enhanced.len()),
            right: format!("1+{} fine slots", bundle.n_fine()),
        });
    }
    let mut tape = Tape::new();
    let bv = bundle.leaves(&mut tape);
    let av = tape.leaves(alpha.as_slice());
    let cv: Vec<Vec<Var>> = enhanced
        .iter()
        .map(|c| tape.leaves(c.as_slice()))
        .collect();
    let out = diff_fuse_comp(&mut tape, Some(&av), &bv, &cv);
    Vector::new(tape.values(&out))
}

/// Inconsistency scores, difference features, and the penalty feature.
pub fn inconsistency<T: Scalar>(
    bundle: &SemanticBundle<T>,
) -> (Vec<T>, Vec<Vector<T>>, Vector<T>) {
    let mut tape = Tape::new();
    let bv = bundle.leaves(&mut tape);
    let (gamma, diffs, penalty) = diff_inconsistency(&mut tape, &bv);
    (
        tape.values(&gamma),
        diffs
            .iter()
            .map(|d| Vector::new(tape.values(d)).expect("finite feature"))
            .collect(),
        Vector::new(tape.values(&penalty)).expect("finite feature"),
    )
}

/// Classifier logits for explicit fused/penalty features.
pub fn classify<T: Scalar>(
    f_comp: &Vector<T>,
    f_incons: &Vector<T>,
    params: &SrrParams<T>,
) -> Result<Vector<T>> {
    if f_comp.dim() != 2 * f_incons.dim() || params.w_cls.cols() != f_comp.dim() {
        return Err(CoreError::DimMismatch {
            op: "classify",
            left: format!("f_comp {} / W_cls cols {}", f_comp.dim(), params.w_cls.cols()),
            right: format!("2 * f_incons {}", f_incons.dim()),
        });
    }
    let mut tape = Tape::new();
    let cv = tape.leaves(f_comp.as_slice());
    let iv = tape.leaves(f_incons.as_slice());
    let pv = params.leaves(&mut tape);
    let logits = diff_classify(&mut tape, &cv, &iv, &pv);
    Vector::new(tape.values(&logits))
}

/// One training sample.
#[derive(Debug, Clone)]
pub struct SrrSample<T> {
    pub bundle: SemanticBundle<T>,
    pub label: usize,
    pub target: Option<RankingTarget<T>>,
}

/// Loss configuration shared by the batch objective.
#[derive(Debug, Clone, Copy)]
pub struct SrrLossConfig<T> {
    /// Weight of the ranking term.
    pub lambda: T,
    /// Soft-permutation temperature.
    pub tau: T,
    pub sinkhorn: SinkhornConfig<T>,
    pub opts: SrrOptions,
}

impl<T: Scalar> Default for SrrLossConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::one(),
            tau: T::one(),
            sinkhorn: SinkhornConfig::default(),
            opts: SrrOptions::default(),
        }
    }
}

/// Loss nodes from one recorded batch.
#[derive(Debug, Clone, Copy)]
pub struct SrrLossVars {
    pub total: Var,
    pub classification: Var,
    pub ranking: Var,
}

/// Records the batch objective: mean cross-entropy plus
/// `lambda * mean(ranking loss / n_slots)`. The `1/n_slots` factor is
/// the rank-set normalization of the ranking objective; a perfectly
/// ordered sample contributes `-1/n_slots`. Samples without targets are
/// skipped by the ranking mean. The ranking term is dropped entirely
/// when importance is dropped (there are no weights to supervise).
pub fn diff_srr_loss<T: Scalar>(
    tape: &mut Tape<T>,
    batch: &[(BundleVars, usize, Option<&RankingTarget<T>>)],
    params: &SrrParamVars,
    cfg: &SrrLossConfig<T>,
) -> SrrLossVars {
    assert!(!batch.is_empty(), "srr_loss: empty batch");
    let mut ce_terms = Vec::with_capacity(batch.len());
    let mut rank_terms = Vec::new();

    for (bundle, label, target) in batch {
        let fwd = diff_srr_forward(tape, bundle, params, cfg.opts);
        ce_terms.push(diff::cross_entropy(tape, &fwd.logits, *label));

        if cfg.lambda > T::zero() {
            if let (Some(alpha), Some(target)) = (&fwd.alpha, target) {
                let parts = diff_neural_ndcg_loss(tape, alpha, target, cfg.tau, &cfg.sinkhorn);
                let n_r = T::from_usize_lossy(target.n_slots());
                rank_terms.push(tape.mul_c(parts.loss, T::one() / n_r));
            }
        }
    }

    let ce_sum = tape.sum(&ce_terms);
    let classification = tape.mul_c(ce_sum, T::one() / T::from_usize_lossy(ce_terms.len()));

    let ranking = if rank_terms.is_empty() {
        tape.constant(T::zero())
    } else {
        let s = tape.sum(&rank_terms);
        tape.mul_c(s, T::one() / T::from_usize_lossy(rank_terms.len()))
    };

    let weighted = tape.mul_c(ranking, cfg.lambda);
    let total = tape.add(classification, weighted);
    SrrLossVars {
        total,
        classification,
        ranking,
    }
}

/// Batch loss with parameter gradients (flatten order).
#[derive(Debug, Clone)]
pub struct SrrLossValue<T> {
    pub total: T,
    pub classification: T,
    pub ranking: T,
    pub grads: Vec<T>,
}

/// Value-level batch objective; runs the recorded loss and extracts the
/// parameter gradients.
pub fn srr_loss<T: Scalar>(
    batch: &[SrrSample<T>],
    params: &SrrParams<T>,
    cfg: &SrrLossConfig<T>,
) -> Result<SrrLossValue<T>> {
    if batch.is_empty() {
        return Err(CoreError::Empty { op: "srr_loss" });
    }
    if cfg.lambda < T::zero() {
        return Err(CoreError::Invalid(format!(
            "lambda must be >= 0, got {}",
            cfg.lambda
        )));
    }
    for s in batch {
        params.check_bundle(&s.bundle)?;
    }
    let mut tape = Tape::new();
    let pv = params.leaves(&mut tape);
    let recorded: Vec<(BundleVars, usize, Option<&RankingTarget<T>>)> = batch
        .iter()
        .map(|s| (s.bundle.leaves(&mut tape), s.label, s.target.as_ref()))
        .collect();
    let loss = diff_srr_loss(&mut tape, &recorded, &pv, cfg);
    tape.backward(loss.total);
    let grads = tape.grads(&pv.all_vars());
    Ok(SrrLossValue {
        total: tape.value(loss.total),
        classification: tape.value(loss.classification),
        ranking: tape.value(loss.ranking),
        grads,
    })
}

/// Classic fusion baseline selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicMode {
    /// Sum of all features.
    Or,
    /// Hadamard product of all features.
    And,
    /// Pairwise text-minus-fine differences through one nonlinear layer.
    Not,
    /// All three relation features concatenated through one nonlinear
    /// layer.
    Combination,
}

impl std::str::FromStr for ClassicMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "or" => Ok(Self::Or),
            "and" => Ok(Self::And),
            "not" => Ok(Self::Not),
            "combination" => Ok(Self::Combination),
            other => Err(CoreError::InvalidMode(other.to_string())),
        }
    }
}

impl std::fmt::Display for ClassicMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Or => "or",
            Self::And => "and",
            Self::Not => "not",
            Self::Combination => "combination",
        };
        f.write_str(s)
    }
}

/// Parameters for the classic baselines. The projection layers exist
/// only for the modes that use them; the classifier reads a `d`-wide
/// relation feature in every mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicParams<T> {
    pub mode: ClassicMode,
    pub w_not: Option<Matrix<T>>,
    pub b_not: Option<Vector<T>>,
    pub w_comb: Option<Matrix<T>>,
    pub b_comb: Option<Vector<T>>,
    pub w_cls: Matrix<T>,
    pub b_cls: Vector<T>,
}

impl<T: Scalar> ClassicParams<T> {
    pub fn init(mode: ClassicMode, dims: SrrDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let SrrDims { d, k, m, .. } = dims;
        let needs_not = matches!(mode, ClassicMode::Not | ClassicMode::Combination);
        let needs_comb = matches!(mode, ClassicMode::Combination);
        let (w_not, b_not) = if needs_not {
            (
                Some(Matrix::from_fn(d, m * d, |_, _| uniform_init(&mut rng, m * d))),
                Some(Vector::from_fn(d, |_| uniform_init(&mut rng, m * d))),
            )
        } else {
            (None, None)
        };
        let (w_comb, b_comb) = if needs_comb {
            (
                Some(Matrix::from_fn(d, 3 * d, |_, _| uniform_init(&mut rng, 3 * d))),
                Some(Vector::from_fn(d, |_| uniform_init(&mut rng, 3 * d))),
            )
        } else {
            (None, None)
        };
        Self {
            mode,
            w_not,
            b_not,
            w_comb,
            b_comb,
            w_cls: Matrix::from_fn(k, d, |_, _| uniform_init(&mut rng, d)),
            b_cls: Vector::from_fn(k, |_| uniform_init(&mut rng, d)),
        }
    }

    pub fn param_count(&self) -> usize {
        self.flatten().len()
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        if let Some(w) = &self.w_not {
            out.extend_from_slice(w.as_slice());
        }
        if let Some(b) = &self.b_not {
            out.extend_from_slice(b.as_slice());
        }
        if let Some(w) = &self.w_comb {
            out.extend_from_slice(w.as_slice());
        }
        if let Some(b) = &self.b_comb {
            out.extend_from_slice(b.as_slice());
        }
        out.extend_from_slice(self.w_cls.as_slice());
        out.extend_from_slice(self.b_cls.as_slice());
        out
    }

    pub fn assign_flat(&mut self, flat: &[T]) {
        let mut off = 0;
        let mut take = |dst: &mut [T]| {
            dst.copy_from_slice(&flat[off..off + dst.len()]);
            off += dst.len();
        };
        if let Some(w) = &mut self.w_not {
            take(w.as_mut_slice());
        }
        if let Some(b) = &mut self.b_not {
            take(b.as_mut_slice());
        }
        if let Some(w) = &mut self.w_comb {
            take(w.as_mut_slice());
        }
        if let Some(b) = &mut self.b_comb {
            take(b.as_mut_slice());
        }
        take(self.w_cls.as_mut_slice());
        take(self.b_cls.as_mut_slice());
        assert_eq!(off, flat.len(), "assign_flat length");
    }

    pub fn leaves(&self, tape: &mut Tape<T>) -> ClassicParamVars {
        ClassicParamVars {
            w_not: self
                .w_not
                .as_ref()
                .map(|w| VarMat::new(w.rows(), w.cols(), tape.leaves(w.as_slice()))),
            b_not: self.b_not.as_ref().map(|b| tape.leaves(b.as_slice())),
            w_comb: self
                .w_comb
                .as_ref()
                .map(|w| VarMat::new(w.rows(), w.cols(), tape.leaves(w.as_slice()))),
            b_comb: self.b_comb.as_ref().map(|b| tape.leaves(b.as_slice())),
            w_cls: VarMat::new(
                self.w_cls.rows(),
                self.w_cls.cols(),
                tape.leaves(self.w_cls.as_slice()),
            ),
            b_cls: tape.leaves(self.b_cls.as_slice()),
        }
    }
}

/// Tape handles for [`ClassicParams`], in flatten order.
#[derive(Debug, Clone)]
pub struct ClassicParamVars {
    pub w_not: Option<VarMat>,
    pub b_not: Option<Vec<Var>>,
    pub w_comb: Option<VarMat>,
    pub b_comb: Option<Vec<Var>>,
    pub w_cls: VarMat,
    pub b_cls: Vec<Var>,
}

impl ClassicParamVars {
    pub fn all_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        if let Some(w) = &self.w_not {
            out.extend_from_slice(&w.vars);
        }
        if let Some(b) = &self.b_not {
            out.extend_from_slice(b);
        }
        if let Some(w) = &self.w_comb {
            out.extend_from_slice(&w.vars);
        }
        if let Some(b) = &self.b_comb {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.w_cls.vars);
        out.extend_from_slice(&self.b_cls);
        out
    }
}

fn diff_not_feature<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
    params: &ClassicParamVars,
) -> Vec<Var> {
    let mut concat = Vec::with_capacity(bundle.fine.len() * bundle.text.len());
    for f in &bundle.fine {
        for (&t, &x) in bundle.text.iter().zip(f) {
            concat.push(tape.sub(t, x));
        }
    }
    let w = params.w_not.as_ref().expect("Not mode requires w_not");
    let b = params.b_not.as_ref().expect("Not mode requires b_not");
    let projected = diff::linear(tape, &concat, w, b);
    diff::relu(tape, &projected)
}

/// Classic-relation forward pass on the tape.
pub fn diff_classic_fuse<T: Scalar>(
    tape: &mut Tape<T>,
    bundle: &BundleVars,
    params: &ClassicParamVars,
    mode: ClassicMode,
) -> Vec<Var> {
    let d = bundle.text.len();
    let or_feature = |tape: &mut Tape<T>, bundle: &BundleVars| -> Vec<Var> {
        (0..d)
            .map(|i| {
                let mut acc = bundle.text[i];
                for f in &bundle.fine {
                    acc = tape.add(acc, f[i]);
                }
                acc
            })
            .collect()
    };
    let and_feature = |tape: &mut Tape<T>, bundle: &BundleVars| -> Vec<Var> {
        (0..d)
            .map(|i| {
                let mut acc = bundle.text[i];
                for f in &bundle.fine {
                    acc = tape.mul(acc, f[i]);
                }
                acc
            })
            .collect()
    };

    let feature = match mode {
        ClassicMode::Or => or_feature(tape, bundle),
        ClassicMode::And => and_feature(tape, bundle),
        ClassicMode::Not => diff_not_feature(tape, bundle, params),
        ClassicMode::Combination => {
            let mut concat = or_feature(tape, bundle);
            concat.extend(and_feature(tape, bundle));
            concat.extend(diff_not_feature(tape, bundle, params));
            let w = params.w_comb.as_ref().expect("Combination requires w_comb");
            let b = params.b_comb.as_ref().expect("Combination requires b_comb");
            let projected = diff::linear(tape, &concat, w, b);
            diff::relu(tape, &projected)
        }
    };
    diff::linear(tape, &feature, &params.w_cls, &params.b_cls)
}

/// Value-level classic-relation logits.
pub fn classic_fuse<T: Scalar>(
    bundle: &SemanticBundle<T>,
    mode: ClassicMode,
    params: &ClassicParams<T>,
) -> Result<Vector<T>> {
    if params.mode != mode {
        return Err(CoreError::InvalidMode(format!(
            "params built for {} but called with {}",
            params.mode, mode
        )));
    }
    if params.w_cls.cols() != bundle.dim() {
        return Err(CoreError::DimMismatch {
            op: "classic_fuse",
            left: format!("W_cls cols {}", params.w_cls.cols()),
            right: format!("bundle d {}", bundle.dim()),
        });
    }
    let mut tape = Tape::new();
    let bv = bundle.leaves(&mut tape);
    let pv = params.leaves(&mut tape);
    let logits = diff_classic_fuse(&mut tape, &bv, &pv, mode);
    Vector::new(tape.values(&logits))
}

//! Composite operations in plain-value and differentiable form.
//!
//! The plain functions in this module are the reference formulas used
//! by evaluation paths and tests. Their differentiable counterparts in
//! [`diff`] record onto a [`Tape`] and produce identical values.
//! softmax and cross-entropy are max-shifted / fused log-sum-exp so
//! extreme logits stay finite.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::vector::{Matrix, Vector};

/// `out[i] = sum_j W[i][j] x[j] + b[i]`.
pub fn linear<T: Scalar>(x: &Vector<T>, w: &Matrix<T>, b: &Vector<T>) -> Result<Vector<T>> {
    if w.cols() != x.dim() {
        return Err(CoreError::DimMismatch {
            op: "linear",
            left: format!("W cols {}", w.cols()),
            right: format!("x dim {}", x.dim()),
        });
    }
    if b.dim() != w.rows() {
        return Err(CoreError::DimMismatch {
            op: "linear",
            left: format!("b dim {}", b.dim()),
            right: format!("W rows {}", w.rows()),
        });
    }
    Ok(Vector::from_fn(w.rows(), |i| {
        w.row(i)
            .iter()
            .zip(x.iter())
            .fold(b[i], |acc, (&wij, &xj)| acc + wij * xj)
    }))
}

/// Componentwise `max(0, x)`.
pub fn relu<T: Scalar>(x: &Vector<T>) -> Vector<T> {
    Vector::from_fn(x.dim(), |i| x[i].max(T::zero()))
}

/// Max-shifted softmax; entries sum to 1.
pub fn softmax<T: Scalar>(x: &Vector<T>) -> Result<Vector<T>> {
    if x.dim() == 0 {
        return Err(CoreError::Empty { op: "softmax" });
    }
    let m = x.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<T> = x.iter().map(|&v| (v - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(Vector::from_fn(x.dim(), |i| exps[i] / total))
}

/// Componentwise arithmetic mean of equally sized vectors.
pub fn mean_pool<T: Scalar>(tokens: &[Vector<T>]) -> Result<Vector<T>> {
    let first = tokens.first().ok_or(CoreError::Empty { op: "mean_pool" })?;
    let d = first.dim();
    for t in tokens {
        if t.dim() != d {
            return Err(CoreError::DimMismatch {
                op: "mean_pool",
                left: format!("{d}"),
                right: format!("{}", t.dim()),
            });
        }
    }
    let n = T::from_usize_lossy(tokens.len());
    Ok(Vector::from_fn(d, |i| {
        tokens.iter().map(|t| t[i]).sum::<T>() / n
    }))
}

/// Cosine similarity clamped to `[-1, 1]`, with the degenerate flag set
/// when either input has zero norm (the similarity is then defined as 0:
/// a degenerate feature is treated as uninformative).
pub fn cosine_with_flag<T: Scalar>(a: &Vector<T>, b: &Vector<T>) -> Result<(T, bool)> {
    if a.dim() != b.dim() {
        return Err(CoreError::DimMismatch {
            op: "cosine",
            left: format!("{}", a.dim()),
            right: format!("{}", b.dim()),
        });
    }
    let na = a.norm();
    let nb = b.norm();
    if na == T::zero() || nb == T::zero() {
        return Ok((T::zero(), true));
    }
    let dot = a
        .iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    Ok(((dot / (na * nb)).min(T::one()).max(-T::one()), false))
}

/// [`cosine_with_flag`] without the degeneracy flag.
pub fn cosine<T: Scalar>(a: &Vector<T>, b: &Vector<T>) -> Result<T> {
    cosine_with_flag(a, b).map(|(v, _)| v)
}

/// `(1/d) * sum_i (a[i] - b[i])^2`.
pub fn mse<T: Scalar>(a: &Vector<T>, b: &Vector<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(CoreError::DimMismatch {
            op: "mse",
            left: format!("{}", a.dim()),
            right: format!("{}", b.dim()),
        });
    }
    let d = T::from_usize_lossy(a.dim());
    let sum = a
        .iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
    Ok(sum / d)
}

/// `-log softmax(logits)[label]`, computed as fused log-sum-exp.
pub fn cross_entropy<T: Scalar>(logits: &Vector<T>, label: usize) -> Result<T> {
    if label >= logits.dim() {
        return Err(CoreError::LabelOutOfRange {
            label,
            classes: logits.dim(),
        });
    }
    let m = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let lse = m + logits
        .iter()
        .map(|&v| (v - m).exp())
        .sum::<T>()
        .ln();
    Ok(lse - logits[label])
}

/// Differentiable counterparts recording onto a [`Tape`].
///
/// Shape preconditions are the callers' responsibility here (the plain
/// functions own the user-facing validation); violations panic.
pub mod diff {
    use super::Scalar;
    use crate::tape::{Tape, Var};

    /// Matrix of tape nodes, row-major.
    #[derive(Debug, Clone)]
    pub struct VarMat {
        pub rows: usize,
        pub cols: usize,
        pub vars: Vec<Var>,
    }

    impl VarMat {
        pub fn new(rows: usize, cols: usize, vars: Vec<Var>) -> Self {
            assert_eq!(rows * cols, vars.len(), "VarMat shape mismatch");
            Self { rows, cols, vars }
        }

        pub fn row(&self, r: usize) -> &[Var] {
            &self.vars[r * self.cols..(r + 1) * self.cols]
        }
    }

    pub fn linear<T: Scalar>(t: &mut Tape<T>, x: &[Var], w: &VarMat, b: &[Var]) -> Vec<Var> {
        assert_eq!(w.cols, x.len(), "linear: W cols vs x dim");
        assert_eq!(b.len(), w.rows, "linear: b dim vs W rows");
        (0..w.rows)
            .map(|i| {
                let mut acc = b[i];
                for (j, &xj) in x.iter().enumerate() {
                    let p = t.mul(w.vars[i * w.cols + j], xj);
                    acc = t.add(acc, p);
                }
                acc
            })
            .collect()
    }

    pub fn relu<T: Scalar>(t: &mut Tape<T>, x: &[Var]) -> Vec<Var> {
        x.iter().map(|&v| t.relu(v)).collect()
    }

    /// Shifts by the (constant) max before exponentiating; exact by
    /// shift invariance of softmax.
    pub fn softmax<T: Scalar>(t: &mut Tape<T>, x: &[Var]) -> Vec<Var> {
        assert!(!x.is_empty(), "softmax: empty input");
        let m = x
            .iter()
            .map(|&v| t.value(v))
            .fold(T::neg_infinity(), T::max);
        let exps: Vec<Var> = x
            .iter()
            .map(|&v| {
                let shifted = t.add_c(v, -m);
                t.exp(shifted)
            })
            .collect();
        let total = t.sum(&exps);
        exps.iter().map(|&e| t.div(e, total)).collect()
    }

    /// `ln sum_i exp(x_i)`, max-shifted.
    pub fn logsumexp<T: Scalar>(t: &mut Tape<T>, x: &[Var]) -> Var {
        assert!(!x.is_empty(), "logsumexp: empty input");
        let m = x
            .iter()
            .map(|&v| t.value(v))
            .fold(T::neg_infinity(), T::max);
        let exps: Vec<Var> = x
            .iter()
            .map(|&v| {
                let shifted = t.add_c(v, -m);
                t.exp(shifted)
            })
            .collect();
        let total = t.sum(&exps);
        let lt = t.ln(total);
        t.add_c(lt, m)
    }

    /// `x_i - logsumexp(x)`.
    pub fn log_softmax<T: Scalar>(t: &mut Tape<T>, x: &[Var]) -> Vec<Var> {
        let lse = logsumexp(t, x);
        x.iter().map(|&v| t.sub(v, lse)).collect()
    }

    pub fn mean_pool<T: Scalar>(t: &mut Tape<T>, tokens: &[Vec<Var>]) -> Vec<Var> {
        assert!(!tokens.is_empty(), "mean_pool: empty input");
        let d = tokens[0].len();
        let inv_n = T::one() / T::from_usize_lossy(tokens.len());
        (0..d)
            .map(|i| {
                let coords: Vec<Var> = tokens.iter().map(|tok| tok[i]).collect();
                let s = t.sum(&coords);
                t.mul_c(s, inv_n)
            })
            .collect()
    }

    /// Cosine similarity. Zero-norm inputs (checked on values) yield a
    /// gradient-free constant 0, matching the plain operation.
    pub fn cosine<T: Scalar>(t: &mut Tape<T>, a: &[Var], b: &[Var]) -> Var {
        assert_eq!(a.len(), b.len(), "cosine: length mismatch");
        let norm_sq = |t: &mut Tape<T>, v: &[Var]| {
            let s = t.dot(v, v);
            t.sqrt(s)
        };
        let zero = a.iter().all(|&v| t.value(v) == T::zero())
            || b.iter().all(|&v| t.value(v) == T::zero());
        if zero {
            return t.constant(T::zero());
        }
        let na = norm_sq(t, a);
        let nb = norm_sq(t, b);
        let dot = t.dot(a, b);
        let denom = t.mul(na, nb);
        t.div(dot, denom)
    }

    pub fn mse<T: Scalar>(t: &mut Tape<T>, a: &[Var], b: &[Var]) -> Var {
        assert_eq!(a.len(), b.len(), "mse: length mismatch");
        let inv_d = T::one() / T::from_usize_lossy(a.len());
        let sq: Vec<Var> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = t.sub(x, y);
                t.mul(d, d)
            })
            .collect();
        let s = t.sum(&sq);
        t.mul_c(s, inv_d)
    }

    pub fn cross_entropy<T: Scalar>(t: &mut Tape<T>, logits: &[Var], label: usize) -> Var {
        assert!(label < logits.len(), "cross_entropy: label out of range");
        let lse = logsumexp(t, logits);
        t.sub(lse, logits[label])
    }
}

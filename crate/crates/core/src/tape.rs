//! Reverse-mode automatic differentiation over a recorded tape.
//!
//! A [`Tape`] records every elementary operation of a forward pass;
//! [`Tape::backward`] replays the record in reverse to accumulate the
//! gradient of a scalar output with respect to every node. Composite
//! losses (softmax chains, Sinkhorn iterations) stay differentiable
//! without per-operation hand derivations.
//!
//! A tape is single-threaded by design; parallelism happens across
//! samples, each with its own tape. [`Tape::clear`] resets a tape for
//! reuse without releasing its storage.

use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
///
/// Plain index, only meaningful for the tape that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    #[inline]
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum Op<T> {
    Leaf,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Exp(u32),
    Exp2(u32),
    Ln(u32),
    Sqrt(u32),
    Abs(u32),
    Relu(u32),
    /// Multiply by a constant that carries no gradient.
    MulC(u32, T),
    /// Add a constant that carries no gradient.
    AddC(u32, T),
}

/// Recorded forward pass with value and gradient storage.
#[derive(Debug, Default)]
pub struct Tape<T> {
    vals: Vec<T>,
    ops: Vec<Op<T>>,
    grads: Vec<T>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            vals: Vec::new(),
            ops: Vec::new(),
            grads: Vec::new(),
        }
    }

    /// Drops all recorded nodes but keeps the allocations.
    pub fn clear(&mut self) {
        self.vals.clear();
        self.ops.clear();
        self.grads.clear();
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    #[inline]
    fn push(&mut self, v: T, op: Op<T>) -> Var {
        let idx = self.vals.len() as u32;
        self.vals.push(v);
        self.ops.push(op);
        Var(idx)
    }

    /// Introduces an input node. Gradients are available for leaves
    /// after [`Tape::backward`].
    pub fn leaf(&mut self, v: T) -> Var {
        self.push(v, Op::Leaf)
    }

    /// Introduces one leaf per slice element.
    pub fn leaves(&mut self, vs: &[T]) -> Vec<Var> {
        vs.iter().map(|&v| self.leaf(v)).collect()
    }

    /// Constant node; identical to a leaf, named for intent.
    pub fn constant(&mut self, v: T) -> Var {
        self.push(v, Op::Leaf)
    }

    #[inline]
    pub fn value(&self, v: Var) -> T {
        self.vals[v.idx()]
    }

    pub fn values(&self, vs: &[Var]) -> Vec<T> {
        vs.iter().map(|&v| self.value(v)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.vals[a.idx()] + self.vals[b.idx()];
        self.push(v, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.vals[a.idx()] - self.vals[b.idx()];
        self.push(v, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.vals[a.idx()] * self.vals[b.idx()];
        self.push(v, Op::Mul(a.0, b.0))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let v = self.vals[a.idx()] / self.vals[b.idx()];
        self.push(v, Op::Div(a.0, b.0))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = -self.vals[a.idx()];
        self.push(v, Op::Neg(a.0))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.vals[a.idx()].exp();
        self.push(v, Op::Exp(a.0))
    }

    /// `2^a`.
    pub fn exp2(&mut self, a: Var) -> Var {
        let v = self.vals[a.idx()].exp2();
        self.push(v, Op::Exp2(a.0))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.vals[a.idx()].ln();
        self.push(v, Op::Ln(a.0))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.vals[a.idx()].sqrt();
        self.push(v, Op::Sqrt(a.0))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.vals[a.idx()].abs();
        self.push(v, Op::Abs(a.0))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.vals[a.idx()].max(T::zero());
        self.push(v, Op::Relu(a.0))
    }

    /// `a * c` with constant `c`.
    pub fn mul_c(&mut self, a: Var, c: T) -> Var {
        let v = self.vals[a.idx()] * c;
        self.push(v, Op::MulC(a.0, c))
    }

    /// `a + c` with constant `c`.
    pub fn add_c(&mut self, a: Var, c: T) -> Var {
        let v = self.vals[a.idx()] + c;
        self.push(v, Op::AddC(a.0, c))
    }

    /// Left-fold sum. Zero constant for the empty slice.
    pub fn sum(&mut self, vars: &[Var]) -> Var {
        match vars.split_first() {
            None => self.constant(T::zero()),
            Some((&first, rest)) => {
                let mut acc = first;
                for &v in rest {
                    acc = self.add(acc, v);
                }
                acc
            }
        }
    }

    pub fn dot(&mut self, a: &[Var], b: &[Var]) -> Var {
        assert_eq!(a.len(), b.len(), "dot: length mismatch");
        let mut acc = self.constant(T::zero());
        for (&x, &y) in a.iter().zip(b) {
            let p = self.mul(x, y);
            acc = self.add(acc, p);
        }
        acc
    }

    /// Accumulates `d(output)/d(node)` for every node by replaying the
    /// tape in reverse from `output`. Results are read with
    /// [`Tape::grad`]; a second call overwrites the previous gradients.
    pub fn backward(&mut self, output: Var) {
        self.grads.clear();
        self.grads.resize(self.vals.len(), T::zero());
        self.grads[output.idx()] = T::one();

        for i in (0..self.ops.len()).rev() {
            let go = self.grads[i];
            if go == T::zero() {
                continue;
            }
            match self.ops[i] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    self.grads[a as usize] += go;
                    self.grads[b as usize] += go;
                }
                Op::Sub(a, b) => {
                    self.grads[a as usize] += go;
                    self.grads[b as usize] -= go;
                }
                Op::Mul(a, b) => {
                    let va = self.vals[a as usize];
                    let vb = self.vals[b as usize];
                    self.grads[a as usize] += go * vb;
                    self.grads[b as usize] += go * va;
                }
                Op::Div(a, b) => {
                    let vb = self.vals[b as usize];
                    let out = self.vals[i];
                    self.grads[a as usize] += go / vb;
                    self.grads[b as usize] -= go * out / vb;
                }
                Op::Neg(a) => self.grads[a as usize] -= go,
                Op::Exp(a) => self.grads[a as usize] += go * self.vals[i],
                Op::Exp2(a) => {
                    let ln2 = T::from_f64_lossy(std::f64::consts::LN_2);
                    self.grads[a as usize] += go * self.vals[i] * ln2;
                }
                Op::Ln(a) => self.grads[a as usize] += go / self.vals[a as usize],
                Op::Sqrt(a) => {
                    let two = T::from_f64_lossy(2.0);
                    self.grads[a as usize] += go / (two * self.vals[i]);
                }
                Op::Abs(a) => {
                    let va = self.vals[a as usize];
                    // subgradient 0 at the kink
                    if va > T::zero() {
                        self.grads[a as usize] += go;
                    } else if va < T::zero() {
                        self.grads[a as usize] -= go;
                    }
                }
                Op::Relu(a) => {
                    if self.vals[a as usize] > T::zero() {
                        self.grads[a as usize] += go;
                    }
                }
                Op::MulC(a, c) => self.grads[a as usize] += go * c,
                Op::AddC(a, _) => self.grads[a as usize] += go,
            }
        }
    }

    /// Gradient of the last [`Tape::backward`] output w.r.t. `v`.
    pub fn grad(&self, v: Var) -> T {
        self.grads[v.idx()]
    }

    pub fn grads(&self, vs: &[Var]) -> Vec<T> {
        vs.iter().map(|&v| self.grad(v)).collect()
    }
}

/// Result of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradCheck<T> {
    /// `max_i |analytic_i - central_i| / max(1, |analytic_i|)`.
    pub max_rel_err: T,
    pub analytic: Vec<T>,
    pub numeric: Vec<T>,
}

/// Checks the tape gradient of `f` at `x` against central finite
/// differences with step `eps`.
///
/// `f` must be smooth at `x`; callers keep inputs away from ReLU and
/// absolute-value kinks.
pub fn grad_check<T, F>(f: F, x: &[T], eps: T) -> GradCheck<T>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars = tape.leaves(x);
    let out = f(&mut tape, &vars);
    tape.backward(out);
    let analytic = tape.grads(&vars);

    let eval = |point: &[T]| {
        let mut t = Tape::new();
        let vs = t.leaves(point);
        let o = f(&mut t, &vs);
        t.value(o)
    };

    let mut numeric = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    let two = T::from_f64_lossy(2.0);
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let hi = eval(&probe);
        probe[i] = orig - eps;
        let lo = eval(&probe);
        probe[i] = orig;
        numeric.push((hi - lo) / (two * eps));
    }

    let max_rel_err = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| (a - n).abs() / T::one().max(a.abs()))
        .fold(T::zero(), T::max);

    GradCheck {
        max_rel_err,
        analytic,
        numeric,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let mut t = Tape::new();
        let x = t.leaf(3.0_f64);
        let y = t.mul(x, x);
        t.backward(y);
        assert_eq!(t.value(y), 9.0);
        assert_eq!(t.grad(x), 6.0);
    }

    #[test]
    fn fan_out_accumulates() {
        // f(x) = x*x + x, f'(3) = 7
        let mut t = Tape::new();
        let x = t.leaf(3.0_f64);
        let sq = t.mul(x, x);
        let y = t.add(sq, x);
        t.backward(y);
        assert_eq!(t.value(y), 12.0);
        assert_eq!(t.grad(x), 7.0);
    }

    #[test]
    fn division_and_exp() {
        // f(x) = exp(x) / x at x=2: f' = exp(x)(x-1)/x^2
        let mut t = Tape::new();
        let x = t.leaf(2.0_f64);
        let e = t.exp(x);
        let y = t.div(e, x);
        t.backward(y);
        let expect = 2.0_f64.exp() * (2.0 - 1.0) / 4.0;
        assert!((t.grad(x) - expect).abs() < 1e-12);
    }

    #[test]
    fn clear_reuses_tape() {
        let mut t = Tape::new();
        let x = t.leaf(1.0_f64);
        let y = t.add(x, x);
        t.backward(y);
        t.clear();
        assert!(t.is_empty());
        let x2 = t.leaf(5.0);
        let y2 = t.mul(x2, x2);
        t.backward(y2);
        assert_eq!(t.grad(x2), 10.0);
    }

    #[test]
    fn grad_check_linear_is_exact() {
        // sum is linear: finite differences match to roundoff
        let check = grad_check(
            |t, xs| t.sum(xs),
            &[0.3_f64, -1.2, 2.0, 0.7],
            1e-5,
        );
        assert!(check.max_rel_err < 1e-9, "err = {}", check.max_rel_err);
    }

    #[test]
    fn grad_check_quadratic() {
        // f = ||x||^2 at [1,2]: grad = [2,4]
        let check = grad_check(|t, xs| t.dot(xs, xs), &[1.0_f64, 2.0], 1e-5);
        assert!((check.analytic[0] - 2.0).abs() < 1e-12);
        assert!((check.analytic[1] - 4.0).abs() < 1e-12);
        assert!(check.max_rel_err < 1e-8);
    }

    #[test]
    fn abs_subgradient_routes_by_sign() {
        let mut t = Tape::new();
        let a = t.leaf(-2.0_f64);
        let b = t.leaf(3.0_f64);
        let aa = t.abs(a);
        let ab = t.abs(b);
        let y = t.add(aa, ab);
        t.backward(y);
        assert_eq!(t.grad(a), -1.0);
        assert_eq!(t.grad(b), 1.0);
    }

    #[test]
    fn exp2_gradient() {
        let check = grad_check(
            |t, xs| {
                let g = t.exp2(xs[0]);
                t.add(g, xs[0])
            },
            &[1.3_f64],
            1e-6,
        );
        assert!(check.max_rel_err < 1e-8, "err = {}", check.max_rel_err);
    }
}

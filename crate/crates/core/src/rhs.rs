//! Right-hand-side operators `F(u)` evaluated on raw state slices.

use crate::linops::LinearOperator;
use crate::weno::WenoBurgers;

/// A (possibly nonlinear) semi-discrete operator.
pub trait Rhs: Send + Sync {
    /// Writes `F(u)` into `out`. Both slices have the grid length.
    fn eval(&self, u: &[f64], out: &mut [f64]);

    fn eval_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.eval(u, &mut out);
        out
    }
}

/// `F ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroRhs;

impl Rhs for ZeroRhs {
    fn eval(&self, _u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Adapts a closure to [`Rhs`].
pub struct FnRhs<F>(pub F);

impl<F> Rhs for FnRhs<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        (self.0)(u, out)
    }
}

impl<R: Rhs + ?Sized> Rhs for &R {
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        (**self).eval(u, out)
    }
}

/// Full method-of-lines operator `F(u) = Lu + N(u)`.
pub struct SemiDiscretization<'a> {
    pub linear: &'a LinearOperator,
    pub nonlinear: Option<&'a WenoBurgers>,
}

impl Rhs for SemiDiscretization<'_> {
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        self.linear.apply_slice(u, out);
        if let Some(weno) = self.nonlinear {
            let mut n = vec![0.0; u.len()];
            weno.eval(u, &mut n);
            for (o, v) in out.iter_mut().zip(&n) {
                *o += v;
            }
        }
    }
}

//! Fifth-order finite-difference WENO for the Burgers flux `f(u) = ½u²`.
//!
//! Flux values are split with global Lax–Friedrichs, `f^± = ½(f ± αu)` with
//! `α = max|u|`, and each part is reconstructed at cell interfaces with the
//! Jiang–Shu weights.

use crate::grid::{Grid, State};
use crate::error::{Error, Result};
use crate::rhs::Rhs;

pub const WENO_EPS: f64 = 1e-6;
const LINEAR_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

/// Interface value at `i+½` from the left-biased stencil
/// `v = (f_{i−2}, f_{i−1}, f_i, f_{i+1}, f_{i+2})`.
#[inline]
pub fn weno5_reconstruct(v: [f64; 5]) -> f64 {
    let [a, b, c, d, e] = v;
    let q0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    let q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    let q2 = (2.0 * c + 5.0 * d - e) / 6.0;

    let s0 = 13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2);
    let s1 = 13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2);
    let s2 = 13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2);

    let w0 = LINEAR_WEIGHTS[0] / (WENO_EPS + s0).powi(2);
    let w1 = LINEAR_WEIGHTS[1] / (WENO_EPS + s1).powi(2);
    let w2 = LINEAR_WEIGHTS[2] / (WENO_EPS + s2).powi(2);
    (w0 * q0 + w1 * q1 + w2 * q2) / (w0 + w1 + w2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FluxKind {
    #[default]
    Burgers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LfAlphaPolicy {
    #[default]
    GlobalMaxAbsU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FluxSpec {
    pub kind: FluxKind,
    pub lf_alpha_policy: LfAlphaPolicy,
}

impl FluxSpec {
    #[inline]
    fn flux(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => 0.5 * u * u,
        }
    }
}

/// `N(u) ≈ −f(u)_x` on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WenoBurgers {
    dx: f64,
    n: usize,
    spec: FluxSpec,
}

impl WenoBurgers {
    pub fn new(grid: &Grid, spec: FluxSpec) -> Self {
        Self {
            dx: grid.dx(),
            n: grid.n(),
            spec,
        }
    }
}

impl Rhs for WenoBurgers {
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(u.len(), n, "state length does not match WENO grid");
        let alpha = match self.spec.lf_alpha_policy {
            LfAlphaPolicy::GlobalMaxAbsU => u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for &v in u {
            let f = self.spec.flux(v);
            plus.push(0.5 * (f + alpha * v));
            minus.push(0.5 * (f - alpha * v));
        }
        let at = |k: isize| k.rem_euclid(n as isize) as usize;

        // hat[i] = f̂_{i+½}
        let hat: Vec<f64> = (0..n as isize)
            .map(|i| {
                let fp = weno5_reconstruct([
                    plus[at(i - 2)],
                    plus[at(i - 1)],
                    plus[at(i)],
                    plus[at(i + 1)],
                    plus[at(i + 2)],
                ]);
                // mirrored stencil about i+½
                let fm = weno5_reconstruct([
                    minus[at(i + 3)],
                    minus[at(i + 2)],
                    minus[at(i + 1)],
                    minus[at(i)],
                    minus[at(i - 1)],
                ]);
                fp + fm
            })
            .collect();

        for (j, o) in out.iter_mut().enumerate() {
            let left = hat[(j + n - 1) % n];
            *o = -(hat[j] - left) / self.dx;
        }
    }
}

/// `N(u)` as a [`State`].
pub fn nonlinear_rhs(u: &State, spec: FluxSpec) -> Result<State> {
    let op = WenoBurgers::new(u.grid(), spec);
    let mut out = vec![0.0; u.len()];
    op.eval(u.values(), &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("WENO flux produced a non-finite value".into()));
    }
    State::new(*u.grid(), out)
}

//! High-accuracy reference solutions.

use crate::error::{Error, Result};
use crate::grid::{Grid, IcSpec, State};
use crate::linops::LinearOperator;
use crate::rhs::{Rhs, SemiDiscretization};
use crate::weno::{FluxSpec, WenoBurgers};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// `None` picks the first step from the initial derivative.
    pub dt_initial: Option<f64>,
    pub dt_min: f64,
    pub max_steps: usize,
}

impl ToleranceSpec {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            dt_initial: None,
            dt_min: 1e-14,
            max_steps: 5_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if !(self.dt_min > 0.0) {
            return Err(Error::invalid("dt_min must be positive"));
        }
        if let Some(h) = self.dt_initial {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid("dt_initial must be positive"));
            }
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct Dp45Output {
    pub state: State,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

fn lincomb(y: &[f64], h: f64, terms: &[(f64, &[f64])], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, v) in terms {
            acc += c * v[k];
        }
        *o = y[k] + h * acc;
    }
}

fn initial_step(f: &dyn Rhs, y: &[f64], f0: &[f64], tol: &ToleranceSpec, t_final: f64) -> f64 {
    // Hairer, Nørsett & Wanner, starting step heuristic
    let sc: Vec<f64> = y.iter().map(|v| tol.abs_tol + tol.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let f1 = f.eval_vec(&y1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(t_final)
}

/// Adaptive Dormand–Prince 5(4) integration of `u' = F(u)` to `t_final`.
/// The local error estimate is controlled in the max norm against
/// `abs_tol + rel_tol·|u|`; the last step is clipped onto `t_final`.
pub fn dp45_integrate(f: &dyn Rhs, u0: &State, t_final: f64, tol: &ToleranceSpec) -> Result<Dp45Output> {
    tol.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
    }
    let n = u0.len();
    let mut y = u0.values().to_vec();
    let mut k1 = f.eval_vec(&y);
    let mut rhs_evals = 1;
    let mut h = match tol.dt_initial {
        Some(h) => h.min(t_final),
        None => {
            rhs_evals += 1;
            initial_step(f, &y, &k1, tol, t_final)
        }
    };
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut t = 0.0;
    let mut err_prev = 1e-4f64;
    let (mut accepted, mut rejected) = (0usize, 0usize);

    while t < t_final {
        if accepted + rejected >= tol.max_steps {
            return Err(Error::BudgetExceeded(tol.max_steps));
        }
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }

        lincomb(&y, h, &[(A21, &k1)], &mut tmp);
        f.eval(&tmp, &mut k2);
        lincomb(&y, h, &[(A31, &k1), (A32, &k2)], &mut tmp);
        f.eval(&tmp, &mut k3);
        lincomb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)], &mut tmp);
        f.eval(&tmp, &mut k4);
        lincomb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &mut tmp);
        f.eval(&tmp, &mut k5);
        lincomb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &mut tmp);
        f.eval(&tmp, &mut k6);
        lincomb(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], &mut y_new);
        f.eval(&y_new, &mut k7);
        rhs_evals += 6;
        let _ = (C2, C3, C4, C5);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs_tol + tol.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sc);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        if err <= 1.0 {
            t = if last { t_final } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            accepted += 1;
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            err_prev = err.max(1e-4);
            h *= factor;
        } else {
            rejected += 1;
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-ALPHA)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h *= factor;
        }
        if h < tol.dt_min && t < t_final {
            return Err(Error::StiffnessFailure { t, dt: h });
        }
    }
    Ok(Dp45Output {
        state: State::from_computed(*u0.grid(), y, "Dormand-Prince integration")?,
        accepted,
        rejected,
        rhs_evals,
    })
}

/// `U_t + aU_x + (½U²)_x = 0` on a periodic interval.
#[derive(Debug, Clone)]
pub struct AdvectionBurgers {
    pub a: f64,
    pub ic: IcSpec,
    pub x_left: f64,
    pub x_right: f64,
    pub t_final: f64,
    /// `false` drops the Burgers term (pure advection).
    pub nonlinear: bool,
}

impl AdvectionBurgers {
    /// The smooth accuracy problem: `a = 1`, `U(0,x) = ½(1 + sin x)` on
    /// `[0, 2π]`, `T = 1`.
    pub fn smooth_test() -> Self {
        Self {
            a: 1.0,
            ic: IcSpec::SineHalf,
            x_left: 0.0,
            x_right: 2.0 * std::f64::consts::PI,
            t_final: 1.0,
            nonlinear: true,
        }
    }
}

/// Spectral-advection plus WENO-Burgers method of lines integrated with
/// [`dp45_integrate`] on `ref_n` points.
pub fn reference_solution(problem: &AdvectionBurgers, ref_n: usize, tol: &ToleranceSpec) -> Result<State> {
    let grid = Grid::new(problem.x_left, problem.x_right, ref_n)?;
    let u0 = problem.ic.sample(&grid)?;
    if problem.t_final == 0.0 {
        return Ok(u0);
    }
    let l = LinearOperator::spectral(grid, problem.a)?;
    let weno = WenoBurgers::new(&grid, FluxSpec::default());
    let f = SemiDiscretization {
        linear: &l,
        nonlinear: problem.nonlinear.then_some(&weno),
    };
    Ok(dp45_integrate(&f, &u0, problem.t_final, tol)?.state)
}

/// Samples `fine` at the nodes of the nested grid `coarse`.
pub fn restrict(fine: &State, coarse: &Grid) -> Result<State> {
    let fg = fine.grid();
    if !fg.same_domain(coarse) {
        return Err(Error::invalid("restriction needs identical domains"));
    }
    if !fg.n().is_multiple_of(coarse.n()) {
        return Err(Error::invalid(format!(
            "grid of {} points is not nested in grid of {} points",
            coarse.n(),
            fg.n()
        )));
    }
    let stride = fg.n() / coarse.n();
    State::new(*coarse, fine.values().iter().step_by(stride).copied().collect())
}

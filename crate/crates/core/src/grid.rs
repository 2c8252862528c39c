//! Periodic one-dimensional grids and the solution states that live on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform periodic mesh. Points are `x_j = x_left + j·dx` for `j = 0..n`;
/// the right endpoint is identified with the left one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n: usize,
    dx: f64,
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) {
            return Err(Error::invalid("grid endpoints must be finite"));
        }
        if x_right <= x_left {
            return Err(Error::invalid(format!(
                "grid length must be positive (x_left = {x_left}, x_right = {x_right})"
            )));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::invalid(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            x_left,
            x_right,
            n,
            dx: (x_right - x_left) / n as f64,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Coordinate of node `j`. Computed as `x_left + L·j/n` so that nodes of
    /// nested grids coincide bit for bit.
    pub fn x(&self, j: usize) -> f64 {
        self.x_left + self.length() * j as f64 / self.n as f64
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    pub fn same_domain(&self, other: &Grid) -> bool {
        self.x_left == other.x_left && self.x_right == other.x_right
    }
}

/// Solution vector on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    values: Vec<f64>,
    grid: Grid,
}

impl State {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(format!(
                "state has {} values but grid has {} points",
                values.len(),
                grid.n()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("state entry {j} is not finite")));
        }
        Ok(Self { values, grid })
    }

    /// Like [`State::new`] but reports non-finite entries as a numerical
    /// failure, which is how integrators surface blow-up.
    pub(crate) fn from_computed(grid: Grid, values: Vec<f64>, what: &str) -> Result<Self> {
        debug_assert_eq!(values.len(), grid.n());
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "{what}: entry {j} is {}",
                values[j]
            )));
        }
        Ok(Self { values, grid })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.n()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_variation(&self) -> f64 {
        total_variation(&self.values)
    }

    pub fn error_norm(&self, other: &State, kind: ErrorNorm) -> Result<f64> {
        error_norm(self, other, kind)
    }

    /// Cyclic shift by `k` places: `out[j] = self[j - k]`.
    pub fn shifted(&self, k: usize) -> State {
        let n = self.values.len();
        let values = (0..n).map(|j| self.values[(j + n - k % n) % n]).collect();
        State {
            values,
            grid: self.grid,
        }
    }
}

/// Periodic total variation `Σ_j |u_{j+1} − u_j|` with `u_n ≡ u_0`.
pub fn total_variation(u: &[f64]) -> f64 {
    match u {
        [] => 0.0,
        [.., last] => {
            let interior: f64 = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            interior + (u[0] - last).abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorNorm {
    /// `sqrt(dx · Σ (u_j − v_j)²)`
    L2Weighted,
    /// `sqrt(Σ (u_j − v_j)² / n)`, the weighted norm divided by `sqrt(length)`.
    L2Mean,
    /// `max |u_j − v_j|`
    LInf,
}

impl ErrorNorm {
    pub fn name(self) -> &'static str {
        match self {
            ErrorNorm::L2Weighted => "l2_weighted",
            ErrorNorm::L2Mean => "l2_mean",
            ErrorNorm::LInf => "linf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2_weighted" | "l2" => Some(ErrorNorm::L2Weighted),
            "l2_mean" | "rms" => Some(ErrorNorm::L2Mean),
            "linf" | "max" => Some(ErrorNorm::LInf),
            _ => None,
        }
    }
}

pub fn error_norm(u: &State, v: &State, kind: ErrorNorm) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::invalid("error norm requires states on the same grid"));
    }
    let diffs = u.values.iter().zip(&v.values).map(|(a, b)| a - b);
    Ok(match kind {
        ErrorNorm::L2Weighted => (u.grid.dx() * diffs.map(|d| d * d).sum::<f64>()).sqrt(),
        ErrorNorm::L2Mean => (diffs.map(|d| d * d).sum::<f64>() / u.len() as f64).sqrt(),
        ErrorNorm::LInf => diffs.fold(0.0, |m, d| m.max(d.abs())),
    })
}

/// Initial-condition description.
#[derive(Clone)]
pub enum IcSpec {
    /// 1 on the closed interval `[lo, hi]`, 0 elsewhere.
    SquareWave { lo: f64, hi: f64 },
    /// `½(1 + sin x)`.
    SineHalf,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for IcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcSpec::SquareWave { lo, hi } => write!(f, "SquareWave({lo}, {hi})"),
            IcSpec::SineHalf => write!(f, "SineHalf"),
            IcSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl IcSpec {
    pub fn square_wave(lo: f64, hi: f64) -> Self {
        IcSpec::SquareWave { lo, hi }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        IcSpec::Custom(Arc::new(f))
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if let IcSpec::SquareWave { lo, hi } = *self {
            let inside = |x: f64| x >= grid.x_left() && x <= grid.x_right();
            if !(lo <= hi && inside(lo) && inside(hi)) {
                return Err(Error::invalid(format!(
                    "square wave edges [{lo}, {hi}] must be ordered and inside [{}, {}]",
                    grid.x_left(),
                    grid.x_right()
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            IcSpec::SquareWave { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            IcSpec::SineHalf => 0.5 * (1.0 + x.sin()),
            IcSpec::Custom(f) => f(x),
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<State> {
        self.validate(grid)?;
        // Node coordinates carry rounding of order ulp(L); snap edge tests by a
        // relative slack so that nodes meant to sit on an edge count as inside.
        let slack = 1e-12 * grid.length();
        let values = grid
            .points()
            .map(|x| match self {
                IcSpec::SquareWave { lo, hi } => {
                    if x >= lo - slack && x <= hi + slack {
                        1.0
                    } else {
                        0.0
                    }
                }
                other => other.eval(x),
            })
            .collect();
        State::new(*grid, values)
    }
}

//! Linear discretizations of the advection term `−a·U_x` on periodic grids.
//!
//! Every built-in operator is circulant: `(Lu)_j = Σ_m kernel[m]·u_{j−m}`.
//! The kernel, the Fourier symbol and a sparse stencil (where one exists)
//! are kept alongside a lazily materialized dense matrix.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, State};
use crate::rhs::Rhs;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Identity token used to key cached exponentials. Clones of an operator
/// share their id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorId(u64);

impl OperatorId {
    fn fresh() -> Self {
        OperatorId(NEXT_ID.fetch_add(1, Ordering::Relaxed))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Upwind1,
    Upwind2,
    Spectral,
    Downwind1,
    Downwind2,
    Custom,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Upwind1 => "upwind1",
            OperatorKind::Upwind2 => "upwind2",
            OperatorKind::Spectral => "spectral",
            OperatorKind::Downwind1 => "downwind1",
            OperatorKind::Downwind2 => "downwind2",
            OperatorKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Circulant,
    General,
}

#[derive(Debug, Clone)]
pub struct LinearOperator {
    id: OperatorId,
    kind: OperatorKind,
    structure: Structure,
    grid: Grid,
    speed: f64,
    /// Circulant generator (column 0). `None` for general operators.
    kernel: Option<Arc<Vec<f64>>>,
    /// Circulant eigenvalues in rustfft ordering.
    symbol: Option<Arc<Vec<Complex64>>>,
    /// `(offset, coefficient)` pairs: `(Lu)_j = Σ c·u_{j+offset}`.
    stencil: Option<Vec<(isize, f64)>>,
    matrix: OnceLock<Arc<DMatrix<f64>>>,
}

fn check_speed(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "upwind-biased operators assume a positive advection speed, got a = {a}"
        )))
    }
}

impl LinearOperator {
    fn from_stencil(grid: Grid, speed: f64, kind: OperatorKind, stencil: Vec<(isize, f64)>) -> Self {
        let n = grid.n();
        let mut kernel = vec![0.0; n];
        for &(offset, c) in &stencil {
            // u_{j+offset} = u_{j−m} with m = −offset mod n
            let m = (-offset).rem_euclid(n as isize) as usize;
            kernel[m] += c;
        }
        let symbol = (0..n)
            .map(|k| {
                stencil.iter().fold(Complex64::new(0.0, 0.0), |acc, &(offset, c)| {
                    let theta = 2.0 * PI * (offset * k as isize).rem_euclid(n as isize) as f64 / n as f64;
                    acc + Complex64::from_polar(c, theta)
                })
            })
            .collect();
        Self {
            id: OperatorId::fresh(),
            kind,
            structure: Structure::Circulant,
            grid,
            speed,
            kernel: Some(Arc::new(kernel)),
            symbol: Some(Arc::new(symbol)),
            stencil: Some(stencil),
            matrix: OnceLock::new(),
        }
    }

    /// `(Lu)_j = −a(u_j − u_{j−1})/Δx`
    pub fn upwind1(grid: Grid, a: f64) -> Result<Self> {
        check_speed(a)?;
        let s = a / grid.dx();
        Ok(Self::from_stencil(grid, a, OperatorKind::Upwind1, vec![(0, -s), (-1, s)]))
    }

    /// `(L̃u)_j = −a(u_{j+1} − u_j)/Δx`
    pub fn downwind1(grid: Grid, a: f64) -> Result<Self> {
        check_speed(a)?;
        let s = a / grid.dx();
        Ok(Self::from_stencil(grid, a, OperatorKind::Downwind1, vec![(1, -s), (0, s)]))
    }

    /// `(Lu)_j = −a(3u_j − 4u_{j−1} + u_{j−2})/(2Δx)`
    pub fn upwind2(grid: Grid, a: f64) -> Result<Self> {
        check_speed(a)?;
        let s = a / (2.0 * grid.dx());
        Ok(Self::from_stencil(
            grid,
            a,
            OperatorKind::Upwind2,
            vec![(0, -3.0 * s), (-1, 4.0 * s), (-2, -s)],
        ))
    }

    /// `(L̃u)_j = −a(−3u_j + 4u_{j+1} − u_{j+2})/(2Δx)`
    pub fn downwind2(grid: Grid, a: f64) -> Result<Self> {
        check_speed(a)?;
        let s = a / (2.0 * grid.dx());
        Ok(Self::from_stencil(
            grid,
            a,
            OperatorKind::Downwind2,
            vec![(0, 3.0 * s), (1, -4.0 * s), (2, s)],
        ))
    }

    /// `L = −a·D` with `D` the Fourier differentiation matrix. The Nyquist
    /// mode of even grids is differentiated to zero, so `D` is real and
    /// antisymmetric and the operator is its own downwind partner.
    pub fn spectral(grid: Grid, a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::invalid("advection speed must be finite"));
        }
        let n = grid.n();
        let scale = 2.0 * PI / grid.length();
        let symbol: Vec<Complex64> = (0..n)
            .map(|k| {
                let wavenumber = if 2 * k < n {
                    k as f64
                } else if 2 * k == n {
                    0.0
                } else {
                    k as f64 - n as f64
                };
                Complex64::new(0.0, -a * scale * wavenumber)
            })
            .collect();

        let mut buf = symbol.clone();
        crate::matexp::fft_plans(n).1.process(&mut buf);
        let raw: Vec<f64> = buf.iter().map(|z| z.re / n as f64).collect();
        // exact antisymmetry: kernel[m] = −kernel[n−m]
        let kernel = (0..n)
            .map(|m| if m == 0 { 0.0 } else { 0.5 * (raw[m] - raw[n - m]) })
            .collect();

        Ok(Self {
            id: OperatorId::fresh(),
            kind: OperatorKind::Spectral,
            structure: Structure::Circulant,
            grid,
            speed: a,
            kernel: Some(Arc::new(kernel)),
            symbol: Some(Arc::new(symbol)),
            stencil: None,
            matrix: OnceLock::new(),
        })
    }

    /// Wraps an arbitrary matrix. Rows must sum to zero; circulant structure
    /// is detected and tagged.
    pub fn custom(grid: Grid, matrix: DMatrix<f64>) -> Result<Self> {
        let n = grid.n();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::invalid(format!(
                "custom operator must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("custom operator has non-finite entries"));
        }
        let scale = matrix.amax().max(1.0);
        for (i, row) in matrix.row_iter().enumerate() {
            if row.sum().abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "custom operator row {i} sums to {}, constants must be annihilated",
                    row.sum()
                )));
            }
        }
        let circulant = (0..n).all(|j| (0..n).all(|l| (matrix[(j, l)] - matrix[((j + n - l) % n, 0)]).abs() <= 1e-14));
        let (structure, kernel, symbol) = if circulant {
            let kernel: Vec<f64> = (0..n).map(|m| matrix[(m, 0)]).collect();
            let mut buf: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            crate::matexp::fft_plans(n).0.process(&mut buf);
            (Structure::Circulant, Some(Arc::new(kernel)), Some(Arc::new(buf)))
        } else {
            (Structure::General, None, None)
        };
        let cell = OnceLock::new();
        let _ = cell.set(Arc::new(matrix));
        Ok(Self {
            id: OperatorId::fresh(),
            kind: OperatorKind::Custom,
            structure,
            grid,
            speed: 0.0,
            kernel,
            symbol,
            stencil: None,
            matrix: cell,
        })
    }

    /// The zero operator (`L ≡ 0`).
    pub fn zero(grid: Grid) -> Self {
        Self::custom(grid, DMatrix::zeros(grid.n(), grid.n())).expect("zero matrix is a valid operator")
    }

    pub fn id(&self) -> OperatorId {
        self.id
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn kernel(&self) -> Option<&[f64]> {
        self.kernel.as_deref().map(Vec::as_slice)
    }

    pub fn symbol(&self) -> Option<&[Complex64]> {
        self.symbol.as_deref().map(Vec::as_slice)
    }

    /// True when every entry is zero.
    pub fn is_zero(&self) -> bool {
        match &self.kernel {
            Some(k) => k.iter().all(|&v| v == 0.0),
            None => self.dense().iter().all(|&v| v == 0.0),
        }
    }

    /// Dense matrix, materialized on first use for circulant operators.
    pub fn dense(&self) -> &DMatrix<f64> {
        self.matrix.get_or_init(|| {
            let n = self.grid.n();
            let kernel = self.kernel.as_ref().expect("general operators are built dense");
            Arc::new(DMatrix::from_fn(n, n, |j, l| kernel[(j + n - l) % n]))
        })
    }

    /// `out = L·u` on raw slices. Uses the sparse stencil, the FFT or the
    /// dense product depending on structure.
    pub fn apply_slice(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        assert_eq!(u.len(), n, "operand length does not match operator");
        assert_eq!(out.len(), n, "output length does not match operator");
        if let Some(stencil) = &self.stencil {
            for (j, o) in out.iter_mut().enumerate() {
                *o = stencil
                    .iter()
                    .map(|&(offset, c)| c * u[(j as isize + offset).rem_euclid(n as isize) as usize])
                    .sum();
            }
        } else if let Some(symbol) = &self.symbol {
            crate::matexp::circulant_multiply(symbol, u, out);
        } else {
            let m = self.dense();
            for (j, o) in out.iter_mut().enumerate() {
                *o = m.row(j).iter().zip(u).map(|(a, b)| a * b).sum();
            }
        }
    }

    pub fn apply(&self, u: &State) -> Result<State> {
        if *u.grid() != self.grid {
            return Err(Error::invalid("operator and state live on different grids"));
        }
        let mut out = vec![0.0; self.grid.n()];
        self.apply_slice(u.values(), &mut out);
        State::from_computed(self.grid, out, "operator application")
    }

    /// Whether `other` is the registered downwind partner of `self`.
    pub fn is_partner(&self, other: &LinearOperator) -> bool {
        if self.grid != other.grid {
            return false;
        }
        match self.kind {
            OperatorKind::Upwind1 => other.kind == OperatorKind::Downwind1 && other.speed == self.speed,
            OperatorKind::Upwind2 => other.kind == OperatorKind::Downwind2 && other.speed == self.speed,
            OperatorKind::Spectral => other.kind == OperatorKind::Spectral && other.speed == self.speed,
            // user-supplied pairs are taken on trust
            OperatorKind::Custom => true,
            OperatorKind::Downwind1 | OperatorKind::Downwind2 => false,
        }
    }
}

impl Rhs for LinearOperator {
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        self.apply_slice(u, out)
    }
}

pub fn build_upwind1(grid: Grid, a: f64) -> Result<LinearOperator> {
    LinearOperator::upwind1(grid, a)
}

pub fn build_downwind1(grid: Grid, a: f64) -> Result<LinearOperator> {
    LinearOperator::downwind1(grid, a)
}

pub fn build_upwind2(grid: Grid, a: f64) -> Result<LinearOperator> {
    LinearOperator::upwind2(grid, a)
}

pub fn build_downwind2(grid: Grid, a: f64) -> Result<LinearOperator> {
    LinearOperator::downwind2(grid, a)
}

pub fn build_spectral(grid: Grid, a: f64) -> Result<LinearOperator> {
    LinearOperator::spectral(grid, a)
}

/// Downwind partner `L̃` of a built-in upwind or spectral operator. The
/// spectral operator is returned unchanged (same id) since `−Lᵀ = L`.
pub fn downwind_of(op: &LinearOperator) -> Result<LinearOperator> {
    match op.kind {
        OperatorKind::Upwind1 => LinearOperator::downwind1(op.grid, op.speed),
        OperatorKind::Upwind2 => LinearOperator::downwind2(op.grid, op.speed),
        OperatorKind::Spectral => Ok(op.clone()),
        other => Err(Error::UnsupportedOperator(format!(
            "no registered downwind partner for a {} operator",
            other.name()
        ))),
    }
}

/// The advection operator families used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdvectionScheme {
    Upwind1,
    Upwind2,
    Spectral,
}

impl AdvectionScheme {
    pub fn build(self, grid: Grid, a: f64) -> Result<LinearOperator> {
        match self {
            AdvectionScheme::Upwind1 => LinearOperator::upwind1(grid, a),
            AdvectionScheme::Upwind2 => LinearOperator::upwind2(grid, a),
            AdvectionScheme::Spectral => LinearOperator::spectral(grid, a),
        }
    }

    /// `(L, L̃)` pair.
    pub fn build_pair(self, grid: Grid, a: f64) -> Result<(LinearOperator, LinearOperator)> {
        let l = self.build(grid, a)?;
        let lt = downwind_of(&l)?;
        Ok((l, lt))
    }

    pub fn name(self) -> &'static str {
        match self {
            AdvectionScheme::Upwind1 => "L1",
            AdvectionScheme::Upwind2 => "L2",
            AdvectionScheme::Spectral => "spectral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" | "upwind1" => Some(AdvectionScheme::Upwind1),
            "l2" | "upwind2" => Some(AdvectionScheme::Upwind2),
            "spectral" | "lspec" => Some(AdvectionScheme::Spectral),
            _ => None,
        }
    }
}

//! Experiment drivers: total-variation sweeps with observed thresholds, and
//! the two convergence studies (grid co-refinement against a fine reference,
//! and fixed-grid temporal convergence).
//!
//! Independent jobs (sweep cells, bisections, convergence rows) run on the
//! current rayon pool; results are always gathered in job order, so output
//! does not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ErrorNorm, Grid, IcSpec, State};
use crate::ifrk::{ifrk_integrate, ifrk_integrate_to, DownwindMode, IfrkConfig};
use crate::linops::{AdvectionScheme, LinearOperator};
use crate::matexp::ExpCache;
use crate::reference::{dp45_integrate, restrict, AdvectionBurgers, ToleranceSpec};
use crate::rhs::{Rhs, SemiDiscretization};
use crate::tableaux::{registry_get, ShuOsherTableau};
use crate::weno::{FluxSpec, WenoBurgers};

/// Forward-Euler TVD ratio `Δt/Δx` of the WENO Burgers discretization.
pub const LAMBDA_FE: f64 = 0.5;
pub const DEFAULT_TV_RISE_TOL: f64 = 1e-10;
/// Floor applied to recorded rises so that `log10` stays finite.
pub const RISE_FLOOR: f64 = 1e-16;
pub const BISECTION_WIDTH: f64 = 1e-3;
/// Relative change below which two consecutive errors count as a plateau.
pub const STALL_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TvMetric {
    /// TV compared between full steps.
    #[default]
    PerStep,
    /// TV compared between consecutive stages.
    PerStage,
    /// Every stage compared with the start of its step.
    StageVsStepStart,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub tableaux: Vec<ShuOsherTableau>,
    pub modes: Vec<DownwindMode>,
    pub lambda_grid: Vec<f64>,
    pub n_steps: usize,
    pub grid: Grid,
    pub speed: f64,
    pub ic: IcSpec,
    pub scheme: AdvectionScheme,
    pub tv_rise_tol: f64,
    pub metric: TvMetric,
    /// Refine each threshold by bisection between grid points.
    pub bisect: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tableaux.is_empty() {
            return Err(Error::invalid("sweep needs at least one method"));
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("sweep needs at least one downwind mode"));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::invalid("lambda grid is empty"));
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("lambda grid values must be positive"));
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("lambda grid must be strictly ascending"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        if !(self.tv_rise_tol.is_finite() && self.tv_rise_tol > 0.0) {
            return Err(Error::invalid("tv_rise_tol must be positive"));
        }
        self.ic.validate(&self.grid)?;
        Ok(())
    }
}

/// `start, start+step, …` up to and including `stop` (within round-off).
pub fn lambda_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| start + k as f64 * step).collect()
}

/// `0.05` to `1.2·C/λ_FE` in steps of `0.025`, with `C` the largest SSP
/// coefficient among `tableaux` (at least 1).
pub fn default_lambda_grid(tableaux: &[ShuOsherTableau]) -> Vec<f64> {
    let c = tableaux
        .iter()
        .filter_map(|t| t.ssp_coefficient().ok())
        .fold(1.0f64, f64::max);
    lambda_range(0.05, 1.2 * c / LAMBDA_FE, 0.025)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub method: String,
    pub mode: DownwindMode,
    pub lambda: f64,
    /// Floored at [`RISE_FLOOR`]; infinite when the run failed.
    pub max_tv_rise: f64,
    pub error: Option<Error>,
}

impl SweepCell {
    pub fn log10_rise(&self) -> f64 {
        self.max_tv_rise.log10()
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.error.is_none() && self.max_tv_rise <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub method: String,
    pub mode: DownwindMode,
    /// Upper end of the first run of passing grid values, refined by
    /// bisection; 0 when no grid value passes.
    pub observed_lambda: f64,
    /// `C·λ_FE`, absent for methods without a positive SSP coefficient.
    pub theoretical_lambda: Option<f64>,
    pub at_lower_boundary: bool,
    pub at_upper_boundary: bool,
    /// Failing grid values below the first passing one.
    pub low_failures: Vec<f64>,
    /// Passing grid values above the threshold.
    pub inversions: Vec<f64>,
}

impl Threshold {
    pub fn observed_ssp_coefficient(&self) -> f64 {
        self.observed_lambda / LAMBDA_FE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub thresholds: Vec<Threshold>,
    pub tv_rise_tol: f64,
}

impl SweepResult {
    pub fn threshold(&self, method: &str, mode: DownwindMode) -> Result<&Threshold> {
        self.thresholds
            .iter()
            .find(|t| t.method == method && t.mode == mode)
            .ok_or_else(|| Error::NotFound(format!("no sweep cell for {method} with mode {}", mode.name())))
    }

    pub fn cells_for<'a>(&'a self, method: &'a str, mode: DownwindMode) -> impl Iterator<Item = &'a SweepCell> + 'a {
        self.cells.iter().filter(move |c| c.method == method && c.mode == mode)
    }
}

/// Observed threshold for one `(method, mode)` pair.
pub fn observed_ssp_lambda(result: &SweepResult, method: &str, mode: DownwindMode) -> Result<f64> {
    result.threshold(method, mode).map(|t| t.observed_lambda)
}

struct SweepContext<'a> {
    spec: &'a SweepSpec,
    linear: LinearOperator,
    downwind: LinearOperator,
    weno: WenoBurgers,
    u0: State,
    tv0: f64,
}

impl SweepContext<'_> {
    fn rise(&self, tableau: &ShuOsherTableau, mode: DownwindMode, lambda: f64) -> Result<f64> {
        let cfg = IfrkConfig {
            tableau,
            linear: &self.linear,
            downwind: &self.downwind,
            rhs: &self.weno,
            dt: lambda * self.spec.grid.dx(),
            n_steps: self.spec.n_steps,
            mode,
        };
        let traj = ifrk_integrate(&cfg, &self.u0, &ExpCache::new())?;
        let rise = match self.spec.metric {
            TvMetric::PerStep => traj.max_step_tv_rise(self.tv0),
            TvMetric::PerStage => traj.max_stage_tv_rise(self.tv0),
            TvMetric::StageVsStepStart => traj.max_stage_over_step_start(self.tv0),
        };
        Ok(rise.max(0.0))
    }

    fn cell(&self, tableau: &ShuOsherTableau, mode: DownwindMode, lambda: f64) -> SweepCell {
        let (max_tv_rise, error) = match self.rise(tableau, mode, lambda) {
            Ok(r) => (r.max(RISE_FLOOR), None),
            Err(e) => (f64::INFINITY, Some(e)),
        };
        SweepCell {
            method: tableau.name().to_string(),
            mode,
            lambda,
            max_tv_rise,
            error,
        }
    }

    fn passes(&self, tableau: &ShuOsherTableau, mode: DownwindMode, lambda: f64) -> bool {
        self.cell(tableau, mode, lambda).passes(self.spec.tv_rise_tol)
    }
}

/// Runs every `(method, mode, λ)` cell for `n_steps` steps with
/// `Δt = λ·Δx` and records the largest TV rise, then locates each observed
/// threshold. Integration failures are recorded in the cell and count as
/// failing.
pub fn tv_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let (linear, downwind) = spec.scheme.build_pair(spec.grid, spec.speed)?;
    let u0 = spec.ic.sample(&spec.grid)?;
    let ctx = SweepContext {
        spec,
        linear,
        downwind,
        weno: WenoBurgers::new(&spec.grid, FluxSpec::default()),
        tv0: u0.total_variation(),
        u0,
    };

    let pairs: Vec<(&ShuOsherTableau, DownwindMode)> = spec
        .tableaux
        .iter()
        .flat_map(|t| spec.modes.iter().map(move |&m| (t, m)))
        .collect();
    let jobs: Vec<(usize, f64)> = (0..pairs.len())
        .flat_map(|p| spec.lambda_grid.iter().map(move |&l| (p, l)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(p, lambda)| ctx.cell(pairs[p].0, pairs[p].1, lambda))
        .collect();

    let m = spec.lambda_grid.len();
    let thresholds: Vec<Threshold> = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(tableau, mode))| locate_threshold(&ctx, tableau, mode, &cells[p * m..(p + 1) * m]))
        .collect();
    Ok(SweepResult {
        cells,
        thresholds,
        tv_rise_tol: spec.tv_rise_tol,
    })
}

fn locate_threshold(ctx: &SweepContext<'_>, tableau: &ShuOsherTableau, mode: DownwindMode, cells: &[SweepCell]) -> Threshold {
    let tol = ctx.spec.tv_rise_tol;
    let first_pass = cells.iter().position(|c| c.passes(tol));
    let low_failures: Vec<f64> = cells[..first_pass.unwrap_or(cells.len())].iter().map(|c| c.lambda).collect();
    let first_fail = first_pass.map(|p| p + cells[p..].iter().position(|c| !c.passes(tol)).unwrap_or(cells.len() - p));
    let inversions = match first_fail {
        Some(f) if f < cells.len() => cells[f..].iter().filter(|c| c.passes(tol)).map(|c| c.lambda).collect(),
        _ => Vec::new(),
    };
    let (observed_lambda, at_lower_boundary, at_upper_boundary) = match first_fail {
        None => (0.0, true, false),
        Some(f) if f == cells.len() => (cells[f - 1].lambda, false, true),
        Some(f) => {
            let (mut lo, mut hi) = (cells[f - 1].lambda, cells[f].lambda);
            if ctx.spec.bisect {
                while hi - lo > BISECTION_WIDTH {
                    let mid = 0.5 * (lo + hi);
                    if ctx.passes(tableau, mode, mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            (lo, false, false)
        }
    };
    Threshold {
        method: tableau.name().to_string(),
        mode,
        observed_lambda,
        theoretical_lambda: tableau.ssp_coefficient().ok().map(|c| c * LAMBDA_FE),
        at_lower_boundary,
        at_upper_boundary,
        low_failures,
        inversions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// Grid spacing or time step.
    pub h: f64,
    pub error: f64,
    pub stalled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Fit over all rows; `None` when fewer than three are usable.
    pub fitted_order: Option<f64>,
}

impl ConvergenceTable {
    pub fn from_errors(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut rows: Vec<ConvergenceRow> = points
            .into_iter()
            .map(|(h, error)| ConvergenceRow { h, error, stalled: false })
            .collect();
        mark_stalls(&mut rows);
        let mut table = Self { rows, fitted_order: None };
        table.fitted_order = fit_order(&table, false).ok();
        table
    }

    pub fn stalled(&self) -> bool {
        self.rows.iter().any(|r| r.stalled)
    }

    /// Mean error over the stalled rows.
    pub fn plateau(&self) -> Option<f64> {
        let stalled: Vec<f64> = self.rows.iter().filter(|r| r.stalled).map(|r| r.error).collect();
        (!stalled.is_empty()).then(|| stalled.iter().sum::<f64>() / stalled.len() as f64)
    }
}

fn mark_stalls(rows: &mut [ConvergenceRow]) {
    for k in 1..rows.len() {
        let (a, b) = (rows[k - 1].error, rows[k].error);
        if a > 0.0 && b > 0.0 && ((a - b) / a).abs() < STALL_THRESHOLD {
            rows[k - 1].stalled = true;
            rows[k].stalled = true;
        }
    }
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_order(table: &ConvergenceTable, exclude_stalled: bool) -> Result<f64> {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| !(exclude_stalled && r.stalled))
        .filter(|r| r.h > 0.0 && r.error > 0.0 && r.error.is_finite())
        .map(|r| (r.h.ln(), r.error.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData { usable: pts.len() });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all step sizes are equal"));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone)]
pub struct CorefinementSpec {
    pub scheme: AdvectionScheme,
    pub tableau: ShuOsherTableau,
    pub mode: DownwindMode,
    pub grids: Vec<usize>,
    /// `Δt/Δx`.
    pub lambda: f64,
    pub problem: AdvectionBurgers,
    pub norm: ErrorNorm,
}

/// Integrates on each grid with `Δt = λΔx` (last step clipped to land on
/// `T`) and compares with `reference` sampled at the coarse nodes.
pub fn corefinement_study(spec: &CorefinementSpec, reference: &State) -> Result<ConvergenceTable> {
    if spec.grids.is_empty() {
        return Err(Error::invalid("grid list is empty"));
    }
    if !(spec.lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let ref_n = reference.grid().n();
    if let Some(bad) = spec.grids.iter().find(|&&n| n == 0 || !ref_n.is_multiple_of(n)) {
        return Err(Error::invalid(format!(
            "grid of {bad} points is not nested in the reference grid of {ref_n} points"
        )));
    }
    let p = &spec.problem;
    let rows: Vec<Result<(f64, f64)>> = spec
        .grids
        .par_iter()
        .map(|&n| {
            let grid = Grid::new(p.x_left, p.x_right, n)?;
            let (l, lt) = spec.scheme.build_pair(grid, p.a)?;
            let weno = WenoBurgers::new(&grid, FluxSpec::default());
            let rhs: &dyn Rhs = if p.nonlinear { &weno } else { &crate::rhs::ZeroRhs };
            let cfg = IfrkConfig {
                tableau: &spec.tableau,
                linear: &l,
                downwind: &lt,
                rhs,
                dt: spec.lambda * grid.dx(),
                n_steps: 1,
                mode: spec.mode,
            };
            let u = ifrk_integrate_to(&cfg, &p.ic.sample(&grid)?, p.t_final, &ExpCache::new())?;
            let exact = restrict(reference, &grid)?;
            Ok((grid.dx(), u.error_norm(&exact, spec.norm)?))
        })
        .collect();
    Ok(ConvergenceTable::from_errors(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

#[derive(Debug, Clone)]
pub struct OdeConvergenceSpec {
    pub scheme: AdvectionScheme,
    pub tableau: ShuOsherTableau,
    pub mode: DownwindMode,
    pub n: usize,
    /// `Δt/Δx` values, largest first.
    pub lambdas: Vec<f64>,
    pub problem: AdvectionBurgers,
    pub reference_tol: ToleranceSpec,
    pub norm: ErrorNorm,
}

/// Reference for the fixed-grid study: the same semi-discretization
/// `u' = Lu + N(u)` integrated adaptively.
pub fn ode_reference(scheme: AdvectionScheme, n: usize, problem: &AdvectionBurgers, tol: &ToleranceSpec) -> Result<State> {
    let grid = Grid::new(problem.x_left, problem.x_right, n)?;
    let l = scheme.build(grid, problem.a)?;
    let weno = WenoBurgers::new(&grid, FluxSpec::default());
    let f = SemiDiscretization {
        linear: &l,
        nonlinear: problem.nonlinear.then_some(&weno),
    };
    Ok(dp45_integrate(&f, &problem.ic.sample(&grid)?, problem.t_final, tol)?.state)
}

/// Temporal error of the integrating-factor method on a fixed grid for
/// each `Δt = λΔx`, with plateau detection.
pub fn ode_convergence_study(spec: &OdeConvergenceSpec) -> Result<ConvergenceTable> {
    if spec.lambdas.is_empty() {
        return Err(Error::invalid("lambda list is empty"));
    }
    let p = &spec.problem;
    let grid = Grid::new(p.x_left, p.x_right, spec.n)?;
    let reference = ode_reference(spec.scheme, spec.n, p, &spec.reference_tol)?;
    let (l, lt) = spec.scheme.build_pair(grid, p.a)?;
    let weno = WenoBurgers::new(&grid, FluxSpec::default());
    let u0 = p.ic.sample(&grid)?;
    let rows: Vec<Result<(f64, f64)>> = spec
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let rhs: &dyn Rhs = if p.nonlinear { &weno } else { &crate::rhs::ZeroRhs };
            let cfg = IfrkConfig {
                tableau: &spec.tableau,
                linear: &l,
                downwind: &lt,
                rhs,
                dt: lambda * grid.dx(),
                n_steps: 1,
                mode: spec.mode,
            };
            let u = ifrk_integrate_to(&cfg, &u0, p.t_final, &ExpCache::new())?;
            Ok((cfg.dt, u.error_norm(&reference, spec.norm)?))
        })
        .collect();
    Ok(ConvergenceTable::from_errors(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Named configurations.
pub mod presets {
    use super::*;

    pub const SWEEP_METHODS: [&str; 4] = ["eSSPRK(3,3)", "eSSPRK(4,3)", "eSSPRK(5,4)", "eSSPRK(10,4)"];
    pub const TEST1_GRIDS: [usize; 3] = [128, 256, 512];
    pub const TEST1_REFERENCE_N: usize = 2048;
    pub const TEST2_N: usize = 50;

    fn registry(names: &[&str]) -> Result<Vec<ShuOsherTableau>> {
        names.iter().map(|n| registry_get(n)).collect()
    }

    /// Square pulse on 400 points, `a = 10`, eSSPRK(3,3), with and without
    /// downwinding.
    pub fn motivating() -> Result<SweepSpec> {
        let tableaux = registry(&["eSSPRK(3,3)"])?;
        Ok(SweepSpec {
            lambda_grid: default_lambda_grid(&tableaux),
            tableaux,
            modes: vec![DownwindMode::Never, DownwindMode::Rule],
            n_steps: 25,
            grid: Grid::new(0.0, 1.0, 400)?,
            speed: 10.0,
            ic: IcSpec::square_wave(0.0, 0.5),
            scheme: AdvectionScheme::Upwind1,
            tv_rise_tol: DEFAULT_TV_RISE_TOL,
            metric: TvMetric::PerStep,
            bisect: true,
        })
    }

    /// Square pulse on 1000 points for the four optimal explicit methods.
    pub fn sweep1000() -> Result<SweepSpec> {
        let tableaux = registry(&SWEEP_METHODS)?;
        Ok(SweepSpec {
            lambda_grid: default_lambda_grid(&tableaux),
            tableaux,
            modes: vec![DownwindMode::Never, DownwindMode::Rule],
            n_steps: 25,
            grid: Grid::new(0.0, 1.0, 1000)?,
            speed: 10.0,
            ic: IcSpec::square_wave(0.25, 0.75),
            scheme: AdvectionScheme::Upwind1,
            tv_rise_tol: DEFAULT_TV_RISE_TOL,
            metric: TvMetric::PerStep,
            bisect: true,
        })
    }

    pub fn test1_reference_tol() -> ToleranceSpec {
        ToleranceSpec::new(1e-12, 1e-12)
    }

    /// Co-refinement runs: each operator with eSSPRK(3,3) (downwinded) and
    /// eSSPRK+(3,3).
    pub fn test1() -> Result<Vec<CorefinementSpec>> {
        let mut out = Vec::new();
        for scheme in [AdvectionScheme::Upwind1, AdvectionScheme::Upwind2, AdvectionScheme::Spectral] {
            for name in ["eSSPRK(3,3)", "eSSPRK+(3,3)"] {
                out.push(CorefinementSpec {
                    scheme,
                    tableau: registry_get(name)?,
                    mode: DownwindMode::Rule,
                    grids: TEST1_GRIDS.to_vec(),
                    lambda: 0.25,
                    problem: AdvectionBurgers::smooth_test(),
                    norm: ErrorNorm::L2Mean,
                });
            }
        }
        Ok(out)
    }

    pub fn test2_lambdas() -> Vec<f64> {
        (1..=6).map(|k| 0.5f64.powi(k)).collect()
    }

    /// Fixed-grid runs: each operator with eSSPRK(3,3) in both modes and
    /// eSSPRK+(3,3).
    pub fn test2() -> Result<Vec<OdeConvergenceSpec>> {
        let mut out = Vec::new();
        for scheme in [AdvectionScheme::Upwind1, AdvectionScheme::Upwind2, AdvectionScheme::Spectral] {
            for (name, mode) in [
                ("eSSPRK(3,3)", DownwindMode::Rule),
                ("eSSPRK(3,3)", DownwindMode::Never),
                ("eSSPRK+(3,3)", DownwindMode::Rule),
            ] {
                out.push(OdeConvergenceSpec {
                    scheme,
                    tableau: registry_get(name)?,
                    mode,
                    n: TEST2_N,
                    lambdas: test2_lambdas(),
                    problem: AdvectionBurgers::smooth_test(),
                    reference_tol: ToleranceSpec::new(1e-12, 1e-12),
                    norm: ErrorNorm::L2Mean,
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(points: &[(f64, f64)]) -> ConvergenceTable {
        ConvergenceTable::from_errors(points.iter().copied())
    }

    #[test]
    fn fit_exact_power() {
        let t = table(&[(0.1, 3.0 * 0.01), (0.05, 3.0 * 0.0025), (0.025, 3.0 * 0.000625)]);
        assert!((fit_order(&t, false).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_constant_errors() {
        let t = table(&[(0.1, 0.5), (0.05, 0.5), (0.025, 0.5)]);
        assert_eq!(fit_order(&t, false).unwrap(), 0.0);
        assert!(t.rows.iter().all(|r| r.stalled));
        assert!(matches!(fit_order(&t, true), Err(Error::InsufficientData { usable: 0 })));
    }

    #[test]
    fn fit_noisy_fourth_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let h = 0.5f64.powi(k);
                (h, 2.0 * h.powi(4) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            })
            .collect();
        let order = fit_order(&table(&pts), false).unwrap();
        assert!((order - 4.0).abs() <= 0.1, "{order}");
    }

    #[test]
    fn fit_needs_three_rows() {
        let t = table(&[(0.1, 1.0), (0.05, 0.5)]);
        assert!(matches!(fit_order(&t, false), Err(Error::InsufficientData { usable: 2 })));
        assert_eq!(t.fitted_order, None);
    }

    #[test]
    fn stall_detection() {
        let t = table(&[(0.5, 1e-2), (0.25, 4e-3), (0.125, 3.9e-3), (0.0625, 3.85e-3)]);
        let flags: Vec<bool> = t.rows.iter().map(|r| r.stalled).collect();
        assert_eq!(flags, [false, true, true, true]);
        assert!((t.plateau().unwrap() - (4e-3 + 3.9e-3 + 3.85e-3) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_ranges() {
        let g = lambda_range(0.05, 0.15, 0.025);
        assert_eq!(g.len(), 5);
        assert!((g[4] - 0.15).abs() < 1e-15);
        let t = vec![registry_get("eSSPRK(3,3)").unwrap()];
        let d = default_lambda_grid(&t);
        assert!((d.last().unwrap() - 2.4).abs() < 1e-12);
    }

    fn small_sweep() -> SweepSpec {
        let tableaux = vec![registry_get("eSSPRK(3,3)").unwrap()];
        SweepSpec {
            tableaux,
            modes: vec![DownwindMode::Never, DownwindMode::Rule],
            lambda_grid: lambda_range(0.1, 1.0, 0.1),
            n_steps: 5,
            grid: Grid::new(0.0, 1.0, 100).unwrap(),
            speed: 10.0,
            ic: IcSpec::square_wave(0.25, 0.75),
            scheme: AdvectionScheme::Upwind1,
            tv_rise_tol: DEFAULT_TV_RISE_TOL,
            metric: TvMetric::PerStep,
            bisect: true,
        }
    }

    #[test]
    fn sweep_validation() {
        let mut s = small_sweep();
        s.lambda_grid.clear();
        assert!(tv_sweep(&s).is_err());
        let mut s = small_sweep();
        s.lambda_grid = vec![0.2, 0.1];
        assert!(tv_sweep(&s).is_err());
        let mut s = small_sweep();
        s.lambda_grid = vec![-0.1, 0.1];
        assert!(tv_sweep(&s).is_err());
    }

    #[test]
    fn sweep_is_deterministic_across_pools() {
        let s = small_sweep();
        let a = tv_sweep(&s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| tv_sweep(&s)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 20);
        let th = a.threshold("eSSPRK(3,3)", DownwindMode::Rule).unwrap();
        assert_eq!(th.theoretical_lambda, Some(0.5));
        assert!(matches!(
            observed_ssp_lambda(&a, "eSSPRK(4,3)", DownwindMode::Rule),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn never_failing_sweep_is_flagged() {
        let mut s = small_sweep();
        s.lambda_grid = vec![0.1, 0.2, 0.3];
        s.ic = IcSpec::custom(|_| 0.5);
        let r = tv_sweep(&s).unwrap();
        for th in &r.thresholds {
            assert!(th.at_upper_boundary);
            assert_eq!(th.observed_lambda, 0.3);
        }
    }

    #[test]
    fn cell_failures_are_recorded() {
        let mut s = small_sweep();
        s.modes = vec![DownwindMode::Strict];
        let r = tv_sweep(&s).unwrap();
        assert!(r.cells.iter().all(|c| c.error.is_some() && c.max_tv_rise.is_infinite()));
        assert!(r.thresholds[0].at_lower_boundary);
    }

    #[test]
    fn threshold_bracketed_by_grid() {
        let r = tv_sweep(&small_sweep()).unwrap();
        for th in &r.thresholds {
            let cells: Vec<&SweepCell> = r.cells_for(&th.method, th.mode).collect();
            if th.at_lower_boundary || th.at_upper_boundary {
                continue;
            }
            for c in &cells {
                if c.lambda <= th.observed_lambda && !th.low_failures.contains(&c.lambda) {
                    assert!(c.passes(r.tv_rise_tol));
                }
            }
            assert!(cells.iter().any(|c| c.lambda > th.observed_lambda && c.lambda - th.observed_lambda <= 0.1 + 1e-12));
        }
    }

    #[test]
    fn nested_grid_required() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 300).unwrap();
        let reference = IcSpec::SineHalf.sample(&g).unwrap();
        let spec = CorefinementSpec {
            scheme: AdvectionScheme::Upwind1,
            tableau: registry_get("eSSPRK(3,3)").unwrap(),
            mode: DownwindMode::Rule,
            grids: vec![100, 128],
            lambda: 0.25,
            problem: AdvectionBurgers::smooth_test(),
            norm: ErrorNorm::L2Weighted,
        };
        let err = corefinement_study(&spec, &reference).unwrap_err();
        assert!(err.to_string().contains("128"), "{err}");
    }
}

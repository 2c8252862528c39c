//! Integrating-factor Runge–Kutta stepping.
//!
//! One step of the integrating-factor method reads
//!
//! ```text
//! u^(i) = Σ_j e^{L*_{ij} (c_i − c_j) Δt} (α_{i,j} u^(j) + Δt β_{i,j} N(u^(j)))
//! ```
//!
//! where `L*_{ij}` is `L` when `c_i ≥ c_j` and, under [`DownwindMode::Rule`],
//! the downwind partner `L̃` when `c_i < c_j`.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{total_variation, State};
use crate::linops::LinearOperator;
use crate::matexp::ExpCache;
use crate::rhs::Rhs;
use crate::tableaux::{ShuOsherTableau, DECREASING_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DownwindMode {
    /// Always exponentiate `L`, also for negative `τ`.
    Never,
    /// Use `L̃` whenever the abscissas decrease.
    Rule,
    /// Refuse methods with decreasing abscissas.
    Strict,
}

impl DownwindMode {
    pub fn name(self) -> &'static str {
        match self {
            DownwindMode::Never => "never",
            DownwindMode::Rule => "rule",
            DownwindMode::Strict => "strict",
        }
    }
}

impl FromStr for DownwindMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "never" => Ok(DownwindMode::Never),
            "rule" => Ok(DownwindMode::Rule),
            "strict" => Ok(DownwindMode::Strict),
            other => Err(Error::invalid(format!("unknown downwind mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub tv_after_step: f64,
    pub max_stage_tv: f64,
    /// TV of `u^(1)..=u^(s)`.
    pub stage_tvs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: State,
    pub stage_tvs: Vec<f64>,
}

/// Which operator and time the `(i, j)` exponential uses.
fn exponential_for<'a>(
    t: &ShuOsherTableau,
    i: usize,
    j: usize,
    dt: f64,
    l: &'a LinearOperator,
    lt: &'a LinearOperator,
    mode: DownwindMode,
) -> (&'a LinearOperator, f64) {
    let c = t.abscissas();
    let delta = c[i] - c[j];
    if delta.abs() <= DECREASING_TOL {
        (l, 0.0)
    } else if delta < 0.0 && mode == DownwindMode::Rule {
        (lt, delta * dt)
    } else {
        (l, delta * dt)
    }
}

fn check_step_inputs(
    t: &ShuOsherTableau,
    l: &LinearOperator,
    lt: &LinearOperator,
    dt: f64,
    u: &State,
    mode: DownwindMode,
) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if l.grid() != u.grid() || lt.grid() != u.grid() {
        return Err(Error::invalid("operators and state must share a grid"));
    }
    match mode {
        DownwindMode::Rule if !l.is_partner(lt) => Err(Error::invalid(format!(
            "{} is not the downwind partner of {}",
            lt.kind().name(),
            l.kind().name()
        ))),
        DownwindMode::Strict => match t.abscissa_pairs().into_iter().find(|p| p.decreasing) {
            Some(p) => Err(Error::DecreasingAbscissaRejected {
                stage: p.i,
                source_stage: p.j,
                delta: p.delta,
            }),
            None => Ok(()),
        },
        _ => Ok(()),
    }
}

/// Computes every exponential one step needs so that stepping only reads
/// the cache.
pub fn precompute_exponentials(
    t: &ShuOsherTableau,
    l: &LinearOperator,
    lt: &LinearOperator,
    dt: f64,
    mode: DownwindMode,
    cache: &ExpCache,
) -> Result<()> {
    for p in t.abscissa_pairs() {
        let (op, tau) = exponential_for(t, p.i, p.j, dt, l, lt, mode);
        cache.get_exp(op, tau)?;
    }
    Ok(())
}

/// `acc += α u + Δt β f`, the per-term update shared by both steppers.
#[inline]
fn combine(out: &mut [f64], a: f64, u: &[f64], dtb: f64, f: Option<&[f64]>) {
    match f {
        Some(f) => {
            for ((o, &x), &y) in out.iter_mut().zip(u).zip(f) {
                *o = a * x + dtb * y;
            }
        }
        None => {
            for (o, &x) in out.iter_mut().zip(u) {
                *o = a * x;
            }
        }
    }
}

/// Lazily evaluated stage derivatives `F(u^(j))`.
struct StageDerivatives<'a> {
    rhs: &'a dyn Rhs,
    values: Vec<Option<Vec<f64>>>,
}

impl<'a> StageDerivatives<'a> {
    fn new(rhs: &'a dyn Rhs, s: usize) -> Self {
        Self {
            rhs,
            values: vec![None; s + 1],
        }
    }

    fn get(&mut self, j: usize, u: &[f64]) -> Result<&[f64]> {
        if self.values[j].is_none() {
            let f = self.rhs.eval_vec(u);
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure(format!("right-hand side of stage {j} is not finite")));
            }
            self.values[j] = Some(f);
        }
        Ok(self.values[j].as_deref().expect("just filled"))
    }
}

fn check_stage(stage: &[f64], i: usize) -> Result<()> {
    match stage.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NumericalFailure(format!("stage {i} entry {k} is {}", stage[k]))),
        None => Ok(()),
    }
}

/// One integrating-factor step from `u` with step size `dt`.
#[allow(clippy::too_many_arguments)]
pub fn ifrk_step(
    t: &ShuOsherTableau,
    l: &LinearOperator,
    lt: &LinearOperator,
    rhs: &dyn Rhs,
    dt: f64,
    u: &State,
    mode: DownwindMode,
    cache: &ExpCache,
) -> Result<StepOutput> {
    check_step_inputs(t, l, lt, dt, u, mode)?;
    let s = t.stages();
    let n = u.len();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s + 1);
    stages.push(u.values().to_vec());
    let mut derivs = StageDerivatives::new(rhs, s);
    let mut stage_tvs = Vec::with_capacity(s);
    let mut term = vec![0.0; n];
    let mut propagated = vec![0.0; n];

    for i in 1..=s {
        let mut acc = vec![0.0; n];
        for j in 0..i {
            let a = t.alpha(i, j);
            if a == 0.0 {
                continue;
            }
            let b = t.beta(i, j);
            let f = if b != 0.0 { Some(derivs.get(j, &stages[j])?) } else { None };
            combine(&mut term, a, &stages[j], dt * b, f);
            let (op, tau) = exponential_for(t, i, j, dt, l, lt, mode);
            let e = cache.get_exp(op, tau)?;
            e.apply_slice(&term, &mut propagated);
            for (x, y) in acc.iter_mut().zip(&propagated) {
                *x += y;
            }
        }
        check_stage(&acc, i)?;
        stage_tvs.push(total_variation(&acc));
        stages.push(acc);
    }
    let last = stages.pop().expect("at least one stage");
    Ok(StepOutput {
        state: State::from_computed(*u.grid(), last, "integrating-factor step")?,
        stage_tvs,
    })
}

/// Plain explicit Shu–Osher step for `u' = F(u)`.
pub fn ssprk_step(t: &ShuOsherTableau, f: &dyn Rhs, dt: f64, u: &State) -> Result<State> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let s = t.stages();
    let n = u.len();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s + 1);
    stages.push(u.values().to_vec());
    let mut derivs = StageDerivatives::new(f, s);
    let mut term = vec![0.0; n];
    for i in 1..=s {
        let mut acc = vec![0.0; n];
        for j in 0..i {
            let a = t.alpha(i, j);
            if a == 0.0 {
                continue;
            }
            let b = t.beta(i, j);
            let fj = if b != 0.0 { Some(derivs.get(j, &stages[j])?) } else { None };
            combine(&mut term, a, &stages[j], dt * b, fj);
            for (x, y) in acc.iter_mut().zip(&term) {
                *x += y;
            }
        }
        check_stage(&acc, i)?;
        stages.push(acc);
    }
    State::from_computed(*u.grid(), stages.pop().expect("at least one stage"), "SSP step")
}

/// Everything a fixed-step integration needs.
#[derive(Clone, Copy)]
pub struct IfrkConfig<'a> {
    pub tableau: &'a ShuOsherTableau,
    pub linear: &'a LinearOperator,
    pub downwind: &'a LinearOperator,
    pub rhs: &'a dyn Rhs,
    pub dt: f64,
    pub n_steps: usize,
    pub mode: DownwindMode,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: State,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    /// Largest step-to-step TV increase, clamped at zero. The first step is
    /// compared with `tv0`.
    pub fn max_step_tv_rise(&self, tv0: f64) -> f64 {
        let mut prev = tv0;
        let mut rise = 0.0f64;
        for r in &self.records {
            rise = rise.max(r.tv_after_step - prev);
            prev = r.tv_after_step;
        }
        rise
    }

    /// Largest excess of any stage TV over the TV at the start of its step.
    pub fn max_stage_over_step_start(&self, tv0: f64) -> f64 {
        let mut start = tv0;
        let mut rise = 0.0f64;
        for r in &self.records {
            rise = rise.max(r.max_stage_tv - start);
            start = r.tv_after_step;
        }
        rise
    }

    /// Largest stage-to-stage TV increase across the whole run.
    pub fn max_stage_tv_rise(&self, tv0: f64) -> f64 {
        let mut prev = tv0;
        let mut rise = 0.0f64;
        for tv in self.records.iter().flat_map(|r| &r.stage_tvs) {
            rise = rise.max(tv - prev);
            prev = *tv;
        }
        rise
    }
}

/// `n_steps` fixed steps sharing one cache; exponentials are computed before
/// the first step.
pub fn ifrk_integrate(cfg: &IfrkConfig<'_>, u0: &State, cache: &ExpCache) -> Result<Trajectory> {
    if cfg.n_steps == 0 {
        return Err(Error::invalid("n_steps must be at least 1"));
    }
    check_step_inputs(cfg.tableau, cfg.linear, cfg.downwind, cfg.dt, u0, cfg.mode)?;
    precompute_exponentials(cfg.tableau, cfg.linear, cfg.downwind, cfg.dt, cfg.mode, cache)?;
    let mut u = u0.clone();
    let mut records = Vec::with_capacity(cfg.n_steps);
    for step in 1..=cfg.n_steps {
        let out = ifrk_step(cfg.tableau, cfg.linear, cfg.downwind, cfg.rhs, cfg.dt, &u, cfg.mode, cache)
            .map_err(|e| Error::StepFailed {
                step,
                source: Box::new(e),
            })?;
        u = out.state;
        records.push(StepRecord {
            step,
            time: step as f64 * cfg.dt,
            tv_after_step: u.total_variation(),
            max_stage_tv: out.stage_tvs.iter().copied().fold(0.0, f64::max),
            stage_tvs: out.stage_tvs,
        });
    }
    Ok(Trajectory { state: u, records })
}

/// Integrates to `t_final` with step `cfg.dt`; the last step is shortened to
/// land on `t_final`. `cfg.n_steps` is ignored.
pub fn ifrk_integrate_to(cfg: &IfrkConfig<'_>, u0: &State, t_final: f64, cache: &ExpCache) -> Result<State> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
    }
    let ratio = t_final / cfg.dt;
    let mut full = ratio.floor() as usize;
    let mut remainder = t_final - full as f64 * cfg.dt;
    // a sliver of a step is folded into the last full step
    if remainder <= 1e-10 * cfg.dt {
        remainder = 0.0;
    } else if full > 0 && remainder >= cfg.dt * (1.0 - 1e-10) {
        full += 1;
        remainder = 0.0;
    }
    let mut u = u0.clone();
    if full > 0 {
        let traj = ifrk_integrate(&IfrkConfig { n_steps: full, ..*cfg }, &u, cache)?;
        u = traj.state;
    }
    if remainder > 0.0 {
        u = ifrk_step(cfg.tableau, cfg.linear, cfg.downwind, cfg.rhs, remainder, &u, cfg.mode, cache)
            .map_err(|e| Error::StepFailed {
                step: full + 1,
                source: Box::new(e),
            })?
            .state;
    }
    Ok(u)
}

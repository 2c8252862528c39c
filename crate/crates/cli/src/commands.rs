use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sspif::experiments::{
    corefinement_study, default_lambda_grid, lambda_range, ode_convergence_study, presets, tv_sweep, ConvergenceTable,
    CorefinementSpec, OdeConvergenceSpec, SweepSpec, TvMetric,
};
use sspif::linops::AdvectionScheme;
use sspif::reference::{reference_solution, AdvectionBurgers, ToleranceSpec};
use sspif::tableaux::{load_tableau_file, registry_get, REGISTRY};
use sspif::{DownwindMode, ErrorNorm, Grid, IcSpec, ShuOsherTableau};

use crate::config::{Config, ConfigError, Entry};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(sspif::Error),
    Io(String),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Usage(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<sspif::Error> for CliError {
    fn from(e: sspif::Error) -> Self {
        CliError::Core(e)
    }
}

/// `Ok(true)` when every requested check passed.
pub type CmdResult = Result<bool, CliError>;

pub struct Context {
    pub config: Config,
    pub out: PathBuf,
    pub preset: Option<String>,
    pub seed: u64,
    pub tableau_files: Vec<PathBuf>,
}

impl Context {
    fn tableaux_from_files(&self) -> Result<Vec<ShuOsherTableau>, CliError> {
        self.tableau_files
            .iter()
            .map(|p| load_tableau_file(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))))
            .collect()
    }

    fn write(&self, name: &str, body: &[u8]) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, body).map_err(|e| io_err(&path, e))
    }

    fn preset_or(&self, allowed: &[&str], default: &str) -> Result<String, CliError> {
        match &self.preset {
            None => Ok(default.to_string()),
            Some(p) if allowed.contains(&p.as_str()) => Ok(p.clone()),
            Some(p) => Err(CliError::Usage(format!(
                "preset {p:?} does not apply here (expected one of {})",
                allowed.join(", ")
            ))),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Header plus rows; fields containing commas (method names) get quoted.
fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Round-trip float formatting: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn check(ok: bool, label: String) -> bool {
    println!("check {} {label}", if ok { "ok  " } else { "FAIL" });
    ok
}

struct Methods {
    extra: Vec<ShuOsherTableau>,
}

impl Methods {
    fn resolve(&self, name: &str) -> Option<ShuOsherTableau> {
        registry_get(name)
            .ok()
            .or_else(|| self.extra.iter().find(|t| t.name() == name).cloned())
    }

    fn list(&self, e: &Entry) -> Result<Vec<ShuOsherTableau>, ConfigError> {
        let names = e.list();
        if names.is_empty() {
            return Err(e.err("no methods listed"));
        }
        names
            .into_iter()
            .map(|n| self.resolve(n).ok_or_else(|| e.err(format!("unknown method {n:?}"))))
            .collect()
    }
}

fn modes(e: &Entry) -> Result<Vec<DownwindMode>, ConfigError> {
    let m: Vec<DownwindMode> = e.parse_list()?;
    if m.is_empty() {
        return Err(e.err("no modes listed"));
    }
    Ok(m)
}

fn scheme(e: &Entry, s: &str) -> Result<AdvectionScheme, ConfigError> {
    AdvectionScheme::parse(s).ok_or_else(|| e.err(format!("unknown operator {s:?} (L1, L2, spectral)")))
}

fn schemes(e: &Entry) -> Result<Vec<AdvectionScheme>, ConfigError> {
    let s: Vec<AdvectionScheme> = e.list().into_iter().map(|s| scheme(e, s)).collect::<Result<_, _>>()?;
    if s.is_empty() {
        return Err(e.err("no operators listed"));
    }
    Ok(s)
}

fn metric(e: &Entry) -> Result<TvMetric, ConfigError> {
    match e.value.as_str() {
        "per_step" => Ok(TvMetric::PerStep),
        "per_stage" => Ok(TvMetric::PerStage),
        "stage_vs_step_start" => Ok(TvMetric::StageVsStepStart),
        other => Err(e.err(format!("unknown metric {other:?} (per_step, per_stage, stage_vs_step_start)"))),
    }
}

fn norm(e: &Entry) -> Result<ErrorNorm, ConfigError> {
    ErrorNorm::parse(&e.value).ok_or_else(|| e.err(format!("unknown norm {:?} (l2_weighted, l2_mean, linf)", e.value)))
}

fn positive(e: &Entry) -> Result<f64, ConfigError> {
    let v: f64 = e.parse()?;
    if !(v.is_finite() && v > 0.0) {
        return Err(e.err("must be positive"));
    }
    Ok(v)
}

/// `square:lo:hi`, `sine_half` or `random_steps:k` (piecewise constant,
/// drawn from `seed`).
fn ic(e: &Entry, seed: u64, x_left: f64, x_right: f64) -> Result<IcSpec, ConfigError> {
    let parts: Vec<&str> = e.value.split(':').map(str::trim).collect();
    let float = |s: &str| s.parse::<f64>().map_err(|err| e.err(format!("{err} ({s:?})")));
    match parts.as_slice() {
        ["square", lo, hi] => Ok(IcSpec::square_wave(float(lo)?, float(hi)?)),
        ["sine_half"] => Ok(IcSpec::SineHalf),
        ["random_steps", k] => {
            let k: usize = k.parse().map_err(|err| e.err(format!("{err} ({k:?})")))?;
            if k == 0 {
                return Err(e.err("random_steps needs at least one step"));
            }
            Ok(random_steps(seed, k, x_left, x_right))
        }
        _ => Err(e.err(format!("unknown initial condition {:?}", e.value))),
    }
}

fn random_steps(seed: u64, k: usize, x_left: f64, x_right: f64) -> IcSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut breaks: Vec<f64> = (0..k).map(|_| rng.random_range(x_left..x_right)).collect();
    breaks.sort_by(f64::total_cmp);
    let values: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    IcSpec::custom(move |x| {
        let idx = breaks.partition_point(|&b| b <= x);
        // Left of the first break wraps around to the last piece.
        values[(idx + k - 1) % k]
    })
}

struct Problem {
    x_left: f64,
    x_right: f64,
}

impl Problem {
    fn domain(config: &Config, x_left: f64, x_right: f64) -> Result<Self, ConfigError> {
        let x_left = config.get("x_left").map(|e| e.parse()).transpose()?.unwrap_or(x_left);
        let x_right = config.get("x_right").map(|e| e.parse()).transpose()?.unwrap_or(x_right);
        if !(x_right > x_left) {
            let line = config.get("x_right").or(config.get("x_left")).map_or(0, |e| e.line);
            return Err(ConfigError::new(line, "x_right must exceed x_left"));
        }
        Ok(Self { x_left, x_right })
    }
}

const PROBLEM_KEYS: [&str; 6] = ["speed", "x_left", "x_right", "t_final", "nonlinear", "ic"];

fn apply_problem(ctx: &Context, p: &mut AdvectionBurgers) -> Result<(), ConfigError> {
    let c = &ctx.config;
    let d = Problem::domain(c, p.x_left, p.x_right)?;
    p.x_left = d.x_left;
    p.x_right = d.x_right;
    if let Some(e) = c.get("speed") {
        p.a = e.parse()?;
    }
    if let Some(e) = c.get("t_final") {
        let t: f64 = e.parse()?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(e.err("must be non-negative"));
        }
        p.t_final = t;
    }
    if let Some(e) = c.get("nonlinear") {
        p.nonlinear = e.bool()?;
    }
    if let Some(e) = c.get("ic") {
        p.ic = ic(e, ctx.seed, p.x_left, p.x_right)?;
    }
    Ok(())
}

fn tolerance(e: &Entry) -> Result<ToleranceSpec, ConfigError> {
    let t = positive(e)?;
    Ok(ToleranceSpec::new(t, t))
}

fn keys(base: &[&'static str], extra: &[&'static str]) -> Vec<&'static str> {
    base.iter().chain(extra).copied().collect()
}

pub fn tv_sweep_cmd(ctx: &Context) -> CmdResult {
    let c = &ctx.config;
    c.check_keys(&[
        "methods",
        "modes",
        "lambda_grid",
        "lambda_range",
        "n",
        "x_left",
        "x_right",
        "n_steps",
        "speed",
        "ic",
        "operator",
        "tv_rise_tol",
        "metric",
        "bisect",
        "expect_threshold",
    ])?;
    let preset = ctx.preset_or(&["motivating", "sweep1000"], "sweep1000")?;
    let mut spec: SweepSpec = if preset == "motivating" {
        presets::motivating()?
    } else {
        presets::sweep1000()?
    };
    let methods = Methods {
        extra: ctx.tableaux_from_files()?,
    };
    if let Some(e) = c.get("methods") {
        spec.tableaux = methods.list(e)?;
        spec.lambda_grid = default_lambda_grid(&spec.tableaux);
    }
    if let Some(e) = c.get("modes") {
        spec.modes = modes(e)?;
    }
    match (c.get("lambda_grid"), c.get("lambda_range")) {
        (Some(a), Some(b)) => {
            return Err(ConfigError::new(b.line.max(a.line), "lambda_grid and lambda_range are mutually exclusive").into())
        }
        (Some(e), None) => {
            spec.lambda_grid = e.parse_list()?;
            if spec.lambda_grid.is_empty() {
                return Err(e.err("lambda grid is empty").into());
            }
        }
        (None, Some(e)) => {
            let f: Vec<f64> = e
                .value
                .split(':')
                .map(|s| s.trim().parse::<f64>().map_err(|err| e.err(format!("{err} ({s:?})"))))
                .collect::<Result<_, _>>()?;
            let [start, stop, step] = f[..] else {
                return Err(e.err("expected start:stop:step").into());
            };
            if !(step > 0.0 && start > 0.0) {
                return Err(e.err("start and step must be positive").into());
            }
            spec.lambda_grid = lambda_range(start, stop, step);
            if spec.lambda_grid.is_empty() || stop < start {
                return Err(e.err("lambda grid is empty").into());
            }
        }
        (None, None) => {}
    }
    let d = Problem::domain(c, spec.grid.x_left(), spec.grid.x_right())?;
    let n = c.get("n").map(|e| e.parse::<usize>()).transpose()?.unwrap_or(spec.grid.n());
    spec.grid = Grid::new(d.x_left, d.x_right, n).map_err(|err| {
        let line = c.get("n").map_or(0, |e| e.line);
        ConfigError::new(line, err.to_string())
    })?;
    if let Some(e) = c.get("n_steps") {
        spec.n_steps = e.parse()?;
    }
    if let Some(e) = c.get("speed") {
        spec.speed = e.parse()?;
    }
    if let Some(e) = c.get("ic") {
        spec.ic = ic(e, ctx.seed, d.x_left, d.x_right)?;
    }
    if let Some(e) = c.get("operator") {
        spec.scheme = scheme(e, &e.value)?;
    }
    if let Some(e) = c.get("tv_rise_tol") {
        spec.tv_rise_tol = positive(e)?;
    }
    if let Some(e) = c.get("metric") {
        spec.metric = metric(e)?;
    }
    if let Some(e) = c.get("bisect") {
        spec.bisect = e.bool()?;
    }
    spec.validate().map_err(|err| ConfigError::new(0, err.to_string()))?;

    let result = tv_sweep(&spec)?;

    let cells = result.cells.iter().map(|cell| {
        vec![
            cell.method.clone(),
            cell.mode.name().to_string(),
            num(cell.lambda),
            num(cell.max_tv_rise),
            num(cell.log10_rise()),
        ]
    });
    ctx.write(
        "tv_sweep.csv",
        &csv_bytes(&["method", "mode", "lambda", "max_tv_rise", "log10_rise"], cells),
    )?;

    for t in &result.thresholds {
        let mut note = String::new();
        if t.at_lower_boundary {
            note += " [no passing lambda]";
        }
        if t.at_upper_boundary {
            note += " [passes whole grid]";
        }
        if !t.low_failures.is_empty() {
            note += &format!(" [{} failures below threshold]", t.low_failures.len());
        }
        if !t.inversions.is_empty() {
            note += &format!(" [{} passes above threshold]", t.inversions.len());
        }
        println!("{} {}: observed lambda {:.4}{note}", t.method, t.mode.name(), t.observed_lambda);
    }
    let rows = result.thresholds.iter().map(|t| {
        vec![
            t.method.clone(),
            t.mode.name().to_string(),
            num(t.observed_lambda),
            t.theoretical_lambda.map(num).unwrap_or_default(),
        ]
    });
    ctx.write(
        "thresholds.csv",
        &csv_bytes(&["method", "mode", "observed_lambda", "theoretical_lambda"], rows),
    )?;

    let mut ok = true;
    for e in c.all("expect_threshold") {
        let f = e.fields(4)?;
        let mode: DownwindMode = f[1].parse().map_err(|err| e.err(err))?;
        let lo: f64 = f[2].parse().map_err(|err| e.err(format!("{err} ({:?})", f[2])))?;
        let hi: f64 = f[3].parse().map_err(|err| e.err(format!("{err} ({:?})", f[3])))?;
        let t = result.threshold(f[0], mode).map_err(|err| e.err(err))?;
        ok &= check(
            (lo..=hi).contains(&t.observed_lambda),
            format!("threshold {} {}: {:.4} in [{lo}, {hi}]", f[0], f[1], t.observed_lambda),
        );
    }
    Ok(ok)
}

struct StudyRow<'a> {
    study: &'a str,
    method: &'a str,
    mode: DownwindMode,
    scheme: AdvectionScheme,
    table: &'a ConvergenceTable,
}

fn convergence_csv(rows: &[StudyRow<'_>]) -> Vec<u8> {
    let records = rows.iter().flat_map(|r| {
        r.table.rows.iter().map(move |row| {
            vec![
                r.study.to_string(),
                r.method.to_string(),
                r.mode.name().to_string(),
                r.scheme.name().to_string(),
                num(row.h),
                num(row.error),
                r.table.fitted_order.map(num).unwrap_or_default(),
                row.stalled.to_string(),
            ]
        })
    });
    csv_bytes(
        &["study", "method", "mode", "operator", "resolution_or_dt", "error", "fitted_order", "stalled"],
        records,
    )
}

fn summarize(rows: &[StudyRow<'_>]) {
    for r in rows {
        let order = r.table.fitted_order.map_or("n/a".to_string(), |o| format!("{o:.3}"));
        let plateau = r.table.plateau().map_or(String::new(), |p| format!(", stalls near {p:.3e}"));
        println!("{} {} {} {}: order {order}{plateau}", r.study, r.scheme.name(), r.method, r.mode.name());
    }
}

/// Finds the row named by the first three whitespace fields of `e`.
fn lookup<'a>(e: &Entry, f: &[&str], rows: &'a [StudyRow<'a>]) -> Result<&'a StudyRow<'a>, ConfigError> {
    let mode: DownwindMode = f[1].parse().map_err(|err| e.err(err))?;
    let op = scheme(e, f[2])?;
    rows.iter()
        .find(|r| r.method == f[0] && r.mode == mode && r.scheme == op)
        .ok_or_else(|| e.err(format!("no study for {} {} {}", f[0], f[1], f[2])))
}

fn range(e: &Entry, lo: &str, hi: &str) -> Result<(f64, f64), ConfigError> {
    let p = |s: &str| s.parse::<f64>().map_err(|err| e.err(format!("{err} ({s:?})")));
    Ok((p(lo)?, p(hi)?))
}

fn check_orders(c: &Config, rows: &[StudyRow<'_>]) -> Result<bool, ConfigError> {
    let mut ok = true;
    for e in c.all("expect_order") {
        let f = e.fields(5)?;
        let r = lookup(e, &f, rows)?;
        let (lo, hi) = range(e, f[3], f[4])?;
        let order = r.table.fitted_order.unwrap_or(f64::NAN);
        ok &= check(
            (lo..=hi).contains(&order),
            format!("order {} {} {}: {order:.3} in [{lo}, {hi}]", f[0], f[1], f[2]),
        );
    }
    Ok(ok)
}

/// `(scheme, method, mode)` combinations: the preset's, or the product of
/// whatever lists the config gives (missing lists fall back to the
/// preset's values).
fn combos(
    c: &Config,
    methods: &Methods,
    base: &[(AdvectionScheme, ShuOsherTableau, DownwindMode)],
) -> Result<Vec<(AdvectionScheme, ShuOsherTableau, DownwindMode)>, ConfigError> {
    if c.get("methods").is_none() && c.get("modes").is_none() && c.get("operators").is_none() {
        return Ok(base.to_vec());
    }
    fn uniq<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for x in items {
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out
    }
    let ops = match c.get("operators") {
        Some(e) => schemes(e)?,
        None => uniq(base.iter().map(|b| b.0)),
    };
    let tabs = match c.get("methods") {
        Some(e) => methods.list(e)?,
        None => uniq(base.iter().map(|b| b.1.clone())),
    };
    let ms = match c.get("modes") {
        Some(e) => modes(e)?,
        None => uniq(base.iter().map(|b| b.2)),
    };
    let mut out = Vec::new();
    for &s in &ops {
        for t in &tabs {
            for &m in &ms {
                out.push((s, t.clone(), m));
            }
        }
    }
    Ok(out)
}

pub fn corefine_cmd(ctx: &Context) -> CmdResult {
    let c = &ctx.config;
    c.check_keys(&keys(
        &PROBLEM_KEYS,
        &["methods", "modes", "operators", "grids", "lambda", "reference_n", "reference_tol", "norm", "expect_order"],
    ))?;
    ctx.preset_or(&["test1"], "test1")?;
    let base_specs = presets::test1()?;
    let mut template = base_specs[0].clone();
    let methods = Methods {
        extra: ctx.tableaux_from_files()?,
    };
    let base: Vec<_> = base_specs.iter().map(|s| (s.scheme, s.tableau.clone(), s.mode)).collect();
    let runs = combos(c, &methods, &base)?;
    apply_problem(ctx, &mut template.problem)?;
    if let Some(e) = c.get("grids") {
        template.grids = e.parse_list()?;
        if template.grids.is_empty() {
            return Err(e.err("grid list is empty").into());
        }
    }
    if let Some(e) = c.get("lambda") {
        template.lambda = positive(e)?;
    }
    if let Some(e) = c.get("norm") {
        template.norm = norm(e)?;
    }
    let ref_n = c.get("reference_n").map(|e| e.parse::<usize>()).transpose()?.unwrap_or(presets::TEST1_REFERENCE_N);
    let tol = c.get("reference_tol").map(tolerance).transpose()?.unwrap_or_else(presets::test1_reference_tol);
    let bad: Vec<String> = template
        .grids
        .iter()
        .filter(|&&n| n == 0 || !ref_n.is_multiple_of(n))
        .map(|n| n.to_string())
        .collect();
    if !bad.is_empty() {
        let line = c.get("grids").or(c.get("reference_n")).map_or(0, |e| e.line);
        return Err(ConfigError::new(
            line,
            format!("grids {} do not divide the reference grid of {ref_n} points", bad.join(", ")),
        )
        .into());
    }

    let reference = reference_solution(&template.problem, ref_n, &tol)?;
    let specs: Vec<CorefinementSpec> = runs
        .into_iter()
        .map(|(scheme, tableau, mode)| CorefinementSpec {
            scheme,
            tableau,
            mode,
            ..template.clone()
        })
        .collect();
    let tables: Vec<ConvergenceTable> = specs
        .iter()
        .map(|s| corefinement_study(s, &reference))
        .collect::<Result<_, _>>()?;
    let rows: Vec<StudyRow<'_>> = specs
        .iter()
        .zip(&tables)
        .map(|(s, t)| StudyRow {
            study: "corefine",
            method: s.tableau.name(),
            mode: s.mode,
            scheme: s.scheme,
            table: t,
        })
        .collect();
    ctx.write("convergence.csv", &convergence_csv(&rows))?;
    summarize(&rows);
    Ok(check_orders(c, &rows)?)
}

pub fn ode_converge_cmd(ctx: &Context) -> CmdResult {
    let c = &ctx.config;
    c.check_keys(&keys(
        &PROBLEM_KEYS,
        &[
            "methods",
            "modes",
            "operators",
            "n",
            "lambdas",
            "reference_tol",
            "norm",
            "expect_order",
            "expect_stall",
            "expect_no_stall",
        ],
    ))?;
    ctx.preset_or(&["test2"], "test2")?;
    let base_specs = presets::test2()?;
    let mut template = base_specs[0].clone();
    let methods = Methods {
        extra: ctx.tableaux_from_files()?,
    };
    let base: Vec<_> = base_specs.iter().map(|s| (s.scheme, s.tableau.clone(), s.mode)).collect();
    let runs = combos(c, &methods, &base)?;
    apply_problem(ctx, &mut template.problem)?;
    if let Some(e) = c.get("n") {
        template.n = e.parse()?;
    }
    if let Some(e) = c.get("lambdas") {
        template.lambdas = e.parse_list()?;
        if template.lambdas.is_empty() {
            return Err(e.err("lambda list is empty").into());
        }
        if template.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(e.err("lambdas must be positive").into());
        }
    }
    if let Some(e) = c.get("reference_tol") {
        template.reference_tol = tolerance(e)?;
    }
    if let Some(e) = c.get("norm") {
        template.norm = norm(e)?;
    }

    let specs: Vec<OdeConvergenceSpec> = runs
        .into_iter()
        .map(|(scheme, tableau, mode)| OdeConvergenceSpec {
            scheme,
            tableau,
            mode,
            ..template.clone()
        })
        .collect();
    let tables: Vec<ConvergenceTable> = specs.iter().map(ode_convergence_study).collect::<Result<_, _>>()?;
    let rows: Vec<StudyRow<'_>> = specs
        .iter()
        .zip(&tables)
        .map(|(s, t)| StudyRow {
            study: "ode",
            method: s.tableau.name(),
            mode: s.mode,
            scheme: s.scheme,
            table: t,
        })
        .collect();
    ctx.write("convergence.csv", &convergence_csv(&rows))?;
    summarize(&rows);

    let mut ok = check_orders(c, &rows)?;
    for e in c.all("expect_stall") {
        let f = e.fields(5)?;
        let r = lookup(e, &f, &rows)?;
        let (lo, hi) = range(e, f[3], f[4])?;
        let plateau = r.table.plateau();
        ok &= check(
            plateau.is_some_and(|p| (lo..=hi).contains(&p)),
            format!("stall {} {} {}: {plateau:?} in [{lo:e}, {hi:e}]", f[0], f[1], f[2]),
        );
    }
    for e in c.all("expect_no_stall") {
        let f = e.fields(3)?;
        let r = lookup(e, &f, &rows)?;
        ok &= check(!r.table.stalled(), format!("no stall {} {} {}", f[0], f[1], f[2]));
    }
    Ok(ok)
}

pub fn reference_cmd(ctx: &Context) -> CmdResult {
    let c = &ctx.config;
    c.check_keys(&keys(&PROBLEM_KEYS, &["n", "reference_tol"]))?;
    if let Some(p) = &ctx.preset {
        return Err(CliError::Usage(format!("preset {p:?} does not apply to reference")));
    }
    let mut problem = AdvectionBurgers::smooth_test();
    apply_problem(ctx, &mut problem)?;
    let n = c.get("n").map(|e| e.parse::<usize>()).transpose()?.unwrap_or(presets::TEST1_REFERENCE_N);
    let tol = c.get("reference_tol").map(tolerance).transpose()?.unwrap_or_else(presets::test1_reference_tol);
    let u = reference_solution(&problem, n, &tol)?;
    let rows = u.grid().points().zip(u.values()).map(|(x, v)| vec![num(x), num(*v)]);
    ctx.write("reference.csv", &csv_bytes(&["x", "u"], rows))?;
    println!("reference: {n} points at t = {}", problem.t_final);
    Ok(true)
}

fn report(t: &ShuOsherTableau) -> Result<bool, sspif::Error> {
    let check = t.to_butcher().verify_order(t.order())?;
    let c = t.ssp_coefficient()?;
    let pairs: Vec<String> = t
        .abscissa_pairs()
        .into_iter()
        .filter(|p| p.decreasing)
        .map(|p| format!("({},{})", p.i, p.j))
        .collect();
    println!(
        "{:<14} s={:<2} p={} C={:.4} order={} decreasing pairs: {}",
        t.name(),
        t.stages(),
        t.order(),
        c,
        if check.passed { "pass" } else { "FAIL" },
        if pairs.is_empty() { "none".to_string() } else { pairs.join(" ") }
    );
    Ok(check.passed)
}

pub fn verify_tableaux_cmd(ctx: &Context) -> CmdResult {
    let c = &ctx.config;
    c.check_keys(&["expect_coefficient"])?;
    if let Some(p) = &ctx.preset {
        return Err(CliError::Usage(format!("preset {p:?} does not apply to verify-tableaux")));
    }
    let mut ok = true;
    let mut all: Vec<ShuOsherTableau> = Vec::new();
    for name in REGISTRY {
        all.push(registry_get(name)?);
    }
    for path in &ctx.tableau_files {
        match load_tableau_file(path) {
            Ok(t) => all.push(t),
            Err(e) => {
                println!("{}: error: {e}", path.display());
                ok = false;
            }
        }
    }
    for t in &all {
        match report(t) {
            Ok(passed) => ok &= passed,
            Err(e) => {
                println!("{}: error: {e}", t.name());
                ok = false;
            }
        }
    }
    for e in c.all("expect_coefficient") {
        let f = e.fields(3)?;
        let (lo, hi) = range(e, f[1], f[2])?;
        let t = all
            .iter()
            .find(|t| t.name() == f[0])
            .ok_or_else(|| e.err(format!("unknown method {:?}", f[0])))?;
        let cval = t.ssp_coefficient()?;
        ok &= check((lo..=hi).contains(&cval), format!("coefficient {}: {cval:.4} in [{lo}, {hi}]", f[0]));
    }
    Ok(ok)
}

//! Exponential propagators `e^{τL}`.
//!
//! Two independent routes are provided: a dense scaling-and-squaring Padé
//! approximant that works for any square matrix, and a Fourier
//! diagonalization for circulant operators. [`ExpCache`] memoizes the
//! propagators a stepper needs, keyed by operator id and the bit pattern of
//! `τ`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::State;
use crate::linops::{LinearOperator, OperatorId, Structure};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Forward and inverse (unnormalized) FFT plans for length `n`, shared
/// process-wide.
pub(crate) fn fft_plans(n: usize) -> Plans {
    static PLANS: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let mut map = PLANS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// `out = Re(IFFT(multiplier · FFT(u)))`.
pub(crate) fn circulant_multiply(multiplier: &[Complex64], u: &[f64], out: &mut [f64]) {
    let n = u.len();
    let (fwd, inv) = fft_plans(n);
    let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (b, m) in buf.iter_mut().zip(multiplier) {
        *b *= m;
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    for (o, b) in out.iter_mut().zip(&buf) {
        *o = b.re * scale;
    }
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(U, V)` of the degree-`m` diagonal Padé approximant for `m ≤ 9`.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut odd = DMatrix::identity(n, n) * b[1];
    let mut even = DMatrix::identity(n, n) * b[0];
    let mut power = DMatrix::identity(n, n);
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        odd += &power * b[2 * k + 1];
        even += &power * b[2 * k];
    }
    (a * odd, even)
}

fn pade_13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &PADE_13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = a * inner_u;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant (degree 3, 5, 7, 9 or 13, chosen from the 1-norm).
pub fn expm_dense(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix exponential of a non-finite matrix"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);

    let low = [(THETA_3, &PADE_3[..]), (THETA_5, &PADE_5[..]), (THETA_7, &PADE_7[..]), (THETA_9, &PADE_9[..])];
    let (u, v, squarings) = match low.iter().find(|(theta, _)| norm <= *theta) {
        Some((_, coeffs)) => {
            let (u, v) = pade_low(m, coeffs);
            (u, v, 0)
        }
        None => {
            let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
            let scaled = m * 2f64.powi(-s);
            let (u, v) = pade_13(&scaled);
            (u, v, s)
        }
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::NumericalFailure("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// `e^{τL}u` for circulant `L` by Fourier diagonalization.
pub fn circulant_exp_apply(op: &LinearOperator, tau: f64, u: &State) -> Result<State> {
    let symbol = match (op.structure(), op.symbol()) {
        (Structure::Circulant, Some(symbol)) => symbol,
        _ => {
            return Err(Error::UnsupportedOperator(
                "Fourier exponential requires a circulant operator".into(),
            ))
        }
    };
    if *u.grid() != *op.grid() {
        return Err(Error::invalid("operator and state live on different grids"));
    }
    let spectrum = exp_spectrum(symbol, tau)?;
    let mut out = vec![0.0; u.len()];
    circulant_multiply(&spectrum, u.values(), &mut out);
    State::from_computed(*u.grid(), out, "circulant exponential")
}

fn exp_spectrum(symbol: &[Complex64], tau: f64) -> Result<Vec<Complex64>> {
    let spectrum: Vec<Complex64> = symbol.iter().map(|&z| (z * tau).exp()).collect();
    if spectrum.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NumericalFailure(format!(
            "exponential symbol overflowed for tau = {tau}"
        )));
    }
    Ok(spectrum)
}

#[derive(Debug, Clone)]
enum ExpRepr {
    Identity,
    Circulant(Vec<Complex64>),
    Dense(DMatrix<f64>),
}

/// A computed propagator `e^{τL}`.
#[derive(Debug, Clone)]
pub struct ExpOperator {
    tau: f64,
    source: OperatorId,
    n: usize,
    repr: ExpRepr,
}

impl ExpOperator {
    /// Computes `e^{τL}`: Fourier symbol for circulant operators, dense
    /// Padé otherwise. `τ = 0` and `L = 0` give the exact identity.
    pub fn compute(op: &LinearOperator, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::invalid(format!("exponential time {tau} is not finite")));
        }
        let repr = if tau == 0.0 || op.is_zero() {
            ExpRepr::Identity
        } else {
            match (op.structure(), op.symbol()) {
                (Structure::Circulant, Some(symbol)) => ExpRepr::Circulant(exp_spectrum(symbol, tau)?),
                _ => ExpRepr::Dense(expm_dense(&(op.dense() * tau))?),
            }
        };
        Ok(Self {
            tau,
            source: op.id(),
            n: op.grid().n(),
            repr,
        })
    }

    /// Dense Padé route regardless of structure.
    pub fn compute_dense(op: &LinearOperator, tau: f64) -> Result<Self> {
        Ok(Self {
            tau,
            source: op.id(),
            n: op.grid().n(),
            repr: ExpRepr::Dense(expm_dense(&(op.dense() * tau))?),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn source_id(&self) -> OperatorId {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, ExpRepr::Identity)
    }

    /// Dense matrix form.
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.repr {
            ExpRepr::Identity => DMatrix::identity(self.n, self.n),
            ExpRepr::Dense(m) => m.clone(),
            ExpRepr::Circulant(spectrum) => {
                let mut e0 = vec![0.0; self.n];
                e0[0] = 1.0;
                let mut col = vec![0.0; self.n];
                circulant_multiply(spectrum, &e0, &mut col);
                let n = self.n;
                DMatrix::from_fn(n, n, |j, l| col[(j + n - l) % n])
            }
        }
    }

    /// `out = E·u`.
    pub fn apply_slice(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.n, "operand length does not match propagator");
        match &self.repr {
            ExpRepr::Identity => out.copy_from_slice(u),
            ExpRepr::Circulant(spectrum) => circulant_multiply(spectrum, u, out),
            ExpRepr::Dense(m) => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = m.row(j).iter().zip(u).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

pub fn apply_exp(e: &ExpOperator, u: &State) -> Result<State> {
    if u.len() != e.dim() {
        return Err(Error::invalid(format!(
            "propagator of dimension {} applied to state of length {}",
            e.dim(),
            u.len()
        )));
    }
    let mut out = vec![0.0; u.len()];
    e.apply_slice(u.values(), &mut out);
    State::from_computed(*u.grid(), out, "exponential application")
}

/// Memoized propagators keyed by `(operator id, τ bits)`.
///
/// Reads proceed concurrently; a miss takes the write lock and computes
/// under it, so each key is computed exactly once.
#[derive(Debug, Default)]
pub struct ExpCache {
    entries: RwLock<HashMap<(OperatorId, u64), Arc<ExpOperator>>>,
    computations: AtomicUsize,
}

impl ExpCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_exp(&self, op: &LinearOperator, tau: f64) -> Result<Arc<ExpOperator>> {
        // −0.0 and 0.0 are the same propagator
        let key = (op.id(), if tau == 0.0 { 0 } else { tau.to_bits() });
        if let Some(e) = self.entries.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(Arc::clone(e));
        }
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if let Some(e) = entries.get(&key) {
            return Ok(Arc::clone(e));
        }
        let e = Arc::new(ExpOperator::compute(op, tau)?);
        self.computations.fetch_add(1, Ordering::Relaxed);
        entries.insert(key, Arc::clone(&e));
        Ok(e)
    }

    /// Number of exponentials computed so far.
    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::linops::{build_downwind1, build_spectral, build_upwind1, build_upwind2, downwind_of};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: Taylor series on `M/2^k` with `‖M‖/2^k ≤ 1/16`,
    /// summed until the term drops below 1e−20, then squared back.
    fn taylor_oracle(m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut k = 0;
        while norm / 2f64.powi(k) > 1.0 / 16.0 {
            k += 1;
        }
        let a = m / 2f64.powi(k);
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for j in 1..200 {
            term = &term * &a / j as f64;
            sum += &term;
            if term.amax() < 1e-20 {
                break;
            }
        }
        for _ in 0..k {
            sum = &sum * &sum;
        }
        sum
    }

    fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn random_state(rng: &mut ChaCha8Rng, g: Grid) -> State {
        State::new(g, (0..g.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn expm_zero_and_diagonal() {
        assert_eq!(expm_dense(&DMatrix::zeros(5, 5)).unwrap(), DMatrix::identity(5, 5));
        let d = [-3.0, -0.5, 0.0, 0.7, 2.5];
        let e = expm_dense(&DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d))).unwrap();
        for (i, di) in d.iter().enumerate() {
            assert!((e[(i, i)] - di.exp()).abs() <= 1e-14 * di.exp());
        }
        assert!(matches!(expm_dense(&DMatrix::zeros(2, 3)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn expm_random_against_taylor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for scale in [0.01, 0.2, 1.0, 4.0] {
            let m = DMatrix::from_fn(8, 8, |_, _| scale * rng.random_range(-1.0..1.0));
            let err = rel_frobenius(&expm_dense(&m).unwrap(), &taylor_oracle(&m));
            assert!(err <= 1e-11, "scale {scale}: {err}");
        }
    }

    #[test]
    fn expm_overflow_is_reported() {
        let m = DMatrix::from_diagonal_element(3, 3, 800.0);
        assert!(matches!(expm_dense(&m), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn circulant_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::new(0.0, 1.0, 48).unwrap();
        for op in [
            build_upwind1(g, 10.0).unwrap(),
            build_downwind1(g, 10.0).unwrap(),
            build_upwind2(g, 3.0).unwrap(),
            build_spectral(g, 2.0).unwrap(),
        ] {
            for tau in [0.3 * g.dx() / 10.0, 2.0 * g.dx(), -0.5 * g.dx()] {
                let u = random_state(&mut rng, g);
                let fast = circulant_exp_apply(&op, tau, &u).unwrap();
                let dense = expm_dense(&(op.dense() * tau)).unwrap() * nalgebra::DVector::from_column_slice(u.values());
                let scale = dense.amax().max(1.0);
                let diff = fast.values().iter().zip(dense.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
                assert!(diff <= 1e-10, "{:?} tau {tau}: {diff}", op.kind());
            }
        }
    }

    #[test]
    fn circulant_identity_and_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let op = build_upwind1(g, 10.0).unwrap();
        let u = random_state(&mut rng, g);
        let same = circulant_exp_apply(&op, 0.0, &u).unwrap();
        assert!(u.error_norm(&same, crate::ErrorNorm::LInf).unwrap() < 1e-15);
        let (t1, t2) = (0.7 * g.dx(), 1.9 * g.dx());
        let two = circulant_exp_apply(&op, t2, &circulant_exp_apply(&op, t1, &u).unwrap()).unwrap();
        let one = circulant_exp_apply(&op, t1 + t2, &u).unwrap();
        assert!(two.error_norm(&one, crate::ErrorNorm::LInf).unwrap() < 1e-10);
    }

    #[test]
    fn general_operator_rejected_by_fft_path() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let mut m = DMatrix::zeros(8, 8);
        m[(0, 0)] = -1.0;
        m[(0, 1)] = 1.0;
        let op = LinearOperator::custom(g, m).unwrap();
        let u = State::zeros(g);
        assert!(matches!(circulant_exp_apply(&op, 0.1, &u), Err(Error::UnsupportedOperator(_))));
        // the cache falls back to the dense route
        let e = ExpCache::new().get_exp(&op, 0.1).unwrap();
        assert!((e.matrix()[(0, 0)] - (-0.1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn cache_memoizes() {
        let g = Grid::new(0.0, 1.0, 32).unwrap();
        let op = build_upwind1(g, 10.0).unwrap();
        let cache = ExpCache::new();
        let a = cache.get_exp(&op, 0.01).unwrap();
        let b = cache.get_exp(&op, 0.01).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.computations(), 1);
        cache.get_exp(&op, 0.02).unwrap();
        assert_eq!(cache.computations(), 2);
        let id = cache.get_exp(&op, 0.0).unwrap();
        assert!(id.is_identity());
        assert_eq!((id.matrix() - DMatrix::identity(32, 32)).amax(), 0.0);
        let other = build_upwind1(g, 10.0).unwrap();
        cache.get_exp(&other, 0.01).unwrap();
        assert_eq!(cache.len(), 4);
    }

    #[test]
    fn apply_exp_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Grid::new(0.0, 1.0, 40).unwrap();
        let op = build_upwind1(g, 10.0).unwrap();
        let u = random_state(&mut rng, g);

        let id = ExpOperator::compute(&op, 0.0).unwrap();
        assert_eq!(apply_exp(&id, &u).unwrap(), u);

        let e = ExpOperator::compute_dense(&op, 3.0 * g.dx()).unwrap();
        let c = State::constant(g, 0.75).unwrap();
        let ec = apply_exp(&e, &c).unwrap();
        assert!(ec.values().iter().all(|v| (v - 0.75).abs() < 1e-12));

        let fast = circulant_exp_apply(&op, 3.0 * g.dx(), &u).unwrap();
        let dense = apply_exp(&e, &u).unwrap();
        assert!(fast.error_norm(&dense, crate::ErrorNorm::LInf).unwrap() < 1e-10);

        let short = State::zeros(Grid::new(0.0, 1.0, 20).unwrap());
        assert!(apply_exp(&e, &short).is_err());
    }

    #[test]
    fn constants_preserved_by_all_propagators() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let c = State::constant(g, -1.25).unwrap();
        for op in [build_upwind1(g, 1.0).unwrap(), build_upwind2(g, 1.0).unwrap(), build_spectral(g, 1.0).unwrap()] {
            let lt = downwind_of(&op).unwrap();
            for (o, tau) in [(&op, 0.4), (&lt, -0.4)] {
                let out = apply_exp(&ExpOperator::compute(o, tau).unwrap(), &c).unwrap();
                assert!(out.values().iter().all(|v| (v + 1.25).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn inverse_pair() {
        let g = Grid::new(0.0, 1.0, 128).unwrap();
        let op = build_upwind2(g, 10.0).unwrap();
        let tau = 0.5 * g.dx() / 10.0;
        let fwd = ExpOperator::compute_dense(&op, tau).unwrap().matrix();
        let back = ExpOperator::compute_dense(&op, -tau).unwrap().matrix();
        assert!((fwd * back - DMatrix::identity(128, 128)).amax() < 1e-9);
    }
}

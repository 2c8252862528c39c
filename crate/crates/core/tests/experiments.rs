use sspif::experiments::{corefinement_study, presets, tv_sweep, SweepResult};
use sspif::reference::{reference_solution, restrict, AdvectionBurgers, ToleranceSpec};
use sspif::{DownwindMode, Error, ErrorNorm, Grid};

#[test]
fn reference_self_convergence() {
    let p = AdvectionBurgers::smooth_test();
    let tol = ToleranceSpec::new(1e-12, 1e-12);
    let coarse = reference_solution(&p, 2048, &tol).unwrap();
    let fine = reference_solution(&p, 4096, &tol).unwrap();
    let diff = restrict(&fine, coarse.grid())
        .unwrap()
        .error_norm(&coarse, ErrorNorm::L2Weighted)
        .unwrap();
    assert!(diff <= 1e-6, "{diff:e}");
}

fn small_sweep() -> SweepResult {
    let mut spec = presets::motivating().unwrap();
    spec.grid = Grid::new(0.0, 1.0, 200).unwrap();
    spec.lambda_grid = vec![0.2, 0.4, 0.6, 0.8, 1.0];
    tv_sweep(&spec).unwrap()
}

#[test]
fn sweep_is_bit_identical_across_runs() {
    let a = small_sweep();
    let b = small_sweep();
    assert_eq!(a.cells.len(), b.cells.len());
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!((&x.method, x.mode, x.lambda.to_bits()), (&y.method, y.mode, y.lambda.to_bits()));
        assert_eq!(x.max_tv_rise.to_bits(), y.max_tv_rise.to_bits());
    }
    for (x, y) in a.thresholds.iter().zip(&b.thresholds) {
        assert_eq!(x.observed_lambda.to_bits(), y.observed_lambda.to_bits());
        assert_eq!((&x.low_failures, &x.inversions), (&y.low_failures, &y.inversions));
    }
}

#[test]
fn thresholds_reported_for_every_pair() {
    let r = small_sweep();
    for mode in [DownwindMode::Never, DownwindMode::Rule] {
        let t = r.threshold("eSSPRK(3,3)", mode).unwrap();
        assert!(t.observed_lambda >= 0.0 && t.observed_lambda <= 1.0);
    }
    assert!(matches!(r.threshold("eSSPRK(3,3)", DownwindMode::Strict), Err(Error::NotFound(_))));
}

#[test]
fn corefinement_rejects_non_nested_grids() {
    let mut spec = presets::test1().unwrap().remove(0);
    spec.grids = vec![128, 300];
    let p = &spec.problem;
    let reference = p.ic.sample(&Grid::new(p.x_left, p.x_right, 2048).unwrap()).unwrap();
    let err = corefinement_study(&spec, &reference).unwrap_err().to_string();
    assert!(err.contains("300") && err.contains("2048"), "{err}");
}

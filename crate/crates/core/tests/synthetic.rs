use nalgebra::DMatrix;
use svarlingam::diagnostics::jarque_bera;
use svarlingam::synthetic::{check_acyclic, generate_lingam, generate_svar, preset, GroundTruthSpec, ShockDist, SimulationTruth};
use svarlingam::Error;

fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn cov(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c.transpose() * &c / (n - 1.0)
}

#[test]
fn shocks_are_standardised() {
    for (dist, tol) in [
        (ShockDist::Gaussian, 0.05),
        (ShockDist::Uniform, 0.05),
        (ShockDist::Laplace, 0.05),
        (ShockDist::StudentT { df: 8.0 }, 0.1),
    ] {
        let (_, e) = generate_lingam(&DMatrix::zeros(3, 3), dist, 20_000, 1).unwrap();
        let c = cov(&e);
        assert!((c - DMatrix::identity(3, 3)).amax() < tol, "{dist:?}");
        assert!(e.row_mean().amax() < 0.05);
    }
}

#[test]
fn lingam_covariance_matches_the_mixing_matrix() {
    let b = m(3, &[0.0, 0.0, -0.08, 0.85, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let (x, _) = generate_lingam(&b, ShockDist::Uniform, 50_000, 2).unwrap();
    let a = (DMatrix::identity(3, 3) - &b).try_inverse().unwrap();
    let expected = &a * a.transpose();
    let c = cov(&x);
    for i in 0..3 {
        for j in 0..3 {
            assert!((c[(i, j)] - expected[(i, j)]).abs() <= 0.05 * expected[(i, i)].max(expected[(j, j)]), "{c}");
        }
    }
}

#[test]
fn lag_one_autocorrelation_matches_the_generator() {
    let spec = GroundTruthSpec::new(vec![DMatrix::zeros(2, 2), DMatrix::identity(2, 2) * 0.9], ShockDist::Laplace, 5000, 3).unwrap();
    let (panel, _) = generate_svar(&spec).unwrap();
    for j in 0..2 {
        let x = panel.column(j);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        assert!((num / den - 0.9).abs() < 0.05, "{}", num / den);
    }
}

#[test]
fn regression_slope_recovers_the_edge() {
    let spec = preset("lingam3", ShockDist::Laplace, 5000, 4).unwrap();
    let (panel, _) = generate_svar(&spec).unwrap();
    let (x, y) = (panel.column(0), panel.column(1));
    let (mx, my) = (x.iter().sum::<f64>() / 5000.0, y.iter().sum::<f64>() / 5000.0);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    assert!((sxy / sxx - 0.85).abs() < 0.03, "{}", sxy / sxx);
}

#[test]
fn shock_shape_shows_in_normality_tests() {
    let reject = |dist: ShockDist, seeds: std::ops::Range<u64>| {
        seeds
            .filter(|&s| {
                let (_, e) = generate_lingam(&DMatrix::zeros(1, 1), dist, 2000, s).unwrap();
                let v: Vec<f64> = e.column(0).iter().copied().collect();
                jarque_bera(&v).unwrap().p_value < 0.05
            })
            .count()
    };
    assert_eq!(reject(ShockDist::Laplace, 0..50), 50);
    assert_eq!(reject(ShockDist::Uniform, 0..50), 50);
    let gaussian = reject(ShockDist::Gaussian, 0..400) as f64 / 400.0;
    assert!((0.02..=0.08).contains(&gaussian), "{gaussian}");
}

#[test]
fn same_seed_same_draws() {
    let spec = preset("chain", ShockDist::Laplace, 300, 5).unwrap();
    let (a, ea) = generate_svar(&spec).unwrap();
    let (b, eb) = generate_svar(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(ea, eb);
    let other = GroundTruthSpec { seed: 6, ..spec };
    assert_ne!(generate_svar(&other).unwrap().0, a);
}

#[test]
fn static_svar_equals_lingam_draws() {
    let spec = preset("lingam3", ShockDist::Uniform, 400, 7).unwrap();
    let (panel, shocks) = generate_svar(&spec).unwrap();
    let (x, e) = generate_lingam(&spec.b[0], ShockDist::Uniform, 400, 7).unwrap();
    assert_eq!(shocks, e);
    assert!((&panel.values - x).amax() < 1e-12);
}

#[test]
fn invalid_generators_are_rejected() {
    assert!(check_acyclic(&m(2, &[0.0, 0.5, 0.5, 0.0])).is_err());
    assert!(check_acyclic(&m(2, &[0.1, 0.0, 0.0, 0.0])).is_err());
    assert!(generate_lingam(&m(2, &[0.0, 0.5, 0.5, 0.0]), ShockDist::Laplace, 10, 1).is_err());
    let explosive = GroundTruthSpec::new(vec![DMatrix::zeros(2, 2), DMatrix::identity(2, 2) * 1.01], ShockDist::Laplace, 10, 1);
    assert!(matches!(explosive, Err(Error::NonStationary(_))));
    assert!(GroundTruthSpec::new(vec![DMatrix::zeros(2, 2)], ShockDist::StudentT { df: 2.0 }, 10, 1).is_err());
    assert!(preset("nope", ShockDist::Laplace, 10, 1).is_err());
}

#[test]
fn truth_records_order_and_reduced_form() {
    let spec = preset("chain", ShockDist::Laplace, 100, 1).unwrap();
    let truth = SimulationTruth::new(&spec).unwrap();
    assert_eq!(truth.causal_order, vec![0, 1, 2]);
    let expected = m(3, &[0.9, 0.0, 0.0, 0.9, 0.9, 0.0, 0.9, 0.9, 0.9]);
    assert!((&truth.reduced_form[0] - expected).amax() < 1e-12);
    let json = serde_json::to_string(&truth).unwrap();
    assert_eq!(serde_json::from_str::<SimulationTruth>(&json).unwrap(), truth);
}

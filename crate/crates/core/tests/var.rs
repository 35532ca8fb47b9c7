use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use svarlingam::diagnostics::{diagnose, jarque_bera, ljung_box, shapiro_francia, shapiro_wilk};
use svarlingam::synthetic::{ar1, generate_svar, GroundTruthSpec, ShockDist};
use svarlingam::var::{fit_var, select_var_lag_sic};
use svarlingam::{Error, Panel};

fn panel_of(values: DMatrix<f64>) -> Panel {
    let names = (1..=values.ncols()).map(|i| format!("y{i}")).collect();
    Panel::with_daily_index(names, NaiveDate::from_ymd_opt(2017, 1, 1).unwrap(), values).unwrap()
}

fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn simulate(b: Vec<DMatrix<f64>>, dist: ShockDist, t: usize, seed: u64) -> Panel {
    generate_svar(&GroundTruthSpec::new(b, dist, t, seed).unwrap()).unwrap().0
}

fn noise(t: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(t, n, |_, _| StandardNormal.sample(&mut rng))
}

fn laplace(t: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t).map(|_| ShockDist::Laplace.sample(&mut rng)).collect()
}

/// Coefficients from the normal equations (X'X)β = X'y solved by LU, one column per equation.
fn normal_equations(y: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let (t, n) = y.shape();
    let rows = t - p;
    let x = DMatrix::from_fn(rows, 1 + n * p, |r, c| {
        if c == 0 {
            1.0
        } else {
            let h = (c - 1) / n + 1;
            y[(r + p - h, (c - 1) % n)]
        }
    });
    let target = y.rows(p, rows).clone_owned();
    let xtx = x.transpose() * &x;
    xtx.lu().solve(&(x.transpose() * target)).unwrap()
}

#[test]
fn bivariate_var1_matches_truth_and_normal_equations() {
    let pi = m(2, &[0.5, 0.2, -0.1, 0.4]);
    let p = simulate(vec![DMatrix::zeros(2, 2), pi.clone()], ShockDist::Gaussian, 5000, 11);
    let v = fit_var(&p, 1).unwrap();
    assert!((&v.pi[0] - &pi).amax() < 0.03, "{}", v.pi[0]);
    let beta = normal_equations(&p.values, 1);
    for i in 0..2 {
        assert!((v.gamma[i] - beta[(0, i)]).abs() < 1e-10);
        for j in 0..2 {
            assert!((v.pi[0][(i, j)] - beta[(1 + j, i)]).abs() < 1e-10);
        }
    }
}

#[test]
fn var3_matches_normal_equations() {
    let p = panel_of(noise(300, 3, 5));
    let v = fit_var(&p, 3).unwrap();
    let beta = normal_equations(&p.values, 3);
    for h in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                assert!((v.pi[h][(i, j)] - beta[(1 + h * 3 + j, i)]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn white_noise_has_small_coefficients() {
    let v = fit_var(&panel_of(noise(5000, 3, 6)), 2).unwrap();
    assert!(v.pi.iter().all(|pi| pi.amax() < 0.05));
}

#[test]
fn sic_finds_lag_three_and_one() {
    let b = vec![DMatrix::zeros(2, 2), DMatrix::identity(2, 2) * 0.3, DMatrix::zeros(2, 2), DMatrix::identity(2, 2) * 0.4];
    let hits3 = (0..20u64)
        .into_par_iter()
        .filter(|&s| select_var_lag_sic(&simulate(b.clone(), ShockDist::Gaussian, 1000, 40 + s), 8).unwrap() == 3)
        .count();
    let hits1 = (0..20u64)
        .into_par_iter()
        .filter(|&s| select_var_lag_sic(&panel_of(noise(1000, 2, 60 + s)), 8).unwrap() == 1)
        .count();
    assert!(hits3 >= 18, "{hits3}/20");
    assert!(hits1 >= 18, "{hits1}/20");
}

#[test]
fn normality_tests_have_size_and_power() {
    let runs = 400u64;
    let size = (0..runs)
        .filter(|&s| {
            let x: Vec<f64> = noise(500, 1, 1000 + s).column(0).iter().copied().collect();
            jarque_bera(&x).unwrap().p_value < 0.05
        })
        .count() as f64
        / runs as f64;
    assert!((0.02..=0.08).contains(&size), "JB size {size}");
    let mut power = [0usize; 3];
    for s in 0..100u64 {
        let x = laplace(500, 2000 + s);
        power[0] += (jarque_bera(&x).unwrap().p_value < 0.05) as usize;
        power[1] += (shapiro_wilk(&x).unwrap().p_value < 0.05) as usize;
        power[2] += (shapiro_francia(&x).unwrap().p_value < 0.05) as usize;
    }
    assert!(power.iter().all(|&k| k >= 95), "{power:?}");
}

#[test]
fn ljung_box_has_size_and_power() {
    let runs = 400u64;
    let size = (0..runs).filter(|&s| ljung_box(&ar1(500, 0.0, 3000 + s), 10, 0).unwrap().p_value < 0.05).count() as f64
        / runs as f64;
    assert!((0.02..=0.08).contains(&size), "LB size {size}");
    let power = (0..100u64).filter(|&s| ljung_box(&ar1(500, 0.3, 4000 + s), 10, 0).unwrap().p_value < 0.05).count();
    assert!(power >= 95, "{power}");
}

#[test]
fn constant_series_is_degenerate() {
    let x = vec![1.5; 100];
    assert!(matches!(jarque_bera(&x), Err(Error::Degenerate(_))));
    assert!(matches!(ljung_box(&x, 10, 0), Err(Error::Degenerate(_))));
    assert!(matches!(shapiro_wilk(&x), Err(Error::Degenerate(_))));
}

#[test]
fn too_short_panels_are_rejected() {
    assert!(matches!(fit_var(&panel_of(noise(8, 3, 1)), 2), Err(Error::InsufficientData(_))));
    assert!(fit_var(&panel_of(noise(100, 3, 1)), 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_invariants(seed in 0u64..10_000, p in 1usize..4) {
        let y = noise(200, 3, seed);
        let v = fit_var(&panel_of(y.clone()), p).unwrap();
        let t = v.nobs();
        prop_assert_eq!(t, 200 - p);
        // Residuals sum to zero and are orthogonal to each lagged regressor.
        for i in 0..3 {
            prop_assert!(v.residuals.column(i).sum().abs() < 1e-9);
            for h in 1..=p {
                for j in 0..3 {
                    let dot: f64 = (0..t).map(|r| v.residuals[(r, i)] * y[(r + p - h, j)]).sum();
                    prop_assert!(dot.abs() < 1e-8);
                }
            }
        }
        let sigma = v.residuals.transpose() * &v.residuals / t as f64;
        prop_assert!((&sigma - &v.sigma).amax() < 1e-12);
        let recon = v.fitted(&y) + &v.residuals;
        prop_assert!((recon - y.rows(p, t)).amax() < 1e-10);
        let diag = diagnose(&v.names, &v.residuals, 10).unwrap();
        for c in &diag.columns {
            for q in [Some(c.jarque_bera_p), Some(c.ljung_box_p), c.shapiro_wilk_p, c.shapiro_francia_p].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&q));
            }
        }
    }

    #[test]
    fn rescaling_and_shifting_are_equivariant(seed in 0u64..10_000, s in prop::array::uniform3(0.1f64..10.0), c in prop::array::uniform3(-50.0f64..50.0)) {
        let y = noise(200, 3, seed);
        let d = DVector::from_row_slice(&s);
        let shift = DVector::from_row_slice(&c);
        let z = DMatrix::from_fn(200, 3, |r, j| y[(r, j)] * s[j] + c[j]);
        let a = fit_var(&panel_of(y), 2).unwrap();
        let b = fit_var(&panel_of(z), 2).unwrap();
        let dm = DMatrix::from_diagonal(&d);
        let dinv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
        let mut sum_pi = DMatrix::zeros(3, 3);
        for h in 0..2 {
            let expected = &dm * &a.pi[h] * &dinv;
            prop_assert!((&b.pi[h] - &expected).amax() < 1e-8);
            sum_pi += &b.pi[h];
        }
        // γ_z = Dγ + (I − ΣΠ_z) c.
        let expected_gamma = &dm * &a.gamma + (DMatrix::identity(3, 3) - sum_pi) * &shift;
        prop_assert!((&b.gamma - expected_gamma).amax() < 1e-7);
        let expected_resid = &a.residuals * &dm;
        prop_assert!((&b.residuals - expected_resid).amax() < 1e-8);
    }
}

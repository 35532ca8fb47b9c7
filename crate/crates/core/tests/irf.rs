use chrono::NaiveDate;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rayon::prelude::*;
use svarlingam::bootstrap::BootstrapConfig;
use svarlingam::irf::{compare_subperiods, irf_bootstrap_bands, ma_coefficients, structural_irf, structural_irf_scaled, IrfConfig, IrfResult, ShockScaling};
use svarlingam::svar::fit_svar_with_order;
use svarlingam::synthetic::{generate_svar, preset, GroundTruthSpec, ShockDist};
use svarlingam::{fit_svar_lingam, Error, Panel, SvarConfig};

fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn simulate(b: Vec<DMatrix<f64>>, t: usize, seed: u64) -> Panel {
    generate_svar(&GroundTruthSpec::new(b, ShockDist::Laplace, t, seed).unwrap()).unwrap().0
}

fn stable_pair() -> Vec<DMatrix<f64>> {
    vec![m(2, &[0.0, 0.0, 0.6, 0.0]), m(2, &[0.5, 0.1, 0.2, 0.4])]
}

/// Unit impulse in reduced-form shock j fed through y_t = Σ Π_k y_{t−k}.
fn impulse_simulation(pi: &[DMatrix<f64>], j: usize, horizon: usize) -> Vec<nalgebra::DVector<f64>> {
    let n = pi[0].nrows();
    let mut ys: Vec<nalgebra::DVector<f64>> = Vec::new();
    for h in 0..=horizon {
        let mut y = nalgebra::DVector::zeros(n);
        if h == 0 {
            y[j] = 1.0;
        }
        for (k, p) in pi.iter().enumerate() {
            if h > k {
                y += p * &ys[h - k - 1];
            }
        }
        ys.push(y);
    }
    ys
}

#[test]
fn ma_coefficients_match_impulse_simulation() {
    let pi = vec![m(3, &[0.4, 0.1, 0.0, -0.2, 0.3, 0.1, 0.05, 0.0, 0.2]), m(3, &[0.1, 0.0, 0.0, 0.0, -0.1, 0.05, 0.1, 0.1, 0.1])];
    let phi = ma_coefficients(&pi, 10);
    assert_eq!(phi.len(), 11);
    for j in 0..3 {
        let sim = impulse_simulation(&pi, j, 10);
        for h in 0..=10 {
            assert!((phi[h].column(j) - &sim[h]).amax() < 1e-12);
        }
    }
}

#[test]
fn known_structures_on_impact() {
    let panel = simulate(stable_pair(), 300, 1);
    let mut model = fit_svar_with_order(&panel, 1, &[0, 1], &SvarConfig::default()).unwrap();
    model.b[0] = m(2, &[0.0, 1.0, 0.0, 0.0]);
    model.var.pi[0] = DMatrix::identity(2, 2) * 0.9;
    let irf = structural_irf(&model, 5).unwrap();
    assert_eq!(irf.theta[0], m(2, &[1.0, 1.0, 0.0, 1.0]));

    let chain = generate_svar(&preset("chain", ShockDist::Laplace, 300, 2).unwrap()).unwrap().0;
    let mut model = fit_svar_with_order(&chain, 1, &[0, 1, 2], &SvarConfig::default()).unwrap();
    model.b[0] = m(3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let irf = structural_irf(&model, 1).unwrap();
    assert_eq!(irf.theta[0].column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0]);
    let direct = (DMatrix::identity(3, 3) - &model.b[0]).try_inverse().unwrap();
    assert!((&irf.theta[0] - direct).amax() < 1e-12);
}

#[test]
fn white_noise_model_responds_only_on_impact() {
    let panel = simulate(stable_pair(), 300, 3);
    let mut model = fit_svar_with_order(&panel, 1, &[0, 1], &SvarConfig::default()).unwrap();
    model.b[0] = DMatrix::zeros(2, 2);
    model.var.pi[0] = DMatrix::zeros(2, 2);
    let irf = structural_irf(&model, 4).unwrap();
    assert_eq!(irf.theta[0], DMatrix::identity(2, 2));
    assert!(irf.theta[1..].iter().all(|t| t.amax() == 0.0));
}

#[test]
fn stable_models_decay() {
    let panel = simulate(stable_pair(), 2000, 4);
    let model = fit_svar_lingam(&panel, 1, &SvarConfig::default()).unwrap();
    assert!(model.var.spectral_radius() < 0.9);
    let irf = structural_irf(&model, 200).unwrap();
    assert!(irf.theta[200].amax() < 1e-3);
}

fn bands(seed: u64) -> (IrfResult, IrfResult) {
    let panel = simulate(stable_pair(), 500, 5);
    let model = fit_svar_with_order(&panel, 1, &[0, 1], &SvarConfig::default()).unwrap();
    let cfg = BootstrapConfig::new(200, seed);
    let a = irf_bootstrap_bands(&model, &panel, 10, 0.95, &cfg, ShockScaling::Unit).unwrap();
    let b = irf_bootstrap_bands(&model, &panel, 10, 0.95, &cfg, ShockScaling::Unit).unwrap();
    (a, b)
}

#[test]
fn bands_contain_the_point_and_are_deterministic() {
    let (a, b) = bands(9);
    assert_eq!(a, b);
    let bd = a.bands.as_ref().unwrap();
    assert_eq!(a.level, 0.95);
    for h in 0..=10 {
        for i in 0..2 {
            for j in 0..2 {
                let pt = a.theta[h][(i, j)];
                assert!(bd.lower[h][(i, j)] <= pt && pt <= bd.upper[h][(i, j)]);
                assert!(bd.std_err[h][(i, j)] >= 0.0);
            }
        }
    }
    // Impact responses above the diagonal are zero in every replicate.
    assert_eq!(bd.upper[0][(0, 1)], 0.0);
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 11 * 4);
    assert!(text.starts_with("horizon,shock,response,point,lower,upper\n0,y1,y1,1,"));
}

#[test]
fn band_level_is_validated() {
    let panel = simulate(stable_pair(), 300, 6);
    let model = fit_svar_with_order(&panel, 1, &[0, 1], &SvarConfig::default()).unwrap();
    for level in [0.5, 1.0, 0.3] {
        let r = irf_bootstrap_bands(&model, &panel, 5, level, &BootstrapConfig::new(100, 1), ShockScaling::Unit);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}

#[test]
fn split_outside_the_sample_names_the_empty_side() {
    let panel = simulate(stable_pair(), 300, 7);
    let before = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let after = NaiveDate::from_ymd_opt(2100, 1, 1).unwrap();
    match compare_subperiods(&panel, before, 1, 5, &IrfConfig::default()) {
        Err(Error::InsufficientData(msg)) => assert!(msg.starts_with("first"), "{msg}"),
        other => panic!("{other:?}"),
    }
    match compare_subperiods(&panel, after, 1, 5, &IrfConfig::default()) {
        Err(Error::InsufficientData(msg)) => assert!(msg.starts_with("second"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

/// Cells where the subperiod point estimates differ by more than twice the
/// pooled bootstrap standard error sqrt(se₁² + se₂²).
fn disagreeing_cells(first: &IrfResult, second: &IrfResult) -> (usize, usize) {
    let (b1, b2) = (first.bands.as_ref().unwrap(), second.bands.as_ref().unwrap());
    let mut bad = 0;
    let mut total = 0;
    for h in 0..first.theta.len() {
        for (k, (a, b)) in first.theta[h].iter().zip(second.theta[h].iter()).enumerate() {
            let se = (b1.std_err[h][k].powi(2) + b2.std_err[h][k].powi(2)).sqrt();
            total += 1;
            if (a - b).abs() > 2.0 * se {
                bad += 1;
            }
        }
    }
    (bad, total)
}

#[test]
fn subperiods_of_one_generator_agree() {
    let cfg = IrfConfig {
        bootstrap: Some(BootstrapConfig::new(100, 0)),
        level: 0.95,
        ..IrfConfig::default()
    };
    let results: Vec<(usize, usize)> = (0..40u64)
        .into_par_iter()
        .map(|s| {
            let panel = simulate(stable_pair(), 1000, 300 + s);
            let split = panel.dates[499];
            let mut cfg = cfg;
            cfg.bootstrap.as_mut().unwrap().seed = s;
            let (whole, first, second) = compare_subperiods(&panel, split, 1, 10, &cfg).unwrap();
            assert_eq!(first.names, second.names);
            assert_eq!(whole.theta.len(), 11);
            disagreeing_cells(&first, &second)
        })
        .collect();
    let total: usize = results.iter().map(|r| r.1).sum();
    let bad: usize = results.iter().map(|r| r.0).sum();
    let all_agree = results.iter().filter(|r| r.0 == 0).count();
    // A seed agrees when at least 90% of its cells lie within two pooled standard errors.
    let seeds_agree = results.iter().filter(|r| r.0 as f64 <= 0.1 * r.1 as f64).count();
    let cell_rate = 1.0 - bad as f64 / total as f64;
    eprintln!("homogeneity: cell agreement {cell_rate:.3}, seeds agreeing {seeds_agree}/40, every cell {all_agree}/40");
    assert!(cell_rate >= 0.95, "{cell_rate}");
    assert!(seeds_agree >= 36, "{seeds_agree}/40");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn irf_identities(seed in 0u64..10_000) {
        let panel = simulate(stable_pair(), 300, seed);
        let model = fit_svar_lingam(&panel, 2, &SvarConfig::default()).unwrap();
        let irf = structural_irf(&model, 8).unwrap();
        let direct = (DMatrix::identity(2, 2) - model.b0()).try_inverse().unwrap();
        prop_assert!((&irf.theta[0] - &direct).amax() < 1e-12);
        let phi = ma_coefficients(&model.var.pi, 8);
        for h in 0..=8 {
            prop_assert!((&irf.theta[h] - &phi[h] * &direct).amax() < 1e-12);
        }
        // Zero B₀ turns the structural IRF into the reduced-form MA.
        let mut flat = model.clone();
        flat.b[0] = DMatrix::zeros(2, 2);
        let irf0 = structural_irf(&flat, 8).unwrap();
        for h in 0..=8 {
            prop_assert!((&irf0.theta[h] - &phi[h]).amax() < 1e-12);
        }
        // Sd-sized shocks scale each column by that shock's standard deviation.
        let sd = structural_irf_scaled(&model, 8, ShockScaling::StdDev).unwrap();
        let n_obs = model.shocks.nrows() as f64;
        for j in 0..2 {
            let col = model.shocks.column(j);
            let mean = col.sum() / n_obs;
            let s = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_obs).sqrt();
            for h in 0..=8 {
                prop_assert!((sd.theta[h].column(j) - irf.theta[h].column(j) * s).amax() < 1e-10);
            }
        }
    }
}

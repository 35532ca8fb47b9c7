use nalgebra::DMatrix;
use proptest::prelude::*;
use rayon::prelude::*;
use svarlingam::bootstrap::{bootstrap_significance, BootstrapConfig};
use svarlingam::graph::{export_dot, to_causal_graph};
use svarlingam::ica::{mutual_information_estimate, IcaConfig};
use svarlingam::svar::{fit_svar_with_order, reduced_to_structural, structural_to_reduced};
use svarlingam::synthetic::{generate_svar, preset, GroundTruthSpec, ShockDist};
use svarlingam::{fit_svar_lingam, Error, Panel, SvarConfig, SvarLingamModel};

fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn simulate(name: &str, dist: ShockDist, t: usize, seed: u64) -> Panel {
    generate_svar(&preset(name, dist, t, seed).unwrap()).unwrap().0
}

fn cfg(seed: u64) -> SvarConfig {
    SvarConfig { ica: IcaConfig { seed, ..IcaConfig::default() }, ..SvarConfig::default() }
}

fn off_target(b: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (b - truth).amax()
}

#[test]
fn bivariate_system_is_recovered() {
    let panel = simulate("bivariate", ShockDist::Uniform, 5000, 1);
    let model = fit_svar_lingam(&panel, 1, &cfg(1)).unwrap();
    assert_eq!(model.order, vec![1, 0]);
    assert!(off_target(model.b0(), &m(2, &[0.0, 1.0, 0.0, 0.0])) < 0.05, "{}", model.b0());
    assert!(off_target(&model.b[1], &(DMatrix::identity(2, 2) * 0.9)) < 0.05, "{}", model.b[1]);
}

#[test]
fn chain_is_recovered_and_the_var_shows_the_spurious_lag() {
    let panel = simulate("chain", ShockDist::Laplace, 5000, 2);
    let model = fit_svar_lingam(&panel, 1, &cfg(2)).unwrap();
    assert_eq!(model.order, vec![0, 1, 2]);
    let truth = m(3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    assert!(off_target(model.b0(), &truth) < 0.05, "{}", model.b0());
    assert!((model.var.pi[0][(2, 0)] - 0.9).abs() < 0.1);
    assert!(model.b[1][(2, 0)].abs() < 0.05);
    assert!(model.warnings.is_empty(), "{:?}", model.warnings);
}

#[test]
fn gaussian_residuals_raise_a_warning() {
    let panel = simulate("bivariate", ShockDist::Gaussian, 500, 3);
    let model = fit_svar_lingam(&panel, 1, &cfg(3)).unwrap();
    assert!(model.warnings.iter().any(|w| w.contains("Gaussian")));
}

#[test]
fn structural_shocks_are_less_dependent_than_residuals() {
    let wins = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let panel = simulate("chain", ShockDist::Laplace, 1000, 100 + s);
            let model = fit_svar_lingam(&panel, 1, &cfg(s)).unwrap();
            mutual_information_estimate(&model.shocks).unwrap()
                <= mutual_information_estimate(&model.var.residuals).unwrap()
        })
        .count();
    assert!(wins >= 90, "{wins}/100");
}

#[test]
fn permuting_columns_conjugates_the_model() {
    let panel = simulate("chain", ShockDist::Laplace, 3000, 4);
    let q = [2usize, 0, 1];
    let values = DMatrix::from_fn(panel.nobs(), 3, |r, c| panel.values[(r, q[c])]);
    let names = q.iter().map(|&k| panel.names[k].clone()).collect();
    let permuted = Panel { names, dates: panel.dates.clone(), values };
    let a = fit_svar_lingam(&panel, 1, &cfg(5)).unwrap();
    let b = fit_svar_lingam(&permuted, 1, &cfg(5)).unwrap();
    let relabelled: Vec<usize> = b.order.iter().map(|&k| q[k]).collect();
    assert_eq!(relabelled, a.order);
    for h in 0..=1 {
        let conj = DMatrix::from_fn(3, 3, |i, j| a.b[h][(q[i], q[j])]);
        assert!((&b.b[h] - conj).amax() < 1e-9);
    }
    assert_eq!(a.order_names(), b.order_names());
}

fn bootstrap_model(seed: u64) -> (SvarLingamModel, Panel) {
    // B₁(0, 1) is a true zero; B₁(0, 0) = 0.9.
    let spec = GroundTruthSpec::new(
        vec![m(2, &[0.0, 0.0, 0.5, 0.0]), m(2, &[0.9, 0.0, 0.3, 0.5])],
        ShockDist::Laplace,
        2000,
        seed,
    )
    .unwrap();
    let panel = generate_svar(&spec).unwrap().0;
    (fit_svar_with_order(&panel, 1, &[0, 1], &SvarConfig::default()).unwrap(), panel)
}

#[test]
fn bootstrap_has_power_on_large_effects() {
    let hits = (0..20u64)
        .filter(|&s| {
            let (model, panel) = bootstrap_model(900 + s);
            let summary = bootstrap_significance(&model, &panel, &BootstrapConfig::new(200, s)).unwrap();
            summary.get(1, 0, 0).unwrap().ci99.excludes_zero()
        })
        .count();
    assert_eq!(hits, 20);
}

#[test]
fn bootstrap_summary_is_consistent_and_deterministic() {
    let (model, panel) = bootstrap_model(7);
    let a = bootstrap_significance(&model, &panel, &BootstrapConfig::new(200, 11)).unwrap();
    let b = bootstrap_significance(&model, &panel, &BootstrapConfig::new(200, 11)).unwrap();
    let c = bootstrap_significance(&model, &panel, &BootstrapConfig::new(200, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.coefficients.len(), 2 * 2 * 2);
    for coef in &a.coefficients {
        assert!(coef.ci99.lower <= coef.ci95.lower && coef.ci95.lower <= coef.ci90.lower);
        assert!(coef.ci90.upper <= coef.ci95.upper && coef.ci95.upper <= coef.ci99.upper);
        let expected = if coef.ci99.excludes_zero() {
            "***"
        } else if coef.ci95.excludes_zero() {
            "**"
        } else if coef.ci90.excludes_zero() {
            "*"
        } else {
            ""
        };
        assert_eq!(coef.stars, expected);
        assert!(coef.std_err >= 0.0);
        assert_eq!(coef.estimate, model.b[coef.lag][(coef.row, coef.col)]);
    }
    // Fixed order keeps the entries above the diagonal of B₀ at zero.
    assert_eq!(a.get(0, 0, 1).unwrap().ci99.upper, 0.0);
}

#[test]
fn bootstrap_rejects_too_few_iterations_and_mismatched_panels() {
    let (model, panel) = bootstrap_model(8);
    assert!(matches!(
        bootstrap_significance(&model, &panel, &BootstrapConfig::new(50, 1)),
        Err(Error::InvalidArgument(_))
    ));
    let short = Panel { names: panel.names.clone(), dates: panel.dates[..100].to_vec(), values: panel.values.rows(0, 100).clone_owned() };
    assert!(bootstrap_significance(&model, &short, &BootstrapConfig::new(100, 1)).is_err());
}

fn model_with(b: Vec<DMatrix<f64>>, names: &[&str], order: Vec<usize>) -> SvarLingamModel {
    let n = names.len();
    let panel = generate_svar(&GroundTruthSpec::new(vec![DMatrix::zeros(n, n); b.len()], ShockDist::Laplace, 200, 1).unwrap())
        .unwrap()
        .0;
    let panel = Panel { names: names.iter().map(|s| s.to_string()).collect(), ..panel };
    let mut model = fit_svar_with_order(&panel, b.len() - 1, &order, &SvarConfig::default()).unwrap();
    model.b = b;
    model
}

fn topological(graph: &svarlingam::graph::CausalGraph) -> bool {
    let pos = |name: &str| graph.nodes.iter().position(|n| n == name).unwrap();
    graph.contemporaneous().all(|e| pos(&e.from) < pos(&e.to))
}

#[test]
fn three_variable_example_graph() {
    let b0 = m(3, &[0.0, 0.0, -0.08, 0.85, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let model = model_with(vec![b0, DMatrix::zeros(3, 3)], &["y1", "y2", "y3"], vec![2, 0, 1]);
    let g = to_causal_graph(&model, None, 0.05);
    assert_eq!(g.nodes, vec!["y3", "y1", "y2"]);
    let edges: Vec<(&str, &str, f64)> = g.edges.iter().map(|e| (e.from.as_str(), e.to.as_str(), e.weight)).collect();
    assert_eq!(edges, vec![("y3", "y1", -0.08), ("y1", "y2", 0.85)]);
    assert!(topological(&g));
}

#[test]
fn empty_model_has_nodes_only() {
    let model = model_with(vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)], &["A", "B"], vec![0, 1]);
    let g = to_causal_graph(&model, None, 0.05);
    assert!(g.edges.is_empty());
    assert_eq!(export_dot(&g, true), "digraph svar_lingam {\n  A;\n  B;\n}\n");
}

#[test]
fn four_variable_graph_has_the_chain_and_both_xrp_parents() {
    let mut b0 = DMatrix::zeros(4, 4);
    b0[(1, 0)] = 0.7893;
    b0[(2, 1)] = 0.9531;
    b0[(3, 1)] = 0.5303;
    b0[(3, 2)] = 0.4100;
    let model = model_with(vec![b0, DMatrix::zeros(4, 4)], &["SPT", "BTC", "ETH", "XRP"], vec![0, 1, 2, 3]);
    let dot = export_dot(&to_causal_graph(&model, None, 0.05), false);
    let lines: Vec<&str> = dot.lines().collect();
    assert_eq!(&lines[1..5], &["  SPT;", "  BTC;", "  ETH;", "  XRP;"]);
    for edge in [
        "  SPT -> BTC [label=\"0.79\"];",
        "  BTC -> ETH [label=\"0.95\"];",
        "  BTC -> XRP [label=\"0.53\"];",
        "  ETH -> XRP [label=\"0.41\"];",
    ] {
        assert!(lines.contains(&edge), "{dot}");
    }
    assert_eq!(lines.iter().filter(|l| l.contains("->")).count(), 4);
}

#[test]
fn bootstrap_flags_mark_insignificant_edges() {
    let (model, panel) = bootstrap_model(9);
    let summary = bootstrap_significance(&model, &panel, &BootstrapConfig::new(200, 3)).unwrap();
    let g = to_causal_graph(&model, Some(&summary), 0.05);
    assert!(topological(&g));
    for e in &g.edges {
        let (i, j) = (model.names.iter().position(|n| *n == e.to).unwrap(), model.names.iter().position(|n| *n == e.from).unwrap());
        assert_eq!(e.weight, model.b[e.lag][(i, j)]);
        assert_eq!(e.significant, summary.get(e.lag, i, j).unwrap().ci95.excludes_zero());
    }
    let strong = g.edges.iter().find(|e| e.lag == 1 && e.from == "y1" && e.to == "y1").unwrap();
    assert!(strong.significant && strong.stars == "***");
    let dot = export_dot(&g, true);
    assert!(dot.contains("label=\"t-1 "));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structural_round_trip(lower in prop::collection::vec(-2.0f64..2.0, 3), pi in prop::collection::vec(-1.0f64..1.0, 18), q in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let mut b0 = DMatrix::zeros(3, 3);
        b0[(q[1], q[0])] = lower[0];
        b0[(q[2], q[0])] = lower[1];
        b0[(q[2], q[1])] = lower[2];
        let pis = vec![DMatrix::from_row_slice(3, 3, &pi[..9]), DMatrix::from_row_slice(3, 3, &pi[9..])];
        let back = structural_to_reduced(&b0, &reduced_to_structural(&pis, &b0).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&pis) {
            prop_assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn fitted_model_is_internally_consistent(seed in 0u64..10_000) {
        let panel = simulate("chain", ShockDist::Laplace, 400, seed);
        let model = fit_svar_lingam(&panel, 2, &cfg(seed)).unwrap();
        let a0 = DMatrix::identity(3, 3) - model.b0();
        for h in 0..2 {
            prop_assert!((&a0 * &model.var.pi[h] - &model.b[h + 1]).amax() < 1e-10);
        }
        prop_assert!((&a0 * &model.var.gamma - &model.c).amax() < 1e-10);
        prop_assert!((&model.var.residuals * a0.transpose() - &model.shocks).amax() < 1e-10);
        prop_assert!(model.upper_mass == 0.0);
        prop_assert!((0..3).all(|i| model.b0()[(i, i)] == 0.0));
        let again = fit_svar_lingam(&panel, 2, &cfg(seed)).unwrap();
        prop_assert_eq!(model, again);
    }
}

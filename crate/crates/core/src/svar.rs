//! SVAR-LiNGAM: y_t = c + Σ_{h=0..p} B_h y_{t−h} + u_t.
//!
//! B₀ sits on the right-hand side with a zero diagonal. The left-hand-side
//! form A₀ y_t = … used in much of the SVAR literature maps onto this one by
//! A₀ = I − B₀, so the reduced form is Π_h = (I − B₀)⁻¹ B_h,
//! γ = (I − B₀)⁻¹ c and ε_t = (I − B₀)⁻¹ u_t.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diagnostics::jarque_bera;
use crate::error::{Error, Result};
use crate::ica::IcaConfig;
use crate::ingest::Panel;
use crate::linalg::{self, serde_matrix, serde_vector};
use crate::lingam::{estimate_b_given_order, ica_lingam, restrict_to_order, upper_mass, LingamResult};
use crate::var::{fit_var, VarModel};

fn identity_minus(b0: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(b0.nrows(), b0.ncols()) - b0
}

/// Π_h = (I − B₀)⁻¹ B_h for every lag matrix.
pub fn structural_to_reduced(b0: &DMatrix<f64>, b_lags: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let a0 = identity_minus(b0);
    let lu = a0.lu();
    if !lu.is_invertible() {
        return Err(Error::Singular("I - B0".into()));
    }
    Ok(b_lags
        .iter()
        .map(|bh| lu.solve(bh).expect("invertible"))
        .collect())
}

/// B_h = (I − B₀) Π_h for every lag matrix.
pub fn reduced_to_structural(pi: &[DMatrix<f64>], b0: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let a0 = identity_minus(b0);
    if !a0.clone().lu().is_invertible() {
        return Err(Error::Singular("I - B0".into()));
    }
    Ok(pi.iter().map(|p| &a0 * p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum B0Method {
    /// Least squares of each residual on its causal predecessors.
    #[default]
    Regression,
    /// ICA connection strengths with entries contradicting the order removed.
    Ica,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvarConfig {
    pub ica: IcaConfig,
    pub b0_method: B0Method,
    /// |B₀| entries below this are set to zero (0 keeps everything).
    pub prune_threshold: f64,
    /// Jarque–Bera level for the Gaussian-residual warning.
    pub gaussian_warning_level: f64,
}

impl Default for SvarConfig {
    fn default() -> Self {
        SvarConfig {
            ica: IcaConfig::default(),
            b0_method: B0Method::Regression,
            prune_threshold: 0.0,
            gaussian_warning_level: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvarLingamModel {
    pub p: usize,
    pub names: Vec<String>,
    #[serde(with = "serde_vector")]
    pub c: DVector<f64>,
    /// B₀..B_p.
    #[serde(with = "serde_matrix::vec")]
    pub b: Vec<DMatrix<f64>>,
    pub order: Vec<usize>,
    pub upper_mass: f64,
    #[serde(with = "serde_matrix")]
    pub shocks: DMatrix<f64>,
    pub var: VarModel,
    /// ICA-LiNGAM output behind the order; absent when the order was imposed.
    pub lingam: Option<LingamResult>,
    pub warnings: Vec<String>,
}

impl SvarLingamModel {
    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn b0(&self) -> &DMatrix<f64> {
        &self.b[0]
    }

    /// (I − B₀)⁻¹, the impact matrix of unit structural shocks.
    pub fn impact(&self) -> Result<DMatrix<f64>> {
        linalg::inverse(&identity_minus(&self.b[0]), "I - B0")
    }

    /// Causal order as variable names, earliest first.
    pub fn order_names(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.names[i].as_str()).collect()
    }
}

fn assemble(
    var: VarModel,
    b0: DMatrix<f64>,
    order: Vec<usize>,
    lingam: Option<LingamResult>,
    mut warnings: Vec<String>,
) -> Result<SvarLingamModel> {
    let a0 = identity_minus(&b0);
    let lags = reduced_to_structural(&var.pi, &b0)?;
    let c = &a0 * &var.gamma;
    let shocks = &var.residuals * a0.transpose();
    let mass = upper_mass(&b0, &order);
    if mass > 0.0 {
        warnings.push(format!("B0 is not triangular in the reported order (upper mass {mass:e})"));
    }
    let mut b = Vec::with_capacity(var.p + 1);
    b.push(b0);
    b.extend(lags);
    Ok(SvarLingamModel {
        p: var.p,
        names: var.names.clone(),
        c,
        b,
        order,
        upper_mass: mass,
        shocks,
        var,
        lingam,
        warnings,
    })
}

fn gaussian_warning(var: &VarModel, level: f64) -> Option<String> {
    let all_gaussian = var.residuals.column_iter().all(|col| {
        let x: Vec<f64> = col.iter().copied().collect();
        jarque_bera(&x).map(|t| t.p_value > level).unwrap_or(false)
    });
    all_gaussian.then(|| {
        format!(
            "all VAR residuals look Gaussian (Jarque-Bera p > {level}); the causal order is weakly identified"
        )
    })
}

fn b0_for_order(
    residuals: &DMatrix<f64>,
    order: &[usize],
    lingam: Option<&LingamResult>,
    config: &SvarConfig,
) -> Result<DMatrix<f64>> {
    let b0 = match (config.b0_method, lingam) {
        (B0Method::Ica, Some(l)) => restrict_to_order(&l.b, order),
        _ => estimate_b_given_order(residuals, order)?,
    };
    Ok(if config.prune_threshold > 0.0 {
        b0.map(|v| if v.abs() < config.prune_threshold { 0.0 } else { v })
    } else {
        b0
    })
}

/// Fits the reduced-form VAR, identifies B₀ and the causal order from its
/// residuals by ICA-LiNGAM, and converts every lag to structural form.
pub fn fit_svar_lingam(panel: &Panel, p: usize, config: &SvarConfig) -> Result<SvarLingamModel> {
    let var = fit_var(panel, p)?;
    let mut warnings = Vec::new();
    if let Some(w) = gaussian_warning(&var, config.gaussian_warning_level) {
        log::warn!("{w}");
        warnings.push(w);
    }
    let lingam = ica_lingam(&var.residuals, &config.ica)?;
    let order = lingam.order.clone();
    let b0 = b0_for_order(&var.residuals, &order, Some(&lingam), config)?;
    assemble(var, b0, order, Some(lingam), warnings)
}

/// Same pipeline with the causal order imposed instead of discovered.
pub fn fit_svar_with_order(
    panel: &Panel,
    p: usize,
    order: &[usize],
    config: &SvarConfig,
) -> Result<SvarLingamModel> {
    let var = fit_var(panel, p)?;
    let b0 = b0_for_order(&var.residuals, order, None, config)?;
    assemble(var, b0, order.to_vec(), None, Vec::new())
}

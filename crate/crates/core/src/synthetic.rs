//! Ground-truth generators for SVAR-LiNGAM and static LiNGAM processes.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::linalg::{self, serde_matrix, serde_vector};
use crate::lingam::find_causal_order;
use crate::var::spectral_radius;

pub const DEFAULT_BURN_IN: usize = 500;

/// Shock distributions, each standardised to zero mean and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShockDist {
    Uniform,
    Laplace,
    Gaussian,
    StudentT { df: f64 },
}

impl ShockDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            ShockDist::StudentT { df } if !(*df > 2.0) => Err(Error::InvalidArgument(format!(
                "student-t shocks need df > 2 for finite variance, got {df}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ShockDist::Uniform => rng.random_range(-3f64.sqrt()..3f64.sqrt()),
            ShockDist::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln() / std::f64::consts::SQRT_2
            }
            ShockDist::Gaussian => StandardNormal.sample(rng),
            ShockDist::StudentT { df } => {
                let t: f64 = StudentT::new(df).expect("validated df").sample(rng);
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }
}

impl std::str::FromStr for ShockDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ShockDist::Uniform),
            "laplace" => Ok(ShockDist::Laplace),
            "gaussian" | "normal" => Ok(ShockDist::Gaussian),
            other => {
                let df = other
                    .strip_prefix("student_t(")
                    .or_else(|| other.strip_prefix("t("))
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown shock distribution {other:?}")))?;
                let d = ShockDist::StudentT { df };
                d.validate()?;
                Ok(d)
            }
        }
    }
}

/// y_t = c + B₀ y_t + Σ_{h=1..p} B_h y_{t−h} + u_t
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub names: Vec<String>,
    /// B₀..B_p.
    #[serde(with = "serde_matrix::vec")]
    pub b: Vec<DMatrix<f64>>,
    #[serde(with = "serde_vector")]
    pub intercept: DVector<f64>,
    pub shock_dist: ShockDist,
    pub shock_scale: Vec<f64>,
    pub t: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
}

impl GroundTruthSpec {
    /// Spec with zero intercept, unit shock scales and default burn-in.
    pub fn new(b: Vec<DMatrix<f64>>, shock_dist: ShockDist, t: usize, seed: u64) -> Result<Self> {
        let n = b.first().map_or(0, |m| m.nrows());
        let spec = GroundTruthSpec {
            names: (1..=n).map(|i| format!("y{i}")).collect(),
            b,
            intercept: DVector::zeros(n),
            shock_dist,
            shock_scale: vec![1.0; n],
            t,
            burn_in: DEFAULT_BURN_IN,
            seed,
            start_date: NaiveDate::from_ymd_opt(2016, 12, 4).expect("valid date"),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.b[0].nrows()
    }

    pub fn p(&self) -> usize {
        self.b.len() - 1
    }

    /// Reduced-form lag matrices Π_h = (I − B₀)⁻¹ B_h.
    pub fn reduced_form(&self) -> Result<Vec<DMatrix<f64>>> {
        let a0_inv = linalg::inverse(&(DMatrix::identity(self.n(), self.n()) - &self.b[0]), "I - B0")?;
        Ok(self.b[1..].iter().map(|bh| &a0_inv * bh).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let Some(b0) = self.b.first() else {
            return Err(Error::InvalidArgument("spec needs at least B0".into()));
        };
        let n = b0.nrows();
        if n == 0 || self.b.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::InvalidArgument("all B matrices must be n×n with n >= 1".into()));
        }
        if self.intercept.len() != n || self.shock_scale.len() != n || self.names.len() != n {
            return Err(Error::InvalidArgument(
                "intercept, shock scales and names must have length n".into(),
            ));
        }
        if self.shock_scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("shock scales must be positive".into()));
        }
        self.shock_dist.validate()?;
        check_acyclic(b0)?;
        let rho = spectral_radius(&self.reduced_form()?);
        if !(rho < 1.0) {
            return Err(Error::NonStationary(rho));
        }
        Ok(())
    }
}

/// Rejects B₀ with a nonzero diagonal or a support that no permutation makes
/// strictly lower triangular.
pub fn check_acyclic(b0: &DMatrix<f64>) -> Result<()> {
    if (0..b0.nrows()).any(|i| b0[(i, i)] != 0.0) {
        return Err(Error::InvalidArgument("B0 must have a zero diagonal".into()));
    }
    let support = b0.map(|v| if v != 0.0 { 1.0 } else { 0.0 });
    let (_, mass) = find_causal_order(&support);
    if mass > 0.0 {
        return Err(Error::Cyclic);
    }
    Ok(())
}

fn draw_shocks(rows: usize, dist: ShockDist, scale: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = scale.len();
    let mut u = DMatrix::zeros(rows, n);
    for t in 0..rows {
        for j in 0..n {
            u[(t, j)] = dist.sample(rng) * scale[j];
        }
    }
    u
}

/// Simulates the structural process forward and returns (panel, true shocks).
/// Burn-in rows are discarded when p ≥ 1; with p = 0 there is nothing to burn.
pub fn generate_svar(spec: &GroundTruthSpec) -> Result<(Panel, DMatrix<f64>)> {
    spec.validate()?;
    let n = spec.n();
    let p = spec.p();
    let burn = if p == 0 { 0 } else { spec.burn_in };
    let total = burn + spec.t;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shocks = draw_shocks(total, spec.shock_dist, &spec.shock_scale, &mut rng);
    let a0_inv = linalg::inverse(&(DMatrix::identity(n, n) - &spec.b[0]), "I - B0")?;
    let mut y = DMatrix::zeros(total, n);
    for t in 0..total {
        let mut rhs = &spec.intercept + shocks.row(t).transpose();
        for h in 1..=p {
            if t >= h {
                rhs += &spec.b[h] * y.row(t - h).transpose();
            }
        }
        y.set_row(t, &(&a0_inv * rhs).transpose());
    }
    let data = y.rows(burn, spec.t).clone_owned();
    let kept_shocks = shocks.rows(burn, spec.t).clone_owned();
    let panel = Panel::with_daily_index(spec.names.clone(), spec.start_date, data)?;
    Ok((panel, kept_shocks))
}

/// Draws x = (I − B)⁻¹ e row-wise for an acyclic B.
pub fn generate_lingam(
    b: &DMatrix<f64>,
    shock_dist: ShockDist,
    n_obs: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_acyclic(b)?;
    shock_dist.validate()?;
    let n = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shocks = draw_shocks(n_obs, shock_dist, &vec![1.0; n], &mut rng);
    let a = linalg::inverse(&(DMatrix::identity(n, n) - b), "I - B")?;
    let x = &shocks * a.transpose();
    Ok((x, shocks))
}

/// Independent Gaussian random walks with a common drift, starting at zero.
pub fn random_walks(n_obs: usize, n: usize, drift: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DMatrix::zeros(n_obs, n);
    for j in 0..n {
        let mut level = 0.0;
        for t in 0..n_obs {
            let e: f64 = StandardNormal.sample(&mut rng);
            level += drift + e;
            y[(t, j)] = level;
        }
    }
    y
}

/// x_t = φ x_{t−1} + e_t with Gaussian e, started from zero.
pub fn ar1(n_obs: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    (0..n_obs)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = phi * x + e;
            x
        })
        .collect()
}

/// Named ground-truth systems.
///
/// * `bivariate`: y₂ drives y₁ instantaneously (B₀ = [[0,1],[0,0]]), B₁ = 0.9·I.
/// * `chain`: y₁ → y₂ → y₃ instantaneously with unit weights, B₁ = 0.9·I.
/// * `lingam3`: static model with y₃ → y₁ (−0.08) and y₁ → y₂ (0.85).
pub fn preset(name: &str, shock_dist: ShockDist, t: usize, seed: u64) -> Result<GroundTruthSpec> {
    let b = match name {
        "bivariate" => vec![
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::identity(2, 2) * 0.9,
        ],
        "chain" => vec![
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            DMatrix::identity(3, 3) * 0.9,
        ],
        "lingam3" => vec![DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, -0.08, 0.85, 0.0, 0.0, 0.0, 0.0, 0.0],
        )],
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?} (bivariate|chain|lingam3)"
            )))
        }
    };
    GroundTruthSpec::new(b, shock_dist, t, seed)
}

/// Serialisable bundle written next to simulated data for later scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub spec: GroundTruthSpec,
    #[serde(with = "serde_matrix::vec")]
    pub reduced_form: Vec<DMatrix<f64>>,
    pub causal_order: Vec<usize>,
}

impl SimulationTruth {
    pub fn new(spec: &GroundTruthSpec) -> Result<Self> {
        Ok(SimulationTruth {
            spec: spec.clone(),
            reduced_form: spec.reduced_form()?,
            causal_order: find_causal_order(&spec.b[0].map(|v| if v != 0.0 { 1.0 } else { 0.0 })).0,
        })
    }
}

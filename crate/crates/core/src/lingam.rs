//! ICA-based identification of a linear non-Gaussian acyclic model
//! x = B x + e.
//!
//! Orders are lists of variable indices, earliest cause first: `order[k]` is
//! the variable at causal position k.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::{for_each_permutation, min_cost_assignment};
use crate::error::{Error, Result};
use crate::ica::{fastica, IcaConfig};
use crate::linalg::{least_squares, serde_matrix};

/// Largest size handled by exhaustive permutation search.
pub const EXHAUSTIVE_MAX: usize = 8;
pub const BRUTE_FORCE_MAX: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LingamResult {
    /// Connection strengths b_ij (effect of j on i), zero diagonal.
    #[serde(with = "serde_matrix")]
    pub b: DMatrix<f64>,
    pub order: Vec<usize>,
    /// Row-permuted, unit-diagonal demixing matrix W′ = I − B.
    #[serde(with = "serde_matrix")]
    pub w_normalized: DMatrix<f64>,
    /// Strictly-upper sum of squares of B permuted by `order`.
    pub upper_mass: f64,
    /// Row permutation applied to the ICA demixing matrix.
    pub row_perm: Vec<usize>,
}

impl LingamResult {
    /// B with every entry that contradicts `order` set to zero.
    pub fn b_acyclic(&self) -> DMatrix<f64> {
        restrict_to_order(&self.b, &self.order)
    }
}

fn diag_cost(w: &DMatrix<f64>, row: usize, pos: usize) -> f64 {
    let v = w[(row, pos)].abs();
    if v > 0.0 {
        1.0 / v
    } else {
        f64::INFINITY
    }
}

/// Row permutation of `w_ica` minimising Σ 1/|w_kk|. Row k of the result is row
/// `perm[k]` of the input.
pub fn row_permute_nonzero_diag(w_ica: &DMatrix<f64>) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let n = w_ica.nrows();
    if n == 0 || w_ica.ncols() != n {
        return Err(Error::InvalidArgument("demixing matrix must be square and nonempty".into()));
    }
    let perm = if n <= EXHAUSTIVE_MAX {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for_each_permutation(n, |p| {
            let cost: f64 = p.iter().enumerate().map(|(k, &i)| diag_cost(w_ica, i, k)).sum();
            if cost.is_finite() && best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, p.to_vec()));
            }
        });
        best.map(|(_, p)| p)
    } else {
        let cost = DMatrix::from_fn(n, n, |i, k| diag_cost(w_ica, i, k));
        min_cost_assignment(&cost).map(|assign| {
            let mut perm = vec![0; n];
            for (row, &pos) in assign.iter().enumerate() {
                perm[pos] = row;
            }
            perm
        })
    };
    let perm = perm.ok_or_else(|| {
        Error::Identification("every row permutation leaves a zero on the diagonal".into())
    })?;
    let permuted = w_ica.select_rows(&perm);
    Ok((perm, permuted))
}

/// W′ = rows of `w_permuted` scaled to unit diagonal; B = I − W′.
pub fn normalize_and_extract_b(w_permuted: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = w_permuted.nrows();
    if let Some(i) = (0..n).find(|&i| w_permuted[(i, i)] == 0.0) {
        return Err(Error::InvalidArgument(format!("zero diagonal entry in row {i}")));
    }
    let mut w = w_permuted.clone();
    for i in 0..n {
        let d = w_permuted[(i, i)];
        for j in 0..n {
            w[(i, j)] = if i == j { 1.0 } else { w_permuted[(i, j)] / d };
        }
    }
    let b = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { -w[(i, j)] });
    Ok((w, b))
}

/// Strictly-upper sum of squares of `b` with rows and columns taken in `order`.
pub fn upper_mass(b: &DMatrix<f64>, order: &[usize]) -> f64 {
    let mut s = 0.0;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            s += b[(i, j)] * b[(i, j)];
        }
    }
    s
}

/// Zeroes every b_ij where j does not precede i in `order`.
pub fn restrict_to_order(b: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let n = b.nrows();
    let mut pos = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        pos[i] = k;
    }
    DMatrix::from_fn(n, n, |i, j| if pos[j] < pos[i] { b[(i, j)] } else { 0.0 })
}

/// Peels off variables whose rows are entirely zero (no remaining causes).
fn order_if_acyclic(mask: &DMatrix<bool>) -> Option<Vec<usize>> {
    let n = mask.nrows();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let pos = remaining
            .iter()
            .position(|&i| remaining.iter().all(|&j| !mask[(i, j)]))?;
        order.push(remaining.remove(pos));
    }
    Some(order)
}

/// Causal order minimising the strictly-upper sum of squares. Exhaustive (ties
/// to the lexicographically smallest order) up to [`EXHAUSTIVE_MAX`] variables;
/// beyond that, the smallest entries are zeroed until the support is acyclic.
pub fn find_causal_order(b: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let n = b.nrows();
    if n <= EXHAUSTIVE_MAX {
        let mut best = (Vec::new(), f64::INFINITY);
        for_each_permutation(n, |p| {
            let m = upper_mass(b, p);
            if m < best.1 {
                best = (p.to_vec(), m);
            }
        });
        return best;
    }
    let mut entries: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (b[(i, j)].abs(), i, j))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut mask = DMatrix::from_fn(n, n, |i, j| i != j && b[(i, j)] != 0.0);
    // An acyclic support has at most n(n-1)/2 edges.
    let mut cut = 0;
    for &(_, i, j) in entries.iter().take(n * (n - 1) / 2) {
        mask[(i, j)] = false;
        cut += 1;
    }
    loop {
        if let Some(order) = order_if_acyclic(&mask) {
            let m = upper_mass(b, &order);
            return (order, m);
        }
        let (_, i, j) = entries[cut];
        mask[(i, j)] = false;
        cut += 1;
    }
}

/// Zeroes |b_ij| < threshold and recomputes the causal order.
pub fn prune_edges(b: &DMatrix<f64>, threshold: f64) -> Result<(DMatrix<f64>, Vec<usize>, f64)> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be >= 0")));
    }
    let pruned = b.map(|v| if v.abs() < threshold { 0.0 } else { v });
    let (order, mass) = find_causal_order(&pruned);
    Ok((pruned, order, mass))
}

/// Full ICA-LiNGAM: FastICA, diagonal permutation, normalisation, causal order.
pub fn ica_lingam(x: &DMatrix<f64>, config: &IcaConfig) -> Result<LingamResult> {
    let ica = fastica(x, config)?;
    if !ica.converged {
        log::warn!("FastICA did not converge in {} iterations", ica.iterations);
    }
    lingam_from_demixing(&ica.w_ica)
}

pub fn lingam_from_demixing(w_ica: &DMatrix<f64>) -> Result<LingamResult> {
    let (row_perm, permuted) = row_permute_nonzero_diag(w_ica)?;
    let (w_normalized, b) = normalize_and_extract_b(&permuted)?;
    let (order, upper_mass) = find_causal_order(&b);
    Ok(LingamResult {
        b,
        order,
        w_normalized,
        upper_mass,
        row_perm,
    })
}

/// Regresses each variable on its causal predecessors (with intercept) and
/// returns the implied strictly-lower-triangularisable B.
pub fn estimate_b_given_order(x: &DMatrix<f64>, order: &[usize]) -> Result<DMatrix<f64>> {
    let (n_obs, n) = x.shape();
    check_order(order, n)?;
    let mut b = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate().skip(1) {
        let preds = &order[..k];
        let design = DMatrix::from_fn(n_obs, k + 1, |t, c| if c == 0 { 1.0 } else { x[(t, preds[c - 1])] });
        let resp = x.column(i).clone_owned();
        let fit = least_squares(&design, &DMatrix::from_column_slice(n_obs, 1, resp.as_slice()))?;
        for (c, &j) in preds.iter().enumerate() {
            b[(i, j)] = fit.coef[(c + 1, 0)];
        }
    }
    Ok(b)
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::InvalidArgument(format!(
            "{order:?} is not a permutation of 0..{n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    #[default]
    Laplace,
    Logistic,
}

impl Density {
    /// Log density of the unit-variance member of the family.
    pub fn log_pdf(self, u: f64) -> f64 {
        match self {
            Density::Laplace => -std::f64::consts::SQRT_2 * u.abs() - std::f64::consts::SQRT_2.ln(),
            Density::Logistic => {
                let s = 3f64.sqrt() / std::f64::consts::PI;
                let a = (u / s).abs();
                // log of e^{-a} / (1 + e^{-a})² / s, symmetric in u
                -a - 2.0 * (-a).exp().ln_1p() - s.ln()
            }
        }
    }
}

/// Log-likelihood contribution of variable `i` regressed on `preds`.
fn loglik_term(x: &DMatrix<f64>, i: usize, preds: &[usize], density: Density) -> Result<f64> {
    let n_obs = x.nrows();
    let design = DMatrix::from_fn(n_obs, preds.len() + 1, |t, c| {
        if c == 0 {
            1.0
        } else {
            x[(t, preds[c - 1])]
        }
    });
    let resp = DMatrix::from_fn(n_obs, 1, |t, _| x[(t, i)]);
    let resid = least_squares(&design, &resp)?.resid;
    let sigma = (resid.norm_squared() / n_obs as f64).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Degenerate(format!("variable {i} is fitted exactly")));
    }
    let ll: f64 = resid.iter().map(|r| density.log_pdf(r / sigma)).sum();
    Ok(ll - n_obs as f64 * sigma.ln())
}

/// LiNGAM log-likelihood of `x` under the causal `order`.
pub fn lingam_loglik(x: &DMatrix<f64>, order: &[usize], density: Density) -> Result<f64> {
    let (n_obs, n) = x.shape();
    check_order(order, n)?;
    if n_obs <= n + 2 {
        return Err(Error::InsufficientData(format!("{n_obs} observations for {n} variables")));
    }
    order
        .iter()
        .enumerate()
        .map(|(k, &i)| loglik_term(x, i, &order[..k], density))
        .sum()
}

/// Order maximising [`lingam_loglik`] over all n! permutations (n ≤ 6).
pub fn brute_force_order(x: &DMatrix<f64>, density: Density) -> Result<Vec<usize>> {
    let (n_obs, n) = x.shape();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::UnsupportedSize(format!(
            "exhaustive likelihood search supports n <= {BRUTE_FORCE_MAX}, got {n}"
        )));
    }
    if n_obs <= n + 2 {
        return Err(Error::InsufficientData(format!("{n_obs} observations for {n} variables")));
    }
    // Each term depends only on the predecessor set, so cache by bitmask.
    let mut cache: HashMap<(usize, u32), f64> = HashMap::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut failure = None;
    for_each_permutation(n, |p| {
        if failure.is_some() {
            return;
        }
        let mut total = 0.0;
        let mut mask = 0u32;
        for (k, &i) in p.iter().enumerate() {
            let term = match cache.get(&(i, mask)) {
                Some(v) => *v,
                None => match loglik_term(x, i, &p[..k], density) {
                    Ok(v) => {
                        cache.insert((i, mask), v);
                        v
                    }
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                },
            };
            total += term;
            mask |= 1 << i;
        }
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, p.to_vec()));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(best.map(|(_, p)| p).unwrap_or_default())
}

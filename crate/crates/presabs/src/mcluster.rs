//! Model-based clustering: latent class analysis on binary rows and Gaussian
//! mixtures on embedded points, both fitted by EM with multi-start.
//!
//! Both fitters work in the log domain and carry a monotonicity check on the
//! log-likelihood, so a broken update surfaces immediately instead of as a
//! silently bad fit. GMM covariances are selected among four structures by
//! BIC.

use rand::Rng;
use serde::Serialize;

use crate::data::{BinaryMatrix, ClusterLabels};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_substitute};
use crate::mds::Embedding;

const LN_2PI: f64 = 1.837877066409345_f64;
/// Clamp for latent class response probabilities; keeps every log finite.
const THETA_MIN: f64 = 1e-6;
/// Mixture weight floor before renormalization.
const PI_FLOOR: f64 = 1e-12;
/// A component whose responsibility mass falls below this fraction of n has
/// collapsed and the start is re-initialized.
const COLLAPSE_FRACTION: f64 = 1e-8;
const MAX_REINIT: usize = 10;

fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + scores.iter().map(|&s| (s - m).exp()).sum::<f64>().ln()
}

/// Symmetric-Dirichlet(1) draw (uniform over the simplex), with a uniform
/// fallback in the measure-zero case of an all-zero sample.
fn simplex_draw(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| -(-rng.random::<f64>()).ln_1p()).collect();
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return vec![1.0 / k as f64; k];
    }
    for x in &mut v {
        *x /= sum;
    }
    v
}

/// Latent class model: class weights `pi` and per-class Bernoulli response
/// probabilities `theta` (k x m row-major).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcaModel {
    pub k: usize,
    pub pi: Vec<f64>,
    pub theta: Vec<f64>,
    pub loglik: f64,
}

impl LcaModel {
    fn log_scores(&self, ones: &[u32], m: usize) -> Vec<f64> {
        let mut scores = Vec::with_capacity(self.k);
        for c in 0..self.k {
            let th = &self.theta[c * m..(c + 1) * m];
            let mut s = self.pi[c].ln() + th.iter().map(|&t| (1.0 - t).ln()).sum::<f64>();
            for &j in ones {
                let t = th[j as usize];
                s += t.ln() - (1.0 - t).ln();
            }
            scores.push(s);
        }
        scores
    }

    /// Posterior class probabilities for a binary row.
    pub fn posterior(&self, row: &[u8]) -> Vec<f64> {
        let m = self.theta.len() / self.k;
        let ones: Vec<u32> =
            row.iter().enumerate().filter(|(_, &v)| v == 1).map(|(j, _)| j as u32).collect();
        let scores = self.log_scores(&ones, m);
        let lse = log_sum_exp(&scores);
        scores.iter().map(|&s| (s - lse).exp()).collect()
    }
}

/// Fits a k-class latent class model by EM, best of `n_starts` random starts
/// by final log-likelihood (earliest start on ties). Labels are the maximum
/// a posteriori classes, ties toward the lower class index.
///
/// Starts draw weights uniformly from the simplex and response probabilities
/// uniformly from (0.2, 0.8). EM stops when the relative log-likelihood gain
/// drops below `tol` or after `max_iter` sweeps.
///
/// # Errors
///
/// Empty data, k outside 1..=n, or degenerate control parameters.
pub fn fit_lca(
    data: &BinaryMatrix,
    k: usize,
    rng: &mut impl Rng,
    n_starts: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(LcaModel, ClusterLabels)> {
    let n = data.n_rows();
    let m = data.n_cols();
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("class count {k} outside 1..={n}")));
    }
    if n_starts == 0 || max_iter == 0 || !(tol > 0.0) {
        return Err(Error::InvalidInput("n_starts, max_iter, and tol must be positive".into()));
    }

    // Sparse presence lists drive both E and M steps.
    let ones: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            data.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1)
                .map(|(j, _)| j as u32)
                .collect()
        })
        .collect();

    let mut best: Option<(LcaModel, Vec<f64>)> = None;
    for _ in 0..n_starts {
        let mut pi = simplex_draw(k, rng);
        let mut theta: Vec<f64> = (0..k * m).map(|_| 0.2 + 0.6 * rng.random::<f64>()).collect();
        let mut resp = vec![0.0f64; n * k];
        let loglik = lca_em_start(&ones, m, &mut pi, &mut theta, &mut resp, tol, max_iter, None);

        if best.as_ref().is_none_or(|(b, _)| loglik > b.loglik) {
            best = Some((LcaModel { k, pi, theta, loglik }, resp.clone()));
        }
    }

    let (model, resp) = best.expect("at least one start");
    let labels = map_labels(&resp, n, k);
    Ok((model, labels))
}

/// Runs a single randomly initialized EM start and returns the
/// log-likelihood after every E-step, for convergence audits.
pub fn lca_loglik_trace(
    data: &BinaryMatrix,
    k: usize,
    rng: &mut impl Rng,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = data.n_rows();
    let m = data.n_cols();
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("class count {k} outside 1..={n}")));
    }
    if max_iter == 0 || !(tol > 0.0) {
        return Err(Error::InvalidInput("max_iter and tol must be positive".into()));
    }
    let ones: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            data.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1)
                .map(|(j, _)| j as u32)
                .collect()
        })
        .collect();
    let mut pi = simplex_draw(k, rng);
    let mut theta: Vec<f64> = (0..k * m).map(|_| 0.2 + 0.6 * rng.random::<f64>()).collect();
    let mut resp = vec![0.0f64; n * k];
    let mut lls = Vec::new();
    lca_em_start(&ones, m, &mut pi, &mut theta, &mut resp, tol, max_iter, Some(&mut lls));
    Ok(lls)
}

/// EM from the given parameters to convergence; returns the final
/// log-likelihood. When `ll_trace` is given it receives the log-likelihood
/// after every E-step.
#[allow(clippy::too_many_arguments)]
fn lca_em_start(
    ones: &[Vec<u32>],
    m: usize,
    pi: &mut [f64],
    theta: &mut [f64],
    resp: &mut [f64],
    tol: f64,
    max_iter: usize,
    mut ll_trace: Option<&mut Vec<f64>>,
) -> f64 {
    let n = ones.len();
    let k = pi.len();
    let mut loglik = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        // E-step: per-class base log-mass plus sparse presence terms.
        let mut base = vec![0.0f64; k];
        let mut w = vec![0.0f64; k * m];
        for c in 0..k {
            let th = &theta[c * m..(c + 1) * m];
            base[c] = pi[c].ln() + th.iter().map(|&t| (1.0 - t).ln()).sum::<f64>();
            for j in 0..m {
                w[c * m + j] = th[j].ln() - (1.0 - th[j]).ln();
            }
        }
        let mut ll = 0.0;
        let mut scores = vec![0.0f64; k];
        for i in 0..n {
            for c in 0..k {
                let mut s = base[c];
                for &j in &ones[i] {
                    s += w[c * m + j as usize];
                }
                scores[c] = s;
            }
            let lse = log_sum_exp(&scores);
            ll += lse;
            for c in 0..k {
                resp[i * k + c] = (scores[c] - lse).exp();
            }
        }
        if let Some(trace) = ll_trace.as_deref_mut() {
            trace.push(ll);
        }
        assert!(
            loglik == f64::NEG_INFINITY || ll >= loglik - 1e-9 * loglik.abs().max(1.0),
            "log-likelihood dropped from {loglik} to {ll}"
        );
        let done = loglik != f64::NEG_INFINITY && (ll - loglik).abs() / ll.abs().max(1.0) < tol;
        loglik = ll;
        if done {
            break;
        }

        // M-step.
        let mut mass = vec![0.0f64; k];
        let mut th_num = vec![0.0f64; k * m];
        for i in 0..n {
            for c in 0..k {
                let r = resp[i * k + c];
                mass[c] += r;
                for &j in &ones[i] {
                    th_num[c * m + j as usize] += r;
                }
            }
        }
        let total: f64 = mass.iter().map(|&v| v.max(PI_FLOOR)).sum();
        for c in 0..k {
            pi[c] = mass[c].max(PI_FLOOR) / total;
            for j in 0..m {
                theta[c * m + j] =
                    (th_num[c * m + j] / mass[c].max(PI_FLOOR)).clamp(THETA_MIN, 1.0 - THETA_MIN);
            }
        }
    }
    loglik
}

/// label i = argmax_c resp[i, c] + 1, ties toward the lower class.
fn map_labels(resp: &[f64], n: usize, k: usize) -> ClusterLabels {
    (0..n)
        .map(|i| {
            let mut bc = 0;
            let mut bv = f64::NEG_INFINITY;
            for c in 0..k {
                if resp[i * k + c] > bv {
                    bv = resp[i * k + c];
                    bc = c;
                }
            }
            bc + 1
        })
        .collect()
}

/// Covariance structure of a Gaussian mixture. Listed in tie-breaking order:
/// when BIC values coincide the earlier (more parsimonious) family wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceFamily {
    SphericalEqual,
    SphericalVarying,
    FullEqual,
    FullVarying,
}

impl CovarianceFamily {
    pub const ALL: [CovarianceFamily; 4] = [
        CovarianceFamily::SphericalEqual,
        CovarianceFamily::SphericalVarying,
        CovarianceFamily::FullEqual,
        CovarianceFamily::FullVarying,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovarianceFamily::SphericalEqual => "spherical_equal",
            CovarianceFamily::SphericalVarying => "spherical_varying",
            CovarianceFamily::FullEqual => "full_equal",
            CovarianceFamily::FullVarying => "full_varying",
        }
    }

    /// Free covariance parameters for k components in p dimensions.
    fn cov_params(self, k: usize, p: usize) -> usize {
        let full = p * (p + 1) / 2;
        match self {
            CovarianceFamily::SphericalEqual => 1,
            CovarianceFamily::SphericalVarying => k,
            CovarianceFamily::FullEqual => full,
            CovarianceFamily::FullVarying => k * full,
        }
    }
}

/// Gaussian mixture fit: weights, means (k x p row-major), one p x p
/// covariance per component (shared families store identical copies), and
/// the model selection score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmModel {
    pub k: usize,
    pub p: usize,
    pub pi: Vec<f64>,
    pub means: Vec<f64>,
    pub covariances: Vec<Vec<f64>>,
    pub family: CovarianceFamily,
    pub loglik: f64,
    pub bic: f64,
}

impl GmmModel {
    /// Posterior component probabilities for a point.
    pub fn posterior(&self, point: &[f64]) -> Result<Vec<f64>> {
        let p = self.p;
        let mut scores = Vec::with_capacity(self.k);
        for c in 0..self.k {
            let chol = cholesky(&self.covariances[c], p)?;
            scores.push(
                self.pi[c].ln()
                    + log_gaussian(point, &self.means[c * p..(c + 1) * p], &chol, p),
            );
        }
        let lse = log_sum_exp(&scores);
        Ok(scores.iter().map(|&s| (s - lse).exp()).collect())
    }
}

/// log N(x; mu, L L^T) given the Cholesky factor L.
fn log_gaussian(x: &[f64], mu: &[f64], chol: &[f64], p: usize) -> f64 {
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let z = forward_substitute(chol, p, &diff);
    let log_det: f64 = (0..p).map(|i| chol[i * p + i].ln()).sum::<f64>() * 2.0;
    let quad: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * (p as f64 * LN_2PI + log_det + quad)
}

/// Covariance of all points (row-major p x p, denominator n).
fn sample_covariance(x: &Embedding) -> Vec<f64> {
    let (n, p) = (x.n(), x.p());
    let mut mean = vec![0.0f64; p];
    for i in 0..n {
        for d in 0..p {
            mean[d] += x.get(i, d);
        }
    }
    for v in &mut mean {
        *v /= n as f64;
    }
    let mut cov = vec![0.0f64; p * p];
    for i in 0..n {
        for a in 0..p {
            let da = x.get(i, a) - mean[a];
            for b in 0..p {
                cov[a * p + b] += da * (x.get(i, b) - mean[b]);
            }
        }
    }
    for v in &mut cov {
        *v /= n as f64;
    }
    cov
}

struct EmState {
    pi: Vec<f64>,
    means: Vec<f64>,
    covs: Vec<Vec<f64>>,
    loglik: f64,
    resp: Vec<f64>,
}

/// Fits Gaussian mixtures with every covariance family and returns the model
/// with the highest BIC (`2 loglik - params ln n`), ties toward the more
/// parsimonious family. Labels are maximum a posteriori components, ties
/// toward the lower index.
///
/// Each family takes the best of `n_starts` EM runs by log-likelihood.
/// Starts draw k distinct points as means and begin from the pooled sample
/// covariance shaped to the family. A ridge of `reg * trace(sample cov) / p`
/// is added to every covariance update to keep Cholesky factorizations
/// alive; a start whose component collapses (mass below 1e-8 of n or a
/// non-PD covariance) is re-initialized up to 10 times before being dropped.
///
/// # Errors
///
/// Too few points (n must exceed k * p), zero-variance data, degenerate
/// control parameters, or every start of every family failing.
pub fn fit_gmm(
    x: &Embedding,
    k: usize,
    rng: &mut impl Rng,
    n_starts: usize,
    tol: f64,
    max_iter: usize,
    reg: f64,
) -> Result<(GmmModel, ClusterLabels)> {
    let n = x.n();
    let p = x.p();
    if k < 1 {
        return Err(Error::InvalidInput("component count must be positive".into()));
    }
    if n <= k * p {
        return Err(Error::InvalidInput(format!(
            "{n} points cannot support {k} components in {p} dimensions"
        )));
    }
    if n_starts == 0 || max_iter == 0 || !(tol > 0.0) || !(reg > 0.0) {
        return Err(Error::InvalidInput("control parameters must be positive".into()));
    }

    let pooled = sample_covariance(x);
    let trace: f64 = (0..p).map(|d| pooled[d * p + d]).sum();
    if !(trace > 0.0) {
        return Err(Error::Numerical("data has zero variance".into()));
    }
    let ridge = reg * trace / p as f64;

    let mut chosen: Option<(GmmModel, Vec<f64>)> = None;
    for family in CovarianceFamily::ALL {
        let mut family_best: Option<EmState> = None;
        for _ in 0..n_starts {
            if let Some(state) = em_run(x, k, family, rng, tol, max_iter, ridge, &pooled, None) {
                if family_best.as_ref().is_none_or(|b| state.loglik > b.loglik) {
                    family_best = Some(state);
                }
            }
        }
        if let Some(state) = family_best {
            let nu = (k - 1) + k * p + family.cov_params(k, p);
            let bic = 2.0 * state.loglik - nu as f64 * (n as f64).ln();
            if chosen.as_ref().is_none_or(|(m, _)| bic > m.bic) {
                chosen = Some((
                    GmmModel {
                        k,
                        p,
                        pi: state.pi,
                        means: state.means,
                        covariances: state.covs,
                        family,
                        loglik: state.loglik,
                        bic,
                    },
                    state.resp,
                ));
            }
        }
    }

    let (model, resp) =
        chosen.ok_or_else(|| Error::Numerical("every mixture start collapsed".into()))?;
    let labels = map_labels(&resp, n, k);
    Ok((model, labels))
}

/// Runs a single randomly initialized EM start for one covariance family and
/// returns the log-likelihood after every E-step, for convergence audits.
/// Collapse-triggered re-initializations restart the trace.
pub fn gmm_loglik_trace(
    x: &Embedding,
    k: usize,
    family: CovarianceFamily,
    rng: &mut impl Rng,
    tol: f64,
    max_iter: usize,
    reg: f64,
) -> Result<Vec<f64>> {
    let n = x.n();
    let p = x.p();
    if k < 1 || n <= k * p {
        return Err(Error::InvalidInput(format!(
            "{n} points cannot support {k} components in {p} dimensions"
        )));
    }
    if max_iter == 0 || !(tol > 0.0) || !(reg > 0.0) {
        return Err(Error::InvalidInput("control parameters must be positive".into()));
    }
    let pooled = sample_covariance(x);
    let trace: f64 = (0..p).map(|d| pooled[d * p + d]).sum();
    if !(trace > 0.0) {
        return Err(Error::Numerical("data has zero variance".into()));
    }
    let ridge = reg * trace / p as f64;
    let mut lls = Vec::new();
    em_run(x, k, family, rng, tol, max_iter, ridge, &pooled, Some(&mut lls))
        .ok_or_else(|| Error::Numerical("every mixture start collapsed".into()))?;
    Ok(lls)
}

/// One multi-attempt EM run; `None` when every re-initialization collapsed.
/// When `ll_trace` is given it receives the log-likelihood after every
/// E-step; a re-initialization resets it.
#[allow(clippy::too_many_arguments)]
fn em_run(
    x: &Embedding,
    k: usize,
    family: CovarianceFamily,
    rng: &mut impl Rng,
    tol: f64,
    max_iter: usize,
    ridge: f64,
    pooled: &[f64],
    mut ll_trace: Option<&mut Vec<f64>>,
) -> Option<EmState> {
    let n = x.n();
    let p = x.p();

    'attempt: for _ in 0..MAX_REINIT {
        if let Some(trace) = ll_trace.as_deref_mut() {
            trace.clear();
        }
        let init = rand::seq::index::sample(rng, n, k);
        let mut means = vec![0.0f64; k * p];
        for (c, idx) in init.into_iter().enumerate() {
            means[c * p..(c + 1) * p].copy_from_slice(x.point(idx));
        }
        let mut pi = vec![1.0 / k as f64; k];
        let mut covs = vec![shape_covariance(family, pooled, p, ridge); k];

        let mut resp = vec![0.0f64; n * k];
        let mut loglik = f64::NEG_INFINITY;
        for _ in 0..max_iter {
            // E-step.
            let mut chols = Vec::with_capacity(k);
            for cov in &covs {
                match cholesky(cov, p) {
                    Ok(c) => chols.push(c),
                    Err(_) => continue 'attempt,
                }
            }
            let mut ll = 0.0;
            let mut scores = vec![0.0f64; k];
            for i in 0..n {
                for c in 0..k {
                    scores[c] = pi[c].ln()
                        + log_gaussian(x.point(i), &means[c * p..(c + 1) * p], &chols[c], p);
                }
                let lse = log_sum_exp(&scores);
                ll += lse;
                for c in 0..k {
                    resp[i * k + c] = (scores[c] - lse).exp();
                }
            }
            if let Some(trace) = ll_trace.as_deref_mut() {
                trace.push(ll);
            }
            // The ridge shifts the M-step off the exact Q maximizer, so the
            // guarantee is monotone only up to an O(ridge) wobble.
            assert!(
                loglik == f64::NEG_INFINITY || ll >= loglik - 1e-6 * loglik.abs().max(1.0),
                "log-likelihood dropped from {loglik} to {ll}"
            );
            let done = loglik != f64::NEG_INFINITY
                && (ll - loglik).abs() / ll.abs().max(1.0) < tol;
            loglik = ll;
            if done {
                break;
            }

            // M-step.
            let mut mass = vec![0.0f64; k];
            for i in 0..n {
                for c in 0..k {
                    mass[c] += resp[i * k + c];
                }
            }
            if mass.iter().any(|&m| m < COLLAPSE_FRACTION * n as f64) {
                continue 'attempt;
            }
            for c in 0..k {
                pi[c] = mass[c] / n as f64;
                for d in 0..p {
                    means[c * p + d] = 0.0;
                }
            }
            for i in 0..n {
                for c in 0..k {
                    let r = resp[i * k + c];
                    for d in 0..p {
                        means[c * p + d] += r * x.get(i, d);
                    }
                }
            }
            for c in 0..k {
                for d in 0..p {
                    means[c * p + d] /= mass[c];
                }
            }
            update_covariances(x, family, &resp, &mass, &means, &mut covs, ridge);
        }

        return Some(EmState { pi, means, covs, loglik, resp });
    }
    None
}

/// Initial covariance with the family's structure, built from the pooled
/// sample covariance.
fn shape_covariance(family: CovarianceFamily, pooled: &[f64], p: usize, ridge: f64) -> Vec<f64> {
    let mut cov = vec![0.0f64; p * p];
    match family {
        CovarianceFamily::SphericalEqual | CovarianceFamily::SphericalVarying => {
            let avg = (0..p).map(|d| pooled[d * p + d]).sum::<f64>() / p as f64;
            for d in 0..p {
                cov[d * p + d] = avg + ridge;
            }
        }
        CovarianceFamily::FullEqual | CovarianceFamily::FullVarying => {
            cov.copy_from_slice(pooled);
            for d in 0..p {
                cov[d * p + d] += ridge;
            }
        }
    }
    cov
}

fn update_covariances(
    x: &Embedding,
    family: CovarianceFamily,
    resp: &[f64],
    mass: &[f64],
    means: &[f64],
    covs: &mut [Vec<f64>],
    ridge: f64,
) {
    let n = x.n();
    let p = x.p();
    let k = covs.len();
    match family {
        CovarianceFamily::SphericalVarying | CovarianceFamily::SphericalEqual => {
            let mut ssq = vec![0.0f64; k];
            for i in 0..n {
                for c in 0..k {
                    let mut s = 0.0;
                    for d in 0..p {
                        let diff = x.get(i, d) - means[c * p + d];
                        s += diff * diff;
                    }
                    ssq[c] += resp[i * k + c] * s;
                }
            }
            if family == CovarianceFamily::SphericalVarying {
                for c in 0..k {
                    let var = ssq[c] / (mass[c] * p as f64) + ridge;
                    set_spherical(&mut covs[c], p, var);
                }
            } else {
                let var = ssq.iter().sum::<f64>() / (n as f64 * p as f64) + ridge;
                for cov in covs.iter_mut() {
                    set_spherical(cov, p, var);
                }
            }
        }
        CovarianceFamily::FullVarying | CovarianceFamily::FullEqual => {
            let mut scatter = vec![0.0f64; k * p * p];
            for i in 0..n {
                for c in 0..k {
                    let r = resp[i * k + c];
                    for a in 0..p {
                        let da = x.get(i, a) - means[c * p + a];
                        for b in 0..p {
                            let db = x.get(i, b) - means[c * p + b];
                            scatter[c * p * p + a * p + b] += r * da * db;
                        }
                    }
                }
            }
            if family == CovarianceFamily::FullVarying {
                for c in 0..k {
                    for a in 0..p {
                        for b in 0..p {
                            covs[c][a * p + b] = scatter[c * p * p + a * p + b] / mass[c];
                        }
                        covs[c][a * p + a] += ridge;
                    }
                }
            } else {
                let mut pooled = vec![0.0f64; p * p];
                for c in 0..k {
                    for e in 0..p * p {
                        pooled[e] += scatter[c * p * p + e];
                    }
                }
                for v in &mut pooled {
                    *v /= n as f64;
                }
                for d in 0..p {
                    pooled[d * p + d] += ridge;
                }
                for cov in covs.iter_mut() {
                    cov.copy_from_slice(&pooled);
                }
            }
        }
    }
}

fn set_spherical(cov: &mut [f64], p: usize, var: f64) {
    for v in cov.iter_mut() {
        *v = 0.0;
    }
    for d in 0..p {
        cov[d * p + d] = var;
    }
}

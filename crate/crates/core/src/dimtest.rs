//! Test statistics for the signal dimension, the asymptotic tests built on the limiting
//! mixture law, and sequential estimation of the dimension.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_test_fit, BootstrapConfig};
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::nulldist::{chisq_survival, mixture_survival, NullMixture};
use crate::scatter::{fobi_fit, select_noise_indices, sigma1, FobiDecomposition, Sigma1Mode};

/// `σ₂` of the limiting law.
pub const SIGMA2: f64 = 4.0;

/// Test statistic `T_k` split into its variance and mean parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticBundle {
    pub k: usize,
    pub n: usize,
    pub p: usize,
    /// Mean squared deviation of the selected eigenvalues from `p + 2`.
    pub t_k: f64,
    /// Variance of the selected eigenvalues (divisor `p − k`).
    pub t_k1: f64,
    /// Squared deviation of their mean from `p + 2`.
    pub t_k2: f64,
    /// `n (p − k) T_k`.
    pub scaled: f64,
}

impl StatisticBundle {
    fn scale(&self) -> f64 {
        (self.n * (self.p - self.k)) as f64
    }

    /// `n(p−k) T_{k,1} / (2σ₁)`, asymptotically `χ²_m`.
    pub fn standardized_variance(&self, sigma1: f64) -> f64 {
        self.scale() * self.t_k1 / (2.0 * sigma1)
    }

    /// `n(p−k) T_{k,2} / (2σ₁ + 4(p−k))`, asymptotically `χ²₁`.
    pub fn standardized_mean(&self, sigma1: f64) -> f64 {
        self.scale() * self.t_k2 / (2.0 * sigma1 + SIGMA2 * (self.p - self.k) as f64)
    }
}

/// Degrees of freedom `(p−k−1)(p−k+2)/2` of the variance part.
pub fn variance_df(p: usize, k: usize) -> u32 {
    let j = p - k;
    ((j - 1) * (j + 2) / 2) as u32
}

/// Statistics from a sorted eigenvalue vector, using eigen-selection for the noise basis.
pub fn statistics_from_eigenvalues(d: &[f64], n: usize, k: usize) -> Result<StatisticBundle> {
    let p = d.len();
    let selected = select_noise_indices(d, k)?;
    let target = (p + 2) as f64;
    let dev: Vec<f64> = selected.iter().map(|&i| d[i] - target).collect();
    let count = dev.len() as f64;
    let t_k = dev.iter().map(|e| e * e).sum::<f64>() / count;
    let mean_dev = dev.iter().sum::<f64>() / count;
    let t_k1 = dev.iter().map(|e| (e - mean_dev).powi(2)).sum::<f64>() / count;
    let t_k2 = mean_dev * mean_dev;
    Ok(StatisticBundle {
        k,
        n,
        p,
        t_k,
        t_k1,
        t_k2,
        scaled: (n * (p - k)) as f64 * t_k,
    })
}

/// `T_k`, `T_{k,1}` and `T_{k,2}` of a fitted model.
///
/// The minimizing noise basis is taken to be the `p − k` eigenvectors of `R̂` whose
/// eigenvalues lie closest to `p + 2`. `Û_kᵀ R̂ Û_k` is then diagonal, so all three
/// statistics are functions of the selected eigenvalues only.
pub fn statistics(fit: &FobiDecomposition, k: usize) -> Result<StatisticBundle> {
    statistics_from_eigenvalues(&fit.d, fit.n, k)
}

/// Mixture law `2σ₁·χ²_m + (2σ₁ + 4(p−k))·χ²₁` of the scaled statistic under `H₀,k`.
pub fn null_mixture_for(p: usize, k: usize, sigma1: f64) -> Result<NullMixture> {
    if k >= p {
        return Err(Error::invalid(format!("k must be below p = {p}, got {k}")));
    }
    if sigma1.is_nan() || sigma1 <= 0.0 || sigma1.is_infinite() {
        return Err(Error::invalid(format!(
            "sigma1 must be positive, got {sigma1}"
        )));
    }
    NullMixture::new(
        2.0 * sigma1,
        variance_df(p, k),
        2.0 * sigma1 + SIGMA2 * (p - k) as f64,
    )
}

/// Test procedure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// `n(p−k)T_k` against the mixture law.
    #[default]
    AsymptoticCombined,
    /// Standardized variance part against `χ²_m`.
    AsymptoticVariance,
    /// Standardized mean part against `χ²₁`.
    AsymptoticMean,
    /// Sum of both standardized parts against `χ²_{m+1}`.
    AsymptoticSum,
    /// Resampling under the null.
    Bootstrap,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::AsymptoticCombined,
        Method::AsymptoticVariance,
        Method::AsymptoticMean,
        Method::AsymptoticSum,
        Method::Bootstrap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::AsymptoticCombined => "asymptotic-combined",
            Method::AsymptoticVariance => "asymptotic-variance",
            Method::AsymptoticMean => "asymptotic-mean",
            Method::AsymptoticSum => "asymptotic-sum",
            Method::Bootstrap => "bootstrap",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Method::AsymptoticCombined => "asy",
            Method::AsymptoticVariance => "asy-var",
            Method::AsymptoticMean => "asy-mean",
            Method::AsymptoticSum => "asy-sum",
            Method::Bootstrap => "boot",
        }
    }

    pub fn is_asymptotic(self) -> bool {
        self != Method::Bootstrap
    }

    /// Checks that the method is defined for `H₀,k` with `p` variables.
    pub fn validate(self, p: usize, k: usize) -> Result<()> {
        if k >= p {
            return Err(Error::invalid(format!(
                "k must satisfy 0 <= k <= p - 1 = {}, got {k}",
                p.saturating_sub(1)
            )));
        }
        if self == Method::AsymptoticVariance && variance_df(p, k) == 0 {
            return Err(Error::invalid(
                "the variance-part test has zero degrees of freedom when k = p - 1",
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || m.short_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method '{s}' (expected asy, asy-var, asy-mean, asy-sum or boot)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Warning {
    /// σ̂₁ fell below the floor and was clamped for the p-value.
    Sigma1Clamped,
    /// Some bootstrap replicates had to be redrawn after a degenerate refit.
    BootstrapRedraws,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Accept,
}

/// Outcome of one test of `H₀,k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub k: usize,
    pub method: Method,
    /// Unscaled statistic: `T_k`, or the part of it the method uses.
    pub statistic: f64,
    /// Value compared with the reference law (for the bootstrap, `n(p−k)T_k`).
    pub scaled_statistic: f64,
    pub p_value: f64,
    /// Raw σ̂₁ of the data.
    pub sigma1: f64,
    pub mixture: Option<NullMixture>,
    pub df: Option<u32>,
    pub n: usize,
    pub p: usize,
    pub warnings: Vec<Warning>,
}

impl TestResult {
    /// Rejects `H₀,k` when the p-value does not exceed `alpha`.
    pub fn decision(&self, alpha: f64) -> Decision {
        if self.p_value <= alpha {
            Decision::Reject
        } else {
            Decision::Accept
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.decision(alpha) == Decision::Reject
    }
}

/// Asymptotic test of `H₀,k` on an existing fit of `x`.
pub fn asymptotic_test_fit(
    fit: &FobiDecomposition,
    x: &DataMatrix,
    k: usize,
    method: Method,
    sigma1_mode: Sigma1Mode,
) -> Result<TestResult> {
    let p = fit.p();
    if !method.is_asymptotic() {
        return Err(Error::invalid("asymptotic_test needs an asymptotic method"));
    }
    method.validate(p, k)?;
    let stats = statistics(fit, k)?;
    let s1 = sigma1(fit, x, sigma1_mode)?;
    let sig = s1.effective;
    let m = variance_df(p, k);
    let mut result = TestResult {
        k,
        method,
        statistic: 0.0,
        scaled_statistic: 0.0,
        p_value: 1.0,
        sigma1: s1.value,
        mixture: None,
        df: None,
        n: fit.n,
        p,
        warnings: Vec::new(),
    };
    if s1.clamped {
        result.warnings.push(Warning::Sigma1Clamped);
    }
    match method {
        Method::AsymptoticCombined => {
            let mix = null_mixture_for(p, k, sig)?;
            result.statistic = stats.t_k;
            result.scaled_statistic = stats.scaled;
            result.p_value = mixture_survival(&mix, stats.scaled)?;
            result.mixture = Some(mix);
        }
        Method::AsymptoticVariance => {
            result.statistic = stats.t_k1;
            result.scaled_statistic = stats.standardized_variance(sig);
            result.p_value = chisq_survival(m, result.scaled_statistic)?;
            result.df = Some(m);
        }
        Method::AsymptoticMean => {
            result.statistic = stats.t_k2;
            result.scaled_statistic = stats.standardized_mean(sig);
            result.p_value = chisq_survival(1, result.scaled_statistic)?;
            result.df = Some(1);
        }
        Method::AsymptoticSum => {
            result.statistic = stats.t_k;
            result.scaled_statistic =
                stats.standardized_variance(sig) + stats.standardized_mean(sig);
            result.p_value = chisq_survival(m + 1, result.scaled_statistic)?;
            result.df = Some(m + 1);
        }
        Method::Bootstrap => unreachable!(),
    }
    Ok(result)
}

/// Asymptotic test of `H₀,k`.
pub fn asymptotic_test(
    x: &DataMatrix,
    k: usize,
    method: Method,
    sigma1_mode: Sigma1Mode,
) -> Result<TestResult> {
    method.validate(x.p(), k)?;
    let fit = fobi_fit(x)?;
    asymptotic_test_fit(&fit, x, k, method, sigma1_mode)
}

/// Everything needed to run one test, asymptotic or bootstrap.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestConfig {
    pub method: Method,
    pub sigma1_mode: Sigma1Mode,
    pub bootstrap: BootstrapConfig,
}

/// Runs the configured test on an existing fit of `x`, inside the current thread pool.
pub fn run_test_fit(
    fit: &FobiDecomposition,
    x: &DataMatrix,
    k: usize,
    cfg: &TestConfig,
) -> Result<TestResult> {
    match cfg.method {
        Method::Bootstrap => bootstrap_test_fit(x, fit, k, &cfg.bootstrap, cfg.sigma1_mode),
        m => asymptotic_test_fit(fit, x, k, m, cfg.sigma1_mode),
    }
}

/// Runs the configured test of `H₀,k` on `x`.
pub fn run_test(x: &DataMatrix, k: usize, cfg: &TestConfig) -> Result<TestResult> {
    cfg.method.validate(x.p(), k)?;
    let fit = fobi_fit(x)?;
    crate::with_workers(cfg.bootstrap.parallel_workers, || {
        run_test_fit(&fit, x, k, cfg)
    })
}

/// Threshold sequence `c_{k,n}` with `c → ∞` and `c/n → 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `c_{k,n} = √n`.
    #[default]
    SqrtN,
    /// `c_{k,n} = ln n`.
    LogN,
    /// `c_{k,n} = n^e` for a fixed `0 < e < 1`.
    Power(f64),
}

impl ThresholdRule {
    pub fn threshold(&self, n: usize, _k: usize) -> f64 {
        let n = n as f64;
        match *self {
            ThresholdRule::SqrtN => n.sqrt(),
            ThresholdRule::LogN => n.ln(),
            ThresholdRule::Power(e) => n.powf(e),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Power(e) if !(e > 0.0 && e < 1.0) => Err(Error::invalid(format!(
                "threshold exponent must lie in (0, 1), got {e}"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let rule = match s.as_str() {
            "sqrt" | "sqrt-n" => ThresholdRule::SqrtN,
            "log" | "log-n" => ThresholdRule::LogN,
            other => match other.strip_prefix("pow:") {
                Some(e) => ThresholdRule::Power(
                    e.parse()
                        .map_err(|_| Error::invalid(format!("bad threshold exponent '{e}'")))?,
                ),
                None => {
                    return Err(Error::invalid(format!(
                        "unknown threshold rule '{other}' (expected sqrt, log or pow:<e>)"
                    )))
                }
            },
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// How the sequential estimator decides that `H₀,k` is accepted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateRule {
    /// First `k` whose test does not reject at level `α`.
    FixedAlpha(f64),
    /// First `k` with `n(p−k)T_k < c_{k,n}`.
    ThresholdSequence(ThresholdRule),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub q_hat: usize,
    pub rule: EstimateRule,
    /// One entry per tested `k`, in testing order.
    pub trail: Vec<TestResult>,
}

/// Index of the first p-value above `alpha`, or `p_values.len()` if none is.
pub fn first_acceptance(p_values: &[f64], alpha: f64) -> usize {
    p_values
        .iter()
        .position(|&pv| pv > alpha)
        .unwrap_or(p_values.len())
}

/// Estimates the signal dimension by testing `k = 0, 1, …, p − 1` in turn and stopping at
/// the first accepted hypothesis; returns `p` when every hypothesis is rejected.
///
/// Under [`EstimateRule::ThresholdSequence`] the trail holds asymptotic combined tests and
/// `cfg.method` is not used.
pub fn estimate_q(x: &DataMatrix, rule: EstimateRule, cfg: &TestConfig) -> Result<QEstimate> {
    let p = x.p();
    match rule {
        EstimateRule::FixedAlpha(alpha) if !(alpha > 0.0 && alpha < 1.0) => {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        EstimateRule::ThresholdSequence(t) => t.validate()?,
        _ => {}
    }
    let fit = fobi_fit(x)?;
    crate::with_workers(cfg.bootstrap.parallel_workers, || {
        let mut trail = Vec::with_capacity(p);
        for k in 0..p {
            let accepted = match rule {
                EstimateRule::FixedAlpha(alpha) => {
                    let mut cfg_k = cfg.clone();
                    if cfg.method == Method::AsymptoticVariance && variance_df(p, k) == 0 {
                        cfg_k.method = Method::AsymptoticMean;
                    }
                    cfg_k.bootstrap.seed =
                        crate::simulate::rng::mix_seed(cfg.bootstrap.seed, k as u64);
                    let r = run_test_fit(&fit, x, k, &cfg_k)?;
                    let accepted = !r.rejects(alpha);
                    trail.push(r);
                    accepted
                }
                EstimateRule::ThresholdSequence(t) => {
                    let r = asymptotic_test_fit(
                        &fit,
                        x,
                        k,
                        Method::AsymptoticCombined,
                        cfg.sigma1_mode,
                    )?;
                    let accepted = r.scaled_statistic < t.threshold(fit.n, k);
                    trail.push(r);
                    accepted
                }
            };
            if accepted {
                return Ok(QEstimate {
                    q_hat: k,
                    rule,
                    trail,
                });
            }
        }
        Ok(QEstimate {
            q_hat: p,
            rule,
            trail,
        })
    })
}

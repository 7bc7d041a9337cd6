//! Generative NGCA models and the rejection-rate experiment harness.

pub mod glyph;
pub mod rng;

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapConfig;
use crate::dimtest::{run_test_fit, Method, TestConfig};
use crate::error::{Error, Result};
use crate::linalg::{DataMatrix, Matrix};
use crate::scatter::{fobi_fit, Sigma1Mode};
use glyph::Glyph;
use rng::{mix_seed, Stream};

/// One independent block of signal coordinates.
#[derive(Clone, Debug)]
pub enum SignalComponent {
    /// Mixture of unit-covariance Gaussians, `Σ wⱼ N(μⱼ, I)`.
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
    },
    /// `Exp(1) − 1`.
    Exponential,
    /// `(χ²₁ − 1)/√2`.
    ChiSquare1,
    /// `√12 (U − 1/2)` with `U ~ Uniform(0, 1)`.
    Uniform,
    /// Standardized glyph point.
    Glyph(Box<Glyph>),
}

impl SignalComponent {
    pub fn dim(&self) -> usize {
        match self {
            SignalComponent::GaussianMixture { means, .. } => means.first().map_or(0, Vec::len),
            SignalComponent::Glyph(_) => 2,
            _ => 1,
        }
    }

    /// Population mean of the block.
    pub fn population_mean(&self) -> Vec<f64> {
        match self {
            SignalComponent::GaussianMixture { weights, means } => {
                let d = self.dim();
                (0..d)
                    .map(|i| weights.iter().zip(means).map(|(w, m)| w * m[i]).sum())
                    .collect()
            }
            _ => vec![0.0; self.dim()],
        }
    }

    /// Population covariance of the block. Everything except the Gaussian mixture is
    /// standardized to the identity.
    pub fn population_covariance(&self) -> Matrix {
        match self {
            SignalComponent::GaussianMixture { weights, means } => {
                let mu = self.population_mean();
                let d = self.dim();
                Matrix::from_fn(d, d, |i, j| {
                    let between: f64 = weights
                        .iter()
                        .zip(means)
                        .map(|(w, m)| w * (m[i] - mu[i]) * (m[j] - mu[j]))
                        .sum();
                    between + if i == j { 1.0 } else { 0.0 }
                })
            }
            _ => Matrix::identity(self.dim()),
        }
    }

    fn fill(&self, rng: &mut Stream, out: &mut [f64]) {
        match self {
            SignalComponent::GaussianMixture { weights, means } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut pick = weights.len() - 1;
                for (j, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = j;
                        break;
                    }
                }
                for (o, m) in out.iter_mut().zip(&means[pick]) {
                    *o = m + rng.normal();
                }
            }
            SignalComponent::Exponential => out[0] = rng.exponential() - 1.0,
            SignalComponent::ChiSquare1 => {
                out[0] = (rng.chi_square1() - 1.0) / std::f64::consts::SQRT_2
            }
            SignalComponent::Uniform => out[0] = 12f64.sqrt() * (rng.uniform() - 0.5),
            SignalComponent::Glyph(g) => {
                let pt = g.sample(rng);
                out.copy_from_slice(&pt);
            }
        }
    }
}

/// NGCA model: independent signal blocks followed by standard Gaussian noise coordinates.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub name: String,
    pub signal: Vec<SignalComponent>,
    pub gaussian_noise_dim: usize,
}

impl ModelSpec {
    /// True signal dimension `q`.
    pub fn q(&self) -> usize {
        self.signal.iter().map(SignalComponent::dim).sum()
    }

    pub fn p(&self) -> usize {
        self.q() + self.gaussian_noise_dim
    }

    /// Gaussian mixture `0.1 N₆(6e₁, I) + 0.4 N₆(4e₂, I) + 0.5 N₆(0, I)`, `p = 6`, `q = 2`.
    pub fn m1() -> Self {
        ModelSpec {
            name: "m1".into(),
            signal: vec![SignalComponent::GaussianMixture {
                weights: vec![0.1, 0.4, 0.5],
                means: vec![vec![6.0, 0.0], vec![0.0, 4.0], vec![0.0, 0.0]],
            }],
            gaussian_noise_dim: 4,
        }
    }

    /// Glyph sources μ and Ω plus `N₃(0, I)`, `p = 7`, `q = 4`.
    pub fn m2() -> Self {
        ModelSpec {
            name: "m2".into(),
            signal: vec![
                SignalComponent::Glyph(Box::new(Glyph::mu())),
                SignalComponent::Glyph(Box::new(Glyph::omega())),
            ],
            gaussian_noise_dim: 3,
        }
    }

    /// Independent exponential, `χ²₁` and uniform sources plus three `N(0, 1)`, `p = 6`, `q = 3`.
    pub fn m3() -> Self {
        ModelSpec {
            name: "m3".into(),
            signal: vec![
                SignalComponent::Exponential,
                SignalComponent::ChiSquare1,
                SignalComponent::Uniform,
            ],
            gaussian_noise_dim: 3,
        }
    }

    pub fn population_mean(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self
            .signal
            .iter()
            .flat_map(|c| c.population_mean())
            .collect();
        m.extend(std::iter::repeat_n(0.0, self.gaussian_noise_dim));
        m
    }

    pub fn population_covariance(&self) -> Matrix {
        let p = self.p();
        let mut cov = Matrix::identity(p);
        let mut offset = 0;
        for c in &self.signal {
            let block = c.population_covariance();
            for i in 0..c.dim() {
                for j in 0..c.dim() {
                    cov[(offset + i, offset + j)] = block[(i, j)];
                }
            }
            offset += c.dim();
        }
        cov
    }

    /// `n` independent rows.
    pub fn generate(&self, n: usize, rng: &mut Stream) -> DataMatrix {
        let p = self.p();
        let mut out = Matrix::zeros(n, p);
        for i in 0..n {
            let row = out.row_mut(i);
            let mut offset = 0;
            for c in &self.signal {
                let d = c.dim();
                c.fill(rng, &mut row[offset..offset + d]);
                offset += d;
            }
            rng.fill_normal(&mut row[offset..]);
        }
        DataMatrix::new(out).expect("generators produce finite values")
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m1" => Ok(ModelSpec::m1()),
            "m2" => Ok(ModelSpec::m2()),
            "m3" => Ok(ModelSpec::m3()),
            other => Err(Error::invalid(format!(
                "unknown model '{other}' (expected m1, m2 or m3)"
            ))),
        }
    }
}

pub fn gen_m1(n: usize, rng: &mut Stream) -> DataMatrix {
    ModelSpec::m1().generate(n, rng)
}

pub fn gen_m2(n: usize, rng: &mut Stream) -> DataMatrix {
    ModelSpec::m2().generate(n, rng)
}

pub fn gen_m3(n: usize, rng: &mut Stream) -> DataMatrix {
    ModelSpec::m3().generate(n, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub k: usize,
    pub method: Method,
    pub rejections: usize,
    /// Repetitions that completed without error.
    pub valid: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: String,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub replicates: usize,
    pub entries: Vec<RateEntry>,
    /// Repetitions excluded because a fit or a test failed.
    pub failures: usize,
    pub wall_time_secs: f64,
}

pub const REPORT_CSV_HEADER: &str = "model,n,reps,k,method,alpha,rate";

impl ExperimentReport {
    pub fn rate(&self, k: usize, method: Method) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.k == k && e.method == method)
            .map(|e| e.rate)
    }

    /// CSV with columns `model,n,reps,k,method,alpha,rate`; identical for identical runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.model, self.n, self.reps, e.k, e.method, self.alpha, e.rate
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Experiment parameters besides the model.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub reps: usize,
    pub ks: Vec<usize>,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub sigma1_mode: Sigma1Mode,
    /// Replicate count and worker count; its seed is ignored in favour of per-test seeds
    /// derived from `seed`.
    pub bootstrap: BootstrapConfig,
    pub seed: u64,
}

/// Rejection rates of every `(k, method)` pair over `reps` simulated datasets.
///
/// Repetition `r` draws its data from stream `r` of `seed`, and its bootstrap tests use seeds
/// derived from `(seed, r, k)`, so the report does not depend on the worker count.
pub fn run_experiment(model: &ModelSpec, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let p = model.p();
    if cfg.reps == 0 {
        return Err(Error::invalid(
            "an experiment needs at least one repetition",
        ));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {}",
            cfg.alpha
        )));
    }
    if cfg.n <= p {
        return Err(Error::TooFewObservations { n: cfg.n, p });
    }
    if cfg.ks.is_empty() || cfg.methods.is_empty() {
        return Err(Error::invalid(
            "an experiment needs at least one k and one method",
        ));
    }
    let pairs: Vec<(usize, Method)> = cfg
        .ks
        .iter()
        .flat_map(|&k| cfg.methods.iter().map(move |&m| (k, m)))
        .collect();
    for &(k, m) in &pairs {
        m.validate(p, k)?;
    }

    let start = Instant::now();
    let outcomes: Vec<Option<Vec<bool>>> =
        crate::with_workers(cfg.bootstrap.parallel_workers, || {
            (0..cfg.reps)
                .into_par_iter()
                .map(|r| run_repetition(model, cfg, &pairs, r).ok())
                .collect()
        });

    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let valid = cfg.reps - failures;
    if valid == 0 {
        return Err(Error::invalid("every repetition of the experiment failed"));
    }
    let entries = pairs
        .iter()
        .enumerate()
        .map(|(idx, &(k, method))| {
            let rejections = outcomes.iter().flatten().filter(|o| o[idx]).count();
            RateEntry {
                k,
                method,
                rejections,
                valid,
                rate: rejections as f64 / valid as f64,
            }
        })
        .collect();
    Ok(ExperimentReport {
        model: model.name.clone(),
        n: cfg.n,
        reps: cfg.reps,
        alpha: cfg.alpha,
        seed: cfg.seed,
        replicates: cfg.bootstrap.replicates,
        entries,
        failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

fn run_repetition(
    model: &ModelSpec,
    cfg: &ExperimentConfig,
    pairs: &[(usize, Method)],
    r: usize,
) -> Result<Vec<bool>> {
    let mut rng = Stream::new(cfg.seed, r as u64);
    let x = model.generate(cfg.n, &mut rng);
    let fit = fobi_fit(&x)?;
    let rep_seed = mix_seed(cfg.seed, r as u64);
    pairs
        .iter()
        .map(|&(k, method)| {
            let test = TestConfig {
                method,
                sigma1_mode: cfg.sigma1_mode,
                bootstrap: BootstrapConfig {
                    replicates: cfg.bootstrap.replicates,
                    seed: mix_seed(rep_seed, k as u64),
                    parallel_workers: None,
                },
            };
            Ok(run_test_fit(&fit, &x, k, &test)?.rejects(cfg.alpha))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::{cov_mle, sigma1_hat_ica};

    #[test]
    fn model_dimensions() {
        assert_eq!((ModelSpec::m1().p(), ModelSpec::m1().q()), (6, 2));
        assert_eq!((ModelSpec::m2().p(), ModelSpec::m2().q()), (7, 4));
        assert_eq!((ModelSpec::m3().p(), ModelSpec::m3().q()), (6, 3));
        let mut rng = Stream::new(0, 0);
        assert_eq!(gen_m2(10, &mut rng).p(), 7);
        assert!("m4".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn empirical_moments_match_population() {
        let n = 100_000;
        for model in [ModelSpec::m1(), ModelSpec::m2(), ModelSpec::m3()] {
            let mut rng = Stream::new(12, 0);
            let x = model.generate(n, &mut rng);
            let mean = x.column_means();
            let cov = cov_mle(&x).unwrap();
            let pop_mean = model.population_mean();
            let pop_cov = model.population_covariance();
            for i in 0..model.p() {
                let se = (pop_cov[(i, i)] / n as f64).sqrt();
                assert!(
                    (mean[i] - pop_mean[i]).abs() < 5.0 * se,
                    "{} mean {i}",
                    model.name
                );
                for j in 0..model.p() {
                    // sd of a sample covariance entry is at most a few σᵢσⱼ/√n for these laws
                    let scale = (pop_cov[(i, i)] * pop_cov[(j, j)]).sqrt();
                    let tol = 5.0 * 2.5 * scale / (n as f64).sqrt();
                    assert!(
                        (cov.get(i, j) - pop_cov[(i, j)]).abs() < tol,
                        "{} cov ({i},{j}) {} vs {}",
                        model.name,
                        cov.get(i, j),
                        pop_cov[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn m1_component_counts() {
        let n = 100_000;
        let mut rng = Stream::new(3, 0);
        let x = gen_m1(n, &mut rng);
        // the component is recoverable from the coordinates only statistically; count the
        // mixture draws directly instead
        let mut rng = Stream::new(3, 0);
        let mut counts = [0usize; 3];
        let model = ModelSpec::m1();
        for _ in 0..n {
            let u = rng.uniform();
            let c = if u < 0.1 {
                0
            } else if u < 0.5 {
                1
            } else {
                2
            };
            counts[c] += 1;
            let mut rest = [0.0; 6];
            rng.normal();
            rng.normal();
            rng.fill_normal(&mut rest[2..]);
        }
        assert_eq!(model.generate(1, &mut Stream::new(3, 0)).row(0), x.row(0));
        for (c, w) in counts.iter().zip([0.1, 0.4, 0.5]) {
            let se = (n as f64 * w * (1.0 - w)).sqrt();
            assert!((*c as f64 - n as f64 * w).abs() < 4.0 * se);
        }
        // coordinates 3..6 are pure N(0, 1)
        for j in 2..6 {
            let col = x.as_matrix().column(j);
            let m2 = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / n as f64;
            assert!((m4 / (m2 * m2) - 3.0).abs() < 0.1);
        }
    }

    #[test]
    fn m3_kurtoses_and_sigma1() {
        let n = 1_000_000;
        let mut rng = Stream::new(6, 0);
        let x = gen_m3(n, &mut rng);
        // (μ₄, μ₈) of the standardized exponential, χ²₁ and uniform laws; the SE of a
        // sample fourth moment is √((μ₈ − μ₄²)/n)
        let targets = [(9.0, 14_833.0_f64), (15.0, 74_417.0), (1.8, 9.0)];
        for (j, (k4, m8)) in targets.iter().enumerate() {
            let col = x.as_matrix().column(j);
            let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / n as f64;
            let se = ((m8 - k4 * k4) / n as f64).sqrt();
            assert!((m4 - k4).abs() < 5.0 * se, "column {j}: {m4}");
        }
        let sub = DataMatrix::new(Matrix::from_fn(100_000, 6, |i, j| x.row(i)[j])).unwrap();
        let fit = fobi_fit(&sub).unwrap();
        let s = sigma1_hat_ica(&fit, &sub).unwrap().value;
        assert!((s - 36.8).abs() < 0.02 * 36.8, "{s}");
    }

    #[test]
    fn glyph_blocks_are_independent() {
        let n = 50_000;
        let mut rng = Stream::new(19, 0);
        let x = gen_m2(n, &mut rng);
        let cov = cov_mle(&x).unwrap();
        let tol = 5.0 / (n as f64).sqrt();
        for i in 0..2 {
            for j in 2..4 {
                assert!(cov.get(i, j).abs() < tol);
            }
        }
    }

    fn small_config(reps: usize, workers: Option<usize>) -> ExperimentConfig {
        ExperimentConfig {
            n: 300,
            reps,
            ks: vec![2, 3],
            methods: vec![Method::AsymptoticCombined, Method::Bootstrap],
            alpha: 0.05,
            sigma1_mode: Sigma1Mode::Ngca,
            bootstrap: BootstrapConfig {
                replicates: 20,
                seed: 0,
                parallel_workers: workers,
            },
            seed: 2024,
        }
    }

    #[test]
    fn single_repetition_rates_are_binary() {
        let report = run_experiment(&ModelSpec::m3(), &small_config(1, None)).unwrap();
        assert_eq!(report.failures, 0);
        for e in &report.entries {
            assert!(e.rate == 0.0 || e.rate == 1.0);
        }
    }

    #[test]
    fn experiment_determinism_across_workers() {
        let a = run_experiment(&ModelSpec::m3(), &small_config(6, Some(1))).unwrap();
        let b = run_experiment(&ModelSpec::m3(), &small_config(6, Some(3))).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_csv().lines().next(), Some(REPORT_CSV_HEADER));
        assert_eq!(a.to_csv().lines().count(), 5);
    }

    #[test]
    fn experiment_validation() {
        let mut cfg = small_config(2, None);
        cfg.ks = vec![6];
        assert!(run_experiment(&ModelSpec::m3(), &cfg).is_err());
        let mut cfg = small_config(2, None);
        cfg.methods = vec![Method::AsymptoticVariance];
        cfg.ks = vec![5];
        assert!(run_experiment(&ModelSpec::m3(), &cfg).is_err());
        let mut cfg = small_config(0, None);
        cfg.ks = vec![1];
        assert!(run_experiment(&ModelSpec::m3(), &cfg).is_err());
    }
}

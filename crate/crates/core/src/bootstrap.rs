//! Bootstrap test of `H₀,k`: resample the centered data, replace its estimated noise part by
//! fresh Gaussian noise so that the null holds by construction, and compare the refitted
//! statistics with the observed one.

use rayon::prelude::*;

use crate::dimtest::{statistics, Method, TestResult, Warning};
use crate::error::{Error, Result};
use crate::linalg::{center_columns, DataMatrix, Matrix, SymMatrix};
use crate::scatter::{fobi_fit, noise_basis, sigma1, FobiDecomposition, NoiseBasis, Sigma1Mode};
use crate::simulate::rng::Stream;

pub const DEFAULT_REPLICATES: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootstrapConfig {
    /// Number of bootstrap samples `M`.
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the current rayon pool.
    pub parallel_workers: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            parallel_workers: None,
        }
    }
}

/// One bootstrap sample satisfying `H₀,k`.
///
/// Rows are drawn with replacement from `xc`; each resampled row `x̃` becomes
/// `P̂_k x̃ + Ŝ₁^{1/2} Û_k o` with `o ~ N(0, I_{p−k})`.
pub fn bootstrap_null_sample(
    xc: &DataMatrix,
    basis: &NoiseBasis,
    s1_sqrt: &SymMatrix,
    rng: &mut Stream,
) -> Result<DataMatrix> {
    let injection = s1_sqrt.as_matrix().matmul(&basis.u_k);
    null_sample(xc, &basis.p_proj, &injection, rng)
}

fn null_sample(
    xc: &DataMatrix,
    p_proj: &Matrix,
    injection: &Matrix,
    rng: &mut Stream,
) -> Result<DataMatrix> {
    let (n, p) = (xc.n(), xc.p());
    let noise_dim = injection.cols();
    let mut out = Matrix::zeros(n, p);
    let mut noise = vec![0.0; noise_dim];
    for i in 0..n {
        let src = xc.row(rng.below(n));
        rng.fill_normal(&mut noise);
        let row = out.row_mut(i);
        for (a, slot) in row.iter_mut().enumerate() {
            let signal: f64 = p_proj.row(a).iter().zip(src).map(|(m, x)| m * x).sum();
            let fresh: f64 = injection
                .row(a)
                .iter()
                .zip(&noise)
                .map(|(m, o)| m * o)
                .sum();
            *slot = signal + fresh;
        }
    }
    DataMatrix::new(out)
}

/// Bootstrap p-value `(#{T*ᵢ ≥ T} + 1) / (M + 1)`.
pub fn bootstrap_p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&t| t >= observed).count();
    (exceed + 1) as f64 / (replicates.len() + 1) as f64
}

/// Bootstrap test on an existing fit, running replicates on the current rayon pool.
pub fn bootstrap_test_fit(
    x: &DataMatrix,
    fit: &FobiDecomposition,
    k: usize,
    cfg: &BootstrapConfig,
    sigma1_mode: Sigma1Mode,
) -> Result<TestResult> {
    let p = x.p();
    Method::Bootstrap.validate(p, k)?;
    if cfg.replicates == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let observed = statistics(fit, k)?;
    let xc = center_columns(x)?;
    let basis = noise_basis(fit, k)?;
    let injection = fit.s1_sqrt.as_matrix().matmul(&basis.u_k);
    let budget = 10 * cfg.replicates;

    let runs: Vec<(f64, usize)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(cfg.seed, i as u64);
            let mut attempts = 0;
            loop {
                attempts += 1;
                let sample = null_sample(&xc, &basis.p_proj, &injection, &mut rng)?;
                match fobi_fit(&sample).and_then(|f| statistics(&f, k)) {
                    Ok(s) => return Ok((s.t_k, attempts)),
                    Err(e) if e.is_numerical() && attempts < budget => continue,
                    Err(e) if e.is_numerical() => {
                        return Err(Error::ResamplingDegenerate {
                            attempts,
                            failures: attempts,
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;

    let attempts: usize = runs.iter().map(|r| r.1).sum();
    if attempts > budget {
        return Err(Error::ResamplingDegenerate {
            attempts,
            failures: attempts - cfg.replicates,
        });
    }
    let stars: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let s1 = sigma1(fit, x, sigma1_mode)?;
    let mut warnings = Vec::new();
    if s1.clamped {
        warnings.push(Warning::Sigma1Clamped);
    }
    if attempts > cfg.replicates {
        warnings.push(Warning::BootstrapRedraws);
    }
    Ok(TestResult {
        k,
        method: Method::Bootstrap,
        statistic: observed.t_k,
        scaled_statistic: observed.scaled,
        p_value: bootstrap_p_value(observed.t_k, &stars),
        sigma1: s1.value,
        mixture: None,
        df: None,
        n: x.n(),
        p,
        warnings,
    })
}

/// Bootstrap test of `H₀,k` with `cfg.replicates` null samples.
pub fn bootstrap_test(x: &DataMatrix, k: usize, cfg: &BootstrapConfig) -> Result<TestResult> {
    Method::Bootstrap.validate(x.p(), k)?;
    let fit = fobi_fit(x)?;
    crate::with_workers(cfg.parallel_workers, || {
        bootstrap_test_fit(x, &fit, k, cfg, Sigma1Mode::Ngca)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::cov_mle;
    use crate::simulate::gen_m3;

    #[test]
    fn p_value_floor_and_ceiling() {
        let stars = vec![1.0; 200];
        assert_eq!(bootstrap_p_value(5.0, &stars), 1.0 / 201.0);
        assert_eq!(bootstrap_p_value(0.0, &stars), 1.0);
        assert_eq!(bootstrap_p_value(1.0, &stars), 1.0);
    }

    #[test]
    fn full_noise_sample_is_gaussian_with_sample_covariance() {
        let mut rng = Stream::new(5, 0);
        let x = gen_m3(400, &mut rng);
        let xc = center_columns(&x).unwrap();
        let fit = fobi_fit(&xc).unwrap();
        let basis = noise_basis(&fit, 0).unwrap();
        // P̂₀ = 0, every row is pure injected noise
        assert!(basis.p_proj.max_abs_diff(&Matrix::zeros(6, 6)) < 1e-10);

        let mut big = Matrix::zeros(100_000, 6);
        let mut filled = 0;
        while filled < 100_000 {
            let s = bootstrap_null_sample(&xc, &basis, &fit.s1_sqrt, &mut rng).unwrap();
            for i in 0..s.n() {
                if filled == 100_000 {
                    break;
                }
                big.row_mut(filled).copy_from_slice(s.row(i));
                filled += 1;
            }
        }
        let cov = cov_mle(&DataMatrix::new(big).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let target = fit.s1.get(i, j);
                let scale = (fit.s1.get(i, i) * fit.s1.get(j, j)).sqrt();
                assert!((cov.get(i, j) - target).abs() < 0.05 * scale, "({i},{j})");
            }
        }
    }

    #[test]
    fn signal_part_is_preserved() {
        let mut rng = Stream::new(8, 0);
        let x = gen_m3(300, &mut rng);
        let xc = center_columns(&x).unwrap();
        let fit = fobi_fit(&xc).unwrap();
        let basis = noise_basis(&fit, 3).unwrap();
        let mut a = Stream::new(99, 1);
        let mut b = a.clone();
        let sample = bootstrap_null_sample(&xc, &basis, &fit.s1_sqrt, &mut a).unwrap();
        // replay the same index draws to recover which rows were resampled
        for i in 0..sample.n() {
            let src = xc.row(b.below(xc.n()));
            let mut skip = vec![0.0; 3];
            b.fill_normal(&mut skip);
            let ps = basis.p_proj.mul_vec(sample.row(i));
            let px = basis.p_proj.mul_vec(src);
            for (u, v) in ps.iter().zip(&px) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn null_samples_look_like_the_null() {
        use crate::dimtest::asymptotic_test_fit;
        let mut rng = Stream::new(21, 0);
        let x = gen_m3(2000, &mut rng);
        let xc = center_columns(&x).unwrap();
        let fit = fobi_fit(&xc).unwrap();
        let basis = noise_basis(&fit, 3).unwrap();
        let samples = 300;
        let rejections = (0..samples)
            .filter(|&i| {
                let mut r = Stream::new(22, i);
                let xs = bootstrap_null_sample(&xc, &basis, &fit.s1_sqrt, &mut r).unwrap();
                let fs = fobi_fit(&xs).unwrap();
                asymptotic_test_fit(&fs, &xs, 3, Method::AsymptoticCombined, Sigma1Mode::Ngca)
                    .unwrap()
                    .rejects(0.05)
            })
            .count();
        let rate = rejections as f64 / samples as f64;
        let se = (0.05f64 * 0.95 / samples as f64).sqrt();
        assert!((rate - 0.05).abs() < 3.0 * se + 0.02, "rate {rate}");
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut rng = Stream::new(1, 0);
        let x = gen_m3(300, &mut rng);
        let mut cfg = BootstrapConfig {
            replicates: 40,
            seed: 77,
            parallel_workers: Some(1),
        };
        let one = bootstrap_test(&x, 3, &cfg).unwrap();
        cfg.parallel_workers = Some(4);
        let four = bootstrap_test(&x, 3, &cfg).unwrap();
        assert_eq!(one, four);
        assert!(one.p_value >= 1.0 / 41.0 && one.p_value <= 1.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        let mut rng = Stream::new(1, 0);
        let x = gen_m3(100, &mut rng);
        let cfg = BootstrapConfig {
            replicates: 0,
            ..Default::default()
        };
        assert!(bootstrap_test(&x, 1, &cfg).is_err());
        assert!(bootstrap_test(&x, 6, &BootstrapConfig::default()).is_err());
    }
}

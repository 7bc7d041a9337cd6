//! FOBI scatter estimation: the covariance matrix, the fourth-moment scatter matrix, the
//! standardized matrix `R̂ = Ŝ₁^{-1/2} Ŝ₂ Ŝ₁^{-1/2}` and its eigendecomposition, together with
//! the noise-subspace projections and the nuisance parameter σ₁ of the limiting null law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    center_columns, check_positive_definite, spd_power, sym_eigen, DataMatrix, Matrix, SpdExponent,
    SymMatrix,
};

/// Lower bound applied to σ̂₁ before it enters a p-value computation.
pub const SIGMA1_FLOOR: f64 = 1e-6;

/// Maximum-likelihood covariance `Ŝ₁ = (1/n) Σ (xᵢ − x̄)(xᵢ − x̄)ᵀ` (divisor `n`).
pub fn cov_mle(x: &DataMatrix) -> Result<SymMatrix> {
    let xc = center_columns(x)?;
    Ok(cov_of_centered(&xc))
}

fn cov_of_centered(xc: &DataMatrix) -> SymMatrix {
    let p = xc.p();
    let mut acc = Matrix::zeros(p, p);
    for row in xc.rows() {
        for i in 0..p {
            let xi = row[i];
            for j in i..p {
                acc[(i, j)] += xi * row[j];
            }
        }
    }
    let n = xc.n() as f64;
    SymMatrix::from_upper(p, |i, j| acc[(i, j)] / n)
}

/// Squared Mahalanobis norms `rᵢ² = (xᵢ − x̄)ᵀ S⁻¹ (xᵢ − x̄)` of centered rows.
fn mahalanobis_sq(xc: &DataMatrix, s_inv: &SymMatrix) -> Vec<f64> {
    xc.rows()
        .map(|row| {
            let sx = s_inv.as_matrix().mul_vec(row);
            row.iter().zip(&sx).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn weighted_scatter(xc: &DataMatrix, weights: &[f64]) -> SymMatrix {
    let p = xc.p();
    let mut acc = Matrix::zeros(p, p);
    for (row, &w) in xc.rows().zip(weights) {
        for i in 0..p {
            let wxi = w * row[i];
            for j in i..p {
                acc[(i, j)] += wxi * row[j];
            }
        }
    }
    let n = xc.n() as f64;
    SymMatrix::from_upper(p, |i, j| acc[(i, j)] / n)
}

/// Fourth-moment scatter `Ŝ₂ = (1/n) Σ rᵢ² (xᵢ − x̄)(xᵢ − x̄)ᵀ` with `rᵢ²` measured in the
/// metric of `s1`.
pub fn fobi_scatter(x: &DataMatrix, s1: &SymMatrix) -> Result<SymMatrix> {
    if s1.dim() != x.p() {
        return Err(Error::invalid("scatter dimension does not match the data"));
    }
    let xc = center_columns(x)?;
    let s1_inv = spd_power(s1, SpdExponent::Inverse)?;
    let r2 = mahalanobis_sq(&xc, &s1_inv);
    Ok(weighted_scatter(&xc, &r2))
}

/// Fitted FOBI model of a dataset.
///
/// `u` holds the eigenvectors of `r` in the columns, matched with the descending eigenvalues
/// `d`. The unmixing matrix is `W = uᵀ · whitener`.
#[derive(Clone, Debug)]
pub struct FobiDecomposition {
    pub s1: SymMatrix,
    pub s2: SymMatrix,
    pub r: SymMatrix,
    pub d: Vec<f64>,
    pub u: Matrix,
    pub whitener: SymMatrix,
    /// `Ŝ₁^{1/2}`, from the same eigendecomposition as `whitener`.
    pub s1_sqrt: SymMatrix,
    pub mean: Vec<f64>,
    pub n: usize,
}

impl FobiDecomposition {
    pub fn p(&self) -> usize {
        self.d.len()
    }

    /// Unmixing matrix `W` with `W Ŝ₁ Wᵀ = I` and `W Ŝ₂ Wᵀ = diag(d)`.
    pub fn unmixing(&self) -> Matrix {
        self.u.transpose().matmul(self.whitener.as_matrix())
    }

    /// Estimated components `ẑᵢ = W (xᵢ − x̄)`, one row per observation.
    pub fn components(&self, x: &DataMatrix) -> Result<DataMatrix> {
        if x.p() != self.p() {
            return Err(Error::invalid("data dimension does not match the fit"));
        }
        let w_t = self.unmixing().transpose();
        let mut centered = x.as_matrix().clone();
        for i in 0..centered.rows() {
            for (v, m) in centered.row_mut(i).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        DataMatrix::new(centered.matmul(&w_t))
    }
}

/// Fits the FOBI model: `Ŝ₁`, `Ŝ₂`, `R̂` and the eigendecomposition of `R̂`.
pub fn fobi_fit(x: &DataMatrix) -> Result<FobiDecomposition> {
    let (n, p) = (x.n(), x.p());
    if n <= p {
        return Err(Error::TooFewObservations { n, p });
    }
    let mean = x.column_means();
    let xc = center_columns(x)?;
    let s1 = cov_of_centered(&xc);
    let s1_eig = sym_eigen(&s1)?;
    check_positive_definite(&s1_eig)?;
    let whitener = s1_eig.reconstruct_with(|v| 1.0 / v.sqrt());
    let s1_sqrt = s1_eig.reconstruct_with(f64::sqrt);
    let s1_inv = s1_eig.reconstruct_with(|v| 1.0 / v);

    let r2 = mahalanobis_sq(&xc, &s1_inv);
    let s2 = weighted_scatter(&xc, &r2);
    if !s2.as_matrix().is_finite() {
        return Err(Error::invalid("fourth-moment scatter overflowed"));
    }
    let r = s2.congruence(whitener.as_matrix());
    let eig = sym_eigen(&r)?;
    Ok(FobiDecomposition {
        s1,
        s2,
        r,
        d: eig.values,
        u: eig.vectors,
        whitener,
        s1_sqrt,
        mean,
        n,
    })
}

/// Selected noise basis for the hypothesis that the signal dimension is `k`.
#[derive(Clone, Debug)]
pub struct NoiseBasis {
    pub k: usize,
    /// Indices into the fit's eigenvalues of the `p − k` selected directions, in descending
    /// eigenvalue order.
    pub selected: Vec<usize>,
    /// `p × (p − k)` orthonormal columns of the fit's `u`.
    pub u_k: Matrix,
    /// `Q̂_k = Ŝ₁^{1/2} Û_k Û_kᵀ Ŝ₁^{-1/2}`. Oblique in the Euclidean metric, so not symmetric.
    pub q_proj: Matrix,
    /// `P̂_k = I − Q̂_k`.
    pub p_proj: Matrix,
}

/// Indices of the `p − k` eigenvalues closest to `p + 2` in squared deviation. Ties prefer
/// the larger eigenvalue. Returned in descending eigenvalue order (ascending index).
pub fn select_noise_indices(d: &[f64], k: usize) -> Result<Vec<usize>> {
    let p = d.len();
    if k >= p {
        return Err(Error::invalid(format!(
            "k must satisfy 0 <= k <= p - 1 = {}, got {k}",
            p.saturating_sub(1)
        )));
    }
    let target = (p + 2) as f64;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        let di = (d[i] - target).powi(2);
        let dj = (d[j] - target).powi(2);
        di.total_cmp(&dj).then(d[j].total_cmp(&d[i]))
    });
    let mut chosen: Vec<usize> = order[..p - k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn noise_basis(fit: &FobiDecomposition, k: usize) -> Result<NoiseBasis> {
    let p = fit.p();
    let selected = select_noise_indices(&fit.d, k)?;
    let u_k = fit.u.select_columns(&selected);
    let injection = fit.s1_sqrt.as_matrix().matmul(&u_k);
    let back = u_k.transpose().matmul(fit.whitener.as_matrix());
    let q_proj = injection.matmul(&back);
    let p_proj = Matrix::identity(p).sub(&q_proj);
    Ok(NoiseBasis {
        k,
        selected,
        u_k,
        q_proj,
        p_proj,
    })
}

/// σ̂₁ together with the warning raised when it had to be floored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma1Estimate {
    /// Raw estimate.
    pub value: f64,
    /// Value used in p-value computations, `max(value, SIGMA1_FLOOR)`.
    pub effective: f64,
    pub clamped: bool,
}

impl Sigma1Estimate {
    fn from_raw(value: f64) -> Self {
        let clamped = value.is_nan() || value < SIGMA1_FLOOR;
        Sigma1Estimate {
            value,
            effective: if clamped { SIGMA1_FLOOR } else { value },
            clamped,
        }
    }
}

/// Which σ₁ estimator to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma1Mode {
    /// `(1/n) Σ ‖ẑᵢ‖⁴ − p² + 8`, valid for any signal structure.
    #[default]
    Ngca,
    /// `(1/n) Σᵢ Σⱼ ẑᵢⱼ⁴ − p + 8`, assuming independent components.
    Ica,
}

impl std::str::FromStr for Sigma1Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ngca" => Ok(Sigma1Mode::Ngca),
            "ica" | "ngica" => Ok(Sigma1Mode::Ica),
            other => Err(Error::invalid(format!(
                "unknown sigma1 mode '{other}' (expected ngca or ica)"
            ))),
        }
    }
}

/// σ̂₁ from the general estimator `(1/n) Σ ‖ẑᵢ‖⁴ − p² + 8`.
pub fn sigma1_hat(fit: &FobiDecomposition, x: &DataMatrix) -> Result<Sigma1Estimate> {
    let z = fit.components(x)?;
    let p = fit.p() as f64;
    let mean_r4 = z
        .rows()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().powi(2))
        .sum::<f64>()
        / z.n() as f64;
    Ok(Sigma1Estimate::from_raw(mean_r4 - p * p + 8.0))
}

/// σ̂₁ under the independent-component model, `(1/n) Σᵢ Σⱼ ẑᵢⱼ⁴ − p + 8`.
pub fn sigma1_hat_ica(fit: &FobiDecomposition, x: &DataMatrix) -> Result<Sigma1Estimate> {
    let z = fit.components(x)?;
    let p = fit.p() as f64;
    let mean_fourth = z
        .rows()
        .map(|row| row.iter().map(|v| v.powi(4)).sum::<f64>())
        .sum::<f64>()
        / z.n() as f64;
    Ok(Sigma1Estimate::from_raw(mean_fourth - p + 8.0))
}

pub fn sigma1(fit: &FobiDecomposition, x: &DataMatrix, mode: Sigma1Mode) -> Result<Sigma1Estimate> {
    match mode {
        Sigma1Mode::Ngca => sigma1_hat(fit, x),
        Sigma1Mode::Ica => sigma1_hat_ica(fit, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::rng::Stream;

    fn three_points() -> DataMatrix {
        DataMatrix::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap()
    }

    fn gaussian(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = Stream::new(seed, 0);
        DataMatrix::new(Matrix::from_fn(n, p, |_, _| rng.normal())).unwrap()
    }

    #[test]
    fn one_dimensional_hand_computation() {
        let x = three_points();
        let s1 = cov_mle(&x).unwrap();
        assert!((s1.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        let s2 = fobi_scatter(&x, &s1).unwrap();
        assert!((s2.get(0, 0) - 1.0).abs() < 1e-14);
        let fit = fobi_fit(&x).unwrap();
        assert_eq!(fit.d.len(), 1);
        assert!((fit.d[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn identical_rows_give_zero_covariance() {
        let x = DataMatrix::from_rows(&vec![vec![1.0, 2.0]; 5]).unwrap();
        let s1 = cov_mle(&x).unwrap();
        assert!(s1.as_matrix().as_slice().iter().all(|&v| v == 0.0));
        assert!(matches!(
            fobi_fit(&x),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn too_few_observations() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            fobi_fit(&x),
            Err(Error::TooFewObservations { n: 2, p: 2 })
        ));
    }

    #[test]
    fn gaussian_covariance_and_eigenvalues() {
        let n = 20_000;
        let p = 4;
        let x = gaussian(n, p, 11);
        let s1 = cov_mle(&x).unwrap();
        assert!(s1.as_matrix().max_abs_diff(&Matrix::identity(p)) < 5.0 / (n as f64).sqrt());
        let fit = fobi_fit(&x).unwrap();
        for d in &fit.d {
            assert!((d - (p + 2) as f64).abs() < 0.35, "eigenvalue {d}");
        }
    }

    #[test]
    fn noise_basis_full_noise() {
        let x = gaussian(200, 3, 1);
        let fit = fobi_fit(&x).unwrap();
        let basis = noise_basis(&fit, 0).unwrap();
        assert_eq!(basis.u_k.cols(), 3);
        assert!(basis.q_proj.max_abs_diff(&Matrix::identity(3)) < 1e-10);
        assert!(basis.p_proj.max_abs_diff(&Matrix::zeros(3, 3)) < 1e-10);
    }

    #[test]
    fn selection_rule() {
        // p = 3, p + 2 = 5
        assert_eq!(
            select_noise_indices(&[9.0, 5.1, 4.9], 1).unwrap(),
            vec![1, 2]
        );
        assert_eq!(select_noise_indices(&[9.0, 5.1, 4.9], 2).unwrap(), vec![1]);
        // equal deviations ±1: the larger eigenvalue wins
        assert_eq!(select_noise_indices(&[6.0, 4.0, 1.0], 2).unwrap(), vec![0]);
        assert!(select_noise_indices(&[6.0, 4.0, 1.0], 3).is_err());
    }

    #[test]
    fn sigma1_rotation_invariance_and_p1_collapse() {
        let x = gaussian(500, 3, 5);
        let fit = fobi_fit(&x).unwrap();
        let via_w = sigma1_hat(&fit, &x).unwrap().value;
        let xc = center_columns(&x).unwrap();
        let white = xc.as_matrix().matmul(fit.whitener.as_matrix());
        let p = 3.0;
        let via_whitener = (0..white.rows())
            .map(|i| white.row(i).iter().map(|v| v * v).sum::<f64>().powi(2))
            .sum::<f64>()
            / 500.0
            - p * p
            + 8.0;
        assert!((via_w - via_whitener).abs() < 1e-10 * via_w.abs());

        let x1 = gaussian(300, 1, 9);
        let fit1 = fobi_fit(&x1).unwrap();
        assert_eq!(
            sigma1_hat(&fit1, &x1).unwrap().value,
            sigma1_hat_ica(&fit1, &x1).unwrap().value
        );
    }

    #[test]
    fn sigma1_gaussian_population_value() {
        // ‖z‖² ~ χ²₆ has variance 12, so σ₁ = 12 + 8 = 20
        let x = gaussian(100_000, 6, 3);
        let fit = fobi_fit(&x).unwrap();
        let s = sigma1_hat(&fit, &x).unwrap();
        assert!((s.value - 20.0).abs() < 0.6, "sigma1 {}", s.value);
        let s_ica = sigma1_hat_ica(&fit, &x).unwrap();
        assert!(
            (s_ica.value - 20.0).abs() < 0.6,
            "sigma1 ica {}",
            s_ica.value
        );
    }

    #[test]
    fn sigma1_ica_exponential_component() {
        // standardized exp(1) has fourth moment 9: σ₁ = 9 + 3(p − 1) − p + 8
        let n = 200_000;
        let p = 4;
        let mut rng = Stream::new(21, 0);
        let x = DataMatrix::new(Matrix::from_fn(n, p, |_, j| {
            if j == 0 {
                rng.exponential() - 1.0
            } else {
                rng.normal()
            }
        }))
        .unwrap();
        let fit = fobi_fit(&x).unwrap();
        let expected = 9.0 + 3.0 * (p as f64 - 1.0) - p as f64 + 8.0;
        let s = sigma1_hat_ica(&fit, &x).unwrap().value;
        assert!(
            (s - expected).abs() < 0.05 * expected,
            "sigma1 ica {s} vs {expected}"
        );
    }

    #[test]
    fn clamping_flag() {
        let s = Sigma1Estimate::from_raw(-3.0);
        assert!(s.clamped);
        assert_eq!(s.effective, SIGMA1_FLOOR);
        let ok = Sigma1Estimate::from_raw(12.0);
        assert!(!ok.clamped);
        assert_eq!(ok.effective, 12.0);
    }
}

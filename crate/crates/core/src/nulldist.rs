//! Limiting null law of the scaled statistic: chi-square survival functions and the
//! two-component weighted chi-square mixture `a·χ²_m + b·χ²₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::rng::Stream;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITERATIONS: usize = 10_000;

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma function `Q(s, x) = Γ(s, x) / Γ(s)`.
///
/// Series expansion of `P` below `x < s + 1`, Lentz continued fraction for `Q` above.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    if x < s + 1.0 {
        1.0 - gamma_p_series(s, x)
    } else {
        gamma_q_continued_fraction(s, x)
    }
}

/// Regularized lower incomplete gamma function `P(s, x)`.
pub fn gamma_p(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < s + 1.0 {
        gamma_p_series(s, x)
    } else {
        1.0 - gamma_q_continued_fraction(s, x)
    }
}

fn gamma_p_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..MAX_ITERATIONS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (s * x.ln() - x - ln_gamma(s)).exp() * sum
}

fn gamma_q_continued_fraction(s: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITERATIONS {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (s * x.ln() - x - ln_gamma(s)).exp() * h
}

/// `P(χ²_df ≥ t)` for real `df > 0`.
fn chisq_sf(df: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    gamma_q(0.5 * df, 0.5 * t).clamp(0.0, 1.0)
}

/// `P(χ²_df ≥ t)`. Negative `t` gives 1.
pub fn chisq_survival(df: u32, t: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::invalid(
            "chi-square degrees of freedom must be positive",
        ));
    }
    if t.is_nan() || t == f64::NEG_INFINITY {
        return Err(Error::invalid(format!(
            "chi-square argument must be finite, got {t}"
        )));
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(chisq_sf(df as f64, t))
}

/// Limiting law `a·χ²_m + b·χ²₁` with independent chi-square variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullMixture {
    /// Weight of the `χ²_m` term, `2σ₁`.
    pub a: f64,
    /// Degrees of freedom of the first term; zero when only one direction is tested.
    pub m: u32,
    /// Weight of the `χ²₁` term, `2σ₁ + σ₂(p − k)`.
    pub b: f64,
}

impl NullMixture {
    pub fn new(a: f64, m: u32, b: f64) -> Result<Self> {
        let mix = NullMixture { a, m, b };
        mix.validate()?;
        Ok(mix)
    }

    fn validate(&self) -> Result<()> {
        let ok_b = self.b.is_finite() && self.b > 0.0;
        let ok_a = self.m == 0 || (self.a.is_finite() && self.a > 0.0);
        if !ok_a || !ok_b {
            return Err(Error::invalid(format!(
                "mixture weights must be positive and finite (a = {}, b = {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// `E[C] = a·m + b`.
    pub fn mean(&self) -> f64 {
        self.a * self.m as f64 + self.b
    }

    /// `Var[C] = 2a²m + 2b²`.
    pub fn variance(&self) -> f64 {
        2.0 * self.a * self.a * self.m as f64 + 2.0 * self.b * self.b
    }
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(a·X + b·Y ≥ t)` for `X ~ χ²_m`, `Y ~ χ²₁` independent.
///
/// With `Y = Z²` the probability is `E[Q_m((t − bZ²)/a)]`. The integrand equals 1 for
/// `|Z| ≥ √(t/b)`, which contributes `P(χ²₁ ≥ t/b)` exactly; the rest is integrated by
/// adaptive Simpson over `z ∈ [0, √(t/b)]`.
pub fn mixture_survival(mix: &NullMixture, t: f64) -> Result<f64> {
    mix.validate()?;
    if t.is_nan() {
        return Err(Error::invalid("mixture argument is NaN"));
    }
    if t <= 0.0 {
        return Ok(1.0);
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let tail = chisq_sf(1.0, t / mix.b);
    if mix.m == 0 {
        return Ok(tail);
    }
    let (a, b, m) = (mix.a, mix.b, mix.m as f64);
    let z0 = (t / b).sqrt();
    let f = |z: f64| 2.0 * std_normal_pdf(z) * chisq_sf(m, (t - b * z * z) / a);

    const PIECES: usize = 16;
    let width = z0 / PIECES as f64;
    let mut body = 0.0;
    for i in 0..PIECES {
        let lo = i as f64 * width;
        let hi = if i + 1 == PIECES { z0 } else { lo + width };
        body += adaptive_simpson(&f, lo, hi, 1e-11 / PIECES as f64);
    }
    Ok((body + tail).clamp(0.0, 1.0))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Upper `alpha` quantile of the mixture: the `t` with `mixture_survival(t) = alpha`, by
/// bisection on `[0, E[C] + 40·sd[C]]` to an absolute tolerance of `1e-8`.
pub fn mixture_quantile(mix: &NullMixture, alpha: f64) -> Result<f64> {
    mix.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level must lie in (0, 1), got {alpha}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = mix.mean() + 40.0 * mix.variance().sqrt();
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mixture_survival(mix, mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `draws` independent Monte Carlo realizations of the mixture.
pub fn mixture_draws_mc(mix: &NullMixture, draws: usize, seed: u64) -> Result<Vec<f64>> {
    mix.validate()?;
    if draws == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one draw"));
    }
    let mut rng = Stream::new(seed, 0);
    Ok((0..draws)
        .map(|_| {
            let x: f64 = (0..mix.m).map(|_| rng.chi_square1()).sum();
            let y = rng.chi_square1();
            if mix.m == 0 {
                mix.b * y
            } else {
                mix.a * x + mix.b * y
            }
        })
        .collect())
}

/// Monte Carlo estimate of `P(C ≥ t)`.
pub fn mixture_survival_mc(mix: &NullMixture, t: f64, draws: usize, seed: u64) -> Result<f64> {
    let sample = mixture_draws_mc(mix, draws, seed)?;
    Ok(sample.iter().filter(|&&c| c >= t).count() as f64 / draws as f64)
}

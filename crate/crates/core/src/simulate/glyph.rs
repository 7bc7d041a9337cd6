//! Stroke skeletons of the letters μ and Ω, used as strongly non-Gaussian bivariate sources.
//!
//! A point is drawn by picking a stroke with probability proportional to its length, then a
//! point uniformly along it, then adding isotropic Gaussian jitter. The mean and covariance
//! of that law have closed forms, which are used to standardize the output exactly.

use std::f64::consts::PI;

use super::rng::Stream;
use crate::linalg::{spd_power, Matrix, SpdExponent, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stroke {
    Segment {
        from: [f64; 2],
        to: [f64; 2],
    },
    /// Counter-clockwise arc from angle `start` to `end` (radians, `end > start`).
    Arc {
        center: [f64; 2],
        radius: f64,
        start: f64,
        end: f64,
    },
}

impl Stroke {
    pub fn length(&self) -> f64 {
        match *self {
            Stroke::Segment { from, to } => (to[0] - from[0]).hypot(to[1] - from[1]),
            Stroke::Arc {
                radius, start, end, ..
            } => radius * (end - start),
        }
    }

    /// Point at arc-length fraction `s ∈ [0, 1]`.
    pub fn point(&self, s: f64) -> [f64; 2] {
        match *self {
            Stroke::Segment { from, to } => [
                from[0] + s * (to[0] - from[0]),
                from[1] + s * (to[1] - from[1]),
            ],
            Stroke::Arc {
                center,
                radius,
                start,
                end,
            } => {
                let th = start + s * (end - start);
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }

    /// First and second raw moments of the uniform law on the stroke.
    fn moments(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        match *self {
            Stroke::Segment { from: a, to: b } => {
                let mean = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let mut second = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        second[i][j] =
                            (a[i] * a[j] + b[i] * b[j]) / 3.0 + (a[i] * b[j] + b[i] * a[j]) / 6.0;
                    }
                }
                (mean, second)
            }
            Stroke::Arc {
                center: c,
                radius: r,
                start: a,
                end: b,
            } => {
                let l = b - a;
                let e_cos = (b.sin() - a.sin()) / l;
                let e_sin = (a.cos() - b.cos()) / l;
                let half_diff = ((2.0 * b).sin() - (2.0 * a).sin()) / (4.0 * l);
                let e_cos2 = 0.5 + half_diff;
                let e_sin2 = 0.5 - half_diff;
                let e_sc = ((2.0 * a).cos() - (2.0 * b).cos()) / (4.0 * l);
                let eu = [e_cos, e_sin];
                let euu = [[e_cos2, e_sc], [e_sc, e_sin2]];
                let mean = [c[0] + r * eu[0], c[1] + r * eu[1]];
                let mut second = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        second[i][j] =
                            c[i] * c[j] + r * (c[i] * eu[j] + eu[i] * c[j]) + r * r * euu[i][j];
                    }
                }
                (mean, second)
            }
        }
    }
}

/// A glyph with its exact population standardization.
#[derive(Clone, Debug)]
pub struct Glyph {
    pub name: &'static str,
    pub strokes: Vec<Stroke>,
    pub jitter_sd: f64,
    cumulative: Vec<f64>,
    mean: [f64; 2],
    covariance: [[f64; 2]; 2],
    /// `Σ^{-1/2}` of the unstandardized point law.
    standardizer: Matrix,
}

impl Glyph {
    /// Builds a glyph whose jitter SD is `jitter_fraction` of its height.
    pub fn new(name: &'static str, strokes: Vec<Stroke>, jitter_fraction: f64) -> Self {
        let total: f64 = strokes.iter().map(Stroke::length).sum();
        let mut acc = 0.0;
        let cumulative = strokes
            .iter()
            .map(|s| {
                acc += s.length() / total;
                acc
            })
            .collect();

        let (lo, hi) = vertical_extent(&strokes);
        let jitter_sd = jitter_fraction * (hi - lo);

        let mut mean = [0.0; 2];
        let mut second = [[0.0; 2]; 2];
        for s in &strokes {
            let w = s.length() / total;
            let (m, sm) = s.moments();
            for i in 0..2 {
                mean[i] += w * m[i];
                for j in 0..2 {
                    second[i][j] += w * sm[i][j];
                }
            }
        }
        let mut covariance = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                covariance[i][j] = second[i][j] - mean[i] * mean[j];
            }
            covariance[i][i] += jitter_sd * jitter_sd;
        }
        let cov = SymMatrix::from_upper(2, |i, j| covariance[i][j]);
        let standardizer = spd_power(&cov, SpdExponent::InvSqrt)
            .expect("glyph covariance is positive definite")
            .into_matrix();
        Glyph {
            name,
            strokes,
            jitter_sd,
            cumulative,
            mean,
            covariance,
            standardizer,
        }
    }

    /// μ: a long left stem with a descender, a short right stem, and a lower half circle
    /// joining them.
    pub fn mu() -> Self {
        Glyph::new(
            "mu",
            vec![
                Stroke::Segment {
                    from: [0.0, -0.6],
                    to: [0.0, 1.0],
                },
                Stroke::Segment {
                    from: [1.0, 0.3],
                    to: [1.0, 1.0],
                },
                Stroke::Arc {
                    center: [0.5, 0.3],
                    radius: 0.5,
                    start: PI,
                    end: 2.0 * PI,
                },
            ],
            0.02,
        )
    }

    /// Ω: a 300° circular arc open at the bottom with two horizontal feet.
    pub fn omega() -> Self {
        let center = [0.0, 0.6];
        let radius = 0.5;
        let start = -PI / 3.0;
        let end = 4.0 * PI / 3.0;
        let right = [
            center[0] + radius * start.cos(),
            center[1] + radius * start.sin(),
        ];
        let left = [
            center[0] + radius * end.cos(),
            center[1] + radius * end.sin(),
        ];
        Glyph::new(
            "omega",
            vec![
                Stroke::Arc {
                    center,
                    radius,
                    start,
                    end,
                },
                Stroke::Segment {
                    from: right,
                    to: [right[0] + 0.35, right[1]],
                },
                Stroke::Segment {
                    from: [left[0] - 0.35, left[1]],
                    to: left,
                },
            ],
            0.02,
        )
    }

    /// Population mean of the unstandardized point law.
    pub fn raw_mean(&self) -> [f64; 2] {
        self.mean
    }

    /// Population covariance of the unstandardized point law.
    pub fn raw_covariance(&self) -> [[f64; 2]; 2] {
        self.covariance
    }

    /// Unstandardized point.
    pub fn sample_raw(&self, rng: &mut Stream) -> [f64; 2] {
        let u = rng.uniform();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.strokes.len() - 1);
        let base = self.strokes[idx].point(rng.uniform());
        [
            base[0] + self.jitter_sd * rng.normal(),
            base[1] + self.jitter_sd * rng.normal(),
        ]
    }

    /// Point with zero population mean and identity population covariance.
    pub fn sample(&self, rng: &mut Stream) -> [f64; 2] {
        let raw = self.sample_raw(rng);
        let c = [raw[0] - self.mean[0], raw[1] - self.mean[1]];
        let w = &self.standardizer;
        [
            w[(0, 0)] * c[0] + w[(0, 1)] * c[1],
            w[(1, 0)] * c[0] + w[(1, 1)] * c[1],
        ]
    }
}

fn vertical_extent(strokes: &[Stroke]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in strokes {
        for i in 0..=1000 {
            let y = s.point(i as f64 / 1000.0)[1];
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    (lo, hi)
}

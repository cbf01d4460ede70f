use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::AbstractionError;

/// Per-dimension Gaussian noise truncated to `[-support, support]`.
///
/// A zero support degenerates to no noise at all.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigma: Vec<f64>,
    support: Vec<f64>,
}

impl NoiseModel {
    pub fn new(sigma: Vec<f64>, support: Vec<f64>) -> Result<Self, AbstractionError> {
        if sigma.len() != support.len() || sigma.is_empty() {
            return Err(AbstractionError::Invalid(
                "noise sigma and support must have the same non-zero length".into(),
            ));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(AbstractionError::Invalid("noise sigma must be positive".into()));
        }
        if support.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(AbstractionError::Invalid(
                "noise support must be non-negative".into(),
            ));
        }
        Ok(Self { sigma, support })
    }

    pub fn isotropic(dim: usize, sigma: f64, support: f64) -> Result<Self, AbstractionError> {
        Self::new(vec![sigma; dim], vec![support; dim])
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// Probability that `offset + noise_i` falls in `[lo, hi]` along axis `i`.
    /// Either end may be infinite.
    pub fn interval_probability(&self, i: usize, offset: f64, lo: f64, hi: f64) -> f64 {
        let w = self.support[i];
        if w == 0.0 {
            return if lo <= offset && offset < hi { 1.0 } else { 0.0 };
        }
        let s = self.sigma[i];
        let a = (lo.max(offset - w) - offset) / s;
        let b = (hi.min(offset + w) - offset) / s;
        if a >= b {
            return 0.0;
        }
        let total = phi_diff(-w / s, w / s);
        (phi_diff(a, b) / total).clamp(0.0, 1.0)
    }

    /// One draw by rejection from the untruncated Gaussian.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sigma
            .iter()
            .zip(&self.support)
            .map(|(&s, &w)| {
                if w == 0.0 {
                    return 0.0;
                }
                let normal = Normal::new(0.0, s).expect("sigma validated positive");
                loop {
                    let v: f64 = normal.sample(rng);
                    if v.abs() <= w {
                        return v;
                    }
                }
            })
            .collect()
    }
}

/// Standard normal mass on `[a, b]`, computed on the side of the origin
/// that avoids cancellation.
pub(crate) fn phi_diff(a: f64, b: f64) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    if a >= 0.0 {
        0.5 * (libm::erfc(a * r) - libm::erfc(b * r))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * r) - libm::erfc(-a * r))
    } else {
        1.0 - 0.5 * (libm::erfc(-a * r) + libm::erfc(b * r))
    }
}

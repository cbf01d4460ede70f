use super::GpError;

/// Squared-exponential covariance with a single isotropic length scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqExpKernel {
    sigma_g: f64,
    length_scale: f64,
}

impl SqExpKernel {
    pub fn new(sigma_g: f64, length_scale: f64) -> Result<Self, GpError> {
        if !(sigma_g.is_finite() && sigma_g > 0.0) {
            return Err(GpError::InvalidHyperparameter(format!(
                "sigma_g must be positive, got {sigma_g}"
            )));
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(GpError::InvalidHyperparameter(format!(
                "length_scale must be positive, got {length_scale}"
            )));
        }
        Ok(Self {
            sigma_g,
            length_scale,
        })
    }

    pub fn sigma_g(&self) -> f64 {
        self.sigma_g
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Prior variance, the kernel value at zero distance.
    pub fn variance(&self) -> f64 {
        self.sigma_g * self.sigma_g
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, GpError> {
        if x.len() != y.len() {
            return Err(GpError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.from_sq_dist(d2)
    }

    #[inline]
    pub fn from_sq_dist(&self, d2: f64) -> f64 {
        self.variance() * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

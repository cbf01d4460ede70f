use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{Dataset, GpError, Prediction, SqExpKernel};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Cholesky of `m`, or of `m + jitter * I` with jitter escalating by 10x
/// from `1e-10 * scale` up to `1e-6 * scale` when `m` is not numerically
/// positive definite.
pub(crate) fn jittered_cholesky(
    m: &DMatrix<f64>,
    scale: f64,
) -> Result<Cholesky<f64, Dyn>, GpError> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let mut factor = JITTER_START;
    loop {
        let mut a = m.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += factor * scale;
        }
        if let Some(c) = Cholesky::new(a) {
            return Ok(c);
        }
        factor *= 10.0;
        if factor > JITTER_MAX * (1.0 + 1e-9) {
            return Err(GpError::NotPositiveDefinite {
                max_jitter: JITTER_MAX * scale,
            });
        }
    }
}

pub(crate) fn gram(kernel: &SqExpKernel, a: &[&[f64]], b: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| kernel.eval_unchecked(a[i], b[j]))
}

/// Exact GP posterior shared by all output dimensions.
///
/// Every output uses the same kernel and noise, so one factorization of
/// `K + noise * I` serves all of them; only the weight columns differ.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: SqExpKernel,
    noise_variance: f64,
    inputs: Vec<Vec<f64>>,
    input_dim: usize,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DMatrix<f64>,
}

impl GpModel {
    pub fn fit(data: &Dataset, kernel: SqExpKernel, noise_variance: f64) -> Result<Self, GpError> {
        check_noise(noise_variance)?;
        let m = data.len();
        let p = data.output_dim();
        let inputs: Vec<Vec<f64>> = data.inputs().take(m).map(<[f64]>::to_vec).collect();
        if m == 0 {
            return Ok(Self {
                kernel,
                noise_variance,
                inputs,
                input_dim: data.input_dim(),
                chol: None,
                alpha: DMatrix::zeros(0, p),
            });
        }
        let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        let mut k = gram(&kernel, &refs, &refs);
        for i in 0..m {
            k[(i, i)] += noise_variance;
        }
        let chol = jittered_cholesky(&k, kernel.variance())?;
        let y = DMatrix::from_fn(m, p, |j, i| data.output(j)[i]);
        let alpha = chol.solve(&y);
        Ok(Self {
            kernel,
            noise_variance,
            inputs,
            input_dim: data.input_dim(),
            chol: Some(chol),
            alpha,
        })
    }

    pub fn kernel(&self) -> &SqExpKernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn num_samples(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_dim(&self) -> usize {
        self.alpha.ncols()
    }

    fn cross(&self, z: &[f64]) -> Result<DVector<f64>, GpError> {
        if z.len() != self.input_dim {
            return Err(GpError::DimensionMismatch {
                expected: self.input_dim,
                got: z.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|x| self.kernel.eval_unchecked(x, z)),
        ))
    }

    pub fn predict(&self, z: &[f64]) -> Result<Prediction, GpError> {
        let k = self.cross(z)?;
        let Some(chol) = &self.chol else {
            return Ok(Prediction {
                mean: vec![0.0; self.output_dim()],
                variance: self.kernel.variance(),
            });
        };
        let mean = (0..self.output_dim())
            .map(|i| k.dot(&self.alpha.column(i)))
            .collect();
        let mut w = k.clone();
        chol.l_dirty()
            .solve_lower_triangular_mut(&mut w);
        let variance = (self.kernel.variance() - w.norm_squared()).max(0.0);
        Ok(Prediction { mean, variance })
    }

    pub fn variance(&self, z: &[f64]) -> Result<f64, GpError> {
        let Some(chol) = &self.chol else {
            self.cross(z)?;
            return Ok(self.kernel.variance());
        };
        let mut w = self.cross(z)?;
        chol.l_dirty().solve_lower_triangular_mut(&mut w);
        Ok((self.kernel.variance() - w.norm_squared()).max(0.0))
    }
}

pub(crate) fn check_noise(noise_variance: f64) -> Result<(), GpError> {
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(GpError::InvalidHyperparameter(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> SqExpKernel {
        SqExpKernel::new(0.45, 1.75).unwrap()
    }

    #[test]
    fn prior_prediction() {
        let gp = GpModel::fit(&Dataset::new(2, 2), kernel(), 0.01).unwrap();
        let p = gp.predict(&[1.0, 1.0]).unwrap();
        assert_eq!(p.mean, vec![0.0, 0.0]);
        assert!((p.variance - 0.2025).abs() < 1e-15);
    }

    #[test]
    fn single_sample_closed_form() {
        let mut ds = Dataset::new(1, 1);
        ds.push(&[0.3], &[0.8]).unwrap();
        let gp = GpModel::fit(&ds, kernel(), 0.01).unwrap();
        let p = gp.predict(&[0.3]).unwrap();
        let s2 = 0.2025;
        assert!((p.mean[0] - 0.8 * s2 / (s2 + 0.01)).abs() < 1e-9);
        assert!((p.variance - (s2 - s2 * s2 / (s2 + 0.01))).abs() < 1e-9);
    }

    #[test]
    fn interpolates_with_tiny_noise() {
        let mut ds = Dataset::new(1, 1);
        for (x, y) in [(0.0, 0.1), (1.0, -0.2), (2.5, 0.3)] {
            ds.push(&[x], &[y]).unwrap();
        }
        let gp = GpModel::fit(&ds, kernel(), 1e-8).unwrap();
        let p = gp.predict(&[1.0]).unwrap();
        assert!((p.mean[0] + 0.2).abs() < 1e-5);
        assert!(p.variance < 1e-6);
    }

    #[test]
    fn duplicate_inputs_are_handled() {
        let mut ds = Dataset::new(1, 1);
        for _ in 0..4 {
            ds.push(&[1.0], &[0.5]).unwrap();
        }
        let gp = GpModel::fit(&ds, kernel(), 0.01).unwrap();
        assert!(gp.predict(&[1.0]).unwrap().variance >= 0.0);
    }

    #[test]
    fn rejects_non_positive_noise_and_bad_query() {
        assert!(GpModel::fit(&Dataset::new(1, 1), kernel(), 0.0).is_err());
        let gp = GpModel::fit(&Dataset::new(2, 1), kernel(), 0.01).unwrap();
        assert!(gp.predict(&[0.0]).is_err());
    }
}

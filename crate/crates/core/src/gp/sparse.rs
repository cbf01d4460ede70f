use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::exact::{check_noise, gram, jittered_cholesky};
use super::{Dataset, GpError, Prediction, SqExpKernel};

/// Greedy farthest-point selection of up to `eta` inputs.
///
/// Starts from the first input, then repeatedly adds the input whose
/// distance to the chosen set is largest (lowest index on ties). Stops
/// early once every remaining input coincides with a chosen one.
pub fn farthest_point_indices(inputs: &[&[f64]], eta: usize) -> Vec<usize> {
    let m = inputs.len();
    if m == 0 || eta == 0 {
        return Vec::new();
    }
    let sq = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    let mut chosen = vec![0usize];
    let mut dist: Vec<f64> = inputs.iter().map(|z| sq(z, inputs[0])).collect();
    while chosen.len() < eta {
        let (best, &d) = dist
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if d <= 0.0 {
            break;
        }
        chosen.push(best);
        for (i, z) in inputs.iter().enumerate() {
            dist[i] = dist[i].min(sq(z, inputs[best]));
        }
    }
    chosen
}

/// Variational sparse GP with inducing inputs fixed by farthest-point
/// selection and the optimal Gaussian over inducing outputs in closed form.
#[derive(Debug, Clone)]
pub struct SparseGpModel {
    kernel: SqExpKernel,
    noise_variance: f64,
    inducing: Vec<Vec<f64>>,
    // chol(K_uu)
    l_uu: Cholesky<f64, Dyn>,
    // chol(I + V V^T / noise), V = L_uu^{-1} K_uf
    l_b: Cholesky<f64, Dyn>,
    // Prediction weights: mean_i(z) = k_u(z)^T alpha[:, i]
    alpha: DMatrix<f64>,
    num_samples: usize,
}

impl SparseGpModel {
    pub fn fit(
        data: &Dataset,
        eta: usize,
        kernel: SqExpKernel,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        check_noise(noise_variance)?;
        if eta == 0 {
            return Err(GpError::InvalidHyperparameter(
                "number of inducing points must be at least 1".into(),
            ));
        }
        if data.is_empty() {
            return Err(GpError::EmptyDataset);
        }
        let refs: Vec<&[f64]> = data.inputs().collect();
        let idx = farthest_point_indices(&refs, eta);
        let inducing: Vec<Vec<f64>> = idx.iter().map(|&i| refs[i].to_vec()).collect();
        Self::fit_with_inducing(data, inducing, kernel, noise_variance)
    }

    pub fn fit_with_inducing(
        data: &Dataset,
        inducing: Vec<Vec<f64>>,
        kernel: SqExpKernel,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        check_noise(noise_variance)?;
        if inducing.is_empty() {
            return Err(GpError::InvalidHyperparameter("no inducing inputs".into()));
        }
        let m = data.len();
        let p = data.output_dim();
        let u_refs: Vec<&[f64]> = inducing.iter().map(Vec::as_slice).collect();
        let x_refs: Vec<&[f64]> = data.inputs().take(m).collect();
        let mut k_uu = gram(&kernel, &u_refs, &u_refs);
        // Inducing Gram matrices are badly conditioned; always regularize.
        for i in 0..k_uu.nrows() {
            k_uu[(i, i)] += 1e-10 * kernel.variance();
        }
        let l_uu = jittered_cholesky(&k_uu, kernel.variance())?;
        let mut v = gram(&kernel, &u_refs, &x_refs);
        l_uu.l_dirty().solve_lower_triangular_mut(&mut v);
        let eta = inducing.len();
        let mut b = &v * v.transpose() / noise_variance;
        for i in 0..eta {
            b[(i, i)] += 1.0;
        }
        let l_b = Cholesky::new(b).ok_or(GpError::NotPositiveDefinite { max_jitter: 0.0 })?;
        let y = DMatrix::from_fn(m, p, |j, i| data.output(j)[i]);
        let mut c = l_b.solve(&(&v * y)) / noise_variance;
        l_uu.l_dirty().tr_solve_lower_triangular_mut(&mut c);
        Ok(Self {
            kernel,
            noise_variance,
            inducing,
            l_uu,
            l_b,
            alpha: c,
            num_samples: m,
        })
    }

    pub fn kernel(&self) -> &SqExpKernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn inducing_inputs(&self) -> &[Vec<f64>] {
        &self.inducing
    }

    pub fn output_dim(&self) -> usize {
        self.alpha.ncols()
    }

    fn cross(&self, z: &[f64]) -> Result<DVector<f64>, GpError> {
        let d = self.inducing[0].len();
        if z.len() != d {
            return Err(GpError::DimensionMismatch {
                expected: d,
                got: z.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.inducing.len(),
            self.inducing.iter().map(|u| self.kernel.eval_unchecked(u, z)),
        ))
    }

    fn variance_from(&self, k: &DVector<f64>) -> f64 {
        let mut w = k.clone();
        self.l_uu.l_dirty().solve_lower_triangular_mut(&mut w);
        let q = w.norm_squared();
        self.l_b.l_dirty().solve_lower_triangular_mut(&mut w);
        (self.kernel.variance() - q + w.norm_squared()).max(0.0)
    }

    pub fn predict(&self, z: &[f64]) -> Result<Prediction, GpError> {
        let k = self.cross(z)?;
        let mean = (0..self.output_dim())
            .map(|i| k.dot(&self.alpha.column(i)))
            .collect();
        Ok(Prediction {
            mean,
            variance: self.variance_from(&k),
        })
    }

    pub fn variance(&self, z: &[f64]) -> Result<f64, GpError> {
        let k = self.cross(z)?;
        Ok(self.variance_from(&k))
    }

    /// Mean of the variational distribution over inducing outputs,
    /// one column per output dimension.
    pub fn inducing_mean(&self) -> DMatrix<f64> {
        let l = self.l_uu.l();
        &l * (l.transpose() * &self.alpha)
    }

    /// Covariance of the variational distribution over inducing outputs.
    pub fn inducing_covariance(&self) -> DMatrix<f64> {
        let l = self.l_uu.l();
        let inner = self.l_b.inverse();
        &l * inner * l.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpModel;

    fn kernel() -> SqExpKernel {
        SqExpKernel::new(0.45, 1.75).unwrap()
    }

    #[test]
    fn farthest_point_picks_extremes_first() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 5.0, 2.0, 4.9].iter().map(|&x| vec![x]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        assert_eq!(farthest_point_indices(&refs, 3), vec![0, 2, 3]);
    }

    #[test]
    fn farthest_point_stops_on_duplicates() {
        let pts = [vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]];
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        assert_eq!(farthest_point_indices(&refs, 3), vec![0]);
    }

    #[test]
    fn full_inducing_set_matches_exact() {
        let mut ds = Dataset::new(1, 1);
        for (x, y) in [(0.0, 0.1), (1.3, -0.2), (2.5, 0.3)] {
            ds.push(&[x], &[y]).unwrap();
        }
        let exact = GpModel::fit(&ds, kernel(), 0.01).unwrap();
        let sparse = SparseGpModel::fit(&ds, 3, kernel(), 0.01).unwrap();
        for z in [-1.0, 0.5, 1.3, 4.0] {
            let a = exact.predict(&[z]).unwrap();
            let b = sparse.predict(&[z]).unwrap();
            assert!((a.mean[0] - b.mean[0]).abs() <= 1e-6 * a.mean[0].abs().max(1e-3));
            assert!((a.variance - b.variance).abs() <= 1e-6 * a.variance);
        }
    }

    #[test]
    fn variational_moments_are_consistent() {
        let mut ds = Dataset::new(1, 1);
        for i in 0..12 {
            let x = i as f64 * 0.4;
            ds.push(&[x], &[x.sin() * 0.3]).unwrap();
        }
        let sparse = SparseGpModel::fit(&ds, 4, kernel(), 0.01).unwrap();
        let cov = sparse.inducing_covariance();
        assert!((&cov - cov.transpose()).abs().max() < 1e-12);
        assert!(cov.symmetric_eigenvalues().min() > -1e-12);
        // Predicting at an inducing input recovers the variational mean there.
        let mu = sparse.inducing_mean();
        for (j, u) in sparse.inducing_inputs().iter().enumerate() {
            let p = sparse.predict(u).unwrap();
            assert!((p.mean[0] - mu[(j, 0)]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_empty_data_and_zero_eta() {
        assert!(SparseGpModel::fit(&Dataset::new(1, 1), 3, kernel(), 0.01).is_err());
        let mut ds = Dataset::new(1, 1);
        ds.push(&[0.0], &[0.0]).unwrap();
        assert!(SparseGpModel::fit(&ds, 0, kernel(), 0.01).is_err());
    }
}

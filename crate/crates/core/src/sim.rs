//! Simulated plant: known dynamics plus a hidden smooth field and bounded
//! noise.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::abstraction::{BoundaryMode, BoxDomain, NoiseModel};
use crate::gp::{GpError, SqExpKernel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("io: {0}")]
    Io(String),
}

/// The known part of the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum KnownDynamics {
    Identity,
    /// `x -> matrix * x + offset`, matrix given row by row.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

impl KnownDynamics {
    pub fn validate(&self, dim: usize) -> Result<(), SimError> {
        if let KnownDynamics::Affine { matrix, offset } = self {
            if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) || offset.len() != dim {
                return Err(SimError::Invalid(format!(
                    "affine dynamics must be {dim}x{dim} with a length-{dim} offset"
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            KnownDynamics::Identity => x.to_vec(),
            KnownDynamics::Affine { matrix, offset } => matrix
                .iter()
                .zip(offset)
                .map(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
                .collect(),
        }
    }
}

/// A GP prior sample on a regular grid, clamped and read back by
/// multilinear interpolation. One scalar field per state dimension.
#[derive(Debug, Clone)]
pub struct HiddenField {
    axes: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    unclamped: Vec<Vec<f64>>,
}

impl HiddenField {
    pub fn sample(
        domain: &BoxDomain,
        kernel: &SqExpKernel,
        support: f64,
        density: usize,
        seed: u64,
    ) -> Result<Self, SimError> {
        if density < 2 {
            return Err(SimError::Invalid("ground-truth grid needs at least 2 points per axis".into()));
        }
        if !(support.is_finite() && support >= 0.0) {
            return Err(SimError::Invalid("ground-truth support must be non-negative".into()));
        }
        let n = domain.dim();
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let (a, b) = (domain.lower[i], domain.upper[i]);
                (0..density)
                    .map(|k| a + (b - a) * k as f64 / (density - 1) as f64)
                    .collect()
            })
            .collect();
        // The squared-exponential covariance of a tensor grid is the
        // Kronecker product of per-axis correlation matrices.
        let ell = kernel.length_scale();
        let factors: Vec<DMatrix<f64>> = axes
            .iter()
            .map(|pts| {
                let c = DMatrix::from_fn(density, density, |r, s| {
                    let d = pts[r] - pts[s];
                    (-d * d / (2.0 * ell * ell)).exp()
                });
                crate::gp::correlation_cholesky(&c)
            })
            .collect::<Result<_, _>>()?;
        let total = density.pow(n as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut unclamped = Vec::with_capacity(n);
        for _ in 0..n {
            let mut t: Vec<f64> = (0..total).map(|_| StandardNormal.sample(&mut rng)).collect();
            for (axis, l) in factors.iter().enumerate() {
                apply_along_axis(&mut t, l, density, axis);
            }
            t.iter_mut().for_each(|v| *v *= kernel.sigma_g());
            unclamped.push(t);
        }
        let values = unclamped
            .iter()
            .map(|t| t.iter().map(|v| v.clamp(-support, support)).collect())
            .collect();
        Ok(Self {
            axes,
            values,
            unclamped,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Grid values before clamping, for statistical checks.
    pub fn unclamped(&self) -> &[Vec<f64>] {
        &self.unclamped
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let density = self.axes[0].len();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for i in 0..n {
            let a = &self.axes[i];
            let (lo, hi) = (a[0], a[density - 1]);
            let v = x[i].clamp(lo, hi);
            let pos = (v - lo) / (hi - lo) * (density - 1) as f64;
            let k = (pos.floor() as usize).min(density - 2);
            base[i] = k;
            frac[i] = (pos - k as f64).clamp(0.0, 1.0);
        }
        let mut out = vec![0.0; self.values.len()];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for i in 0..n {
                let bit = (corner >> i) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                idx += (base[i] + bit) * stride;
                stride *= density;
            }
            if w == 0.0 {
                continue;
            }
            for (o, field) in out.iter_mut().zip(&self.values) {
                *o += w * field[idx];
            }
        }
        out
    }

    /// Grid CSV with columns `x_1..x_n,g_1..g_n`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let io = |e: csv::Error| SimError::Io(e.to_string());
        let n = self.dim();
        let density = self.axes[0].len();
        let mut wtr = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=n)
            .map(|i| format!("x_{i}"))
            .chain((1..=self.values.len()).map(|i| format!("g_{i}")))
            .collect();
        wtr.write_record(&header).map_err(io)?;
        for idx in 0..self.values[0].len() {
            let mut rest = idx;
            let mut row = Vec::with_capacity(2 * n);
            for a in &self.axes {
                row.push(a[rest % density].to_string());
                rest /= density;
            }
            row.extend(self.values.iter().map(|f| f[idx].to_string()));
            wtr.write_record(&row).map_err(io)?;
        }
        wtr.flush().map_err(|e| SimError::Io(e.to_string()))
    }
}

fn apply_along_axis(t: &mut [f64], l: &DMatrix<f64>, density: usize, axis: usize) {
    let stride = density.pow(axis as u32);
    let block = stride * density;
    let mut fiber = vec![0.0; density];
    let mut out = vec![0.0; density];
    for start in (0..t.len()).step_by(block) {
        for offset in 0..stride {
            let base = start + offset;
            for k in 0..density {
                fiber[k] = t[base + k * stride];
            }
            for r in 0..density {
                out[r] = (0..=r).map(|c| l[(r, c)] * fiber[c]).sum();
            }
            for k in 0..density {
                t[base + k * stride] = out[k];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub x_next: Vec<f64>,
    /// `x_next - f(x) - u`.
    pub y: Vec<f64>,
    /// The successor was clamped onto the domain boundary.
    pub saturated: bool,
    /// The successor left the domain with no wall to stop it.
    pub exited: bool,
}

/// The true system used in closed-loop runs.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    domain: BoxDomain,
    boundary: BoundaryMode,
    known: KnownDynamics,
    field: HiddenField,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl GroundTruth {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: BoxDomain,
        boundary: BoundaryMode,
        known: KnownDynamics,
        kernel: &SqExpKernel,
        support: f64,
        density: usize,
        noise: NoiseModel,
        field_seed: u64,
        noise_seed: u64,
    ) -> Result<Self, SimError> {
        known.validate(domain.dim())?;
        if noise.dim() != domain.dim() {
            return Err(SimError::Invalid("noise dimension differs from the domain".into()));
        }
        let field = HiddenField::sample(&domain, kernel, support, density, field_seed)?;
        Ok(Self {
            domain,
            boundary,
            known,
            field,
            noise,
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
        })
    }

    pub fn field(&self) -> &HiddenField {
        &self.field
    }

    pub fn known(&self) -> &KnownDynamics {
        &self.known
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn g(&self, x: &[f64]) -> Vec<f64> {
        self.field.eval(x)
    }

    pub fn step(&mut self, x: &[f64], u: &[f64]) -> StepRecord {
        let fx = self.known.apply(x);
        let g = self.field.eval(x);
        let nu = self.noise.sample(&mut self.rng);
        let mut x_next: Vec<f64> = (0..x.len()).map(|i| fx[i] + u[i] + g[i] + nu[i]).collect();
        let (saturated, exited) = match self.boundary {
            BoundaryMode::Wall => (self.domain.clamp(&mut x_next), false),
            BoundaryMode::Sink => (false, !self.domain.contains(&x_next)),
        };
        let y = (0..x.len()).map(|i| x_next[i] - fx[i] - u[i]).collect();
        StepRecord {
            x: x.to_vec(),
            u: u.to_vec(),
            x_next,
            y,
            saturated,
            exited,
        }
    }
}

use super::{BoxDomain, NoiseModel, Region};
use crate::gp::{GpError, Regressor};

/// Feedback control that aims the nominal successor at `target_center`.
pub fn controller_offset(target_center: &[f64], f_x: &[f64], g_hat: &[f64]) -> Vec<f64> {
    target_center
        .iter()
        .zip(f_x)
        .zip(g_hat)
        .map(|((c, f), g)| c - f - g)
        .collect()
}

/// Largest high-confidence error over a cell-centred grid of
/// `samples_per_axis` points per axis inside the region (its center when
/// there is a single sample). All outputs share the posterior variance, so
/// the bound is the same along every output dimension.
pub fn region_error_bound(
    gp: &Regressor,
    region: &Region,
    beta: f64,
    samples_per_axis: usize,
) -> Result<Vec<f64>, GpError> {
    let n = region.center.len();
    let k = samples_per_axis.max(1);
    let axis_points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (a, b) = (region.lower[i], region.upper[i]);
            (0..k).map(|j| a + (b - a) * (j as f64 + 0.5) / k as f64).collect()
        })
        .collect();
    let mut max_var: f64 = 0.0;
    let mut idx = vec![0usize; n];
    let mut z = vec![0.0; n];
    loop {
        for i in 0..n {
            z[i] = axis_points[i][idx[i]];
        }
        max_var = max_var.max(gp.variance(&z)?);
        let mut axis = 0;
        loop {
            if axis == n {
                return Ok(vec![beta * max_var.sqrt(); n]);
            }
            idx[axis] += 1;
            if idx[axis] < k {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Offsets inside the error box around `center` that minimize and maximize
/// the probability of landing in `[lo, hi]` (ends may be infinite).
///
/// On a finite axis the maximizer is the point closest to the middle of
/// `[lo, hi]` and the minimizer is the farthest end of the box, the lower
/// one on ties. On a half-infinite axis the probability is monotone in the
/// offset, so the two ends of the box are the extremes. `clip` additionally
/// intersects the box with a domain.
pub fn extreme_points(
    center: &[f64],
    gamma: &[f64],
    lo: &[f64],
    hi: &[f64],
    clip: Option<&BoxDomain>,
) -> (Vec<f64>, Vec<f64>) {
    let n = center.len();
    let mut x_min = vec![0.0; n];
    let mut x_max = vec![0.0; n];
    for i in 0..n {
        let (mut a, mut b) = (center[i] - gamma[i], center[i] + gamma[i]);
        if let Some(d) = clip {
            a = a.max(d.lower[i]);
            b = b.min(d.upper[i]);
        }
        let (mn, mx) = match (lo[i].is_finite(), hi[i].is_finite()) {
            (true, true) => {
                let mid = (lo[i] + hi[i]) / 2.0;
                let far = if (a - mid).abs() >= (b - mid).abs() { a } else { b };
                (far, mid.clamp(a, b))
            }
            (false, true) => (b, a),
            (true, false) => (a, b),
            (false, false) => (center[i], center[i]),
        };
        x_min[i] = mn;
        x_max[i] = mx;
    }
    (x_min, x_max)
}

/// Interval on the probability of landing in `[lo, hi]` from a nominal
/// successor at `center` displaced by at most `gamma` per axis.
pub fn transition_interval(
    center: &[f64],
    gamma: &[f64],
    lo: &[f64],
    hi: &[f64],
    noise: &NoiseModel,
    clip: Option<&BoxDomain>,
) -> (f64, f64) {
    let (x_min, x_max) = extreme_points(center, gamma, lo, hi, clip);
    let mut low = 1.0;
    let mut high = 1.0;
    for i in 0..center.len() {
        low *= noise.interval_probability(i, x_min[i], lo[i], hi[i]);
        high *= noise.interval_probability(i, x_max[i], lo[i], hi[i]);
    }
    (low, high.max(low))
}

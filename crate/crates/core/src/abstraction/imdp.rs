use std::fmt::Write as _;

use rayon::prelude::*;

use super::bounds::{region_error_bound, transition_interval};
use super::{AbstractionError, BoundaryMode, NoiseModel, Partition};
use crate::gp::Regressor;
use crate::scltl::Observation;

/// Interval `[low, high]` on the probability of moving to `state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Successor {
    pub state: usize,
    pub low: f64,
    pub high: f64,
}

/// An action, identified by the region it steers toward, with its
/// successor intervals sorted by state. Successors with a zero upper bound
/// are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ImdpAction {
    pub target: usize,
    pub successors: Vec<Successor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imdp {
    pub labels: Vec<Observation>,
    pub actions: Vec<Vec<ImdpAction>>,
    pub initial: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AbstractionOptions {
    pub samples_per_axis: usize,
    pub stay_action: bool,
    pub clip_offsets_to_domain: bool,
}

impl Default for AbstractionOptions {
    fn default() -> Self {
        Self {
            samples_per_axis: 10,
            stay_action: true,
            clip_offsets_to_domain: false,
        }
    }
}

/// Per-region error bounds for every region of the partition.
pub fn error_bounds(
    partition: &Partition,
    gp: &Regressor,
    beta: f64,
    samples_per_axis: usize,
) -> Result<Vec<Vec<f64>>, AbstractionError> {
    partition
        .regions()
        .par_iter()
        .map(|r| region_error_bound(gp, r, beta, samples_per_axis).map_err(AbstractionError::from))
        .collect()
}

pub fn build_imdp(
    partition: &Partition,
    gp: &Regressor,
    beta: f64,
    noise: &NoiseModel,
    initial: usize,
    opts: &AbstractionOptions,
) -> Result<Imdp, AbstractionError> {
    let gammas = error_bounds(partition, gp, beta, opts.samples_per_axis)?;
    build_imdp_with_bounds(partition, &gammas, noise, initial, opts)
}

/// Build from externally supplied per-region error bounds.
pub fn build_imdp_with_bounds(
    partition: &Partition,
    gammas: &[Vec<f64>],
    noise: &NoiseModel,
    initial: usize,
    opts: &AbstractionOptions,
) -> Result<Imdp, AbstractionError> {
    let n = partition.dim();
    if noise.dim() != n {
        return Err(AbstractionError::Invalid(format!(
            "noise has dimension {}, partition has {n}",
            noise.dim()
        )));
    }
    if gammas.len() != partition.regions().len() || gammas.iter().any(|g| g.len() != n) {
        return Err(AbstractionError::Invalid("one error bound per region and axis required".into()));
    }
    if gammas.iter().flatten().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(AbstractionError::Invalid("error bounds must be non-negative".into()));
    }
    if initial >= partition.num_states() {
        return Err(AbstractionError::Invalid(format!("initial state {initial} out of range")));
    }
    let sink = partition.sink();
    let extents: Vec<(Vec<f64>, Vec<f64>)> =
        (0..sink).map(|q| partition.landing_extent(q)).collect();
    let clip = opts.clip_offsets_to_domain.then(|| partition.domain());

    let mut actions: Vec<Vec<ImdpAction>> = (0..sink)
        .into_par_iter()
        .map(|q| {
            let mut targets = partition.neighbors(q);
            if opts.stay_action {
                targets.push(q);
                targets.sort_unstable();
            }
            targets
                .into_iter()
                .map(|t| {
                    let center = &partition.region(t).center;
                    let gamma = &gammas[q];
                    let mut successors = Vec::new();
                    let (mut sum_low, mut sum_high) = (0.0, 0.0);
                    for (q2, (lo, hi)) in extents.iter().enumerate() {
                        let reachable = (0..n).all(|i| {
                            let reach = gamma[i] + noise.support()[i];
                            center[i] + reach >= lo[i] && center[i] - reach <= hi[i]
                        });
                        if !reachable {
                            continue;
                        }
                        let (low, high) = transition_interval(center, gamma, lo, hi, noise, clip);
                        if high > 0.0 {
                            sum_low += low;
                            sum_high += high;
                            successors.push(Successor { state: q2, low, high });
                        }
                    }
                    if partition.boundary() == BoundaryMode::Sink {
                        let low = (1.0 - sum_high).max(0.0);
                        let high = (1.0 - sum_low).min(1.0);
                        if high > 0.0 {
                            successors.push(Successor { state: sink, low, high });
                        }
                    }
                    repair_row(&mut successors);
                    ImdpAction { target: t, successors }
                })
                .collect()
        })
        .collect();
    actions.push(vec![ImdpAction {
        target: sink,
        successors: vec![Successor { state: sink, low: 1.0, high: 1.0 }],
    }]);

    let imdp = Imdp {
        labels: partition.labels(),
        actions,
        initial,
    };
    imdp.validate()?;
    Ok(imdp)
}

/// Widen a row as little as possible so that its bounds are ordered, lie
/// in `[0, 1]` and satisfy `sum(low) <= 1 <= sum(high)` under left-to-right
/// floating-point summation.
pub fn repair_row(row: &mut [Successor]) {
    for s in row.iter_mut() {
        s.low = s.low.clamp(0.0, 1.0);
        s.high = s.high.clamp(0.0, 1.0);
        if s.low > s.high {
            s.low = s.high;
        }
    }
    if row.is_empty() {
        return;
    }
    if row.iter().all(|s| s.low == s.high) {
        normalize_point_row(row);
    }
    for _ in 0..64 {
        let sum_low: f64 = row.iter().map(|s| s.low).sum();
        if sum_low <= 1.0 {
            break;
        }
        let k = argmax(row.iter().map(|s| s.low));
        row[k].low = (row[k].low - (sum_low - 1.0)).max(0.0);
        if row.iter().map(|s| s.low).sum::<f64>() > 1.0 {
            row[k].low = prev_down(row[k].low).max(0.0);
        }
    }
    for _ in 0..64 {
        let sum_high: f64 = row.iter().map(|s| s.high).sum();
        if sum_high >= 1.0 {
            break;
        }
        let k = argmax(row.iter().map(|s| 1.0 - s.high));
        row[k].high = (row[k].high + (1.0 - sum_high)).min(1.0);
        if row.iter().map(|s| s.high).sum::<f64>() < 1.0 {
            row[k].high = next_up(row[k].high).min(1.0);
        }
    }
}

/// Nudge the largest entry of a point-valued row, keeping it a point, until
/// the row sums to exactly one. Leaves the row alone if that is not reached.
fn normalize_point_row(row: &mut [Successor]) {
    let k = argmax(row.iter().map(|s| s.low));
    let original = row[k].low;
    let sum: f64 = row.iter().map(|s| s.low).sum();
    let jump = (original + (1.0 - sum)).clamp(0.0, 1.0);
    row[k].low = jump;
    row[k].high = jump;
    for _ in 0..256 {
        let sum: f64 = row.iter().map(|s| s.low).sum();
        if sum == 1.0 {
            return;
        }
        let v = if sum < 1.0 { next_up(row[k].low) } else { prev_down(row[k].low) };
        if !(0.0..=1.0).contains(&v) {
            break;
        }
        row[k].low = v;
        row[k].high = v;
    }
    row[k].low = original;
    row[k].high = original;
}

fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn next_up(x: f64) -> f64 {
    libm::nextafter(x, f64::INFINITY)
}

fn prev_down(x: f64) -> f64 {
    libm::nextafter(x, f64::NEG_INFINITY)
}

impl Imdp {
    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn total_uncertainty(&self) -> f64 {
        self.actions
            .iter()
            .flatten()
            .flat_map(|a| &a.successors)
            .map(|s| s.high - s.low)
            .sum()
    }

    /// Check ordering, range and row feasibility of every interval.
    pub fn validate(&self) -> Result<(), AbstractionError> {
        if self.actions.len() != self.labels.len() {
            return Err(AbstractionError::Invalid("actions and labels differ in length".into()));
        }
        if self.initial >= self.num_states() {
            return Err(AbstractionError::Invalid("initial state out of range".into()));
        }
        for (q, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(AbstractionError::Infeasible { state: q, target: None });
            }
            for a in acts {
                let ok = check_row(&a.successors, self.num_states());
                if !ok {
                    return Err(AbstractionError::Infeasible {
                        state: q,
                        target: Some(a.target),
                    });
                }
            }
        }
        Ok(())
    }

    /// Plain-text form: header lines, then `q alpha q' low high` rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "imdp");
        let _ = writeln!(out, "states {}", self.num_states());
        let _ = writeln!(out, "initial {}", self.initial);
        let labels: Vec<&str> = self.labels.iter().map(Observation::as_str).collect();
        let _ = writeln!(out, "labels {}", labels.join(" "));
        for (q, acts) in self.actions.iter().enumerate() {
            for a in acts {
                for s in &a.successors {
                    let _ = writeln!(out, "{q} {} {} {} {}", a.target, s.state, s.low, s.high);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AbstractionError> {
        let bad = |line: usize, msg: &str| AbstractionError::Format {
            line: line + 1,
            message: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let mut header = |key: &str| -> Result<(usize, String), AbstractionError> {
            let (i, l) = lines.next().ok_or_else(|| bad(0, "unexpected end of file"))?;
            let rest = l.trim().strip_prefix(key).ok_or_else(|| bad(i, &format!("expected '{key}'")))?;
            Ok((i, rest.trim().to_string()))
        };
        header("imdp")?;
        let (i, s) = header("states")?;
        let n: usize = s.parse().map_err(|_| bad(i, "bad state count"))?;
        let (i, s) = header("initial")?;
        let initial: usize = s.parse().map_err(|_| bad(i, "bad initial state"))?;
        let (i, s) = header("labels")?;
        let labels: Vec<Observation> = s
            .split_whitespace()
            .map(Observation::new)
            .collect::<Result<_, _>>()
            .map_err(|e| bad(i, &e.to_string()))?;
        if labels.len() != n {
            return Err(bad(i, "label count differs from state count"));
        }
        let mut actions: Vec<Vec<ImdpAction>> = vec![Vec::new(); n];
        for (i, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 5 {
                return Err(bad(i, "expected 'q alpha q' low high'"));
            }
            let q: usize = f[0].parse().map_err(|_| bad(i, "bad state"))?;
            let t: usize = f[1].parse().map_err(|_| bad(i, "bad action"))?;
            let q2: usize = f[2].parse().map_err(|_| bad(i, "bad successor"))?;
            let low: f64 = f[3].parse().map_err(|_| bad(i, "bad lower bound"))?;
            let high: f64 = f[4].parse().map_err(|_| bad(i, "bad upper bound"))?;
            if q >= n || q2 >= n {
                return Err(bad(i, "state out of range"));
            }
            let acts = &mut actions[q];
            let idx = match acts.iter().position(|a| a.target == t) {
                Some(k) => k,
                None => {
                    acts.push(ImdpAction { target: t, successors: Vec::new() });
                    acts.len() - 1
                }
            };
            acts[idx].successors.push(Successor { state: q2, low, high });
        }
        for acts in &mut actions {
            acts.sort_by_key(|a| a.target);
            for a in acts.iter_mut() {
                a.successors.sort_by_key(|s| s.state);
                if a.successors.windows(2).any(|w| w[0].state == w[1].state) {
                    return Err(AbstractionError::Format {
                        line: 0,
                        message: "duplicate successor".into(),
                    });
                }
            }
        }
        let imdp = Imdp { labels, actions, initial };
        imdp.validate()?;
        Ok(imdp)
    }
}

/// Slack on the row sums for rounding in hand-written probabilities.
const SUM_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_row(row: &[Successor], num_states: usize) -> bool {
    let ordered = row.iter().all(|s| {
        s.state < num_states && 0.0 <= s.low && s.low <= s.high && s.high <= 1.0
    });
    let sum_low: f64 = row.iter().map(|s| s.low).sum();
    let sum_high: f64 = row.iter().map(|s| s.high).sum();
    ordered && sum_low <= 1.0 + SUM_TOLERANCE && sum_high >= 1.0 - SUM_TOLERANCE
}

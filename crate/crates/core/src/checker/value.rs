use rayon::prelude::*;

use super::CheckError;
use crate::abstraction::Successor;
use crate::model::SubPimdp;

/// Which transition probabilities nature picks inside the intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryMode {
    Minimizing,
    Maximizing,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckerOptions {
    pub epsilon: f64,
    pub max_sweeps: usize,
}

impl Default for CheckerOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Memoryless choice per product state, as an index into the parent
/// product's action list. `None` for states outside the view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub choices: Vec<Option<usize>>,
}

/// Expected value of `values` under the distribution inside the intervals
/// that nature picks: successors are ranked by value (best first when
/// maximizing, worst first when minimizing) and filled up to their upper
/// bound until the mass not already committed to lower bounds runs out.
pub fn extremal_expectation(row: &[Successor], values: &[f64], mode: AdversaryMode) -> f64 {
    let dist = extremal_distribution(row, values, mode);
    row.iter().zip(&dist).map(|(s, p)| p * values[s.state]).sum()
}

pub fn extremal_distribution(row: &[Successor], values: &[f64], mode: AdversaryMode) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[row[a].state], values[row[b].state]);
        let c = match mode {
            AdversaryMode::Maximizing => vb.total_cmp(&va),
            AdversaryMode::Minimizing => va.total_cmp(&vb),
        };
        c.then(row[a].state.cmp(&row[b].state))
    });
    let mut p: Vec<f64> = row.iter().map(|s| s.low).collect();
    let mut budget = 1.0 - p.iter().sum::<f64>();
    for &k in &order {
        if budget <= 0.0 {
            break;
        }
        let add = (row[k].high - row[k].low).min(budget);
        p[k] += add;
        budget -= add;
    }
    p
}

/// States with a path of positive-upper-bound transitions into `target`
/// using retained actions only.
pub fn can_reach(sub: &SubPimdp<'_>, target: &[bool]) -> Vec<bool> {
    let n = sub.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in sub.retained_states() {
        for (_, a) in sub.retained_actions(i) {
            for s in &a.successors {
                if s.high > 0.0 && sub.is_retained(s.state) {
                    preds[s.state].push(i);
                }
            }
        }
    }
    let mut seen: Vec<bool> = (0..n).map(|i| target[i] && sub.is_retained(i)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &preds[j] {
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
    }
    seen
}

/// Least mass nature can place on `set` (minimizing) or the most it can
/// place there while putting none outside `stay` (maximizing).
fn mass_into(row: &[Successor], set: &[bool], mode: AdversaryMode, stay: &[bool]) -> f64 {
    match mode {
        AdversaryMode::Minimizing => {
            let low_in: f64 = row.iter().filter(|s| set[s.state]).map(|s| s.low).sum();
            let high_out: f64 = row.iter().filter(|s| !set[s.state]).map(|s| s.high).sum();
            low_in.max(1.0 - high_out)
        }
        AdversaryMode::Maximizing => {
            let outside_low: f64 = row.iter().filter(|s| !stay[s.state]).map(|s| s.low).sum();
            let inside_high: f64 = row.iter().filter(|s| stay[s.state]).map(|s| s.high).sum();
            if outside_low > 0.0 || inside_high < 1.0 {
                return 0.0;
            }
            let high_in: f64 = row.iter().filter(|s| set[s.state]).map(|s| s.high).sum();
            let low_rest: f64 = row
                .iter()
                .filter(|s| stay[s.state] && !set[s.state])
                .map(|s| s.low)
                .sum();
            high_in.min(1.0 - low_rest)
        }
    }
}

/// States from which some memoryless policy reaches `target` with
/// probability one against every (minimizing) or some (maximizing) choice
/// of nature, with the action that makes progress at each such state.
///
/// Minimizing: sound but possibly incomplete; an action qualifies when all
/// its possible successors stay in the candidate set and nature cannot
/// avoid putting positive mass on states already attracted. Maximizing:
/// exact, as nature cooperates.
pub fn almost_sure(
    sub: &SubPimdp<'_>,
    target: &[bool],
    mode: AdversaryMode,
) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = sub.num_states();
    let mut w: Vec<bool> = can_reach(sub, target);
    loop {
        let mut attracted: Vec<bool> = (0..n).map(|i| w[i] && target[i]).collect();
        let mut choice: Vec<Option<usize>> = vec![None; n];
        loop {
            let layer: Vec<(usize, usize)> = (0..n)
                .filter(|&i| w[i] && !attracted[i])
                .filter_map(|i| {
                    sub.retained_actions(i)
                        .find(|(_, a)| {
                            let closed = match mode {
                                AdversaryMode::Minimizing => a
                                    .successors
                                    .iter()
                                    .all(|s| s.high == 0.0 || w[s.state]),
                                AdversaryMode::Maximizing => true,
                            };
                            closed && mass_into(&a.successors, &attracted, mode, &w) > 0.0
                        })
                        .map(|(k, _)| (i, k))
                })
                .collect();
            if layer.is_empty() {
                break;
            }
            for (i, k) in layer {
                attracted[i] = true;
                choice[i] = Some(k);
            }
        }
        if attracted == w {
            return (attracted, choice);
        }
        w = attracted;
        // Shrinking the candidate set can only remove states; recompute
        // reachability inside it.
        let restricted = SubPimdp {
            parent: sub.parent,
            retained: (0..n).map(|i| w[i]).collect(),
            actions: sub.actions.clone(),
        };
        let r = can_reach(&restricted, target);
        for i in 0..n {
            w[i] = w[i] && r[i];
        }
    }
}

fn check_inputs(sub: &SubPimdp<'_>, target: &[bool]) -> Result<(), CheckError> {
    if target.len() != sub.num_states() {
        return Err(CheckError::Invalid("target length differs from state count".into()));
    }
    if sub.retained_states().any(|i| sub.actions[i].is_empty()) {
        return Err(CheckError::Invalid("a retained state has no actions".into()));
    }
    Ok(())
}

/// Interval value iteration for the probability of reaching `target`,
/// maximized over policies with nature playing `mode`.
pub fn value_iterate(
    sub: &SubPimdp<'_>,
    target: &[bool],
    mode: AdversaryMode,
    opts: &CheckerOptions,
) -> Result<(ValueVector, Policy), CheckError> {
    check_inputs(sub, target)?;
    let n = sub.num_states();
    let reach = can_reach(sub, target);
    let (sure, sure_choice) = almost_sure(sub, target, mode);
    let fixed: Vec<bool> = (0..n).map(|i| !reach[i] || sure[i] || target[i]).collect();
    let mut values: Vec<f64> = (0..n)
        .map(|i| if sure[i] || (target[i] && sub.is_retained(i)) { 1.0 } else { 0.0 })
        .collect();
    let mut choices: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if !sub.is_retained(i) {
                None
            } else {
                sure_choice[i].or_else(|| sub.actions[i].first().copied())
            }
        })
        .collect();

    let mut sweeps = 0;
    let residual = loop {
        let updates: Vec<(f64, Option<usize>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                if fixed[i] {
                    return (values[i], choices[i]);
                }
                let current = choices[i].expect("retained");
                let mut best_k = current;
                let mut best_q = extremal_expectation(&sub.action(i, current).successors, &values, mode);
                for (k, a) in sub.retained_actions(i) {
                    let q = extremal_expectation(&a.successors, &values, mode);
                    if q > best_q + 1e-12 {
                        best_q = q;
                        best_k = k;
                    }
                }
                (best_q.clamp(0.0, 1.0), Some(best_k))
            })
            .collect();
        sweeps += 1;
        let mut residual: f64 = 0.0;
        for (i, (v, c)) in updates.into_iter().enumerate() {
            residual = residual.max((v - values[i]).abs());
            values[i] = v;
            choices[i] = c;
        }
        if residual < opts.epsilon {
            break residual;
        }
        if sweeps >= opts.max_sweeps {
            return Err(CheckError::NotConverged { sweeps, residual });
        }
    };
    Ok((
        ValueVector {
            values,
            iterations: sweeps,
            residual,
        },
        Policy { choices },
    ))
}

/// Value of a fixed memoryless policy with nature playing `mode`.
pub fn evaluate_policy(
    sub: &SubPimdp<'_>,
    policy: &Policy,
    target: &[bool],
    mode: AdversaryMode,
    opts: &CheckerOptions,
) -> Result<ValueVector, CheckError> {
    let n = sub.num_states();
    let mut restricted = sub.clone();
    for i in 0..n {
        restricted.actions[i] = match (sub.is_retained(i), policy.choices[i]) {
            (true, Some(k)) => vec![k],
            (true, None) => return Err(CheckError::Invalid(format!("no choice at state {i}"))),
            _ => Vec::new(),
        };
    }
    value_iterate(&restricted, target, mode, opts).map(|(v, _)| v)
}

/// The iterate after exactly `sweeps` plain sweeps from the target
/// indicator, with no pre-passes. Exposed for convergence checks.
pub fn value_iterates(sub: &SubPimdp<'_>, target: &[bool], mode: AdversaryMode, sweeps: usize) -> Vec<f64> {
    let n = sub.num_states();
    let mut values: Vec<f64> = (0..n).map(|i| if target[i] { 1.0 } else { 0.0 }).collect();
    for _ in 0..sweeps {
        values = (0..n)
            .map(|i| {
                if target[i] || !sub.is_retained(i) {
                    return values[i];
                }
                sub.retained_actions(i)
                    .map(|(_, a)| extremal_expectation(&a.successors, &values, mode))
                    .fold(0.0, f64::max)
            })
            .collect();
    }
    values
}

use std::collections::{BTreeMap, BTreeSet};

use crate::checker::{mec_decompose, value_iterate, AdversaryMode, CheckerOptions, Mec, Policy};
use crate::gp::SqExpKernel;
use crate::model::SubPimdp;

use super::ExploreError;

/// A safe end component to sample in, and how to get there.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePlan {
    pub mec: Mec,
    pub mec_index: usize,
    /// Worst-case probability of reaching the component from the start state.
    pub reach_probability: f64,
    pub score: f64,
    /// Parent action index for retained states outside the component.
    pub approach: Policy,
    /// Per component state, the actions to cycle through in index order.
    pub rotation: BTreeMap<usize, Vec<usize>>,
}

/// Kernel mass between the regions an end component covers and the
/// accepting regions.
pub fn covariance_score(
    mec: &Mec,
    sub: &SubPimdp<'_>,
    kernel: &SqExpKernel,
    centers: &[Vec<f64>],
    accepting_regions: &[usize],
) -> f64 {
    let regions: BTreeSet<usize> = mec
        .states
        .iter()
        .map(|&i| sub.parent.state(i).0)
        .filter(|&q| q < centers.len())
        .collect();
    regions
        .iter()
        .flat_map(|&q| {
            accepting_regions
                .iter()
                .filter(|&&a| a < centers.len())
                .map(move |&a| (q, a))
        })
        .map(|(q, a)| kernel.eval_unchecked(&centers[q], &centers[a]))
        .sum()
}

/// Pick the end component to explore. Components reachable with worst-case
/// probability one (within `tolerance`) are ranked by covariance score;
/// if there are none, the most reachable component wins. Ties go to the
/// lower component index.
pub fn select_cycle(
    sub: &SubPimdp<'_>,
    kernel: &SqExpKernel,
    centers: &[Vec<f64>],
    accepting_regions: &[usize],
    start: usize,
    opts: &CheckerOptions,
    tolerance: f64,
) -> Result<CyclePlan, ExploreError> {
    let mecs = mec_decompose(sub);
    if mecs.is_empty() {
        return Err(ExploreError::NoEndComponent);
    }
    let n = sub.num_states();
    let mut evaluated = Vec::with_capacity(mecs.len());
    for mec in &mecs {
        let mut target = vec![false; n];
        for &i in &mec.states {
            target[i] = true;
        }
        let (values, policy) = value_iterate(sub, &target, AdversaryMode::Minimizing, opts)?;
        evaluated.push((values.values[start], policy));
    }
    let candidates: Vec<usize> = (0..mecs.len())
        .filter(|&k| evaluated[k].0 >= 1.0 - tolerance)
        .collect();
    let (chosen, score) = if candidates.is_empty() {
        let mut best = 0;
        for k in 1..mecs.len() {
            if evaluated[k].0 > evaluated[best].0 {
                best = k;
            }
        }
        (best, covariance_score(&mecs[best], sub, kernel, centers, accepting_regions))
    } else {
        let mut best = (candidates[0], f64::NEG_INFINITY);
        for &k in &candidates {
            let h = covariance_score(&mecs[k], sub, kernel, centers, accepting_regions);
            if h > best.1 {
                best = (k, h);
            }
        }
        best
    };
    let mec = mecs[chosen].clone();
    let (reach_probability, mut approach) = evaluated.swap_remove(chosen);
    for &i in &mec.states {
        approach.choices[i] = None;
    }
    Ok(CyclePlan {
        rotation: mec.actions.clone(),
        mec,
        mec_index: chosen,
        reach_probability,
        score,
        approach,
    })
}

//! Safe exploration: pruning to a nonviolating sub-product, choosing an end
//! component to sample in, and the outer learn-and-check loop.

mod cycle;
mod prune;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cycle::{covariance_score, select_cycle, CyclePlan};
pub use prune::{nonviolating_subgraph, PruneStats};

use crate::abstraction::{build_imdp, controller_offset, AbstractionError, Imdp, Partition};
use crate::checker::{value_iterate, AdversaryMode, CheckError, CheckerOptions, Policy, ValueVector};
use crate::config::{ConfigError, ExperimentConfig};
use crate::gp::{Dataset, GpError, Regressor};
use crate::model::{failure_states, ModelError, Pimdp, SubPimdp};
use crate::scltl::{Fsa, ScltlError};
use crate::sim::GroundTruth;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExploreError {
    #[error("the nonviolating sub-product has no end component")]
    NoEndComponent,
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scltl(#[from] ScltlError),
}

/// Sum of interval widths over all stored transitions.
pub fn total_uncertainty(imdp: &Imdp) -> f64 {
    imdp.total_uncertainty()
}

/// Regions that occur in accepting product states, sink excluded.
pub fn accepting_regions(p: &Pimdp) -> Vec<usize> {
    let mut r: Vec<usize> = (0..p.num_states())
        .filter(|&i| p.is_accepting(i))
        .map(|i| p.state(i).0)
        .filter(|&q| q + 1 < p.num_regions())
        .collect();
    r.sort_unstable();
    r.dedup();
    r
}

/// Product of an abstraction with the automaton, with best-policy
/// satisfaction bounds against both adversaries.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub product: Pimdp,
    pub lower: ValueVector,
    pub lower_policy: Policy,
    pub upper: ValueVector,
}

impl Analysis {
    pub fn new(
        imdp: &Imdp,
        fsa: &Fsa,
        seeds: &[(usize, usize)],
        opts: &CheckerOptions,
    ) -> Result<Self, ExploreError> {
        let product = Pimdp::build_with_seeds(imdp, fsa, seeds)?;
        let full = product.full();
        let target = product.accepting().to_vec();
        let (lower, lower_policy) = value_iterate(&full, &target, AdversaryMode::Minimizing, opts)?;
        let (upper, _) = value_iterate(&full, &target, AdversaryMode::Maximizing, opts)?;
        Ok(Self {
            product,
            lower,
            lower_policy,
            upper,
        })
    }

    pub fn p_low(&self) -> f64 {
        self.lower.values[self.product.initial()]
    }

    pub fn p_high(&self) -> f64 {
        self.upper.values[self.product.initial()]
    }

    pub fn policy(&self) -> FinalPolicy {
        let entries = (0..self.product.num_states())
            .filter_map(|i| {
                let k = self.lower_policy.choices[i]?;
                let (region, automaton) = self.product.state(i);
                Some(PolicyEntry {
                    region,
                    automaton,
                    target: self.product.actions(i)[k].id,
                    p_low: self.lower.values[i],
                })
            })
            .collect();
        FinalPolicy { entries }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEntry {
    pub region: usize,
    pub automaton: usize,
    /// Region the controller steers toward.
    pub target: usize,
    pub p_low: f64,
}

/// Memoryless product policy: one target region per (region, automaton state).
#[derive(Debug, Clone, PartialEq)]
pub struct FinalPolicy {
    pub entries: Vec<PolicyEntry>,
}

impl FinalPolicy {
    pub fn target(&self, region: usize, automaton: usize) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.region == region && e.automaton == automaton)
            .map(|e| e.target)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# region automaton target p_low\n");
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {} {}", e.region, e.automaton, e.target, e.p_low);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Satisfied { policy: FinalPolicy },
    Impossible,
    BudgetExhausted { reason: String },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Satisfied { .. } => "satisfied",
            Outcome::Impossible => "impossible",
            Outcome::BudgetExhausted { .. } => "budget_exhausted",
        }
    }
}

/// Metrics of the abstraction after `iteration` exploration phases. The
/// exploration fields describe the phase that produced the new data and are
/// zero for iteration 0.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub samples: usize,
    pub p_low: f64,
    pub p_high: f64,
    pub uncertainty: f64,
    pub wall_seconds: f64,
    pub retained_states: usize,
    pub mec_states: usize,
    pub reach_probability: f64,
    pub satisfactions: usize,
    pub violations: usize,
    pub off_plan: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub step: usize,
    pub x: Vec<f64>,
    pub region: usize,
    pub automaton: usize,
    pub action: usize,
    pub y: Vec<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub outcome: Outcome,
    pub reports: Vec<IterationReport>,
    pub trajectory: Vec<TrajectoryRow>,
    pub fsa: Fsa,
    pub data: Dataset,
}

impl SynthesisResult {
    /// Exploration phases run before termination.
    pub fn iterations(&self) -> usize {
        self.reports.last().map_or(0, |r| r.iteration)
    }

    pub fn initial_uncertainty(&self) -> f64 {
        self.reports.first().map_or(0.0, |r| r.uncertainty)
    }

    pub fn final_uncertainty(&self) -> f64 {
        self.reports.last().map_or(0.0, |r| r.uncertainty)
    }

    pub fn wall_seconds(&self) -> f64 {
        self.reports.iter().map(|r| r.wall_seconds).sum()
    }
}

/// Automaton for the configured formula over the partition's labels.
pub fn automaton(cfg: &ExperimentConfig, partition: &Partition) -> Result<Fsa, ExploreError> {
    Ok(Fsa::build(&cfg.formula()?, &partition.labels())?)
}

/// Learn, abstract, check and explore until the configured probability is
/// certified, shown unreachable, or the iteration budget runs out.
pub fn iterative_synthesis(
    cfg: &ExperimentConfig,
    sys: &mut GroundTruth,
) -> Result<SynthesisResult, ExploreError> {
    let partition = cfg.partition()?;
    let fsa = automaton(cfg, &partition)?;
    let kernel = cfg.kernel()?;
    let noise = cfg.noise_model();
    let known = cfg.known_dynamics();
    let abs_opts = cfg.abstraction_options();
    let chk = cfg.checker_options();
    let tol = cfg.checker.probability_tolerance;
    let p_sat = cfg.specification.p_sat;
    let n = cfg.dim();
    let centers: Vec<Vec<f64>> = partition.regions().iter().map(|r| r.center.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds.exploration);

    let mut x = cfg.system.initial_state.clone();
    let q0 = partition.locate(&x);
    let mut tracker = (q0, fsa.step(fsa.initial(), &partition.label(q0)));
    let mut data = Dataset::new(n, n);
    let mut reports: Vec<IterationReport> = Vec::new();
    let mut trajectory = Vec::new();
    let mut cursors: HashMap<(usize, usize), usize> = HashMap::new();
    let mut phase = PhaseStats::default();
    let mut clock = Instant::now();
    let mut step_count = 0;

    for iteration in 0.. {
        let gp = Regressor::fit(&data, kernel, cfg.gp_noise_variance(), cfg.learning.inducing_points)?;
        let beta = cfg.beta().value(data.len());
        let imdp = build_imdp(&partition, &gp, beta, &noise, q0, &abs_opts)?;
        let analysis = Analysis::new(&imdp, &fsa, &[tracker], &chk)?;
        let product = &analysis.product;
        let (p_low, p_high) = (analysis.p_low(), analysis.p_high());
        log::info!(
            "iteration {iteration}: m={} p_low={p_low:.6} p_high={p_high:.6} unc={:.4}",
            data.len(),
            imdp.total_uncertainty()
        );

        let failures = failure_states(&analysis.upper.values);
        let (sub, _) = nonviolating_subgraph(product, &failures);
        reports.push(IterationReport {
            iteration,
            samples: data.len(),
            p_low,
            p_high,
            uncertainty: imdp.total_uncertainty(),
            wall_seconds: clock.elapsed().as_secs_f64(),
            retained_states: sub.retained_states().count(),
            mec_states: phase.mec_states,
            reach_probability: phase.reach_probability,
            satisfactions: phase.satisfactions,
            violations: phase.violations,
            off_plan: phase.off_plan,
        });
        clock = Instant::now();

        macro_rules! finish {
            ($outcome:expr) => {
                SynthesisResult {
                    outcome: $outcome,
                    reports,
                    trajectory,
                    fsa,
                    data,
                }
            };
        }
        if p_low >= p_sat - tol {
            return Ok(finish!(Outcome::Satisfied {
                policy: analysis.policy(),
            }));
        }
        if p_high < p_sat - tol {
            return Ok(finish!(Outcome::Impossible));
        }
        if iteration >= cfg.exploration.max_iterations {
            return Ok(finish!(Outcome::BudgetExhausted {
                reason: format!("iteration limit of {} reached", cfg.exploration.max_iterations),
            }));
        }
        if !sub.is_retained(product.initial()) {
            return Ok(finish!(Outcome::BudgetExhausted {
                reason: "exploration impossible: the initial product state was pruned".into(),
            }));
        }
        let current = product.index_of(tracker.0, tracker.1).expect("tracker state is seeded");
        let start = if sub.is_retained(current) { current } else { product.initial() };
        let accepting = accepting_regions(product);
        let plan = match select_cycle(&sub, &kernel, &centers, &accepting, start, &chk, tol) {
            Ok(p) => p,
            Err(ExploreError::NoEndComponent) => {
                return Ok(finish!(Outcome::BudgetExhausted {
                    reason: "exploration impossible: no safe end component".into(),
                }));
            }
            Err(e) => return Err(e),
        };
        log::debug!(
            "cycle: {} states, reach {:.4}, score {:.4}",
            plan.mec.states.len(),
            plan.reach_probability,
            plan.score
        );

        let guide = Guide::new(product, &sub, &plan, &imdp, &centers);
        phase = PhaseStats {
            mec_states: plan.mec.states.len(),
            reach_probability: plan.reach_probability,
            ..PhaseStats::default()
        };
        for _ in 0..cfg.exploration.steps_per_iteration {
            let target = match product.index_of(tracker.0, tracker.1) {
                Some(i) if plan.rotation.contains_key(&i) => {
                    let list = &plan.rotation[&i];
                    let c = cursors
                        .entry(tracker)
                        .or_insert_with(|| rng.random_range(0..list.len()));
                    let k = list[*c % list.len()];
                    *c = (*c + 1) % list.len();
                    product.actions(i)[k].id
                }
                Some(i) if sub.is_retained(i) && plan.approach.choices[i].is_some() => {
                    product.actions(i)[plan.approach.choices[i].unwrap()].id
                }
                _ => {
                    phase.off_plan += 1;
                    guide.fallback(tracker.0)
                }
            };
            let fx = known.apply(&x);
            let g_hat = gp.predict(&x)?.mean;
            let u = controller_offset(&centers[target], &fx, &g_hat);
            let rec = sys.step(&x, &u);
            trajectory.push(TrajectoryRow {
                iteration: iteration + 1,
                step: step_count,
                x: x.clone(),
                region: tracker.0,
                automaton: tracker.1,
                action: target,
                y: rec.y.clone(),
                saturated: rec.saturated,
            });
            step_count += 1;
            if rec.exited {
                log::warn!("state left the domain at step {step_count}; plant frozen");
                return Ok(finish!(Outcome::BudgetExhausted {
                    reason: format!("state left the domain at step {step_count}"),
                }));
            }
            if !rec.saturated {
                data.push(&x, &rec.y)?;
            }
            x = rec.x_next;
            let q = partition.locate(&x);
            let label = partition.label(q);
            let was_final = fsa.is_accepting(tracker.1) || fsa.is_trap(tracker.1);
            let s = fsa.step(tracker.1, &label);
            tracker = if fsa.is_accepting(s) || fsa.is_trap(s) {
                if !was_final {
                    if fsa.is_accepting(s) {
                        phase.satisfactions += 1;
                    } else {
                        phase.violations += 1;
                        log::warn!("specification violated during exploration at step {step_count}");
                    }
                }
                (q, fsa.step(fsa.initial(), &label))
            } else {
                (q, s)
            };
        }
    }
    unreachable!("the loop returns")
}

#[derive(Debug, Clone, Copy, Default)]
struct PhaseStats {
    mec_states: usize,
    reach_probability: f64,
    satisfactions: usize,
    violations: usize,
    off_plan: usize,
}

/// Action choice for tracker states the plan does not cover.
struct Guide<'a> {
    product: &'a Pimdp,
    sub: &'a SubPimdp<'a>,
    plan: &'a CyclePlan,
    imdp: &'a Imdp,
    centers: &'a [Vec<f64>],
    mec_regions: Vec<usize>,
    safe_regions: Vec<bool>,
}

impl<'a> Guide<'a> {
    fn new(
        product: &'a Pimdp,
        sub: &'a SubPimdp<'a>,
        plan: &'a CyclePlan,
        imdp: &'a Imdp,
        centers: &'a [Vec<f64>],
    ) -> Self {
        let mut mec_regions: Vec<usize> = plan.mec.states.iter().map(|&i| product.state(i).0).collect();
        mec_regions.sort_unstable();
        mec_regions.dedup();
        let mut safe_regions = vec![false; imdp.num_states()];
        for i in sub.retained_states() {
            safe_regions[product.state(i).0] = true;
        }
        Self {
            product,
            sub,
            plan,
            imdp,
            centers,
            mec_regions,
            safe_regions,
        }
    }

    fn planned(&self, i: usize) -> Option<usize> {
        if let Some(list) = self.plan.rotation.get(&i) {
            return Some(self.product.actions(i)[list[0]].id);
        }
        if self.sub.is_retained(i) {
            return self.plan.approach.choices[i].map(|k| self.product.actions(i)[k].id);
        }
        None
    }

    /// Prefer what the plan does in another automaton state over the same
    /// region; otherwise move toward the component, through safe regions
    /// if possible.
    fn fallback(&self, region: usize) -> usize {
        let same_region = (0..self.product.num_states())
            .filter(|&i| self.product.state(i).0 == region && !self.product.is_accepting(i));
        if let Some(t) = same_region.clone().find(|i| self.plan.rotation.contains_key(i)).and_then(|i| self.planned(i)) {
            return t;
        }
        if let Some(t) = same_region.filter_map(|i| self.planned(i)).next() {
            return t;
        }
        let actions = &self.imdp.actions[region];
        let distance = |t: usize| -> f64 {
            if t >= self.centers.len() {
                return f64::INFINITY;
            }
            self.mec_regions
                .iter()
                .filter(|&&q| q < self.centers.len())
                .map(|&q| {
                    self.centers[t]
                        .iter()
                        .zip(&self.centers[q])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let nearest = |safe_only: bool| {
            actions
                .iter()
                .filter(|a| {
                    !safe_only
                        || a.successors
                            .iter()
                            .all(|s| s.high == 0.0 || self.safe_regions[s.state])
                })
                .map(|a| (a.target, distance(a.target)))
                .fold(None, |best: Option<(usize, f64)>, (t, d)| match best {
                    Some((_, bd)) if bd <= d => best,
                    _ => Some((t, d)),
                })
                .map(|(t, _)| t)
        };
        nearest(true).or_else(|| nearest(false)).unwrap_or(region)
    }
}

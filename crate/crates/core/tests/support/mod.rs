//! Oracles and generators shared by the integration tests and the
//! acceptance runner. Everything here is deliberately naive.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safe_imdp::abstraction::{
    BoundaryMode, BoxDomain, Imdp, ImdpAction, NoiseModel, Partition, Successor,
};
use safe_imdp::checker::{AdversaryMode, Mec};
use safe_imdp::model::{Pimdp, SubPimdp};
use safe_imdp::scltl::Observation;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn obs(s: &str) -> Observation {
    Observation::new(s).unwrap()
}

pub fn grid(divisions: &[usize], boundary: BoundaryMode, labels: &[(&[usize], &str)]) -> Partition {
    let n = divisions.len();
    let upper: Vec<f64> = divisions.iter().map(|&d| d as f64).collect();
    let labels: HashMap<Vec<usize>, Observation> =
        labels.iter().map(|(c, l)| (c.to_vec(), obs(l))).collect();
    Partition::new(BoxDomain::new(vec![0.0; n], upper).unwrap(), divisions.to_vec(), &labels, boundary).unwrap()
}

pub fn case_noise() -> NoiseModel {
    NoiseModel::isotropic(2, 0.1, 0.2).unwrap()
}

// ---------------------------------------------------------------- intervals

#[derive(Debug, Default, Clone, Copy)]
pub struct IntervalAudit {
    pub rows: usize,
    pub triples: usize,
    pub violations: usize,
}

impl IntervalAudit {
    pub fn merge(&mut self, o: IntervalAudit) {
        self.rows += o.rows;
        self.triples += o.triples;
        self.violations += o.violations;
    }
}

fn audit_row(row: &[Successor]) -> IntervalAudit {
    let mut a = IntervalAudit {
        rows: 1,
        triples: row.len(),
        violations: 0,
    };
    for s in row {
        if !(0.0 <= s.low && s.low <= s.high && s.high <= 1.0) {
            a.violations += 1;
        }
    }
    let lo: f64 = row.iter().map(|s| s.low).sum();
    let hi: f64 = row.iter().map(|s| s.high).sum();
    if !(lo <= 1.0 && 1.0 <= hi) {
        a.violations += 1;
    }
    a
}

pub fn audit_imdp(imdp: &Imdp) -> IntervalAudit {
    let mut total = IntervalAudit::default();
    for acts in &imdp.actions {
        for a in acts {
            total.merge(audit_row(&a.successors));
        }
    }
    total
}

pub fn audit_pimdp(p: &Pimdp) -> IntervalAudit {
    let mut total = IntervalAudit::default();
    for i in 0..p.num_states() {
        for a in p.actions(i) {
            total.merge(audit_row(&a.successors));
        }
    }
    total
}

// ---------------------------------------------------------- random models

/// Labels drawn from `none`, `Goal` and `Haz`.
pub fn random_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<Observation> {
    (0..n)
        .map(|_| match rng.random_range(0..6) {
            0 => obs("Goal"),
            1 => obs("Haz"),
            _ => obs("none"),
        })
        .collect()
}

/// Row of point intervals whose probabilities are multiples of 1/8, so the
/// row sums to one exactly in floating point.
pub fn point_row<R: Rng>(rng: &mut R, n: usize) -> Vec<Successor> {
    let mut mass = BTreeMap::new();
    for _ in 0..8 {
        *mass.entry(rng.random_range(0..n)).or_insert(0u32) += 1;
    }
    mass.into_iter()
        .map(|(state, k)| {
            let p = k as f64 / 8.0;
            Successor { state, low: p, high: p }
        })
        .collect()
}

/// Feasible interval row with every bound on the 1/16 lattice, so sums
/// are exact in floating point.
pub fn lattice_row<R: Rng>(rng: &mut R, n: usize) -> Vec<Successor> {
    let support: BTreeSet<usize> = (0..rng.random_range(1..=n.min(4))).map(|_| rng.random_range(0..n)).collect();
    let support: Vec<usize> = support.into_iter().collect();
    // A feasible point on the lattice, then widen around it.
    let mut units = vec![0u32; support.len()];
    for _ in 0..16 {
        units[rng.random_range(0..support.len())] += 1;
    }
    support
        .iter()
        .zip(&units)
        .map(|(&state, &u)| {
            let lo = u.saturating_sub(rng.random_range(0..=5));
            let hi = (u + rng.random_range(0..=5)).min(16).max(lo.max(1));
            Successor {
                state,
                low: lo as f64 / 16.0,
                high: hi as f64 / 16.0,
            }
        })
        .collect()
}

/// Random IMDP whose actions target arbitrary states.
pub fn random_imdp<R: Rng>(rng: &mut R, n: usize, max_actions: usize, point: bool) -> Imdp {
    let actions = (0..n)
        .map(|_| {
            (0..rng.random_range(1..=max_actions))
                .map(|_| ImdpAction {
                    target: rng.random_range(0..n),
                    successors: if point { point_row(rng, n) } else { lattice_row(rng, n) },
                })
                .collect()
        })
        .collect();
    Imdp {
        labels: random_labels(rng, n),
        actions,
        initial: 0,
    }
}

// ------------------------------------------------------ value iteration

/// Candidate distributions per state and action.
pub type Choices = Vec<Vec<Vec<Distribution>>>;
pub type Distribution = Vec<(usize, f64)>;

/// Reachability of `Goal` while avoiding `Haz` on the region level, with
/// the label of each entered region read on arrival. Nature picks among
/// `choices[state][action]`, a list of candidate distributions.
pub fn until_values(
    imdp: &Imdp,
    choices: &[Vec<Vec<Distribution>>],
    nature: AdversaryMode,
) -> Vec<f64> {
    let n = imdp.labels.len();
    let goal: Vec<bool> = imdp.labels.iter().map(|l| l.as_str() == "Goal").collect();
    let haz: Vec<bool> = imdp.labels.iter().map(|l| l.as_str() == "Haz").collect();
    let mut v: Vec<f64> = goal.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
    for _ in 0..100_000 {
        let mut next = v.clone();
        let mut delta: f64 = 0.0;
        for q in 0..n {
            if goal[q] || haz[q] {
                continue;
            }
            let best = choices[q]
                .iter()
                .map(|dists| {
                    let vals = dists.iter().map(|d| d.iter().map(|&(s, p)| p * v[s]).sum::<f64>());
                    match nature {
                        AdversaryMode::Minimizing => vals.fold(f64::INFINITY, f64::min),
                        AdversaryMode::Maximizing => vals.fold(f64::NEG_INFINITY, f64::max),
                    }
                })
                .fold(0.0, f64::max);
            delta = delta.max((best - v[q]).abs());
            next[q] = best;
        }
        v = next;
        if delta < 1e-13 {
            break;
        }
    }
    v
}

/// The single distribution of each point-interval row.
pub fn point_choices(imdp: &Imdp) -> Choices {
    imdp.actions
        .iter()
        .map(|acts| {
            acts.iter()
                .map(|a| vec![a.successors.iter().map(|s| (s.state, s.low)).collect()])
                .collect()
        })
        .collect()
}

/// Every distribution in the row polytope on the 1/32 lattice. Lattice
/// rows from [`lattice_row`] have their vertices on this grid.
pub fn polytope_grid(row: &[Successor]) -> Vec<Vec<(usize, f64)>> {
    const STEPS: i64 = 32;
    let lo: Vec<i64> = row.iter().map(|s| (s.low * STEPS as f64).round() as i64).collect();
    let hi: Vec<i64> = row.iter().map(|s| (s.high * STEPS as f64).round() as i64).collect();
    let mut out = Vec::new();
    let mut cur = vec![0i64; row.len()];
    fn rec(
        k: usize,
        left: i64,
        lo: &[i64],
        hi: &[i64],
        cur: &mut Vec<i64>,
        row: &[Successor],
        out: &mut Vec<Vec<(usize, f64)>>,
    ) {
        if k + 1 == lo.len() {
            if left >= lo[k] && left <= hi[k] {
                cur[k] = left;
                out.push(
                    row.iter()
                        .zip(cur.iter())
                        .map(|(s, &u)| (s.state, u as f64 / STEPS as f64))
                        .collect(),
                );
            }
            return;
        }
        for u in lo[k]..=hi[k].min(left) {
            cur[k] = u;
            rec(k + 1, left - u, lo, hi, cur, row, out);
        }
    }
    rec(0, STEPS, &lo, &hi, &mut cur, row, &mut out);
    out
}

pub fn grid_choices(imdp: &Imdp) -> Choices {
    imdp.actions
        .iter()
        .map(|acts| acts.iter().map(|a| polytope_grid(&a.successors)).collect())
        .collect()
}

// ---------------------------------------------------------------- MECs

/// Maximal end components by enumerating every state subset.
pub fn brute_force_mecs(sub: &SubPimdp<'_>) -> Vec<Mec> {
    let n = sub.num_states();
    assert!(n <= 12, "exhaustive enumeration only for tiny models");
    let retained: Vec<usize> = sub.retained_states().collect();
    let mut ecs: Vec<(u32, BTreeMap<usize, Vec<usize>>)> = Vec::new();
    for mask in 1u32..(1 << retained.len()) {
        let set: Vec<usize> = (0..retained.len()).filter(|b| mask >> b & 1 == 1).map(|b| retained[b]).collect();
        let inside = |s: usize| set.contains(&s);
        let mut acts = BTreeMap::new();
        let mut ok = true;
        for &i in &set {
            let stay: Vec<usize> = sub
                .retained_actions(i)
                .filter(|(_, a)| a.successors.iter().all(|s| s.high == 0.0 || inside(s.state)))
                .map(|(k, _)| k)
                .collect();
            if stay.is_empty() {
                ok = false;
                break;
            }
            acts.insert(i, stay);
        }
        if !ok {
            continue;
        }
        // Strong connectivity under the staying actions.
        let reach_from = |start: usize| {
            let mut seen = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for &k in &acts[&i] {
                    for s in &sub.action(i, k).successors {
                        if s.high > 0.0 && seen.insert(s.state) {
                            stack.push(s.state);
                        }
                    }
                }
            }
            seen
        };
        if set.iter().all(|&i| reach_from(i).len() == set.len()) {
            let bits = set.iter().fold(0u32, |m, &i| m | 1 << i);
            ecs.push((bits, acts));
        }
    }
    let mut out: Vec<Mec> = ecs
        .iter()
        .filter(|(bits, _)| !ecs.iter().any(|(o, _)| o != bits && o & bits == *bits))
        .map(|(_, acts)| Mec {
            states: acts.keys().copied().collect(),
            actions: acts.clone(),
        })
        .collect();
    out.sort_by_key(|m| m.states[0]);
    out
}

// -------------------------------------------------------------- formulas

/// Formula syntax tree independent of the library representation.
#[derive(Debug, Clone)]
pub enum Ltl {
    Lit(&'static str, bool),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Eventually(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    pub fn render(&self) -> String {
        match self {
            Ltl::Lit(a, true) => a.to_string(),
            Ltl::Lit(a, false) => format!("!{a}"),
            Ltl::And(l, r) => format!("({} & {})", l.render(), r.render()),
            Ltl::Or(l, r) => format!("({} | {})", l.render(), r.render()),
            Ltl::Next(f) => format!("X {}", f.render()),
            Ltl::Eventually(f) => format!("F {}", f.render()),
            Ltl::Until(l, r) => format!("({} U {})", l.render(), r.render()),
        }
    }

    /// Finite-trace semantics with strong next: position `i` ranges over
    /// `0..=w.len()` and no literal holds at the end of the word.
    pub fn holds(&self, w: &[&str], i: usize) -> bool {
        let inside = i < w.len();
        match self {
            Ltl::Lit(a, pos) => inside && ((w[i] == *a) == *pos),
            Ltl::And(l, r) => l.holds(w, i) && r.holds(w, i),
            Ltl::Or(l, r) => l.holds(w, i) || r.holds(w, i),
            Ltl::Next(f) => inside && f.holds(w, i + 1),
            Ltl::Eventually(f) => (i..=w.len()).any(|j| f.holds(w, j)),
            Ltl::Until(l, r) => (i..=w.len()).any(|j| r.holds(w, j) && (i..j).all(|k| l.holds(w, k))),
        }
    }
}

/// Positive atoms come from `a`, `b`; the only negated atom is `!c`. No
/// formula contains both a literal and its complement, which keeps
/// tautologies such as `a | !a` out of the comparison: they are decided
/// one step early by progression but need one more letter under the
/// finite-trace semantics.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Ltl {
    if depth == 0 || rng.random_bool(0.2) {
        return [Ltl::Lit("a", true), Ltl::Lit("b", true), Ltl::Lit("c", false)][rng.random_range(0..3)].clone();
    }
    let op = rng.random_range(0..5);
    let mut sub = || Box::new(random_formula(rng, depth - 1));
    match op {
        0 => Ltl::And(sub(), sub()),
        1 => Ltl::Or(sub(), sub()),
        2 => Ltl::Next(sub()),
        3 => Ltl::Eventually(sub()),
        _ => Ltl::Until(sub(), sub()),
    }
}

pub const LETTERS: [&str; 4] = ["a", "b", "c", "none"];

pub fn random_word<R: Rng>(rng: &mut R, max_len: usize) -> Vec<&'static str> {
    (0..rng.random_range(0..=max_len))
        .map(|_| LETTERS[rng.random_range(0..4)])
        .collect()
}

// ----------------------------------------------------- transition oracle

/// One (region, action, successor, error bound) case on the 5x5 sink grid.
#[derive(Debug, Clone)]
pub struct TransitionCase {
    pub region: usize,
    pub action: usize,
    pub successor: usize,
    pub gamma: Vec<f64>,
}

pub fn random_transition_case<R: Rng>(rng: &mut R, p: &Partition) -> TransitionCase {
    let sink = p.sink();
    let region = rng.random_range(0..sink);
    let mut actions = p.neighbors(region);
    actions.push(region);
    let action = actions[rng.random_range(0..actions.len())];
    let mut succ = p.neighbors(action);
    succ.push(action);
    let successor = succ[rng.random_range(0..succ.len())];
    let g = rng.random_range(0.0..0.6);
    TransitionCase {
        region,
        action,
        successor,
        gamma: vec![g, rng.random_range(0.0..0.6)],
    }
}

/// Fraction of `draws` noise samples around `offset` that land in the box.
/// Noise is drawn by rejection from an untruncated normal, independently
/// of the library sampler.
pub fn landing_frequency<R: Rng>(rng: &mut R, offset: &[f64], lo: &[f64], hi: &[f64], draws: usize) -> f64 {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, 0.1).unwrap();
    let mut hits = 0usize;
    for _ in 0..draws {
        let inside = (0..offset.len()).all(|i| {
            let v = loop {
                let v: f64 = normal.sample(rng);
                if v.abs() <= 0.2 {
                    break v;
                }
            };
            let x = offset[i] + v;
            lo[i] <= x && x < hi[i]
        });
        hits += inside as usize;
    }
    hits as f64 / draws as f64
}

/// Whether `freq` is within three standard errors of `p`.
pub fn within_three_se(freq: f64, p: f64, draws: usize) -> bool {
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    (freq - p).abs() <= 3.0 * se + 1e-12
}

/// Extreme values of the 1-norm distance to `target` over a fine grid of
/// the box `center +- gamma`, including its corners and the projection of
/// the target.
pub fn brute_force_distance(center: &[f64], gamma: &[f64], target: &[f64]) -> (f64, f64) {
    let axes: Vec<Vec<f64>> = (0..center.len())
        .map(|i| {
            let (a, b) = (center[i] - gamma[i], center[i] + gamma[i]);
            let mut v: Vec<f64> = (0..=400).map(|k| a + (b - a) * k as f64 / 400.0).collect();
            v.push(target[i].clamp(a, b));
            v
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in &axes[0] {
        for &y in &axes[1] {
            let d = (x - target[0]).abs() + (y - target[1]).abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (lo, hi)
}

/// Simpson's rule for the truncated noise mass on `[lo, hi]` around
/// `offset`.
pub fn simpson_mass(sigma: f64, support: f64, offset: f64, lo: f64, hi: f64) -> f64 {
    let pdf = |v: f64| (-0.5 * (v / sigma).powi(2)).exp();
    let integrate = |a: f64, b: f64| {
        if a >= b {
            return 0.0;
        }
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for k in 1..n {
            s += pdf(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let a = (lo - offset).max(-support);
    let b = (hi - offset).min(support);
    integrate(a, b) / integrate(-support, support)
}

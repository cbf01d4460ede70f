//! Product of an interval MDP with a specification automaton.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::abstraction::{check_row, Imdp, Successor};
use crate::scltl::Fsa;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("label '{0}' is not in the automaton alphabet")]
    UnknownLabel(String),
    #[error("infeasible product row at state {state}")]
    Infeasible { state: usize },
    #[error("seed state ({0}, {1}) is out of range")]
    BadSeed(usize, usize),
}

/// Product action. `id` is the region the underlying abstract action steers
/// toward; successor `state`s index product states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductAction {
    pub id: usize,
    pub successors: Vec<Successor>,
}

/// Product states are (region, automaton state) pairs reachable from the
/// initial pair. The automaton advances on the label of the region being
/// entered, and the initial pair has already consumed the initial label.
/// Accepting states keep a single certain self-loop.
#[derive(Debug, Clone)]
pub struct Pimdp {
    states: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    actions: Vec<Vec<ProductAction>>,
    accepting: Vec<bool>,
    trap: Vec<bool>,
    initial: usize,
    num_regions: usize,
    num_fsa_states: usize,
}

impl Pimdp {
    pub fn build(imdp: &Imdp, fsa: &Fsa) -> Result<Self, ModelError> {
        Self::build_with_seeds(imdp, fsa, &[])
    }

    /// Like [`Pimdp::build`], but also materializes everything reachable from
    /// the extra `(region, automaton state)` seeds.
    pub fn build_with_seeds(
        imdp: &Imdp,
        fsa: &Fsa,
        seeds: &[(usize, usize)],
    ) -> Result<Self, ModelError> {
        if let Some(l) = imdp.labels.iter().find(|l| fsa.letter_index(l).is_none()) {
            return Err(ModelError::UnknownLabel(l.to_string()));
        }
        let next = |s: usize, q: usize| fsa.step(s, &imdp.labels[q]);

        let q0 = imdp.initial;
        let start = (q0, next(fsa.initial(), q0));
        let mut states = vec![start];
        let mut index = HashMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        for &(q, s) in seeds {
            if q >= imdp.num_states() || s >= fsa.num_states() {
                return Err(ModelError::BadSeed(q, s));
            }
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry((q, s)) {
                e.insert(states.len());
                queue.push_back(states.len());
                states.push((q, s));
            }
        }
        let mut actions: Vec<Vec<ProductAction>> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (q, s) = states[i];
            let row = if fsa.is_accepting(s) {
                vec![ProductAction {
                    id: q,
                    successors: vec![Successor { state: i, low: 1.0, high: 1.0 }],
                }]
            } else {
                imdp.actions[q]
                    .iter()
                    .map(|a| {
                        let successors = a
                            .successors
                            .iter()
                            .map(|t| {
                                let key = (t.state, next(s, t.state));
                                let j = *index.entry(key).or_insert_with(|| {
                                    states.push(key);
                                    queue.push_back(states.len() - 1);
                                    states.len() - 1
                                });
                                Successor { state: j, low: t.low, high: t.high }
                            })
                            .collect();
                        ProductAction { id: a.target, successors }
                    })
                    .collect()
            };
            if actions.len() <= i {
                actions.resize(i + 1, Vec::new());
            }
            actions[i] = row;
        }
        let accepting = states.iter().map(|&(_, s)| fsa.is_accepting(s)).collect();
        let trap = states.iter().map(|&(_, s)| fsa.is_trap(s)).collect();
        let p = Self {
            states,
            index,
            actions,
            accepting,
            trap,
            initial: 0,
            num_regions: imdp.num_states(),
            num_fsa_states: fsa.num_states(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state(&self, i: usize) -> (usize, usize) {
        self.states[i]
    }

    pub fn index_of(&self, region: usize, fsa_state: usize) -> Option<usize> {
        self.index.get(&(region, fsa_state)).copied()
    }

    pub fn actions(&self, i: usize) -> &[ProductAction] {
        &self.actions[i]
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.accepting[i]
    }

    pub fn is_trap(&self, i: usize) -> bool {
        self.trap[i]
    }

    pub fn accepting(&self) -> &[bool] {
        &self.accepting
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    pub fn num_fsa_states(&self) -> usize {
        self.num_fsa_states
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() || acts.iter().any(|a| !check_row(&a.successors, self.num_states())) {
                return Err(ModelError::Infeasible { state: i });
            }
        }
        Ok(())
    }

    /// Every state and action retained.
    pub fn full(&self) -> SubPimdp<'_> {
        SubPimdp {
            parent: self,
            retained: vec![true; self.num_states()],
            actions: self
                .actions
                .iter()
                .map(|a| (0..a.len()).collect())
                .collect(),
        }
    }

    /// Rows `q.s alpha q'.s' low high` after a header, like the interval MDP
    /// text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pimdp");
        let _ = writeln!(out, "states {}", self.num_states());
        let (q, s) = self.states[self.initial];
        let _ = writeln!(out, "initial {q}.{s}");
        let acc: Vec<String> = (0..self.num_states())
            .filter(|&i| self.accepting[i])
            .map(|i| format!("{}.{}", self.states[i].0, self.states[i].1))
            .collect();
        let _ = writeln!(out, "accepting {}", acc.join(" "));
        for (i, acts) in self.actions.iter().enumerate() {
            let (q, s) = self.states[i];
            for a in acts {
                for t in &a.successors {
                    let (q2, s2) = self.states[t.state];
                    let _ = writeln!(out, "{q}.{s} {} {q2}.{s2} {} {}", a.id, t.low, t.high);
                }
            }
        }
        out
    }
}

/// A view of a product restricted to some states and, per state, a subset
/// of its actions (indices into the parent's action list).
#[derive(Debug, Clone)]
pub struct SubPimdp<'a> {
    pub parent: &'a Pimdp,
    pub retained: Vec<bool>,
    pub actions: Vec<Vec<usize>>,
}

impl<'a> SubPimdp<'a> {
    pub fn num_states(&self) -> usize {
        self.parent.num_states()
    }

    pub fn is_retained(&self, i: usize) -> bool {
        self.retained[i]
    }

    pub fn action(&self, i: usize, k: usize) -> &'a ProductAction {
        &self.parent.actions[i][k]
    }

    /// Retained actions of state `i` as (parent index, action) pairs.
    pub fn retained_actions(&self, i: usize) -> impl Iterator<Item = (usize, &'a ProductAction)> + '_ {
        let parent = self.parent;
        self.actions[i].iter().map(move |&k| (k, &parent.actions[i][k]))
    }

    pub fn retained_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&i| self.retained[i])
    }
}

/// States whose best-case satisfaction probability is exactly zero.
pub fn failure_states(upper_values: &[f64]) -> Vec<bool> {
    upper_values.iter().map(|&v| v == 0.0).collect()
}

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt::Write as _;

use super::formula::{Formula, Observation};
use super::ScltlError;

/// Default ceiling on the number of progression states.
pub const DEFAULT_STATE_CAP: usize = 10_000;

/// Deterministic automaton obtained by closing a formula under progression.
///
/// States are normalized formulas. The only accepting state is `true`; the
/// `false` state, when reachable, is a trap.
#[derive(Debug, Clone)]
pub struct Fsa {
    alphabet: Vec<Observation>,
    states: Vec<Formula>,
    delta: Vec<Vec<usize>>,
    accepting: Vec<bool>,
}

impl Fsa {
    /// Build the automaton for `formula` over `alphabet`.
    ///
    /// The alphabet is extended with the formula's own atoms and with the
    /// `none` and `out` observations, then sorted.
    pub fn build(formula: &Formula, alphabet: &[Observation]) -> Result<Self, ScltlError> {
        Self::build_with_cap(formula, alphabet, DEFAULT_STATE_CAP)
    }

    pub fn build_with_cap(
        formula: &Formula,
        alphabet: &[Observation],
        cap: usize,
    ) -> Result<Self, ScltlError> {
        let mut letters: Vec<Observation> = alphabet.to_vec();
        letters.extend(formula.atoms());
        letters.push(Observation::none());
        letters.push(Observation::out());
        letters.sort();
        letters.dedup();

        let mut states = vec![formula.clone()];
        let mut index: HashMap<Formula, usize> = HashMap::from([(formula.clone(), 0)]);
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let mut row = Vec::with_capacity(letters.len());
            for o in &letters {
                let next = states[s].progress(o);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= cap {
                            return Err(ScltlError::StateCapExceeded(cap));
                        }
                        let id = states.len();
                        index.insert(next.clone(), id);
                        states.push(next);
                        queue.push_back(id);
                        id
                    }
                };
                row.push(id);
            }
            if delta.len() <= s {
                delta.resize(s + 1, Vec::new());
            }
            delta[s] = row;
        }
        let accepting = states.iter().map(|f| *f == Formula::True).collect();
        Ok(Self {
            alphabet: letters,
            states,
            delta,
            accepting,
        })
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet(&self) -> &[Observation] {
        &self.alphabet
    }

    pub fn formula(&self, state: usize) -> &Formula {
        &self.states[state]
    }

    pub fn letter_index(&self, o: &Observation) -> Option<usize> {
        self.alphabet.binary_search(o).ok()
    }

    /// Transition on `o`. Observations outside the alphabet behave like an
    /// unmentioned label, which for any formula is the same as `none`.
    pub fn step(&self, state: usize, o: &Observation) -> usize {
        let letter = self
            .letter_index(o)
            .or_else(|| self.letter_index(&Observation::none()))
            .expect("alphabet always contains none");
        self.delta[state][letter]
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn is_trap(&self, state: usize) -> bool {
        self.states[state] == Formula::False
    }

    /// Whether some prefix of `word`, including the empty one, reaches an
    /// accepting state from the initial state.
    pub fn accepts<'a>(
        &self,
        word: impl IntoIterator<Item = &'a Observation>,
    ) -> Result<bool, ScltlError> {
        let mut s = self.initial();
        if self.is_accepting(s) {
            return Ok(true);
        }
        for o in word {
            let letter = self
                .letter_index(o)
                .ok_or_else(|| ScltlError::UnknownLetter(o.to_string()))?;
            s = self.delta[s][letter];
            if self.is_accepting(s) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Human-readable dump: one line per state, then one per transition.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, f) in self.states.iter().enumerate() {
            let tag = if self.accepting[i] {
                " accepting"
            } else if self.is_trap(i) {
                " trap"
            } else {
                ""
            };
            let _ = writeln!(out, "state {i} \"{f}\"{tag}");
        }
        for (s, row) in self.delta.iter().enumerate() {
            for (l, &t) in row.iter().enumerate() {
                let _ = writeln!(out, "{s} -- {} --> {t}", self.alphabet[l]);
            }
        }
        out
    }
}

use std::fmt;
use std::sync::Arc;

use super::ScltlError;

/// An atomic observation emitted by a region's labeling function.
///
/// Exactly one observation holds per step, so a word over observations is a
/// plain sequence of tokens rather than a sequence of sets.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation(Arc<str>);

impl Observation {
    /// Default label for regions without a named observation.
    pub const NONE: &'static str = "none";
    /// Label of the off-grid sink region.
    pub const OUT: &'static str = "out";

    pub fn new(name: &str) -> Result<Self, ScltlError> {
        if !is_token(name) {
            return Err(ScltlError::InvalidObservation(name.to_string()));
        }
        Ok(Self(Arc::from(name)))
    }

    pub fn none() -> Self {
        Self(Arc::from(Self::NONE))
    }

    pub fn out() -> Self {
        Self(Arc::from(Self::OUT))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) const KEYWORDS: [&str; 5] = ["X", "F", "U", "true", "false"];

pub(crate) fn is_token(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

/// A syntactically co-safe LTL formula in normalized form.
///
/// Values are only built through the smart constructors below, which keep
/// the Boolean structure as a sorted, absorbed disjunction of conjunctions
/// with constants folded. This makes structural equality usable for
/// identifying progression states.
/// `False` never appears in parsed user input; it is the progression trap.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    False,
    True,
    Atom(Observation),
    NegAtom(Observation),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn atom(o: Observation) -> Self {
        Formula::Atom(o)
    }

    pub fn not_atom(o: Observation) -> Self {
        Formula::NegAtom(o)
    }

    pub fn and(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut cubes: Vec<Cube> = vec![Vec::new()];
        for f in items {
            let rhs = f.cubes();
            cubes = cubes
                .iter()
                .flat_map(|l| {
                    rhs.iter().map(move |r| {
                        let mut c = l.clone();
                        c.extend(r.iter().cloned());
                        c
                    })
                })
                .collect();
            if cubes.is_empty() {
                break;
            }
        }
        from_cubes(cubes)
    }

    pub fn or(items: impl IntoIterator<Item = Formula>) -> Self {
        from_cubes(items.into_iter().flat_map(|f| f.cubes()).collect())
    }

    /// Disjunctive normal form over literals and temporal subformulas.
    fn cubes(&self) -> Vec<Cube> {
        match self {
            Formula::True => vec![Vec::new()],
            Formula::False => Vec::new(),
            Formula::And(cs) => vec![cs.clone()],
            Formula::Or(ds) => ds.iter().flat_map(|d| d.cubes()).collect(),
            other => vec![vec![other.clone()]],
        }
    }

    pub fn next(f: Formula) -> Self {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            other => Formula::Next(Box::new(other)),
        }
    }

    pub fn until(lhs: Formula, rhs: Formula) -> Self {
        match (lhs, rhs) {
            (_, Formula::True) => Formula::True,
            (_, Formula::False) => Formula::False,
            (Formula::False, rhs) => rhs,
            (Formula::True, rhs) => Formula::eventually(rhs),
            (lhs, rhs) if lhs == rhs => rhs,
            (lhs, rhs) => Formula::Until(Box::new(lhs), Box::new(rhs)),
        }
    }

    pub fn eventually(f: Formula) -> Self {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            e @ Formula::Eventually(_) => e,
            other => Formula::Eventually(Box::new(other)),
        }
    }

    /// One-step formula progression under observation `o`.
    pub fn progress(&self, o: &Observation) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => {
                if a == o {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::NegAtom(a) => {
                if a == o {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            Formula::And(cs) => Formula::and(cs.iter().map(|c| c.progress(o))),
            Formula::Or(cs) => Formula::or(cs.iter().map(|c| c.progress(o))),
            Formula::Next(f) => (**f).clone(),
            Formula::Until(lhs, rhs) => Formula::or([
                rhs.progress(o),
                Formula::and([lhs.progress(o), self.clone()]),
            ]),
            Formula::Eventually(f) => Formula::or([f.progress(o), self.clone()]),
        }
    }

    /// Observations mentioned by atoms of the formula, sorted and unique.
    pub fn atoms(&self) -> Vec<Observation> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Observation>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) | Formula::NegAtom(a) => out.push(a.clone()),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            Formula::Next(f) | Formula::Eventually(f) => f.collect_atoms(out),
            Formula::Until(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Until(..) => 0,
            Formula::Or(_) => 1,
            Formula::And(_) => 2,
            Formula::Next(_) | Formula::Eventually(_) => 3,
            _ => 4,
        }
    }
}

/// A conjunction of literals and temporal subformulas.
type Cube = Vec<Formula>;

fn is_subset(small: &[Formula], big: &[Formula]) -> bool {
    small.len() <= big.len() && small.iter().all(|f| big.binary_search(f).is_ok())
}

/// Rebuild a formula from cubes: contradictory cubes are dropped, cubes
/// implied by smaller ones are absorbed, and what remains is sorted. Every
/// Boolean combination of the same finite set of temporal subformulas thus
/// has a single representation, which keeps progression finite.
fn from_cubes(cubes: Vec<Cube>) -> Formula {
    let mut cubes: Vec<Cube> = cubes
        .into_iter()
        .map(|mut c| {
            c.sort();
            c.dedup();
            c
        })
        .filter(|c| !has_complementary_literals(c))
        .collect();
    cubes.sort();
    cubes.dedup();
    if cubes.iter().any(Vec::is_empty) {
        return Formula::True;
    }
    let kept: Vec<bool> = (0..cubes.len())
        .map(|i| !(0..cubes.len()).any(|j| j != i && is_subset(&cubes[j], &cubes[i])))
        .collect();
    let mut terms: Vec<Formula> = cubes
        .into_iter()
        .zip(kept)
        .filter_map(|(mut c, keep)| {
            keep.then(|| if c.len() == 1 { c.pop().unwrap() } else { Formula::And(c) })
        })
        .collect();
    terms.sort();
    if has_complementary_literals(&terms) {
        return Formula::True;
    }
    match terms.len() {
        0 => Formula::False,
        1 => terms.pop().unwrap(),
        _ => Formula::Or(terms),
    }
}

fn has_complementary_literals(sorted: &[Formula]) -> bool {
    sorted.iter().any(|f| match f {
        Formula::Atom(a) => sorted
            .binary_search(&Formula::NegAtom(a.clone()))
            .is_ok(),
        _ => false,
    })
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::NegAtom(a) => write!(f, "!{a}"),
            Formula::And(cs) | Formula::Or(cs) => {
                let (sep, min_prec) = if matches!(self, Formula::And(_)) {
                    (" & ", 3)
                } else {
                    (" | ", 2)
                };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write_child(f, c, min_prec)?;
                }
                Ok(())
            }
            Formula::Next(c) => {
                f.write_str("X ")?;
                write_child(f, c, 3)
            }
            Formula::Eventually(c) => {
                f.write_str("F ")?;
                write_child(f, c, 3)
            }
            Formula::Until(l, r) => {
                write_child(f, l, 1)?;
                f.write_str(" U ")?;
                write_child(f, r, 1)
            }
        }
    }
}

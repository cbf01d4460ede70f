use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::model::SubPimdp;

/// Maximal end component: states and, for each, the actions that keep the
/// process inside. Action entries index the parent product's action list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mec {
    pub states: Vec<usize>,
    pub actions: BTreeMap<usize, Vec<usize>>,
}

impl Mec {
    pub fn contains(&self, state: usize) -> bool {
        self.states.binary_search(&state).is_ok()
    }
}

/// Decompose the view into maximal end components by repeatedly splitting
/// into strongly connected components of the positive-upper-bound graph and
/// discarding actions that can leave their component. Components are
/// returned in order of their smallest state.
pub fn mec_decompose(sub: &SubPimdp<'_>) -> Vec<Mec> {
    let n = sub.num_states();
    let mut acts: Vec<Vec<usize>> = (0..n)
        .map(|i| if sub.is_retained(i) { sub.actions[i].clone() } else { Vec::new() })
        .collect();
    let mut comp = vec![usize::MAX; n];
    loop {
        let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for i in 0..n {
            for &k in &acts[i] {
                for s in &sub.action(i, k).successors {
                    if s.high > 0.0 {
                        graph.add_edge(nodes[i], nodes[s.state], ());
                    }
                }
            }
        }
        for (c, scc) in tarjan_scc(&graph).into_iter().enumerate() {
            for node in scc {
                comp[node.index()] = c;
            }
        }
        let alive: Vec<bool> = acts.iter().map(|a| !a.is_empty()).collect();
        let mut changed = false;
        for i in 0..n {
            let before = acts[i].len();
            acts[i].retain(|&k| {
                sub.action(i, k)
                    .successors
                    .iter()
                    .all(|s| s.high == 0.0 || (comp[s.state] == comp[i] && alive[s.state]))
            });
            changed |= acts[i].len() != before;
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        if !acts[i].is_empty() {
            groups.entry(comp[i]).or_default().push(i);
        }
    }
    let mut mecs: Vec<Mec> = groups
        .into_values()
        .map(|states| Mec {
            actions: states.iter().map(|&i| (i, acts[i].clone())).collect(),
            states,
        })
        .collect();
    mecs.sort_by_key(|m| m.states[0]);
    mecs
}

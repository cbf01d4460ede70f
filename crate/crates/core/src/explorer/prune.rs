use crate::model::{Pimdp, SubPimdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PruneStats {
    /// Passes of the outer loop, including the final one that changes nothing.
    pub outer_loops: usize,
    pub removed_states: usize,
}

/// Remove every action that can reach a removed state, then every state
/// left without actions, until nothing changes. Failure states are removed
/// up front.
pub fn nonviolating_subgraph<'a>(p: &'a Pimdp, failures: &[bool]) -> (SubPimdp<'a>, PruneStats) {
    let n = p.num_states();
    assert_eq!(failures.len(), n, "one failure flag per product state");
    let mut removed = failures.to_vec();
    let mut actions: Vec<Vec<usize>> = (0..n)
        .map(|i| if removed[i] { Vec::new() } else { (0..p.actions(i).len()).collect() })
        .collect();
    let mut outer_loops = 0;
    loop {
        outer_loops += 1;
        let mut newly = Vec::new();
        for i in 0..n {
            if removed[i] {
                continue;
            }
            let acts = p.actions(i);
            actions[i].retain(|&k| {
                acts[k]
                    .successors
                    .iter()
                    .all(|s| s.high == 0.0 || !removed[s.state])
            });
            if actions[i].is_empty() {
                newly.push(i);
            }
        }
        if newly.is_empty() {
            break;
        }
        for i in newly {
            removed[i] = true;
        }
    }
    let stats = PruneStats {
        outer_loops,
        removed_states: removed.iter().filter(|&&r| r).count(),
    };
    let sub = SubPimdp {
        parent: p,
        retained: removed.iter().map(|r| !r).collect(),
        actions,
    };
    (sub, stats)
}

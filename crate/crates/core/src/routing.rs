//! Greedy decentralized routing over a base graph plus shortcuts.

use crate::augment::ShortcutTable;
use crate::basegraph::BaseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Arrived,
    /// No candidate is strictly closer to the target.
    DeadEnd,
    StepCapExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub path: Vec<u32>,
    pub outcome: Outcome,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }
}

/// Next vertex from `x` toward `target`: the closest candidate among base
/// neighbours and shortcuts, lowest id on ties. `None` unless it is strictly
/// closer than `x`.
#[inline]
pub fn next_hop(g: &BaseGraph, s: &ShortcutTable, x: usize, target: usize) -> Option<usize> {
    let mut best = (g.distance_key(x, target), x);
    let here = best.0;
    for &c in g.neighbors(x).iter().chain(s.shortcuts(x)) {
        let c = c as usize;
        if c == x {
            continue;
        }
        let cand = (g.distance_key(c, target), c);
        if cand < best {
            best = cand;
        }
    }
    (best.0 < here).then_some(best.1)
}

/// Greedy walk, appending visited vertices (source first) to `path`.
pub fn greedy_walk_into(
    g: &BaseGraph,
    s: &ShortcutTable,
    source: usize,
    target: usize,
    step_cap: usize,
    path: &mut Vec<u32>,
) -> Outcome {
    path.clear();
    path.push(source as u32);
    let mut x = source;
    while x != target {
        if path.len() > step_cap {
            return Outcome::StepCapExceeded;
        }
        match next_hop(g, s, x, target) {
            Some(y) => {
                x = y;
                path.push(y as u32);
            }
            None => return Outcome::DeadEnd,
        }
    }
    Outcome::Arrived
}

/// Hop count of a greedy walk without recording the path.
pub fn greedy_hops(g: &BaseGraph, s: &ShortcutTable, source: usize, target: usize, step_cap: usize) -> (usize, Outcome) {
    let mut x = source;
    let mut hops = 0;
    while x != target {
        if hops == step_cap {
            return (hops, Outcome::StepCapExceeded);
        }
        match next_hop(g, s, x, target) {
            Some(y) => {
                x = y;
                hops += 1;
            }
            None => return (hops, Outcome::DeadEnd),
        }
    }
    (hops, Outcome::Arrived)
}

pub fn greedy_route(g: &BaseGraph, s: &ShortcutTable, source: usize, target: usize, step_cap: usize) -> Route {
    let mut path = Vec::new();
    let outcome = greedy_walk_into(g, s, source, target, step_cap, &mut path);
    Route { path, outcome }
}

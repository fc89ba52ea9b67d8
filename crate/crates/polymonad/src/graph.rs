//! Constraint bags viewed as graphs: bind edges, unification edges, flow
//! edges and the search for a core.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::syntax::{print_monad, BindConstraint, MonadType, Namer, Tv};

/// Three vertices per constraint: vertex `3 * c + i` is slot `i` of
/// constraint `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGraph {
    pub assign: Vec<MonadType>,
    /// Directed `(π.0, π.2)` and `(π.1, π.2)`.
    pub bind_edges: Vec<(usize, usize)>,
    /// Undirected, stored with the smaller vertex first.
    pub eq_edges: Vec<(usize, usize)>,
}

/// A unification edge from a result vertex into an argument vertex of a
/// different constraint, oriented in the direction of dataflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowEdge {
    pub source: usize,
    pub sink: usize,
}

impl FlowEdge {
    pub fn producer(&self) -> usize {
        self.source / 3
    }

    pub fn consumer(&self) -> usize {
        self.sink / 3
    }

    pub fn sink_slot(&self) -> usize {
        self.sink % 3
    }

    pub fn touches(&self, v: usize) -> bool {
        self.source == v || self.sink == v
    }
}

/// Which two binds a flow edge composes, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composite {
    /// `lam x y z. b_outer (b_inner x y) z`
    Left { inner: usize, outer: usize },
    /// `lam x y z. b_outer x (lam a. b_inner (y a) z)`
    Right { inner: usize, outer: usize },
}

pub fn build_graph(bag: &[BindConstraint]) -> ConstraintGraph {
    let assign: Vec<MonadType> = bag.iter().flat_map(|c| c.parts().map(|m| m.clone())).collect();
    let bind_edges = (0..bag.len()).flat_map(|c| [(3 * c, 3 * c + 2), (3 * c + 1, 3 * c + 2)]).collect();
    let mut eq_edges = Vec::new();
    for i in 0..assign.len() {
        for j in i + 1..assign.len() {
            if let (MonadType::Var(a), MonadType::Var(b)) = (&assign[i], &assign[j]) {
                if a == b {
                    eq_edges.push((i, j));
                }
            }
        }
    }
    ConstraintGraph { assign, bind_edges, eq_edges }
}

impl ConstraintGraph {
    pub fn constraint_count(&self) -> usize {
        self.assign.len() / 3
    }

    pub fn flow_edges(&self) -> Vec<FlowEdge> {
        let mut out = Vec::new();
        for &(a, b) in &self.eq_edges {
            for (s, t) in [(a, b), (b, a)] {
                if s % 3 == 2 && t % 3 != 2 && s / 3 != t / 3 {
                    out.push(FlowEdge { source: s, sink: t });
                }
            }
        }
        out.sort();
        out
    }

    pub fn var_of(&self, v: usize) -> Option<Tv> {
        self.assign[v].as_var()
    }

    /// Text dump: vertices, then bind edges, then unification edges.
    pub fn dump(&self, namer: &mut Namer) -> String {
        let mut s = String::new();
        for (i, m) in self.assign.iter().enumerate() {
            let _ = writeln!(s, "v{i} := {}", print_monad(m, namer));
        }
        for (a, b) in &self.bind_edges {
            let _ = writeln!(s, "v{a} -> v{b}");
        }
        for (a, b) in &self.eq_edges {
            let _ = writeln!(s, "v{a} == v{b}");
        }
        s
    }
}

pub fn flow_interpretation(eta: &FlowEdge) -> Composite {
    if eta.sink_slot() == 0 {
        Composite::Left { inner: eta.producer(), outer: eta.consumer() }
    } else {
        Composite::Right { inner: eta.producer(), outer: eta.consumer() }
    }
}

/// The flow edges kept by a core.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Core {
    pub flow: Vec<FlowEdge>,
}

/// Vertices whose variable is free in the bag but not protected.
pub fn open_vertices(g: &ConstraintGraph, protected: &BTreeSet<Tv>) -> Vec<usize> {
    (0..g.assign.len()).filter(|&v| g.var_of(v).is_some_and(|x| !protected.contains(&x))).collect()
}

fn has_cycle(n_constraints: usize, flow: &[FlowEdge]) -> bool {
    // Constraint-level graph: an edge c -> c' for each flow edge. A cycle
    // there is exactly a path from some π.2 back into π.0 or π.1.
    let mut succ = vec![Vec::new(); n_constraints];
    for e in flow {
        succ[e.producer()].push(e.consumer());
    }
    let mut state = vec![0u8; n_constraints];
    fn visit(c: usize, succ: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[c] = 1;
        for &d in &succ[c] {
            if state[d] == 1 || (state[d] == 0 && visit(d, succ, state)) {
                return true;
            }
        }
        state[c] = 2;
        false
    }
    (0..n_constraints).any(|c| state[c] == 0 && visit(c, &succ, &mut state))
}

/// Searches for a core: flow edges forming no dataflow cycle such that
/// every open vertex touches one. The first core in vertex and edge order
/// is returned.
pub fn find_core(g: &ConstraintGraph, protected: &BTreeSet<Tv>) -> Option<Core> {
    let open = open_vertices(g, protected);
    let flows = g.flow_edges();
    let incident: Vec<Vec<FlowEdge>> =
        open.iter().map(|&v| flows.iter().copied().filter(|e| e.touches(v)).collect()).collect();
    if incident.iter().any(|es| es.is_empty()) {
        return None;
    }
    let mut chosen = Vec::new();
    fn go(
        k: usize,
        open: &[usize],
        incident: &[Vec<FlowEdge>],
        n: usize,
        chosen: &mut Vec<FlowEdge>,
    ) -> bool {
        if k == open.len() {
            return true;
        }
        if chosen.iter().any(|e| e.touches(open[k])) {
            return go(k + 1, open, incident, n, chosen);
        }
        for e in &incident[k] {
            chosen.push(*e);
            if !has_cycle(n, chosen) && go(k + 1, open, incident, n, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    go(0, &open, &incident, g.constraint_count(), &mut chosen).then(|| {
        chosen.sort();
        Core { flow: chosen }
    })
}

pub fn unambiguous(bag: &[BindConstraint], protected: &BTreeSet<Tv>) -> bool {
    find_core(&build_graph(bag), protected).is_some()
}

/// Re-checks both core conditions independently of the search.
pub fn is_core(g: &ConstraintGraph, protected: &BTreeSet<Tv>, core: &Core) -> bool {
    let flows = g.flow_edges();
    core.flow.iter().all(|e| flows.contains(e))
        && !has_cycle(g.constraint_count(), &core.flow)
        && open_vertices(g, protected).iter().all(|&v| core.flow.iter().any(|e| e.touches(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: Tv) -> MonadType {
        MonadType::Var(i)
    }

    fn g(name: &str) -> MonadType {
        MonadType::ground(name, vec![])
    }

    #[test]
    fn empty_graph() {
        let gr = build_graph(&[]);
        assert!(gr.assign.is_empty());
        assert_eq!(find_core(&gr, &BTreeSet::new()), Some(Core::default()));
    }

    #[test]
    fn two_constraint_cycle_counts() {
        let bag = [BindConstraint::new(g("M1"), v(1), v(2)), BindConstraint::new(g("M2"), v(2), v(1))];
        let gr = build_graph(&bag);
        assert_eq!(gr.assign.len(), 6);
        assert_eq!(gr.bind_edges.len(), 4);
        // Two undirected edges, four as ordered pairs.
        assert_eq!(gr.eq_edges.len(), 2);
        // Each shared variable gives one flow edge, and together they cycle.
        assert_eq!(gr.flow_edges().len(), 2);
        assert_eq!(find_core(&gr, &BTreeSet::new()), None);
        assert!(find_core(&gr, &[1].into_iter().collect()).is_some());
    }

    #[test]
    fn application_bag_is_unambiguous() {
        let bag = [BindConstraint::new(MonadType::Bot, v(1), v(2)), BindConstraint::new(MonadType::Bot, v(2), v(3))];
        let gr = build_graph(&bag);
        let protected = [1, 3].into_iter().collect();
        let core = find_core(&gr, &protected).unwrap();
        assert_eq!(core.flow, vec![FlowEdge { source: 2, sink: 4 }]);
        assert!(is_core(&gr, &protected, &core));
        assert_eq!(flow_interpretation(&core.flow[0]), Composite::Right { inner: 0, outer: 1 });
    }

    #[test]
    fn self_cycle_is_ambiguous() {
        let bag = [BindConstraint::morphism(v(0), v(0))];
        assert!(!unambiguous(&bag, &BTreeSet::new()));
    }

    #[test]
    fn left_composition() {
        let bag = [BindConstraint::new(g("M"), g("N"), v(1)), BindConstraint::new(v(1), g("R"), g("T"))];
        let gr = build_graph(&bag);
        let core = find_core(&gr, &BTreeSet::new()).unwrap();
        assert_eq!(flow_interpretation(&core.flow[0]), Composite::Left { inner: 0, outer: 1 });
    }

    #[test]
    fn dump_format() {
        let gr = build_graph(&[BindConstraint::morphism(v(4), v(4))]);
        let text = gr.dump(&mut Namer::default());
        assert_eq!(text, "v0 := n1\nv1 := Bot\nv2 := n1\nv0 -> v2\nv1 -> v2\nv0 == v2\n");
    }
}

//! Finding ground instantiations for the open variables of a bag.
//!
//! Index variables, monadic variables and constructor patterns are
//! variables of one finite CSP over the signature's ground relation,
//! kept arc consistent during a backtracking search. Branching follows
//! a fixed order (index variables, then monadic variables), so the first
//! solution found is the canonical one.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use crate::graph::{flow_interpretation, ConstraintGraph};
use crate::runtime::{composite_outcomes, EdgeShapes, Interp, Shape};
use crate::signature::{constraint_vars, entail_ground, explain_failure, match_monad, Signature, TheoryDescriptor, Universe, DEFAULT_DEPTH};
use crate::syntax::{print_constraint, BindConstraint, MonadType, Namer, Subst, Tv, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Nesting bound for protocol states.
    pub depth: usize,
    /// Extra nesting tried for protocol states before giving up.
    pub unroll: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { depth: DEFAULT_DEPTH, unroll: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("unsatisfiable constraint {constraint}{}", reason.as_ref().map(|r| format!(": {r}")).unwrap_or_default())]
    Unsatisfiable { index: usize, constraint: String, reason: Option<String> },
    #[error("unsolved: cyclic constraints")]
    Cyclic,
}

/// Ground choices for the monadic and index variables of a bag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Solution {
    pub subst: Subst,
    /// Nesting bound the solution was found under.
    pub depth: usize,
}

impl Solution {
    /// The ground monad at every vertex of `g`.
    pub fn assignment(&self, g: &ConstraintGraph) -> Vec<MonadType> {
        g.assign.iter().map(|m| self.subst.monad(m)).collect()
    }

    pub fn apply(&self, bag: &[BindConstraint]) -> Vec<BindConstraint> {
        self.subst.bag(bag)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Known(usize),
    Var(usize),
}

enum Con {
    /// A bind triple over ground-constructor slots.
    Bind([Slot; 3]),
    /// `at[g]` is the candidate of index variable `idx` that makes
    /// pattern variable `pat` equal ground constructor `g`.
    Link { pat: usize, idx: usize, at: Vec<Option<usize>> },
}

/// A finite CSP. Index variables come first, then monadic variables,
/// then one variable per distinct non-ground constructor pattern.
struct Search<'a> {
    u: &'a Universe,
    cons: Vec<Con>,
    /// Constraints mentioning each variable.
    watch: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn dom(&self, s: Slot, doms: &[FixedBitSet]) -> FixedBitSet {
        match s {
            Slot::Known(i) => {
                let mut d = FixedBitSet::with_capacity(self.u.len());
                d.insert(i);
                d
            }
            Slot::Var(v) => doms[v].clone(),
        }
    }

    /// Removes values without support in constraint `c`; returns the
    /// variables whose domains shrank, or None on a wipe-out.
    fn revise(&self, c: usize, doms: &mut [FixedBitSet]) -> Option<Vec<usize>> {
        let supports = match &self.cons[c] {
            Con::Bind(slots) => self.bind_supports(*slots, doms),
            Con::Link { pat, idx, at } => {
                let mut sp = FixedBitSet::with_capacity(doms[*pat].len());
                let mut si = FixedBitSet::with_capacity(doms[*idx].len());
                for g in doms[*pat].ones() {
                    if let Some(k) = at[g].filter(|k| doms[*idx].contains(*k)) {
                        sp.insert(g);
                        si.insert(k);
                    }
                }
                vec![(Slot::Var(*pat), sp), (Slot::Var(*idx), si)]
            }
        };
        let mut changed = Vec::new();
        for (slot, support) in supports {
            match slot {
                Slot::Known(i) => {
                    if !support.contains(i) {
                        return None;
                    }
                }
                Slot::Var(v) => {
                    let mut d = doms[v].clone();
                    d.intersect_with(&support);
                    if d.count_ones(..) == 0 {
                        return None;
                    }
                    if d != doms[v] {
                        doms[v] = d;
                        changed.push(v);
                    }
                }
            }
        }
        Some(changed)
    }

    fn bind_supports(&self, [a, b, r]: [Slot; 3], doms: &[FixedBitSet]) -> Vec<(Slot, FixedBitSet)> {
        let (da, db, dr) = (self.dom(a, doms), self.dom(b, doms), self.dom(r, doms));
        let n = self.u.len();
        let (mut sa, mut sb, mut sr) = (FixedBitSet::with_capacity(n), FixedBitSet::with_capacity(n), FixedBitSet::with_capacity(n));
        let r_open = matches!(r, Slot::Var(_)) && r != a && r != b && dr.count_ones(..) > 1;
        for x in da.ones() {
            for y in db.intersection(self.u.partners(x)) {
                if a == b && x != y {
                    continue;
                }
                let res = self.u.results(x, y);
                let ok = if r == a {
                    res.contains(x) && dr.contains(x) && (r != b || x == y)
                } else if r == b {
                    res.contains(y) && dr.contains(y)
                } else {
                    let hit = res.intersection(&dr).next().is_some();
                    if hit && r_open {
                        sr.extend(res.intersection(&dr));
                    }
                    hit
                };
                if ok {
                    sa.insert(x);
                    sb.insert(y);
                    if !r_open {
                        sr.insert(if r == a { x } else if r == b { y } else { dr.ones().next().unwrap() });
                    }
                }
            }
        }
        vec![(a, sa), (b, sb), (r, sr)]
    }

    /// Arc consistency over the constraints in `queue` and everything
    /// they disturb.
    fn propagate(&self, doms: &mut [FixedBitSet], mut queue: Vec<usize>) -> bool {
        let mut queued = FixedBitSet::with_capacity(self.cons.len());
        for &c in &queue {
            queued.insert(c);
        }
        while let Some(c) = queue.pop() {
            queued.set(c, false);
            let Some(changed) = self.revise(c, doms) else {
                return false;
            };
            for v in changed {
                for &d in &self.watch[v] {
                    if d != c && !queued.put(d) {
                        queue.push(d);
                    }
                }
            }
        }
        true
    }

    fn run(&self, doms: Vec<FixedBitSet>, f: &mut dyn FnMut(&[FixedBitSet]) -> bool) -> bool {
        let Some(v) = (0..doms.len()).find(|&v| doms[v].count_ones(..) > 1) else {
            return f(&doms);
        };
        for x in doms[v].ones() {
            let mut d = doms.clone();
            d[v].clear();
            d[v].insert(x);
            if self.propagate(&mut d, self.watch[v].clone()) && !self.run(d, f) {
                return false;
            }
        }
        true
    }
}

/// Index variables of a bag with their candidate values.
fn index_candidates(sig: &Signature, bag: &[BindConstraint], depth: usize) -> Vec<(Tv, Vec<ValueType>)> {
    let mut sorts = BTreeMap::new();
    let mut order = Vec::new();
    for c in bag {
        for (v, s) in constraint_vars(sig, c).1 {
            if !sorts.contains_key(&v) {
                order.push(v);
            }
            sorts.insert(v, s);
        }
    }
    order.into_iter().map(|v| (v, sig.theory.universe(sorts[&v], depth))).collect()
}

/// Calls `f` on solutions in canonical order until it returns false.
fn search(sig: &Signature, bag: &[BindConstraint], depth: usize, f: &mut dyn FnMut(Subst) -> bool) {
    let u = sig.universe_at(depth);
    let idx = index_candidates(sig, bag, depth);
    let monads = crate::simplify::monad_vars_in_order(bag);
    let var_of: BTreeMap<Tv, usize> = monads.iter().enumerate().map(|(i, v)| (*v, idx.len() + i)).collect();
    let idx_of: BTreeMap<Tv, usize> = idx.iter().enumerate().map(|(i, (v, _))| (*v, i)).collect();
    let mut doms: Vec<FixedBitSet> = idx
        .iter()
        .map(|(_, c)| {
            let mut d = FixedBitSet::with_capacity(c.len());
            d.insert_range(..);
            d
        })
        .collect();
    let mut full = FixedBitSet::with_capacity(u.len());
    full.insert_range(..);
    doms.extend(monads.iter().map(|_| full.clone()));

    let mut cons = Vec::new();
    let mut patterns: BTreeMap<MonadType, usize> = BTreeMap::new();
    for c in bag {
        if c.is_ground() {
            if entail_ground(sig, c).is_none() {
                return;
            }
            continue;
        }
        let mut slots = [Slot::Known(0); 3];
        for (k, m) in c.parts().into_iter().enumerate() {
            slots[k] = match m {
                MonadType::Var(v) => Slot::Var(var_of[v]),
                m => match u.index_of(m) {
                    Some(i) => Slot::Known(i),
                    None if m.is_ground() => return,
                    None => {
                        if let Some(&p) = patterns.get(m) {
                            Slot::Var(p)
                        } else {
                            let p = doms.len();
                            patterns.insert(m.clone(), p);
                            let (links, dom) = pattern_links(&u, m, &idx, &idx_of);
                            doms.push(dom);
                            cons.extend(links.into_iter().map(|(i, at)| Con::Link { pat: p, idx: i, at }));
                            Slot::Var(p)
                        }
                    }
                },
            };
        }
        cons.push(Con::Bind(slots));
    }

    let mut watch = vec![Vec::new(); doms.len()];
    for (i, c) in cons.iter().enumerate() {
        let vars: Vec<usize> = match c {
            Con::Bind(slots) => slots.iter().filter_map(|s| if let Slot::Var(v) = s { Some(*v) } else { None }).collect(),
            Con::Link { pat, idx, .. } => vec![*pat, *idx],
        };
        for v in vars {
            if !watch[v].contains(&i) {
                watch[v].push(i);
            }
        }
    }
    let s = Search { u: &u, cons, watch };
    if !s.propagate(&mut doms, (0..s.cons.len()).collect()) {
        return;
    }
    s.run(doms, &mut |doms| {
        let first = |d: &FixedBitSet| d.ones().next().unwrap();
        let mut out = Subst::default();
        for (k, (v, cands)) in idx.iter().enumerate() {
            out.values.insert(*v, cands[first(&doms[k])].clone());
        }
        for (k, v) in monads.iter().enumerate() {
            out.monads.insert(*v, u.ground[first(&doms[idx.len() + k])].clone());
        }
        f(out)
    });
}

/// A ground instance and the candidate it fixes for each index variable.
type PatternInstance = (usize, Vec<Option<usize>>);

/// The ground instances of pattern `m` and, per index variable in it,
/// which candidate each instance fixes.
fn pattern_links(
    u: &Universe,
    m: &MonadType,
    idx: &[(Tv, Vec<ValueType>)],
    idx_of: &BTreeMap<Tv, usize>,
) -> (Vec<PatternInstance>, FixedBitSet) {
    let mut vars = BTreeSet::new();
    m.collect_vars(&mut vars);
    let vars: Vec<usize> = vars.iter().filter_map(|v| idx_of.get(v).copied()).collect();
    let mut at = vec![vec![None; u.len()]; vars.len()];
    let mut dom = FixedBitSet::with_capacity(u.len());
    for (g, ground) in u.ground.iter().enumerate() {
        let mut s = BTreeMap::new();
        if !match_monad(m, ground, &mut s) {
            continue;
        }
        let picks: Option<Vec<usize>> = vars
            .iter()
            .map(|&i| {
                let (v, cands) = &idx[i];
                s.get(v).and_then(|val| cands.iter().position(|c| c == val))
            })
            .collect();
        if let Some(picks) = picks {
            dom.insert(g);
            for (row, k) in at.iter_mut().zip(picks) {
                row[g] = Some(k);
            }
        }
    }
    (vars.into_iter().zip(at).collect(), dom)
}

/// Whether the constraint-level dataflow graph has a cycle.
pub fn is_cyclic(bag: &[BindConstraint]) -> bool {
    let n = bag.len();
    let live = |i: usize| !crate::simplify::is_identity(&bag[i]);
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| match &bag[i].result {
            MonadType::Var(v) if live(i) => (0..n)
                .filter(|&j| j != i && live(j) && (bag[j].left == MonadType::Var(*v) || bag[j].middle == MonadType::Var(*v)))
                .collect(),
            _ => vec![],
        })
        .collect();
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    fn visit(i: usize, succ: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[i] = 1;
        for &j in &succ[i] {
            if state[j] == 1 || (state[j] == 0 && visit(j, succ, state)) {
                return true;
            }
        }
        state[i] = 2;
        false
    }
    (0..n).any(|i| state[i] == 0 && visit(i, &succ, &mut state))
}

fn first(sig: &Signature, bag: &[BindConstraint], depth: usize) -> Option<Subst> {
    let mut found = None;
    search(sig, bag, depth, &mut |s| {
        found = Some(s);
        false
    });
    found
}

/// The canonical solution of `bag` after applying `fixed`.
pub fn solve(sig: &Signature, bag: &[BindConstraint], fixed: &Subst, opts: SolveOptions) -> Result<Solution, SolveError> {
    let bag = fixed.bag(bag);
    let with_fixed = |s: Subst, depth: usize| {
        let mut out = fixed.clone();
        out.values.extend(s.values);
        out.monads.extend(s.monads);
        Solution { subst: out, depth }
    };
    if let Some(s) = first(sig, &bag, opts.depth) {
        return Ok(with_fixed(s, opts.depth));
    }
    // Only protocol states are bounded; elsewhere the search is complete.
    if matches!(sig.theory, TheoryDescriptor::Free { .. }) {
        for depth in (opts.depth + 1..=opts.depth + opts.unroll).take_while(|d| sig.check_depth(*d).is_ok()) {
            if let Some(s) = first(sig, &bag, depth) {
                return Ok(with_fixed(s, depth));
            }
        }
        if is_cyclic(&bag) {
            return Err(SolveError::Cyclic);
        }
    }
    Err(diagnose(sig, &bag, opts.depth))
}

/// Blames the constraint that first makes a prefix of the bag unsolvable.
fn diagnose(sig: &Signature, bag: &[BindConstraint], depth: usize) -> SolveError {
    let mut index = bag.len().saturating_sub(1);
    let mut before = Subst::default();
    for p in 0..bag.len() {
        match first(sig, &bag[..=p], depth) {
            Some(s) => before = s,
            None => {
                index = p;
                break;
            }
        }
    }
    let culprit = &bag[index];
    let reason = explain_failure(sig, culprit)
        .or_else(|| explain_failure(sig, &before.constraint(culprit)))
        .map(|(spec, atom)| format!("{spec} requires {atom}"));
    let constraint = print_constraint(culprit, &mut Namer::default());
    SolveError::Unsatisfiable { index, constraint, reason }
}

/// Up to `limit` solutions in canonical order.
pub fn enumerate_solutions(sig: &Signature, bag: &[BindConstraint], fixed: &Subst, depth: usize, limit: usize) -> Vec<Solution> {
    let bag = fixed.bag(bag);
    let mut out = Vec::new();
    if limit == 0 {
        return out;
    }
    search(sig, &bag, depth, &mut |s| {
        let mut sub = fixed.clone();
        sub.values.extend(s.values);
        sub.monads.extend(s.monads);
        out.push(Solution { subst: sub, depth });
        out.len() < limit
    });
    out
}

/// Checks a solution against a graph directly: every vertex ground,
/// unification edges agree, every bind triple derivable.
pub fn check_solution(g: &ConstraintGraph, sig: &Signature, sol: &Solution) -> Result<(), String> {
    let a = sol.assignment(g);
    if let Some(v) = a.iter().position(|m| !m.is_ground()) {
        return Err(format!("vertex v{v} is not ground"));
    }
    if let Some((x, y)) = g.eq_edges.iter().find(|(x, y)| a[*x] != a[*y]) {
        return Err(format!("v{x} and v{y} disagree"));
    }
    for c in 0..g.constraint_count() {
        let t = BindConstraint::new(a[3 * c].clone(), a[3 * c + 1].clone(), a[3 * c + 2].clone());
        if entail_ground(sig, &t).is_none() {
            return Err(format!("constraint {c} is not derivable: {}", print_constraint(&t, &mut Namer::default())));
        }
    }
    Ok(())
}

/// Whether two solutions agree on protected variables and give equal
/// observations for the composite of every flow edge touching a vertex
/// where they differ.
pub fn solutions_equivalent(
    g: &ConstraintGraph,
    sig: &Signature,
    s1: &Solution,
    s2: &Solution,
    protected: &BTreeSet<Tv>,
) -> bool {
    for v in protected {
        let m = MonadType::Var(*v);
        if s1.subst.monad(&m) != s2.subst.monad(&m) {
            return false;
        }
    }
    let (a1, a2) = (s1.assignment(g), s2.assignment(g));
    let interp = Interp::new(sig, Some(1_000_000));
    let shape = |a: &[MonadType], c: usize| Shape::of(&BindConstraint::new(a[3 * c].clone(), a[3 * c + 1].clone(), a[3 * c + 2].clone()));
    let flows = g.flow_edges();
    for v in (0..a1.len()).filter(|&v| a1[v] != a2[v]) {
        for eta in flows.iter().filter(|e| e.touches(v)) {
            let comp = flow_interpretation(eta);
            let (inner, outer) = (eta.producer(), eta.consumer());
            let e1 = EdgeShapes { inner: shape(&a1, inner), outer: shape(&a1, outer) };
            let e2 = EdgeShapes { inner: shape(&a2, inner), outer: shape(&a2, outer) };
            if composite_outcomes(&interp, sig.runtime, comp, e1, e2).iter().any(|(x, y)| x != y) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests;

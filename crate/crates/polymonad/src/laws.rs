//! Checking that a signature is a principal polymonad.
//!
//! Shape laws are decided over the bounded ground universe. Equational
//! laws are tested on sample computations, once per distinct erased
//! shape, since every constructor of a signature runs on the same
//! runtime monad.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use crate::runtime::{samples, Dict, Interp, Outcome, Rep, Shape, Value};
use crate::signature::{RuntimeKind, Signature, TheoryDescriptor, Universe};
use crate::syntax::{print_monad, Namer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawOptions {
    pub depth: usize,
    /// Cap on sample inputs per position; 0 means all.
    pub samples: usize,
}

impl Default for LawOptions {
    fn default() -> Self {
        LawOptions { depth: crate::signature::DEFAULT_DEPTH, samples: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub law: &'static str,
    /// Ground instances or sample evaluations examined.
    pub checked: usize,
    /// Sorted and without repeats.
    pub counterexamples: Vec<String>,
}

impl Report {
    fn new(law: &'static str, checked: usize, cx: BTreeSet<String>) -> Report {
        Report { law, checked, counterexamples: cx.into_iter().collect() }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

struct Ctx {
    u: std::sync::Arc<Universe>,
    interp: Interp,
    kind: RuntimeKind,
    samples: usize,
}

impl Ctx {
    fn new(sig: &Signature, opts: LawOptions) -> Ctx {
        Ctx { u: sig.universe_at(opts.depth), interp: Interp::new(sig, Some(1_000_000)), kind: sig.runtime, samples: opts.samples }
    }

    fn n(&self) -> usize {
        self.u.len()
    }

    fn show(&self, i: usize) -> String {
        print_monad(&self.u.ground[i], &mut Namer::default())
    }

    fn triple(&self, i: usize, j: usize, k: usize) -> String {
        format!("({}, {}) |> {}", self.show(i), self.show(j), self.show(k))
    }

    fn rep(&self, i: usize) -> Rep {
        if i == 0 {
            Rep::Id
        } else {
            Rep::T
        }
    }

    fn shape(&self, i: usize, j: usize, k: usize) -> Shape {
        Shape(self.rep(i), self.rep(j), self.rep(k))
    }

    fn cap(&self, v: Vec<Value>) -> Vec<Value> {
        if self.samples == 0 {
            v
        } else {
            v.into_iter().take(self.samples).collect()
        }
    }

    fn comps(&self, r: Rep) -> Vec<Value> {
        self.cap(samples::computations(self.kind, r))
    }

    fn conts(&self, r: Rep) -> Vec<Value> {
        self.cap(samples::continuations(self.kind, r))
    }

    fn ints(&self) -> Vec<Value> {
        self.comps(Rep::Id)
    }

    /// Compares two programs from every starting state; returns a
    /// description of the first difference.
    fn same(&self, lhs: &dyn Fn() -> Result<Value, crate::runtime::RuntimeError>, rhs: &dyn Fn() -> Result<Value, crate::runtime::RuntimeError>) -> Option<String> {
        for st in samples::states(self.kind) {
            let a = samples::observe(&self.interp, self.kind, lhs(), &st);
            let b = samples::observe(&self.interp, self.kind, rhs(), &st);
            if a != b {
                return Some(format!("from {} got {} vs {}", show_state(&st), show_outcome(&a), show_outcome(&b)));
            }
        }
        None
    }

    fn bind(&self, s: Shape, m: Value, k: Value) -> Result<Value, crate::runtime::RuntimeError> {
        self.interp.bind(Dict::Shape(s), m, k)
    }

    /// `lam x. b x id` for a bind of shape `s`.
    fn via(&self, s: Shape, x: Value) -> Result<Value, crate::runtime::RuntimeError> {
        self.bind(s, x, identity())
    }
}

fn identity() -> Value {
    Value::native(|_, x| Ok(x))
}

fn show_state(st: &crate::runtime::MachineState) -> String {
    let cells: Vec<String> = st.store.iter().map(|(n, v)| format!("{n}={v}")).collect();
    let script: Vec<String> = st.script.iter().map(|v| v.to_string()).collect();
    if script.is_empty() {
        format!("[{}]", cells.join(","))
    } else {
        format!("script [{}]", script.join(","))
    }
}

fn show_outcome(o: &Result<Outcome, String>) -> String {
    match o {
        Ok(o) => {
            let cells: Vec<String> = o.state.store.iter().map(|(n, v)| format!("{n}={v}")).collect();
            format!("{} [{}] [{}]", o.value, cells.join(","), o.state.trace.join(","))
        }
        Err(e) => format!("error: {e}"),
    }
}

/// `(M, Bot) |> M` for every ground `M`, and `b m id = m`.
pub fn check_functor(sig: &Signature, opts: LawOptions) -> Report {
    let c = Ctx::new(sig, opts);
    let mut cx = BTreeSet::new();
    let mut shapes = BTreeMap::new();
    for m in 0..c.n() {
        if c.u.has(m, 0, m) {
            shapes.entry(c.shape(m, 0, m)).or_insert(m);
        } else {
            cx.insert(format!("{} missing", c.triple(m, 0, m)));
        }
    }
    let mut checked = c.n();
    for (s, m) in shapes {
        for v in c.comps(s.0) {
            checked += 1;
            if let Some(d) = c.same(&|| c.bind(s, v.clone(), identity()), &|| Ok(v.clone())) {
                cx.insert(format!("{}: b m id != m {d}", c.triple(m, 0, m)));
            }
        }
    }
    Report::new("Functor", checked, cx)
}

/// `(M, Bot) |> N` exactly when `(Bot, M) |> N`, and
/// `b1 (f v) id = b2 v f`.
pub fn check_paired_morphisms(sig: &Signature, opts: LawOptions) -> Report {
    let c = Ctx::new(sig, opts);
    let mut cx = BTreeSet::new();
    let mut shapes = BTreeMap::new();
    for m in 0..c.n() {
        for n in 0..c.n() {
            match (c.u.has(m, 0, n), c.u.has(0, m, n)) {
                (true, true) => {
                    shapes.entry((c.shape(m, 0, n), c.shape(0, m, n))).or_insert((m, n));
                }
                (true, false) => {
                    cx.insert(format!("{} without {}", c.triple(m, 0, n), c.triple(0, m, n)));
                }
                (false, true) => {
                    cx.insert(format!("{} without {}", c.triple(0, m, n), c.triple(m, 0, n)));
                }
                (false, false) => {}
            }
        }
    }
    let mut checked = c.n() * c.n();
    for ((s1, s2), (m, n)) in shapes {
        for v in c.ints() {
            for f in c.conts(s1.0) {
                checked += 1;
                let lhs = || c.bind(s1, c.interp.apply(f.clone(), v.clone())?, identity());
                let rhs = || c.bind(s2, v.clone(), f.clone());
                if let Some(d) = c.same(&lhs, &rhs) {
                    cx.insert(format!("{} / {}: {d}", c.triple(m, 0, n), c.triple(0, m, n)));
                }
            }
        }
    }
    Report::new("Paired morphisms", checked, cx)
}

/// Union of `results(p, r)` over `p` in `ps`.
fn union_results(u: &Universe, ps: &FixedBitSet, r: usize, left: bool) -> FixedBitSet {
    let mut acc = FixedBitSet::with_capacity(u.len());
    for p in ps.ones() {
        acc.union_with(if left { u.results(p, r) } else { u.results(r, p) });
    }
    acc
}

/// Both ways of bracketing `M`, `N`, `R` reach the same targets.
pub fn check_diamond(sig: &Signature, opts: LawOptions) -> Report {
    let c = Ctx::new(sig, opts);
    let u = &*c.u;
    let mut cx = BTreeSet::new();
    let n = u.len();
    for m in 0..n {
        for nn in 0..n {
            let ps = u.results(m, nn);
            for r in 0..n {
                // T reachable through some P = (M, N), and through some S = (N, R).
                let via_p = union_results(u, ps, r, true);
                let via_s = union_results(u, u.results(nn, r), m, false);
                for t in via_p.symmetric_difference(&via_s) {
                    let (side, other) = if via_p.contains(t) { ("(M,N)", "(N,R)") } else { ("(N,R)", "(M,N)") };
                    cx.insert(format!(
                        "M={} N={} R={} T={}: reachable through {side} but not {other}",
                        c.show(m),
                        c.show(nn),
                        c.show(r),
                        c.show(t)
                    ));
                }
            }
        }
    }
    Report::new("Diamond", n * n * n, cx)
}

/// `b2 (b1 m f) g = b4 m (lam x. b3 (f x) g)` for every matching
/// quadruple of binds.
pub fn check_associativity(sig: &Signature, opts: LawOptions) -> Report {
    let c = Ctx::new(sig, opts);
    let u = &*c.u;
    let n = u.len();
    // Erased shapes of (b1, b2, b3, b4) with one ground witness each.
    let mut quads: BTreeMap<[Shape; 4], String> = BTreeMap::new();
    for m in 0..n {
        for nn in 0..n {
            let ps = u.results(m, nn);
            if ps.count_ones(..) == 0 {
                continue;
            }
            for r in 0..n {
                let ss = u.results(nn, r);
                if ss.count_ones(..) == 0 {
                    continue;
                }
                // Per representation of P and S, the reachable T.
                let split = |set: &FixedBitSet, f: &dyn Fn(usize) -> FixedBitSet| -> [(Option<usize>, FixedBitSet); 2] {
                    let mut out = [(None, FixedBitSet::with_capacity(n)), (None, FixedBitSet::with_capacity(n))];
                    for x in set.ones() {
                        let slot = &mut out[usize::from(x != 0)];
                        slot.0.get_or_insert(x);
                        slot.1.union_with(&f(x));
                    }
                    out
                };
                let tl = split(ps, &|p| u.results(p, r).clone());
                let tr = split(ss, &|s| u.results(m, s).clone());
                for (pw, pt) in &tl {
                    for (sw, st) in &tr {
                        let (Some(p), Some(s)) = (pw, sw) else { continue };
                        let mut both = pt.clone();
                        both.intersect_with(st);
                        for t in [both.ones().find(|&t| t == 0), both.ones().find(|&t| t != 0)].into_iter().flatten() {
                            // `p` and `s` stand for their class; pick members that reach `t`.
                            let p = ps.ones().find(|&x| (x != 0) == (*p != 0) && u.has(x, r, t)).unwrap();
                            let s = ss.ones().find(|&x| (x != 0) == (*s != 0) && u.has(m, x, t)).unwrap();
                            let key = [c.shape(m, nn, p), c.shape(p, r, t), c.shape(nn, r, s), c.shape(m, s, t)];
                            quads.entry(key).or_insert_with(|| {
                                format!("M={} N={} R={} P={} S={} T={}", c.show(m), c.show(nn), c.show(r), c.show(p), c.show(s), c.show(t))
                            });
                        }
                    }
                }
            }
        }
    }
    let mut cx = BTreeSet::new();
    let mut checked = 0;
    for ([b1, b2, b3, b4], witness) in &quads {
        for m in c.comps(b1.0) {
            for f in c.conts(b1.1) {
                for g in c.conts(b2.1) {
                    checked += 1;
                    let lhs = || c.bind(*b2, c.bind(*b1, m.clone(), f.clone())?, g.clone());
                    let (f2, g2, b3) = (f.clone(), g.clone(), *b3);
                    let rhs = || {
                        let (f2, g2) = (f2.clone(), g2.clone());
                        c.bind(*b4, m.clone(), Value::native(move |i, x| i.bind(Dict::Shape(b3), i.apply(f2.clone(), x)?, g2.clone())))
                    };
                    if let Some(d) = c.same(&lhs, &rhs) {
                        cx.insert(format!("{witness}: {d}"));
                    }
                }
            }
        }
    }
    Report::new("Associativity", checked, cx)
}

/// Binds are closed under pre-composing morphisms into their arguments
/// and post-composing a morphism out of their result.
pub fn check_closure(sig: &Signature, opts: LawOptions) -> Report {
    let c = Ctx::new(sig, opts);
    let u = &*c.u;
    let n = u.len();
    let into: Vec<Vec<usize>> = (0..n).map(|m| (0..n).filter(|&s| u.morphism(s, m)).collect()).collect();
    let out_of: Vec<FixedBitSet> = (0..n).map(|p| u.results(p, 0).clone()).collect();
    let mut cx = BTreeSet::new();
    let mut checked = 0;
    for (m, nn, p) in u.triples() {
        for &s in &into[m] {
            for &t in &into[nn] {
                checked += 1;
                if let Some(x) = out_of[p].difference(u.results(s, t)).next() {
                    cx.insert(format!(
                        "{} with {} {} {} but no {}",
                        c.triple(m, nn, p),
                        c.triple(s, 0, m),
                        c.triple(t, 0, nn),
                        c.triple(p, 0, x),
                        c.triple(s, t, x)
                    ));
                }
            }
        }
    }
    Report::new("Closure", checked, cx)
}

/// Every set of at most three pairs with a common target has a
/// principal join.
pub fn check_principality(sig: &Signature, opts: LawOptions) -> Report {
    let c = Ctx::new(sig, opts);
    let u = &*c.u;
    let n = u.len();
    // Distinct target sets, each with the pairs that produced it.
    let mut layer: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let r: Vec<usize> = u.results(i, j).ones().collect();
            if !r.is_empty() {
                layer.entry(r).or_insert_with(|| vec![(i, j)]);
            }
        }
    }
    let base = layer.clone();
    let mut all = layer.clone();
    for _ in 1..3 {
        let mut next = BTreeMap::new();
        for (set, f) in &layer {
            for (other, g) in &base {
                let meet: Vec<usize> = set.iter().copied().filter(|x| other.binary_search(x).is_ok()).collect();
                if !meet.is_empty() && !all.contains_key(&meet) {
                    let mut pairs = f.clone();
                    pairs.extend(g);
                    next.entry(meet).or_insert(pairs);
                }
            }
        }
        all.extend(next.clone());
        layer = next;
    }
    let mut cx = BTreeSet::new();
    for (set, pairs) in &all {
        let principal = set.iter().any(|&k| set.iter().all(|&d| u.morphism(k, d)));
        if !principal {
            let f: Vec<String> = pairs.iter().map(|(i, j)| format!("({}, {})", c.show(*i), c.show(*j))).collect();
            let t: Vec<String> = set.iter().map(|&k| c.show(k)).collect();
            cx.insert(format!("F = {{{}}} has targets {{{}}} and no principal join", f.join(", "), t.join(", ")));
        }
    }
    Report::new("Principality", all.len(), cx)
}

/// Left unit, right unit and the two morphism laws for the units, lifts
/// and binds a signature induces.
pub fn check_derived_laws(sig: &Signature, opts: LawOptions) -> Vec<Report> {
    let c = Ctx::new(sig, opts);
    let u = &*c.u;
    let n = u.len();
    let unit = |m: usize| u.has(0, 0, m);
    // Binds proper: neither units nor morphisms.
    let in_b = |_i: usize, j: usize| j != 0;
    let id_shape = |m: usize| c.shape(0, 0, m);

    let mut left = (0, BTreeSet::new());
    let mut right = (0, BTreeSet::new());
    let mut seen_l = BTreeSet::new();
    let mut seen_r = BTreeSet::new();
    for (m, nn, k) in u.triples() {
        if !in_b(m, nn) {
            continue;
        }
        if k == nn && unit(m) && seen_l.insert((c.shape(m, nn, k), id_shape(m))) {
            let (b, us) = (c.shape(m, nn, k), id_shape(m));
            for e in c.ints() {
                for f in c.conts(b.1) {
                    left.0 += 1;
                    let lhs = || c.bind(b, c.via(us, e.clone())?, f.clone());
                    let rhs = || c.interp.apply(f.clone(), e.clone());
                    if let Some(d) = c.same(&lhs, &rhs) {
                        left.1.insert(format!("unit {} bind {}: {d}", c.triple(0, 0, m), c.triple(m, nn, k)));
                    }
                }
            }
        }
        if k == m && unit(nn) && seen_r.insert((c.shape(m, nn, k), id_shape(nn))) {
            let (b, us) = (c.shape(m, nn, k), id_shape(nn));
            for mv in c.comps(b.0) {
                right.0 += 1;
                let unit_fn = Value::native(move |i, x| i.bind(Dict::Shape(us), x, identity()));
                let lhs = || c.bind(b, mv.clone(), unit_fn.clone());
                if let Some(d) = c.same(&lhs, &|| Ok(mv.clone())) {
                    right.1.insert(format!("unit {} bind {}: {d}", c.triple(0, 0, nn), c.triple(m, nn, k)));
                }
            }
        }
    }

    let mut morph1 = (0, BTreeSet::new());
    let mut seen1 = BTreeSet::new();
    for m in (0..n).filter(|&m| unit(m)) {
        for nn in u.results(m, 0).ones().filter(|&x| unit(x)) {
            let (u1, u2, l) = (id_shape(m), id_shape(nn), c.shape(m, 0, nn));
            if !seen1.insert((u1, u2, l)) {
                continue;
            }
            for e in c.ints() {
                morph1.0 += 1;
                let lhs = || c.via(l, c.via(u1, e.clone())?);
                let rhs = || c.via(u2, e.clone());
                if let Some(d) = c.same(&lhs, &rhs) {
                    morph1.1.insert(format!("lift {} of unit {}: {d}", c.triple(m, 0, nn), c.triple(0, 0, m)));
                }
            }
        }
    }

    let mut morph2 = (0, BTreeSet::new());
    let mut seen2 = BTreeSet::new();
    for (m, p, s) in u.triples() {
        if !in_b(m, p) {
            continue;
        }
        for nn in u.results(m, 0).ones() {
            for q in u.results(p, 0).ones().filter(|&q| in_b(nn, q)) {
                let mut ts = u.results(nn, q).clone();
                ts.intersect_with(u.results(s, 0));
                for t in [ts.ones().find(|&t| t == 0), ts.ones().find(|&t| t != 0)].into_iter().flatten() {
                    let key = [c.shape(m, p, s), c.shape(nn, q, t), c.shape(m, 0, nn), c.shape(p, 0, q), c.shape(s, 0, t)];
                    if !seen2.insert(key) {
                        continue;
                    }
                    let [b1, b2, l1, l2, l3] = key;
                    for mv in c.comps(b1.0) {
                        for f in c.conts(b1.1) {
                            morph2.0 += 1;
                            let lhs = || c.via(l3, c.bind(b1, mv.clone(), f.clone())?);
                            let f2 = f.clone();
                            let rhs = || {
                                let f2 = f2.clone();
                                c.bind(b2, c.via(l1, mv.clone())?, Value::native(move |i, x| i.bind(Dict::Shape(l2), i.apply(f2.clone(), x)?, identity())))
                            };
                            if let Some(d) = c.same(&lhs, &rhs) {
                                morph2.1.insert(format!("{} against {}: {d}", c.triple(m, p, s), c.triple(nn, q, t)));
                            }
                        }
                    }
                }
            }
        }
    }

    vec![
        Report::new("Left unit", left.0, left.1),
        Report::new("Right unit", right.0, right.1),
        Report::new("Morphism 1", morph1.0, morph1.1),
        Report::new("Morphism 2", morph2.0, morph2.1),
    ]
}

/// Every check, in a fixed order.
pub fn check_all(sig: &Signature, opts: LawOptions) -> Vec<Report> {
    let mut out = vec![
        check_functor(sig, opts),
        check_paired_morphisms(sig, opts),
        check_diamond(sig, opts),
        check_associativity(sig, opts),
        check_closure(sig, opts),
        check_principality(sig, opts),
    ];
    out.extend(check_derived_laws(sig, opts));
    out
}

/// How much of the universe was covered, for the summary line.
pub fn bound_description(sig: &Signature, opts: LawOptions) -> String {
    match sig.theory {
        TheoryDescriptor::Free { .. } => format!("depth {}", opts.depth),
        _ => "exhaustive".into(),
    }
}

//! Interpretations of the index constraints that guard bind specifications.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{Tv, ValueType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexExpr {
    Term(ValueType),
    /// `x + y`: set union, or the lattice join.
    Union(Vec<IndexExpr>),
}

impl IndexExpr {
    fn vars(&self, out: &mut BTreeSet<Tv>) {
        match self {
            IndexExpr::Term(t) => t.collect_vars(out),
            IndexExpr::Union(es) => es.iter().for_each(|e| e.vars(out)),
        }
    }

    fn subst(&self, s: &BTreeMap<Tv, ValueType>) -> IndexExpr {
        match self {
            IndexExpr::Term(t) => IndexExpr::Term(subst_vt(t, s)),
            IndexExpr::Union(es) => IndexExpr::Union(es.iter().map(|e| e.subst(s)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryConstraint {
    /// `x <= y` (lattice order) or `x sub y` (inclusion).
    Leq(IndexExpr, IndexExpr),
    Eq(IndexExpr, IndexExpr),
}

impl TheoryConstraint {
    pub fn vars(&self) -> BTreeSet<Tv> {
        let mut s = BTreeSet::new();
        match self {
            TheoryConstraint::Leq(a, b) | TheoryConstraint::Eq(a, b) => {
                a.vars(&mut s);
                b.vars(&mut s);
            }
        }
        s
    }

    pub fn subst(&self, s: &BTreeMap<Tv, ValueType>) -> TheoryConstraint {
        match self {
            TheoryConstraint::Leq(a, b) => TheoryConstraint::Leq(a.subst(s), b.subst(s)),
            TheoryConstraint::Eq(a, b) => TheoryConstraint::Eq(a.subst(s), b.subst(s)),
        }
    }
}

impl std::fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndexExpr::Term(t) => f.write_str(&crate::syntax::print_type(t)),
            IndexExpr::Union(es) => {
                let parts: Vec<String> = es.iter().map(|e| e.to_string()).collect();
                f.write_str(&parts.join(" + "))
            }
        }
    }
}

impl std::fmt::Display for TheoryConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TheoryConstraint::Leq(a, b) => write!(f, "{a} <= {b}"),
            TheoryConstraint::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

/// A protocol-state constructor of the free theory: `Send(type, state)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateCon {
    pub name: String,
    pub args: Vec<Sort>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    /// The theory's carrier: labels, effect sets, or protocol states.
    Index,
    /// Arbitrary value types, such as message payloads.
    Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryDescriptor {
    /// `leq[i][j]` holds when `elements[i] <= elements[j]`; elements are
    /// stored in a linear extension of the order, least first.
    Lattice { elements: Vec<String>, leq: Vec<Vec<bool>> },
    Sets { atoms: Vec<String> },
    Free { states: Vec<StateCon>, payloads: Vec<ValueType> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TheoryError {
    #[error("not a lattice: {0}")]
    NotALattice(String),
    #[error("ill-sorted index {0}")]
    IllSorted(String),
}

pub fn subst_vt(t: &ValueType, s: &BTreeMap<Tv, ValueType>) -> ValueType {
    match t {
        ValueType::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        ValueType::Con(n, args) => ValueType::Con(n.clone(), args.iter().map(|a| subst_vt(a, s)).collect()),
        ValueType::Set(_) => t.clone(),
        ValueType::Arrow(..) => t.clone(),
    }
}

impl TheoryDescriptor {
    /// Builds a lattice from `a < b` pairs, checking the partial-order and
    /// lattice axioms.
    pub fn lattice(pairs: &[(String, String)], mentioned: &[String]) -> Result<TheoryDescriptor, TheoryError> {
        let mut names: Vec<String> = Vec::new();
        for n in mentioned {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        let k = names.len();
        let pos = |n: &str| names.iter().position(|m| m == n).unwrap();
        let mut r = vec![vec![false; k]; k];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in pairs {
            r[pos(a)][pos(b)] = true;
        }
        for m in 0..k {
            for i in 0..k {
                for j in 0..k {
                    if r[i][m] && r[m][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                if i != j && r[i][j] && r[j][i] {
                    return Err(TheoryError::NotALattice(format!("{} and {} are mutually ordered", names[i], names[j])));
                }
            }
        }
        // Least elements first: sort by the number of elements below.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| ((0..k).filter(|&j| r[j][i]).count(), i));
        let elements: Vec<String> = order.iter().map(|&i| names[i].clone()).collect();
        let leq: Vec<Vec<bool>> = order.iter().map(|&i| order.iter().map(|&j| r[i][j]).collect()).collect();
        let t = TheoryDescriptor::Lattice { elements, leq };
        for i in 0..k {
            for j in 0..k {
                if t.join(i, j).is_none() || t.meet(i, j).is_none() {
                    let TheoryDescriptor::Lattice { elements, .. } = &t else { unreachable!() };
                    return Err(TheoryError::NotALattice(format!(
                        "{} and {} have no join or meet",
                        elements[i], elements[j]
                    )));
                }
            }
        }
        Ok(t)
    }

    fn bound(&self, i: usize, j: usize, upper: bool) -> Option<usize> {
        let TheoryDescriptor::Lattice { leq, .. } = self else { return None };
        let k = leq.len();
        let le = |a: usize, b: usize| if upper { leq[a][b] } else { leq[b][a] };
        let bounds: Vec<usize> = (0..k).filter(|&u| le(i, u) && le(j, u)).collect();
        bounds.iter().copied().find(|&u| bounds.iter().all(|&v| le(u, v)))
    }

    pub fn join(&self, i: usize, j: usize) -> Option<usize> {
        self.bound(i, j, true)
    }

    pub fn meet(&self, i: usize, j: usize) -> Option<usize> {
        self.bound(i, j, false)
    }

    /// The ground values of a sort, in canonical order. Protocol states are
    /// enumerated up to `depth` nested constructors.
    pub fn universe(&self, sort: Sort, depth: usize) -> Vec<ValueType> {
        match (self, sort) {
            (TheoryDescriptor::Lattice { elements, .. }, Sort::Index) => elements.iter().map(|e| ValueType::con(e)).collect(),
            (TheoryDescriptor::Sets { atoms }, Sort::Index) => (0..1u64 << atoms.len())
                .map(|mask| {
                    ValueType::Set(atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| a.clone()).collect())
                })
                .collect(),
            (TheoryDescriptor::Free { states, .. }, Sort::Index) => {
                let mut level: Vec<ValueType> =
                    states.iter().filter(|s| s.args.is_empty()).map(|s| ValueType::con(&s.name)).collect();
                for _ in 0..depth {
                    let mut next = level.clone();
                    for s in states.iter().filter(|s| !s.args.is_empty()) {
                        let mut combos: Vec<Vec<ValueType>> = vec![vec![]];
                        for a in &s.args {
                            let choices = if *a == Sort::Type { self.universe(Sort::Type, 0) } else { level.clone() };
                            combos = combos
                                .into_iter()
                                .flat_map(|c| {
                                    choices.iter().map(move |x| {
                                        let mut c = c.clone();
                                        c.push(x.clone());
                                        c
                                    })
                                })
                                .collect();
                        }
                        for args in combos {
                            let t = ValueType::Con(s.name.clone(), args);
                            if !next.contains(&t) {
                                next.push(t);
                            }
                        }
                    }
                    level = next;
                }
                level
            }
            (TheoryDescriptor::Free { payloads, .. }, Sort::Type) => payloads.clone(),
            (_, Sort::Type) => vec![ValueType::int()],
        }
    }

    /// Checks that a (possibly open) index term belongs to the sort.
    pub fn check_sort(&self, t: &ValueType, sort: Sort) -> Result<(), TheoryError> {
        let bad = || Err(TheoryError::IllSorted(crate::syntax::print_type(t)));
        match (t, sort) {
            (ValueType::Var(_), _) | (_, Sort::Type) => Ok(()),
            (ValueType::Con(n, args), Sort::Index) => match self {
                TheoryDescriptor::Lattice { elements, .. } if args.is_empty() && elements.contains(n) => Ok(()),
                TheoryDescriptor::Free { states, .. } => match states.iter().find(|s| &s.name == n) {
                    Some(s) if s.args.len() == args.len() => {
                        s.args.iter().zip(args).try_for_each(|(srt, a)| self.check_sort(a, *srt))
                    }
                    _ => bad(),
                },
                _ => bad(),
            },
            (ValueType::Set(s), Sort::Index) => match self {
                TheoryDescriptor::Sets { atoms } if s.iter().all(|a| atoms.contains(a)) => Ok(()),
                _ => bad(),
            },
            _ => bad(),
        }
    }

    /// Sorts of the variables occurring in an index term of the given sort.
    pub fn var_sorts(&self, t: &ValueType, sort: Sort, out: &mut BTreeMap<Tv, Sort>) {
        match t {
            ValueType::Var(v) => {
                out.entry(*v).or_insert(sort);
            }
            ValueType::Con(n, args) => {
                let arg_sorts: Vec<Sort> = match self {
                    TheoryDescriptor::Free { states, .. } if sort == Sort::Index => states
                        .iter()
                        .find(|s| &s.name == n)
                        .map(|s| s.args.clone())
                        .unwrap_or_else(|| vec![Sort::Type; args.len()]),
                    _ => vec![Sort::Type; args.len()],
                };
                for (a, s) in args.iter().zip(arg_sorts) {
                    self.var_sorts(a, s, out);
                }
            }
            _ => {}
        }
    }

    fn eval_lattice(&self, e: &IndexExpr) -> Option<usize> {
        let TheoryDescriptor::Lattice { elements, .. } = self else { return None };
        match e {
            IndexExpr::Term(ValueType::Con(n, a)) if a.is_empty() => elements.iter().position(|x| x == n),
            IndexExpr::Term(_) => None,
            IndexExpr::Union(es) => {
                let mut acc: Option<usize> = None;
                for e in es {
                    let v = self.eval_lattice(e)?;
                    acc = Some(match acc {
                        None => v,
                        Some(a) => self.join(a, v)?,
                    });
                }
                acc
            }
        }
    }

    fn eval_set(&self, e: &IndexExpr) -> Option<BTreeSet<String>> {
        match e {
            IndexExpr::Term(ValueType::Set(s)) => Some(s.clone()),
            IndexExpr::Term(_) => None,
            IndexExpr::Union(es) => {
                let mut acc = BTreeSet::new();
                for e in es {
                    acc.extend(self.eval_set(e)?);
                }
                Some(acc)
            }
        }
    }

    /// Decides a ground constraint; `None` when it still has variables or
    /// does not belong to this theory.
    pub fn holds(&self, c: &TheoryConstraint) -> Option<bool> {
        match self {
            TheoryDescriptor::Lattice { leq, .. } => match c {
                TheoryConstraint::Leq(a, b) => Some(leq[self.eval_lattice(a)?][self.eval_lattice(b)?]),
                TheoryConstraint::Eq(a, b) => Some(self.eval_lattice(a)? == self.eval_lattice(b)?),
            },
            TheoryDescriptor::Sets { .. } => match c {
                TheoryConstraint::Leq(a, b) => Some(self.eval_set(a)?.is_subset(&self.eval_set(b)?)),
                TheoryConstraint::Eq(a, b) => Some(self.eval_set(a)? == self.eval_set(b)?),
            },
            TheoryDescriptor::Free { .. } => match c {
                TheoryConstraint::Leq(IndexExpr::Term(a), IndexExpr::Term(b))
                | TheoryConstraint::Eq(IndexExpr::Term(a), IndexExpr::Term(b))
                    if a.is_ground() && b.is_ground() =>
                {
                    Some(a == b)
                }
                _ => None,
            },
        }
    }
}

/// Finds the canonical solution of `phi`: the pointwise-least witness for
/// lattices, union-closure saturation for sets, unification for the free
/// theory.
pub fn theory_solve(theory: &TheoryDescriptor, phi: &[TheoryConstraint]) -> Option<BTreeMap<Tv, ValueType>> {
    match theory {
        TheoryDescriptor::Lattice { elements, .. } => solve_lattice(theory, elements.len(), phi),
        TheoryDescriptor::Sets { .. } => solve_sets(theory, phi),
        TheoryDescriptor::Free { .. } => solve_free(phi),
    }
}

fn solve_lattice(theory: &TheoryDescriptor, k: usize, phi: &[TheoryConstraint]) -> Option<BTreeMap<Tv, ValueType>> {
    let vars: Vec<Tv> = phi.iter().flat_map(|c| c.vars()).collect::<BTreeSet<_>>().into_iter().collect();
    let universe = theory.universe(Sort::Index, 0);
    // Solution sets of order constraints are closed under meets, so the
    // lexicographically first witness in a linear extension is the least.
    let mut choice = vec![0usize; vars.len()];
    loop {
        let s: BTreeMap<Tv, ValueType> = vars.iter().zip(&choice).map(|(v, i)| (*v, universe[*i].clone())).collect();
        if phi.iter().all(|c| theory.holds(&c.subst(&s)) == Some(true)) {
            return Some(s);
        }
        let mut i = vars.len();
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < k {
                break;
            }
            choice[i] = 0;
        }
    }
}

fn solve_sets(theory: &TheoryDescriptor, phi: &[TheoryConstraint]) -> Option<BTreeMap<Tv, ValueType>> {
    let mut s: BTreeMap<Tv, ValueType> = BTreeMap::new();
    let lone_var = |e: &IndexExpr| match e {
        IndexExpr::Term(ValueType::Var(v)) => Some(*v),
        _ => None,
    };
    // Saturate `x = e` with `e` known, then give variables bounded only from
    // above the empty set and those bounded from below the union of their
    // lower bounds.
    loop {
        let mut progress = false;
        for c in phi {
            let c = c.subst(&s);
            if let TheoryConstraint::Eq(a, b) = &c {
                for (x, e) in [(a, b), (b, a)] {
                    if let (Some(v), Some(val)) = (lone_var(x), theory.eval_set(e)) {
                        s.insert(v, ValueType::Set(val));
                        progress = true;
                        break;
                    }
                }
            }
        }
        if !progress {
            let mut lower: BTreeMap<Tv, BTreeSet<String>> = BTreeMap::new();
            for c in phi {
                if let TheoryConstraint::Leq(a, b) = c.subst(&s) {
                    if let Some(v) = lone_var(&b) {
                        let entry = lower.entry(v).or_default();
                        if let Some(val) = theory.eval_set(&a) {
                            entry.extend(val);
                        }
                    }
                    if let Some(v) = lone_var(&a) {
                        lower.entry(v).or_default();
                    }
                }
            }
            // Only fully determined lower bounds may be fixed.
            let mut fixed = false;
            for (v, val) in lower {
                let determined = phi.iter().all(|c| match c.subst(&s) {
                    TheoryConstraint::Leq(a, b) if lone_var(&b) == Some(v) => theory.eval_set(&a).is_some(),
                    TheoryConstraint::Eq(a, b) => {
                        let mut vs = BTreeSet::new();
                        a.vars(&mut vs);
                        b.vars(&mut vs);
                        !vs.contains(&v)
                    }
                    _ => true,
                });
                if determined {
                    s.insert(v, ValueType::Set(val));
                    fixed = true;
                    break;
                }
            }
            if !fixed {
                break;
            }
        }
    }
    phi.iter().all(|c| theory.holds(&c.subst(&s)) == Some(true)).then_some(s)
}

fn solve_free(phi: &[TheoryConstraint]) -> Option<BTreeMap<Tv, ValueType>> {
    let mut s: BTreeMap<Tv, ValueType> = BTreeMap::new();
    for c in phi {
        let (TheoryConstraint::Eq(IndexExpr::Term(a), IndexExpr::Term(b))
        | TheoryConstraint::Leq(IndexExpr::Term(a), IndexExpr::Term(b))) = c
        else {
            return None;
        };
        unify_index(a, b, &mut s)?;
    }
    let keys: Vec<Tv> = s.keys().copied().collect();
    for k in keys {
        let v = resolve(&s[&k], &s);
        s.insert(k, v);
    }
    Some(s)
}

fn resolve(t: &ValueType, s: &BTreeMap<Tv, ValueType>) -> ValueType {
    match t {
        ValueType::Var(v) => match s.get(v) {
            Some(u) => resolve(u, s),
            None => t.clone(),
        },
        ValueType::Con(n, args) => ValueType::Con(n.clone(), args.iter().map(|a| resolve(a, s)).collect()),
        _ => t.clone(),
    }
}

/// First-order unification of index terms, extending `s`.
pub fn unify_index(a: &ValueType, b: &ValueType, s: &mut BTreeMap<Tv, ValueType>) -> Option<()> {
    let (a, b) = (resolve(a, s), resolve(b, s));
    match (&a, &b) {
        (ValueType::Var(x), ValueType::Var(y)) if x == y => Some(()),
        (ValueType::Var(x), t) | (t, ValueType::Var(x)) => {
            if t.free_vars_contains(*x) {
                return None;
            }
            s.insert(*x, t.clone());
            Some(())
        }
        (ValueType::Con(n, xs), ValueType::Con(m, ys)) if n == m && xs.len() == ys.len() => {
            xs.iter().zip(ys).try_for_each(|(x, y)| unify_index(x, y, s))
        }
        _ => (a == b).then_some(()),
    }
}

impl ValueType {
    fn free_vars_contains(&self, v: Tv) -> bool {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s.contains(&v)
    }
}

//! Terms, types, schemes and the elaborated evidence-passing language.

pub(crate) mod lexer;
pub(crate) mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};

pub use parse::{parse_program, parse_scheme, parse_type, Decl, Program, TypeContext};
pub use print::{print_constraint, print_monad, print_scheme, print_target, print_type, print_vtype, Namer};

/// Type variables, value and monadic alike, share one id space.
pub type Tv = u32;

/// Names a bind constraint; elaborated terms refer to evidence by this id.
pub type EvId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(String),
    Int(i64),
    Bool(bool),
    Unit,
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    Let(String, Box<Term>, Box<Term>),
    LetRec(String, Box<Term>, Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
}

impl Term {
    pub fn is_value(&self) -> bool {
        matches!(
            self,
            Term::Var(_) | Term::Const(_) | Term::Int(_) | Term::Bool(_) | Term::Unit | Term::Lam(..)
        )
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Var(Tv),
    /// Type constructors and index literals: `int`, `intref l`, `H`, `Send a q`, `Done`.
    Con(String, Vec<ValueType>),
    /// A ground effect set.
    Set(BTreeSet<String>),
    Arrow(Box<ValueType>, Box<CompType>),
}

impl ValueType {
    pub fn con(name: &str) -> ValueType {
        ValueType::Con(name.to_string(), Vec::new())
    }

    pub fn int() -> ValueType {
        ValueType::con("int")
    }

    pub fn bool() -> ValueType {
        ValueType::con("bool")
    }

    pub fn unit() -> ValueType {
        ValueType::con("()")
    }

    pub fn arrow(dom: ValueType, monad: MonadType, cod: ValueType) -> ValueType {
        ValueType::Arrow(Box::new(dom), Box::new(CompType { monad, value: cod }))
    }

    pub fn pure_arrow(dom: ValueType, cod: ValueType) -> ValueType {
        ValueType::arrow(dom, MonadType::Bot, cod)
    }

    pub fn is_ground(&self) -> bool {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s.is_empty()
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Tv>) {
        match self {
            ValueType::Var(v) => {
                out.insert(*v);
            }
            ValueType::Con(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            ValueType::Set(_) => {}
            ValueType::Arrow(d, c) => {
                d.collect_vars(out);
                c.monad.collect_vars(out);
                c.value.collect_vars(out);
            }
        }
    }

    pub fn rename(&self, map: &BTreeMap<Tv, Tv>) -> ValueType {
        match self {
            ValueType::Var(v) => ValueType::Var(*map.get(v).unwrap_or(v)),
            ValueType::Con(n, args) => ValueType::Con(n.clone(), args.iter().map(|a| a.rename(map)).collect()),
            ValueType::Set(s) => ValueType::Set(s.clone()),
            ValueType::Arrow(d, c) => ValueType::Arrow(
                Box::new(d.rename(map)),
                Box::new(CompType { monad: c.monad.rename(map), value: c.value.rename(map) }),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompType {
    pub monad: MonadType,
    pub value: ValueType,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MonadType {
    /// The identity constructor, also spelled `Id`.
    Bot,
    Var(Tv),
    Ground(String, Vec<ValueType>),
}

impl MonadType {
    pub fn ground(name: &str, idx: Vec<ValueType>) -> MonadType {
        MonadType::Ground(name.to_string(), idx)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            MonadType::Bot => true,
            MonadType::Var(_) => false,
            MonadType::Ground(_, idx) => idx.iter().all(|i| i.is_ground()),
        }
    }

    pub fn as_var(&self) -> Option<Tv> {
        match self {
            MonadType::Var(v) => Some(*v),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Tv>) {
        match self {
            MonadType::Bot => {}
            MonadType::Var(v) => {
                out.insert(*v);
            }
            MonadType::Ground(_, idx) => idx.iter().for_each(|i| i.collect_vars(out)),
        }
    }

    pub fn rename(&self, map: &BTreeMap<Tv, Tv>) -> MonadType {
        match self {
            MonadType::Bot => MonadType::Bot,
            MonadType::Var(v) => MonadType::Var(*map.get(v).unwrap_or(v)),
            MonadType::Ground(n, idx) => MonadType::Ground(n.clone(), idx.iter().map(|i| i.rename(map)).collect()),
        }
    }
}

/// `(left, middle) |> result`; a morphism `m |> n` is `(m, Bot) |> n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BindConstraint {
    pub left: MonadType,
    pub middle: MonadType,
    pub result: MonadType,
}

impl BindConstraint {
    pub fn new(left: MonadType, middle: MonadType, result: MonadType) -> Self {
        BindConstraint { left, middle, result }
    }

    pub fn morphism(from: MonadType, to: MonadType) -> Self {
        BindConstraint::new(from, MonadType::Bot, to)
    }

    pub fn parts(&self) -> [&MonadType; 3] {
        [&self.left, &self.middle, &self.result]
    }

    pub fn is_ground(&self) -> bool {
        self.parts().iter().all(|m| m.is_ground())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Tv>) {
        self.parts().iter().for_each(|m| m.collect_vars(out));
    }

    pub fn rename(&self, map: &BTreeMap<Tv, Tv>) -> Self {
        BindConstraint::new(self.left.rename(map), self.middle.rename(map), self.result.rename(map))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub value_vars: Vec<Tv>,
    pub monad_vars: Vec<Tv>,
    pub constraints: Vec<BindConstraint>,
    pub body: ValueType,
}

impl Scheme {
    pub fn mono(body: ValueType) -> Scheme {
        Scheme { value_vars: vec![], monad_vars: vec![], constraints: vec![], body }
    }

    pub fn bound(&self) -> BTreeSet<Tv> {
        self.value_vars.iter().chain(&self.monad_vars).copied().collect()
    }

    /// Equality up to renaming of bound variables and reordering of the bag.
    pub fn alpha_eq(&self, other: &Scheme) -> bool {
        alpha::schemes_equivalent(self, other)
    }
}

/// Free variables of a scheme, type, bag or environment.
pub trait FreeVars {
    fn free_vars(&self) -> BTreeSet<Tv>;
}

impl FreeVars for ValueType {
    fn free_vars(&self) -> BTreeSet<Tv> {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s
    }
}

impl FreeVars for MonadType {
    fn free_vars(&self) -> BTreeSet<Tv> {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s
    }
}

impl FreeVars for BindConstraint {
    fn free_vars(&self) -> BTreeSet<Tv> {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s
    }
}

impl FreeVars for [BindConstraint] {
    fn free_vars(&self) -> BTreeSet<Tv> {
        let mut s = BTreeSet::new();
        self.iter().for_each(|c| c.collect_vars(&mut s));
        s
    }
}

impl FreeVars for Vec<BindConstraint> {
    fn free_vars(&self) -> BTreeSet<Tv> {
        self.as_slice().free_vars()
    }
}

impl FreeVars for Scheme {
    fn free_vars(&self) -> BTreeSet<Tv> {
        let mut s = self.constraints.free_vars();
        self.body.collect_vars(&mut s);
        let bound = self.bound();
        s.retain(|v| !bound.contains(v));
        s
    }
}

impl<K> FreeVars for BTreeMap<K, Scheme> {
    fn free_vars(&self) -> BTreeSet<Tv> {
        self.values().flat_map(|s| s.free_vars()).collect()
    }
}

pub fn free_type_vars<T: FreeVars + ?Sized>(x: &T) -> BTreeSet<Tv> {
    x.free_vars()
}

/// Simultaneous substitution for value and monadic variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    pub values: BTreeMap<Tv, ValueType>,
    pub monads: BTreeMap<Tv, MonadType>,
}

impl Subst {
    pub fn is_empty(&self) -> bool {
        self.values.is_empty() && self.monads.is_empty()
    }

    pub fn value(&self, t: &ValueType) -> ValueType {
        match t {
            ValueType::Var(v) => match self.values.get(v) {
                Some(u) => self.value(u),
                None => t.clone(),
            },
            ValueType::Con(n, args) => ValueType::Con(n.clone(), args.iter().map(|a| self.value(a)).collect()),
            ValueType::Set(_) => t.clone(),
            ValueType::Arrow(d, c) => ValueType::Arrow(Box::new(self.value(d)), Box::new(self.comp(c))),
        }
    }

    pub fn comp(&self, c: &CompType) -> CompType {
        CompType { monad: self.monad(&c.monad), value: self.value(&c.value) }
    }

    pub fn monad(&self, m: &MonadType) -> MonadType {
        match m {
            MonadType::Bot => MonadType::Bot,
            MonadType::Var(v) => match self.monads.get(v) {
                Some(n) => self.monad(n),
                None => m.clone(),
            },
            MonadType::Ground(c, idx) => MonadType::Ground(c.clone(), idx.iter().map(|i| self.value(i)).collect()),
        }
    }

    pub fn constraint(&self, c: &BindConstraint) -> BindConstraint {
        BindConstraint::new(self.monad(&c.left), self.monad(&c.middle), self.monad(&c.result))
    }

    pub fn bag(&self, p: &[BindConstraint]) -> Vec<BindConstraint> {
        p.iter().map(|c| self.constraint(c)).collect()
    }

    /// Applies to the free variables of a scheme, leaving bound ones alone.
    pub fn scheme(&self, s: &Scheme) -> Scheme {
        let bound = s.bound();
        let mut inner = self.clone();
        inner.values.retain(|v, _| !bound.contains(v));
        inner.monads.retain(|v, _| !bound.contains(v));
        Scheme {
            value_vars: s.value_vars.clone(),
            monad_vars: s.monad_vars.clone(),
            constraints: inner.bag(&s.constraints),
            body: inner.value(&s.body),
        }
    }

    /// Flattens chains so every binding is fully resolved.
    pub fn normalize(&mut self) {
        let snapshot = self.clone();
        for t in self.values.values_mut() {
            *t = snapshot.value(t);
        }
        for m in self.monads.values_mut() {
            *m = snapshot.monad(m);
        }
    }
}

/// The elaborated language: terms with explicit binds and evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Var(String),
    Const(String),
    Int(i64),
    Bool(bool),
    Unit,
    Lam(String, Box<Target>),
    App(Box<Target>, Box<Target>),
    Let(String, Box<Target>, Box<Target>),
    LetRec(String, Box<Target>, Box<Target>),
    If(Box<Target>, Box<Target>, Box<Target>),
    /// `lam b1 .. bn. e`, one binder per abstracted constraint.
    EvAbs(Vec<EvId>, Box<Target>),
    /// Supplies evidence to an evidence-abstracted value.
    EvApp(Box<Target>, Vec<EvId>),
    /// `b computation continuation`.
    Bind(EvId, Box<Target>, Box<Target>),
    /// Local evidence for constraints left out of a displayed scheme.
    EvLet(Vec<(EvId, EvSource)>, Box<Target>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvSource {
    Alias(EvId),
    /// Works at any `(m, Bot) |> m` or `(Bot, m) |> m`.
    Identity,
    /// A bind the signature provides outright.
    Ground(BindConstraint),
}

impl Target {
    pub fn lam(x: &str, body: Target) -> Target {
        Target::Lam(x.to_string(), Box::new(body))
    }

    pub fn identity() -> Target {
        Target::lam("z", Target::Var("z".into()))
    }

    /// Evidence ids that occur free.
    pub fn free_evidence(&self) -> BTreeSet<EvId> {
        let mut out = BTreeSet::new();
        self.collect_evidence(&mut Vec::new(), &mut out);
        out
    }

    fn collect_evidence(&self, bound: &mut Vec<EvId>, out: &mut BTreeSet<EvId>) {
        let mut use_ev = |e: &EvId, bound: &Vec<EvId>| {
            if !bound.contains(e) {
                out.insert(*e);
            }
        };
        match self {
            Target::Var(_) | Target::Const(_) | Target::Int(_) | Target::Bool(_) | Target::Unit => {}
            Target::Lam(_, b) => b.collect_evidence(bound, out),
            Target::App(a, b) | Target::Let(_, a, b) | Target::LetRec(_, a, b) => {
                a.collect_evidence(bound, out);
                b.collect_evidence(bound, out);
            }
            Target::If(a, b, c) => {
                a.collect_evidence(bound, out);
                b.collect_evidence(bound, out);
                c.collect_evidence(bound, out);
            }
            Target::EvAbs(ids, b) => {
                let n = bound.len();
                bound.extend(ids);
                b.collect_evidence(bound, out);
                bound.truncate(n);
            }
            Target::EvApp(b, ids) => {
                ids.iter().for_each(|e| use_ev(e, bound));
                b.collect_evidence(bound, out);
            }
            Target::Bind(e, a, b) => {
                use_ev(e, bound);
                a.collect_evidence(bound, out);
                b.collect_evidence(bound, out);
            }
            Target::EvLet(defs, b) => {
                for (_, src) in defs {
                    if let EvSource::Alias(e) = src {
                        use_ev(e, bound);
                    }
                }
                let n = bound.len();
                bound.extend(defs.iter().map(|(e, _)| *e));
                b.collect_evidence(bound, out);
                bound.truncate(n);
            }
        }
    }
}

mod alpha {
    use super::*;

    pub fn schemes_equivalent(a: &Scheme, b: &Scheme) -> bool {
        if a.constraints.len() != b.constraints.len() {
            return false;
        }
        let bound_a = a.bound();
        let bound_b = b.bound();
        if bound_a.len() != bound_b.len() || a.free_vars() != b.free_vars() {
            return false;
        }
        let mut map = BTreeMap::new();
        if !match_vt(&a.body, &b.body, &bound_a, &mut map) {
            return false;
        }
        let mut used = vec![false; b.constraints.len()];
        match_bag(&a.constraints, 0, &b.constraints, &mut used, &bound_a, &mut map)
    }

    fn match_bag(
        xs: &[BindConstraint],
        i: usize,
        ys: &[BindConstraint],
        used: &mut Vec<bool>,
        bound: &BTreeSet<Tv>,
        map: &mut BTreeMap<Tv, Tv>,
    ) -> bool {
        if i == xs.len() {
            let mut image: Vec<_> = map.values().collect();
            image.sort();
            image.dedup();
            return image.len() == map.len();
        }
        for j in 0..ys.len() {
            if used[j] {
                continue;
            }
            let saved = map.clone();
            if match_c(&xs[i], &ys[j], bound, map) {
                used[j] = true;
                if match_bag(xs, i + 1, ys, used, bound, map) {
                    return true;
                }
                used[j] = false;
            }
            *map = saved;
        }
        false
    }

    fn match_var(x: Tv, y: Tv, bound: &BTreeSet<Tv>, map: &mut BTreeMap<Tv, Tv>) -> bool {
        if !bound.contains(&x) {
            return x == y;
        }
        match map.get(&x) {
            Some(z) => *z == y,
            None => {
                if map.values().any(|z| *z == y) {
                    return false;
                }
                map.insert(x, y);
                true
            }
        }
    }

    fn match_c(x: &BindConstraint, y: &BindConstraint, bound: &BTreeSet<Tv>, map: &mut BTreeMap<Tv, Tv>) -> bool {
        match_m(&x.left, &y.left, bound, map)
            && match_m(&x.middle, &y.middle, bound, map)
            && match_m(&x.result, &y.result, bound, map)
    }

    fn match_m(x: &MonadType, y: &MonadType, bound: &BTreeSet<Tv>, map: &mut BTreeMap<Tv, Tv>) -> bool {
        match (x, y) {
            (MonadType::Bot, MonadType::Bot) => true,
            (MonadType::Var(a), MonadType::Var(b)) => match_var(*a, *b, bound, map),
            (MonadType::Ground(n, xs), MonadType::Ground(m, ys)) => {
                n == m && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_vt(x, y, bound, map))
            }
            _ => false,
        }
    }

    fn match_vt(x: &ValueType, y: &ValueType, bound: &BTreeSet<Tv>, map: &mut BTreeMap<Tv, Tv>) -> bool {
        match (x, y) {
            (ValueType::Var(a), ValueType::Var(b)) => match_var(*a, *b, bound, map),
            (ValueType::Con(n, xs), ValueType::Con(m, ys)) => {
                n == m && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_vt(x, y, bound, map))
            }
            (ValueType::Set(a), ValueType::Set(b)) => a == b,
            (ValueType::Arrow(d1, c1), ValueType::Arrow(d2, c2)) => {
                match_vt(d1, d2, bound, map)
                    && match_m(&c1.monad, &c2.monad, bound, map)
                    && match_vt(&c1.value, &c2.value, bound, map)
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ftv_of_closed_scheme_is_empty() {
        let s = Scheme {
            value_vars: vec![0],
            monad_vars: vec![],
            constraints: vec![],
            body: ValueType::pure_arrow(ValueType::Var(0), ValueType::Var(0)),
        };
        assert!(free_type_vars(&s).is_empty());
    }

    #[test]
    fn ftv_of_morphism_has_both_ends() {
        let c = BindConstraint::morphism(MonadType::Var(1), MonadType::Var(2));
        assert_eq!(free_type_vars(&c), [1, 2].into_iter().collect());
    }

    #[test]
    fn alpha_eq_ignores_bag_order_and_names() {
        let a = parse_scheme("forall a n1 n2. (Bot, n1) |> n2, (Bot, Bot) |> n1 => a -> n2 a", &TypeContext::default())
            .unwrap();
        let b = parse_scheme("forall b m x. (Bot, Bot) |> m, (Bot, m) |> x => b -> x b", &TypeContext::default())
            .unwrap();
        assert!(a.alpha_eq(&b));
        let c = parse_scheme("forall b m x. (Bot, Bot) |> x, (Bot, m) |> x => b -> x b", &TypeContext::default())
            .unwrap();
        assert!(!a.alpha_eq(&c));
    }
}

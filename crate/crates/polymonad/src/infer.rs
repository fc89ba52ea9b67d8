//! Syntax-directed inference with elaboration into evidence-passing terms.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{build_graph, find_core, open_vertices};
use crate::signature::{entail_ground, explain_failure, Signature};
use crate::simplify::{hide_plan, simplify, Hidden};
use crate::syntax::{
    print_constraint, print_monad, BindConstraint, CompType, Decl, EvId, EvSource, FreeVars, MonadType,
    Namer, Program, Scheme, Subst, Target, Term, Tv, ValueType, print_vtype,
};

/// A constraint bag; each constraint names the evidence that discharges it.
pub type Bag = Vec<(EvId, BindConstraint)>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound identifier {0}")]
    Unbound(String),
    #[error("cannot unify {0} with {1}")]
    Mismatch(String, String),
    #[error("infinite type: {0} occurs in {1}")]
    Occurs(String, String),
    #[error("unsatisfiable constraint {constraint}{}", reason.as_ref().map(|r| format!(": {r}")).unwrap_or_default())]
    Unsatisfiable { constraint: String, reason: Option<String> },
    #[error("ambiguous type for {name}: open variable {var} does not flow between binds")]
    Ambiguous { name: String, var: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub simplify: bool,
    pub hide: bool,
    pub check_ambiguity: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { simplify: true, hide: true, check_ambiguity: true }
    }
}

#[derive(Debug, Clone)]
struct Binding {
    name: String,
    scheme: Scheme,
}

/// Result of inferring a whole program.
#[derive(Debug, Clone)]
pub struct Inferred {
    /// Top-level declarations with their schemes as stored in the
    /// environment.
    pub decls: Vec<(String, Scheme)>,
    /// Computation type of the main expression.
    pub monad: MonadType,
    pub ty: ValueType,
    /// Constraints the main expression still needs solved.
    pub bag: Bag,
    pub target: Target,
}

impl Inferred {
    pub fn scheme(&self, name: &str) -> Option<&Scheme> {
        self.decls.iter().rev().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

/// Types of the operators and helpers every program may use.
pub fn builtins() -> Vec<(String, Scheme)> {
    let int = ValueType::int;
    let bin = |r: ValueType| Scheme::mono(ValueType::pure_arrow(int(), ValueType::pure_arrow(int(), r)));
    let mut out: Vec<(String, Scheme)> = ["+", "-", "*"].iter().map(|o| (o.to_string(), bin(int()))).collect();
    out.extend([">", "<", "=="].iter().map(|o| (o.to_string(), bin(ValueType::bool()))));
    out.push(("incr".into(), Scheme::mono(ValueType::pure_arrow(int(), int()))));
    out
}

pub struct Infer<'s> {
    sig: &'s Signature,
    opts: Options,
    next_tv: Tv,
    next_ev: EvId,
    subst: Subst,
    globals: BTreeMap<String, Scheme>,
    locals: Vec<Binding>,
}

fn max_var(s: &Scheme) -> Tv {
    let mut vs = s.free_vars();
    vs.extend(s.bound());
    s.constraints.iter().for_each(|c| c.collect_vars(&mut vs));
    s.body.collect_vars(&mut vs);
    vs.into_iter().max().unwrap_or(0)
}

fn monad_vars_of_type(t: &ValueType, out: &mut BTreeSet<Tv>) {
    match t {
        ValueType::Var(_) | ValueType::Set(_) => {}
        ValueType::Con(_, args) => args.iter().for_each(|a| monad_vars_of_type(a, out)),
        ValueType::Arrow(d, c) => {
            monad_vars_of_type(d, out);
            if let MonadType::Var(v) = c.monad {
                out.insert(v);
            }
            if let MonadType::Ground(_, idx) = &c.monad {
                idx.iter().for_each(|a| monad_vars_of_type(a, out));
            }
            monad_vars_of_type(&c.value, out);
        }
    }
}

/// Monadic variables of a bag and type.
pub fn monad_vars(bag: &[BindConstraint], t: &ValueType) -> BTreeSet<Tv> {
    let mut out = BTreeSet::new();
    for c in bag {
        for m in c.parts() {
            if let MonadType::Var(v) = m {
                out.insert(*v);
            }
        }
    }
    monad_vars_of_type(t, &mut out);
    out
}

/// Replaces free occurrences of `Var(f)` by `f` applied to `ids`.
fn patch_recursive(t: &Target, f: &str, ids: &[EvId]) -> Target {
    let go = |x: &Target| Box::new(patch_recursive(x, f, ids));
    match t {
        Target::Var(x) if x == f => Target::EvApp(Box::new(t.clone()), ids.to_vec()),
        Target::Var(_) | Target::Const(_) | Target::Int(_) | Target::Bool(_) | Target::Unit => t.clone(),
        Target::Lam(x, _) if x == f => t.clone(),
        Target::Lam(x, b) => Target::Lam(x.clone(), go(b)),
        Target::App(a, b) => Target::App(go(a), go(b)),
        Target::Let(x, a, b) if x == f => Target::Let(x.clone(), go(a), b.clone()),
        Target::Let(x, a, b) => Target::Let(x.clone(), go(a), go(b)),
        Target::LetRec(x, _, _) if x == f => t.clone(),
        Target::LetRec(x, a, b) => Target::LetRec(x.clone(), go(a), go(b)),
        Target::If(a, b, c) => Target::If(go(a), go(b), go(c)),
        Target::EvAbs(e, b) => Target::EvAbs(e.clone(), go(b)),
        // Already applied to evidence: leave the variable alone.
        Target::EvApp(b, e) if matches!(&**b, Target::Var(x) if x == f) => t.clone(),
        Target::EvApp(b, e) => Target::EvApp(go(b), e.clone()),
        Target::Bind(e, a, b) => Target::Bind(*e, go(a), go(b)),
        Target::EvLet(d, b) => Target::EvLet(d.clone(), go(b)),
    }
}

impl<'s> Infer<'s> {
    pub fn new(sig: &'s Signature, opts: Options) -> Self {
        let mut globals: BTreeMap<String, Scheme> = builtins().into_iter().collect();
        for (n, s) in &sig.prims {
            globals.insert(n.clone(), s.clone());
        }
        let next_tv = globals.values().map(max_var).max().unwrap_or(0) + 1;
        Infer { sig, opts, next_tv, next_ev: 1, subst: Subst::default(), globals, locals: Vec::new() }
    }

    /// Makes `name` available to the program with a fixed scheme.
    pub fn assume(&mut self, name: &str, scheme: Scheme) {
        self.next_tv = self.next_tv.max(max_var(&scheme) + 1);
        self.globals.insert(name.to_string(), scheme);
    }

    fn fresh(&mut self) -> Tv {
        let v = self.next_tv;
        self.next_tv += 1;
        v
    }

    fn fresh_value(&mut self) -> ValueType {
        ValueType::Var(self.fresh())
    }

    fn fresh_monad(&mut self) -> MonadType {
        MonadType::Var(self.fresh())
    }

    fn fresh_ev(&mut self) -> EvId {
        let e = self.next_ev;
        self.next_ev += 1;
        e
    }

    fn constrain(&mut self, c: BindConstraint) -> (EvId, BindConstraint) {
        (self.fresh_ev(), c)
    }

    pub fn resolve(&self, t: &ValueType) -> ValueType {
        self.subst.value(t)
    }

    fn mismatch(&self, a: &ValueType, b: &ValueType) -> TypeError {
        let mut n = Namer::default();
        TypeError::Mismatch(print_vtype(a, &mut n), print_vtype(b, &mut n))
    }

    pub fn unify(&mut self, a: &ValueType, b: &ValueType) -> Result<(), TypeError> {
        let (a, b) = (self.subst.value(a), self.subst.value(b));
        match (&a, &b) {
            (ValueType::Var(x), ValueType::Var(y)) if x == y => Ok(()),
            (ValueType::Var(x), t) | (t, ValueType::Var(x)) => {
                if t.free_vars().contains(x) {
                    let mut n = Namer::default();
                    return Err(TypeError::Occurs(
                        print_vtype(&ValueType::Var(*x), &mut n),
                        print_vtype(t, &mut n),
                    ));
                }
                self.subst.values.insert(*x, t.clone());
                Ok(())
            }
            (ValueType::Con(n, xs), ValueType::Con(m, ys)) if n == m && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y).map_err(|_| self.mismatch(&a, &b))?;
                }
                Ok(())
            }
            (ValueType::Set(x), ValueType::Set(y)) if x == y => Ok(()),
            (ValueType::Arrow(d1, c1), ValueType::Arrow(d2, c2)) => {
                self.unify(d1, d2)?;
                self.unify_monad(&c1.monad, &c2.monad)?;
                self.unify(&c1.value, &c2.value)
            }
            _ => Err(self.mismatch(&a, &b)),
        }
    }

    pub fn unify_monad(&mut self, a: &MonadType, b: &MonadType) -> Result<(), TypeError> {
        let (a, b) = (self.subst.monad(a), self.subst.monad(b));
        let clash = || {
            let mut n = Namer::default();
            TypeError::Mismatch(print_monad(&a, &mut n), print_monad(&b, &mut n))
        };
        match (&a, &b) {
            (MonadType::Var(x), MonadType::Var(y)) if x == y => Ok(()),
            (MonadType::Var(x), m) | (m, MonadType::Var(x)) => {
                self.subst.monads.insert(*x, m.clone());
                Ok(())
            }
            (MonadType::Bot, MonadType::Bot) => Ok(()),
            (MonadType::Ground(n, xs), MonadType::Ground(m, ys)) if n == m && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y).map_err(|_| clash())?;
                }
                Ok(())
            }
            _ => Err(clash()),
        }
    }

    fn lookup(&self, x: &str) -> Option<(Scheme, bool)> {
        if let Some(b) = self.locals.iter().rev().find(|b| b.name == x) {
            return Some((b.scheme.clone(), false));
        }
        self.globals.get(x).map(|s| (s.clone(), true))
    }

    fn instantiate(&mut self, s: &Scheme) -> (ValueType, Bag) {
        let map: BTreeMap<Tv, Tv> = s.bound().into_iter().map(|v| (v, self.fresh())).collect();
        let bag = s.constraints.iter().map(|c| c.rename(&map)).collect::<Vec<_>>();
        let bag = bag.into_iter().map(|c| self.constrain(c)).collect();
        (s.body.rename(&map), bag)
    }

    pub fn infer_value(&mut self, v: &Term) -> Result<(ValueType, Target, Bag), TypeError> {
        match v {
            Term::Int(i) => Ok((ValueType::int(), Target::Int(*i), vec![])),
            Term::Bool(b) => Ok((ValueType::bool(), Target::Bool(*b), vec![])),
            Term::Unit => Ok((ValueType::unit(), Target::Unit, vec![])),
            Term::Var(x) | Term::Const(x) => {
                let (s, global) = self.lookup(x).ok_or_else(|| TypeError::Unbound(x.clone()))?;
                let (t, bag) = self.instantiate(&s);
                let base = if global { Target::Const(x.clone()) } else { Target::Var(x.clone()) };
                let target = if bag.is_empty() { base } else { Target::EvApp(Box::new(base), bag.iter().map(|(e, _)| *e).collect()) };
                Ok((t, target, bag))
            }
            Term::Lam(x, body) => {
                let a = self.fresh_value();
                self.locals.push(Binding { name: x.clone(), scheme: Scheme::mono(a.clone()) });
                let r = self.infer_expr(body);
                self.locals.pop();
                let (m, t, e, bag) = r?;
                Ok((ValueType::Arrow(Box::new(a), Box::new(CompType { monad: m, value: t })), Target::lam(x, e), bag))
            }
            _ => unreachable!("infer_value on a non-value"),
        }
    }

    pub fn infer_expr(&mut self, e: &Term) -> Result<(MonadType, ValueType, Target, Bag), TypeError> {
        if e.is_value() {
            let (t, target, bag) = self.infer_value(e)?;
            return Ok((MonadType::Bot, t, target, bag));
        }
        match e {
            Term::App(e1, e2) => {
                let (m1, t1, x1, p1) = self.infer_expr(e1)?;
                let (m2, t2, x2, p2) = self.infer_expr(e2)?;
                let (m3, b) = (self.fresh_monad(), self.fresh_value());
                let want = ValueType::Arrow(Box::new(t2), Box::new(CompType { monad: m3.clone(), value: b.clone() }));
                self.unify(&t1, &want)?;
                let (m4, m5) = (self.fresh_monad(), self.fresh_monad());
                let outer = self.constrain(BindConstraint::new(m1, m4.clone(), m5.clone()));
                let inner = self.constrain(BindConstraint::new(m2, m3, m4));
                let call = Target::App(Box::new(Target::Var("f".into())), Box::new(Target::Var("x".into())));
                let target = Target::Bind(
                    outer.0,
                    Box::new(x1),
                    Box::new(Target::lam("f", Target::Bind(inner.0, Box::new(x2), Box::new(Target::lam("x", call))))),
                );
                Ok((m5, b, target, [vec![outer, inner], p1, p2].concat()))
            }
            Term::Let(x, e1, e2) if e1.is_value() => self.let_value(x, e1, e2, false),
            Term::LetRec(f, v, e2) => self.let_value(f, v, e2, true),
            Term::Let(x, e1, e2) => {
                let (m1, t1, x1, p1) = self.infer_expr(e1)?;
                self.locals.push(Binding { name: x.clone(), scheme: Scheme::mono(t1) });
                let r = self.infer_expr(e2);
                self.locals.pop();
                let (m2, t2, x2, p2) = r?;
                let m3 = self.fresh_monad();
                let pi = self.constrain(BindConstraint::new(m1, m2, m3.clone()));
                let target = Target::Bind(pi.0, Box::new(x1), Box::new(Target::lam(x, x2)));
                Ok((m3, t2, target, [vec![pi], p1, p2].concat()))
            }
            Term::If(c, a, b) => {
                let (m1, t1, x1, p1) = self.infer_expr(c)?;
                self.unify(&t1, &ValueType::bool())?;
                let (m2, t2, x2, p2) = self.infer_expr(a)?;
                let (m3, t3, x3, p3) = self.infer_expr(b)?;
                self.unify(&t2, &t3)?;
                let (m, m_) = (self.fresh_monad(), self.fresh_monad());
                let pt = self.constrain(BindConstraint::morphism(m2, m.clone()));
                let pe = self.constrain(BindConstraint::morphism(m3, m.clone()));
                let pg = self.constrain(BindConstraint::new(m1, m, m_.clone()));
                let branch = |id: EvId, x: Target| Target::Bind(id, Box::new(x), Box::new(Target::identity()));
                let body = Target::If(Box::new(Target::Var("b".into())), Box::new(branch(pt.0, x2)), Box::new(branch(pe.0, x3)));
                let target = Target::Bind(pg.0, Box::new(x1), Box::new(Target::lam("b", body)));
                Ok((m_, t2, target, [vec![pt, pe, pg], p1, p2, p3].concat()))
            }
            _ => unreachable!("values handled above"),
        }
    }

    fn let_value(&mut self, x: &str, v: &Term, body: &Term, rec: bool) -> Result<(MonadType, ValueType, Target, Bag), TypeError> {
        let (scheme, bound) = self.infer_binding(x, v, rec)?;
        self.locals.push(Binding { name: x.to_string(), scheme });
        let r = self.infer_expr(body);
        self.locals.pop();
        let (m, t, e, bag) = r?;
        let target = if rec {
            Target::LetRec(x.to_string(), Box::new(bound), Box::new(e))
        } else {
            Target::Let(x.to_string(), Box::new(bound), Box::new(e))
        };
        Ok((m, t, target, bag))
    }

    /// Infers and generalizes a value bound by `let` or `letrec`.
    pub fn infer_binding(&mut self, x: &str, v: &Term, rec: bool) -> Result<(Scheme, Target), TypeError> {
        let (t, e, bag) = if rec {
            let a = self.fresh_value();
            self.locals.push(Binding { name: x.to_string(), scheme: Scheme::mono(a.clone()) });
            let r = self.infer_value(v);
            self.locals.pop();
            let (t, e, bag) = r?;
            self.unify(&a, &t)?;
            (t, e, bag)
        } else {
            self.infer_value(v)?
        };
        self.generalize(x, &t, e, &bag, rec)
    }

    fn env_vars(&self) -> BTreeSet<Tv> {
        self.locals.iter().flat_map(|b| self.subst.scheme(&b.scheme).free_vars()).collect()
    }

    /// Simplifies, hides and closes `bag => t` over the variables not free in
    /// the environment, abstracting the visible constraints' evidence.
    pub fn generalize(&mut self, name: &str, t: &ValueType, e: Target, bag: &Bag, rec: bool) -> Result<(Scheme, Target), TypeError> {
        let t = self.subst.value(t);
        let ids: Vec<EvId> = bag.iter().map(|(i, _)| *i).collect();
        let mut cs: Vec<BindConstraint> = bag.iter().map(|(_, c)| self.subst.constraint(c)).collect();
        let env = self.env_vars();
        let body_vars = t.free_vars();
        if self.opts.simplify {
            let eligible: BTreeSet<Tv> =
                monad_vars(&cs, &t).into_iter().filter(|v| !env.contains(v) && !body_vars.contains(v)).collect();
            let (theta, rest) = simplify(&cs, &eligible, self.sig);
            self.subst.monads.extend(theta.monads);
            cs = rest;
        }
        let plan = if self.opts.hide { hide_plan(&cs, self.sig) } else { vec![None; cs.len()] };
        let mut visible = Vec::new();
        let mut vis_ids = Vec::new();
        let mut defs = Vec::new();
        for (k, (c, h)) in cs.iter().zip(&plan).enumerate() {
            match h {
                None => {
                    if c.is_ground() && entail_ground(self.sig, c).is_none() {
                        return Err(self.unsatisfiable(c));
                    }
                    visible.push(c.clone());
                    vis_ids.push(ids[k]);
                }
                Some(Hidden::Duplicate(j)) => defs.push((ids[k], EvSource::Alias(ids[*j]))),
                Some(Hidden::Identity) => defs.push((ids[k], EvSource::Identity)),
                Some(Hidden::Entailed) => defs.push((ids[k], EvSource::Ground(c.clone()))),
            }
        }
        let mut protected = env.clone();
        protected.extend(body_vars.iter().copied());
        if self.opts.check_ambiguity {
            self.check_unambiguous(name, &visible, &protected)?;
        }
        let mvars = monad_vars(&visible, &t);
        let mut quantified: BTreeSet<Tv> = visible.free_vars();
        quantified.extend(body_vars);
        quantified.retain(|v| !env.contains(v));
        let (monad_vars, value_vars): (Vec<Tv>, Vec<Tv>) = quantified.into_iter().partition(|v| mvars.contains(v));
        let scheme = Scheme { value_vars, monad_vars, constraints: visible, body: t };
        let mut e = if rec { patch_recursive(&e, name, &vis_ids) } else { e };
        if !defs.is_empty() {
            e = Target::EvLet(defs, Box::new(e));
        }
        if !vis_ids.is_empty() {
            e = Target::EvAbs(vis_ids, Box::new(e));
        }
        Ok((scheme, e))
    }

    fn check_unambiguous(&self, name: &str, bag: &[BindConstraint], protected: &BTreeSet<Tv>) -> Result<(), TypeError> {
        let g = build_graph(bag);
        if find_core(&g, protected).is_some() {
            return Ok(());
        }
        let flows = g.flow_edges();
        let open = open_vertices(&g, protected);
        let v = open.iter().find(|&&v| !flows.iter().any(|e| e.touches(v))).or(open.first()).copied();
        let mut n = Namer::default();
        bag.iter().for_each(|c| {
            print_constraint(c, &mut n);
        });
        let var = v.map(|v| print_monad(&g.assign[v], &mut n)).unwrap_or_default();
        Err(TypeError::Ambiguous { name: name.to_string(), var })
    }

    pub fn unsatisfiable(&self, c: &BindConstraint) -> TypeError {
        let constraint = print_constraint(c, &mut Namer::default());
        let reason = explain_failure(self.sig, c).map(|(spec, atom)| format!("{spec} requires {atom}"));
        TypeError::Unsatisfiable { constraint, reason }
    }

    /// Applies the current substitution to a bag.
    pub fn resolve_bag(&self, bag: &Bag) -> Bag {
        bag.iter().map(|(e, c)| (*e, self.subst.constraint(c))).collect()
    }

    pub fn infer_program(&mut self, prog: &Program) -> Result<Inferred, TypeError> {
        let mut decls = Vec::new();
        let (m, t, target, bag) = self.infer_top(&prog.decls, prog.main.as_ref(), &mut decls)?;
        let decls = decls.into_iter().map(|(n, s)| (n, self.subst.scheme(&s))).collect();
        let t = self.subst.value(&t);
        let m = self.subst.monad(&m);
        let mut bag = self.resolve_bag(&bag);
        if self.opts.simplify {
            let mut protected = t.free_vars();
            m.collect_vars(&mut protected);
            let cs: Vec<BindConstraint> = bag.iter().map(|(_, c)| c.clone()).collect();
            let eligible = monad_vars(&cs, &t).into_iter().filter(|v| !protected.contains(v)).collect();
            let (theta, rest) = simplify(&cs, &eligible, self.sig);
            self.subst.monads.extend(theta.monads);
            bag = bag.iter().zip(rest).map(|((e, _), c)| (*e, c)).collect();
        }
        Ok(Inferred { decls, monad: self.subst.monad(&m), ty: t, bag, target })
    }

    fn infer_top(
        &mut self,
        decls: &[Decl],
        main: Option<&Term>,
        out: &mut Vec<(String, Scheme)>,
    ) -> Result<(MonadType, ValueType, Target, Bag), TypeError> {
        let Some((d, rest)) = decls.split_first() else {
            return self.infer_expr(main.unwrap_or(&Term::Unit));
        };
        if d.rec || d.bound.is_value() {
            let (scheme, bound) = self.infer_binding(&d.name, &d.bound, d.rec)?;
            out.push((d.name.clone(), scheme.clone()));
            self.locals.push(Binding { name: d.name.clone(), scheme });
            let r = self.infer_top(rest, main, out);
            self.locals.pop();
            let (m, t, e, bag) = r?;
            let target = if d.rec {
                Target::LetRec(d.name.clone(), Box::new(bound), Box::new(e))
            } else {
                Target::Let(d.name.clone(), Box::new(bound), Box::new(e))
            };
            return Ok((m, t, target, bag));
        }
        let (m1, t1, x1, p1) = self.infer_expr(&d.bound)?;
        out.push((d.name.clone(), Scheme::mono(t1.clone())));
        self.locals.push(Binding { name: d.name.clone(), scheme: Scheme::mono(t1) });
        let r = self.infer_top(rest, main, out);
        self.locals.pop();
        let (m2, t2, x2, p2) = r?;
        let m3 = self.fresh_monad();
        let pi = self.constrain(BindConstraint::new(m1, m2, m3.clone()));
        let target = Target::Bind(pi.0, Box::new(x1), Box::new(Target::lam(&d.name, x2)));
        Ok((m3, t2, target, [vec![pi], p1, p2].concat()))
    }
}

/// Infers a whole program.
pub fn infer_program(sig: &Signature, prog: &Program, opts: Options) -> Result<Inferred, TypeError> {
    Infer::new(sig, opts).infer_program(prog)
}

/// Every wanted constraint is in the bag or a ground bind of the signature.
pub fn entails(bag: &[BindConstraint], sig: &Signature, wanted: &[BindConstraint]) -> bool {
    wanted.iter().all(|w| bag.contains(w) || (w.is_ground() && entail_ground(sig, w).is_some()))
}

/// Open variables: monadic variables of the bag not free in the body.
pub fn open_vars(s: &Scheme) -> Vec<Tv> {
    let body = s.body.free_vars();
    crate::simplify::monad_vars_in_order(&s.constraints).into_iter().filter(|v| !body.contains(v)).collect()
}

#[cfg(test)]
mod tests;

//! Evaluation of elaborated terms over index-erased monads.
//!
//! Every constructor of a signature erases to one runtime monad `T`
//! (state, writer, session, ...) and `Bot` erases to the identity. A
//! bind's behaviour depends only on the erased shape of its triple.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::rc::Rc;

use crate::graph::Composite;
use crate::signature::{RuntimeKind, Signature};
use crate::syntax::{BindConstraint, EvId, EvSource, MonadType, Target, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("recv on an empty script")]
    RecvEmpty,
    #[error("unknown reference {0}")]
    UnboundRef(String),
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("no evidence for b{0}")]
    MissingEvidence(EvId),
    #[error("out of fuel")]
    OutOfFuel,
    #[error("{0}")]
    Stuck(String),
}

type Res<T> = Result<T, RuntimeError>;

/// Erased monad: the identity or the signature's runtime monad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rep {
    Id,
    T,
}

impl Rep {
    pub fn of(m: &MonadType) -> Rep {
        match m {
            MonadType::Bot => Rep::Id,
            _ => Rep::T,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(pub Rep, pub Rep, pub Rep);

impl Shape {
    pub fn of(c: &BindConstraint) -> Shape {
        Shape(Rep::of(&c.left), Rep::of(&c.middle), Rep::of(&c.result))
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |x: Rep| if x == Rep::Id { "Id" } else { "T" };
        write!(f, "({}, {}) |> {}", r(self.0), r(self.1), r(self.2))
    }
}

/// A bind implementation handed to evidence-abstracted code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dict {
    Shape(Shape),
    /// Identity morphism at an unknown constructor.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Read(String),
    Write(String, i64),
    Send(Value),
    Recv,
}

/// A computation of the runtime monad, run by a [`Machine`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comp {
    Pure(Value),
    Op(Op),
    Bind(Rc<Comp>, Value),
}

pub type Native = Rc<dyn Fn(&Interp, Value) -> Res<Value>>;

#[derive(Clone)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Unit,
    Ref(String),
    Closure(Rc<(String, Target, Env)>),
    /// A `letrec`-bound value, unfolded on use.
    Rec(Rc<(String, Target, Env)>),
    Prim(Rc<(String, usize, Vec<Value>)>),
    EvClosure(Rc<(Vec<EvId>, Target, Env)>),
    Comp(Rc<Comp>),
    Native(Native),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Unit, Value::Unit) => true,
            (Value::Ref(a), Value::Ref(b)) => a == b,
            (Value::Comp(a), Value::Comp(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => write!(f, "()"),
            Value::Ref(r) => write!(f, "{r}"),
            Value::Comp(_) => write!(f, "<computation>"),
            _ => write!(f, "<fun>"),
        }
    }
}

impl Value {
    pub fn native(f: impl Fn(&Interp, Value) -> Res<Value> + 'static) -> Value {
        Value::Native(Rc::new(f))
    }

    pub fn comp(c: Comp) -> Value {
        Value::Comp(Rc::new(c))
    }
}

enum VarNode {
    Nil,
    Cons(String, Value, Rc<VarNode>),
}

enum EvNode {
    Nil,
    Cons(EvId, Dict, Rc<EvNode>),
}

/// Persistent variable and evidence environment.
#[derive(Clone)]
pub struct Env {
    vars: Rc<VarNode>,
    evs: Rc<EvNode>,
}

impl Default for Env {
    fn default() -> Self {
        Env { vars: Rc::new(VarNode::Nil), evs: Rc::new(EvNode::Nil) }
    }
}

impl Env {
    pub fn bind(&self, x: &str, v: Value) -> Env {
        Env { vars: Rc::new(VarNode::Cons(x.to_string(), v, self.vars.clone())), evs: self.evs.clone() }
    }

    pub fn bind_ev(&self, e: EvId, d: Dict) -> Env {
        Env { vars: self.vars.clone(), evs: Rc::new(EvNode::Cons(e, d, self.evs.clone())) }
    }

    fn var(&self, x: &str) -> Option<Value> {
        let mut n = &self.vars;
        while let VarNode::Cons(y, v, rest) = &**n {
            if y == x {
                return Some(v.clone());
            }
            n = rest;
        }
        None
    }

    fn ev(&self, e: EvId) -> Option<Dict> {
        let mut n = &self.evs;
        while let EvNode::Cons(f, d, rest) = &**n {
            if *f == e {
                return Some(*d);
            }
            n = rest;
        }
        None
    }
}

/// Evaluates terms; owns the primitive table and the fuel budget.
pub struct Interp {
    prims: BTreeMap<String, usize>,
    fuel: std::cell::Cell<Option<u64>>,
}

fn arity(t: &ValueType) -> usize {
    match t {
        ValueType::Arrow(_, c) => 1 + arity(&c.value),
        _ => 0,
    }
}

impl Interp {
    pub fn new(sig: &Signature, fuel: Option<u64>) -> Interp {
        let mut prims: BTreeMap<String, usize> =
            crate::infer::builtins().into_iter().map(|(n, s)| (n, arity(&s.body))).collect();
        for (n, s) in &sig.prims {
            prims.insert(n.clone(), arity(&s.body));
        }
        Interp { prims, fuel: std::cell::Cell::new(fuel) }
    }

    fn tick(&self) -> Res<()> {
        if let Some(f) = self.fuel.get() {
            if f == 0 {
                return Err(RuntimeError::OutOfFuel);
            }
            self.fuel.set(Some(f - 1));
        }
        Ok(())
    }

    pub fn eval(&self, t: &Target, env: &Env) -> Res<Value> {
        self.tick()?;
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.eval_inner(t, env))
    }

    fn eval_inner(&self, t: &Target, env: &Env) -> Res<Value> {
        match t {
            Target::Int(i) => Ok(Value::Int(*i)),
            Target::Bool(b) => Ok(Value::Bool(*b)),
            Target::Unit => Ok(Value::Unit),
            Target::Var(x) => {
                let v = env.var(x).ok_or_else(|| RuntimeError::Unbound(x.clone()))?;
                self.unfold(v)
            }
            Target::Const(c) => match self.prims.get(c) {
                Some(0) => Ok(Value::Ref(c.clone())),
                Some(n) => Ok(Value::Prim(Rc::new((c.clone(), *n, vec![])))),
                None => Err(RuntimeError::Unbound(c.clone())),
            },
            Target::Lam(x, b) => Ok(Value::Closure(Rc::new((x.clone(), (**b).clone(), env.clone())))),
            Target::App(f, a) => {
                let f = self.eval(f, env)?;
                let a = self.eval(a, env)?;
                self.apply(f, a)
            }
            Target::Let(x, a, b) => {
                let v = self.eval(a, env)?;
                self.eval(b, &env.bind(x, v))
            }
            Target::LetRec(f, a, b) => {
                let rec = Value::Rec(Rc::new((f.clone(), (**a).clone(), env.clone())));
                self.eval(b, &env.bind(f, rec))
            }
            Target::If(c, a, b) => match self.eval(c, env)? {
                Value::Bool(true) => self.eval(a, env),
                Value::Bool(false) => self.eval(b, env),
                v => Err(RuntimeError::Stuck(format!("if on non-boolean {v}"))),
            },
            Target::EvAbs(ids, b) => Ok(Value::EvClosure(Rc::new((ids.clone(), (**b).clone(), env.clone())))),
            Target::EvApp(f, ids) => {
                let f = self.eval(f, env)?;
                let dicts = ids.iter().map(|e| env.ev(*e).ok_or(RuntimeError::MissingEvidence(*e))).collect::<Res<Vec<_>>>()?;
                self.apply_evidence(f, &dicts)
            }
            Target::Bind(e, m, k) => {
                let d = env.ev(*e).ok_or(RuntimeError::MissingEvidence(*e))?;
                let m = self.eval(m, env)?;
                let k = self.eval(k, env)?;
                self.bind(d, m, k)
            }
            Target::EvLet(defs, b) => {
                let mut inner = env.clone();
                for (e, src) in defs {
                    let d = match src {
                        EvSource::Alias(a) => env.ev(*a).ok_or(RuntimeError::MissingEvidence(*a))?,
                        EvSource::Identity => Dict::Identity,
                        EvSource::Ground(c) => Dict::Shape(Shape::of(c)),
                    };
                    inner = inner.bind_ev(*e, d);
                }
                self.eval(b, &inner)
            }
        }
    }

    fn unfold(&self, v: Value) -> Res<Value> {
        match v {
            Value::Rec(r) => {
                let (f, t, env) = &*r;
                self.eval(t, &env.bind(f, Value::Rec(r.clone())))
            }
            v => Ok(v),
        }
    }

    pub fn apply_evidence(&self, f: Value, dicts: &[Dict]) -> Res<Value> {
        if dicts.is_empty() {
            return Ok(f);
        }
        match f {
            Value::EvClosure(c) => {
                let (ids, body, env) = &*c;
                if ids.len() != dicts.len() {
                    return Err(RuntimeError::Stuck("evidence arity mismatch".into()));
                }
                let env = ids.iter().zip(dicts).fold(env.clone(), |e, (i, d)| e.bind_ev(*i, *d));
                self.eval(body, &env)
            }
            v => Err(RuntimeError::Stuck(format!("evidence applied to {v}"))),
        }
    }

    pub fn apply(&self, f: Value, a: Value) -> Res<Value> {
        self.tick()?;
        match f {
            Value::Closure(c) => {
                let (x, body, env) = &*c;
                self.eval(body, &env.bind(x, a))
            }
            Value::Native(n) => n(self, a),
            Value::Prim(p) => {
                let (name, n, args) = &*p;
                let mut args = args.clone();
                args.push(a);
                if args.len() < *n {
                    Ok(Value::Prim(Rc::new((name.clone(), *n, args))))
                } else {
                    prim(name, args)
                }
            }
            v => Err(RuntimeError::Stuck(format!("applied non-function {v}"))),
        }
    }

    /// Runs one bind of the given dictionary.
    pub fn bind(&self, d: Dict, m: Value, k: Value) -> Res<Value> {
        match d {
            Dict::Identity => match m {
                Value::Comp(_) => Ok(Value::comp(Comp::Bind(as_comp(m), k))),
                m => self.apply(k, m),
            },
            Dict::Shape(Shape(left, _, result)) => {
                if left == Rep::T {
                    if result == Rep::Id {
                        return Err(RuntimeError::Stuck("bind from T into Id".into()));
                    }
                    return Ok(Value::comp(Comp::Bind(as_comp(m), k)));
                }
                if let Value::Comp(_) = m {
                    return Err(RuntimeError::Stuck("computation where a pure value was expected".into()));
                }
                let r = self.apply(k, m)?;
                match (result, r) {
                    (Rep::T, r @ Value::Comp(_)) => Ok(r),
                    (Rep::T, r) => Ok(Value::comp(Comp::Pure(r))),
                    (Rep::Id, Value::Comp(_)) => Err(RuntimeError::Stuck("computation escapes into Id".into())),
                    (Rep::Id, r) => Ok(r),
                }
            }
        }
    }
}

fn as_comp(v: Value) -> Rc<Comp> {
    match v {
        Value::Comp(c) => c,
        v => Rc::new(Comp::Pure(v)),
    }
}

fn int(v: &Value) -> Res<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        v => Err(RuntimeError::Stuck(format!("expected an integer, got {v}"))),
    }
}

fn reference(v: &Value) -> Res<String> {
    match v {
        Value::Ref(r) => Ok(r.clone()),
        v => Err(RuntimeError::Stuck(format!("expected a reference, got {v}"))),
    }
}

fn prim(name: &str, args: Vec<Value>) -> Res<Value> {
    let op = |o: Op| Ok(Value::comp(Comp::Op(o)));
    match name {
        "+" => Ok(Value::Int(int(&args[0])?.wrapping_add(int(&args[1])?))),
        "-" => Ok(Value::Int(int(&args[0])?.wrapping_sub(int(&args[1])?))),
        "*" => Ok(Value::Int(int(&args[0])?.wrapping_mul(int(&args[1])?))),
        ">" => Ok(Value::Bool(int(&args[0])? > int(&args[1])?)),
        "<" => Ok(Value::Bool(int(&args[0])? < int(&args[1])?)),
        "==" => Ok(Value::Bool(int(&args[0])? == int(&args[1])?)),
        "incr" => Ok(Value::Int(int(&args[0])?.wrapping_add(1))),
        "read" => op(Op::Read(reference(&args[0])?)),
        "write" => op(Op::Write(reference(&args[0])?, int(&args[1])?)),
        "send" => op(Op::Send(args[0].clone())),
        "recv" => op(Op::Recv),
        _ => Err(RuntimeError::Stuck(format!("no implementation for primitive {name}"))),
    }
}

/// Observable state of the runtime monad.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MachineState {
    /// Reference cells in display order.
    pub store: Vec<(String, i64)>,
    pub trace: Vec<String>,
    pub script: VecDeque<Value>,
}

impl MachineState {
    fn cell(&mut self, r: &str) -> Res<&mut i64> {
        self.store.iter_mut().find(|(n, _)| n == r).map(|(_, v)| v).ok_or_else(|| RuntimeError::UnboundRef(r.to_string()))
    }
}

pub struct Machine<'i> {
    pub kind: RuntimeKind,
    pub state: MachineState,
    interp: &'i Interp,
}

enum Frame {
    Cont(Value),
    Reset,
}

impl<'i> Machine<'i> {
    pub fn new(kind: RuntimeKind, state: MachineState, interp: &'i Interp) -> Self {
        Machine { kind, state, interp }
    }

    fn op(&mut self, op: &Op) -> Res<Value> {
        use RuntimeKind::*;
        match (self.kind, op) {
            (State | StateReset | Writer, Op::Read(r)) => {
                let v = *self.state.cell(r)?;
                if self.kind == Writer {
                    self.state.trace.push(format!("read {r}"));
                }
                Ok(Value::Int(v))
            }
            (State | StateReset | Writer, Op::Write(r, v)) => {
                *self.state.cell(r)? = *v;
                if self.kind == Writer {
                    self.state.trace.push(format!("write {r} {v}"));
                }
                Ok(Value::Unit)
            }
            (Session, Op::Send(v)) => {
                self.state.trace.push(format!("Send {v}"));
                Ok(Value::Unit)
            }
            (Session, Op::Recv) => {
                let v = self.state.script.pop_front().ok_or(RuntimeError::RecvEmpty)?;
                self.state.trace.push(format!("Recv {v}"));
                Ok(v)
            }
            (k, op) => Err(RuntimeError::Stuck(format!("operation {op:?} unsupported by the {k:?} runtime"))),
        }
    }

    /// Runs a value of the runtime monad; pure values are returned as is.
    pub fn run(&mut self, v: Value) -> Res<Value> {
        let mut stack: Vec<Frame> = Vec::new();
        let mut cur = match v {
            Value::Comp(c) => c,
            v => return Ok(v),
        };
        loop {
            self.interp.tick()?;
            let mut result = match &*cur {
                Comp::Bind(m, k) => {
                    if self.kind == RuntimeKind::StateReset {
                        stack.push(Frame::Reset);
                    }
                    stack.push(Frame::Cont(k.clone()));
                    cur = m.clone();
                    continue;
                }
                Comp::Pure(v) => v.clone(),
                Comp::Op(op) => self.op(op)?,
            };
            loop {
                match stack.pop() {
                    None => return Ok(result),
                    Some(Frame::Reset) => {
                        self.state.store.iter_mut().for_each(|(_, v)| *v = 0);
                    }
                    Some(Frame::Cont(k)) => match self.interp.apply(k, result)? {
                        Value::Comp(c) => {
                            cur = c;
                            break;
                        }
                        v => result = v,
                    },
                }
            }
        }
    }
}

/// What a finished run shows: the value and the final runtime state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub value: Value,
    pub state: MachineState,
}

/// Evaluates a program whose free evidence is supplied by `evidence`.
pub fn run_program(
    sig: &Signature,
    target: &Target,
    evidence: &BTreeMap<EvId, Dict>,
    state: MachineState,
    fuel: Option<u64>,
) -> Res<Outcome> {
    let interp = Interp::new(sig, fuel);
    let env = evidence.iter().fold(Env::default(), |e, (i, d)| e.bind_ev(*i, *d));
    let v = interp.eval(target, &env)?;
    let mut m = Machine::new(sig.runtime, state, &interp);
    let value = m.run(v)?;
    Ok(Outcome { value, state: m.state })
}

/// Evidence for each constraint of a solved bag.
pub fn resolve_evidence(bag: &[(EvId, BindConstraint)]) -> BTreeMap<EvId, Dict> {
    bag.iter().map(|(e, c)| (*e, Dict::Shape(Shape::of(c)))).collect()
}

/// Reference cells declared by the signature, each starting at zero.
pub fn initial_store(sig: &Signature) -> Vec<(String, i64)> {
    sig.prims
        .iter()
        .filter(|(_, s)| matches!(&s.body, ValueType::Con(c, _) if c == "intref"))
        .map(|(n, _)| (n.clone(), 0))
        .collect()
}

/// Sample inputs for checking equations between binds.
pub mod samples {
    use super::*;

    /// Starting states: two cells with values drawn from {0, 1, 2}, and a
    /// short reply script.
    pub fn states(kind: RuntimeKind) -> Vec<MachineState> {
        let script: VecDeque<Value> = [5, 6, 7].into_iter().map(Value::Int).collect();
        match kind {
            RuntimeKind::Session => vec![
                MachineState { script: script.clone(), ..Default::default() },
                MachineState { script: script.iter().take(1).cloned().collect(), ..Default::default() },
            ],
            _ => {
                let mut out = Vec::new();
                for a in 0..3 {
                    for b in [0, 2] {
                        out.push(MachineState { store: vec![("r1".into(), a), ("r2".into(), b)], ..Default::default() });
                    }
                }
                out
            }
        }
    }

    fn bind_t(m: Comp, k: Value) -> Comp {
        Comp::Bind(Rc::new(m), k)
    }

    /// Computations of the given erased shape producing an integer.
    pub fn computations(kind: RuntimeKind, rep: Rep) -> Vec<Value> {
        if rep == Rep::Id {
            return vec![Value::Int(0), Value::Int(3)];
        }
        let pure = Value::comp(Comp::Pure(Value::Int(1)));
        match kind {
            RuntimeKind::Session => vec![
                pure,
                Value::comp(Comp::Op(Op::Recv)),
                Value::comp(bind_t(Comp::Op(Op::Send(Value::Int(9))), Value::native(|_, _| Ok(Value::Int(2))))),
            ],
            RuntimeKind::Identity => vec![pure],
            _ => vec![
                pure,
                Value::comp(Comp::Op(Op::Read("r1".into()))),
                Value::comp(bind_t(Comp::Op(Op::Write("r2".into(), 4)), Value::native(|_, _| Ok(Value::Int(2))))),
            ],
        }
    }

    /// Integer view of a sample result; operations returning `()` count as 0.
    fn num(v: &Value) -> Res<i64> {
        match v {
            Value::Unit => Ok(0),
            v => int(v),
        }
    }

    /// Functions from sample results into the given erased shape.
    pub fn continuations(kind: RuntimeKind, rep: Rep) -> Vec<Value> {
        let mut out = vec![Value::native(move |_, x| {
            let r = Value::Int(num(&x)? + 1);
            Ok(if rep == Rep::T { Value::comp(Comp::Pure(r)) } else { r })
        })];
        if rep == Rep::Id {
            out.push(Value::native(|_, x| Ok(Value::Int(num(&x)? * 2))));
            return out;
        }
        match kind {
            RuntimeKind::Session => {
                out.push(Value::native(|_, x| Ok(Value::comp(Comp::Op(Op::Send(Value::Int(num(&x)?)))))));
                out.push(Value::native(|_, _| Ok(Value::comp(Comp::Op(Op::Recv)))));
            }
            RuntimeKind::Identity => {}
            _ => {
                out.push(Value::native(|_, x| Ok(Value::comp(Comp::Op(Op::Write("r1".into(), num(&x)?))))));
                out.push(Value::native(|_, _| Ok(Value::comp(Comp::Op(Op::Read("r1".into()))))));
                out.push(Value::native(|_, x| {
                    let x = num(&x)?;
                    Ok(Value::comp(bind_t(Comp::Op(Op::Read("r2".into())), Value::native(move |_, y| Ok(Value::Int(num(&y)? + x))))))
                }));
            }
        }
        out
    }

    fn lift(v: Value, cont: bool) -> Value {
        if cont {
            Value::native(move |i, x| Ok(Value::comp(Comp::Pure(i.apply(v.clone(), x)?))))
        } else {
            Value::comp(Comp::Pure(v))
        }
    }

    /// Inputs for the same position under two erasures. When they differ
    /// the pure samples are used, lifted on the `T` side.
    pub fn paired(kind: RuntimeKind, a: Rep, b: Rep, cont: bool) -> Vec<(Value, Value)> {
        let get = |r| if cont { continuations(kind, r) } else { computations(kind, r) };
        if a == b {
            return get(a).into_iter().map(|v| (v.clone(), v)).collect();
        }
        get(Rep::Id)
            .into_iter()
            .map(|v| {
                let l = if a == Rep::T { lift(v.clone(), cont) } else { v.clone() };
                let r = if b == Rep::T { lift(v.clone(), cont) } else { v };
                (l, r)
            })
            .collect()
    }

    /// Runs `v` from `state`, returning what an observer can see.
    pub fn observe(interp: &Interp, kind: RuntimeKind, v: Res<Value>, state: &MachineState) -> Result<Outcome, String> {
        let v = v.map_err(|e| e.to_string())?;
        let mut m = Machine::new(kind, state.clone(), interp);
        let value = m.run(v).map_err(|e| e.to_string())?;
        Ok(Outcome { value, state: m.state })
    }
}

/// Shapes of the two binds a flow edge composes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeShapes {
    pub inner: Shape,
    pub outer: Shape,
}

/// Observations of a flow edge's composite under two choices of shapes,
/// over shared sample inputs and starting states.
pub fn composite_outcomes(
    interp: &Interp,
    kind: RuntimeKind,
    c: Composite,
    a: EdgeShapes,
    b: EdgeShapes,
) -> Vec<(Result<Outcome, String>, Result<Outcome, String>)> {
    use samples::paired;
    let left = matches!(c, Composite::Left { .. });
    let reps = |s: EdgeShapes| if left { [s.inner.0, s.inner.1, s.outer.1] } else { [s.outer.0, s.inner.0, s.inner.1] };
    let (ra, rb) = (reps(a), reps(b));
    let (xr, yr, zr) = ((ra[0], rb[0]), (ra[1], rb[1]), (ra[2], rb[2]));
    let xs = paired(kind, xr.0, xr.1, false);
    let ys = paired(kind, yr.0, yr.1, true);
    let zs = paired(kind, zr.0, zr.1, true);
    let run = |s: EdgeShapes, x: &Value, y: &Value, z: &Value| -> Res<Value> {
        let (inner, outer) = (Dict::Shape(s.inner), Dict::Shape(s.outer));
        if left {
            let m = interp.bind(inner, x.clone(), y.clone())?;
            interp.bind(outer, m, z.clone())
        } else {
            let (y, z) = (y.clone(), z.clone());
            let k = Value::native(move |i, v| i.bind(inner, i.apply(y.clone(), v)?, z.clone()));
            interp.bind(outer, x.clone(), k)
        }
    };
    let mut out = Vec::new();
    for st in samples::states(kind) {
        for x in &xs {
            for y in &ys {
                for z in &zs {
                    let oa = samples::observe(interp, kind, run(a, &x.0, &y.0, &z.0), &st);
                    let ob = samples::observe(interp, kind, run(b, &x.1, &y.1, &z.1), &st);
                    out.push((oa, ob));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;

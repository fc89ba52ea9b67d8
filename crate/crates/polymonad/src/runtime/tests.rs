use super::*;
use crate::syntax::Program;
use crate::testutil::{corpus_sig, ist_sig};

fn t() -> Shape {
    Shape(Rep::T, Rep::T, Rep::T)
}

fn state(cells: &[(&str, i64)]) -> MachineState {
    MachineState { store: cells.iter().map(|(n, v)| (n.to_string(), *v)).collect(), ..Default::default() }
}

fn add_one() -> Value {
    Value::native(|_, x| Ok(Value::Int(int(&x)? + 1)))
}

#[test]
fn erasure() {
    let sig = ist_sig();
    let c = BindConstraint::new(MonadType::Bot, crate::testutil::ist("H", "L"), crate::testutil::ist("H", "L"));
    assert_eq!(Shape::of(&c), Shape(Rep::Id, Rep::T, Rep::T));
    assert_eq!(initial_store(&sig).len(), 4);
}

#[test]
fn bind_by_shape() {
    let interp = Interp::new(&ist_sig(), None);
    let id = Dict::Shape(Shape(Rep::Id, Rep::Id, Rep::Id));
    assert_eq!(interp.bind(id, Value::Int(2), add_one()).unwrap(), Value::Int(3));
    let lift = Dict::Shape(Shape(Rep::Id, Rep::Id, Rep::T));
    assert_eq!(interp.bind(lift, Value::Int(2), add_one()).unwrap(), Value::comp(Comp::Pure(Value::Int(3))));
    let read = Value::comp(Comp::Op(Op::Read("r1".into())));
    let v = interp.bind(Dict::Shape(t()), read.clone(), add_one()).unwrap();
    let mut m = Machine::new(RuntimeKind::State, state(&[("r1", 41)]), &interp);
    assert_eq!(m.run(v).unwrap(), Value::Int(42));
    // A computation may not flow into a pure result.
    assert!(interp.bind(Dict::Shape(Shape(Rep::T, Rep::Id, Rep::Id)), read, add_one()).is_err());
    // The identity bind works at either shape.
    assert_eq!(interp.bind(Dict::Identity, Value::Int(1), add_one()).unwrap(), Value::Int(2));
}

#[test]
fn state_read_write() {
    let sig = ist_sig();
    let interp = Interp::new(&sig, None);
    let prog = Target::App(
        Box::new(Target::App(Box::new(Target::Const("write".into())), Box::new(Target::Const("savings".into())))),
        Box::new(Target::Int(7)),
    );
    let v = interp.eval(&prog, &Env::default()).unwrap();
    let mut m = Machine::new(RuntimeKind::State, MachineState { store: initial_store(&sig), ..Default::default() }, &interp);
    assert_eq!(m.run(v).unwrap(), Value::Unit);
    assert_eq!(m.state.store[0], ("savings".to_string(), 7));
}

#[test]
fn writer_traces_operations() {
    let sig = corpus_sig("ce.sig");
    let interp = Interp::new(&sig, None);
    let c = Comp::Bind(Rc::new(Comp::Op(Op::Read("r1".into()))), Value::native(|_, x| Ok(Value::comp(Comp::Op(Op::Write("r2".into(), int(&x)?))))));
    let mut m = Machine::new(RuntimeKind::Writer, state(&[("r1", 3), ("r2", 0)]), &interp);
    m.run(Value::comp(c)).unwrap();
    assert_eq!(m.state.trace, vec!["read r1", "write r2 3"]);
}

#[test]
fn session_script() {
    let sig = corpus_sig("session.sig");
    let interp = Interp::new(&sig, None);
    let c = Comp::Bind(Rc::new(Comp::Op(Op::Send(Value::Int(7)))), Value::native(|_, _| Ok(Value::comp(Comp::Op(Op::Recv)))));
    let script = MachineState { script: [Value::Int(41)].into_iter().collect(), ..Default::default() };
    let mut m = Machine::new(RuntimeKind::Session, script, &interp);
    assert_eq!(m.run(Value::comp(c.clone())).unwrap(), Value::Int(41));
    assert_eq!(m.state.trace, vec!["Send 7", "Recv 41"]);
    let mut m = Machine::new(RuntimeKind::Session, MachineState::default(), &interp);
    assert_eq!(m.run(Value::comp(c)), Err(RuntimeError::RecvEmpty));
}

#[test]
fn reset_runtime_breaks_associativity() {
    let sig = ist_sig();
    let interp = Interp::new(&sig, None);
    let m = Value::comp(Comp::Pure(Value::Int(5)));
    let f = Value::native(|_, x| Ok(Value::comp(Comp::Op(Op::Write("r1".into(), int(&x)?)))));
    let g = Value::native(|_, _| Ok(Value::comp(Comp::Op(Op::Read("r1".into())))));
    let d = Dict::Shape(t());
    let left = {
        let inner = interp.bind(d, m.clone(), f.clone()).unwrap();
        interp.bind(d, inner, g.clone()).unwrap()
    };
    let (f2, g2) = (f.clone(), g.clone());
    let right = interp
        .bind(d, m, Value::native(move |i, x| i.bind(d, i.apply(f2.clone(), x)?, g2.clone())))
        .unwrap();
    let run = |kind, v: &Value| {
        let mut mach = Machine::new(kind, state(&[("r1", 0)]), &interp);
        mach.run(v.clone()).unwrap()
    };
    assert_eq!(run(RuntimeKind::State, &left), run(RuntimeKind::State, &right));
    assert_ne!(run(RuntimeKind::StateReset, &left), run(RuntimeKind::StateReset, &right));
}

#[test]
fn fuel_stops_divergence() {
    let prog = Program::parse("letrec loop = lam n. loop n\nloop 1").unwrap();
    let sig = Signature::default();
    let inf = crate::infer::infer_program(&sig, &prog, Default::default()).unwrap();
    let out = run_program(&sig, &inf.target, &resolve_evidence(&inf.bag), MachineState::default(), Some(10_000));
    assert_eq!(out.unwrap_err(), RuntimeError::OutOfFuel);
}

#[test]
fn pure_program() {
    let prog = Program::parse("let twice = lam f. lam x. f (f x)\ntwice (lam y. y * 3) 2").unwrap();
    let sig = Signature::default();
    let inf = crate::infer::infer_program(&sig, &prog, Default::default()).unwrap();
    let out = run_program(&sig, &inf.target, &resolve_evidence(&inf.bag), MachineState::default(), None).unwrap();
    assert_eq!(out.value, Value::Int(18));
}

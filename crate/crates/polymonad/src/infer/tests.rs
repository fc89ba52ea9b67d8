use super::*;
use crate::syntax::{parse_scheme, print_scheme, Program};
use crate::testutil::{corpus_sig, ist, ist_sig};

fn corpus_program(name: &str) -> Program {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    Program::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn scheme_of(sig: &Signature, src: &str, name: &str, opts: Options) -> Scheme {
    let prog = Program::parse(src).unwrap();
    infer_program(sig, &prog, opts).unwrap().scheme(name).unwrap().clone()
}

fn expect(sig: &Signature, text: &str) -> Scheme {
    parse_scheme(text, &sig.type_context()).unwrap()
}

const RAW: Options = Options { simplify: false, hide: false, check_ambiguity: true };

#[test]
fn read_instantiates_freshly() {
    let sig = ist_sig();
    let mut inf = Infer::new(&sig, Options::default());
    let (t, e, bag) = inf.infer_value(&Term::Const("read".into())).unwrap();
    assert!(bag.is_empty());
    assert_eq!(e, Target::Const("read".into()));
    let mut n = Namer::default();
    assert_eq!(print_vtype(&t, &mut n), "intref a -> IST H a int");
}

#[test]
fn identity_is_pure() {
    let s = scheme_of(&Signature::default(), "let id = lam x. x", "id", Options::default());
    assert_eq!(print_scheme(&s), "forall a. a -> a");
}

#[test]
fn application_principal_type() {
    let sig = Signature::default();
    let s = scheme_of(&sig, "let app = lam f. lam x. f x", "app", RAW);
    let want = expect(&sig, "forall a b n1 n2 n3. (Bot, n1) |> n2, (Bot, n2) |> n3 => (a -> n1 b) -> a -> n3 b");
    assert!(s.alpha_eq(&want), "{}", print_scheme(&s));
    assert_eq!(open_vars(&s).len(), 1);
    // Simplification collapses the intermediate variable.
    let simp = scheme_of(&sig, "let app = lam f. lam x. f x", "app", Options::default());
    let want = expect(&sig, "forall a b n1 n3. (Bot, n1) |> n3 => (a -> n1 b) -> a -> n3 b");
    assert!(simp.alpha_eq(&want), "{}", print_scheme(&simp));
}

#[test]
fn add_interest_simplified() {
    let sig = ist_sig();
    let inf = infer_program(&sig, &corpus_program("add_interest.pm"), Options::default()).unwrap();
    let s = inf.scheme("add_interest").unwrap();
    let want = expect(
        &sig,
        "forall n6 n27 a1 a2. (Bot, Bot) |> n6, (IST H a1, IST a1 L) |> n6, (IST H a2, n6) |> n27 => intref a1 -> intref a2 -> n27 ()",
    );
    assert!(s.alpha_eq(&want), "{}", print_scheme(s));
}

#[test]
fn add_interest_evidence_abstracts_three_binds() {
    let sig = ist_sig();
    let inf = infer_program(&sig, &corpus_program("add_interest.pm"), Options::default()).unwrap();
    let Target::Let(_, bound, _) = &inf.target else { panic!() };
    let Target::EvAbs(ids, body) = &**bound else { panic!("{bound:?}") };
    assert_eq!(ids.len(), 3);
    // Every other constraint gets local evidence.
    let Target::EvLet(defs, inner) = &**body else { panic!() };
    assert!(!defs.is_empty());
    assert!(matches!(**inner, Target::Lam(..)));
    assert!(bound.free_evidence().is_empty());
}

#[test]
fn add_interest_raw_bag() {
    let sig = ist_sig();
    let s = scheme_of(&sig, &std::fs::read_to_string(format!("{}/corpus/add_interest.pm", env!("CARGO_MANIFEST_DIR"))).unwrap(), "add_interest", RAW);
    // Binary operators are curried applications, so `>` and `+` each
    // contribute two applications.
    assert_eq!(s.constraints.len(), 22);
}

#[test]
fn go_simplified() {
    let sig = corpus_sig("session.sig");
    let inf = infer_program(&sig, &corpus_program("go.pm"), Options::default()).unwrap();
    let want = expect(&sig, "forall a b q n. (A (Send a b) b, A (Recv int q) q) |> n => a -> n int");
    let s = inf.scheme("go").unwrap();
    assert!(s.alpha_eq(&want), "{}", print_scheme(s));
    assert_eq!(inf.ty, ValueType::int());
}

#[test]
fn unify_examples() {
    let sig = corpus_sig("session.sig");
    let mut inf = Infer::new(&sig, Options::default());
    let a = inf.fresh_value();
    inf.unify(&a, &ValueType::int()).unwrap();
    assert_eq!(inf.resolve(&a), ValueType::int());

    let (p1, l2) = (inf.fresh_value(), inf.fresh_value());
    let m1 = MonadType::ground("IST", vec![p1.clone(), ValueType::con("H")]);
    let m2 = MonadType::ground("IST", vec![ValueType::con("H"), l2.clone()]);
    inf.unify_monad(&m1, &m2).unwrap();
    assert_eq!((inf.resolve(&p1), inf.resolve(&l2)), (ValueType::con("H"), ValueType::con("H")));

    let (x, b, q) = (inf.fresh_value(), inf.fresh_value(), inf.fresh_value());
    let send = |a: ValueType, s: ValueType| ValueType::Con("Send".into(), vec![a, s]);
    let done = ValueType::con("Done");
    let lhs = MonadType::ground("A", vec![send(x.clone(), b.clone()), b.clone()]);
    let rhs = MonadType::ground("A", vec![send(ValueType::int(), done.clone()), q.clone()]);
    inf.unify_monad(&lhs, &rhs).unwrap();
    assert_eq!(inf.resolve(&x), ValueType::int());
    assert_eq!(inf.resolve(&b), done);
    assert_eq!(inf.resolve(&q), done);

    let c = inf.fresh_value();
    let arrow = ValueType::pure_arrow(c.clone(), ValueType::int());
    assert!(matches!(inf.unify(&c, &arrow), Err(TypeError::Occurs(..))));
    assert!(matches!(inf.unify(&ValueType::int(), &ValueType::bool()), Err(TypeError::Mismatch(..))));
    assert!(inf.unify_monad(&MonadType::Bot, &m1).is_err());
}

#[test]
fn entails_examples() {
    let sig = ist_sig();
    let p = BindConstraint::morphism(MonadType::Var(1), MonadType::Var(2));
    assert!(entails(std::slice::from_ref(&p), &sig, std::slice::from_ref(&p)));
    let bot = BindConstraint::new(MonadType::Bot, MonadType::Bot, MonadType::Bot);
    assert!(entails(&[], &sig, &[bot]));
    assert!(!entails(&[], &sig, &[BindConstraint::new(ist("H", "H"), ist("L", "L"), ist("L", "L"))]));
}

#[test]
fn unbound_identifier() {
    let prog = Program::parse("nope 1").unwrap();
    let err = infer_program(&Signature::default(), &prog, Options::default()).unwrap_err();
    assert_eq!(err, TypeError::Unbound("nope".into()));
}

#[test]
fn letrec_is_monomorphic_inside() {
    let sig = Signature::default();
    let s = scheme_of(&sig, "letrec loop = lam n. if n > 0 then loop (n - 1) else n", "loop", Options::default());
    assert!(s.body.free_vars().len() <= 1, "{}", print_scheme(&s));
    let prog = Program::parse("letrec loop = lam n. if n > 0 then loop (n - 1) else n\nloop 3").unwrap();
    let inf = infer_program(&sig, &prog, Options::default()).unwrap();
    assert_eq!(inf.ty, ValueType::int());
}

#[test]
fn flow_violation_is_reported_at_top_level() {
    let sig = ist_sig();
    let inf = infer_program(&sig, &corpus_program("flow_violation.pm"), Options::default()).unwrap();
    assert!(!inf.bag.is_empty());
}

#[test]
fn deterministic() {
    let sig = ist_sig();
    let a = infer_program(&sig, &corpus_program("add_interest_main.pm"), Options::default()).unwrap();
    let b = infer_program(&sig, &corpus_program("add_interest_main.pm"), Options::default()).unwrap();
    assert_eq!(a.bag, b.bag);
    assert_eq!(a.target, b.target);
}

#[test]
fn branch_types_must_agree() {
    let prog = Program::parse("if true then 1 else ()").unwrap();
    assert!(matches!(infer_program(&Signature::default(), &prog, Options::default()), Err(TypeError::Mismatch(..))));
}

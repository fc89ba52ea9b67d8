use super::*;
use crate::graph::build_graph;
use crate::infer::{infer_program, Options};
use crate::signature::RuntimeKind;
use crate::syntax::Program;
use crate::testutil::{corpus_sig, ist, ist_sig};
use proptest::prelude::*;

fn v(i: Tv) -> MonadType {
    MonadType::Var(i)
}

fn main_bag(sig: &Signature, file: &str) -> Vec<BindConstraint> {
    let src = std::fs::read_to_string(format!("{}/corpus/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let inf = infer_program(sig, &Program::parse(&src).unwrap(), Options::default()).unwrap();
    inf.bag.into_iter().map(|(_, c)| c).collect()
}

/// Every assignment of the bag's variables, filtered by derivability.
fn brute_force(sig: &Signature, bag: &[BindConstraint]) -> Vec<Subst> {
    let u = sig.universe();
    let monads = crate::simplify::monad_vars_in_order(bag);
    let idx = index_candidates(sig, bag, DEFAULT_DEPTH);
    let mut out = Vec::new();
    u.for_each_assignment(&[], &idx, &mut |outer| {
        u.for_each_assignment(&monads, &[], &mut |inner| {
            let mut theta = outer.clone();
            theta.monads.extend(inner.monads.clone());
            if theta.bag(bag).iter().all(|c| entail_ground(sig, c).is_some()) {
                out.push(theta);
            }
            true
        });
        true
    });
    out
}

#[test]
fn add_interest_call_solves() {
    let sig = ist_sig();
    let bag = main_bag(&sig, "add_interest_main.pm");
    let sol = solve(&sig, &bag, &Subst::default(), SolveOptions::default()).unwrap();
    assert_eq!(check_solution(&build_graph(&bag), &sig, &sol), Ok(()));
}

#[test]
fn flow_violation_names_the_lattice_atom() {
    let sig = ist_sig();
    let bag = main_bag(&sig, "flow_violation.pm");
    let err = solve(&sig, &bag, &Subst::default(), SolveOptions::default()).unwrap_err();
    let SolveError::Unsatisfiable { reason, .. } = &err else { panic!("{err}") };
    assert!(reason.as_deref().is_some_and(|r| r.contains("requires H <= L")), "{err}");
}

#[test]
fn session_program_solves() {
    let sig = corpus_sig("session.sig");
    let bag = main_bag(&sig, "go.pm");
    let sol = solve(&sig, &bag, &Subst::default(), SolveOptions::default()).unwrap();
    assert!(sol.apply(&bag).iter().all(|c| c.is_ground()));
}

#[test]
fn protocol_patterns_match_brute_force() {
    let sig = corpus_sig("session.sig");
    let st = |c: &str, v: Tv| ValueType::Con(c.into(), vec![ValueType::int(), ValueType::Var(v)]);
    let a = |p: ValueType, q: ValueType| MonadType::ground("A", vec![p, q]);
    let bag = vec![
        BindConstraint::new(a(st("Send", 10), ValueType::Var(10)), v(1), v(2)),
        BindConstraint::new(MonadType::Bot, a(st("Recv", 11), ValueType::Var(11)), v(1)),
    ];
    let got: Vec<Subst> =
        enumerate_solutions(&sig, &bag, &Subst::default(), DEFAULT_DEPTH, usize::MAX).into_iter().map(|s| s.subst).collect();
    assert!(!got.is_empty());
    assert_eq!(got, brute_force(&sig, &bag));
}

#[test]
fn canonical_first_solution() {
    let sig = ist_sig();
    let bag = vec![BindConstraint::new(MonadType::Bot, v(1), ist("H", "L"))];
    let all = enumerate_solutions(&sig, &bag, &Subst::default(), DEFAULT_DEPTH, usize::MAX);
    let first = solve(&sig, &bag, &Subst::default(), SolveOptions::default()).unwrap();
    assert_eq!(all[0], first);
    assert_eq!(all.len(), brute_force(&sig, &bag).len());
}

#[test]
fn cycles() {
    let c = |a, b, r| BindConstraint::new(v(a), v(b), v(r));
    assert!(is_cyclic(&[c(1, 2, 3), c(3, 4, 1)]));
    assert!(!is_cyclic(&[c(1, 2, 3), c(3, 4, 5)]));
    // A satisfiable cycle is solved like any other bag.
    let sig = ist_sig();
    assert!(solve(&sig, &[c(1, 2, 3), c(3, 4, 1)], &Subst::default(), SolveOptions::default()).is_ok());
    // Identity morphisms do not make a bag cyclic.
    assert!(!is_cyclic(&[BindConstraint::new(MonadType::Bot, v(1), v(1))]));
    let bad = vec![
        c(1, 2, 3),
        BindConstraint::new(v(3), MonadType::Bot, v(1)),
        BindConstraint::new(ist("H", "H"), ist("L", "L"), v(1)),
    ];
    // Over a finite theory the search is complete, so this is a plain
    // unsatisfiable bag.
    assert!(matches!(solve(&sig, &bad, &Subst::default(), SolveOptions::default()), Err(SolveError::Unsatisfiable { .. })));
    // Protocol states are bounded, so a cyclic failure is inconclusive.
    let sig = corpus_sig("session.sig");
    let ctx = sig.type_context();
    let a = |t: &str| crate::syntax::parse_scheme(&format!("forall n. (Bot, {t}) |> n => int"), &ctx).unwrap().constraints[0].middle.clone();
    let bad = vec![
        c(1, 2, 3),
        BindConstraint::new(v(3), MonadType::Bot, v(1)),
        BindConstraint::new(a("A Done (Send int Done)"), a("A Done Done"), v(1)),
    ];
    assert_eq!(solve(&sig, &bad, &Subst::default(), SolveOptions::default()), Err(SolveError::Cyclic));
}

#[test]
fn check_solution_rejects_bad_assignments() {
    let sig = ist_sig();
    let bag = vec![BindConstraint::new(MonadType::Bot, v(1), v(2))];
    let g = build_graph(&bag);
    let mut s = Subst::default();
    s.monads.insert(1, ist("L", "H"));
    assert!(check_solution(&g, &sig, &Solution { subst: s.clone(), depth: DEFAULT_DEPTH }).is_err());
    s.monads.insert(2, ist("L", "H"));
    assert!(check_solution(&g, &sig, &Solution { subst: s.clone(), depth: DEFAULT_DEPTH }).is_ok());
    s.monads.insert(2, ist("H", "L"));
    assert!(check_solution(&g, &sig, &Solution { subst: s, depth: DEFAULT_DEPTH }).is_err());
}

#[test]
fn equivalence_depends_on_the_runtime() {
    // nu1 may be Bot or any IST; the choice is unobservable for a lawful
    // state monad but not for one whose bind resets the store.
    let bag = vec![
        BindConstraint::new(MonadType::Bot, MonadType::Bot, v(1)),
        BindConstraint::new(v(1), MonadType::Bot, v(2)),
    ];
    let g = build_graph(&bag);
    let protected: BTreeSet<Tv> = [2].into_iter().collect();
    let mut fixed = Subst::default();
    fixed.monads.insert(2, ist("H", "L"));
    let sig = ist_sig();
    let sols = enumerate_solutions(&sig, &bag, &fixed, DEFAULT_DEPTH, usize::MAX);
    let bot = sols.iter().find(|s| s.subst.monad(&v(1)) == MonadType::Bot).unwrap();
    let other = sols.iter().find(|s| s.subst.monad(&v(1)) != MonadType::Bot).unwrap();
    assert!(solutions_equivalent(&g, &sig, bot, other, &protected));
    let reset = sig.with_runtime(RuntimeKind::StateReset);
    assert!(!solutions_equivalent(&g, &reset, bot, other, &protected));
    // Disagreeing on a protected variable is never equivalent.
    let mut moved = other.clone();
    moved.subst.monads.insert(2, ist("H", "H"));
    assert!(!solutions_equivalent(&g, &sig, other, &moved, &protected));
}

fn arb_monad() -> impl Strategy<Value = MonadType> {
    prop_oneof![
        Just(MonadType::Bot),
        (1u32..4).prop_map(|i| MonadType::Var(i as Tv)),
        (0..2usize, 0..2usize).prop_map(|(p, l)| ist(["L", "H"][p], ["L", "H"][l])),
        // Label variables make constructor patterns.
        (0..3usize, 0..3usize).prop_map(|(p, l)| {
            let label = |i: usize| match i {
                0 => ValueType::con("L"),
                1 => ValueType::Var(10),
                _ => ValueType::Var(11),
            };
            MonadType::ground("IST", vec![label(p), label(l)])
        }),
    ]
}

fn arb_bag() -> impl Strategy<Value = Vec<BindConstraint>> {
    prop::collection::vec((arb_monad(), arb_monad(), arb_monad()).prop_map(|(a, b, c)| BindConstraint::new(a, b, c)), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_brute_force(bag in arb_bag()) {
        let sig = ist_sig();
        let got: Vec<Subst> = enumerate_solutions(&sig, &bag, &Subst::default(), DEFAULT_DEPTH, usize::MAX)
            .into_iter().map(|s| s.subst).collect();
        prop_assert_eq!(got, brute_force(&sig, &bag));
    }

    #[test]
    fn solutions_satisfy_the_graph(bag in arb_bag()) {
        let sig = ist_sig();
        if let Ok(sol) = solve(&sig, &bag, &Subst::default(), SolveOptions::default()) {
            prop_assert_eq!(check_solution(&build_graph(&bag), &sig, &sol), Ok(()));
        } else {
            prop_assert!(brute_force(&sig, &bag).is_empty());
        }
    }
}


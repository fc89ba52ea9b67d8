use super::*;
use crate::syntax::{parse_type, BindConstraint, MonadType, ValueType};

fn corpus(name: &str) -> Signature {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    load_signature(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ist(p: &str, l: &str) -> MonadType {
    MonadType::ground("IST", vec![ValueType::con(p), ValueType::con(l)])
}

fn c(a: MonadType, b: MonadType, r: MonadType) -> BindConstraint {
    BindConstraint::new(a, b, r)
}

#[test]
fn loads_ist() {
    let s = corpus("ist.sig");
    assert_eq!(s.constructors.len(), 1);
    let names: Vec<&str> = s.specs.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["bId", "unitIST", "mapIST", "appIST", "bIST"]);
    assert_eq!(s.universe().len(), 5);
}

#[test]
fn loads_session() {
    let s = corpus("session.sig");
    let names: Vec<&str> = s.specs.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["bId", "mapA", "appA", "unitA", "bindA"]);
    assert_eq!(s.universe().len(), 50);
}

#[test]
fn loads_ce() {
    assert_eq!(corpus("ce.sig").universe().len(), 65);
}

#[test]
fn duplicate_constructor_rejected() {
    let e = load_signature("constructor IST/2\nconstructor IST/2\n").unwrap_err();
    assert!(matches!(e, SigError::Duplicate(_)), "{e}");
}

#[test]
fn non_lattice_rejected() {
    assert!(load_signature("theory lattice {A < C, B < C}\n").is_err());
}

#[test]
fn unknown_constructor_rejected() {
    assert!(load_signature("bind b : (Bot, M) |> Bot\n").is_err());
}

#[test]
fn ill_sorted_index_rejected() {
    let e = load_signature("theory lattice {L < H}\nconstructor IST/2\nbind b : Bot |> IST L M\n").unwrap_err();
    assert!(e.to_string().contains("ill-sorted"), "{e}");
}

#[test]
fn entail_bist_ground() {
    let s = corpus("ist.sig");
    let (name, theta) = entail(&s, &c(ist("H", "L"), ist("H", "H"), ist("H", "H"))).unwrap();
    assert_eq!(name, "bIST");
    assert!(theta.is_empty());
    assert_eq!(entail(&s, &c(MonadType::Bot, MonadType::Bot, MonadType::Bot)).unwrap().0, "bId");
}

#[test]
fn flow_into_low_has_no_instance() {
    let s = corpus("ist.sig");
    let cx = s.type_context();
    let _ = parse_type("int", &cx).unwrap();
    let pi = c(ist("H", "H"), MonadType::ground("IST", vec![ValueType::con("L"), ValueType::Var(3)]), MonadType::Var(27));
    assert_eq!(entail(&s, &pi), None);
    let fail = explain_failure(&s, &c(ist("H", "H"), ist("L", "L"), ist("L", "L"))).unwrap();
    assert_eq!(fail.0, "bIST");
}

#[test]
fn entail_solves_variables_canonically() {
    let s = corpus("ist.sig");
    let (name, theta) = entail(&s, &c(ist("H", "L"), ist("H", "H"), MonadType::Var(0))).unwrap();
    assert_eq!(name, "bIST");
    assert_eq!(theta.monads[&0], ist("L", "H"));
}

/// Direct reading of bIST's five premises over the two-point lattice.
fn bist_oracle(t: [bool; 6]) -> bool {
    let le = |a: bool, b: bool| !a || b;
    let [p1, l1, p2, l2, p3, l3] = t;
    le(l1, p2) && le(l1, l3) && le(l2, l3) && le(p3, p1) && le(p3, p2)
}

#[test]
fn ground_instances_match_bist_oracle() {
    let s = corpus("ist.sig");
    let inst = ground_instances(&s, 0);
    let name = |b: bool| if b { "H" } else { "L" };
    for bits in 0..64u32 {
        let t: [bool; 6] = std::array::from_fn(|i| bits >> i & 1 == 1);
        let triple = c(ist(name(t[0]), name(t[1])), ist(name(t[2]), name(t[3])), ist(name(t[4]), name(t[5])));
        let present = inst.iter().any(|g| g.triple == triple);
        assert_eq!(present, bist_oracle(t), "{triple:?}");
        assert_eq!(entail(&s, &triple).is_some(), bist_oracle(t));
    }
}

#[test]
fn unit_for_session_at_depth_zero() {
    let s = corpus("session.sig");
    let inst = ground_instances(&s, 0);
    let done = MonadType::ground("A", vec![ValueType::con("Done"), ValueType::con("Done")]);
    assert!(inst.iter().any(|g| g.triple == c(MonadType::Bot, MonadType::Bot, done.clone()) && g.spec == "unitA"));
    assert_eq!(inst.len(), 5);
}

#[test]
fn principal_joins() {
    let s = corpus("ist.sig");
    assert_eq!(principal_join(&s, &[(ist("H", "H"), ist("H", "L"))], 0), Some(ist("H", "H")));
    assert_eq!(principal_join(&s, &[(MonadType::Bot, MonadType::Bot)], 0), Some(MonadType::Bot));
    let bare = load_signature("constructor M/0\nconstructor N/0\n").unwrap();
    let m = MonadType::ground("M", vec![]);
    assert_eq!(principal_join(&bare, &[(m.clone(), m)], 0), None);
}

#[test]
fn principal_join_dominates_brute_force() {
    let s = corpus("ist.sig");
    let u = s.universe();
    for i in 0..u.len() {
        for j in 0..u.len() {
            let cands: Vec<usize> = (0..u.len()).filter(|&k| u.has(i, j, k)).collect();
            match u.principal_join(&[(i, j)]) {
                Some(k) => {
                    assert!(cands.contains(&k));
                    assert!(cands.iter().all(|&d| u.has(k, 0, d)));
                }
                None => assert!(cands.iter().all(|&k| !cands.iter().all(|&d| u.has(k, 0, d)))),
            }
        }
    }
}

#[test]
fn merge_combines_prims() {
    let a = corpus("ist.sig");
    let b = load_signature("prim extra : intref L\n").unwrap();
    let m = a.merge(b).unwrap();
    assert!(m.prim("extra").is_some());
    assert!(corpus("ist.sig").merge(corpus("ist.sig")).is_err());
}

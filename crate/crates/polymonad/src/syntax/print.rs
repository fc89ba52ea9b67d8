use std::collections::BTreeMap;
use std::fmt::Write;

use super::*;

/// Assigns display names to type variables in first-use order:
/// value variables `a, b, ..`, monadic variables `n1, n2, ..`.
#[derive(Debug, Default, Clone)]
pub struct Namer {
    names: BTreeMap<Tv, String>,
    order: Vec<Tv>,
    next_val: usize,
    next_mon: usize,
}

impl Namer {
    pub fn name(&mut self, v: Tv, monadic: bool) -> String {
        if let Some(n) = self.names.get(&v) {
            return n.clone();
        }
        let n = if monadic {
            self.next_mon += 1;
            format!("n{}", self.next_mon)
        } else {
            let k = self.next_val;
            self.next_val += 1;
            let letter = (b'a' + (k % 26) as u8) as char;
            if k < 26 {
                letter.to_string()
            } else {
                format!("{letter}{}", k / 26)
            }
        };
        self.names.insert(v, n.clone());
        self.order.push(v);
        n
    }

    pub fn order(&self) -> &[Tv] {
        &self.order
    }

    pub fn lookup(&self, v: Tv) -> Option<&str> {
        self.names.get(&v).map(|s| s.as_str())
    }
}

pub fn print_type(t: &ValueType) -> String {
    let mut n = Namer::default();
    vtype(t, &mut n)
}

/// Like [`print_type`] but sharing variable names with other output.
pub fn print_vtype(t: &ValueType, n: &mut Namer) -> String {
    vtype(t, n)
}

pub fn print_monad(m: &MonadType, n: &mut Namer) -> String {
    monad(m, n)
}

pub fn print_constraint(c: &BindConstraint, n: &mut Namer) -> String {
    if c.middle == MonadType::Bot && c.left != MonadType::Bot {
        format!("{} |> {}", monad(&c.left, n), monad(&c.result, n))
    } else {
        format!("({}, {}) |> {}", monad(&c.left, n), monad(&c.middle, n), monad(&c.result, n))
    }
}

/// Renders `forall vs. P => t`, naming bound variables canonically.
pub fn print_scheme(s: &Scheme) -> String {
    let mut n = Namer::default();
    let bag: Vec<String> = s.constraints.iter().map(|c| print_constraint(c, &mut n)).collect();
    let body = vtype(&s.body, &mut n);
    let bound = s.bound();
    let mut vars: Vec<String> = n.order().iter().filter(|v| bound.contains(v)).map(|v| n.lookup(*v).unwrap().to_string()).collect();
    // Bound variables that never occur still get listed.
    for v in s.value_vars.iter().chain(&s.monad_vars) {
        if n.lookup(*v).is_none() {
            vars.push(n.name(*v, s.monad_vars.contains(v)));
        }
    }
    let mut out = String::new();
    if !vars.is_empty() {
        let _ = write!(out, "forall {}. ", vars.join(" "));
    }
    if !bag.is_empty() {
        let _ = write!(out, "{} => ", bag.join(", "));
    }
    out.push_str(&body);
    out
}

fn monad(m: &MonadType, n: &mut Namer) -> String {
    match m {
        MonadType::Bot => "Bot".into(),
        MonadType::Var(v) => n.name(*v, true),
        MonadType::Ground(c, idx) => {
            let mut s = c.clone();
            for i in idx {
                s.push(' ');
                s.push_str(&vatom(i, n));
            }
            s
        }
    }
}

fn vatom(t: &ValueType, n: &mut Namer) -> String {
    match t {
        ValueType::Con(_, args) if !args.is_empty() => format!("({})", vtype(t, n)),
        ValueType::Arrow(..) => format!("({})", vtype(t, n)),
        _ => vtype(t, n),
    }
}

pub(crate) fn vtype(t: &ValueType, n: &mut Namer) -> String {
    match t {
        ValueType::Var(v) => n.name(*v, false),
        ValueType::Con(c, args) => {
            let mut s = c.clone();
            for a in args {
                s.push(' ');
                s.push_str(&vatom(a, n));
            }
            s
        }
        ValueType::Set(atoms) => format!("{{{}}}", atoms.iter().cloned().collect::<Vec<_>>().join(",")),
        ValueType::Arrow(d, c) => {
            let dom = match **d {
                ValueType::Arrow(..) => format!("({})", vtype(d, n)),
                _ => vtype(d, n),
            };
            let cod = match c.monad {
                MonadType::Bot => vtype(&c.value, n),
                _ => {
                    let m = monad(&c.monad, n);
                    format!("{m} {}", vatom(&c.value, n))
                }
            };
            format!("{dom} -> {cod}")
        }
    }
}

/// Renders an elaborated term; evidence `k` prints as `b<k>`.
pub fn print_target(t: &Target) -> String {
    target(t)
}

fn ev_list(ids: &[EvId]) -> String {
    ids.iter().map(|i| format!("b{i}")).collect::<Vec<_>>().join(" ")
}

fn target_atom(t: &Target) -> String {
    match t {
        Target::Var(_) | Target::Int(_) | Target::Bool(_) | Target::Unit => target(t),
        Target::Const(c) if c.chars().all(|ch| ch.is_alphanumeric() || ch == '_') => target(t),
        _ => format!("({})", target(t)),
    }
}

fn target(t: &Target) -> String {
    match t {
        Target::Var(x) => x.clone(),
        Target::Const(c) if c.chars().all(|ch| ch.is_alphanumeric() || ch == '_') => c.clone(),
        Target::Const(c) => format!("({c})"),
        Target::Int(i) => i.to_string(),
        Target::Bool(b) => b.to_string(),
        Target::Unit => "()".into(),
        Target::Lam(x, b) => format!("lam {x}. {}", target(b)),
        Target::App(f, a) => {
            let fs = match **f {
                Target::App(..) | Target::EvApp(..) | Target::Bind(..) => target(f),
                _ => target_atom(f),
            };
            format!("{fs} {}", target_atom(a))
        }
        Target::Let(x, a, b) => format!("let {x} = {} in {}", target(a), target(b)),
        Target::LetRec(x, a, b) => format!("letrec {x} = {} in {}", target(a), target(b)),
        Target::If(c, a, b) => format!("if {} then {} else {}", target(c), target(a), target(b)),
        Target::EvAbs(ids, b) if ids.is_empty() => target(b),
        Target::EvAbs(ids, b) => format!("lam {}. {}", ev_list(ids), target(b)),
        Target::EvApp(f, ids) if ids.is_empty() => target(f),
        Target::EvApp(f, ids) => format!("{} {}", target_atom(f), ev_list(ids)),
        Target::Bind(e, m, k) => format!("b{e} {} {}", target_atom(m), target_atom(k)),
        Target::EvLet(defs, b) => {
            let mut s = String::new();
            for (e, src) in defs {
                let rhs = match src {
                    EvSource::Alias(d) => format!("b{d}"),
                    EvSource::Identity => "id".into(),
                    EvSource::Ground(c) => print_constraint(c, &mut Namer::default()),
                };
                let _ = write!(s, "let b{e} = {rhs} in ");
            }
            s + &target(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ist() -> TypeContext {
        let mut cx = TypeContext::default();
        cx.monads.insert("IST".into(), 2);
        cx.monads.insert("A".into(), 2);
        cx
    }

    #[test]
    fn pure_identity() {
        let s = Scheme {
            value_vars: vec![7],
            monad_vars: vec![],
            constraints: vec![],
            body: ValueType::pure_arrow(ValueType::Var(7), ValueType::Var(7)),
        };
        assert_eq!(print_scheme(&s), "forall a. a -> a");
    }

    #[test]
    fn add_interest_shape() {
        let src = "forall n6 n27 a1 a2. (Bot, Bot) |> n6, (IST H a1, IST a1 L) |> n6, (IST H a2, n6) |> n27 => intref a1 -> intref a2 -> n27 ()";
        let s = parse_scheme(src, &ist()).unwrap();
        assert_eq!(
            print_scheme(&s),
            "forall n1 a b n2. (Bot, Bot) |> n1, (IST H a, IST a L) |> n1, (IST H b, n1) |> n2 => intref a -> intref b -> n2 ()"
        );
    }

    #[test]
    fn go_shape() {
        let src = "forall a b q n. (A (Send a b) b, A (Recv int q) q) |> n => a -> n int";
        let s = parse_scheme(src, &ist()).unwrap();
        assert_eq!(print_scheme(&s), "forall a b c n1. (A (Send a b) b, A (Recv int c) c) |> n1 => a -> n1 int");
    }

    #[test]
    fn round_trip() {
        let src = "forall a b n1 n2. n1 |> n2, (Bot, n1) |> n2 => (a -> n1 b) -> a -> n2 b";
        let s = parse_scheme(src, &ist()).unwrap();
        let again = parse_scheme(&print_scheme(&s), &ist()).unwrap();
        assert!(s.alpha_eq(&again));
        assert_eq!(print_scheme(&s), print_scheme(&again));
    }

    #[test]
    fn elaborated_term() {
        let t = Target::Bind(3, Box::new(Target::App(Box::new(Target::Const("read".into())), Box::new(Target::Var("i".into())))), Box::new(Target::identity()));
        assert_eq!(print_target(&t), "b3 (read i) (lam z. z)");
    }
}

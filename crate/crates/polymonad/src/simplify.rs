//! Eliminating open monadic variables before generalization, and hiding
//! constraints that carry no information for the reader.

use std::collections::BTreeSet;

use crate::signature::{entail_ground, Signature};
use crate::syntax::{BindConstraint, MonadType, Subst, Tv};

/// Argument pairs of every constraint whose result is `nu`, without
/// repeats, in bag order.
pub fn flows_to(bag: &[BindConstraint], nu: Tv) -> Vec<(MonadType, MonadType)> {
    let mut out = Vec::new();
    for c in bag {
        if c.result == MonadType::Var(nu) {
            let pair = (c.left.clone(), c.middle.clone());
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
    }
    out
}

/// Results of every constraint consuming `nu` in either argument.
pub fn flows_from(bag: &[BindConstraint], nu: Tv) -> Vec<MonadType> {
    let mut out = Vec::new();
    for c in bag {
        if (c.left == MonadType::Var(nu) || c.middle == MonadType::Var(nu)) && !out.contains(&c.result) {
            out.push(c.result.clone());
        }
    }
    out
}

/// Monadic variables in order of first occurrence.
pub fn monad_vars_in_order(bag: &[BindConstraint]) -> Vec<Tv> {
    let mut out = Vec::new();
    for c in bag {
        for m in c.parts() {
            if let MonadType::Var(v) = m {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Up,
    Down,
    Join,
}

/// The bag minus constraint `i` and minus identity morphisms on `nu`,
/// which any choice for `nu` satisfies.
fn without(bag: &[BindConstraint], i: usize, nu: Tv) -> Vec<BindConstraint> {
    bag.iter()
        .enumerate()
        .filter(|(j, c)| *j != i && !(is_identity(c) && c.result == MonadType::Var(nu)))
        .map(|(_, c)| c.clone())
        .collect()
}

fn try_up(bag: &[BindConstraint], nu: Tv) -> Option<MonadType> {
    let v = MonadType::Var(nu);
    for (i, c) in bag.iter().enumerate() {
        if c.result != v || is_identity(c) {
            continue;
        }
        let m = match (&c.left, &c.middle) {
            (MonadType::Bot, m) | (m, MonadType::Bot) => m,
            _ => continue,
        };
        if *m == v {
            continue;
        }
        let rest = without(bag, i, nu);
        if !flows_from(&rest, nu).is_empty() && flows_to(&rest, nu).is_empty() {
            return Some(m.clone());
        }
    }
    None
}

fn try_down(bag: &[BindConstraint], nu: Tv) -> Option<MonadType> {
    let v = MonadType::Var(nu);
    for (i, c) in bag.iter().enumerate() {
        let ok = matches!((&c.left, &c.middle), (MonadType::Bot, x) | (x, MonadType::Bot) if *x == v);
        if !ok || c.result == v {
            continue;
        }
        let rest = without(bag, i, nu);
        if flows_from(&rest, nu).is_empty() && !flows_to(&rest, nu).is_empty() {
            return Some(c.result.clone());
        }
    }
    None
}

fn try_join(bag: &[BindConstraint], nu: Tv, sig: &Signature) -> Option<MonadType> {
    let f = flows_to(bag, nu);
    if f.is_empty() || f.iter().any(|(a, b)| !a.is_ground() || !b.is_ground()) {
        return None;
    }
    let u = sig.universe();
    let pairs: Option<Vec<(usize, usize)>> = f.iter().map(|(a, b)| Some((u.index_of(a)?, u.index_of(b)?))).collect();
    u.principal_join(&pairs?).map(|k| u.ground[k].clone())
}

/// One improvement step: the first applicable rule, in the order up,
/// down, join, over eligible variables in first-occurrence order.
pub fn simplify_step(
    bag: &[BindConstraint],
    eligible: &BTreeSet<Tv>,
    sig: &Signature,
) -> Option<(Tv, MonadType, Rule)> {
    let vars: Vec<Tv> = monad_vars_in_order(bag).into_iter().filter(|v| eligible.contains(v)).collect();
    for (rule, f) in [
        (Rule::Up, &(|b: &[BindConstraint], v| try_up(b, v)) as &dyn Fn(&[BindConstraint], Tv) -> Option<MonadType>),
        (Rule::Down, &|b: &[BindConstraint], v| try_down(b, v)),
        (Rule::Join, &|b: &[BindConstraint], v| try_join(b, v, sig)),
    ] {
        for &v in &vars {
            if let Some(m) = f(bag, v) {
                return Some((v, m, rule));
            }
        }
    }
    None
}

/// Runs [`simplify_step`] to a fixpoint.
pub fn simplify(bag: &[BindConstraint], eligible: &BTreeSet<Tv>, sig: &Signature) -> (Subst, Vec<BindConstraint>) {
    let mut theta = Subst::default();
    let mut cur = bag.to_vec();
    while let Some((v, m, _)) = simplify_step(&cur, eligible, sig) {
        theta.monads.insert(v, m);
        cur = theta.bag(&cur);
    }
    theta.normalize();
    (theta, cur)
}

/// Why a constraint is left out of the displayed bag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hidden {
    /// Same as the visible constraint at this position.
    Duplicate(usize),
    /// `(m, Bot) |> m` or `(Bot, m) |> m`.
    Identity,
    /// Ground and derivable from the signature.
    Entailed,
}

pub fn is_identity(c: &BindConstraint) -> bool {
    (c.middle == MonadType::Bot && c.left == c.result) || (c.left == MonadType::Bot && c.middle == c.result)
}

/// For each constraint, `None` if it stays visible.
pub fn hide_plan(bag: &[BindConstraint], sig: &Signature) -> Vec<Option<Hidden>> {
    let mut plan: Vec<Option<Hidden>> = Vec::with_capacity(bag.len());
    for (i, c) in bag.iter().enumerate() {
        let h = if is_identity(c) {
            Some(Hidden::Identity)
        } else if c.is_ground() && entail_ground(sig, c).is_some() {
            Some(Hidden::Entailed)
        } else {
            (0..i).find(|&j| plan[j].is_none() && bag[j] == *c).map(Hidden::Duplicate)
        };
        plan.push(h);
    }
    plan
}

pub fn hide(bag: &[BindConstraint], sig: &Signature) -> Vec<BindConstraint> {
    bag.iter().zip(hide_plan(bag, sig)).filter(|(_, h)| h.is_none()).map(|(c, _)| c.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{ist, ist_sig};
    use crate::syntax::ValueType;

    fn v(i: Tv) -> MonadType {
        MonadType::Var(i)
    }

    fn c(a: MonadType, b: MonadType, r: MonadType) -> BindConstraint {
        BindConstraint::new(a, b, r)
    }

    fn three_constraint_bag() -> Vec<BindConstraint> {
        vec![
            c(MonadType::Bot, MonadType::Bot, v(6)),
            c(ist("H", "H"), ist("H", "L"), v(6)),
            c(ist("H", "L"), v(6), v(27)),
        ]
    }

    #[test]
    fn flows() {
        let bag = three_constraint_bag();
        assert_eq!(flows_to(&bag, 6), vec![(MonadType::Bot, MonadType::Bot), (ist("H", "H"), ist("H", "L"))]);
        assert_eq!(flows_from(&bag, 6), vec![v(27)]);
        assert!(flows_to(&[], 6).is_empty());
        assert!(flows_from(&[], 6).is_empty());
    }

    #[test]
    fn join_specialized_bag() {
        let sig = ist_sig();
        let bag = three_constraint_bag();
        let eligible = [6].into_iter().collect();
        assert_eq!(simplify_step(&bag, &eligible, &sig), Some((6, ist("H", "H"), Rule::Join)));
        let (theta, rest) = simplify(&bag, &eligible, &sig);
        assert_eq!(theta.monad(&v(6)), ist("H", "H"));
        assert_eq!(hide(&rest, &sig), vec![c(ist("H", "L"), ist("H", "H"), v(27))]);
    }

    #[test]
    fn up_rule_minimal() {
        let sig = ist_sig();
        let bag = vec![c(MonadType::Bot, ist("H", "L"), v(1)), c(v(1), v(2), v(3))];
        let eligible = [1].into_iter().collect();
        assert_eq!(simplify_step(&bag, &eligible, &sig), Some((1, ist("H", "L"), Rule::Up)));
    }

    #[test]
    fn down_rule_minimal() {
        let sig = ist_sig();
        let bag = vec![c(v(2), v(3), v(1)), c(v(1), MonadType::Bot, v(4))];
        let eligible = [1].into_iter().collect();
        assert_eq!(simplify_step(&bag, &eligible, &sig), Some((1, v(4), Rule::Down)));
    }

    #[test]
    fn ineligible_untouched() {
        let sig = ist_sig();
        let bag = three_constraint_bag();
        assert_eq!(simplify_step(&bag, &BTreeSet::new(), &sig), None);
        let (theta, rest) = simplify(&[], &[1].into_iter().collect(), &sig);
        assert!(theta.is_empty() && rest.is_empty());
    }

    #[test]
    fn join_skipped_with_index_variable() {
        let sig = ist_sig();
        let a1 = MonadType::ground("IST", vec![ValueType::con("H"), ValueType::Var(1)]);
        let bag = vec![c(MonadType::Bot, MonadType::Bot, v(6)), c(a1, ist("L", "L"), v(6)), c(ist("H", "L"), v(6), v(27))];
        assert_eq!(simplify_step(&bag, &[6].into_iter().collect(), &sig), None);
    }

    #[test]
    fn hide_cases() {
        let sig = ist_sig();
        let p = c(v(1), v(2), v(3));
        assert_eq!(hide(&[p.clone(), p.clone()], &sig), vec![p.clone()]);
        assert_eq!(hide_plan(&[p.clone(), p.clone()], &sig), vec![None, Some(Hidden::Duplicate(0))]);
        assert!(hide(&[BindConstraint::morphism(v(1), v(1))], &sig).is_empty());
        assert!(hide(&[c(ist("H", "L"), ist("H", "H"), ist("H", "H"))], &sig).is_empty());
        // Ground but not derivable stays visible.
        let bad = c(ist("H", "H"), ist("L", "L"), ist("L", "L"));
        assert_eq!(hide(std::slice::from_ref(&bad), &sig), vec![bad]);
    }
}

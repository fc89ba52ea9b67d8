//! Polymonadic signatures: constructors, bind specifications, the ground
//! bind relation they induce, and queries over it.

mod load;
mod theory;
mod universe;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

pub use load::{load_signature, SigError};
pub use theory::{subst_vt, theory_solve, unify_index, IndexExpr, Sort, StateCon, TheoryConstraint, TheoryDescriptor, TheoryError};
pub use universe::Universe;

use crate::syntax::{BindConstraint, MonadType, Scheme, Subst, Tv, TypeContext, ValueType};

/// Protocol-state nesting used when the caller gives no bound.
pub const DEFAULT_DEPTH: usize = 2;

/// Largest number of ground constructors a universe may have.
pub const MAX_GROUND: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constructor {
    pub name: String,
    pub sorts: Vec<Sort>,
}

impl Constructor {
    pub fn arity(&self) -> usize {
        self.sorts.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindSpec {
    pub name: String,
    pub vars: Vec<(Tv, Sort)>,
    pub phi: Vec<TheoryConstraint>,
    pub triple: BindConstraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuntimeKind {
    Identity,
    State,
    Writer,
    Session,
    /// A deliberately unlawful state monad whose bind zeroes the store
    /// after running.
    StateReset,
}

impl RuntimeKind {
    pub fn parse(s: &str) -> Option<RuntimeKind> {
        Some(match s {
            "identity" => RuntimeKind::Identity,
            "state" => RuntimeKind::State,
            "writer" => RuntimeKind::Writer,
            "session" => RuntimeKind::Session,
            "state_reset" => RuntimeKind::StateReset,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundBind {
    pub triple: BindConstraint,
    pub spec: String,
}

#[derive(Debug, Clone)]
pub struct Signature {
    pub constructors: Vec<Constructor>,
    pub theory: TheoryDescriptor,
    pub specs: Vec<BindSpec>,
    pub runtime: RuntimeKind,
    pub prims: Vec<(String, Scheme)>,
    universe: OnceLock<Arc<Universe>>,
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.constructors == other.constructors
            && self.theory == other.theory
            && self.specs == other.specs
            && self.runtime == other.runtime
            && self.prims == other.prims
    }
}

impl Default for Signature {
    /// Just `Bot` and its identity bind.
    fn default() -> Self {
        Signature::new(
            vec![],
            TheoryDescriptor::Lattice { elements: vec![], leq: vec![] },
            vec![BindSpec {
                name: "bId".into(),
                vars: vec![],
                phi: vec![],
                triple: BindConstraint::new(MonadType::Bot, MonadType::Bot, MonadType::Bot),
            }],
            RuntimeKind::Identity,
            vec![],
        )
    }
}

impl Signature {
    pub fn new(
        constructors: Vec<Constructor>,
        theory: TheoryDescriptor,
        specs: Vec<BindSpec>,
        runtime: RuntimeKind,
        prims: Vec<(String, Scheme)>,
    ) -> Signature {
        Signature { constructors, theory, specs, runtime, prims, universe: OnceLock::new() }
    }

    pub fn constructor(&self, name: &str) -> Option<&Constructor> {
        self.constructors.iter().find(|c| c.name == name)
    }

    pub fn prim(&self, name: &str) -> Option<&Scheme> {
        self.prims.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn type_context(&self) -> TypeContext {
        TypeContext {
            monads: self.constructors.iter().map(|c| (c.name.clone(), c.arity())).collect(),
            top: match &self.theory {
                TheoryDescriptor::Sets { atoms } => Some(atoms.iter().cloned().collect()),
                _ => None,
            },
        }
    }

    /// Number of ground constructors at `depth`, without building them.
    pub fn universe_size(&self, depth: usize) -> usize {
        1 + self
            .constructors
            .iter()
            .map(|c| c.sorts.iter().map(|s| self.theory.universe(*s, depth).len()).product::<usize>())
            .sum::<usize>()
    }

    /// Rejects bounds whose universe exceeds [`MAX_GROUND`].
    pub fn check_depth(&self, depth: usize) -> Result<(), String> {
        match self.universe_size(depth) {
            n if n > MAX_GROUND => Err(format!("bound {depth} gives {n} ground constructors; at most {MAX_GROUND} are supported")),
            _ => Ok(()),
        }
    }

    /// The ground relation at the default depth, built once.
    pub fn universe(&self) -> Arc<Universe> {
        self.universe.get_or_init(|| Arc::new(Universe::build(self, DEFAULT_DEPTH))).clone()
    }

    pub fn universe_at(&self, depth: usize) -> Arc<Universe> {
        if depth == DEFAULT_DEPTH || !matches!(self.theory, TheoryDescriptor::Free { .. }) {
            self.universe()
        } else {
            Arc::new(Universe::build(self, depth))
        }
    }

    /// Combines signatures given on one command line. Constructors and
    /// specs must not clash; at most one non-trivial theory and runtime.
    pub fn merge(mut self, other: Signature) -> Result<Signature, SigError> {
        for c in other.constructors {
            if self.constructor(&c.name).is_some() {
                return Err(SigError::Duplicate(format!("constructor {}", c.name)));
            }
            self.constructors.push(c);
        }
        let trivial = |t: &TheoryDescriptor| matches!(t, TheoryDescriptor::Lattice { elements, .. } if elements.is_empty());
        if trivial(&self.theory) {
            self.theory = other.theory;
        } else if !trivial(&other.theory) && other.theory != self.theory {
            return Err(SigError::Invalid("signatures declare different theories".into()));
        }
        for s in other.specs {
            match self.specs.iter().find(|t| t.name == s.name) {
                Some(t) if *t == s => {}
                Some(_) => return Err(SigError::Duplicate(format!("bind {}", s.name))),
                None => self.specs.push(s),
            }
        }
        if self.runtime == RuntimeKind::Identity {
            self.runtime = other.runtime;
        } else if other.runtime != RuntimeKind::Identity && other.runtime != self.runtime {
            return Err(SigError::Invalid("signatures declare different runtimes".into()));
        }
        for (n, s) in other.prims {
            if self.prim(&n).is_some() {
                return Err(SigError::Duplicate(format!("prim {n}")));
            }
            self.prims.push((n, s));
        }
        self.universe = OnceLock::new();
        Ok(self)
    }

    /// Removes a bind specification; used to build mutants.
    pub fn without_spec(&self, name: &str) -> Signature {
        let mut s = self.clone();
        s.specs.retain(|b| b.name != name);
        s.universe = OnceLock::new();
        s
    }

    pub fn with_runtime(&self, runtime: RuntimeKind) -> Signature {
        let mut s = self.clone();
        s.runtime = runtime;
        s
    }

    /// Sorts of every variable in the index positions of `m`.
    pub fn index_var_sorts(&self, m: &MonadType, out: &mut BTreeMap<Tv, Sort>) {
        if let MonadType::Ground(c, idx) = m {
            if let Some(con) = self.constructor(c) {
                for (i, s) in idx.iter().zip(&con.sorts) {
                    self.theory.var_sorts(i, *s, out);
                }
            }
        }
    }
}

/// Matches a spec pattern against a ground monad, extending `s`.
pub(crate) fn match_monad(pat: &MonadType, m: &MonadType, s: &mut BTreeMap<Tv, ValueType>) -> bool {
    match (pat, m) {
        (MonadType::Bot, MonadType::Bot) => true,
        (MonadType::Ground(a, xs), MonadType::Ground(b, ys)) if a == b && xs.len() == ys.len() => {
            xs.iter().zip(ys).all(|(x, y)| unify_index(x, y, s).is_some())
        }
        _ => false,
    }
}

/// Looks for a spec deriving the ground triple `pi`, returning its index.
pub fn entail_ground(sig: &Signature, pi: &BindConstraint) -> Option<usize> {
    let u = sig.universe();
    if let (Some(i), Some(j), Some(k)) = (u.index_of(&pi.left), u.index_of(&pi.middle), u.index_of(&pi.result)) {
        return u.spec_of(i, j, k);
    }
    sig.specs.iter().position(|spec| spec_derives(sig, spec, pi))
}

fn spec_derives(sig: &Signature, spec: &BindSpec, pi: &BindConstraint) -> bool {
    let mut s = BTreeMap::new();
    if !(match_monad(&spec.triple.left, &pi.left, &mut s)
        && match_monad(&spec.triple.middle, &pi.middle, &mut s)
        && match_monad(&spec.triple.result, &pi.result, &mut s))
    {
        return false;
    }
    let phi: Vec<TheoryConstraint> = spec.phi.iter().map(|c| c.subst(&s)).collect();
    theory_solve(&sig.theory, &phi).is_some()
}

/// The first false theory atom of a spec whose shape matches `pi`, for
/// diagnostics; `None` when no spec has the right shape. Monadic
/// variables in `pi` match anything.
pub fn explain_failure(sig: &Signature, pi: &BindConstraint) -> Option<(String, TheoryConstraint)> {
    let fits = |pat: &MonadType, m: &MonadType, s: &mut BTreeMap<Tv, ValueType>| {
        matches!(m, MonadType::Var(_)) || match_monad(pat, m, s)
    };
    for spec in &sig.specs {
        let mut s = BTreeMap::new();
        if fits(&spec.triple.left, &pi.left, &mut s)
            && fits(&spec.triple.middle, &pi.middle, &mut s)
            && fits(&spec.triple.result, &pi.result, &mut s)
        {
            for c in &spec.phi {
                let c = c.subst(&s);
                if sig.theory.holds(&c) == Some(false) {
                    return Some((spec.name.clone(), c));
                }
            }
        }
    }
    None
}

/// Variables of a constraint split into monadic variables and index
/// variables with their sorts.
pub fn constraint_vars(sig: &Signature, pi: &BindConstraint) -> (Vec<Tv>, BTreeMap<Tv, Sort>) {
    let mut monads = Vec::new();
    let mut idx = BTreeMap::new();
    for m in pi.parts() {
        match m {
            MonadType::Var(v) if !monads.contains(v) => monads.push(*v),
            MonadType::Ground(..) => sig.index_var_sorts(m, &mut idx),
            _ => {}
        }
    }
    (monads, idx)
}

/// `Σ ⊨ π`: the first spec (in declaration order) and the canonical
/// instantiation of `pi`'s own variables under which it is derivable.
pub fn entail(sig: &Signature, pi: &BindConstraint) -> Option<(String, Subst)> {
    if pi.is_ground() {
        return entail_ground(sig, pi).map(|i| (sig.specs[i].name.clone(), Subst::default()));
    }
    let u = sig.universe();
    let (monads, idx) = constraint_vars(sig, pi);
    let idx: Vec<(Tv, Vec<ValueType>)> =
        idx.into_iter().map(|(v, s)| (v, sig.theory.universe(s, DEFAULT_DEPTH))).collect();
    let mut found = None;
    u.for_each_assignment(&monads, &idx, &mut |theta| {
        let g = theta.constraint(pi);
        match entail_ground(sig, &g) {
            Some(i) => {
                found = Some((sig.specs[i].name.clone(), theta.clone()));
                false
            }
            None => true,
        }
    });
    found
}

/// Every ground bind derivable within the universe at `depth`.
pub fn ground_instances(sig: &Signature, depth: usize) -> BTreeSet<GroundBind> {
    let u = sig.universe_at(depth);
    u.triples()
        .map(|(i, j, k)| GroundBind {
            triple: BindConstraint::new(u.ground[i].clone(), u.ground[j].clone(), u.ground[k].clone()),
            spec: sig.specs[u.spec_of(i, j, k).unwrap()].name.clone(),
        })
        .collect()
}

/// The principal join of a set of ground pairs: a common bind target
/// with a morphism to every other common target.
pub fn principal_join(sig: &Signature, f: &[(MonadType, MonadType)], depth: usize) -> Option<MonadType> {
    let u = sig.universe_at(depth);
    let pairs: Option<Vec<(usize, usize)>> = f.iter().map(|(a, b)| Some((u.index_of(a)?, u.index_of(b)?))).collect();
    u.principal_join(&pairs?).map(|k| u.ground[k].clone())
}

#[cfg(test)]
mod tests;

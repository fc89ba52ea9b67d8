use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use super::{Signature, TheoryConstraint};
use crate::syntax::{MonadType, Subst, Tv, ValueType};

/// The finite set of ground constructors at some depth and the bind
/// relation over it. `Bot` is always index 0.
#[derive(Debug, Clone)]
pub struct Universe {
    pub ground: Vec<MonadType>,
    pub depth: usize,
    pos: HashMap<MonadType, usize>,
    /// `sets[slot[i * n + j]]` holds every `k` with `(i, j) |> k`; slot 0
    /// is the empty set.
    slot: Vec<u32>,
    sets: Vec<FixedBitSet>,
    /// Every `j` with some `(i, j) |> k`.
    partners: Vec<FixedBitSet>,
    spec_of: HashMap<(usize, usize, usize), usize>,
}

fn product(choices: &[Vec<ValueType>]) -> Vec<Vec<ValueType>> {
    let mut out: Vec<Vec<ValueType>> = vec![vec![]];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                c.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x.clone());
                    p
                })
            })
            .collect();
    }
    out
}

impl Universe {
    pub fn build(sig: &Signature, depth: usize) -> Universe {
        let mut ground = vec![MonadType::Bot];
        for c in &sig.constructors {
            let choices: Vec<Vec<ValueType>> = c.sorts.iter().map(|s| sig.theory.universe(*s, depth)).collect();
            for idx in product(&choices) {
                ground.push(MonadType::Ground(c.name.clone(), idx));
            }
        }
        let n = ground.len();
        let pos: HashMap<MonadType, usize> = ground.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut u = Universe {
            ground,
            depth,
            pos,
            slot: vec![0; n * n],
            sets: vec![FixedBitSet::with_capacity(n)],
            partners: vec![FixedBitSet::with_capacity(n); n],
            spec_of: HashMap::new(),
        };
        for (si, spec) in sig.specs.iter().enumerate() {
            let (vars, choices): (Vec<Tv>, Vec<Vec<ValueType>>) =
                spec.vars.iter().map(|(v, s)| (*v, sig.theory.universe(*s, depth))).unzip();
            for vals in product(&choices) {
                let s: std::collections::BTreeMap<Tv, ValueType> = vars.iter().copied().zip(vals).collect();
                if !spec.phi.iter().all(|c: &TheoryConstraint| sig.theory.holds(&c.subst(&s)) == Some(true)) {
                    continue;
                }
                let theta = Subst { values: s, monads: Default::default() };
                let t = theta.constraint(&spec.triple);
                if let (Some(i), Some(j), Some(k)) = (u.index_of(&t.left), u.index_of(&t.middle), u.index_of(&t.result)) {
                    if u.slot[i * n + j] == 0 {
                        u.slot[i * n + j] = u.sets.len() as u32;
                        u.sets.push(FixedBitSet::with_capacity(n));
                        u.partners[i].insert(j);
                    }
                    let at = u.slot[i * n + j] as usize;
                    u.sets[at].insert(k);
                    u.spec_of.entry((i, j, k)).or_insert(si);
                }
            }
        }
        u
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn index_of(&self, m: &MonadType) -> Option<usize> {
        self.pos.get(m).copied()
    }

    pub fn has(&self, i: usize, j: usize, k: usize) -> bool {
        self.results(i, j).contains(k)
    }

    pub fn results(&self, i: usize, j: usize) -> &FixedBitSet {
        &self.sets[self.slot[i * self.len() + j] as usize]
    }

    /// Every `j` for which `(i, j)` has a bind.
    pub fn partners(&self, i: usize) -> &FixedBitSet {
        &self.partners[i]
    }

    pub fn morphism(&self, from: usize, to: usize) -> bool {
        self.has(from, 0, to)
    }

    pub fn spec_of(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        self.spec_of.get(&(i, j, k)).copied()
    }

    /// All `(i, j, k)` in the relation, in lexicographic order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| self.partners[i].ones().flat_map(move |j| self.results(i, j).ones().map(move |k| (i, j, k))))
    }

    pub fn count(&self) -> usize {
        self.sets.iter().map(|b| b.count_ones(..)).sum()
    }

    /// Common bind targets of every pair.
    pub fn join_set(&self, pairs: &[(usize, usize)]) -> FixedBitSet {
        let mut acc = FixedBitSet::with_capacity(self.len());
        acc.insert_range(..);
        for (i, j) in pairs {
            acc.intersect_with(self.results(*i, *j));
        }
        acc
    }

    /// The first common target (canonical order) with a morphism into
    /// every other common target.
    pub fn principal_join(&self, pairs: &[(usize, usize)]) -> Option<usize> {
        if pairs.is_empty() {
            return None;
        }
        let j = self.join_set(pairs);
        j.ones().find(|&c| j.ones().all(|d| self.morphism(c, d)))
    }

    /// Calls `f` on each assignment of the monadic variables to ground
    /// constructors and index variables to their candidates, in canonical
    /// order, until it returns false.
    pub fn for_each_assignment(
        &self,
        monads: &[Tv],
        idx: &[(Tv, Vec<ValueType>)],
        f: &mut dyn FnMut(&Subst) -> bool,
    ) {
        let sizes: Vec<usize> =
            monads.iter().map(|_| self.len()).chain(idx.iter().map(|(_, c)| c.len())).collect();
        if sizes.contains(&0) {
            return;
        }
        let mut choice = vec![0usize; sizes.len()];
        loop {
            let mut theta = Subst::default();
            for (k, v) in monads.iter().enumerate() {
                theta.monads.insert(*v, self.ground[choice[k]].clone());
            }
            for (k, (v, cands)) in idx.iter().enumerate() {
                theta.values.insert(*v, cands[choice[monads.len() + k]].clone());
            }
            if !f(&theta) {
                return;
            }
            let mut i = sizes.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < sizes[i] {
                    break;
                }
                choice[i] = 0;
            }
        }
    }
}

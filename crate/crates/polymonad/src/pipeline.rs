//! Parse, infer, solve and run, as the command line does it.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::path::Path;

use crate::graph::{build_graph, find_core};
use crate::infer::{infer_program, Inferred, Options};
use crate::runtime::{initial_store, resolve_evidence, run_program, MachineState, Outcome, Value};
use crate::signature::{load_signature, RuntimeKind, Signature};
use crate::solve::{solve, solutions_equivalent, enumerate_solutions, Solution, SolveOptions};
use crate::syntax::{print_constraint, BindConstraint, FreeVars, Namer, Program, Tv};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PmError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Type(String),
    #[error("{0}")]
    Runtime(String),
}

impl PmError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PmError::Parse(_) => 1,
            PmError::Type(_) => 2,
            PmError::Runtime(_) => 4,
        }
    }
}

fn read(path: &Path) -> Result<String, PmError> {
    std::fs::read_to_string(path).map_err(|e| PmError::Parse(format!("{}: {e}", path.display())))
}

/// Loads and merges signature files; none gives the `Bot`-only signature.
pub fn load_signatures(paths: &[impl AsRef<Path>]) -> Result<Signature, PmError> {
    let mut sig: Option<Signature> = None;
    for p in paths {
        let p = p.as_ref();
        let s = load_signature(&read(p)?).map_err(|e| PmError::Parse(format!("{}: {e}", p.display())))?;
        sig = Some(match sig {
            None => s,
            Some(acc) => acc.merge(s).map_err(|e| PmError::Parse(e.to_string()))?,
        });
    }
    Ok(sig.unwrap_or_default())
}

/// A program that typechecked, with its main bag solved.
#[derive(Debug, Clone)]
pub struct Checked {
    pub inferred: Inferred,
    pub solution: Solution,
    pub protected: BTreeSet<Tv>,
}

impl Checked {
    pub fn main_bag(&self) -> Vec<BindConstraint> {
        self.inferred.bag.iter().map(|(_, c)| c.clone()).collect()
    }
}

/// Lines naming each constraint, for diagnostics.
pub fn show_bag(bag: &[BindConstraint]) -> String {
    let mut n = Namer::default();
    bag.iter().map(|c| format!("  {}\n", print_constraint(c, &mut n))).collect()
}

pub fn infer_source(sig: &Signature, src: &str, opts: Options) -> Result<Inferred, PmError> {
    let prog = Program::parse(src).map_err(|e| PmError::Parse(e.to_string()))?;
    infer_program(sig, &prog, opts).map_err(|e| PmError::Type(e.to_string()))
}

/// Infers, checks the main bag for ambiguity and solves it.
pub fn check_source(sig: &Signature, src: &str, opts: Options, solve_opts: SolveOptions) -> Result<Checked, PmError> {
    sig.check_depth(solve_opts.depth).map_err(PmError::Type)?;
    let inferred = infer_source(sig, src, opts)?;
    let mut protected = inferred.ty.free_vars();
    inferred.monad.collect_vars(&mut protected);
    let bag: Vec<BindConstraint> = inferred.bag.iter().map(|(_, c)| c.clone()).collect();
    if opts.check_ambiguity && find_core(&build_graph(&bag), &protected).is_none() {
        return Err(PmError::Type(format!("ambiguous main expression; residual constraints:\n{}", show_bag(&bag))));
    }
    let solution = solve(sig, &bag, &Default::default(), solve_opts)
        .map_err(|e| PmError::Type(format!("{e}\nresidual constraints:\n{}", show_bag(&bag))))?;
    Ok(Checked { inferred, solution, protected })
}

/// Starting state from `--store` and `--script` settings. Cells keep
/// declaration order.
pub fn initial_state(sig: &Signature, store: &[(String, i64)], script: &[i64]) -> Result<MachineState, PmError> {
    let mut cells = initial_store(sig);
    for (name, v) in store {
        let cell = cells.iter_mut().find(|(n, _)| n == name).ok_or_else(|| PmError::Runtime(format!("unknown reference {name}")))?;
        cell.1 = *v;
    }
    Ok(MachineState { store: cells, trace: vec![], script: script.iter().map(|i| Value::Int(*i)).collect() })
}

pub fn run_checked(sig: &Signature, c: &Checked, state: MachineState, fuel: Option<u64>) -> Result<Outcome, PmError> {
    let bag = c.solution.subst.bag(&c.main_bag());
    let evidence = resolve_evidence(&c.inferred.bag.iter().map(|(e, _)| *e).zip(bag).collect::<Vec<_>>());
    run_program(sig, &c.inferred.target, &evidence, state, fuel).map_err(|e| PmError::Runtime(e.to_string()))
}

/// `value:` then the runtime's observable state.
pub fn format_outcome(kind: RuntimeKind, o: &Outcome) -> String {
    let mut s = format!("value: {}\n", o.value);
    if matches!(kind, RuntimeKind::State | RuntimeKind::StateReset | RuntimeKind::Writer) {
        let cells: Vec<String> = o.state.store.iter().map(|(n, v)| format!("{n}={v}")).collect();
        let _ = writeln!(s, "store: {}", cells.join(" "));
    }
    if matches!(kind, RuntimeKind::Writer | RuntimeKind::Session) {
        let _ = writeln!(s, "trace: [{}]", o.state.trace.join(", "));
    }
    s
}

/// Every solution of the main bag, checked against the canonical one.
/// Returns the number of solutions, or the first incoherent pair.
pub fn check_coherence(sig: &Signature, c: &Checked, depth: usize, limit: usize) -> Result<usize, String> {
    let bag = c.main_bag();
    let g = build_graph(&bag);
    let sols = enumerate_solutions(sig, &bag, &Default::default(), depth.max(c.solution.depth), limit);
    for s in &sols {
        let agree = c.protected.iter().all(|v| {
            let m = crate::syntax::MonadType::Var(*v);
            s.subst.monad(&m) == c.solution.subst.monad(&m)
        });
        if agree && !solutions_equivalent(&g, sig, &c.solution, s, &c.protected) {
            let mut n = Namer::default();
            let shown: Vec<String> = s.apply(&bag).iter().map(|x| print_constraint(x, &mut n)).collect();
            return Err(format!("solution differs observably from the canonical one: {}", shown.join(", ")));
        }
    }
    Ok(sols.len())
}

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polymonad::graph::{build_graph, find_core};
use polymonad::infer::Options;
use polymonad::laws::{bound_description, check_all, LawOptions};
use polymonad::pipeline::{
    check_coherence, check_source, format_outcome, infer_source, initial_state, load_signatures, run_checked, PmError,
};
use polymonad::signature::DEFAULT_DEPTH;
use polymonad::solve::{enumerate_solutions, SolveOptions};
use polymonad::syntax::{print_constraint, print_monad, print_scheme, print_target, print_vtype, Namer};

#[derive(Parser)]
#[command(name = "pm", version, about = "Polymonadic type inference and evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the type scheme of every top-level binding.
    Infer {
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Typecheck and solve without running.
    Check {
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Typecheck, solve and evaluate.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Initial reference values, `name=value,...`.
        #[arg(long, value_delimiter = ',', value_parser = parse_cell)]
        store: Vec<(String, i64)>,
        /// Values returned by successive `recv` calls.
        #[arg(long, value_delimiter = ',')]
        script: Vec<i64>,
        /// Evaluation step budget.
        #[arg(long)]
        fuel: Option<u64>,
    },
    /// Check the polymonad laws for a signature.
    Laws {
        sig: PathBuf,
        /// Nesting bound for protocol states.
        #[arg(long)]
        bound: Option<usize>,
        /// Cap on sample inputs per position.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Signature file; may be repeated.
    #[arg(long = "sig")]
    sigs: Vec<PathBuf>,
    #[arg(long)]
    no_simplify: bool,
    #[arg(long)]
    no_hide: bool,
    /// Print the constraint graph of the main expression.
    #[arg(long)]
    show_graph: bool,
    /// Print the evidence-passing translation.
    #[arg(long)]
    show_elaborated: bool,
    /// List solutions of the main constraints.
    #[arg(long)]
    enumerate: bool,
    /// Check that all solutions of the main constraints behave alike.
    #[arg(long)]
    check_coherence: bool,
    /// Nesting bound for protocol states.
    #[arg(long)]
    bound: Option<usize>,
}

impl Common {
    fn options(&self) -> Options {
        Options { simplify: !self.no_simplify, hide: !self.no_hide, check_ambiguity: true }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { depth: self.bound.unwrap_or(DEFAULT_DEPTH), ..Default::default() }
    }
}

fn parse_cell(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s}"))?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|e| format!("{v}: {e}"))?))
}

fn report(e: &PmError) -> ExitCode {
    let styled = std::io::stderr().is_terminal() && std::env::var("PM_COLOR").map_or(true, |v| v != "0");
    let label = if styled { "\x1b[1;31merror\x1b[0m" } else { "error" };
    eprintln!("{label}: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn read(path: &PathBuf) -> Result<String, PmError> {
    std::fs::read_to_string(path).map_err(|e| PmError::Parse(format!("{}: {e}", path.display())))
}

fn extras(sig: &polymonad::signature::Signature, c: &polymonad::pipeline::Checked, common: &Common) -> Result<(), PmError> {
    let bag = c.main_bag();
    if common.show_graph {
        let g = build_graph(&bag);
        print!("{}", g.dump(&mut Namer::default()));
        if let Some(core) = find_core(&g, &c.protected) {
            for e in core.flow {
                println!("core v{} -> v{}", e.source, e.sink);
            }
        }
    }
    if common.show_elaborated {
        println!("{}", print_target(&c.inferred.target));
    }
    let depth = common.bound.unwrap_or(DEFAULT_DEPTH).max(c.solution.depth);
    if common.enumerate {
        for (i, s) in enumerate_solutions(sig, &bag, &Default::default(), depth, 100).iter().enumerate() {
            let mut n = Namer::default();
            let shown: Vec<String> = s.apply(&bag).iter().map(|x| print_constraint(x, &mut n)).collect();
            println!("solution {i}: {}", shown.join(", "));
        }
    }
    if common.check_coherence {
        let k = check_coherence(sig, c, depth, 10_000).map_err(PmError::Type)?;
        println!("coherent ({k} solutions)");
    }
    Ok(())
}

fn infer_cmd(files: &[PathBuf], common: &Common) -> Result<(), PmError> {
    let sig = load_signatures(&common.sigs)?;
    for f in files {
        let inf = infer_source(&sig, &read(f)?, common.options())?;
        for (name, s) in &inf.decls {
            println!("{name} : {}", print_scheme(s));
        }
        if !inf.bag.is_empty() || inf.decls.is_empty() {
            let mut n = Namer::default();
            let bag = inf.bag.iter().map(|(_, c)| print_constraint(c, &mut n)).collect::<Vec<_>>();
            let ty = format!("{} {}", print_monad(&inf.monad, &mut n), print_vtype(&inf.ty, &mut n));
            if bag.is_empty() {
                println!("main : {ty}");
            } else {
                println!("main : {} => {ty}", bag.join(", "));
            }
        }
    }
    Ok(())
}

fn check_cmd(files: &[PathBuf], common: &Common) -> Result<(), PmError> {
    let sig = load_signatures(&common.sigs)?;
    for f in files {
        let c = check_source(&sig, &read(f)?, common.options(), common.solve_options())?;
        extras(&sig, &c, common)?;
        println!("{}: ok", f.display());
    }
    Ok(())
}

fn run_cmd(file: &PathBuf, common: &Common, store: &[(String, i64)], script: &[i64], fuel: Option<u64>) -> Result<(), PmError> {
    let sig = load_signatures(&common.sigs)?;
    let c = check_source(&sig, &read(file)?, common.options(), common.solve_options())?;
    extras(&sig, &c, common)?;
    let out = run_checked(&sig, &c, initial_state(&sig, store, script)?, fuel)?;
    print!("{}", format_outcome(sig.runtime, &out));
    Ok(())
}

const SHOWN_PER_LAW: usize = 10;

fn laws_cmd(sig: &PathBuf, bound: Option<usize>, samples: usize) -> Result<bool, PmError> {
    let sig = load_signatures(&[sig])?;
    let opts = LawOptions { depth: bound.unwrap_or(DEFAULT_DEPTH), samples };
    sig.check_depth(opts.depth).map_err(PmError::Type)?;
    let reports = check_all(&sig, opts);
    for r in &reports {
        if r.passed() {
            println!("{}: ok ({} checked)", r.law, r.checked);
        } else {
            println!("{}: FAIL ({} counterexamples)", r.law, r.counterexamples.len());
            for w in r.counterexamples.iter().take(SHOWN_PER_LAW) {
                println!("LAW {} FAIL {w}", r.law);
            }
            if r.counterexamples.len() > SHOWN_PER_LAW {
                println!("... {} more", r.counterexamples.len() - SHOWN_PER_LAW);
            }
        }
    }
    let ok = reports.iter().all(|r| r.passed());
    if ok {
        println!("all laws pass (bound={})", bound_description(&sig, opts));
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Infer { files, common } => infer_cmd(files, common),
        Cmd::Check { files, common } => check_cmd(files, common),
        Cmd::Run { file, common, store, script, fuel } => run_cmd(file, common, store, script, *fuel),
        Cmd::Laws { sig, bound, samples } => match laws_cmd(sig, *bound, *samples) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(3),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

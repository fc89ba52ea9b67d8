//! The `.sig` file format.

use std::collections::{BTreeMap, BTreeSet};

use super::{BindSpec, Constructor, RuntimeKind, Signature, Sort, StateCon, TheoryConstraint, TheoryDescriptor, IndexExpr};
use crate::syntax::lexer::{lex, Tok, Token};
use crate::syntax::parse::{Parser, VarScope};
use crate::syntax::{FreeVars, MonadType, SyntaxError, TypeContext, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SigError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("line {line}: {msg}")]
    At { line: usize, msg: String },
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("{0}")]
    Invalid(String),
}

const DECL_KEYWORDS: &[&str] = &["theory", "constructor", "bind", "runtime", "prim", "payload"];

struct Chunk {
    keyword: String,
    line: usize,
    parser: Parser,
}

/// Splits the token stream at declaration keywords that begin a line.
fn chunks(src: &str) -> Result<Vec<Chunk>, SigError> {
    let toks = lex(src)?;
    let mut out: Vec<(String, usize, Vec<Token>)> = Vec::new();
    let mut prev_line = 0;
    for t in toks {
        if let Tok::Eof = t.tok {
            break;
        }
        let first_on_line = t.line != prev_line;
        prev_line = t.line;
        match &t.tok {
            Tok::Ident(k) if first_on_line && DECL_KEYWORDS.contains(&k.as_str()) => {
                out.push((k.clone(), t.line, Vec::new()));
            }
            _ => match out.last_mut() {
                Some((_, _, body)) => body.push(t),
                None => {
                    return Err(SigError::At { line: t.line, msg: "expected a declaration keyword".into() });
                }
            },
        }
    }
    Ok(out
        .into_iter()
        .map(|(keyword, line, mut body)| {
            let (l, c) = body.last().map(|t| (t.line, t.col + 1)).unwrap_or((line, 1));
            body.push(Token { tok: Tok::Eof, line: l, col: c });
            Chunk { keyword, line, parser: Parser::from_tokens(body) }
        })
        .collect())
}

fn at(line: usize, msg: impl Into<String>) -> SigError {
    SigError::At { line, msg: msg.into() }
}

pub fn load_signature(src: &str) -> Result<Signature, SigError> {
    let mut theory: Option<TheoryDescriptor> = None;
    let mut payloads: Vec<ValueType> = Vec::new();
    let mut constructors: Vec<Constructor> = Vec::new();
    let mut runtime: Option<RuntimeKind> = None;
    let mut later = Vec::new();

    for mut ch in chunks(src)? {
        let p = &mut ch.parser;
        match ch.keyword.as_str() {
            "theory" => {
                if theory.is_some() {
                    return Err(SigError::Duplicate("theory declaration".into()));
                }
                theory = Some(parse_theory(p, ch.line)?);
                p.finish()?;
            }
            "payload" => {
                let mut vars = VarScope::default();
                loop {
                    let t = p.vtype(&TypeContext::default(), &mut vars)?;
                    if !t.is_ground() {
                        return Err(at(ch.line, "payload types must be ground"));
                    }
                    payloads.push(t);
                    if !p.eat(",") {
                        break;
                    }
                }
                p.finish()?;
            }
            "constructor" => {
                let name = p.ident()?;
                p.expect("/")?;
                let k = p.int()? as usize;
                let mut sorts = vec![Sort::Index; k];
                if p.eat("(") {
                    sorts.clear();
                    loop {
                        sorts.push(if p.ident()? == "type" { Sort::Type } else { Sort::Index });
                        if !p.eat(",") {
                            break;
                        }
                    }
                    p.expect(")")?;
                    if sorts.len() != k {
                        return Err(at(ch.line, format!("constructor {name} has arity {k} but {} sorts", sorts.len())));
                    }
                }
                p.finish()?;
                if name == "Bot" || name == "Id" || constructors.iter().any(|c| c.name == name) {
                    return Err(SigError::Duplicate(format!("constructor {name}")));
                }
                constructors.push(Constructor { name, sorts });
            }
            "runtime" => {
                let r = p.ident()?;
                p.finish()?;
                if runtime.is_some() {
                    return Err(SigError::Duplicate("runtime declaration".into()));
                }
                runtime = Some(RuntimeKind::parse(&r).ok_or_else(|| at(ch.line, format!("unknown runtime {r}")))?);
            }
            _ => later.push(ch),
        }
    }

    let mut theory = theory.unwrap_or(TheoryDescriptor::Lattice { elements: vec![], leq: vec![] });
    if let TheoryDescriptor::Free { payloads: ps, .. } = &mut theory {
        *ps = if payloads.is_empty() { vec![ValueType::int()] } else { payloads };
    }
    let mut sig = Signature::new(constructors, theory, vec![], runtime.unwrap_or(RuntimeKind::Identity), vec![]);
    let cx = sig.type_context();

    for mut ch in later {
        let p = &mut ch.parser;
        let name = p.ident()?;
        p.expect(":")?;
        if ch.keyword == "bind" {
            let spec = parse_spec(&sig, &cx, p, name, ch.line)?;
            p.finish()?;
            if sig.specs.iter().any(|s| s.name == spec.name) {
                return Err(SigError::Duplicate(format!("bind {}", spec.name)));
            }
            sig.specs.push(spec);
        } else {
            let mut vars = VarScope::default();
            let mut s = p.scheme(&cx, &mut vars)?;
            p.finish()?;
            // Prims are closed: quantify whatever was left free.
            for v in s.free_vars() {
                if vars.monadic.contains(&v) {
                    s.monad_vars.push(v);
                } else {
                    s.value_vars.push(v);
                }
            }
            check_value_type(&sig, &s.body, ch.line)?;
            for c in &s.constraints {
                for m in c.parts() {
                    check_monad(&sig, m, ch.line)?;
                }
            }
            if sig.prim(&name).is_some() {
                return Err(SigError::Duplicate(format!("prim {name}")));
            }
            sig.prims.push((name, s));
        }
    }
    if !sig.specs.iter().any(|s| s.triple == crate::syntax::BindConstraint::new(MonadType::Bot, MonadType::Bot, MonadType::Bot)) {
        // `Bot` and its identity bind are always present.
        sig.specs.insert(
            0,
            BindSpec {
                name: "bId".into(),
                vars: vec![],
                phi: vec![],
                triple: crate::syntax::BindConstraint::new(MonadType::Bot, MonadType::Bot, MonadType::Bot),
            },
        );
    }
    Ok(sig)
}

fn parse_theory(p: &mut Parser, line: usize) -> Result<TheoryDescriptor, SigError> {
    let kind = p.ident()?;
    p.expect("{")?;
    let t = match kind.as_str() {
        "lattice" => {
            let mut pairs = Vec::new();
            let mut mentioned = Vec::new();
            while !p.is_sym("}") {
                let mut prev = p.ident()?;
                mentioned.push(prev.clone());
                while p.eat("<") {
                    let next = p.ident()?;
                    mentioned.push(next.clone());
                    pairs.push((prev, next.clone()));
                    prev = next;
                }
                if !p.eat(",") {
                    break;
                }
            }
            TheoryDescriptor::lattice(&pairs, &mentioned).map_err(|e| at(line, e.to_string()))?
        }
        "sets" => {
            let mut atoms: Vec<String> = Vec::new();
            while !p.is_sym("}") {
                let a = p.ident()?;
                if atoms.contains(&a) {
                    return Err(SigError::Duplicate(format!("atom {a}")));
                }
                atoms.push(a);
                if !p.eat(",") {
                    break;
                }
            }
            TheoryDescriptor::Sets { atoms }
        }
        "free" => {
            let mut states = Vec::new();
            while !p.is_sym("}") {
                let name = p.ident()?;
                let mut args = Vec::new();
                if p.eat("(") {
                    loop {
                        args.push(if p.ident()? == "type" { Sort::Type } else { Sort::Index });
                        if !p.eat(",") {
                            break;
                        }
                    }
                    p.expect(")")?;
                }
                states.push(StateCon { name, args });
                if !p.eat(",") {
                    break;
                }
            }
            TheoryDescriptor::Free { states, payloads: vec![] }
        }
        other => return Err(at(line, format!("unknown theory {other}"))),
    };
    p.expect("}")?;
    Ok(t)
}

fn index_term(p: &mut Parser, cx: &TypeContext, vars: &mut VarScope) -> Result<ValueType, SyntaxError> {
    let applied = matches!(p.peek(), Tok::Ident(s) if s.starts_with(char::is_uppercase))
        && !matches!(p.peek_at(1), Tok::Ident(s) if s == "sub");
    if applied {
        p.vapp(cx, vars)
    } else {
        p.vatom(cx, vars)
    }
}

fn parse_index_expr(p: &mut Parser, cx: &TypeContext, vars: &mut VarScope) -> Result<IndexExpr, SigError> {
    let mut parts = vec![IndexExpr::Term(index_term(p, cx, vars)?)];
    while p.eat("+") {
        parts.push(IndexExpr::Term(index_term(p, cx, vars)?));
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { IndexExpr::Union(parts) })
}

fn parse_spec(sig: &Signature, cx: &TypeContext, p: &mut Parser, name: String, line: usize) -> Result<BindSpec, SigError> {
    let mut vars = VarScope::default();
    let mut declared: Option<Vec<u32>> = None;
    if p.eat("forall") {
        let mut vs = Vec::new();
        while !p.is_sym(".") {
            vs.push(vars.var(&p.ident()?));
            p.eat(",");
        }
        p.expect(".")?;
        declared = Some(vs);
    }
    let mut phi = Vec::new();
    if p.has_ahead("=>") {
        loop {
            let lhs = parse_index_expr(p, cx, &mut vars)?;
            let c = if p.eat("<=") || p.eat("sub") {
                TheoryConstraint::Leq(lhs, parse_index_expr(p, cx, &mut vars)?)
            } else if p.eat("=") {
                TheoryConstraint::Eq(lhs, parse_index_expr(p, cx, &mut vars)?)
            } else {
                return Err(p.error("expected '<=', 'sub' or '='").into());
            };
            phi.push(c);
            if !p.eat(",") {
                break;
            }
        }
        p.expect("=>")?;
    }
    let triple = p.constraint(cx, &mut vars)?;
    if !vars.monadic.is_empty() {
        return Err(at(line, format!("bind {name} mentions a monadic variable")));
    }
    let mut sorts: BTreeMap<u32, Sort> = BTreeMap::new();
    for m in triple.parts() {
        check_monad(sig, m, line)?;
        sig.index_var_sorts(m, &mut sorts);
    }
    let mut all: BTreeSet<u32> = triple.free_vars();
    for c in &phi {
        all.extend(c.vars());
    }
    let order: Vec<u32> = match declared {
        Some(vs) => {
            if let Some(v) = all.iter().find(|v| !vs.contains(v)) {
                let n = vars.names.iter().find(|(_, id)| *id == v).map(|(n, _)| n.clone()).unwrap_or_default();
                return Err(at(line, format!("bind {name}: variable {n} is not quantified")));
            }
            vs
        }
        None => all.into_iter().collect(),
    };
    let vars = order.into_iter().map(|v| (v, sorts.get(&v).copied().unwrap_or(Sort::Index))).collect();
    Ok(BindSpec { name, vars, phi, triple })
}

fn check_monad(sig: &Signature, m: &MonadType, line: usize) -> Result<(), SigError> {
    if let MonadType::Ground(c, idx) = m {
        let con = sig.constructor(c).ok_or_else(|| at(line, format!("unknown constructor {c}")))?;
        if con.arity() != idx.len() {
            return Err(at(line, format!("{c} expects {} indexes", con.arity())));
        }
        for (i, s) in idx.iter().zip(&con.sorts) {
            sig.theory.check_sort(i, *s).map_err(|e| at(line, e.to_string()))?;
        }
    }
    Ok(())
}

fn check_value_type(sig: &Signature, t: &ValueType, line: usize) -> Result<(), SigError> {
    match t {
        ValueType::Arrow(d, c) => {
            check_value_type(sig, d, line)?;
            check_monad(sig, &c.monad, line)?;
            check_value_type(sig, &c.value, line)
        }
        ValueType::Con(_, args) => args.iter().try_for_each(|a| check_value_type(sig, a, line)),
        _ => Ok(()),
    }
}

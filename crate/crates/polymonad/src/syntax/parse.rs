use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::lexer::{lex, Tok, Token};
use super::*;

const KEYWORDS: &[&str] = &["let", "letrec", "in", "lam", "if", "then", "else", "true", "false", "forall"];

/// A source file: top-level declarations and an optional main expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub main: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub rec: bool,
    pub bound: Term,
}

impl Program {
    /// Nests the declarations around the main expression (unit when absent).
    pub fn to_term(&self) -> Term {
        let mut t = self.main.clone().unwrap_or(Term::Unit);
        for d in self.decls.iter().rev() {
            t = if d.rec {
                Term::LetRec(d.name.clone(), Box::new(d.bound.clone()), Box::new(t))
            } else {
                Term::Let(d.name.clone(), Box::new(d.bound.clone()), Box::new(t))
            };
        }
        t
    }
}

/// Parses a source file into a term; free identifiers become constants.
pub fn parse_program(src: &str) -> Result<Term, SyntaxError> {
    Ok(Program::parse(src)?.to_term())
}

impl Program {
    pub fn parse(src: &str) -> Result<Program, SyntaxError> {
        let mut p = Parser::new(src)?;
        p.layout = true;
        let mut decls = Vec::new();
        let mut scope = Vec::new();
        loop {
            let rec = p.is_ident("letrec");
            if !(rec || p.is_ident("let")) {
                break;
            }
            // A `let` followed eventually by `in` is an expression, not a declaration.
            let save = p.pos;
            p.pos += 1;
            let name = p.binder()?;
            p.expect("=")?;
            if rec {
                scope.push(name.clone());
            }
            let bound = p.expr(&mut scope)?;
            if p.is_ident("in") {
                if rec {
                    scope.pop();
                }
                p.pos = save;
                break;
            }
            if rec && !bound.is_value() {
                return Err(p.error_at(save, "letrec must bind a value"));
            }
            if !rec {
                scope.push(name.clone());
            }
            decls.push(Decl { name, rec, bound });
        }
        let main = if p.at_eof() { None } else { Some(p.expr(&mut scope)?) };
        if !p.at_eof() {
            return Err(p.error("expected end of input"));
        }
        Ok(Program { decls, main })
    }
}

/// Names the monadic constructors (with arities) the type parser should
/// recognise, plus the full effect set that `Top` abbreviates.
#[derive(Debug, Clone, Default)]
pub struct TypeContext {
    pub monads: BTreeMap<String, usize>,
    pub top: Option<BTreeSet<String>>,
}

pub fn parse_scheme(src: &str, cx: &TypeContext) -> Result<Scheme, SyntaxError> {
    let mut p = Parser::new(src)?;
    let mut vars = VarScope::default();
    let s = p.scheme(cx, &mut vars)?;
    p.finish()?;
    Ok(s)
}

pub fn parse_type(src: &str, cx: &TypeContext) -> Result<ValueType, SyntaxError> {
    let mut p = Parser::new(src)?;
    let mut vars = VarScope::default();
    let t = p.vtype(cx, &mut vars)?;
    p.finish()?;
    Ok(t)
}

/// Maps type-variable names to ids while parsing one scheme.
#[derive(Debug, Default, Clone)]
pub(crate) struct VarScope {
    pub names: BTreeMap<String, Tv>,
    pub monadic: HashSet<Tv>,
    pub next: Tv,
}

impl VarScope {
    pub fn var(&mut self, name: &str) -> Tv {
        if let Some(v) = self.names.get(name) {
            return *v;
        }
        let v = self.next;
        self.next += 1;
        self.names.insert(name.to_string(), v);
        v
    }
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pub pos: usize,
    fresh: usize,
    /// A token in column 1 ends the current top-level declaration.
    layout: bool,
}

fn is_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase())
}

const BASE_TYPES: &[&str] = &["int", "bool", "unit"];

impl Parser {
    pub fn new(src: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser { toks: lex(src)?, pos: 0, fresh: 0, layout: false })
    }

    pub fn from_tokens(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0, fresh: 0, layout: false }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn finish(&self) -> Result<(), SyntaxError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    pub fn error(&self, msg: &str) -> SyntaxError {
        self.error_at(self.pos, msg)
    }

    pub fn error_at(&self, pos: usize, msg: &str) -> SyntaxError {
        let t = &self.toks[pos];
        let found = match &t.tok {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
        };
        SyntaxError { line: t.line, col: t.col, msg: format!("{msg} (found {found})") }
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) || self.is_ident(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{s}'")))
        }
    }

    pub fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    pub fn int(&mut self) -> Result<i64, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error("expected integer")),
        }
    }

    fn binder(&mut self) -> Result<String, SyntaxError> {
        let name = self.ident()?;
        if name == "_" {
            self.fresh += 1;
            return Ok(format!("_{}", self.fresh));
        }
        if name.starts_with('_') {
            return Err(self.error_at(self.pos - 1, "identifiers may not start with '_'"));
        }
        Ok(name)
    }

    // ---- terms ----

    fn expr(&mut self, scope: &mut Vec<String>) -> Result<Term, SyntaxError> {
        if self.is_ident("let") || self.is_ident("letrec") {
            let rec = self.is_ident("letrec");
            let start = self.pos;
            self.pos += 1;
            let x = self.binder()?;
            self.expect("=")?;
            if rec {
                scope.push(x.clone());
            }
            let bound = self.expr(scope)?;
            if rec && !bound.is_value() {
                return Err(self.error_at(start, "letrec must bind a value"));
            }
            self.expect("in")?;
            if !rec {
                scope.push(x.clone());
            }
            let body = self.expr(scope)?;
            scope.pop();
            return Ok(if rec {
                Term::LetRec(x, Box::new(bound), Box::new(body))
            } else {
                Term::Let(x, Box::new(bound), Box::new(body))
            });
        }
        if self.eat("lam") {
            let mut xs = vec![self.binder()?];
            while !self.is_sym(".") {
                xs.push(self.binder()?);
            }
            self.expect(".")?;
            let n = scope.len();
            scope.extend(xs.iter().cloned());
            let mut body = self.expr(scope)?;
            scope.truncate(n);
            for x in xs.into_iter().rev() {
                body = Term::Lam(x, Box::new(body));
            }
            return Ok(body);
        }
        if self.eat("if") {
            let c = self.expr(scope)?;
            self.expect("then")?;
            let t = self.expr(scope)?;
            self.expect("else")?;
            let e = self.expr(scope)?;
            return Ok(Term::If(Box::new(c), Box::new(t), Box::new(e)));
        }
        self.comparison(scope)
    }

    fn comparison(&mut self, scope: &mut Vec<String>) -> Result<Term, SyntaxError> {
        let lhs = self.additive(scope)?;
        for op in [">", "<", "=="] {
            if self.eat(op) {
                let rhs = self.additive(scope)?;
                return Ok(Term::app(Term::app(Term::Const(op.into()), lhs), rhs));
            }
        }
        Ok(lhs)
    }

    fn additive(&mut self, scope: &mut Vec<String>) -> Result<Term, SyntaxError> {
        let mut lhs = self.multiplicative(scope)?;
        loop {
            let op = if self.eat("+") {
                "+"
            } else if self.eat("-") {
                "-"
            } else {
                return Ok(lhs);
            };
            let rhs = self.multiplicative(scope)?;
            lhs = Term::app(Term::app(Term::Const(op.into()), lhs), rhs);
        }
    }

    fn multiplicative(&mut self, scope: &mut Vec<String>) -> Result<Term, SyntaxError> {
        let mut lhs = self.application(scope)?;
        while self.eat("*") {
            let rhs = self.application(scope)?;
            lhs = Term::app(Term::app(Term::Const("*".into()), lhs), rhs);
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        if self.layout && self.toks[self.pos].col == 1 {
            return false;
        }
        match self.peek() {
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()) || s == "true" || s == "false",
            Tok::Int(_) => true,
            Tok::Sym(s) => *s == "(",
            Tok::Eof => false,
        }
    }

    fn application(&mut self, scope: &mut Vec<String>) -> Result<Term, SyntaxError> {
        let mut f = self.atom(scope)?;
        while self.starts_atom() {
            let a = self.atom(scope)?;
            f = Term::app(f, a);
        }
        Ok(f)
    }

    fn atom(&mut self, scope: &mut Vec<String>) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(Term::Int(n))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.pos += 1;
                Ok(Term::Bool(s == "true"))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                if self.eat(")") {
                    return Ok(Term::Unit);
                }
                let e = self.expr(scope)?;
                self.expect(")")?;
                Ok(e)
            }
            _ => {
                let x = self.ident()?;
                if x == "_" {
                    return Err(self.error_at(self.pos - 1, "'_' is only allowed as a binder"));
                }
                Ok(if scope.contains(&x) { Term::Var(x) } else { Term::Const(x) })
            }
        }
    }

    // ---- types ----

    pub(crate) fn scheme(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<Scheme, SyntaxError> {
        let mut quantified = Vec::new();
        if self.eat("forall") {
            while !self.is_sym(".") {
                let n = self.ident()?;
                quantified.push(vars.var(&n));
                self.eat(",");
            }
            self.expect(".")?;
        }
        let mut constraints = Vec::new();
        if self.has_ahead("=>") {
            loop {
                constraints.push(self.constraint(cx, vars)?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("=>")?;
        }
        let body = self.vtype(cx, vars)?;
        let (mut value_vars, mut monad_vars) = (Vec::new(), Vec::new());
        for v in quantified {
            if vars.monadic.contains(&v) {
                monad_vars.push(v);
            } else {
                value_vars.push(v);
            }
        }
        Ok(Scheme { value_vars, monad_vars, constraints, body })
    }

    /// True if `sym` occurs before the end of input outside brackets.
    pub(crate) fn has_ahead(&self, sym: &str) -> bool {
        let mut depth = 0i32;
        for t in &self.toks[self.pos..] {
            match &t.tok {
                Tok::Sym("(") | Tok::Sym("{") => depth += 1,
                Tok::Sym(")") | Tok::Sym("}") => depth -= 1,
                Tok::Sym(s) if *s == sym && depth == 0 => return true,
                _ => {}
            }
        }
        false
    }

    pub(crate) fn constraint(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<BindConstraint, SyntaxError> {
        // `(m1, m2) |> m3` or the morphism shorthand `m1 |> m2`.
        if self.is_sym("(") {
            let save = self.pos;
            self.pos += 1;
            let m1 = self.monad(cx, vars)?;
            if self.eat(",") {
                let m2 = self.monad(cx, vars)?;
                self.expect(")")?;
                self.expect("|>")?;
                let m3 = self.monad(cx, vars)?;
                return Ok(BindConstraint::new(m1, m2, m3));
            }
            self.pos = save;
        }
        let m1 = self.monad(cx, vars)?;
        self.expect("|>")?;
        let m2 = self.monad(cx, vars)?;
        Ok(BindConstraint::morphism(m1, m2))
    }

    pub(crate) fn monad(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<MonadType, SyntaxError> {
        if self.eat("(") {
            let m = self.monad(cx, vars)?;
            self.expect(")")?;
            return Ok(m);
        }
        let start = self.pos;
        let name = self.ident()?;
        if name == "Bot" || name == "Id" {
            return Ok(MonadType::Bot);
        }
        if let Some(&k) = cx.monads.get(&name) {
            let mut idx = Vec::with_capacity(k);
            for _ in 0..k {
                idx.push(self.vatom(cx, vars)?);
            }
            return Ok(MonadType::Ground(name, idx));
        }
        if is_upper(&name) {
            return Err(self.error_at(start, &format!("unknown monad constructor {name}")));
        }
        let v = vars.var(&name);
        vars.monadic.insert(v);
        Ok(MonadType::Var(v))
    }

    pub(crate) fn vtype(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<ValueType, SyntaxError> {
        let lhs = self.vapp(cx, vars)?;
        if self.eat("->") {
            let cod = self.ctype(cx, vars)?;
            return Ok(ValueType::Arrow(Box::new(lhs), Box::new(cod)));
        }
        Ok(lhs)
    }

    fn ctype(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<CompType, SyntaxError> {
        if let Tok::Ident(name) = self.peek().clone() {
            let monadic = name == "Bot"
                || name == "Id"
                || cx.monads.contains_key(&name)
                || (!is_upper(&name)
                    && !BASE_TYPES.contains(&name.as_str())
                    && name != "intref"
                    && self.starts_vatom_at(1));
            if monadic {
                let monad = self.monad(cx, vars)?;
                let value = self.vatom(cx, vars)?;
                return Ok(CompType { monad, value });
            }
        }
        Ok(CompType { monad: MonadType::Bot, value: self.vtype(cx, vars)? })
    }

    fn starts_vatom_at(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()),
            Tok::Sym(s) => *s == "(" || *s == "{",
            _ => false,
        }
    }

    pub(crate) fn vapp(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<ValueType, SyntaxError> {
        if let Tok::Ident(name) = self.peek().clone() {
            if self.starts_vatom_at(1) && !KEYWORDS.contains(&name.as_str()) && name != "Top" {
                self.pos += 1;
                let mut args = Vec::new();
                while self.starts_vatom_at(0) {
                    args.push(self.vatom(cx, vars)?);
                }
                return Ok(ValueType::Con(name, args));
            }
        }
        self.vatom(cx, vars)
    }

    pub(crate) fn vatom(&mut self, cx: &TypeContext, vars: &mut VarScope) -> Result<ValueType, SyntaxError> {
        if self.eat("(") {
            if self.eat(")") {
                return Ok(ValueType::unit());
            }
            let t = self.vtype(cx, vars)?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("{") {
            let mut s = BTreeSet::new();
            while !self.is_sym("}") {
                s.insert(self.ident()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            return Ok(ValueType::Set(s));
        }
        let name = self.ident()?;
        if name == "Top" {
            if let Some(top) = &cx.top {
                return Ok(ValueType::Set(top.clone()));
            }
        }
        if name == "unit" {
            return Ok(ValueType::unit());
        }
        if is_upper(&name) || BASE_TYPES.contains(&name.as_str()) {
            return Ok(ValueType::Con(name, vec![]));
        }
        Ok(ValueType::Var(vars.var(&name)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Term {
        Term::Const(s.into())
    }
    fn v(s: &str) -> Term {
        Term::Var(s.into())
    }

    #[test]
    fn identity() {
        assert_eq!(parse_program("lam x. x").unwrap(), Term::Lam("x".into(), Box::new(v("x"))));
    }

    #[test]
    fn application_is_left_associative() {
        let t = parse_program("lam f. f 1 2").unwrap();
        let body = Term::app(Term::app(v("f"), Term::Int(1)), Term::Int(2));
        assert_eq!(t, Term::Lam("f".into(), Box::new(body)));
    }

    #[test]
    fn go_program() {
        let t = parse_program("let go = lam x. let _ = send x in incr (recv ())").unwrap();
        let Term::Let(name, bound, _) = t else { panic!() };
        assert_eq!(name, "go");
        let Term::Lam(x, body) = *bound else { panic!() };
        assert_eq!(x, "x");
        let Term::Let(_, sent, rest) = *body else { panic!() };
        assert_eq!(*sent, Term::app(c("send"), v("x")));
        assert_eq!(*rest, Term::app(c("incr"), Term::app(c("recv"), Term::Unit)));
    }

    #[test]
    fn operators_are_curried_constants() {
        let t = parse_program("lam a. a + 1 > 0").unwrap();
        let sum = Term::app(Term::app(c("+"), v("a")), Term::Int(1));
        let cmp = Term::app(Term::app(c(">"), sum), Term::Int(0));
        assert_eq!(t, Term::Lam("a".into(), Box::new(cmp)));
    }

    #[test]
    fn letrec_requires_value() {
        let e = parse_program("letrec f = f 1 in f").unwrap_err();
        assert!(e.msg.contains("letrec"), "{e}");
    }

    #[test]
    fn declarations_and_main() {
        let p = Program::parse("let id = lam x. x\nlet k = lam x. lam y. x\nk 1 2").unwrap();
        assert_eq!(p.decls.len(), 2);
        assert!(p.main.is_some());
        let p = Program::parse("let id = lam x. x in id 3").unwrap();
        assert!(p.decls.is_empty());
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_program("let x = in x").unwrap_err();
        assert_eq!((e.line, e.col), (1, 9));
    }

    #[test]
    fn scheme_with_monad_constructor() {
        let mut cx = TypeContext::default();
        cx.monads.insert("IST".into(), 2);
        let s = parse_scheme("forall l. intref l -> IST H l int", &cx).unwrap();
        let l = ValueType::Var(0);
        let expect = ValueType::arrow(
            ValueType::Con("intref".into(), vec![l.clone()]),
            MonadType::ground("IST", vec![ValueType::con("H"), l]),
            ValueType::int(),
        );
        assert_eq!(s.body, expect);
        assert_eq!(s.value_vars, vec![0]);
    }

    #[test]
    fn monad_variables_are_recognised_by_position() {
        let s = parse_scheme("forall a b n1 n2 n3. (Id, n1) |> n2, (Id, n2) |> n3 => (a -> n1 b) -> a -> n3 b", &TypeContext::default())
            .unwrap();
        assert_eq!(s.value_vars.len(), 2);
        assert_eq!(s.monad_vars.len(), 3);
        assert_eq!(s.constraints.len(), 2);
    }
}

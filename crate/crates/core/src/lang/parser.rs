use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigInt;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::interval::{ArithOp, CmpOp};

const KEYWORDS: [&str; 12] =
    ["int", "fn", "if", "else", "while", "assert", "assume", "nondet", "return", "true", "false", "skip"];

pub const ENTRY: &str = "main";

struct CallSite {
    caller: Ident,
    callee: Ident,
    argc: usize,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    check_scope: bool,
    scopes: Vec<Vec<Ident>>,
    declared: HashSet<Ident>,
    locals: Vec<Ident>,
    calls: Vec<CallSite>,
    current_fn: Ident,
}

type PResult<T> = Result<T, ParseError>;

/// Parses a whole program.
///
/// A source that does not start with `fn` is read as the body of `main`,
/// which keeps small examples and tests short.
pub fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser::new(src, true)?;
    let mut functions = Vec::new();
    if p.peek_kw("fn") {
        while !p.at_eof() {
            functions.push(p.function()?);
        }
    } else {
        p.begin_function(ENTRY);
        let body = p.items(None, true)?;
        functions.push(Function { name: ENTRY.into(), params: vec![], locals: std::mem::take(&mut p.locals), body });
    }
    p.check_calls(&functions)?;
    if !functions.iter().any(|f| f.name == ENTRY) {
        return Err(ParseError::MissingEntry);
    }
    Ok(Program { functions, entry: ENTRY.into() })
}

/// Parses a free-standing condition such as `x + y == 5`. Variables need no
/// declaration.
pub fn parse_condition(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src, false)?;
    let c = p.cond()?;
    p.expect_eof()?;
    Ok(c)
}

/// Parses a free-standing arithmetic expression.
pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src, false)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

impl Parser {
    fn new(src: &str, check_scope: bool) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            check_scope,
            scopes: Vec::new(),
            declared: HashSet::new(),
            locals: Vec::new(),
            calls: Vec::new(),
            current_fn: String::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.peek_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.peek_kw(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("unexpected {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PResult<(Ident, usize, usize)> {
        let t = &self.toks[self.pos];
        match &t.tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let out = (s.clone(), t.line, t.col);
                self.pos += 1;
                Ok(out)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn begin_function(&mut self, name: &str) {
        self.current_fn = name.to_string();
        self.scopes = vec![Vec::new()];
        self.declared.clear();
        self.locals.clear();
    }

    fn declare(&mut self, name: &str, line: usize, col: usize) -> PResult<()> {
        if !self.declared.insert(name.to_string()) {
            return Err(ParseError::Redeclared { line, col, name: name.to_string() });
        }
        self.scopes.last_mut().expect("open scope").push(name.to_string());
        Ok(())
    }

    fn check_declared(&self, name: &str, line: usize, col: usize) -> PResult<()> {
        if self.check_scope && !self.scopes.iter().any(|s| s.iter().any(|v| v == name)) {
            return Err(ParseError::Undeclared { line, col, name: name.to_string() });
        }
        Ok(())
    }

    fn function(&mut self) -> PResult<Function> {
        let head = self.toks[self.pos].clone();
        self.expect_kw("fn")?;
        let (name, line, col) = self.ident()?;
        self.begin_function(&name);
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.peek_sym(")") {
            loop {
                let (p, l, c) = self.ident()?;
                self.declare(&p, l, c)?;
                params.push(p);
                if !self.peek_sym(",") {
                    break;
                }
                self.pos += 1;
            }
        }
        self.expect_sym(")")?;
        if name == ENTRY && !params.is_empty() {
            return Err(ParseError::EntryParams { line, col });
        }
        self.expect_sym("{")?;
        let body = self.items(Some("}"), true)?;
        self.expect_sym("}")?;
        let _ = head;
        Ok(Function { name, params, locals: std::mem::take(&mut self.locals), body })
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_sym("{")?;
        self.scopes.push(Vec::new());
        let body = self.items(Some("}"), false)?;
        self.scopes.pop();
        self.expect_sym("}")?;
        Ok(body)
    }

    /// Declarations and statements up to `end` (or end of input).
    fn items(&mut self, end: Option<&str>, top_level: bool) -> PResult<Block> {
        let mut out = Vec::new();
        loop {
            let done = match end {
                Some(e) => self.peek_sym(e),
                None => self.at_eof(),
            };
            if done {
                return Ok(out);
            }
            if self.at_eof() {
                return self.err("unexpected end of input");
            }
            if self.peek_kw("return") {
                if !top_level {
                    return self.err("`return` is only allowed as the last statement of a function");
                }
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(";")?;
                let closes = match end {
                    Some(e) => self.peek_sym(e),
                    None => self.at_eof(),
                };
                if !closes {
                    return self.err("`return` must be the last statement of a function");
                }
                out.push(Stmt::Return(e));
                continue;
            }
            if self.peek_kw("int") {
                self.pos += 1;
                let (name, line, col) = self.ident()?;
                if self.peek_sym("=") {
                    self.pos += 1;
                    let stmt = self.assignment_rhs(name.clone())?;
                    self.declare(&name, line, col)?;
                    out.push(stmt);
                } else {
                    self.expect_sym(";")?;
                    self.declare(&name, line, col)?;
                }
                self.locals.push(name);
                continue;
            }
            out.push(self.stmt()?);
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.peek_kw("if") {
            self.pos += 1;
            self.expect_sym("(")?;
            let cond = self.cond()?;
            self.expect_sym(")")?;
            let then_block = self.block()?;
            let else_block = if self.peek_kw("else") {
                self.pos += 1;
                Some(self.block()?)
            } else {
                None
            };
            return Ok(Stmt::If { cond, then_block, else_block });
        }
        if self.peek_kw("while") {
            self.pos += 1;
            self.expect_sym("(")?;
            let cond = self.cond()?;
            self.expect_sym(")")?;
            let body = self.block()?;
            return Ok(Stmt::While { cond, body });
        }
        for kw in ["assert", "assume"] {
            if self.peek_kw(kw) {
                self.pos += 1;
                self.expect_sym("(")?;
                let c = self.cond()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                return Ok(if kw == "assert" { Stmt::Assert(c) } else { Stmt::Assume(c) });
            }
        }
        if self.peek_kw("skip") {
            self.pos += 1;
            self.expect_sym(";")?;
            return Ok(Stmt::Skip);
        }
        let (name, line, col) = self.ident()?;
        if self.peek_sym("(") {
            let args = self.call_args(&name, line, col)?;
            self.expect_sym(";")?;
            return Ok(Stmt::Call { callee: name, args, result: None });
        }
        self.check_declared(&name, line, col)?;
        self.expect_sym("=")?;
        self.assignment_rhs(name)
    }

    /// Everything after `target =`, including the closing `;`.
    fn assignment_rhs(&mut self, target: Ident) -> PResult<Stmt> {
        let stmt = if self.peek_kw("nondet") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.pos += 1;
            Stmt::Assign { target, rhs: self.nondet()? }
        } else if matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
            && matches!(self.peek_at(1), Tok::Sym("("))
        {
            let (callee, line, col) = self.ident()?;
            let args = self.call_args(&callee, line, col)?;
            Stmt::Call { callee, args, result: Some(target) }
        } else {
            Stmt::Assign { target, rhs: self.expr()? }
        };
        self.expect_sym(";")?;
        Ok(stmt)
    }

    fn nondet(&mut self) -> PResult<Expr> {
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        self.expect_sym("(")?;
        if self.peek_sym(")") {
            self.pos += 1;
            return Ok(Expr::Nondet(None, None));
        }
        let lo = self.signed_int()?;
        self.expect_sym(",")?;
        let hi = self.signed_int()?;
        self.expect_sym(")")?;
        if lo > hi {
            return Err(ParseError::NondetBounds { line, col, lo, hi });
        }
        Ok(Expr::Nondet(Some(lo), Some(hi)))
    }

    fn signed_int(&mut self) -> PResult<BigInt> {
        let negative = self.peek_sym("-");
        if negative {
            self.pos += 1;
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => self.err(format!("expected integer literal, found {}", self.describe())),
        }
    }

    fn call_args(&mut self, callee: &str, line: usize, col: usize) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.peek_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.peek_sym(",") {
                    break;
                }
                self.pos += 1;
            }
        }
        self.expect_sym(")")?;
        self.calls.push(CallSite {
            caller: self.current_fn.clone(),
            callee: callee.to_string(),
            argc: args.len(),
            line,
            col,
        });
        Ok(args)
    }

    fn check_calls(&self, functions: &[Function]) -> PResult<()> {
        let mut arity = BTreeMap::new();
        for f in functions {
            if arity.insert(f.name.clone(), f.params.len()).is_some() {
                return Err(ParseError::DuplicateFunction { name: f.name.clone() });
            }
        }
        let mut graph: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for c in &self.calls {
            match arity.get(&c.callee) {
                None => {
                    return Err(ParseError::UnknownFunction { line: c.line, col: c.col, name: c.callee.clone() })
                }
                Some(&n) if n != c.argc => {
                    return Err(ParseError::ArityMismatch {
                        line: c.line,
                        col: c.col,
                        name: c.callee.clone(),
                        expected: n,
                        found: c.argc,
                    })
                }
                _ => {}
            }
            graph.entry(c.caller.as_str()).or_default().insert(c.callee.as_str());
        }
        if let Some(cycle) = find_cycle(&graph) {
            return Err(ParseError::Recursion { cycle: cycle.join(" -> ") });
        }
        Ok(())
    }

    // ---- conditions ----

    fn cond(&mut self) -> PResult<Expr> {
        let mut lhs = self.conj()?;
        while self.peek_sym("||") {
            self.pos += 1;
            lhs = Expr::or(lhs, self.conj()?);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Expr> {
        let mut lhs = self.negation()?;
        while self.peek_sym("&&") {
            self.pos += 1;
            lhs = Expr::and(lhs, self.negation()?);
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> PResult<Expr> {
        if self.peek_sym("!") {
            self.pos += 1;
            return Ok(Expr::not(self.negation()?));
        }
        self.cond_atom()
    }

    fn cond_atom(&mut self) -> PResult<Expr> {
        if self.peek_kw("true") || self.peek_kw("false") {
            let b = self.peek_kw("true");
            self.pos += 1;
            return Ok(Expr::Bool(b));
        }
        if self.peek_sym("(") {
            // `(cond)` and `(expr) < expr` share a prefix; try the former first.
            let save = self.pos;
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.peek_sym(")") {
                    self.pos += 1;
                    if !self.peek_operator() {
                        return Ok(c);
                    }
                }
            }
            self.pos = save;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.err(format!("expected comparison operator, found {}", self.describe())),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        Ok(Expr::cmp(op, lhs, rhs))
    }

    fn peek_operator(&self) -> bool {
        matches!(self.peek(), Tok::Sym("+" | "-" | "*" | "/" | "==" | "!=" | "<" | "<=" | ">" | ">="))
    }

    // ---- arithmetic ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => ArithOp::Add,
                Tok::Sym("-") => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::arith(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => ArithOp::Mul,
                Tok::Sym("/") => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::arith(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek_sym("-") {
            self.pos += 1;
            // `-3` is a literal; `-(3)` and `-x` are negations.
            if let Tok::Int(v) = self.peek().clone() {
                self.pos += 1;
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::neg(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let (name, line, col) = self.ident()?;
                if self.peek_sym("(") {
                    return self.err(format!("call to `{name}` is only allowed as a statement or assignment"));
                }
                self.check_declared(&name, line, col)?;
                Ok(Expr::Var(name))
            }
            _ => self.err(format!("expected expression, found {}", self.describe())),
        }
    }
}

fn find_cycle<'a>(graph: &BTreeMap<&'a str, BTreeSet<&'a str>>) -> Option<Vec<String>> {
    fn visit<'a>(
        n: &'a str,
        graph: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        stack: &mut Vec<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Option<Vec<String>> {
        if let Some(i) = stack.iter().position(|s| *s == n) {
            let mut cycle: Vec<String> = stack[i..].iter().map(|s| s.to_string()).collect();
            cycle.push(n.to_string());
            return Some(cycle);
        }
        if done.contains(n) {
            return None;
        }
        stack.push(n);
        for m in graph.get(n).into_iter().flatten() {
            if let Some(c) = visit(m, graph, stack, done) {
                return Some(c);
            }
        }
        stack.pop();
        done.insert(n);
        None
    }
    let mut done = BTreeSet::new();
    for n in graph.keys() {
        if let Some(c) = visit(n, graph, &mut Vec::new(), &mut done) {
            return Some(c);
        }
    }
    None
}

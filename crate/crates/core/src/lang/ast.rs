use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::interval::{ArithOp, CmpOp};

pub type Ident = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Arith(ArithOp),
    Cmp(CmpOp),
    And,
    Or,
}

impl BinOp {
    pub const ADD: BinOp = BinOp::Arith(ArithOp::Add);
    pub const SUB: BinOp = BinOp::Arith(ArithOp::Sub);
    pub const MUL: BinOp = BinOp::Arith(ArithOp::Mul);
    pub const DIV: BinOp = BinOp::Arith(ArithOp::Div);

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Arith(op) => op.symbol(),
            BinOp::Cmp(op) => op.symbol(),
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

/// Expressions. Arithmetic and condition sorts share one type; the parser
/// guarantees that boolean operators only occur in condition position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(BigInt),
    Bool(bool),
    Var(Ident),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// A nondeterministic integer, optionally bounded on both sides.
    Nondet(Option<BigInt>, Option<BigInt>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Int(BigInt::from(v))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn arith(op: ArithOp, l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::Arith(op), l, r)
    }

    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::Cmp(op), l, r)
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::And, l, r)
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::Or, l, r)
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Unary(UnOp::Neg, Box::new(e))
    }

    pub fn nondet(lo: i64, hi: i64) -> Expr {
        Expr::Nondet(Some(lo.into()), Some(hi.into()))
    }

    /// True for expressions of the boolean sort.
    pub fn is_condition(&self) -> bool {
        matches!(
            self,
            Expr::Bool(_) | Expr::Unary(UnOp::Not, _) | Expr::Binary(BinOp::Cmp(_) | BinOp::And | BinOp::Or, _, _)
        )
    }

    /// Collects the variables occurring in `self` into `out`.
    pub fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Nondet(..) => {}
        }
    }

    /// Whether evaluation can divide by zero: some divisor is not a non-zero
    /// literal.
    pub fn may_trap(&self) -> bool {
        match self {
            Expr::Binary(BinOp::Arith(ArithOp::Div), l, r) => {
                !matches!(&**r, Expr::Int(v) if *v != BigInt::from(0)) || l.may_trap() || r.may_trap()
            }
            Expr::Binary(_, l, r) => l.may_trap() || r.may_trap(),
            Expr::Unary(_, e) => e.may_trap(),
            _ => false,
        }
    }

    /// Number of `Var` nodes, counting repeated occurrences.
    pub fn var_occurrences(&self) -> usize {
        match self {
            Expr::Var(_) => 1,
            Expr::Unary(_, e) => e.var_occurrences(),
            Expr::Binary(_, l, r) => l.var_occurrences() + r.var_occurrences(),
            _ => 0,
        }
    }
}

/// The set of variables occurring in `e`.
pub fn free_vars(e: &Expr) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    e.collect_vars(&mut out);
    out
}

pub type Block = Vec<Stmt>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign { target: Ident, rhs: Expr },
    Assume(Expr),
    Assert(Expr),
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    Call { callee: Ident, args: Vec<Expr>, result: Option<Ident> },
    /// Only allowed as the last statement of a function body.
    Return(Expr),
    Skip,
}

impl Stmt {
    pub fn assign(target: &str, rhs: Expr) -> Stmt {
        Stmt::Assign { target: target.to_string(), rhs }
    }

    /// The condition guarding this statement, if it has one.
    pub fn condition(&self) -> Option<&Expr> {
        match self {
            Stmt::Assume(c) | Stmt::Assert(c) => Some(c),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => Some(cond),
            _ => None,
        }
    }

    /// Number of statements in this subtree, `self` included.
    pub fn subtree_len(&self) -> usize {
        1 + match self {
            Stmt::If { then_block, else_block, .. } => {
                block_len(then_block) + else_block.as_ref().map_or(0, |b| block_len(b))
            }
            Stmt::While { body, .. } => block_len(body),
            _ => 0,
        }
    }
}

/// Number of statements in a block, nested statements included.
pub fn block_len(block: &[Stmt]) -> usize {
    block.iter().map(Stmt::subtree_len).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Function {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub locals: Vec<Ident>,
    pub body: Block,
}

impl Function {
    /// Parameters followed by locals, in declaration order.
    pub fn variables(&self) -> impl Iterator<Item = &Ident> {
        self.params.iter().chain(self.locals.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub functions: Vec<Function>,
    pub entry: Ident,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn entry_function(&self) -> &Function {
        self.function(&self.entry).expect("entry function exists")
    }

    /// Applies `f` to every expression in the program, in statement pre-order.
    pub fn for_each_expr(&self, mut f: impl FnMut(&Expr)) {
        fn walk(block: &[Stmt], f: &mut impl FnMut(&Expr)) {
            for s in block {
                match s {
                    Stmt::Assign { rhs, .. } => f(rhs),
                    Stmt::Assume(c) | Stmt::Assert(c) | Stmt::Return(c) => f(c),
                    Stmt::If { cond, then_block, else_block } => {
                        f(cond);
                        walk(then_block, f);
                        if let Some(e) = else_block {
                            walk(e, f);
                        }
                    }
                    Stmt::While { cond, body } => {
                        f(cond);
                        walk(body, f);
                    }
                    Stmt::Call { args, .. } => args.iter().for_each(&mut *f),
                    Stmt::Skip => {}
                }
            }
        }
        for func in &self.functions {
            walk(&func.body, &mut f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_examples() {
        let e = Expr::cmp(CmpOp::Lt, Expr::var("x"), Expr::int(10));
        assert_eq!(free_vars(&e), BTreeSet::from(["x".to_string()]));
        assert!(free_vars(&Expr::int(5)).is_empty());
        let e = Expr::and(
            Expr::cmp(CmpOp::Gt, Expr::var("x"), Expr::int(3)),
            Expr::cmp(CmpOp::Lt, Expr::var("y"), Expr::int(10)),
        );
        assert_eq!(free_vars(&e), BTreeSet::from(["x".to_string(), "y".to_string()]));
    }

    #[test]
    fn trap_detection() {
        assert!(!Expr::arith(ArithOp::Div, Expr::var("x"), Expr::int(2)).may_trap());
        assert!(Expr::arith(ArithOp::Div, Expr::var("x"), Expr::int(0)).may_trap());
        assert!(Expr::arith(ArithOp::Div, Expr::var("x"), Expr::var("y")).may_trap());
    }
}

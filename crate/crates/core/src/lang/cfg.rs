//! Control-flow graphs for single functions.
//!
//! Statement `k` in pre-order of the function body becomes node `k`; the
//! synthetic exit node comes last. If and While statements become branch
//! nodes carrying their condition. Rewriting passes rely on this numbering to
//! find the analysis states of a statement without a side table.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Assign { target: Ident, rhs: Expr },
    Assume(Expr),
    Assert(Expr),
    Call { callee: Ident, args: Vec<Expr>, result: Option<Ident> },
    Return(Expr),
    Skip,
    /// Condition of an `if` (`is_loop == false`) or a `while`.
    Branch { cond: Expr, is_loop: bool },
    Exit,
}

impl NodeKind {
    pub fn is_branch(&self) -> bool {
        matches!(self, NodeKind::Branch { .. })
    }

    /// One-line rendering used in dumps.
    pub fn describe(&self) -> String {
        match self {
            NodeKind::Assign { target, rhs } => format!("{target} = {rhs};"),
            NodeKind::Assume(c) => format!("assume({c});"),
            NodeKind::Assert(c) => format!("assert({c});"),
            NodeKind::Call { callee, args, result } => {
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                match result {
                    Some(r) => format!("{r} = {callee}({});", args.join(", ")),
                    None => format!("{callee}({});", args.join(", ")),
                }
            }
            NodeKind::Return(e) => format!("return {e};"),
            NodeKind::Skip => "skip;".into(),
            NodeKind::Branch { cond, is_loop: true } => format!("while ({cond})"),
            NodeKind::Branch { cond, is_loop: false } => format!("if ({cond})"),
            NodeKind::Exit => "exit".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Fallthrough,
    True,
    False,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
}

#[derive(Clone, Debug)]
pub struct Cfg {
    pub function: Ident,
    /// Parameters followed by locals.
    pub variables: Vec<Ident>,
    pub params: Vec<Ident>,
    pub nodes: Vec<NodeKind>,
    pub edges: Vec<Edge>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub loop_heads: BTreeSet<NodeId>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeId) -> &NodeKind {
        &self.nodes[n.0]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn exits(&self) -> BTreeSet<NodeId> {
        BTreeSet::from([self.exit])
    }

    pub fn successors(&self, n: NodeId) -> impl Iterator<Item = &Edge> {
        self.succ[n.0].iter().map(|&i| &self.edges[i])
    }

    pub fn predecessors(&self, n: NodeId) -> impl Iterator<Item = &Edge> {
        self.pred[n.0].iter().map(|&i| &self.edges[i])
    }

    /// Successor along an edge with the given label.
    pub fn successor(&self, n: NodeId, label: EdgeLabel) -> Option<NodeId> {
        self.successors(n).find(|e| e.label == label).map(|e| e.to)
    }

    /// Nodes in reverse post-order of a depth-first walk from the entry.
    pub fn reverse_postorder(&self) -> Vec<NodeId> {
        let mut visited = vec![false; self.len()];
        let mut post = Vec::with_capacity(self.len());
        let mut stack = vec![(self.entry, 0usize)];
        visited[self.entry.0] = true;
        while let Some((n, i)) = stack.pop() {
            let succ = &self.succ[n.0];
            if i < succ.len() {
                stack.push((n, i + 1));
                let m = self.edges[succ[i]].to;
                if !visited[m.0] {
                    visited[m.0] = true;
                    stack.push((m, 0));
                }
            } else {
                post.push(n);
            }
        }
        post.reverse();
        post
    }
}

struct Builder {
    nodes: Vec<NodeKind>,
    edges: Vec<Edge>,
}

type Dangling = Vec<(NodeId, EdgeLabel)>;

impl Builder {
    fn alloc(&mut self, kind: NodeKind) -> NodeId {
        self.nodes.push(kind);
        NodeId(self.nodes.len() - 1)
    }

    fn connect(&mut self, from: &Dangling, to: NodeId) {
        for &(f, label) in from {
            self.edges.push(Edge { from: f, to, label });
        }
    }

    /// Lowers `block`, returning its first node (if any) and the edges that
    /// leave its end.
    fn block(&mut self, block: &[Stmt]) -> (Option<NodeId>, Dangling) {
        let mut first = None;
        let mut pending: Dangling = Vec::new();
        for s in block {
            let (entry, out) = self.stmt(s);
            self.connect(&pending, entry);
            first.get_or_insert(entry);
            pending = out;
        }
        (first, pending)
    }

    fn stmt(&mut self, s: &Stmt) -> (NodeId, Dangling) {
        let kind = match s {
            Stmt::Assign { target, rhs } => NodeKind::Assign { target: target.clone(), rhs: rhs.clone() },
            Stmt::Assume(c) => NodeKind::Assume(c.clone()),
            Stmt::Assert(c) => NodeKind::Assert(c.clone()),
            Stmt::Return(e) => NodeKind::Return(e.clone()),
            Stmt::Skip => NodeKind::Skip,
            Stmt::Call { callee, args, result } => {
                NodeKind::Call { callee: callee.clone(), args: args.clone(), result: result.clone() }
            }
            Stmt::If { cond, then_block, else_block } => {
                let n = self.alloc(NodeKind::Branch { cond: cond.clone(), is_loop: false });
                let mut out = Vec::new();
                let (t_first, t_out) = self.block(then_block);
                match t_first {
                    Some(t) => {
                        self.connect(&vec![(n, EdgeLabel::True)], t);
                        out.extend(t_out);
                    }
                    None => out.push((n, EdgeLabel::True)),
                }
                let (e_first, e_out) = match else_block {
                    Some(b) => self.block(b),
                    None => (None, Vec::new()),
                };
                match e_first {
                    Some(e) => {
                        self.connect(&vec![(n, EdgeLabel::False)], e);
                        out.extend(e_out);
                    }
                    None => out.push((n, EdgeLabel::False)),
                }
                return (n, out);
            }
            Stmt::While { cond, body } => {
                let n = self.alloc(NodeKind::Branch { cond: cond.clone(), is_loop: true });
                let (b_first, b_out) = self.block(body);
                match b_first {
                    Some(b) => {
                        self.connect(&vec![(n, EdgeLabel::True)], b);
                        self.connect(&b_out, n);
                    }
                    None => self.connect(&vec![(n, EdgeLabel::True)], n),
                }
                return (n, vec![(n, EdgeLabel::False)]);
            }
        };
        let n = self.alloc(kind);
        (n, vec![(n, EdgeLabel::Fallthrough)])
    }
}

/// Lowers a function body into its control-flow graph.
pub fn build_cfg(func: &Function) -> Cfg {
    let mut b = Builder { nodes: Vec::new(), edges: Vec::new() };
    let (first, out) = b.block(&func.body);
    let exit = b.alloc(NodeKind::Exit);
    b.connect(&out, exit);
    let n = b.nodes.len();
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for (i, e) in b.edges.iter().enumerate() {
        succ[e.from.0].push(i);
        pred[e.to.0].push(i);
    }
    let mut cfg = Cfg {
        function: func.name.clone(),
        variables: func.variables().cloned().collect(),
        params: func.params.clone(),
        nodes: b.nodes,
        edges: b.edges,
        entry: first.unwrap_or(exit),
        exit,
        loop_heads: BTreeSet::new(),
        succ,
        pred,
    };
    cfg.loop_heads = back_edge_targets(&cfg);
    cfg
}

/// Targets of back edges (edges into a node still on the DFS stack).
pub fn back_edge_targets(cfg: &Cfg) -> BTreeSet<NodeId> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let mut color = vec![Color::White; cfg.len()];
    let mut heads = BTreeSet::new();
    let mut stack = vec![(cfg.entry, 0usize)];
    color[cfg.entry.0] = Color::Grey;
    while let Some((n, i)) = stack.pop() {
        let succ: Vec<NodeId> = cfg.successors(n).map(|e| e.to).collect();
        if i < succ.len() {
            stack.push((n, i + 1));
            let m = succ[i];
            match color[m.0] {
                Color::White => {
                    color[m.0] = Color::Grey;
                    stack.push((m, 0));
                }
                Color::Grey => {
                    heads.insert(m);
                }
                Color::Black => {}
            }
        } else {
            color[n.0] = Color::Black;
        }
    }
    heads
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn cfg_of(src: &str) -> Cfg {
        build_cfg(parse_program(src).unwrap().entry_function())
    }

    #[test]
    fn single_statement() {
        let g = cfg_of("int x; x = 1;");
        assert_eq!(g.len(), 2);
        assert_eq!(g.entry, NodeId(0));
        assert_eq!(g.successor(g.entry, EdgeLabel::Fallthrough), Some(g.exit));
        assert!(g.loop_heads.is_empty());
    }

    #[test]
    fn while_loop_has_back_edge_to_condition() {
        let g = cfg_of("int x; while (x < 10) { x = x + 1; }");
        let head = NodeId(0);
        assert!(g.node(head).is_branch());
        assert_eq!(g.successor(head, EdgeLabel::True), Some(NodeId(1)));
        assert_eq!(g.successor(head, EdgeLabel::False), Some(g.exit));
        assert_eq!(g.successor(NodeId(1), EdgeLabel::Fallthrough), Some(head));
        assert_eq!(g.loop_heads, BTreeSet::from([head]));
    }

    #[test]
    fn if_else_joins_at_common_successor() {
        let g = cfg_of("int x; if (x > 0) { x = 1; } else { x = 2; } x = 3;");
        let t = g.successor(NodeId(0), EdgeLabel::True).unwrap();
        let f = g.successor(NodeId(0), EdgeLabel::False).unwrap();
        assert_eq!((t, f), (NodeId(1), NodeId(2)));
        assert_eq!(g.successor(t, EdgeLabel::Fallthrough), Some(NodeId(3)));
        assert_eq!(g.successor(f, EdgeLabel::Fallthrough), Some(NodeId(3)));
    }

    #[test]
    fn empty_bodies() {
        let g = cfg_of("fn main() { }");
        assert_eq!(g.entry, g.exit);
        let g = cfg_of("int x; while (x < 3) { } if (x > 1) { }");
        assert_eq!(g.successor(NodeId(0), EdgeLabel::True), Some(NodeId(0)));
        assert_eq!(g.successor(NodeId(1), EdgeLabel::True), Some(g.exit));
        assert_eq!(g.successor(NodeId(1), EdgeLabel::False), Some(g.exit));
    }

    #[test]
    fn preorder_numbering_matches_statements() {
        let g = cfg_of("int x; while (x < 3) { if (x > 1) { x = 0; } x = x + 2; } assert(x >= 3);");
        let kinds: Vec<String> = g.nodes.iter().map(|k| k.describe()).collect();
        assert_eq!(kinds, ["while (x < 3)", "if (x > 1)", "x = 0;", "x = x + 2;", "assert(x >= 3);", "exit"]);
        assert_eq!(g.loop_heads, BTreeSet::from([NodeId(0)]));
    }
}

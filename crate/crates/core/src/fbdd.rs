//! Decision-DAG construction over clause sets.
//!
//! [`build_pr`] expands a clause set by repeatedly fixing one variable and
//! memoizing every residual set it meets, so equal residuals become shared
//! nodes. [`build_pr_prime`] does the same over s.l.o. sets produced by
//! [`cra_plus`], either once at the root ([`PrimeMode::Upfront`]) or at every
//! node ([`PrimeMode::PerNode`]).
//!
//! Per-node graphs merge residuals that are equal up to renaming. They decide
//! satisfiability and carry enough information to count models, but they do
//! not compute the original function pointwise.

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnf::{ClauseSet, Residual};
use crate::error::{Error, Result};
use crate::slo::{compact, cra_plus, RenamingMap};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    False,
    True,
    Node(NodeId),
}

impl Edge {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Edge::Node(id) => Some(id),
            _ => None,
        }
    }

    pub fn is_terminal(self) -> bool {
        self.node().is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    /// Variable tested here, in the node's own naming space.
    pub test_var: usize,
    pub lo: Edge,
    pub hi: Edge,
    pub residual_key: Arc<str>,
    /// Number of variables occurring in the node's residual set.
    pub residual_var_count: Option<usize>,
}

/// How a graph was built; decides which analyses are meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Pr,
    Upfront,
    PerNode,
}

impl GraphKind {
    pub fn is_function_preserving(self) -> bool {
        !matches!(self, GraphKind::PerNode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FbddGraph {
    pub nodes: Vec<Node>,
    pub root: Edge,
    pub num_vars: usize,
    pub kind: GraphKind,
}

/// Memo store from canonical residual encodings to built nodes. A key is
/// bound at most once.
#[derive(Clone, Debug, Default)]
pub struct Store {
    map: HashMap<Arc<str>, NodeId>,
}

impl Store {
    pub fn lookup(&self, key: &str) -> Option<NodeId> {
        self.map.get(key).copied()
    }

    pub fn insert(&mut self, key: Arc<str>, id: NodeId) {
        let prev = self.map.insert(key, id);
        assert!(prev.is_none(), "store key rebound");
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderingPolicy {
    /// Smallest variable index occurring in the current residual.
    Canonical,
    /// First listed variable occurring in the current residual.
    Explicit(Vec<usize>),
    /// A seeded random permutation used as an explicit order.
    Random(u64),
}

impl OrderingPolicy {
    fn ranks(&self, num_vars: usize) -> Result<Option<Vec<usize>>> {
        let order = match self {
            OrderingPolicy::Canonical => return Ok(None),
            OrderingPolicy::Explicit(order) => order.clone(),
            OrderingPolicy::Random(seed) => {
                let mut order: Vec<usize> = (0..num_vars).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                order
            }
        };
        let mut rank = vec![usize::MAX; num_vars];
        for (pos, &v) in order.iter().enumerate() {
            if v >= num_vars {
                return Err(Error::Ordering(format!("variable {v} out of range")));
            }
            if rank[v] != usize::MAX {
                return Err(Error::Ordering(format!("variable {v} listed twice")));
            }
            rank[v] = pos;
        }
        if order.len() != num_vars {
            return Err(Error::Ordering(format!(
                "expected a permutation of 0..{num_vars}, got {} entries",
                order.len()
            )));
        }
        Ok(Some(rank))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub unique_nonterminal_nodes: usize,
    pub store_hits: usize,
    pub recursive_calls: usize,
    pub cra_plus_invocations: usize,
    /// Nonterminal nodes plus one leaf per terminal edge, the way
    /// tree-style drawings repeat the 0/1 leaves under every node.
    pub drawn_nodes: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrimeMode {
    Upfront,
    #[default]
    PerNode,
}

struct Builder {
    nodes: Vec<Node>,
    store: Store,
    stats: BuildStats,
    ranks: Option<Vec<usize>>,
    per_node: bool,
}

impl Builder {
    fn new(ranks: Option<Vec<usize>>, per_node: bool) -> Self {
        Builder {
            nodes: Vec::new(),
            store: Store::default(),
            stats: BuildStats::default(),
            ranks,
            per_node,
        }
    }

    fn select(&self, set: &ClauseSet) -> Result<usize> {
        let vars = set.clauses.iter().flat_map(|c| c.vars());
        match &self.ranks {
            None => Ok(vars.min().expect("nonterminal set has a literal")),
            Some(rank) => {
                let v = vars
                    .min_by_key(|&v| rank[v])
                    .expect("nonterminal set has a literal");
                if rank[v] == usize::MAX {
                    return Err(Error::Ordering(format!("variable {v} is not ordered")));
                }
                Ok(v)
            }
        }
    }

    /// Per-node canonical form: CRA+ followed by compaction onto `0..k`.
    fn canonicalize(&mut self, set: ClauseSet) -> Result<(ClauseSet, RenamingMap)> {
        self.stats.cra_plus_invocations += 1;
        let closed = cra_plus(&set)?;
        let (compacted, step) = compact(&closed.set);
        Ok((compacted, closed.map.then(&step)))
    }

    fn child(&mut self, r: Residual) -> Result<Edge> {
        match r {
            Residual::True => Ok(Edge::True),
            Residual::False => Ok(Edge::False),
            Residual::Set(s) => self.build(s),
        }
    }

    fn build(&mut self, set: ClauseSet) -> Result<Edge> {
        let set = if self.per_node {
            self.canonicalize(set)?.0
        } else {
            set
        };
        let key: Arc<str> = set.key().into();
        if let Some(id) = self.store.lookup(&key) {
            self.stats.store_hits += 1;
            return Ok(Edge::Node(id));
        }
        self.stats.recursive_calls += 1;
        let var = self.select(&set)?;
        let hi = self.child(set.assign(var, true)?)?;
        let lo = self.child(set.assign(var, false)?)?;
        let id = self.nodes.len();
        self.nodes.push(Node {
            test_var: var,
            lo,
            hi,
            residual_var_count: Some(set.occurring_var_count()),
            residual_key: key.clone(),
        });
        self.store.insert(key, id);
        Ok(Edge::Node(id))
    }

    fn run(mut self, set: &ClauseSet, kind: GraphKind) -> Result<(FbddGraph, BuildStats)> {
        let root = if set.has_empty_clause() {
            Edge::False
        } else if set.is_empty() {
            Edge::True
        } else {
            self.build(set.clone())?
        };
        let graph = FbddGraph {
            nodes: self.nodes,
            root,
            num_vars: set.num_vars,
            kind,
        };
        let mut stats = self.stats;
        stats.unique_nonterminal_nodes = graph.nodes.len();
        stats.drawn_nodes = graph.drawn_node_count();
        Ok((graph, stats))
    }
}

/// Builds the memoized decision DAG of `s` under `policy`.
pub fn build_pr(s: &ClauseSet, policy: &OrderingPolicy) -> Result<(FbddGraph, BuildStats)> {
    let s = s.normalize();
    let ranks = policy.ranks(s.num_vars)?;
    Builder::new(ranks, false).run(&s, GraphKind::Pr)
}

/// Builds over s.l.o. sets with canonical selection. The returned map takes
/// original variables to the names used at the root.
pub fn build_pr_prime(
    s: &ClauseSet,
    mode: PrimeMode,
) -> Result<(FbddGraph, BuildStats, RenamingMap)> {
    let s = s.normalize();
    match mode {
        PrimeMode::Upfront => {
            let closed = cra_plus(&s)?;
            let (graph, mut stats) =
                Builder::new(None, false).run(&closed.set, GraphKind::Upfront)?;
            stats.cra_plus_invocations = 1;
            Ok((graph, stats, closed.map))
        }
        PrimeMode::PerNode => {
            let mut builder = Builder::new(None, true);
            let map = if s.is_empty() || s.has_empty_clause() {
                RenamingMap::identity(s.occurring_vars())
            } else {
                builder.canonicalize(s.clone())?.1
            };
            builder.stats.cra_plus_invocations = 0;
            let (graph, stats) = builder.run(&s, GraphKind::PerNode)?;
            Ok((graph, stats, map))
        }
    }
}

impl FbddGraph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Reachable nodes, children before parents.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut visited = vec![false; self.nodes.len()];
        let Some(root) = self.root.node() else {
            return order;
        };
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
                continue;
            }
            // A node is marked when expanded, not when pushed, so every
            // parent is emitted after all its children.
            if std::mem::replace(&mut visited[id], true) {
                continue;
            }
            stack.push((id, true));
            let n = &self.nodes[id];
            for e in [n.lo, n.hi] {
                if let Some(c) = e.node() {
                    if !visited[c] {
                        stack.push((c, false));
                    }
                }
            }
        }
        order
    }

    /// Reachable nodes in preorder from the root, `hi` before `lo`.
    pub fn pre_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut visited = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self.root.node().into_iter().collect();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut visited[id], true) {
                continue;
            }
            order.push(id);
            let n = &self.nodes[id];
            for e in [n.lo, n.hi] {
                if let Some(c) = e.node() {
                    if !visited[c] {
                        stack.push(c);
                    }
                }
            }
        }
        order
    }

    fn drawn_node_count(&self) -> usize {
        let leaves: usize = self
            .nodes
            .iter()
            .map(|n| [n.lo, n.hi].iter().filter(|e| e.is_terminal()).count())
            .sum();
        let root_leaf = usize::from(self.root.is_terminal());
        self.nodes.len() + leaves + root_leaf
    }

    /// Follows the graph for a total assignment given in the graph's own
    /// variable names.
    pub fn evaluate(&self, value_of: impl Fn(usize) -> bool) -> bool {
        let mut e = self.root;
        loop {
            match e {
                Edge::True => return true,
                Edge::False => return false,
                Edge::Node(id) => {
                    let n = &self.nodes[id];
                    e = if value_of(n.test_var) { n.hi } else { n.lo };
                }
            }
        }
    }

    /// Whether some root-to-terminal path tests a variable twice.
    pub fn repeats_variable_on_path(&self) -> bool {
        let words = self.num_vars.div_ceil(64).max(1);
        let mut below: Vec<Option<Vec<u64>>> = vec![None; self.nodes.len()];
        for id in self.post_order() {
            let n = &self.nodes[id];
            let mut vars = vec![0u64; words];
            for c in [n.lo, n.hi].into_iter().filter_map(Edge::node) {
                let child = below[c].as_ref().expect("post order");
                for (w, cw) in vars.iter_mut().zip(child) {
                    *w |= cw;
                }
            }
            let (w, b) = (n.test_var / 64, n.test_var % 64);
            if vars[w] >> b & 1 == 1 {
                return true;
            }
            vars[w] |= 1 << b;
            below[id] = Some(vars);
        }
        false
    }

    pub fn to_dot(&self) -> String {
        let ids = self.preorder_ids();
        let mut out = String::from("digraph fbdd {\n  node [shape=record];\n");
        let order = self.pre_order();
        for &id in &order {
            let n = &self.nodes[id];
            let _ = writeln!(
                out,
                "  n{} [label=\"{{x{}|{}}}\"];",
                ids[&id], n.test_var, n.residual_key
            );
        }
        let _ = writeln!(out, "  t0 [shape=box,label=\"0\"];");
        let _ = writeln!(out, "  t1 [shape=box,label=\"1\"];");
        let target = |e: Edge| match e {
            Edge::False => "t0".to_string(),
            Edge::True => "t1".to_string(),
            Edge::Node(c) => format!("n{}", ids[&c]),
        };
        if let Some(r) = self.root.node() {
            let _ = writeln!(out, "  root [shape=point];\n  root -> n{};", ids[&r]);
        } else {
            let _ = writeln!(
                out,
                "  root [shape=point];\n  root -> {};",
                target(self.root)
            );
        }
        for &id in &order {
            let n = &self.nodes[id];
            let _ = writeln!(out, "  n{} -> {};", ids[&id], target(n.hi));
            let _ = writeln!(out, "  n{} -> {} [style=dashed];", ids[&id], target(n.lo));
        }
        out.push_str("}\n");
        out
    }

    fn preorder_ids(&self) -> HashMap<NodeId, usize> {
        self.pre_order()
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect()
    }

    /// JSON with node ids assigned in preorder. Terminal edges are the JSON
    /// literals `true` and `false`.
    pub fn to_json(&self) -> String {
        let ids = self.preorder_ids();
        let edge = |e: Edge| match e {
            Edge::False => JsonEdge::Terminal(false),
            Edge::True => JsonEdge::Terminal(true),
            Edge::Node(c) => JsonEdge::Node(ids[&c]),
        };
        let doc = JsonGraph {
            kind: self.kind,
            num_vars: self.num_vars,
            root: edge(self.root),
            nodes: self
                .pre_order()
                .into_iter()
                .map(|id| {
                    let n = &self.nodes[id];
                    JsonNode {
                        id: ids[&id],
                        var: n.test_var,
                        lo: edge(n.lo),
                        hi: edge(n.hi),
                        residual_key: n.residual_key.to_string(),
                        residual_var_count: n.residual_var_count,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<FbddGraph> {
        let doc: JsonGraph = serde_json::from_str(text).map_err(|e| Error::Graph(e.to_string()))?;
        let count = doc.nodes.len();
        let edge = |e: JsonEdge| -> Result<Edge> {
            match e {
                JsonEdge::Terminal(b) => Ok(if b { Edge::True } else { Edge::False }),
                JsonEdge::Node(id) if id < count => Ok(Edge::Node(id)),
                JsonEdge::Node(id) => Err(Error::Graph(format!("edge to unknown node {id}"))),
            }
        };
        let mut nodes = Vec::with_capacity(count);
        for (pos, n) in doc.nodes.into_iter().enumerate() {
            if n.id != pos {
                return Err(Error::Graph(format!(
                    "node at position {pos} has id {}",
                    n.id
                )));
            }
            nodes.push(Node {
                test_var: n.var,
                lo: edge(n.lo)?,
                hi: edge(n.hi)?,
                residual_key: n.residual_key.into(),
                residual_var_count: n.residual_var_count,
            });
        }
        let graph = FbddGraph {
            nodes,
            root: edge(doc.root)?,
            num_vars: doc.num_vars,
            kind: doc.kind,
        };
        graph.check_acyclic()?;
        Ok(graph)
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.nodes.len()];
        for start in 0..self.nodes.len() {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some(&mut (id, ref mut next)) = stack.last_mut() {
                let n = &self.nodes[id];
                let children = [n.hi, n.lo];
                if *next < 2 {
                    let e = children[*next];
                    *next += 1;
                    if let Some(c) = e.node() {
                        match state[c] {
                            0 => {
                                state[c] = 1;
                                stack.push((c, 0));
                            }
                            1 => return Err(Error::Graph(format!("cycle through node {c}"))),
                            _ => {}
                        }
                    }
                } else {
                    state[id] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}

/// True iff the TRUE terminal is reachable from the root.
pub fn is_sat(g: &FbddGraph) -> bool {
    match g.root {
        Edge::True => true,
        Edge::False => false,
        Edge::Node(_) => {
            let mut sat = vec![false; g.nodes.len()];
            for id in g.post_order() {
                let n = &g.nodes[id];
                sat[id] = [n.lo, n.hi].iter().any(|&e| match e {
                    Edge::True => true,
                    Edge::False => false,
                    Edge::Node(c) => sat[c],
                });
            }
            sat[g.root.node().expect("nonterminal root")]
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum JsonEdge {
    Terminal(bool),
    Node(usize),
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    var: usize,
    lo: JsonEdge,
    hi: JsonEdge,
    residual_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residual_var_count: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    kind: GraphKind,
    num_vars: usize,
    root: JsonEdge,
    nodes: Vec<JsonNode>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(key: &str, n: usize) -> ClauseSet {
        ClauseSet::from_key(key, n).unwrap()
    }

    fn count(key: &str, n: usize, policy: OrderingPolicy) -> usize {
        build_pr(&set(key, n), &policy)
            .unwrap()
            .1
            .unique_nonterminal_nodes
    }

    #[test]
    fn five_variable_counts() {
        assert_eq!(count("0,4;1,2;2,3", 5, OrderingPolicy::Canonical), 10);
        assert_eq!(
            count(
                "0,4;1,2;2,3",
                5,
                OrderingPolicy::Explicit(vec![2, 1, 3, 0, 4])
            ),
            5
        );
        assert_eq!(count("1,2;2,3", 5, OrderingPolicy::Canonical), 4);
        assert_eq!(count("0,4;1,2", 5, OrderingPolicy::Canonical), 6);
        assert_eq!(count("0,1;0,2;3,4", 5, OrderingPolicy::Canonical), 5);
        assert_eq!(count("0,1;0,2", 5, OrderingPolicy::Canonical), 3);
    }

    #[test]
    fn six_variable_counts() {
        let s = set("0,1,!2;1,3,4;!1,5;2,3", 6);
        let (g, stats, _) = build_pr_prime(&s, PrimeMode::PerNode).unwrap();
        assert_eq!(stats.unique_nonterminal_nodes, 6);
        assert!(is_sat(&g));
        let (_, stats) = build_pr(&s, &OrderingPolicy::Canonical).unwrap();
        assert_eq!(stats.unique_nonterminal_nodes, 11);
        assert_eq!(stats.drawn_nodes, 20);
    }

    #[test]
    fn terminal_roots() {
        let (g, stats) = build_pr(&ClauseSet::empty(3), &OrderingPolicy::Canonical).unwrap();
        assert_eq!(g.root, Edge::True);
        assert_eq!(stats.unique_nonterminal_nodes, 0);
        assert!(is_sat(&g));
        let (g, _) = build_pr(&set("0;!0", 1), &OrderingPolicy::Canonical).unwrap();
        assert!(!is_sat(&g));
        let with_empty = ClauseSet::new(vec![Default::default()], 2).unwrap();
        let (g, _) = build_pr(&with_empty, &OrderingPolicy::Canonical).unwrap();
        assert_eq!(g.root, Edge::False);
    }

    #[test]
    fn single_unit() {
        let (g, stats, map) = build_pr_prime(&set("0", 1), PrimeMode::PerNode).unwrap();
        assert_eq!(stats.unique_nonterminal_nodes, 1);
        assert!(map.is_identity());
        let n = &g.nodes[0];
        assert_eq!((n.hi, n.lo), (Edge::True, Edge::False));
    }

    #[test]
    fn explicit_order_validation() {
        let s = set("0,1", 3);
        assert!(build_pr(&s, &OrderingPolicy::Explicit(vec![0, 1])).is_err());
        assert!(build_pr(&s, &OrderingPolicy::Explicit(vec![0, 1, 1])).is_err());
        assert!(build_pr(&s, &OrderingPolicy::Explicit(vec![0, 1, 3])).is_err());
        assert!(build_pr(&s, &OrderingPolicy::Explicit(vec![2, 1, 0])).is_ok());
    }

    #[test]
    fn random_policy_is_deterministic() {
        let s = set("0,4;1,2;2,3", 5);
        let a = build_pr(&s, &OrderingPolicy::Random(7)).unwrap().0;
        let b = build_pr(&s, &OrderingPolicy::Random(7)).unwrap().0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn read_once_on_pr_graphs() {
        let (g, _) = build_pr(&set("0,4;1,2;2,3", 5), &OrderingPolicy::Canonical).unwrap();
        assert!(!g.repeats_variable_on_path());
        let mut looped = g.clone();
        let leaf = looped.post_order()[0];
        let var = looped.nodes[leaf].test_var;
        let root = looped.root.node().unwrap();
        looped.nodes[root].test_var = var;
        assert!(looped.repeats_variable_on_path());
    }

    #[test]
    fn dot_export_single_node() {
        let (g, _) = build_pr(&set("0", 1), &OrderingPolicy::Canonical).unwrap();
        let dot = g.to_dot();
        assert_eq!(dot.matches("[label=\"{").count(), 1);
        assert!(dot.contains("n0 -> t1;"));
        assert!(dot.contains("n0 -> t0 [style=dashed];"));
    }

    #[test]
    fn json_round_trip_and_rejects() {
        let (g, _) = build_pr(&set("0,4;1,2;2,3", 5), &OrderingPolicy::Canonical).unwrap();
        let text = g.to_json();
        let back = FbddGraph::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.nodes.len(), 10);
        let cyclic = r#"{"kind":"pr","num_vars":1,"root":0,"nodes":[{"id":0,"var":0,"lo":0,"hi":true,"residual_key":"0"}]}"#;
        assert!(FbddGraph::from_json(cyclic).is_err());
        let dangling = r#"{"kind":"pr","num_vars":1,"root":3,"nodes":[]}"#;
        assert!(FbddGraph::from_json(dangling).is_err());
    }

    #[test]
    fn store_keys_unique() {
        let (g, _) =
            build_pr(&set("0,1,!2;1,3,4;!1,5;2,3", 6), &OrderingPolicy::Canonical).unwrap();
        let mut keys: Vec<_> = g.nodes.iter().map(|n| n.residual_key.clone()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), g.nodes.len());
    }
}

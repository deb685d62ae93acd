//! Counting, complete-subtree diagnostics, pointwise checks and growth
//! estimation over built graphs.

use std::collections::HashSet;
use std::io;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::cnf::ClauseSet;
use crate::error::{Error, Result};
use crate::fbdd::{Edge, FbddGraph};
use crate::slo::RenamingMap;

pub const MAX_TREE_SEARCH_NODES: usize = 10_000;
pub const MAX_TREE_SEARCH_DEPTH: usize = 20;
pub const MAX_EQUIV_VARS: usize = 20;

/// Number of models of the graph's function over `ambient_n` variables.
///
/// Each node records how many variables its residual mentions, so the
/// count is scaled by the variables that disappear along each edge. This
/// works for per-node renamed graphs too, since only cardinalities matter.
pub fn model_count(g: &FbddGraph, ambient_n: usize) -> Result<BigUint> {
    let vars_of = |id: usize| {
        g.nodes[id]
            .residual_var_count
            .ok_or(Error::MissingVarCount(id))
    };
    let root = match g.root {
        Edge::True => return Ok(BigUint::one() << ambient_n),
        Edge::False => return Ok(BigUint::zero()),
        Edge::Node(id) => id,
    };
    let mut counts: Vec<Option<BigUint>> = vec![None; g.nodes.len()];
    for id in g.post_order() {
        let n = &g.nodes[id];
        let here = vars_of(id)?;
        let mut total = BigUint::zero();
        for e in [n.lo, n.hi] {
            let (c, below) = match e {
                Edge::False => continue,
                Edge::True => (BigUint::one(), 0),
                Edge::Node(c) => (counts[c].clone().expect("post order"), vars_of(c)?),
            };
            let free = here.checked_sub(1 + below).ok_or_else(|| {
                Error::Graph(format!("node {id} has fewer variables than a child"))
            })?;
            total += c << free;
        }
        counts[id] = Some(total);
    }
    let free = ambient_n
        .checked_sub(vars_of(root)?)
        .ok_or_else(|| Error::Graph("root mentions more variables than the ambient N".into()))?;
    Ok(counts[root].take().expect("root counted") << free)
}

/// Upper bound on the depth of any complete binary subtree: terminals have
/// depth 0, a node has `1 + min(depth(lo), depth(hi))`; the maximum over
/// all nodes is returned.
pub fn tree_depth_bound(g: &FbddGraph) -> usize {
    let mut depth = vec![0usize; g.nodes.len()];
    let mut best = 0;
    for id in g.post_order() {
        let n = &g.nodes[id];
        let d = |e: Edge| e.node().map_or(0, |c| depth[c]);
        depth[id] = 1 + d(n.lo).min(d(n.hi));
        best = best.max(depth[id]);
    }
    best
}

/// Whether `2^m - 1` distinct nonterminal nodes form a complete binary tree
/// of depth `m` through lo/hi edges somewhere in the graph.
pub fn exact_complete_tree(g: &FbddGraph, m: usize) -> Result<bool> {
    if g.nodes.len() > MAX_TREE_SEARCH_NODES {
        return Err(Error::SearchGuard {
            nodes: g.nodes.len(),
            limit: MAX_TREE_SEARCH_NODES,
        });
    }
    if m > MAX_TREE_SEARCH_DEPTH {
        return Err(Error::TooLarge {
            what: "complete tree depth",
            value: m,
            limit: MAX_TREE_SEARCH_DEPTH,
        });
    }
    if m == 0 {
        return Ok(true);
    }
    Ok(g.post_order()
        .into_iter()
        .any(|r| complete_tree_at(g, r, m)))
}

fn complete_tree_at(g: &FbddGraph, root: usize, m: usize) -> bool {
    // Each node fixes its two children, so the tree below `root` is forced;
    // only node-disjointness and nonterminal children need checking.
    let mut used = HashSet::from([root]);
    let mut level = vec![root];
    for _ in 1..m {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &id in &level {
            let n = &g.nodes[id];
            for e in [n.lo, n.hi] {
                match e.node() {
                    Some(c) if used.insert(c) => next.push(c),
                    _ => return false,
                }
            }
        }
        level = next;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeReport {
    pub dp_depth_bound: usize,
    /// `None` when the exact search guard was exceeded.
    pub exact_depth: Option<usize>,
}

pub fn tree_report(g: &FbddGraph) -> TreeReport {
    let bound = tree_depth_bound(g);
    let mut exact = Some(0);
    for m in 1..=bound {
        match exact_complete_tree(g, m) {
            Ok(true) => exact = Some(m),
            Ok(false) => break,
            Err(_) => {
                exact = None;
                break;
            }
        }
    }
    TreeReport {
        dp_depth_bound: bound,
        exact_depth: exact,
    }
}

impl TreeReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dp_depth_bound": self.dp_depth_bound,
            "exact_depth": match self.exact_depth {
                Some(d) => serde_json::Value::from(d),
                None => serde_json::Value::from("not computed"),
            },
        })
    }
}

/// Checks, row by row, that the graph computes `s`. `map` takes variables
/// of `s` to the graph's names; pass an identity or empty map for PR graphs.
pub fn function_equiv(g: &FbddGraph, s: &ClauseSet, map: &RenamingMap) -> Result<bool> {
    if !g.kind.is_function_preserving() {
        return Err(Error::NotFunctionPreserving);
    }
    let n = s.num_vars;
    if n > MAX_EQUIV_VARS {
        return Err(Error::TooLarge {
            what: "equivalence check variables",
            value: n,
            limit: MAX_EQUIV_VARS,
        });
    }
    let original = |t: usize| map.inverse(t).unwrap_or(t);
    for r in 0..1u64 << n {
        let bit = |v: usize| v < n && r >> (n - 1 - v) & 1 == 1;
        if g.evaluate(|t| bit(original(t))) != s.eval_with(bit) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub label: String,
    pub n_vars: usize,
    pub node_count: u64,
    pub distance: usize,
    pub growth_factor: f64,
    pub base_estimate: f64,
}

/// One record per consecutive pair: with `size2 / size1 = base^(n2 - n1)`,
/// the base is estimated in log space.
pub fn growth_table(records: &[(String, usize, u64)]) -> Result<Vec<GrowthRecord>> {
    if let Some((label, _, _)) = records.iter().find(|r| r.2 == 0) {
        return Err(Error::Growth(format!("record '{label}' has zero nodes")));
    }
    records
        .windows(2)
        .map(|w| {
            let (prev, cur) = (&w[0], &w[1]);
            if cur.1 <= prev.1 {
                return Err(Error::Growth(format!(
                    "n_vars must increase: '{}' ({}) follows '{}' ({})",
                    cur.0, cur.1, prev.0, prev.1
                )));
            }
            let distance = cur.1 - prev.1;
            let log_growth = (cur.2 as f64).ln() - (prev.2 as f64).ln();
            Ok(GrowthRecord {
                label: cur.0.clone(),
                n_vars: cur.1,
                node_count: cur.2,
                distance,
                growth_factor: cur.2 as f64 / prev.2 as f64,
                base_estimate: (log_growth / distance as f64).exp(),
            })
        })
        .collect()
}

/// Reads `label,n_vars,node_count` rows (header required).
pub fn read_growth_csv(input: impl io::Read) -> Result<Vec<(String, usize, u64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    reader
        .deserialize::<(String, usize, u64)>()
        .map(|r| r.map_err(|e| Error::Growth(e.to_string())))
        .collect()
}

pub fn write_growth_csv(records: &[GrowthRecord], out: impl io::Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "n_vars", "node_count", "distance", "base_estimate"])?;
    for r in records {
        w.write_record([
            r.label.clone(),
            r.n_vars.to_string(),
            r.node_count.to_string(),
            r.distance.to_string(),
            r.base_estimate.to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbdd::{build_pr, build_pr_prime, GraphKind, Node, OrderingPolicy, PrimeMode};

    fn set(key: &str, n: usize) -> ClauseSet {
        ClauseSet::from_key(key, n).unwrap()
    }

    fn canonical(s: &ClauseSet) -> FbddGraph {
        build_pr(s, &OrderingPolicy::Canonical).unwrap().0
    }

    /// Complete tree over 3 variables: a node per (level, prefix).
    fn complete_fixture(depth: usize) -> FbddGraph {
        let mut nodes = Vec::new();
        let mut level: Vec<Edge> = vec![Edge::True; 1 << depth];
        for d in (0..depth).rev() {
            let mut next = Vec::new();
            for pair in level.chunks(2) {
                nodes.push(Node {
                    test_var: d,
                    lo: pair[0],
                    hi: pair[1],
                    residual_key: format!("fixture{}", nodes.len()).into(),
                    residual_var_count: Some(depth - d),
                });
                next.push(Edge::Node(nodes.len() - 1));
            }
            level = next;
        }
        FbddGraph {
            root: level[0],
            nodes,
            num_vars: depth,
            kind: GraphKind::Pr,
        }
    }

    fn chain_fixture(len: usize) -> FbddGraph {
        let mut nodes = Vec::new();
        let mut below = Edge::True;
        for v in (0..len).rev() {
            nodes.push(Node {
                test_var: v,
                lo: Edge::False,
                hi: below,
                residual_key: format!("chain{v}").into(),
                residual_var_count: Some(len - v),
            });
            below = Edge::Node(nodes.len() - 1);
        }
        FbddGraph {
            root: below,
            nodes,
            num_vars: len,
            kind: GraphKind::Pr,
        }
    }

    #[test]
    fn count_trivia() {
        assert_eq!(
            model_count(&canonical(&ClauseSet::empty(3)), 3).unwrap(),
            8u32.into()
        );
        assert_eq!(
            model_count(&canonical(&set("0", 1)), 1).unwrap(),
            1u32.into()
        );
        assert_eq!(
            model_count(&canonical(&set("0,4;1,2;2,3", 5)), 5).unwrap(),
            15u32.into()
        );
    }

    #[test]
    fn count_needs_var_counts() {
        let mut g = canonical(&set("0,1", 2));
        g.nodes[0].residual_var_count = None;
        assert!(matches!(model_count(&g, 2), Err(Error::MissingVarCount(_))));
    }

    #[test]
    fn depth_bounds_on_fixtures() {
        assert_eq!(tree_depth_bound(&canonical(&set("0", 1))), 1);
        let full = complete_fixture(3);
        assert_eq!(full.nodes.len(), 7);
        assert_eq!(tree_depth_bound(&full), 3);
        assert!(exact_complete_tree(&full, 3).unwrap());
        assert!(!exact_complete_tree(&full, 4).unwrap());
        let chain = chain_fixture(5);
        assert_eq!(tree_depth_bound(&chain), 1);
        for m in 2..5 {
            assert!(!exact_complete_tree(&chain, m).unwrap());
        }
        assert_eq!(
            tree_report(&full),
            TreeReport {
                dp_depth_bound: 3,
                exact_depth: Some(3)
            }
        );
    }

    #[test]
    fn shared_children_block_trees() {
        // Both children of the root are the same node.
        let (g, _) = build_pr(&set("0,1;!0,1", 2), &OrderingPolicy::Canonical).unwrap();
        assert!(!exact_complete_tree(&g, 2).unwrap());
    }

    #[test]
    fn equivalence_checks() {
        let s = set("0,4;1,2;2,3", 5);
        let g = canonical(&s);
        assert!(function_equiv(&g, &s, &RenamingMap::default()).unwrap());
        assert!(!function_equiv(
            &canonical(&set("0", 1)),
            &set("!0", 1),
            &RenamingMap::default()
        )
        .unwrap());
        let six = set("0,1,!2;1,3,4;!1,5;2,3", 6);
        let (g, _, map) = build_pr_prime(&six, PrimeMode::Upfront).unwrap();
        assert!(function_equiv(&g, &six, &map).unwrap());
        let (g, _, map) = build_pr_prime(&six, PrimeMode::PerNode).unwrap();
        assert_eq!(
            function_equiv(&g, &six, &map),
            Err(Error::NotFunctionPreserving)
        );
    }

    #[test]
    fn growth_examples() {
        let t = growth_table(&[("4".into(), 12, 50), ("5".into(), 22, 139)]).unwrap();
        assert_eq!(t[0].distance, 10);
        assert!((t[0].growth_factor - 2.78).abs() < 1e-12);
        assert!((t[0].base_estimate - 1.1076).abs() < 1e-3);
        let t =
            growth_table(&[("22".into(), 612, 46489244), ("23".into(), 658, 53104412)]).unwrap();
        assert_eq!(t[0].distance, 46);
        assert!((t[0].growth_factor - 1.142294592).abs() < 1e-8);
        assert!((t[0].base_estimate - 1.003).abs() < 1e-3);
        let t = growth_table(&[("a".into(), 3, 9), ("b".into(), 7, 9)]).unwrap();
        assert_eq!(t[0].base_estimate, 1.0);
        assert!(growth_table(&[("a".into(), 3, 9), ("b".into(), 3, 10)]).is_err());
        assert!(growth_table(&[("a".into(), 3, 0), ("b".into(), 4, 10)]).is_err());
    }

    #[test]
    fn growth_csv_round() {
        let input = "label,n_vars,node_count\n4,12,50\n5,22,139\n";
        let rows = read_growth_csv(input.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_growth_csv(&growth_table(&rows).unwrap(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(
            text.starts_with("label,n_vars,node_count,distance,base_estimate\n5,22,139,10,1.107")
        );
    }

    #[test]
    fn tree_report_json_marks_missing_exact() {
        let r = TreeReport {
            dp_depth_bound: 4,
            exact_depth: None,
        };
        assert_eq!(r.to_json()["exact_depth"], "not computed");
    }
}

//! Connection matrices, the clause renaming algorithm (CRA), the strongly
//! linearly ordered (s.l.o.) conditions and the rename-sort closure CRA+.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use log::warn;
use serde::Serialize;

use crate::cnf::{Clause, ClauseSet};
use crate::error::{Error, Result};

/// Variable-by-clause occurrence matrix; rows in first-occurrence order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionMatrix {
    pub row_vars: Vec<usize>,
    pub cols: usize,
    pub cells: Vec<Vec<bool>>,
}

impl ConnectionMatrix {
    pub fn cell(&self, row: usize, col: usize) -> bool {
        self.cells[row][col]
    }
}

impl fmt::Display for ConnectionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\t")?;
        for c in 0..self.cols {
            write!(f, "C{c}\t")?;
        }
        writeln!(f)?;
        for (r, v) in self.row_vars.iter().enumerate() {
            write!(f, "{v}\t")?;
            for c in 0..self.cols {
                write!(f, "{}\t", if self.cell(r, c) { "True" } else { "False" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A bijection between old and new variable indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RenamingMap {
    forward: BTreeMap<usize, usize>,
    inverse: BTreeMap<usize, usize>,
}

impl RenamingMap {
    pub fn identity(vars: impl IntoIterator<Item = usize>) -> Self {
        RenamingMap::from_pairs(vars.into_iter().map(|v| (v, v))).expect("identity is a bijection")
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = RenamingMap::default();
        for (old, new) in pairs {
            if map.forward.insert(old, new).is_some() || map.inverse.insert(new, old).is_some() {
                return Err(Error::Param(format!(
                    "renaming {old} -> {new} breaks the bijection"
                )));
            }
        }
        Ok(map)
    }

    pub fn forward(&self, old: usize) -> Option<usize> {
        self.forward.get(&old).copied()
    }

    pub fn inverse(&self, new: usize) -> Option<usize> {
        self.inverse.get(&new).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forward.iter().map(|(&a, &b)| (a, b))
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().all(|(a, b)| a == b)
    }

    /// `self` followed by `next`. Variables that `next` does not know keep
    /// the name `self` gave them.
    pub fn then(&self, next: &RenamingMap) -> RenamingMap {
        RenamingMap::from_pairs(
            self.forward
                .iter()
                .map(|(&old, &mid)| (old, next.forward(mid).unwrap_or(mid))),
        )
        .expect("composition of bijections")
    }

    /// JSON object text `{"old": new, ...}`, keys ascending.
    pub fn to_json(&self) -> String {
        let obj: serde_json::Map<String, serde_json::Value> = self
            .forward
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::Value::from(*v)))
            .collect();
        serde_json::to_string(&obj).expect("map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let obj: BTreeMap<String, usize> =
            serde_json::from_str(text).map_err(|e| Error::Param(e.to_string()))?;
        let mut pairs = Vec::with_capacity(obj.len());
        for (k, v) in obj {
            let old = k
                .parse::<usize>()
                .map_err(|_| Error::Param(format!("bad variable key '{k}'")))?;
            pairs.push((old, v));
        }
        RenamingMap::from_pairs(pairs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SloCondition {
    A,
    B,
    C,
    D,
    E,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SloViolation {
    pub condition: SloCondition,
    pub clauses: Vec<usize>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SloReport {
    pub holds: bool,
    pub violations: Vec<SloViolation>,
}

impl SloReport {
    pub fn violates(&self, cond: SloCondition) -> bool {
        self.violations.iter().any(|v| v.condition == cond)
    }
}

pub fn connection_matrix(s: &ClauseSet) -> ConnectionMatrix {
    let row_vars = first_occurrence_order(s);
    let row_of: HashMap<usize, usize> = row_vars.iter().enumerate().map(|(r, &v)| (v, r)).collect();
    let mut cells = vec![vec![false; s.len()]; row_vars.len()];
    for (c, clause) in s.clauses.iter().enumerate() {
        for v in clause.vars() {
            cells[row_of[&v]][c] = true;
        }
    }
    ConnectionMatrix {
        row_vars,
        cols: s.len(),
        cells,
    }
}

fn first_occurrence_order(s: &ClauseSet) -> Vec<usize> {
    let mut seen = vec![false; s.num_vars];
    let mut order = Vec::new();
    for v in s.clauses.iter().flat_map(|c| c.vars()) {
        if !std::mem::replace(&mut seen[v], true) {
            order.push(v);
        }
    }
    order
}

fn apply(s: &ClauseSet, map: &RenamingMap) -> ClauseSet {
    s.rename_with(|v| map.forward(v).expect("map covers occurring vars"))
}

/// One renaming pass: the variable on connection-matrix row `k` becomes `k`.
pub fn cra(s: &ClauseSet) -> (ClauseSet, RenamingMap) {
    let order = first_occurrence_order(s);
    let map = RenamingMap::from_pairs(order.into_iter().enumerate().map(|(k, v)| (v, k)))
        .expect("rows are distinct");
    (apply(s, &map), map)
}

/// Monotone renaming of the occurring variables onto `0..k`.
pub fn compact(s: &ClauseSet) -> (ClauseSet, RenamingMap) {
    let map = RenamingMap::from_pairs(
        s.occurring_vars()
            .into_iter()
            .enumerate()
            .map(|(k, v)| (v, k)),
    )
    .expect("occurring vars are distinct");
    (apply(s, &map), map)
}

pub fn slo_check(s: &ClauseSet) -> SloReport {
    let mut violations = Vec::new();

    for (i, c) in s.clauses.iter().enumerate() {
        if c.literals().windows(2).any(|w| w[0].var >= w[1].var) {
            violations.push(SloViolation {
                condition: SloCondition::A,
                clauses: vec![i],
                message: format!("literals of clause {i} {c} are not strictly ascending"),
            });
        }
    }

    let mut seen = vec![false; s.num_vars];
    let mut max_seen: Option<usize> = None;
    'scan: for (i, c) in s.clauses.iter().enumerate() {
        for v in c.vars() {
            if !std::mem::replace(&mut seen[v], true) {
                if let Some(m) = max_seen.filter(|&m| v < m) {
                    violations.push(SloViolation {
                        condition: SloCondition::B,
                        clauses: vec![i],
                        message: format!(
                            "variable {v} first occurs in clause {i} after larger index {m}"
                        ),
                    });
                    break 'scan;
                }
            }
            max_seen = max_seen.max(Some(v));
        }
    }

    for (i, w) in s.clauses.windows(2).enumerate() {
        let (x, y) = (&w[0], &w[1]);
        match x.len().cmp(&y.len()) {
            Ordering::Greater => violations.push(SloViolation {
                condition: SloCondition::C,
                clauses: vec![i, i + 1],
                message: format!(
                    "clause {} of size {} follows size {}",
                    i + 1,
                    y.len(),
                    x.len()
                ),
            }),
            Ordering::Equal => {
                let (hx, hy) = (head_var(x), head_var(y));
                if hx > hy {
                    violations.push(SloViolation {
                        condition: SloCondition::D,
                        clauses: vec![i, i + 1],
                        message: format!(
                            "clause {} has head {} after head {}",
                            i + 1,
                            fmt_head(hy),
                            fmt_head(hx)
                        ),
                    });
                }
            }
            Ordering::Less => {}
        }
    }

    SloReport {
        holds: violations.is_empty(),
        violations,
    }
}

fn head_var(c: &Clause) -> Option<usize> {
    c.head().map(|l| l.var)
}

fn fmt_head(h: Option<usize>) -> String {
    h.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Stable sort by (size, head variable, full variable sequence).
pub fn slo_sort(s: &ClauseSet) -> ClauseSet {
    let mut clauses = s.clauses.clone();
    clauses.sort_by(|x, y| {
        x.len()
            .cmp(&y.len())
            .then_with(|| head_var(x).cmp(&head_var(y)))
            .then_with(|| x.vars().cmp(y.vars()))
    });
    ClauseSet {
        clauses,
        num_vars: s.num_vars,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CraPlus {
    pub set: ClauseSet,
    pub map: RenamingMap,
    pub iterations: usize,
    /// The rename-sort loop revisited a state; `set` is the smallest
    /// encoding on the cycle and may not be s.l.o.
    pub cycled: bool,
}

/// Alternates [`cra`] and [`slo_sort`] until [`slo_check`] holds.
///
/// Stops early on a repeated state (returning the lexicographically
/// smallest encoding of the cycle) and fails after `10 * M` iterations.
pub fn cra_plus(s: &ClauseSet) -> Result<CraPlus> {
    let mut current = s.clone();
    let mut map = RenamingMap::identity(s.occurring_vars());
    let mut iterations = 0;
    let limit = 10 * s.len().max(1);
    let mut visited: HashMap<String, usize> = HashMap::new();
    while !slo_check(&current).holds {
        if iterations >= limit {
            return Err(Error::NoFixedPoint(limit));
        }
        let (renamed, step) = cra(&current);
        current = slo_sort(&renamed);
        map = map.then(&step);
        iterations += 1;
        let key = current.key();
        if let Some(&start) = visited.get(&key) {
            return Ok(smallest_on_cycle(
                current,
                map,
                iterations,
                iterations - start,
            ));
        }
        visited.insert(key, iterations);
    }
    Ok(CraPlus {
        set: current,
        map,
        iterations,
        cycled: false,
    })
}

fn smallest_on_cycle(
    mut current: ClauseSet,
    mut map: RenamingMap,
    iterations: usize,
    cycle_len: usize,
) -> CraPlus {
    warn!("CRA+ entered a cycle of length {cycle_len} after {iterations} iterations");
    let mut best = (current.key(), current.clone(), map.clone());
    for _ in 1..cycle_len {
        let (renamed, step) = cra(&current);
        current = slo_sort(&renamed);
        map = map.then(&step);
        let key = current.key();
        if key < best.0 {
            best = (key, current.clone(), map.clone());
        }
    }
    CraPlus {
        set: best.1,
        map: best.2,
        iterations,
        cycled: true,
    }
}

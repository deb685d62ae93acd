//! Clause-set data model, substitution semantics and DIMACS interchange.
//!
//! Variables are 0-based indices. DIMACS variable `k` maps to index `k - 1`.

use std::collections::HashSet;
use std::fmt;

use log::{debug, warn};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: usize, positive: bool) -> Self {
        Literal { var, positive }
    }

    pub fn pos(var: usize) -> Self {
        Literal::new(var, true)
    }

    pub fn neg(var: usize) -> Self {
        Literal::new(var, false)
    }

    pub fn negated(self) -> Self {
        Literal::new(self.var, !self.positive)
    }

    /// Truth value of the literal when its variable is set to `value`.
    pub fn value_under(self, value: bool) -> bool {
        value == self.positive
    }

    fn from_dimacs(v: i64) -> Literal {
        Literal::new(v.unsigned_abs() as usize - 1, v > 0)
    }

    fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        write!(f, "{}", self.var)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Clause(pub Vec<Literal>);

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause(literals)
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The head literal: the one with the smallest variable index.
    pub fn head(&self) -> Option<Literal> {
        self.0.iter().copied().min_by_key(|l| l.var)
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|l| l.var)
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.0.iter().any(|l| l.var == var)
    }

    /// Sorts literals by variable and collapses duplicates. Returns `None`
    /// if the clause is a tautology.
    pub fn normalized(&self) -> Option<Clause> {
        let mut lits = self.0.clone();
        lits.sort();
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var == w[1].var) {
            return None;
        }
        Some(Clause(lits))
    }

    /// Whether some literal is true under a total row evaluator.
    pub fn satisfied_by(&self, value_of: impl Fn(usize) -> bool) -> bool {
        self.0.iter().any(|l| l.value_under(value_of(l.var)))
    }

    pub fn key(&self) -> String {
        let mut out = String::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut String) {
        use std::fmt::Write;
        for (i, lit) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{lit}");
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

impl FromIterator<Literal> for Clause {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Self {
        Clause(iter.into_iter().collect())
    }
}

/// An ordered list of clauses over an explicit variable universe `0..num_vars`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClauseSet {
    pub clauses: Vec<Clause>,
    pub num_vars: usize,
}

impl ClauseSet {
    /// Builds a set, checking that every variable lies below `num_vars`.
    pub fn new(clauses: Vec<Clause>, num_vars: usize) -> Result<Self> {
        for c in &clauses {
            for l in c.literals() {
                if l.var >= num_vars {
                    return Err(Error::VarOutOfRange {
                        var: l.var,
                        num_vars,
                    });
                }
            }
        }
        Ok(ClauseSet { clauses, num_vars })
    }

    pub fn empty(num_vars: usize) -> Self {
        ClauseSet {
            clauses: Vec::new(),
            num_vars,
        }
    }

    /// Parses the canonical text encoding (`"!0,1;2,3"`) into a set over
    /// `num_vars` variables. The empty string is the empty set.
    pub fn from_key(key: &str, num_vars: usize) -> Result<Self> {
        let mut clauses = Vec::new();
        if !key.trim().is_empty() {
            for (ci, part) in key.split(';').enumerate() {
                let mut lits = Vec::new();
                for tok in part.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    let (positive, digits) = match tok.strip_prefix('!') {
                        Some(rest) => (false, rest),
                        None => (true, tok),
                    };
                    let var = digits.parse::<usize>().map_err(|_| Error::Clause {
                        line: ci + 1,
                        msg: format!("bad literal '{tok}'"),
                    })?;
                    lits.push(Literal::new(var, positive));
                }
                clauses.push(Clause(lits));
            }
        }
        ClauseSet::new(clauses, num_vars)
    }

    /// Like [`ClauseSet::from_key`] with `num_vars` one past the largest index.
    pub fn from_key_auto(key: &str) -> Result<Self> {
        let probe = ClauseSet::from_key(key, usize::MAX)?;
        let n = probe.max_var().map_or(0, |v| v + 1);
        Ok(ClauseSet {
            num_vars: n,
            ..probe
        })
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.clauses.iter().flat_map(|c| c.vars()).max()
    }

    pub fn min_var(&self) -> Option<usize> {
        self.clauses.iter().flat_map(|c| c.vars()).min()
    }

    /// Variables occurring in the set, ascending.
    pub fn occurring_vars(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_vars];
        for v in self.clauses.iter().flat_map(|c| c.vars()) {
            seen[v] = true;
        }
        seen.iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    pub fn occurring_var_count(&self) -> usize {
        self.occurring_vars().len()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// Canonical text encoding used as memo key: clauses joined by `;`,
    /// literals by `,`, negation written as a `!` prefix.
    pub fn key(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            c.write_key(&mut out);
        }
        out
    }

    /// Sorts literals inside clauses, removes tautologies and duplicate
    /// clauses (first occurrence kept). Clause order is otherwise kept.
    pub fn normalize(&self) -> ClauseSet {
        let mut seen = HashSet::with_capacity(self.clauses.len());
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            match c.normalized() {
                None => debug!("dropping tautological clause {c}"),
                Some(n) => {
                    if seen.insert(n.clone()) {
                        clauses.push(n);
                    } else {
                        debug!("dropping duplicate clause {n}");
                    }
                }
            }
        }
        ClauseSet {
            clauses,
            num_vars: self.num_vars,
        }
    }

    pub fn is_normalized(&self) -> bool {
        *self == self.normalize()
    }

    /// Substitutes `value` for `var`: satisfied clauses disappear and
    /// falsified literals are removed from the rest. Remaining clauses
    /// are deduplicated.
    pub fn assign(&self, var: usize, value: bool) -> Result<Residual> {
        if var >= self.num_vars {
            return Err(Error::VarOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        let mut seen = HashSet::new();
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            let mut satisfied = false;
            let mut lits = Vec::with_capacity(c.len());
            for &l in c.literals() {
                if l.var == var {
                    if l.value_under(value) {
                        satisfied = true;
                        break;
                    }
                } else {
                    lits.push(l);
                }
            }
            if satisfied {
                continue;
            }
            if lits.is_empty() {
                return Ok(Residual::False);
            }
            let c = Clause(lits);
            if seen.insert(c.clone()) {
                clauses.push(c);
            }
        }
        if clauses.is_empty() {
            return Ok(Residual::True);
        }
        Ok(Residual::Set(ClauseSet {
            clauses,
            num_vars: self.num_vars,
        }))
    }

    /// Truth value under an assignment that covers every occurring variable.
    pub fn eval(&self, a: &Assignment) -> Result<bool> {
        for v in self.clauses.iter().flat_map(|c| c.vars()) {
            if a.get(v).is_none() {
                return Err(Error::Unassigned(v));
            }
        }
        Ok(self
            .clauses
            .iter()
            .all(|c| c.satisfied_by(|v| a.get(v).unwrap_or(false))))
    }

    /// Truth value under a total evaluator; no coverage check.
    pub fn eval_with(&self, value_of: impl Fn(usize) -> bool) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(&value_of))
    }

    /// Applies a variable renaming to every literal and re-sorts clauses
    /// internally. `num_vars` is kept unless a renamed index needs more room.
    pub fn rename_with(&self, f: impl Fn(usize) -> usize) -> ClauseSet {
        let clauses: Vec<Clause> = self
            .clauses
            .iter()
            .map(|c| {
                let mut lits: Vec<Literal> = c
                    .literals()
                    .iter()
                    .map(|l| Literal::new(f(l.var), l.positive))
                    .collect();
                lits.sort();
                Clause(lits)
            })
            .collect();
        let need = clauses
            .iter()
            .flat_map(|c| c.vars())
            .max()
            .map_or(0, |v| v + 1);
        ClauseSet {
            clauses,
            num_vars: self.num_vars.max(need),
        }
    }
}

impl fmt::Display for ClauseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for c in &self.clauses {
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

/// A possibly partial mapping from variables to truth values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(num_vars: usize) -> Self {
        Assignment {
            values: vec![None; num_vars],
        }
    }

    pub fn total(values: &[bool]) -> Self {
        Assignment {
            values: values.iter().map(|&b| Some(b)).collect(),
        }
    }

    pub fn set(&mut self, var: usize, value: bool) {
        if var >= self.values.len() {
            self.values.resize(var + 1, None);
        }
        self.values[var] = Some(value);
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.values.get(var).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Outcome of a substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Residual {
    True,
    False,
    Set(ClauseSet),
}

impl Residual {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Residual::Set(_))
    }
}

/// Reads DIMACS CNF. Literals are kept in file order; call
/// [`ClauseSet::normalize`] afterwards if needed.
pub fn parse_dimacs(text: &str) -> Result<ClauseSet> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Header {
                    line: line_no,
                    msg: "duplicate header".into(),
                });
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::Header {
                    line: line_no,
                    msg: format!("expected 'p cnf N M', got '{line}'"),
                });
            }
            let n = parts[2].parse::<usize>().map_err(|_| Error::Header {
                line: line_no,
                msg: format!("bad variable count '{}'", parts[2]),
            })?;
            let m = parts[3].parse::<usize>().map_err(|_| Error::Header {
                line: line_no,
                msg: format!("bad clause count '{}'", parts[3]),
            })?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(Error::Header {
                line: line_no,
                msg: "clause before header".into(),
            });
        };
        for tok in line.split_whitespace() {
            let v = tok.parse::<i64>().map_err(|_| Error::Clause {
                line: line_no,
                msg: format!("bad literal '{tok}'"),
            })?;
            if v == 0 {
                clauses.push(Clause(std::mem::take(&mut current)));
                continue;
            }
            let lit = Literal::from_dimacs(v);
            if lit.var >= n {
                return Err(Error::VarOutOfRange {
                    var: lit.var,
                    num_vars: n,
                });
            }
            current.push(lit);
        }
    }
    let Some((n, m)) = header else {
        return Err(Error::Header {
            line: 0,
            msg: "missing 'p cnf' header".into(),
        });
    };
    if !current.is_empty() {
        warn!("last clause is not 0-terminated; accepting it");
        clauses.push(Clause(current));
    }
    if clauses.len() != m {
        warn!("header announces {m} clauses, found {}", clauses.len());
    }
    Ok(ClauseSet {
        clauses,
        num_vars: n,
    })
}

/// Writes DIMACS CNF, one clause per line.
pub fn serialize_dimacs(s: &ClauseSet) -> String {
    serialize_dimacs_with_comments(s, &[])
}

/// Writes DIMACS CNF preceded by `c` comment lines.
pub fn serialize_dimacs_with_comments(s: &ClauseSet, comments: &[String]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "c {c}");
    }
    let _ = writeln!(out, "p cnf {} {}", s.num_vars, s.clauses.len());
    for c in &s.clauses {
        for l in c.literals() {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

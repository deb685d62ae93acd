//! Brute-force ground truth over the canonical truth table.
//!
//! Row `r` of the table assigns `x_i` the bit `N - 1 - i` of `r`, so `x_0`
//! is the slowest-changing column and `x_{N-1}` alternates every row.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::One;

use crate::cnf::{Assignment, ClauseSet};
use crate::error::{Error, Result};

/// Largest table that is ever materialized.
pub const MAX_TABLE_VARS: usize = 24;
/// Largest variable count for streaming (table-free) counting.
pub const MAX_COUNT_VARS: usize = 30;
pub const MAX_SUBFUNCTION_VARS: usize = 20;

/// Truth value of a formula for every row of the canonical truth table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PatternDomain {
    words: Vec<u64>,
    n: usize,
}

impl PatternDomain {
    fn zeros(n: usize) -> Self {
        let len = 1usize << n;
        PatternDomain {
            words: vec![0; len.div_ceil(64)],
            n,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, row: usize) -> bool {
        self.words[row / 64] >> (row % 64) & 1 == 1
    }

    fn set(&mut self, row: usize) {
        self.words[row / 64] |= 1 << (row % 64);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Bitwise AND of two domains over the same variable count.
    pub fn and(&self, other: &PatternDomain) -> PatternDomain {
        assert_eq!(self.n, other.n, "pattern domains over different N");
        PatternDomain {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
            n: self.n,
        }
    }

    /// The first `len` rows as a '0'/'1' string.
    pub fn prefix_string(&self, len: usize) -> String {
        (0..len.min(self.len()))
            .map(|r| if self.get(r) { '1' } else { '0' })
            .collect()
    }

    /// Whether the domain is `period` repeated back to back.
    pub fn is_tiling_of(&self, period: &str) -> bool {
        let p: Vec<bool> = period.chars().map(|c| c == '1').collect();
        !p.is_empty()
            && self.len().is_multiple_of(p.len())
            && (0..self.len()).all(|r| self.get(r) == p[r % p.len()])
    }

    /// The shortest prefix whose repetition reproduces the whole domain.
    pub fn minimal_period(&self) -> String {
        let mut len = 1;
        while len < self.len() {
            if (0..self.len()).all(|r| self.get(r) == self.get(r % len)) {
                break;
            }
            len *= 2;
        }
        self.prefix_string(len)
    }
}

impl std::fmt::Display for PatternDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.prefix_string(self.len()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlrInfo {
    pub var: usize,
    pub period_length: BigUint,
    pub repetitions: BigUint,
}

/// Assignment for row `r` of the canonical truth table over `n` variables.
pub fn row_assignment(r: u64, n: usize) -> Result<Assignment> {
    if n >= 64 || r >= 1u64 << n {
        return Err(Error::Param(format!("row {r} out of range for N = {n}")));
    }
    let bits: Vec<bool> = (0..n).map(|i| r >> (n - 1 - i) & 1 == 1).collect();
    Ok(Assignment::total(&bits))
}

/// Per-clause bit masks in row coordinates; a row satisfies the clause iff
/// it shares a bit with `pos` or misses a bit of `neg`.
struct RowMasks {
    pos: u64,
    neg: u64,
}

fn row_masks(s: &ClauseSet) -> Vec<RowMasks> {
    let n = s.num_vars;
    s.clauses
        .iter()
        .map(|c| {
            let mut m = RowMasks { pos: 0, neg: 0 };
            for l in c.literals() {
                let bit = 1u64 << (n - 1 - l.var);
                if l.positive {
                    m.pos |= bit;
                } else {
                    m.neg |= bit;
                }
            }
            m
        })
        .collect()
}

fn row_satisfies(masks: &[RowMasks], r: u64) -> bool {
    masks.iter().all(|m| r & m.pos != 0 || !r & m.neg != 0)
}

pub fn pattern_domain(s: &ClauseSet) -> Result<PatternDomain> {
    let n = s.num_vars;
    if n > MAX_TABLE_VARS {
        return Err(Error::TooLarge {
            what: "pattern domain variables",
            value: n,
            limit: MAX_TABLE_VARS,
        });
    }
    let masks = row_masks(s);
    let mut pd = PatternDomain::zeros(n);
    for r in 0..1u64 << n {
        if row_satisfies(&masks, r) {
            pd.set(r as usize);
        }
    }
    Ok(pd)
}

/// One period of the column pattern of `x_i` (or `!x_i`) in a table over
/// `n` variables: `2^(n-i-1)` zeros then as many ones, swapped for a
/// negative literal.
pub fn variable_pattern(i: usize, positive: bool, n: usize) -> Result<String> {
    if i >= n {
        return Err(Error::VarOutOfRange {
            var: i,
            num_vars: n,
        });
    }
    if n - i > 32 {
        return Err(Error::TooLarge {
            what: "pattern half length exponent",
            value: n - i - 1,
            limit: 31,
        });
    }
    let half = 1usize << (n - i - 1);
    let (first, second) = if positive { ('0', '1') } else { ('1', '0') };
    let mut out = String::with_capacity(2 * half);
    out.extend(std::iter::repeat_n(first, half));
    out.extend(std::iter::repeat_n(second, half));
    Ok(out)
}

/// Pattern length repetition of the least-index variable in `s`.
pub fn plr(s: &ClauseSet) -> Result<PlrInfo> {
    let var = s.min_var().ok_or(Error::EmptySet)?;
    let n = s.num_vars;
    Ok(PlrInfo {
        var,
        period_length: BigUint::one() << (n - var),
        repetitions: BigUint::one() << var,
    })
}

/// Number of satisfying total assignments, by enumerating every row.
pub fn brute_count(s: &ClauseSet) -> Result<BigUint> {
    let n = s.num_vars;
    if n > MAX_COUNT_VARS {
        return Err(Error::TooLarge {
            what: "brute-force count variables",
            value: n,
            limit: MAX_COUNT_VARS,
        });
    }
    let masks = row_masks(s);
    let count = (0..1u64 << n).filter(|&r| row_satisfies(&masks, r)).count();
    Ok(BigUint::from(count))
}

/// Number of distinct subfunctions of `s` obtained by fixing the variables
/// in `ys` in every possible way.
pub fn subfunction_count(s: &ClauseSet, ys: &[usize]) -> Result<usize> {
    let n = s.num_vars;
    if ys.len() > MAX_SUBFUNCTION_VARS {
        return Err(Error::TooLarge {
            what: "subset size",
            value: ys.len(),
            limit: MAX_SUBFUNCTION_VARS,
        });
    }
    if n > MAX_TABLE_VARS {
        return Err(Error::TooLarge {
            what: "subfunction variables",
            value: n,
            limit: MAX_TABLE_VARS,
        });
    }
    let mut in_y = vec![false; n];
    for &y in ys {
        if y >= n {
            return Err(Error::VarOutOfRange {
                var: y,
                num_vars: n,
            });
        }
        if std::mem::replace(&mut in_y[y], true) {
            return Err(Error::Param(format!("variable {y} listed twice")));
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| !in_y[v]).collect();
    let masks = row_masks(s);
    let bit = |v: usize| 1u64 << (n - 1 - v);
    let free_rows = 1usize << free.len();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for j in 0..1u64 << ys.len() {
        let base = ys
            .iter()
            .enumerate()
            .filter(|(t, _)| j >> t & 1 == 1)
            .fold(0u64, |acc, (_, &y)| acc | bit(y));
        let mut table = vec![0u64; free_rows.div_ceil(64)];
        for k in 0..free_rows {
            let row = free
                .iter()
                .enumerate()
                .filter(|(t, _)| k >> (free.len() - 1 - t) & 1 == 1)
                .fold(base, |acc, (_, &v)| acc | bit(v));
            if row_satisfies(&masks, row) {
                table[k / 64] |= 1 << (k % 64);
            }
        }
        seen.insert(table);
    }
    Ok(seen.len())
}

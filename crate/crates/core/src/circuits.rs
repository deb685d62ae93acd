//! Instance generators: carry-save multipliers and factorization targets,
//! chain splitting of long clauses into 3CNF, and seeded random kCNF.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{serialize_dimacs_with_comments, Clause, ClauseSet, Literal};
use crate::error::{Error, Result};

pub const MIN_IBITS: usize = 3;
pub const MAX_IBITS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitInstance {
    pub clause_set: ClauseSet,
    /// First factor, LSB first.
    pub input_a_vars: Vec<usize>,
    /// Second factor, LSB first.
    pub input_b_vars: Vec<usize>,
    /// Product bits, LSB first.
    pub output_vars: Vec<usize>,
    /// Indices of the unit clauses that pin the product.
    pub pinned_units: Vec<usize>,
}

impl CircuitInstance {
    /// The multiplication instance underneath a factorization instance.
    pub fn drop_units(&self) -> CircuitInstance {
        let pinned: HashSet<usize> = self.pinned_units.iter().copied().collect();
        let clauses = self
            .clause_set
            .clauses
            .iter()
            .enumerate()
            .filter(|(i, _)| !pinned.contains(i))
            .map(|(_, c)| c.clone())
            .collect();
        CircuitInstance {
            clause_set: ClauseSet {
                clauses,
                num_vars: self.clause_set.num_vars,
            },
            pinned_units: Vec::new(),
            ..self.clone()
        }
    }

    /// DIMACS with comments naming the 1-based input and output variables.
    pub fn to_dimacs(&self) -> String {
        let list = |vars: &[usize]| {
            let contiguous = vars.windows(2).all(|w| w[1] == w[0] + 1);
            match (vars.first(), vars.last()) {
                (Some(f), Some(l)) if contiguous => format!("{}..{}", f + 1, l + 1),
                _ => vars
                    .iter()
                    .map(|v| (v + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            }
        };
        let mut comments = vec![
            format!("inputs_a {}", list(&self.input_a_vars)),
            format!("inputs_b {}", list(&self.input_b_vars)),
            format!("outputs {}", list(&self.output_vars)),
        ];
        if !self.pinned_units.is_empty() {
            comments.push(format!("pinned_units {}", self.pinned_units.len()));
        }
        serialize_dimacs_with_comments(&self.clause_set, &comments)
    }

    pub fn a_width(&self) -> usize {
        self.input_a_vars.len()
    }

    pub fn b_width(&self) -> usize {
        self.input_b_vars.len()
    }
}

/// Gate-level netlist that emits Tseitin clauses of at most three literals.
struct Netlist {
    next_var: usize,
    clauses: Vec<Clause>,
}

impl Netlist {
    fn fresh(&mut self) -> usize {
        self.next_var += 1;
        self.next_var - 1
    }

    fn emit(&mut self, lits: &[Literal]) {
        let c = Clause::new(lits.to_vec())
            .normalized()
            .expect("gate clause");
        self.clauses.push(c);
    }

    fn and(&mut self, a: usize, b: usize) -> usize {
        let z = self.fresh();
        self.emit(&[Literal::pos(a), Literal::neg(z)]);
        self.emit(&[Literal::pos(b), Literal::neg(z)]);
        self.emit(&[Literal::neg(a), Literal::neg(b), Literal::pos(z)]);
        z
    }

    fn or(&mut self, a: usize, b: usize) -> usize {
        let z = self.fresh();
        self.emit(&[Literal::neg(a), Literal::pos(z)]);
        self.emit(&[Literal::neg(b), Literal::pos(z)]);
        self.emit(&[Literal::pos(a), Literal::pos(b), Literal::neg(z)]);
        z
    }

    fn xor(&mut self, a: usize, b: usize) -> usize {
        let z = self.fresh();
        self.emit(&[Literal::pos(a), Literal::pos(b), Literal::neg(z)]);
        self.emit(&[Literal::neg(a), Literal::neg(b), Literal::neg(z)]);
        self.emit(&[Literal::neg(a), Literal::pos(b), Literal::pos(z)]);
        self.emit(&[Literal::pos(a), Literal::neg(b), Literal::pos(z)]);
        z
    }

    /// Returns (sum, carry).
    fn half_adder(&mut self, a: usize, b: usize) -> (usize, usize) {
        (self.xor(a, b), self.and(a, b))
    }

    fn full_adder(&mut self, a: usize, b: usize, c: usize) -> (usize, usize) {
        let t = self.xor(a, b);
        let sum = self.xor(t, c);
        let g = self.and(a, b);
        let p = self.and(t, c);
        (sum, self.or(g, p))
    }

    /// Adds up to three bits of equal weight; `None` carry for one input.
    fn add(&mut self, bits: &[usize]) -> (usize, Option<usize>) {
        match *bits {
            [a] => (a, None),
            [a, b] => {
                let (s, c) = self.half_adder(a, b);
                (s, Some(c))
            }
            [a, b, c] => {
                let (s, c) = self.full_adder(a, b, c);
                (s, Some(c))
            }
            _ => unreachable!("adder with {} inputs", bits.len()),
        }
    }
}

/// Carry-save array multiplier for an `(ibits - 1)`-bit by
/// `ceil(ibits / 2)`-bit product.
///
/// Inputs come first (`a` then `b`); gate outputs follow in creation order,
/// row by row. Each row ANDs one bit of `b` with `a` and folds the partial
/// products into the running sum and carry vectors without propagating
/// carries; a ripple-carry adder merges the two vectors at the end.
pub fn gen_multiplier(ibits: usize) -> Result<CircuitInstance> {
    if !(MIN_IBITS..=MAX_IBITS).contains(&ibits) {
        return Err(Error::Param(format!(
            "ibits must lie in {MIN_IBITS}..={MAX_IBITS}, got {ibits}"
        )));
    }
    let n = ibits - 1;
    let m = ibits.div_ceil(2);
    let width = n + m;
    let a: Vec<usize> = (0..n).collect();
    let b: Vec<usize> = (n..n + m).collect();
    let mut net = Netlist {
        next_var: n + m,
        clauses: Vec::new(),
    };

    // Indexed by weight.
    let mut sum: Vec<Option<usize>> = vec![None; width + 1];
    let mut carry: Vec<Option<usize>> = vec![None; width + 1];
    for (j, &aj) in a.iter().enumerate() {
        sum[j] = Some(net.and(aj, b[0]));
    }
    for (i, &bi) in b.iter().enumerate().skip(1) {
        let pp: Vec<usize> = a.iter().map(|&aj| net.and(aj, bi)).collect();
        let mut next_carry = vec![None; width + 1];
        for w in i..i + n {
            let bits: Vec<usize> = [Some(pp[w - i]), sum[w], carry[w]]
                .into_iter()
                .flatten()
                .collect();
            let (s, c) = net.add(&bits);
            sum[w] = Some(s);
            next_carry[w + 1] = c;
        }
        carry = next_carry;
    }

    let mut ripple: Option<usize> = None;
    for w in m..width {
        let bits: Vec<usize> = [sum[w], carry[w], ripple].into_iter().flatten().collect();
        if bits.is_empty() {
            return Err(Error::Param(format!("no signal at product weight {w}")));
        }
        let (s, c) = net.add(&bits);
        sum[w] = Some(s);
        ripple = c;
    }
    let output_vars = sum[..width]
        .iter()
        .map(|s| s.expect("every product weight is driven"))
        .collect();

    let num_vars = net.next_var;
    Ok(CircuitInstance {
        clause_set: ClauseSet {
            clauses: net.clauses,
            num_vars,
        },
        input_a_vars: a,
        input_b_vars: b,
        output_vars,
        pinned_units: Vec::new(),
    })
}

/// Multiplier plus one unit clause per product bit pinning it to `target`.
pub fn gen_factorization(ibits: usize, target: u64) -> Result<CircuitInstance> {
    let mut inst = gen_multiplier(ibits)?;
    let width = inst.output_vars.len();
    if width < 64 && target >> width != 0 {
        return Err(Error::Param(format!(
            "target {target} does not fit in {width} product bits"
        )));
    }
    for (k, &v) in inst.output_vars.iter().enumerate() {
        inst.pinned_units.push(inst.clause_set.clauses.len());
        let bit = k < 64 && target >> k & 1 == 1;
        inst.clause_set
            .clauses
            .push(Clause::new(vec![Literal::new(v, bit)]));
    }
    Ok(inst)
}

/// Chain-splits a clause longer than three literals using fresh variables
/// `fresh_start, fresh_start + 1, ...`:
/// `(l1 l2 y1)(!y1 l3 y2) ... (!y_{k-3} l_{k-1} l_k)`.
pub fn split_to_3cnf(c: &Clause, fresh_start: usize) -> Result<Vec<Clause>> {
    let lits = c.literals();
    let k = lits.len();
    if k == 0 {
        return Err(Error::EmptyClause);
    }
    if k <= 3 {
        return Ok(vec![c.clone()]);
    }
    let y = |j: usize| fresh_start + j - 1;
    let mut out = Vec::with_capacity(k - 2);
    out.push(Clause::new(vec![lits[0], lits[1], Literal::pos(y(1))]));
    for (j, &l) in lits.iter().enumerate().take(k - 2).skip(2) {
        out.push(Clause::new(vec![
            Literal::neg(y(j - 1)),
            l,
            Literal::pos(y(j)),
        ]));
    }
    out.push(Clause::new(vec![
        Literal::neg(y(k - 3)),
        lits[k - 2],
        lits[k - 1],
    ]));
    Ok(out)
}

/// Splits every long clause of `s`, allocating fresh variables after
/// `s.num_vars`. The result is normalized.
pub fn to_3cnf(s: &ClauseSet) -> Result<ClauseSet> {
    let mut next = s.num_vars;
    let mut clauses = Vec::new();
    for c in &s.clauses {
        let parts = split_to_3cnf(c, next)?;
        next += c.len().saturating_sub(3);
        clauses.extend(parts);
    }
    Ok(ClauseSet {
        clauses,
        num_vars: next,
    }
    .normalize())
}

pub const MAX_RANDOM_VARS: usize = 30;

/// `m` distinct clauses of `k` distinct variables each, polarities by fair
/// coin, deterministic in `seed`. Returned normalized.
pub fn gen_random_kcnf(n: usize, m: usize, k: usize, seed: u64) -> Result<ClauseSet> {
    if k == 0 || k > n {
        return Err(Error::Param(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if n > MAX_RANDOM_VARS {
        return Err(Error::TooLarge {
            what: "random instance variables",
            value: n,
            limit: MAX_RANDOM_VARS,
        });
    }
    let distinct = binomial(n, k).saturating_mul(1u128 << k);
    if m as u128 > distinct {
        return Err(Error::Param(format!(
            "only {distinct} distinct {k}-clauses exist over {n} variables"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let lits: Vec<Literal> = sample(&mut rng, n, k)
            .into_iter()
            .map(|v| Literal::new(v, rng.gen_bool(0.5)))
            .collect();
        let c = Clause::new(lits).normalized().expect("distinct variables");
        if seen.insert(c.clone()) {
            clauses.push(c);
        }
    }
    Ok(ClauseSet {
        clauses,
        num_vars: n,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

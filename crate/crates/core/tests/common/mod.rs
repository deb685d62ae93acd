#![allow(dead_code)]

use patsat::circuits::{gen_random_kcnf, CircuitInstance};
use patsat::{Clause, ClauseSet, Literal};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded random 2CNF or 3CNF with `n` in 3..=12.
pub fn small_instance(seed: u64) -> ClauseSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = if seed.is_multiple_of(2) { 2 } else { 3 };
    let n = rng.gen_range(k.max(3)..=12);
    let distinct = if k == 2 {
        2 * n * (n - 1)
    } else {
        4 * n * (n - 1) * (n - 2) / 3
    };
    let m = rng.gen_range(1..=(3 * n).min(30).min(distinct));
    gen_random_kcnf(n, m, k, seed).unwrap()
}

pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

/// Clause set with clause lengths in 1..=6 over `n` variables.
pub fn mixed_width_instance(seed: u64, n: usize, m: usize) -> ClauseSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..m)
        .map(|_| {
            let k = rng.gen_range(1..=6usize.min(n));
            let mut vars: Vec<usize> = (0..n).collect();
            vars.shuffle(&mut rng);
            vars[..k]
                .iter()
                .map(|&v| Literal::new(v, rng.gen_bool(0.5)))
                .collect::<Clause>()
        })
        .collect();
    ClauseSet::new(clauses, n).unwrap().normalize()
}

/// Unit propagation from a partial assignment. Returns `None` on conflict,
/// otherwise the (possibly still partial) assignment at the fixed point.
pub fn propagate(s: &ClauseSet, fixed: &[(usize, bool)]) -> Option<Vec<Option<bool>>> {
    let mut val: Vec<Option<bool>> = vec![None; s.num_vars];
    for &(v, b) in fixed {
        if val[v].is_some_and(|x| x != b) {
            return None;
        }
        val[v] = Some(b);
    }
    loop {
        let mut changed = false;
        for c in &s.clauses {
            let mut open = None;
            let mut open_count = 0;
            let mut satisfied = false;
            for l in c.literals() {
                match val[l.var] {
                    Some(x) if x == l.positive => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open = Some(*l);
                        open_count += 1;
                    }
                }
            }
            if satisfied {
                continue;
            }
            match open_count {
                0 => return None,
                1 => {
                    let l = open.unwrap();
                    val[l.var] = Some(l.positive);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Some(val);
        }
    }
}

pub fn bits_of(value: u64, vars: &[usize]) -> Vec<(usize, bool)> {
    vars.iter()
        .enumerate()
        .map(|(k, &v)| (v, value >> k & 1 == 1))
        .collect()
}

/// Runs the circuit on inputs `(a, b)` by propagation. Returns the product
/// read off the output bits, or `None` if propagation conflicts or leaves a
/// variable open.
pub fn simulate(inst: &CircuitInstance, a: u64, b: u64) -> Option<u64> {
    let mut fixed = bits_of(a, &inst.input_a_vars);
    fixed.extend(bits_of(b, &inst.input_b_vars));
    let val = propagate(&inst.clause_set, &fixed)?;
    if val.iter().any(Option::is_none) {
        return None;
    }
    let total: Vec<bool> = val.into_iter().map(Option::unwrap).collect();
    if !inst.clause_set.eval_with(|v| total[v]) {
        return None;
    }
    Some(
        inst.output_vars
            .iter()
            .enumerate()
            .map(|(k, &v)| u64::from(total[v]) << k)
            .sum(),
    )
}

mod common;

use common::{mixed_width_instance, random_permutation, simulate, small_instance};
use patsat::analysis::{exact_complete_tree, function_equiv, model_count, tree_depth_bound};
use patsat::circuits::{gen_factorization, gen_multiplier, gen_random_kcnf, to_3cnf};
use patsat::oracle::{brute_count, pattern_domain};
use patsat::slo::{cra, slo_check};
use patsat::*;
use proptest::prelude::*;

fn arb_clause_set() -> impl Strategy<Value = ClauseSet> {
    (1usize..=10).prop_flat_map(|n| {
        let lit = (0..n, any::<bool>()).prop_map(|(v, p)| Literal::new(v, p));
        let clause = prop::collection::vec(lit, 1..=4).prop_map(Clause::new);
        prop::collection::vec(clause, 0..12).prop_map(move |cs| ClauseSet::new(cs, n).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dimacs_round_trip(s in arb_clause_set()) {
        let s = s.normalize();
        prop_assert_eq!(parse_dimacs(&serialize_dimacs(&s)).unwrap(), s);
    }

    #[test]
    fn normalize_is_idempotent_and_preserves_truth(s in arb_clause_set()) {
        let once = s.normalize();
        prop_assert_eq!(once.normalize(), once.clone());
        prop_assert_eq!(pattern_domain(&once).unwrap(), pattern_domain(&s).unwrap());
    }

    #[test]
    fn assign_matches_fixed_evaluation(s in arb_clause_set(), var_seed in any::<usize>(), value in any::<bool>()) {
        let s = s.normalize();
        let var = var_seed % s.num_vars;
        let residual = s.assign(var, value).unwrap();
        let n = s.num_vars;
        for r in 0..1u64 << n {
            let bit = |v: usize| if v == var { value } else { r >> (n - 1 - v) & 1 == 1 };
            let expected = s.eval_with(bit);
            let got = match &residual {
                Residual::True => true,
                Residual::False => false,
                Residual::Set(rest) => {
                    prop_assert!(!rest.contains_var_check(var));
                    rest.eval_with(bit)
                }
            };
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn cra_preserves_count_up_to_renaming(s in arb_clause_set()) {
        let s = s.normalize();
        let (renamed, map) = cra(&s);
        prop_assert_eq!(brute_count(&renamed).unwrap(), brute_count(&s).unwrap());
        let back = renamed.rename_with(|v| map.inverse(v).unwrap());
        prop_assert_eq!(back, s);
    }

    #[test]
    fn graph_json_round_trip(s in arb_clause_set(), seed in any::<u64>()) {
        let (g, _) = build_pr(&s, &OrderingPolicy::Random(seed)).unwrap();
        let text = g.to_json();
        prop_assert_eq!(FbddGraph::from_json(&text).unwrap().to_json(), text);
    }
}

trait ContainsVar {
    fn contains_var_check(&self, var: usize) -> bool;
}

impl ContainsVar for ClauseSet {
    fn contains_var_check(&self, var: usize) -> bool {
        self.clauses.iter().any(|c| c.contains_var(var))
    }
}

#[test]
fn cra_plus_results_are_slo_and_closed() {
    for seed in 0..500 {
        let s = small_instance(seed);
        let out = cra_plus(&s).unwrap();
        assert!(!out.cycled, "seed {seed}");
        assert!(slo_check(&out.set).holds, "seed {seed}");
        assert_eq!(brute_count(&out.set).unwrap(), brute_count(&s).unwrap());
        let again = cra_plus(&out.set).unwrap();
        assert_eq!(again.set, out.set);
        assert_eq!(again.iterations, 0);
        let back = out.set.rename_with(|v| out.map.inverse(v).unwrap());
        assert_eq!(back.normalize().clauses.len(), s.len());
        assert_eq!(pattern_domain(&back).unwrap(), pattern_domain(&s).unwrap());
    }
}

#[test]
fn decisions_and_counts_agree_with_oracle() {
    for seed in 0..200 {
        let s = small_instance(seed);
        let n = s.num_vars;
        let expected = brute_count(&s).unwrap();
        let policies = [
            OrderingPolicy::Canonical,
            OrderingPolicy::Explicit(random_permutation(n, seed)),
            OrderingPolicy::Random(seed),
        ];
        for p in &policies {
            let (g, _) = build_pr(&s, p).unwrap();
            assert_eq!(is_sat(&g), expected > 0u32.into(), "seed {seed} {p:?}");
            assert_eq!(model_count(&g, n).unwrap(), expected, "seed {seed} {p:?}");
            assert!(!g.repeats_variable_on_path());
            assert!(function_equiv(&g, &s, &RenamingMap::default()).unwrap());
        }
        for mode in [PrimeMode::Upfront, PrimeMode::PerNode] {
            let (g, _, map) = build_pr_prime(&s, mode).unwrap();
            assert_eq!(is_sat(&g), expected > 0u32.into(), "seed {seed} {mode:?}");
            assert_eq!(
                model_count(&g, n).unwrap(),
                expected,
                "seed {seed} {mode:?}"
            );
            if mode == PrimeMode::Upfront {
                assert!(!g.repeats_variable_on_path());
                assert!(function_equiv(&g, &s, &map).unwrap());
            }
        }
    }
}

#[test]
fn builds_are_deterministic() {
    for seed in 0..30 {
        let s = small_instance(seed);
        let a = build_pr_prime(&s, PrimeMode::PerNode).unwrap();
        let b = build_pr_prime(&s, PrimeMode::PerNode).unwrap();
        assert_eq!(a.0.to_json(), b.0.to_json());
        assert_eq!(a.1, b.1);
        let a = build_pr(&s, &OrderingPolicy::Canonical).unwrap().0;
        let b = build_pr(&s, &OrderingPolicy::Canonical).unwrap().0;
        assert_eq!(a.to_dot(), b.to_dot());
    }
}

#[test]
fn store_hits_point_at_existing_nodes() {
    for seed in 0..50 {
        let s = small_instance(seed);
        let (g, stats) = build_pr(&s, &OrderingPolicy::Canonical).unwrap();
        let in_edges: usize = g
            .nodes
            .iter()
            .map(|n| [n.lo, n.hi].iter().filter(|e| !e.is_terminal()).count())
            .sum();
        let root_edge = usize::from(!g.root.is_terminal());
        // Every nonterminal node except the root is created by exactly one
        // edge; the rest are store hits.
        assert_eq!(in_edges + root_edge, g.nodes.len() + stats.store_hits);
        assert_eq!(stats.unique_nonterminal_nodes, g.nodes.len());
    }
}

#[test]
fn depth_bound_is_sound() {
    for seed in 0..100 {
        let s = small_instance(seed);
        let (g, _) = build_pr(&s, &OrderingPolicy::Canonical).unwrap();
        let bound = tree_depth_bound(&g);
        for m in bound + 1..bound + 3 {
            assert!(!exact_complete_tree(&g, m).unwrap());
        }
        if bound > 0 {
            assert!(exact_complete_tree(&g, 1).unwrap());
        }
    }
}

#[test]
fn three_cnf_split_is_equisatisfiable() {
    let mut unsat = 0;
    for seed in 0..200u64 {
        let n = 3 + (seed % 6) as usize;
        let m = 3 + (seed % 7) as usize;
        let s = mixed_width_instance(seed, n, m);
        let t = to_3cnf(&s).unwrap();
        if t.num_vars > 22 {
            continue;
        }
        assert!(t.clauses.iter().all(|c| c.len() <= 3));
        let (a, b) = (brute_count(&s).unwrap(), brute_count(&t).unwrap());
        assert_eq!(a > 0u32.into(), b > 0u32.into(), "seed {seed}");
        unsat += usize::from(a == 0u32.into());
    }
    assert!(unsat > 0, "corpus should contain unsatisfiable sets");
}

#[test]
fn small_multipliers_multiply() {
    for ibits in 3..=5 {
        let inst = gen_multiplier(ibits).unwrap();
        for a in 0..1u64 << inst.a_width() {
            for b in 0..1u64 << inst.b_width() {
                assert_eq!(simulate(&inst, a, b), Some(a * b), "ibits {ibits}: {a}*{b}");
            }
        }
    }
}

#[test]
fn factorization_models_are_factor_pairs() {
    // ibits 4: a < 8, b < 4. Count models of the pinned instance and
    // compare with the number of factor pairs of the target.
    for target in [0u64, 1, 6, 12, 21, 23, 31] {
        let inst = gen_factorization(4, target).unwrap();
        let pairs = (0..8u64)
            .flat_map(|a| (0..4u64).map(move |b| (a, b)))
            .filter(|&(a, b)| a * b == target)
            .count();
        assert_eq!(
            brute_count(&inst.clause_set).unwrap(),
            pairs.into(),
            "target {target}"
        );
        let (g, _, _) = build_pr_prime(&inst.clause_set, PrimeMode::PerNode).unwrap();
        assert_eq!(is_sat(&g), pairs > 0);
    }
}

#[test]
fn random_sets_agree_with_pr_on_satisfiability() {
    for seed in 0..40 {
        let s = gen_random_kcnf(8, 20, 3, seed).unwrap();
        let (g, _) = build_pr(&s, &OrderingPolicy::Canonical).unwrap();
        assert_eq!(is_sat(&g), brute_count(&s).unwrap() > 0u32.into());
    }
}

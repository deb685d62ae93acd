//! Pattern-oriented SAT pipeline: clause renaming into strongly linearly
//! ordered (s.l.o.) form, FBDD construction by memoized variable
//! instantiation, brute-force oracles, and structural diagnostics.

pub mod analysis;
pub mod circuits;
pub mod cnf;
pub mod error;
pub mod fbdd;
pub mod oracle;
pub mod slo;

pub use cnf::{parse_dimacs, serialize_dimacs, Assignment, Clause, ClauseSet, Literal, Residual};
pub use error::{Error, Result};
pub use fbdd::{
    build_pr, build_pr_prime, is_sat, BuildStats, Edge, FbddGraph, GraphKind, OrderingPolicy,
    PrimeMode,
};
pub use slo::{cra, cra_plus, slo_check, slo_sort, RenamingMap, SloReport};

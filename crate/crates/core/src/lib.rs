//! Steady states, heat currents and rectification of a two-atom quantum
//! thermal diode whose left atom is dressed by auxiliary two-level atoms.
// Negated float comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod model;
pub mod rates;
pub mod observables;
pub mod solver;
pub mod sweep;

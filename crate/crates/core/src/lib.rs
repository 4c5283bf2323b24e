//! Graph weights, polyvector calculus and Hochschild cochains for checking
//! a graph-weight L-infinity structure and its formality morphism.

pub mod error;
pub mod geometry;
pub mod graphs;
pub mod hochschild;
pub mod polyfields;
pub mod scalar;
pub mod weights;

pub use error::{Error, Result};

/// Calibration constant of the modified propagator.
pub use geometry::CALIBRATION;

/// Sign and normalization conventions realized by this crate, as
/// identifier/description pairs for reports.
pub const CONVENTIONS: &[(&str, &str)] = &[
    ("orientation", "single-edge weight +1, fan weights 1/k!"),
    ("schouten", "O(1->2) + O(2->1), xi odd, x even"),
    ("l_n", "sum over labeled DAGs of signed canonical weight times operator"),
    ("linfty", "unshuffle form, Koszul signs by arity parity"),
    ("f_n", "(-1)^(p(p-1)/2) twist of the label-summed graph sum, f_1 = hkr"),
    ("q1", "-d"),
    ("q2", "(-1)^(p-1) [A,B] for a p-cochain A"),
    ("gerstenhaber", "a o b - (-1)^((p-1)(q-1)) b o a, a o b = sum (-1)^((i-1)(q-1)) a o_i b"),
];

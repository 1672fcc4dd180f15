//! Probabilistic cellular automata as discrete fermionic quantum field
//! theories.
//!
//! This crate simulates deterministic bit automata on a periodic chain
//! (drifting occupation numbers with optional local scattering rules) and,
//! in parallel, realizes the same dynamics exactly on the fermionic Hilbert
//! space spanned by the occupation configurations. On top of that exact
//! equivalence it builds the quantum field theory toolbox: a complex
//! structure over the real wave functions, fermionic creation and
//! annihilation operators with their momentum modes, conjugation, parity,
//! and time-reversal transforms, Dirac-sea vacua, propagators, thermal
//! states, and local interaction rules with their Hamiltonians.
//!
//! The two descriptions are kept numerically comparable at every level:
//! ensemble averages of the bit dynamics match Hilbert-space expectation
//! values, automaton step operators match exponentials of their
//! Hamiltonians, and continuum formulas are reproduced at finite size by
//! their exact lattice counterparts.

pub mod bits;
pub mod complex_structure;
pub mod error;
pub mod fermion;
pub mod field_ops;
pub mod hilbert;
pub mod io;
pub mod lattice;
pub mod op;
pub mod perm;
pub mod symmetry;
pub mod thermal;
pub mod vacuum;

pub use error::{PcaError, Result};
pub use op::DEFAULT_DENSE_CAP;

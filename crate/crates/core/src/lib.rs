//! Train small ReLU networks as surrogates for expensive nonlinear cost
//! functions and embed them into linear optimization models.
//!
//! The crate is organized bottom-up:
//!
//! * [`matrix`] — a minimal dense row-major matrix used by the network and
//!   market modules.
//! * [`nn`] — ReLU networks, dataset generation, and Adam training with an
//!   optional non-negativity projection that keeps a network exactly
//!   LP-representable.
//! * [`model`] — a solver-independent LP/MIP intermediate representation with
//!   a deterministic LP-format text export.
//! * [`simplex`] — a bounded-variable two-phase primal simplex.
//! * [`branch_bound`] — best-bound branch and bound for binary MIPs on top of
//!   the simplex.
//! * [`embed`] — five ways of turning a trained network into rows of an
//!   optimization model: an exact big-M encoding, a convexified-network LP
//!   encoding that is tight under minimization, two penalty relaxations, and
//!   a piecewise-linear interpolation that needs no network at all.
//! * [`market`] — the demand-flexibility bidding case study: cost oracle,
//!   scenario generation, model assembly, and solution evaluation.
//! * [`bench`] — experiment plans, benchmark runs, and penalty/architecture
//!   sweeps with deterministic CSV/JSON outputs.

pub mod bench;
pub mod branch_bound;
pub mod embed;
pub mod market;
pub mod matrix;
pub mod model;
pub mod nn;
pub mod simplex;

pub use matrix::Matrix;

//! A desk-scale verification toolkit for the security calculus of traces,
//! channels, and disclosures.
//!
//! The crate treats security properties as sets of finite event histories and
//! makes the classical questions about them executable:
//!
//! - [`props`] / [`classify`] — trace properties as finite automata;
//!   safety/liveness/localization/authorization/availability classification,
//!   prefix closures and interiors, cylinder operators, normal decompositions,
//!   and denial-of-service witnesses.
//! - [`access`] — access-control matrices, multi-level security over a level
//!   poset, no-read-up/no-write-down state machines, and the constructive
//!   reductions between the two worlds.
//! - [`channels`] — relational channels as finite transducers; local views
//!   under clearance lattices, interference channels, and exact + bounded
//!   noninterference checking.
//! - [`stochastic`] — probabilistic channels as exact-rational stochastic
//!   matrices; Bayesian inversion, Shannon entropy, probabilistic
//!   noninterference, and perfect secrecy of ciphers.
//! - [`privacy`] — tabular re-identification, k-anonymity with
//!   generalization/suppression, and the Laplace mechanism for
//!   ε-differential privacy.
//! - [`protocol`] — a symbolic term algebra with public-key encryption,
//!   protocol roles as message templates, bounded intruder search, and
//!   challenge-response authentication checking.
//!
//! Every major capability has a runnable demonstration under `examples/`;
//! start with `cargo run --example sheep_properties` and follow the list in
//! the README. The `secsci` binary exposes the same operations on JSON model
//! files (see `fixtures/`).

pub mod access;
pub mod alphabet;
pub mod automata;
pub mod channels;
pub mod classify;
pub mod cli;
pub mod fixtures;
pub mod history;
pub mod privacy;
pub mod protocol;
pub mod props;
pub mod stochastic;

pub use alphabet::{EventAlphabet, EventDecl, EventId};
pub use history::History;
pub use props::RegularProperty;

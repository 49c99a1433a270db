//! Toolkit for cost-asymmetric password hashing.
//!
//! A server that stretches password hashes with a *random*, unrecorded
//! iteration depth makes a correct login cheap in expectation while forcing
//! an offline attacker to pay for every depth it probes. This crate bundles
//! the pieces needed to design and evaluate such a defense:
//!
//! - [`distribution`] — password popularity models ingested from frequency
//!   corpora or plaintext leaks;
//! - [`adversary`] — rational guessing adversaries and their best responses
//!   against deterministic and randomized hashing;
//! - [`lp`] — a small dense linear-programming solver used by the optimizer;
//! - [`optimizer`] — cutting-plane search for the defender's optimal
//!   stretching distribution under a server cost budget;
//! - [`mechanism`] — a reference account store implementing the randomized
//!   hashing scheme itself;
//! - [`curves`] — batch evaluation producing cracked-fraction curves for
//!   reports and plots.

pub mod adversary;
pub mod curves;
pub mod distribution;
pub mod lp;
pub mod mechanism;
pub mod optimizer;

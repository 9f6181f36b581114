//! Concrete games for the interplay engine.
//!
//! * [`matrix`]: n-player normal-form games with exact (enumerated) expected
//!   utilities and relation matrices, used as the analytic oracle for the
//!   Monte Carlo estimators.
//! * [`cop`]: a three-agent cheap-talk prison game: private messaging rounds
//!   followed by simultaneous guilty/innocent announcements.
//! * [`skirmish`]: a small simultaneous-orders conquest game whose actions are
//!   sets of per-territory unit orders.
//! * [`dynamic`]: a JSON-level facade over all three, shared by the CLI and the
//!   HTTP service.

pub mod cop;
pub mod dynamic;
pub mod matrix;
pub mod skirmish;

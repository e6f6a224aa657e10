//! Sharing of tripartite nonlocality by a chain of sequential observers.
//!
//! Alice and Bob each hold one qubit of a three-qubit state and measure it
//! sharply. A sequence of Charlies measures the third qubit one after another,
//! all but the last unsharply, each passing the particle on. This crate
//! evaluates every Charlie's Mermin and Svetlichny values, cross-checks the
//! fast state recursion against exhaustive path enumeration, and searches
//! settings and sharpness schedules for the largest number of Charlies that
//! can violate an inequality simultaneously.

pub mod cli;
pub mod error;
pub mod measure;
pub mod protocol;
pub mod qcore;
pub mod rng;
pub mod search;

pub use error::{Error, Result};

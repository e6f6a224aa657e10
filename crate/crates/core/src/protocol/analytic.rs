//! Closed-form degradation along the chain at the equatorial reference
//! settings on the GHZ state.
//!
//! Each unsharp Charlie with two orthogonal equatorial settings contracts the
//! equatorial Bloch components of the third qubit by (1 + √(1 − λ²))/2, so
//! V_m = B·λ_m·Π_{k<m} (1 + √(1 − λ_k²))/2 with B the quantum maximum. Valid
//! only for those settings; `tests/analytic_chain.rs` checks it against the
//! full simulation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::scenario::InequalityKind;

/// (1 + √(1 − λ²))/2.
pub fn contraction(lambda: f64) -> f64 {
    0.5 * (1.0 + (1.0 - lambda * lambda).max(0.0).sqrt())
}

/// V_1..V_n for the full schedule (including the final Charlie's λ).
pub fn analytic_values(kind: InequalityKind, schedule: &[f64]) -> Vec<f64> {
    let ceiling = kind.quantum_bound();
    let mut carried = 1.0;
    schedule
        .iter()
        .map(|&lambda| {
            let v = ceiling * lambda * carried;
            carried *= contraction(lambda);
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSolution {
    /// λ_1..λ_{n−1} meeting the thresholds exactly, then λ_n = 1.
    pub lambdas: Vec<f64>,
    /// V_1..V_n.
    pub values: Vec<f64>,
    pub final_value: f64,
}

/// Smallest sharpness schedule that puts Charlies 1..n−1 exactly on their
/// thresholds, and the value a sharp final Charlie then obtains.
pub fn analytic_chain(kind: InequalityKind, thresholds: &[f64]) -> Result<ChainSolution> {
    let ceiling = kind.quantum_bound();
    let mut carried = 1.0;
    let mut lambdas = Vec::with_capacity(thresholds.len() + 1);
    for (idx, &target) in thresholds.iter().enumerate() {
        let required = target / (ceiling * carried);
        if !(required > 0.0 && required <= 1.0) {
            return Err(Error::ChainInfeasible {
                charlie: idx + 1,
                required,
            });
        }
        lambdas.push(required);
        carried *= contraction(required);
    }
    lambdas.push(1.0);
    let values = analytic_values(kind, &lambdas);
    let final_value = *values.last().expect("non-empty schedule");
    Ok(ChainSolution {
        lambdas,
        values,
        final_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharp_single_charlie_reaches_ceiling() {
        let s = analytic_chain(InequalityKind::Svetlichny, &[]).unwrap();
        assert_eq!(s.lambdas, vec![1.0]);
        assert!((s.final_value - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn thresholds_are_met_exactly() {
        let s = analytic_chain(InequalityKind::Mermin, &[2.1, 2.1]).unwrap();
        assert!((s.values[0] - 2.1).abs() < 1e-12);
        assert!((s.values[1] - 2.1).abs() < 1e-12);
        assert!((s.lambdas[0] - 0.525).abs() < 1e-12);
    }

    #[test]
    fn sharp_first_charlie_halves_the_second() {
        let v = analytic_values(InequalityKind::Mermin, &[1.0, 1.0]);
        assert!((v[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn infeasible_chain() {
        let err = analytic_chain(InequalityKind::Mermin, &[2.0; 7]).unwrap_err();
        assert!(matches!(err, Error::ChainInfeasible { charlie: 7, .. }));
        assert!(err.to_string().starts_with("threshold chain infeasible"));
    }
}

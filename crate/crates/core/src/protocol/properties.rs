//! Numerical property suites shared by `oracle-check` and the test suite:
//! recursion vs enumeration, normalization, spatial no-signalling and the
//! temporal signalling witness.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::Result;
use crate::measure::{BlochDirection, Sharpness};
use crate::protocol::engine::{correlation_table, SettingsChoice};
use crate::protocol::oracle::{oracle_correlation_table, oracle_joint_distribution, Slot};
use crate::protocol::scenario::{CharlieStage, InitialState, PartySettings, ScenarioConfig};
use crate::qcore::{ComplexMatrix, DensityMatrix, C64};

/// Uniformly distributed direction on the sphere.
pub fn random_direction(rng: &mut impl Rng) -> BlochDirection {
    let theta = rng.random_range(-1.0f64..=1.0).acos();
    let phi = rng.random_range(0.0..2.0 * PI);
    BlochDirection::new(theta, phi).expect("sampled in range")
}

pub fn random_settings(rng: &mut impl Rng) -> PartySettings {
    PartySettings::new(random_direction(rng), random_direction(rng))
}

/// ρ = GG†/Tr[GG†] for G with independent uniform entries; full rank almost surely.
pub fn random_mixed_state(rng: &mut impl Rng) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(8, 8, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    DensityMatrix::new(gg.scale_real(1.0 / tr)).expect("GG† is a valid state after normalization")
}

/// Random mixed state, settings and sharpness for 1..=`max_charlies`
/// Charlies. The final Charlie may be unsharp.
pub fn random_config(rng: &mut impl Rng, max_charlies: usize) -> ScenarioConfig {
    let n = rng.random_range(1..=max_charlies);
    let state = InitialState::custom(random_mixed_state(rng)).expect("dimension 8");
    let alice = random_settings(rng);
    let bob = random_settings(rng);
    let charlies = (0..n)
        .map(|_| {
            let lambda = rng.random_range(0.05..=1.0);
            CharlieStage::new(random_settings(rng), Sharpness::new(lambda).expect("in range"))
        })
        .collect();
    ScenarioConfig::with_final_policy(state, alice, bob, charlies, false).expect("valid by construction")
}

/// Every setting assignment for a chain of `charlies` Charlies.
pub fn all_settings(charlies: usize) -> impl Iterator<Item = SettingsChoice> {
    (0..1usize << (charlies + 2)).map(move |mask| SettingsChoice {
        alice: (mask >> (charlies + 1)) & 1,
        bob: (mask >> charlies) & 1,
        charlies: (0..charlies).map(|k| (mask >> (charlies - 1 - k)) & 1).collect(),
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest |C̄ recursion − C̄ enumeration| over every Charlie and setting triple.
pub fn oracle_deviation(config: &ScenarioConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 1..=config.charlie_count() {
        let fast = correlation_table(config, m)?;
        let slow = oracle_correlation_table(config, m)?;
        worst = worst.max(max_abs_diff(&fast.values, &slow.values));
    }
    Ok(worst)
}

/// Largest |Σ P − 1| over every setting assignment.
pub fn normalization_deviation(config: &ScenarioConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for choice in all_settings(config.charlie_count()) {
        let total = oracle_joint_distribution(config, &choice)?.total();
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}

/// Largest change of the (a, b) marginal under a change of any Charlie
/// setting, and of Alice's (Bob's) marginal under a change of Bob's (Alice's).
pub fn no_signalling_deviation(config: &ScenarioConfig) -> Result<f64> {
    let n = config.charlie_count();
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut first: Option<Vec<f64>> = None;
            for mask in 0..1usize << n {
                let choice = SettingsChoice {
                    alice: i,
                    bob: j,
                    charlies: (0..n).map(|k| (mask >> k) & 1).collect(),
                };
                let ab = oracle_joint_distribution(config, &choice)?.marginal(&[Slot::Alice, Slot::Bob]);
                match &first {
                    None => first = Some(ab),
                    Some(f) => worst = worst.max(max_abs_diff(f, &ab)),
                }
            }
        }
    }
    for fixed in 0..2 {
        let marginal = |alice: usize, bob: usize, slot: Slot| -> Result<Vec<f64>> {
            let choice = SettingsChoice {
                alice,
                bob,
                charlies: vec![0; n],
            };
            Ok(oracle_joint_distribution(config, &choice)?.marginal(&[slot]))
        };
        worst = worst.max(max_abs_diff(&marginal(fixed, 0, Slot::Alice)?, &marginal(fixed, 1, Slot::Alice)?));
        worst = worst.max(max_abs_diff(&marginal(0, fixed, Slot::Bob)?, &marginal(1, fixed, Slot::Bob)?));
    }
    Ok(worst)
}

/// Largest change of the (a, b, cᵐ) distribution when Charlie m − 1 switches
/// setting (every other Charlie at setting 0). Nonzero values are expected:
/// earlier Charlies do signal to later ones.
pub fn temporal_signalling_shift(config: &ScenarioConfig, m: usize) -> Result<f64> {
    config.check_index(m)?;
    if m < 2 {
        return Ok(0.0);
    }
    let n = config.charlie_count();
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                let dist = |prev: usize| -> Result<Vec<f64>> {
                    let mut charlies = vec![0; n];
                    charlies[m - 2] = prev;
                    charlies[m - 1] = l;
                    let choice = SettingsChoice { alice: i, bob: j, charlies };
                    Ok(oracle_joint_distribution(config, &choice)?.marginal(&[Slot::Alice, Slot::Bob, Slot::Charlie(m)]))
                };
                worst = worst.max(max_abs_diff(&dist(0)?, &dist(1)?));
            }
        }
    }
    Ok(worst)
}

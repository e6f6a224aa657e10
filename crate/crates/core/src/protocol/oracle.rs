//! Path-enumeration reference for the sequential scenario.
//!
//! Every outcome tuple is reached by an explicit chain of normalized Lüders
//! updates (Alice, Bob, then each Charlie in order); no averaging is done on
//! the state. Averaged correlators are rebuilt from the resulting joint
//! distributions, independently of the state-recursion engine.

use crate::error::{Error, Result};
use crate::measure::{luders_update, BlochDirection, Outcome, Sharpness};
use crate::protocol::engine::{CorrelationTable, OutcomeTuple, SettingsChoice};
use crate::protocol::scenario::ScenarioConfig;
use crate::qcore::{DensityMatrix, Party};

/// 2^(n+2) ≤ 256 outcome tuples.
pub const ORACLE_MAX_CHARLIES: usize = 6;

/// A measuring party in the sequential scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Alice,
    Bob,
    /// Charlie m, 1-based.
    Charlie(usize),
}

impl Slot {
    fn position(self) -> usize {
        match self {
            Slot::Alice => 0,
            Slot::Bob => 1,
            Slot::Charlie(m) => m + 1,
        }
    }
}

/// Exact distribution over all outcome tuples for fixed settings.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    charlies: usize,
    probabilities: Vec<f64>,
}

impl JointDistribution {
    pub fn charlies(&self) -> usize {
        self.charlies
    }

    /// Probabilities in [`OutcomeTuple::index`] order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, outcomes: &OutcomeTuple) -> f64 {
        self.probabilities[outcomes.index()]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    fn parties(&self) -> usize {
        self.charlies + 2
    }

    fn sign(&self, index: usize, slot: Slot) -> f64 {
        let bit = (index >> (self.parties() - 1 - slot.position())) & 1;
        if bit == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// E[Π outcome signs] over the listed parties.
    pub fn correlation(&self, slots: &[Slot]) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(idx, p)| slots.iter().map(|&s| self.sign(idx, s)).product::<f64>() * p)
            .sum()
    }

    /// Marginal over the listed parties, indexed with the first slot as the
    /// most significant bit (bit 1 = outcome −1).
    pub fn marginal(&self, slots: &[Slot]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << slots.len()];
        for (idx, p) in self.probabilities.iter().enumerate() {
            let key = slots.iter().fold(0, |acc, &s| {
                (acc << 1) | ((idx >> (self.parties() - 1 - s.position())) & 1)
            });
            out[key] += p;
        }
        out
    }
}

/// Enumerates every outcome path for the given settings.
pub fn oracle_joint_distribution(config: &ScenarioConfig, settings: &SettingsChoice) -> Result<JointDistribution> {
    let n = config.charlie_count();
    if n > ORACLE_MAX_CHARLIES {
        return Err(Error::OracleBoundExceeded {
            charlies: n,
            max: ORACLE_MAX_CHARLIES,
        });
    }
    let directions = settings.directions(config)?;
    let mut steps: Vec<(Party, BlochDirection, Sharpness)> = vec![
        (Party::Alice, directions[0], Sharpness::SHARP),
        (Party::Bob, directions[1], Sharpness::SHARP),
    ];
    for (stage, &d) in config.charlies().iter().zip(&directions[2..]) {
        steps.push((Party::Charlie, d, stage.sharpness));
    }
    let mut probabilities = vec![0.0; 1 << steps.len()];
    descend(config.state().density(), &steps, 0, 0, 1.0, &mut probabilities)?;
    Ok(JointDistribution {
        charlies: n,
        probabilities,
    })
}

fn descend(
    rho: &DensityMatrix,
    steps: &[(Party, BlochDirection, Sharpness)],
    depth: usize,
    prefix: usize,
    weight: f64,
    out: &mut [f64],
) -> Result<()> {
    if depth == steps.len() {
        out[prefix] = weight;
        return Ok(());
    }
    let (party, d, s) = steps[depth];
    for outcome in Outcome::BOTH {
        let key = (prefix << 1) | usize::from(outcome == Outcome::Minus);
        match luders_update(rho, party, d, outcome, s) {
            Ok((post, p)) => descend(&post, steps, depth + 1, key, weight * p, out)?,
            // the whole subtree is unreachable and stays at zero
            Err(Error::ZeroProbability) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// C̄^m_{ijl} rebuilt from enumerated distributions: uniform average over the
/// settings of Charlies 1..m−1, outcomes of every other Charlie marginalized.
pub fn oracle_avg_correlation(config: &ScenarioConfig, m: usize, i: usize, j: usize, l: usize) -> Result<f64> {
    config.check_index(m)?;
    let n = config.charlie_count();
    let prior = m - 1;
    let mut total = 0.0;
    for mask in 0..(1usize << prior) {
        let mut charlies = vec![0; n];
        for (k, slot) in charlies.iter_mut().enumerate().take(prior) {
            *slot = (mask >> k) & 1;
        }
        charlies[m - 1] = l;
        let choice = SettingsChoice { alice: i, bob: j, charlies };
        let dist = oracle_joint_distribution(config, &choice)?;
        total += dist.correlation(&[Slot::Alice, Slot::Bob, Slot::Charlie(m)]);
    }
    Ok(total / (1usize << prior) as f64)
}

pub fn oracle_correlation_table(config: &ScenarioConfig, m: usize) -> Result<CorrelationTable> {
    let mut values = [0.0; 8];
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                values[4 * i + 2 * j + l] = oracle_avg_correlation(config, m, i, j, l)?;
            }
        }
    }
    Ok(CorrelationTable { m, values })
}

//! Parameter encoding and the penalized objective.
//!
//! Parameter vectors list angles first (θ, φ per setting, two settings per
//! party) and the raw sharpness values of Charlies 1..n−1 last. Every
//! evaluation runs the chain once and repairs each unsharp λ upward to the
//! smallest value meeting its threshold: a Charlie's value is linear in his
//! own λ, so the repaired value is exact. Only thresholds that would need
//! λ > 1 survive as penalty terms.

use std::f64::consts::PI;

use crate::measure::{BlochDirection, Sharpness};
use crate::protocol::{
    averaged_post_state, correlation_values, CharlieStage, InequalityKind, InitialState,
    PartySettings, ScenarioConfig,
};
use crate::qcore::DensityMatrix;

pub const PENALTY_WEIGHT: f64 = 1e3;
pub const MIN_LAMBDA: f64 = 1e-6;

/// Repaired λ is nudged this far (relatively) above the exact boundary so
/// that re-evaluation never lands a rounding error below the threshold.
const REPAIR_SLACK: f64 = 1e-12;

/// Which angles are free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// Settings held at `Problem::reference`; only λ varies.
    Fixed,
    /// One shared setting pair for every Charlie.
    Tied,
    /// Independent setting pairs for every party.
    Free,
}

pub struct Problem {
    pub kind: InequalityKind,
    pub state: InitialState,
    pub thresholds: Vec<f64>,
    pub layout: Layout,
    /// Alice, Bob and shared Charlie settings used by [`Layout::Fixed`].
    pub reference: (PartySettings, PartySettings, PartySettings),
}

#[derive(Debug, Clone)]
pub struct Evaluated {
    /// Repaired schedule including the sharp final λ.
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub deficit: f64,
    pub objective: f64,
}

fn direction(theta: f64, phi: f64) -> BlochDirection {
    BlochDirection::new(theta.clamp(0.0, PI), phi.clamp(0.0, 2.0 * PI)).expect("clamped into range")
}

fn settings_from(p: &[f64]) -> PartySettings {
    PartySettings::new(direction(p[0], p[1]), direction(p[2], p[3]))
}

fn push_settings(out: &mut Vec<f64>, s: &PartySettings) {
    for d in s.both() {
        out.push(d.theta());
        out.push(d.phi());
    }
}

impl Problem {
    pub fn charlies(&self) -> usize {
        self.thresholds.len() + 1
    }

    fn angle_count(&self) -> usize {
        match self.layout {
            Layout::Fixed => 0,
            Layout::Tied => 12,
            Layout::Free => 4 * (2 + self.charlies()),
        }
    }

    pub fn dimension(&self) -> usize {
        self.angle_count() + self.thresholds.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = Vec::with_capacity(self.dimension());
        for _ in 0..self.angle_count() / 2 {
            b.push((0.0, PI));
            b.push((0.0, 2.0 * PI));
        }
        b.extend(std::iter::repeat_n((MIN_LAMBDA, 1.0), self.thresholds.len()));
        b
    }

    /// Alice, Bob and per-Charlie settings plus raw λ_1..λ_{n−1}.
    pub fn decode(&self, x: &[f64]) -> (PartySettings, PartySettings, Vec<PartySettings>, Vec<f64>) {
        let n = self.charlies();
        let angles = self.angle_count();
        let raw = x[angles..].to_vec();
        match self.layout {
            Layout::Fixed => {
                let (a, b, c) = self.reference;
                (a, b, vec![c; n], raw)
            }
            Layout::Tied => (settings_from(&x[0..4]), settings_from(&x[4..8]), vec![settings_from(&x[8..12]); n], raw),
            Layout::Free => {
                let charlies = (0..n).map(|k| settings_from(&x[8 + 4 * k..12 + 4 * k])).collect();
                (settings_from(&x[0..4]), settings_from(&x[4..8]), charlies, raw)
            }
        }
    }

    /// Inverse of [`Problem::decode`] for this layout. Charlie settings beyond
    /// what the layout stores are dropped (Tied keeps the first pair).
    pub fn encode(&self, alice: &PartySettings, bob: &PartySettings, charlies: &[PartySettings], raw: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dimension());
        match self.layout {
            Layout::Fixed => {}
            Layout::Tied => {
                push_settings(&mut x, alice);
                push_settings(&mut x, bob);
                push_settings(&mut x, &charlies[0]);
            }
            Layout::Free => {
                push_settings(&mut x, alice);
                push_settings(&mut x, bob);
                for c in charlies {
                    push_settings(&mut x, c);
                }
            }
        }
        x.extend(raw.iter().map(|l| l.clamp(MIN_LAMBDA, 1.0)));
        x
    }

    pub fn evaluate(&self, x: &[f64]) -> Evaluated {
        let (alice, bob, charlies, raw) = self.decode(x);
        self.run_chain(&alice, &bob, &charlies, &raw)
    }

    fn run_chain(&self, alice: &PartySettings, bob: &PartySettings, charlies: &[PartySettings], raw: &[f64]) -> Evaluated {
        let n = self.charlies();
        let mut rho: DensityMatrix = self.state.density().clone();
        let mut lambdas = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut deficit = 0.0;
        for (m, settings) in charlies.iter().enumerate() {
            let sharp = CharlieStage::new(*settings, Sharpness::SHARP);
            let full = self.kind.value(&correlation_values(&rho, alice, bob, &sharp));
            if m + 1 == n {
                lambdas.push(1.0);
                values.push(full);
                break;
            }
            let target = self.thresholds[m];
            let needed = if full > 0.0 { target / full * (1.0 + REPAIR_SLACK) } else { f64::INFINITY };
            let lambda = raw[m].max(needed).clamp(MIN_LAMBDA, 1.0);
            let value = lambda * full;
            deficit += (target - value).max(0.0).powi(2);
            lambdas.push(lambda);
            values.push(value);
            let stage = CharlieStage::new(*settings, Sharpness::new(lambda).expect("clamped into (0, 1]"));
            rho = averaged_post_state(&rho, &stage);
        }
        let objective = values[n - 1] - PENALTY_WEIGHT * deficit;
        Evaluated {
            lambdas,
            values,
            deficit,
            objective,
        }
    }

    pub fn config(&self, x: &[f64]) -> ScenarioConfig {
        let (alice, bob, charlies, _) = self.decode(x);
        let lambdas = self.evaluate(x).lambdas;
        let stages = charlies
            .iter()
            .zip(&lambdas)
            .map(|(s, &l)| CharlieStage::new(*s, Sharpness::new(l).expect("repaired into (0, 1]")))
            .collect();
        ScenarioConfig::new(self.state.clone(), alice, bob, stages).expect("search configs are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{analytic_chain, evaluate};

    #[test]
    fn fixed_layout_repairs_to_the_analytic_chain() {
        let p = Problem {
            kind: InequalityKind::Mermin,
            state: InitialState::ghz(),
            thresholds: vec![2.1, 2.1],
            layout: Layout::Fixed,
            reference: InequalityKind::Mermin.reference_settings(),
        };
        let e = p.evaluate(&[MIN_LAMBDA, MIN_LAMBDA]);
        let exact = analytic_chain(InequalityKind::Mermin, &[2.1, 2.1]).unwrap();
        assert_eq!(e.deficit, 0.0);
        for (a, b) in e.lambdas.iter().zip(&exact.lambdas) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((e.objective - exact.final_value).abs() < 1e-9);
    }

    #[test]
    fn decoded_config_reevaluates_to_the_same_values() {
        let p = Problem {
            kind: InequalityKind::Svetlichny,
            state: InitialState::w(),
            thresholds: vec![1.0],
            layout: Layout::Free,
            reference: InequalityKind::Svetlichny.reference_settings(),
        };
        let x: Vec<f64> = (0..p.dimension()).map(|k| 0.3 + 0.1 * k as f64 % 1.0).collect();
        let e = p.evaluate(&x);
        let report = evaluate(&p.config(&x));
        for (a, b) in e.values.iter().zip(report.values(InequalityKind::Svetlichny)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn encode_inverts_decode() {
        for layout in [Layout::Fixed, Layout::Tied, Layout::Free] {
            let p = Problem {
                kind: InequalityKind::Mermin,
                state: InitialState::ghz(),
                thresholds: vec![2.0, 2.0],
                layout,
                reference: InequalityKind::Mermin.reference_settings(),
            };
            let x: Vec<f64> = p.bounds().iter().enumerate().map(|(k, (lo, hi))| lo + (hi - lo) * (0.1 + 0.07 * k as f64) % (hi - lo)).collect();
            let (a, b, c, raw) = p.decode(&x);
            let y = p.encode(&a, &b, &c, &raw);
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unreachable_threshold_is_penalized() {
        let p = Problem {
            kind: InequalityKind::Mermin,
            state: InitialState::ghz(),
            thresholds: vec![4.5],
            layout: Layout::Fixed,
            reference: InequalityKind::Mermin.reference_settings(),
        };
        let e = p.evaluate(&[0.5]);
        assert_eq!(e.lambdas[0], 1.0);
        assert!((e.deficit - 0.25).abs() < 1e-12);
        assert!(e.objective < -200.0);
    }
}

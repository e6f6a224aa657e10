use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{BlochDirection, Sharpness};
use crate::qcore::{DensityMatrix, C64};

/// Guard against exponential blow-up in path enumeration and long chains.
pub const MAX_CHARLIES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Ghz,
    W,
    Custom,
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateKind::Ghz => "ghz",
            StateKind::W => "w",
            StateKind::Custom => "custom",
        })
    }
}

/// The three-qubit state shared by Alice, Bob and the first Charlie.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    kind: StateKind,
    density: DensityMatrix,
}

impl InitialState {
    /// (|000⟩ + |111⟩)/√2.
    pub fn ghz() -> Self {
        let mut ket = [C64::new(0.0, 0.0); 8];
        ket[0] = C64::new(1.0, 0.0);
        ket[7] = C64::new(1.0, 0.0);
        Self {
            kind: StateKind::Ghz,
            density: DensityMatrix::pure(&ket).expect("GHZ ket is normalizable"),
        }
    }

    /// (|001⟩ + |010⟩ + |100⟩)/√3.
    pub fn w() -> Self {
        let mut ket = [C64::new(0.0, 0.0); 8];
        for idx in [1, 2, 4] {
            ket[idx] = C64::new(1.0, 0.0);
        }
        Self {
            kind: StateKind::W,
            density: DensityMatrix::pure(&ket).expect("W ket is normalizable"),
        }
    }

    pub fn custom(density: DensityMatrix) -> Result<Self> {
        if density.dim() != 8 {
            return Err(Error::InvalidScenario(format!(
                "initial state must be three-qubit (dimension 8), got dimension {}",
                density.dim()
            )));
        }
        Ok(Self {
            kind: StateKind::Custom,
            density,
        })
    }

    /// Builds the named state; `Custom` has no canonical form.
    pub fn from_kind(kind: StateKind) -> Result<Self> {
        match kind {
            StateKind::Ghz => Ok(Self::ghz()),
            StateKind::W => Ok(Self::w()),
            StateKind::Custom => Err(Error::InvalidScenario(
                "a custom state needs an explicit density matrix".into(),
            )),
        }
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }
}

/// The two measurement directions a party chooses between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartySettings {
    pub setting0: BlochDirection,
    pub setting1: BlochDirection,
}

impl PartySettings {
    pub fn new(setting0: BlochDirection, setting1: BlochDirection) -> Self {
        Self { setting0, setting1 }
    }

    pub fn get(&self, index: usize) -> Result<BlochDirection> {
        match index {
            0 => Ok(self.setting0),
            1 => Ok(self.setting1),
            other => Err(Error::InvalidSetting(other)),
        }
    }

    pub fn both(&self) -> [BlochDirection; 2] {
        [self.setting0, self.setting1]
    }

    /// Equatorial pair at azimuths `phi0`, `phi1`.
    pub fn equatorial(phi0: f64, phi1: f64) -> Result<Self> {
        Ok(Self::new(
            BlochDirection::equatorial(phi0)?,
            BlochDirection::equatorial(phi1)?,
        ))
    }
}

/// One Charlie in the sequence: his two settings and his sharpness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharlieStage {
    pub settings: PartySettings,
    pub sharpness: Sharpness,
}

impl CharlieStage {
    pub fn new(settings: PartySettings, sharpness: Sharpness) -> Self {
        Self { settings, sharpness }
    }
}

/// A full sequential-sharing experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    state: InitialState,
    alice: PartySettings,
    bob: PartySettings,
    charlies: Vec<CharlieStage>,
    require_sharp_final: bool,
}

impl ScenarioConfig {
    /// Validated scenario whose final Charlie must measure sharply.
    pub fn new(
        state: InitialState,
        alice: PartySettings,
        bob: PartySettings,
        charlies: Vec<CharlieStage>,
    ) -> Result<Self> {
        Self::with_final_policy(state, alice, bob, charlies, true)
    }

    /// Like [`ScenarioConfig::new`], with the final-sharpness check optional.
    pub fn with_final_policy(
        state: InitialState,
        alice: PartySettings,
        bob: PartySettings,
        charlies: Vec<CharlieStage>,
        require_sharp_final: bool,
    ) -> Result<Self> {
        let config = Self {
            state,
            alice,
            bob,
            charlies,
            require_sharp_final,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.charlies.len();
        if n == 0 {
            return Err(Error::InvalidScenario("at least one charlie is required".into()));
        }
        if n > MAX_CHARLIES {
            return Err(Error::InvalidScenario(format!(
                "{n} charlies exceeds the limit of {MAX_CHARLIES}"
            )));
        }
        if self.require_sharp_final && !self.charlies[n - 1].sharpness.is_sharp() {
            return Err(Error::InvalidScenario(format!(
                "final charlie must measure sharply (lambda = 1), got lambda = {}",
                self.charlies[n - 1].sharpness.lambda()
            )));
        }
        Ok(())
    }

    pub fn state(&self) -> &InitialState {
        &self.state
    }

    pub fn alice(&self) -> &PartySettings {
        &self.alice
    }

    pub fn bob(&self) -> &PartySettings {
        &self.bob
    }

    pub fn charlies(&self) -> &[CharlieStage] {
        &self.charlies
    }

    pub fn charlie_count(&self) -> usize {
        self.charlies.len()
    }

    /// Charlie `m`, 1-based.
    pub fn charlie(&self, m: usize) -> Result<&CharlieStage> {
        self.check_index(m)?;
        Ok(&self.charlies[m - 1])
    }

    pub fn require_sharp_final(&self) -> bool {
        self.require_sharp_final
    }

    pub fn sharpness_schedule(&self) -> Vec<f64> {
        self.charlies.iter().map(|c| c.sharpness.lambda()).collect()
    }

    pub(crate) fn check_index(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.charlies.len() {
            return Err(Error::CharlieOutOfRange {
                index: m,
                count: self.charlies.len(),
            });
        }
        Ok(())
    }

    /// Copy with a different sharpness schedule (same length as the chain).
    pub fn with_schedule(&self, lambdas: &[f64]) -> Result<Self> {
        if lambdas.len() != self.charlies.len() {
            return Err(Error::InvalidScenario(format!(
                "schedule has {} entries for {} charlies",
                lambdas.len(),
                self.charlies.len()
            )));
        }
        let charlies = self
            .charlies
            .iter()
            .zip(lambdas)
            .map(|(stage, &l)| Ok(CharlieStage::new(stage.settings, Sharpness::new(l)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::with_final_policy(
            self.state.clone(),
            self.alice,
            self.bob,
            charlies,
            self.require_sharp_final,
        )
    }

    /// The equatorial reference settings for `kind`, with the given unsharp
    /// schedule for Charlies 1..n−1 and a sharp final Charlie.
    pub fn reference(kind: InequalityKind, state: InitialState, unsharp: &[f64]) -> Result<Self> {
        let (alice, bob, charlie) = kind.reference_settings();
        let mut charlies = unsharp
            .iter()
            .map(|&l| Ok(CharlieStage::new(charlie, Sharpness::new(l)?)))
            .collect::<Result<Vec<_>>>()?;
        charlies.push(CharlieStage::new(charlie, Sharpness::SHARP));
        Self::new(state, alice, bob, charlies)
    }
}

/// Which tripartite inequality is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityKind {
    Mermin,
    Svetlichny,
}

/// Correlator signs indexed by `4i + 2j + l`.
const MERMIN_SIGNS: [f64; 8] = [0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, -1.0];
const SVETLICHNY_SIGNS: [f64; 8] = [1.0, -1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0];

impl InequalityKind {
    pub const BOTH: [InequalityKind; 2] = [InequalityKind::Mermin, InequalityKind::Svetlichny];

    /// Bound for (fully / hybrid) local models: 2 or 4.
    pub fn classical_bound(self) -> f64 {
        match self {
            InequalityKind::Mermin => 2.0,
            InequalityKind::Svetlichny => 4.0,
        }
    }

    /// Quantum maximum: 4 or 4√2.
    pub fn quantum_bound(self) -> f64 {
        match self {
            InequalityKind::Mermin => 4.0,
            InequalityKind::Svetlichny => 4.0 * SQRT_2,
        }
    }

    /// Coefficient of C̄_{ijl} in the inequality, indexed by `4i + 2j + l`.
    pub fn signs(self) -> &'static [f64; 8] {
        match self {
            InequalityKind::Mermin => &MERMIN_SIGNS,
            InequalityKind::Svetlichny => &SVETLICHNY_SIGNS,
        }
    }

    /// |Σ s_{ijl} C̄_{ijl}|.
    pub fn value(self, correlations: &[f64; 8]) -> f64 {
        self.signs()
            .iter()
            .zip(correlations)
            .map(|(s, c)| s * c)
            .sum::<f64>()
            .abs()
    }

    /// Equatorial settings reaching the quantum maximum on the GHZ state:
    /// Alice and Bob at azimuths {π/2, 0}; Charlie at {π/2, 0} (Mermin) or
    /// {π/4, 3π/4} (Svetlichny).
    pub fn reference_settings(self) -> (PartySettings, PartySettings, PartySettings) {
        let ab = PartySettings::equatorial(FRAC_PI_2, 0.0).expect("in range");
        let charlie = match self {
            InequalityKind::Mermin => ab,
            InequalityKind::Svetlichny => {
                PartySettings::equatorial(FRAC_PI_4, 3.0 * FRAC_PI_4).expect("in range")
            }
        };
        (ab, ab, charlie)
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InequalityKind::Mermin => "mermin",
            InequalityKind::Svetlichny => "svetlichny",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stage(lambda: f64) -> CharlieStage {
        let (_, _, c) = InequalityKind::Mermin.reference_settings();
        CharlieStage::new(c, Sharpness::new(lambda).unwrap())
    }

    #[test]
    fn named_states_are_pure() {
        for state in [InitialState::ghz(), InitialState::w()] {
            assert!((state.density().purity() - 1.0).abs() < 1e-12);
            state.density().validate().unwrap();
        }
    }

    #[test]
    fn scenario_limits() {
        let (a, b, _) = InequalityKind::Mermin.reference_settings();
        let empty = ScenarioConfig::new(InitialState::ghz(), a, b, vec![]);
        assert!(empty.is_err());
        let long = ScenarioConfig::new(InitialState::ghz(), a, b, vec![stage(1.0); MAX_CHARLIES + 1]);
        assert!(long.is_err());
        let ok = ScenarioConfig::new(InitialState::ghz(), a, b, vec![stage(1.0); MAX_CHARLIES]);
        assert!(ok.is_ok());
    }

    #[test]
    fn final_sharpness_policy() {
        let (a, b, _) = InequalityKind::Mermin.reference_settings();
        let unsharp_last = vec![stage(0.5), stage(0.9)];
        let err = ScenarioConfig::new(InitialState::ghz(), a, b, unsharp_last.clone()).unwrap_err();
        assert!(err.to_string().contains("final charlie"));
        let relaxed = ScenarioConfig::with_final_policy(InitialState::ghz(), a, b, unsharp_last, false).unwrap();
        assert_eq!(relaxed.sharpness_schedule(), vec![0.5, 0.9]);
    }

    #[test]
    fn charlie_index_is_one_based() {
        let config = ScenarioConfig::reference(InequalityKind::Mermin, InitialState::ghz(), &[0.5]).unwrap();
        assert!(config.charlie(0).is_err());
        assert!(config.charlie(1).is_ok());
        assert!(config.charlie(2).is_ok());
        assert!(matches!(
            config.charlie(3),
            Err(Error::CharlieOutOfRange { index: 3, count: 2 })
        ));
    }

    #[test]
    fn custom_state_must_be_three_qubit() {
        assert!(InitialState::custom(DensityMatrix::maximally_mixed(2)).is_err());
        assert!(InitialState::custom(DensityMatrix::maximally_mixed(3)).is_ok());
        assert!(InitialState::from_kind(StateKind::Custom).is_err());
    }

    #[test]
    fn setting_index_out_of_range() {
        let (a, _, _) = InequalityKind::Mermin.reference_settings();
        assert_eq!(a.get(2), Err(Error::InvalidSetting(2)));
    }
}

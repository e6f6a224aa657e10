//! State-recursion evaluation of the sequential scenario.
//!
//! Each Charlie's settings are averaged uniformly and his outcomes are
//! marginalized, so the state handed to Charlie m is obtained by pushing the
//! initial state through m − 1 averaged Lüders channels on the third qubit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{observable, sqrt_effect, BlochDirection, Outcome, Sharpness};
use crate::protocol::scenario::{CharlieStage, InequalityKind, PartySettings, ScenarioConfig};
use crate::qcore::{apply_local_left, conjugate_local, ComplexMatrix, DensityMatrix, C64};

/// ρ′ = ½ Σ_k Σ_c (𝕀 ⊗ √E_{c,k}) ρ (𝕀 ⊗ √E_{c,k}), acting on the last qubit.
pub fn averaged_post_state(rho: &DensityMatrix, charlie: &CharlieStage) -> DensityMatrix {
    let qubit = rho.qubits() - 1;
    let dim = rho.dim();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for direction in charlie.settings.both() {
        for outcome in Outcome::BOTH {
            let root = sqrt_effect(direction, outcome, charlie.sharpness);
            let branch = conjugate_local(rho.matrix(), qubit, &root).expect("qubit in range");
            acc = &acc + &branch;
        }
    }
    DensityMatrix::from_matrix_unchecked(acc.scale_real(0.5))
}

/// Σ_{abc} abc·P(a, b, c) = Tr[(A ⊗ B ⊗ (E₊ − E₋)) ρ] for sharp Alice/Bob and a
/// Charlie with sharpness `s`.
pub fn tripartite_correlation(
    rho: &DensityMatrix,
    alice: BlochDirection,
    bob: BlochDirection,
    charlie: BlochDirection,
    s: Sharpness,
) -> f64 {
    let reduced = charlie_operator(rho, &observable(alice), &observable(bob));
    s.lambda() * pair_trace(&reduced, &observable(charlie))
}

/// The eight correlators C̄_{ijl} for one Charlie acting on `rho`.
pub fn correlation_values(
    rho: &DensityMatrix,
    alice: &PartySettings,
    bob: &PartySettings,
    charlie: &CharlieStage,
) -> [f64; 8] {
    let a = alice.both().map(observable);
    let b = bob.both().map(observable);
    let c = charlie.settings.both().map(observable);
    let lambda = charlie.sharpness.lambda();
    let mut out = [0.0; 8];
    for i in 0..2 {
        for j in 0..2 {
            let reduced = charlie_operator(rho, &a[i], &b[j]);
            for l in 0..2 {
                out[4 * i + 2 * j + l] = lambda * pair_trace(&reduced, &c[l]);
            }
        }
    }
    out
}

/// Tr_AB[(A ⊗ B ⊗ 𝕀) ρ] as a 2×2 block.
fn charlie_operator(rho: &DensityMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> [[C64; 2]; 2] {
    let m = rho.matrix();
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (c, row) in out.iter_mut().enumerate() {
        for (cp, entry) in row.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for ai in 0..2 {
                for bi in 0..2 {
                    let col = 4 * ai + 2 * bi + cp;
                    for ap in 0..2 {
                        let av = a[(ai, ap)];
                        for bp in 0..2 {
                            acc += av * b[(bi, bp)] * m[(4 * ap + 2 * bp + c, col)];
                        }
                    }
                }
            }
            *entry = acc;
        }
    }
    out
}

fn pair_trace(r: &[[C64; 2]; 2], z: &ComplexMatrix) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for (c, row) in r.iter().enumerate() {
        for (cp, v) in row.iter().enumerate() {
            acc += v * z[(cp, c)];
        }
    }
    acc.re
}

/// Setting-averaged correlators between Alice, Bob and Charlie m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub m: usize,
    /// C̄_{ijl} at index `4i + 2j + l`.
    pub values: [f64; 8],
}

impl CorrelationTable {
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.values[4 * i + 2 * j + l]
    }

    pub fn mermin(&self) -> f64 {
        InequalityKind::Mermin.value(&self.values)
    }

    pub fn svetlichny(&self) -> f64 {
        InequalityKind::Svetlichny.value(&self.values)
    }

    pub fn value(&self, kind: InequalityKind) -> f64 {
        kind.value(&self.values)
    }

    /// Labels "000".."111" in storage order.
    pub fn labels() -> [&'static str; 8] {
        ["000", "001", "010", "011", "100", "101", "110", "111"]
    }
}

/// State received by Charlie m.
pub fn state_before_charlie(config: &ScenarioConfig, m: usize) -> Result<DensityMatrix> {
    config.check_index(m)?;
    Ok(config.charlies()[..m - 1]
        .iter()
        .fold(config.state().density().clone(), |rho, stage| averaged_post_state(&rho, stage)))
}

pub fn correlation_table(config: &ScenarioConfig, m: usize) -> Result<CorrelationTable> {
    let rho = state_before_charlie(config, m)?;
    let stage = &config.charlies()[m - 1];
    Ok(CorrelationTable {
        m,
        values: correlation_values(&rho, config.alice(), config.bob(), stage),
    })
}

/// C̄^m_{ijl}.
pub fn avg_correlation(config: &ScenarioConfig, m: usize, i: usize, j: usize, l: usize) -> Result<f64> {
    for idx in [i, j, l] {
        if idx > 1 {
            return Err(Error::InvalidSetting(idx));
        }
    }
    Ok(correlation_table(config, m)?.get(i, j, l))
}

/// M_m = |C̄_{100} + C̄_{010} + C̄_{001} − C̄_{111}|.
pub fn mermin_value(config: &ScenarioConfig, m: usize) -> Result<f64> {
    Ok(correlation_table(config, m)?.mermin())
}

/// S_m, the eight-term Svetlichny combination of C̄^m.
pub fn svetlichny_value(config: &ScenarioConfig, m: usize) -> Result<f64> {
    Ok(correlation_table(config, m)?.svetlichny())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharlieReport {
    pub m: usize,
    pub lambda: f64,
    pub mermin: f64,
    pub svetlichny: f64,
    pub correlations: CorrelationTable,
}

/// Per-Charlie inequality values for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub scenario: ScenarioConfig,
    pub charlies: Vec<CharlieReport>,
}

impl InequalityReport {
    pub fn values(&self, kind: InequalityKind) -> Vec<f64> {
        self.charlies
            .iter()
            .map(|c| match kind {
                InequalityKind::Mermin => c.mermin,
                InequalityKind::Svetlichny => c.svetlichny,
            })
            .collect()
    }

    pub fn last(&self) -> &CharlieReport {
        self.charlies.last().expect("scenario has at least one charlie")
    }

    /// Checks 0 ≤ M ≤ 4 and 0 ≤ S ≤ 4√2 up to `slack`.
    pub fn within_quantum_bounds(&self, slack: f64) -> bool {
        self.charlies.iter().all(|c| {
            c.mermin <= InequalityKind::Mermin.quantum_bound() + slack
                && c.svetlichny <= InequalityKind::Svetlichny.quantum_bound() + slack
                && c.correlations.values.iter().all(|v| v.abs() <= 1.0 + slack)
        })
    }
}

/// Evaluates every Charlie in one forward pass.
pub fn evaluate(config: &ScenarioConfig) -> InequalityReport {
    let mut rho = config.state().density().clone();
    let n = config.charlie_count();
    let mut charlies = Vec::with_capacity(n);
    for (idx, stage) in config.charlies().iter().enumerate() {
        let values = correlation_values(&rho, config.alice(), config.bob(), stage);
        let table = CorrelationTable { m: idx + 1, values };
        charlies.push(CharlieReport {
            m: idx + 1,
            lambda: stage.sharpness.lambda(),
            mermin: table.mermin(),
            svetlichny: table.svetlichny(),
            correlations: table,
        });
        if idx + 1 < n {
            rho = averaged_post_state(&rho, stage);
        }
    }
    InequalityReport {
        scenario: config.clone(),
        charlies,
    }
}

/// Setting index per party: Alice, Bob, then each Charlie in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SettingsChoice {
    pub alice: usize,
    pub bob: usize,
    pub charlies: Vec<usize>,
}

impl SettingsChoice {
    pub fn uniform(index: usize, charlies: usize) -> Self {
        Self {
            alice: index,
            bob: index,
            charlies: vec![index; charlies],
        }
    }

    pub(crate) fn directions(&self, config: &ScenarioConfig) -> Result<Vec<BlochDirection>> {
        if self.charlies.len() != config.charlie_count() {
            return Err(Error::InvalidScenario(format!(
                "settings choice names {} charlies, scenario has {}",
                self.charlies.len(),
                config.charlie_count()
            )));
        }
        let mut out = vec![config.alice().get(self.alice)?, config.bob().get(self.bob)?];
        for (stage, &k) in config.charlies().iter().zip(&self.charlies) {
            out.push(stage.settings.get(k)?);
        }
        Ok(out)
    }
}

/// Outcome per party: Alice, Bob, then each Charlie in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeTuple {
    pub alice: Outcome,
    pub bob: Outcome,
    pub charlies: Vec<Outcome>,
}

impl OutcomeTuple {
    /// Tuple number `index` in the enumeration order used by
    /// [`crate::protocol::JointDistribution`]: Alice is the most significant
    /// bit, bit value 1 means outcome −1.
    pub fn from_index(index: usize, charlies: usize) -> Self {
        let parties = charlies + 2;
        let bit = |slot: usize| {
            if (index >> (parties - 1 - slot)) & 1 == 0 {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        };
        Self {
            alice: bit(0),
            bob: bit(1),
            charlies: (0..charlies).map(|k| bit(k + 2)).collect(),
        }
    }

    pub fn index(&self) -> usize {
        let mut idx = 0;
        for o in [self.alice, self.bob].iter().chain(&self.charlies) {
            idx = (idx << 1) | usize::from(*o == Outcome::Minus);
        }
        idx
    }
}

/// P(a, b, c¹, …, cⁿ | settings) by sequential unnormalized Lüders updates.
pub fn joint_probability(config: &ScenarioConfig, settings: &SettingsChoice, outcomes: &OutcomeTuple) -> Result<f64> {
    let directions = settings.directions(config)?;
    if outcomes.charlies.len() != config.charlie_count() {
        return Err(Error::InvalidScenario(format!(
            "outcome tuple names {} charlies, scenario has {}",
            outcomes.charlies.len(),
            config.charlie_count()
        )));
    }
    let mut m = config.state().density().matrix().clone();
    let ops = [
        (0, directions[0], outcomes.alice, Sharpness::SHARP),
        (1, directions[1], outcomes.bob, Sharpness::SHARP),
    ];
    for (qubit, d, o, s) in ops {
        m = conjugate_local(&m, qubit, &sqrt_effect(d, o, s))?;
    }
    for ((stage, &d), &o) in config.charlies().iter().zip(&directions[2..]).zip(&outcomes.charlies) {
        m = conjugate_local(&m, 2, &sqrt_effect(d, o, stage.sharpness))?;
    }
    Ok(m.trace().re.max(0.0))
}

/// Σ_outcomes (a·b·cᵐ)·P by explicit operator algebra, without averaging:
/// Tr[(A ⊗ B ⊗ 𝕀)·Φ(ρ)] with Charlie m's effect difference, where earlier
/// Charlies apply their fixed-setting Lüders instruments.
pub fn fixed_setting_correlation(config: &ScenarioConfig, settings: &SettingsChoice, m: usize) -> Result<f64> {
    config.check_index(m)?;
    let directions = settings.directions(config)?;
    let mut rho = config.state().density().matrix().clone();
    for (stage, &d) in config.charlies()[..m - 1].iter().zip(&directions[2..]) {
        let mut acc = ComplexMatrix::zeros(8, 8);
        for o in Outcome::BOTH {
            acc = &acc + &conjugate_local(&rho, 2, &sqrt_effect(d, o, stage.sharpness))?;
        }
        rho = acc;
    }
    let lambda = config.charlies()[m - 1].sharpness.lambda();
    let ops = [observable(directions[0]), observable(directions[1]), observable(directions[m + 1])];
    for (qubit, op) in ops.iter().enumerate() {
        rho = apply_local_left(&rho, qubit, op)?;
    }
    Ok(lambda * rho.trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::scenario::InitialState;
    use crate::qcore::{kron, trace_product};

    fn mermin_reference(unsharp: &[f64]) -> ScenarioConfig {
        ScenarioConfig::reference(InequalityKind::Mermin, InitialState::ghz(), unsharp).unwrap()
    }

    #[test]
    fn sharp_z_dephases_ghz() {
        let z = PartySettings::new(BlochDirection::z(), BlochDirection::z());
        let post = averaged_post_state(InitialState::ghz().density(), &CharlieStage::new(z, Sharpness::SHARP));
        let expected = ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]);
        assert!(post.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn vanishing_sharpness_leaves_state_unchanged() {
        let (_, _, c) = InequalityKind::Mermin.reference_settings();
        let stage = CharlieStage::new(c, Sharpness::new(1e-9).unwrap());
        let ghz = InitialState::ghz();
        let post = averaged_post_state(ghz.density(), &stage);
        assert!(post.matrix().max_abs_diff(ghz.density().matrix()) < 1e-8);
    }

    #[test]
    fn yyx_correlation_of_ghz_is_minus_one() {
        let c = tripartite_correlation(
            InitialState::ghz().density(),
            BlochDirection::y(),
            BlochDirection::y(),
            BlochDirection::x(),
            Sharpness::SHARP,
        );
        assert!((c + 1.0).abs() < 1e-14);
    }

    #[test]
    fn fast_correlations_match_kron_trace_product() {
        let config = mermin_reference(&[0.6]);
        let rho = state_before_charlie(&config, 2).unwrap();
        let stage = config.charlies()[1];
        let fast = correlation_values(&rho, config.alice(), config.bob(), &stage);
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let op = kron(
                        &kron(&observable(config.alice().get(i).unwrap()), &observable(config.bob().get(j).unwrap())),
                        &observable(stage.settings.get(l).unwrap()),
                    );
                    let slow = trace_product(&op, rho.matrix()).unwrap().re;
                    assert!((slow - fast[4 * i + 2 * j + l]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn reference_maxima() {
        let m = mermin_value(&mermin_reference(&[]), 1).unwrap();
        assert!((m - 4.0).abs() < 1e-12);
        let sv = ScenarioConfig::reference(InequalityKind::Svetlichny, InitialState::ghz(), &[]).unwrap();
        assert!((svetlichny_value(&sv, 1).unwrap() - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn index_errors() {
        let config = mermin_reference(&[0.5]);
        assert!(matches!(avg_correlation(&config, 0, 0, 0, 0), Err(Error::CharlieOutOfRange { .. })));
        assert!(matches!(avg_correlation(&config, 3, 0, 0, 0), Err(Error::CharlieOutOfRange { .. })));
        assert_eq!(avg_correlation(&config, 1, 2, 0, 0), Err(Error::InvalidSetting(2)));
    }

    #[test]
    fn ghz_sharp_z_joint_probabilities() {
        let z = PartySettings::new(BlochDirection::z(), BlochDirection::z());
        let config = ScenarioConfig::new(
            InitialState::ghz(),
            z,
            z,
            vec![CharlieStage::new(z, Sharpness::SHARP)],
        )
        .unwrap();
        let choice = SettingsChoice::uniform(0, 1);
        let ppp = OutcomeTuple {
            alice: Outcome::Plus,
            bob: Outcome::Plus,
            charlies: vec![Outcome::Plus],
        };
        let ppm = OutcomeTuple {
            charlies: vec![Outcome::Minus],
            ..ppp.clone()
        };
        assert!((joint_probability(&config, &choice, &ppp).unwrap() - 0.5).abs() < 1e-15);
        assert!(joint_probability(&config, &choice, &ppm).unwrap().abs() < 1e-15);
    }

    #[test]
    fn outcome_index_roundtrip() {
        for idx in 0..32 {
            assert_eq!(OutcomeTuple::from_index(idx, 3).index(), idx);
        }
    }

    #[test]
    fn report_is_consistent_with_single_queries() {
        let config = mermin_reference(&[0.525, 0.567]);
        let report = evaluate(&config);
        for m in 1..=3 {
            let row = &report.charlies[m - 1];
            assert_eq!(row.mermin, mermin_value(&config, m).unwrap());
            assert_eq!(row.svetlichny, svetlichny_value(&config, m).unwrap());
        }
        assert!(report.within_quantum_bounds(1e-12));
    }
}

//! Spin observables, unsharp two-outcome effects and Lüders updates.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{conjugate_local, partial_trace_operator, trace_product, ComplexMatrix, DensityMatrix, Party, C64};

/// Born probabilities below this are treated as impossible outcomes.
pub const MIN_PROBABILITY: f64 = 1e-14;

const ANGLE_SLACK: f64 = 1e-9;

/// Unit vector on the Bloch sphere, `(sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochDirection {
    theta: f64,
    phi: f64,
}

impl BlochDirection {
    /// `theta` in [0, π], `phi` in [0, 2π].
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidDirection(format!(
                "angles must be finite (theta = {theta}, phi = {phi})"
            )));
        }
        if !(-ANGLE_SLACK..=PI + ANGLE_SLACK).contains(&theta) {
            return Err(Error::InvalidDirection(format!("theta = {theta} outside [0, pi]")));
        }
        if !(-ANGLE_SLACK..=2.0 * PI + ANGLE_SLACK).contains(&phi) {
            return Err(Error::InvalidDirection(format!("phi = {phi} outside [0, 2pi]")));
        }
        Ok(Self { theta, phi })
    }

    /// Equatorial direction at azimuth `phi`.
    pub fn equatorial(phi: f64) -> Result<Self> {
        Self::new(FRAC_PI_2, phi)
    }

    pub fn x() -> Self {
        Self { theta: FRAC_PI_2, phi: 0.0 }
    }

    pub fn y() -> Self {
        Self { theta: FRAC_PI_2, phi: FRAC_PI_2 }
    }

    pub fn z() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Sharpness λ of an unsharp measurement, 0 < λ ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Sharpness(f64);

impl Sharpness {
    pub const SHARP: Sharpness = Sharpness(1.0);

    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda <= 1.0 {
            Ok(Self(lambda))
        } else {
            Err(Error::InvalidSharpness(lambda))
        }
    }

    pub fn lambda(self) -> f64 {
        self.0
    }

    /// F = √(1 − λ²): how undisturbed the state is left.
    pub fn quality_factor(self) -> f64 {
        (1.0 - self.0 * self.0).max(0.0).sqrt()
    }

    /// G = λ: the information gain.
    pub fn precision(self) -> f64 {
        self.0
    }

    pub fn is_sharp(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for Sharpness {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Sharpness> for f64 {
    fn from(s: Sharpness) -> f64 {
        s.0
    }
}

/// Outcome of a two-outcome measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// d·σ⃗.
pub fn observable(d: BlochDirection) -> ComplexMatrix {
    let [x, y, z] = d.cartesian();
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new(z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(-z, 0.0),
        ],
    )
    .expect("2x2 literal")
}

/// (𝕀 + s·d·σ⃗)/2 for outcome sign s.
pub fn projector(d: BlochDirection, outcome: Outcome) -> ComplexMatrix {
    let [x, y, z] = d.cartesian();
    let s = 0.5 * outcome.sign();
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new(0.5 + s * z, 0.0),
            C64::new(s * x, -s * y),
            C64::new(s * x, s * y),
            C64::new(0.5 - s * z, 0.0),
        ],
    )
    .expect("2x2 literal")
}

/// One element λP + (1 − λ)𝕀/2 of an unsharp two-outcome POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    matrix: ComplexMatrix,
    direction: BlochDirection,
    outcome: Outcome,
    sharpness: Sharpness,
}

impl Effect {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn direction(&self) -> BlochDirection {
        self.direction
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn sharpness(&self) -> Sharpness {
        self.sharpness
    }

    /// Lüders square root of this effect.
    pub fn sqrt(&self) -> ComplexMatrix {
        sqrt_effect(self.direction, self.outcome, self.sharpness)
    }
}

pub fn effect(d: BlochDirection, outcome: Outcome, s: Sharpness) -> Effect {
    let lambda = s.lambda();
    let half_noise = C64::new(0.5 * (1.0 - lambda), 0.0);
    let mut matrix = projector(d, outcome).scale_real(lambda);
    matrix[(0, 0)] += half_noise;
    matrix[(1, 1)] += half_noise;
    Effect {
        matrix,
        direction: d,
        outcome,
        sharpness: s,
    }
}

/// √E in closed form: √((1+λ)/2)·P_s + √((1−λ)/2)·P_{−s}.
pub fn sqrt_effect(d: BlochDirection, outcome: Outcome, s: Sharpness) -> ComplexMatrix {
    let lambda = s.lambda();
    let keep = ((1.0 + lambda) / 2.0).sqrt();
    let leak = ((1.0 - lambda) / 2.0).max(0.0).sqrt();
    &projector(d, outcome).scale_real(keep) + &projector(d, outcome.flipped()).scale_real(leak)
}

/// Lüders update of `rho` after `party` measures along `d` with sharpness `s`
/// and obtains `outcome`. Returns the normalized post-state and Tr[Eρ].
pub fn luders_update(
    rho: &DensityMatrix,
    party: Party,
    d: BlochDirection,
    outcome: Outcome,
    s: Sharpness,
) -> Result<(DensityMatrix, f64)> {
    let qubit = party.qubit();
    if qubit >= rho.qubits() {
        return Err(Error::DimensionMismatch(format!(
            "party {party} has no qubit in a {}-qubit state",
            rho.qubits()
        )));
    }
    let root = sqrt_effect(d, outcome, s);
    let unnormalized = conjugate_local(rho.matrix(), qubit, &root)?;
    let probability = unnormalized.trace().re;
    if probability < MIN_PROBABILITY {
        return Err(Error::ZeroProbability);
    }
    let post = unnormalized.scale_real(1.0 / probability);
    Ok((DensityMatrix::from_matrix_unchecked(post), probability.min(1.0)))
}

/// Born probability Tr[E ρ] of `outcome` for `party`, with no state update.
pub fn outcome_probability(
    rho: &DensityMatrix,
    party: Party,
    d: BlochDirection,
    outcome: Outcome,
    s: Sharpness,
) -> Result<f64> {
    let e = effect(d, outcome, s);
    let reduced = partial_trace_operator(rho.matrix(), &[party])?;
    Ok(trace_product(e.matrix(), &reduced)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn observables_on_the_axes() {
        assert!(close(&observable(BlochDirection::z()), &pauli::z(), 1e-15));
        assert!(close(&observable(BlochDirection::new(FRAC_PI_2, 0.0).unwrap()), &pauli::x(), 1e-15));
        assert!(close(&observable(BlochDirection::new(FRAC_PI_2, FRAC_PI_2).unwrap()), &pauli::y(), 1e-15));
    }

    #[test]
    fn projectors() {
        let pz = projector(BlochDirection::z(), Outcome::Plus);
        assert!(close(&pz, &ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), 1e-15));
        let px = projector(BlochDirection::x(), Outcome::Plus);
        let half = ComplexMatrix::from_fn(2, 2, |_, _| C64::new(0.5, 0.0));
        assert!(close(&px, &half, 1e-15));
        let d = BlochDirection::new(1.1, 4.0).unwrap();
        let sum = &projector(d, Outcome::Plus) + &projector(d, Outcome::Minus);
        assert!(close(&sum, &ComplexMatrix::identity(2), 1e-15));
        let p = projector(d, Outcome::Minus);
        assert!(close(&(&p * &p), &p, 1e-15));
    }

    #[test]
    fn effect_examples() {
        let z = BlochDirection::z();
        let sharp = effect(z, Outcome::Plus, Sharpness::SHARP);
        assert!(close(sharp.matrix(), &ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), 1e-15));
        let half = effect(z, Outcome::Plus, Sharpness::new(0.5).unwrap());
        assert!(close(half.matrix(), &ComplexMatrix::from_real_diagonal(&[0.75, 0.25]), 1e-15));
        let root = sqrt_effect(z, Outcome::Plus, Sharpness::new(0.5).unwrap());
        assert!(close(&(&root * &root), half.matrix(), 1e-15));
        assert!(close(&sqrt_effect(z, Outcome::Plus, Sharpness::SHARP), sharp.matrix(), 1e-15));
    }

    #[test]
    fn effect_eigenvalues() {
        let s = Sharpness::new(0.37).unwrap();
        let e = effect(BlochDirection::new(0.4, 5.5).unwrap(), Outcome::Minus, s);
        let ev = e.matrix().hermitian_eigenvalues().unwrap();
        assert!((ev[0] - 0.5 * (1.0 - 0.37)).abs() < 1e-12);
        assert!((ev[1] - 0.5 * (1.0 + 0.37)).abs() < 1e-12);
    }

    #[test]
    fn sharpness_bounds() {
        assert!(Sharpness::new(0.0).is_err());
        assert!(Sharpness::new(-0.1).is_err());
        assert!(Sharpness::new(1.0 + 1e-12).is_err());
        assert!(Sharpness::new(f64::NAN).is_err());
        assert!(Sharpness::new(1e-9).is_ok());
        assert_eq!(Sharpness::SHARP.quality_factor(), 0.0);
        let msg = Sharpness::new(0.0).unwrap_err().to_string();
        assert!(msg.contains("(0, 1]"), "{msg}");
    }

    #[test]
    fn direction_bounds() {
        assert!(BlochDirection::new(-0.5, 0.0).is_err());
        assert!(BlochDirection::new(0.5, 7.0).is_err());
        assert!(BlochDirection::new(f64::NAN, 0.0).is_err());
        let d = BlochDirection::new(2.0, 3.0).unwrap();
        let n: f64 = d.cartesian().iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_outcome_is_an_error() {
        let up = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let err = luders_update(&up, Party::Alice, BlochDirection::z(), Outcome::Minus, Sharpness::SHARP)
            .unwrap_err();
        assert_eq!(err.to_string(), "outcome has zero probability; post-state undefined");
    }

    #[test]
    fn unbiased_on_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(1);
        let s = Sharpness::new(0.3).unwrap();
        let (post, p) = luders_update(&rho, Party::Alice, BlochDirection::new(0.7, 1.0).unwrap(), Outcome::Plus, s)
            .unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        post.validate().unwrap();
    }

    #[test]
    fn party_without_qubit_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(1);
        assert!(luders_update(&rho, Party::Charlie, BlochDirection::z(), Outcome::Plus, Sharpness::SHARP).is_err());
    }

    #[test]
    fn outcome_probability_matches_luders() {
        let rho = DensityMatrix::pure(&[
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.3),
            C64::new(0.5, 0.1),
        ])
        .unwrap();
        let d = BlochDirection::new(1.2, 0.3).unwrap();
        let s = Sharpness::new(0.8).unwrap();
        let p = outcome_probability(&rho, Party::Bob, d, Outcome::Plus, s).unwrap();
        let (_, q) = luders_update(&rho, Party::Bob, d, Outcome::Plus, s).unwrap();
        assert!((p - q).abs() < 1e-14);
    }
}

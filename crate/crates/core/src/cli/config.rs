//! Scenario files.
//!
//! ```toml
//! id = "ghz-mermin-2"
//!
//! [state]
//! kind = "ghz"            # "ghz" | "w" | "custom" (custom needs `real` and `imag`, 8×8)
//!
//! [alice]
//! setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
//! setting1 = { theta = "pi*0.5", phi = 0.0 }
//!
//! [bob]
//! setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
//! setting1 = { theta = "pi*0.5", phi = 0.0 }
//!
//! [[charlie]]
//! lambda = 0.525
//! setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
//! setting1 = { theta = "pi*0.5", phi = 0.0 }
//!
//! [[charlie]]
//! lambda = 1.0
//! setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
//! setting1 = { theta = "pi*0.5", phi = 0.0 }
//! ```
//!
//! Angles are radians, either a number or `"pi"`, `"pi*X"`, `"pi/X"`.
//! Written files use plain numbers, which read back bit-identically.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::measure::{BlochDirection, Sharpness};
use crate::protocol::{CharlieStage, InitialState, PartySettings, ScenarioConfig, StateKind};
use crate::qcore::{ComplexMatrix, DensityMatrix, C64};

/// A malformed or invalid scenario file; `field` is the dotted path of the
/// offending entry when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: Some(field.into()),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Angle {
    Number(f64),
    Text(String),
}

impl Angle {
    fn resolve(&self, field: &str) -> Result<f64, ConfigError> {
        match self {
            Angle::Number(v) => Ok(*v),
            Angle::Text(s) => parse_angle(s).ok_or_else(|| {
                ConfigError::at(field, format!("cannot read angle {s:?}; use a number, \"pi\", \"pi*X\" or \"pi/X\""))
            }),
        }
    }
}

/// `"pi"`, `"pi*X"`, `"pi/X"` or a plain decimal.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim();
    if t == "pi" {
        return Some(PI);
    }
    if let Some(rest) = t.strip_prefix("pi*") {
        return rest.trim().parse::<f64>().ok().map(|x| PI * x);
    }
    if let Some(rest) = t.strip_prefix("pi/") {
        return rest.trim().parse::<f64>().ok().filter(|x| *x != 0.0).map(|x| PI / x);
    }
    t.parse().ok()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDirection {
    theta: Angle,
    phi: Angle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParty {
    setting0: RawDirection,
    setting1: RawDirection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCharlie {
    lambda: f64,
    setting0: RawDirection,
    setting1: RawDirection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    real: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    imag: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    state: RawState,
    alice: RawParty,
    bob: RawParty,
    #[serde(default)]
    charlie: Vec<RawCharlie>,
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub id: Option<String>,
    pub scenario: ScenarioConfig,
}

fn direction(raw: &RawDirection, field: &str) -> Result<BlochDirection, ConfigError> {
    let theta = raw.theta.resolve(&format!("{field}.theta"))?;
    let phi = raw.phi.resolve(&format!("{field}.phi"))?;
    if !(0.0..=PI + 1e-9).contains(&theta) {
        return Err(ConfigError::at(format!("{field}.theta"), format!("polar angle must lie in [0, pi], got {theta}")));
    }
    if !(0.0..=2.0 * PI + 1e-9).contains(&phi) {
        return Err(ConfigError::at(format!("{field}.phi"), format!("azimuth must lie in [0, 2pi], got {phi}")));
    }
    BlochDirection::new(theta, phi).map_err(|e| ConfigError::at(field, e))
}

fn party(raw: &RawParty, field: &str) -> Result<PartySettings, ConfigError> {
    Ok(PartySettings::new(
        direction(&raw.setting0, &format!("{field}.setting0"))?,
        direction(&raw.setting1, &format!("{field}.setting1"))?,
    ))
}

fn matrix_part(rows: &Option<Vec<Vec<f64>>>, field: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    let rows = rows
        .as_ref()
        .ok_or_else(|| ConfigError::at(field, "required for a custom state"))?;
    if rows.len() != 8 || rows.iter().any(|r| r.len() != 8) {
        return Err(ConfigError::at(field, "must be an 8x8 array"));
    }
    Ok(rows.clone())
}

fn state(raw: &RawState) -> Result<InitialState, ConfigError> {
    match raw.kind {
        StateKind::Custom => {
            let re = matrix_part(&raw.real, "state.real")?;
            let im = matrix_part(&raw.imag, "state.imag")?;
            let m = ComplexMatrix::from_fn(8, 8, |r, c| C64::new(re[r][c], im[r][c]));
            let rho = DensityMatrix::new(m).map_err(|e| ConfigError::at("state", e))?;
            InitialState::custom(rho).map_err(|e| ConfigError::at("state", e))
        }
        kind => {
            if raw.real.is_some() || raw.imag.is_some() {
                return Err(ConfigError::at("state", format!("matrix entries are only read for kind = \"custom\", not \"{kind}\"")));
            }
            InitialState::from_kind(kind).map_err(|e| ConfigError::at("state.kind", e))
        }
    }
}

/// Parses and validates a scenario file. `allow_unsharp_final` lifts the
/// requirement that the last Charlie measures sharply.
pub fn parse_scenario(text: &str, allow_unsharp_final: bool) -> Result<ScenarioFile, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        field: None,
        message: e.to_string().trim_end().to_string(),
    })?;
    let state = state(&raw.state)?;
    let alice = party(&raw.alice, "alice")?;
    let bob = party(&raw.bob, "bob")?;
    if raw.charlie.is_empty() {
        return Err(ConfigError::at("charlie", "at least one [[charlie]] entry is required"));
    }
    let mut charlies = Vec::with_capacity(raw.charlie.len());
    for (k, c) in raw.charlie.iter().enumerate() {
        let field = format!("charlie[{}]", k + 1);
        let sharpness = Sharpness::new(c.lambda).map_err(|e| ConfigError::at(format!("{field}.lambda"), e))?;
        let settings = PartySettings::new(
            direction(&c.setting0, &format!("{field}.setting0"))?,
            direction(&c.setting1, &format!("{field}.setting1"))?,
        );
        charlies.push(CharlieStage::new(settings, sharpness));
    }
    let n = charlies.len();
    let scenario = ScenarioConfig::with_final_policy(state, alice, bob, charlies, !allow_unsharp_final)
        .map_err(|e| ConfigError::at(format!("charlie[{n}].lambda"), e))?;
    Ok(ScenarioFile { id: raw.id, scenario })
}

fn raw_direction(d: BlochDirection) -> RawDirection {
    RawDirection {
        theta: Angle::Number(d.theta()),
        phi: Angle::Number(d.phi()),
    }
}

fn raw_party(p: &PartySettings) -> RawParty {
    RawParty {
        setting0: raw_direction(p.setting0),
        setting1: raw_direction(p.setting1),
    }
}

/// Writes `scenario` in the file format; [`parse_scenario`] reads it back to
/// an identical value.
pub fn render_scenario(id: Option<&str>, scenario: &ScenarioConfig) -> String {
    let st = scenario.state();
    let (real, imag) = if st.kind() == StateKind::Custom {
        let m = st.density().matrix();
        let part = |f: fn(C64) -> f64| (0..8).map(|r| (0..8).map(|c| f(m[(r, c)])).collect()).collect();
        (Some(part(|z| z.re)), Some(part(|z| z.im)))
    } else {
        (None, None)
    };
    let raw = RawConfig {
        id: id.map(str::to_string),
        state: RawState { kind: st.kind(), real, imag },
        alice: raw_party(scenario.alice()),
        bob: raw_party(scenario.bob()),
        charlie: scenario
            .charlies()
            .iter()
            .map(|c| RawCharlie {
                lambda: c.sharpness.lambda(),
                setting0: raw_direction(c.settings.setting0),
                setting1: raw_direction(c.settings.setting1),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::InequalityKind;

    const SAMPLE: &str = r#"
id = "sample"
[state]
kind = "ghz"
[alice]
setting0 = { theta = "pi*0.5", phi = "pi/2" }
setting1 = { theta = "pi*0.5", phi = 0 }
[bob]
setting0 = { theta = 1.5707963267948966, phi = "pi*0.5" }
setting1 = { theta = "pi*0.5", phi = 0.0 }
[[charlie]]
lambda = 0.525
setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
setting1 = { theta = "pi*0.5", phi = 0.0 }
[[charlie]]
lambda = 1.0
setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
setting1 = { theta = "pi*0.5", phi = 0.0 }
"#;

    #[test]
    fn angle_forms() {
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("pi*0.25"), Some(PI * 0.25));
        assert_eq!(parse_angle("pi/4"), Some(PI / 4.0));
        assert_eq!(parse_angle("0.5"), Some(0.5));
        assert_eq!(parse_angle("tau"), None);
        assert_eq!(parse_angle("pi/0"), None);
    }

    #[test]
    fn sample_matches_reference_settings() {
        let file = parse_scenario(SAMPLE, false).unwrap();
        let expected = ScenarioConfig::reference(InequalityKind::Mermin, InitialState::ghz(), &[0.525]).unwrap();
        assert_eq!(file.scenario, expected);
        assert_eq!(file.id.as_deref(), Some("sample"));
    }

    #[test]
    fn round_trip() {
        let file = parse_scenario(SAMPLE, false).unwrap();
        let text = render_scenario(file.id.as_deref(), &file.scenario);
        assert_eq!(parse_scenario(&text, false).unwrap(), file);
    }

    #[test]
    fn zero_lambda_names_the_field() {
        let bad = SAMPLE.replace("lambda = 0.525", "lambda = 0.0");
        let err = parse_scenario(&bad, false).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("charlie[1].lambda"));
        assert!(err.message.contains("sharpness must lie in (0, 1]"));
    }

    #[test]
    fn unsharp_final_needs_the_flag() {
        let text = SAMPLE.replace("lambda = 1.0", "lambda = 0.9");
        let err = parse_scenario(&text, false).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("charlie[2].lambda"));
        assert!(parse_scenario(&text, true).is_ok());
    }

    #[test]
    fn malformed_input_reports_position() {
        let err = parse_scenario("[state]\nkind = \"ghz\"\n[alice]\nsetting0 = 3\n", false).unwrap_err();
        assert!(err.message.contains("line"), "{err}");
        let err = parse_scenario(&SAMPLE.replace("kind = \"ghz\"", "kind = \"bell\""), false).unwrap_err();
        assert!(err.message.contains("bell"), "{err}");
    }

    #[test]
    fn angle_out_of_range() {
        let err = parse_scenario(&SAMPLE.replace("phi = \"pi/2\"", "phi = \"pi*3\""), false).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("alice.setting0.phi"));
    }
}

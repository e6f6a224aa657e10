//! JSON and CSV encodings of command results.
//!
//! Report CSV columns: `scenario_id, m, lambda_m, M_m, S_m, c000 … c111`,
//! correlators in lexicographic (i, j, l) order.

use serde_json::{json, Map, Value};

use crate::protocol::{CharlieReport, CorrelationTable, InequalityReport};

pub const REPORT_COLUMNS: [&str; 13] = [
    "scenario_id", "m", "lambda_m", "M_m", "S_m", "c000", "c001", "c010", "c011", "c100", "c101", "c110", "c111",
];

fn correlations_json(t: &CorrelationTable) -> Value {
    let mut map = Map::new();
    for (label, v) in CorrelationTable::labels().iter().zip(t.values) {
        map.insert(format!("c{label}"), json!(v));
    }
    Value::Object(map)
}

pub fn charlie_json(c: &CharlieReport) -> Value {
    json!({
        "m": c.m,
        "lambda": c.lambda,
        "mermin": c.mermin,
        "svetlichny": c.svetlichny,
        "correlations": correlations_json(&c.correlations),
    })
}

pub fn report_json(id: &str, report: &InequalityReport) -> Value {
    json!({
        "scenario_id": id,
        "state": report.scenario.state().kind().to_string(),
        "schedule": report.scenario.sharpness_schedule(),
        "charlies": report.charlies.iter().map(charlie_json).collect::<Vec<_>>(),
    })
}

/// Shortest text that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn report_records(id: &str, report: &InequalityReport) -> Vec<Vec<String>> {
    report
        .charlies
        .iter()
        .map(|c| {
            let mut row = vec![
                id.to_string(),
                c.m.to_string(),
                num(c.lambda),
                num(c.mermin),
                num(c.svetlichny),
            ];
            row.extend(c.correlations.values.iter().map(|v| num(*v)));
            row
        })
        .collect()
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn json_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

/// "m=2, M=3.7022, S=1.2345" per Charlie.
pub fn summary_lines(report: &InequalityReport) -> Vec<String> {
    report
        .charlies
        .iter()
        .map(|c| format!("m={}, lambda={:.4}, M={:.4}, S={:.4}", c.m, c.lambda, c.mermin, c.svetlichny))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{evaluate, InequalityKind, InitialState, ScenarioConfig};

    #[test]
    fn csv_has_fixed_columns() {
        let config = ScenarioConfig::reference(InequalityKind::Mermin, InitialState::ghz(), &[0.525]).unwrap();
        let report = evaluate(&config);
        let text = csv_string(&REPORT_COLUMNS, &report_records("x", &report));
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 13);
        assert_eq!(first[0], "x");
        assert_eq!(first[1], "1");
        assert!((first[3].parse::<f64>().unwrap() - 2.1).abs() < 1e-12);
    }

    #[test]
    fn summary_format() {
        let config = ScenarioConfig::reference(InequalityKind::Mermin, InitialState::ghz(), &[0.525]).unwrap();
        let lines = summary_lines(&evaluate(&config));
        assert!(lines[1].starts_with("m=2, lambda=1.0000, M=3.7022"), "{}", lines[1]);
    }
}

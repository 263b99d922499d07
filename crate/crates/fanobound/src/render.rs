//! Report output: JSON, one-row CSV and a human-readable table.
//!
//! JSON and CSV print floats in shortest round-trip form, so both parse back
//! to the identical `f64`. Non-finite values are written as the strings
//! `inf`, `-inf` and `nan`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::ValueEnum;
use fanobound_core::report::BoundDirection;
use fanobound_core::{BoundReport, Reference, Verdict};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Extra per-run statistics (for example transcript count of a bandit).
pub type Extras = BTreeMap<String, f64>;

pub fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Shortest round-trip text for a float.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

pub fn direction_str(d: BoundDirection) -> &'static str {
    match d {
        BoundDirection::Lower => "lower",
        BoundDirection::Upper => "upper",
        BoundDirection::Interval => "interval",
    }
}

fn reference_json(r: &Reference) -> Value {
    match r {
        Reference::Mixture => json!({"kind": "mixture"}),
        Reference::Explicit { label, probs } => json!({
            "kind": "explicit",
            "label": label,
            "probs": probs.iter().map(|&p| json_number(p)).collect::<Vec<_>>(),
        }),
        Reference::BestOfCandidates { candidates, winner } => json!({
            "kind": "best_of_candidates",
            "candidates": candidates,
            "winner": winner,
        }),
    }
}

fn gap(v: &Verdict) -> Option<f64> {
    match v {
        Verdict::ExactFailsBy(g) => Some(*g),
        _ => None,
    }
}

fn numbers(map: &BTreeMap<String, f64>) -> Value {
    Value::Object(map.iter().map(|(k, &v)| (k.clone(), json_number(v))).collect::<Map<_, _>>())
}

pub fn report_json(report: &BoundReport, extras: &Extras) -> Value {
    let mut v = json!({
        "theorem": report.theorem.as_str(),
        "divergence": report.divergence,
        "transform": report.transform,
        "reference": reference_json(&report.reference),
        "budget": json_number(report.budget),
        "direction": direction_str(report.direction),
        "bound": json_number(report.bound),
        "quantities": numbers(&report.quantities),
        "tolerances": {
            "tolerance": json_number(report.tolerances.tolerance),
            "t_refine": report.tolerances.t_refine,
            "verify_slack": json_number(report.tolerances.verify_slack),
        },
        "vacuous": report.vacuous,
        "verified": {
            "verdict": report.verified.as_str(),
            "gap": gap(&report.verified).map(json_number),
        },
        "notes": report.notes,
    });
    if !extras.is_empty() {
        v["instance"] = numbers(extras);
    }
    v
}

/// Header and values of the one-row CSV form. Quantities keep their names;
/// extras are prefixed with `instance_`.
pub fn report_row(report: &BoundReport, extras: &Extras) -> (Vec<String>, Vec<String>) {
    let mut header: Vec<String> = [
        "theorem", "divergence", "transform", "reference", "budget", "direction", "bound",
        "vacuous", "verified", "gap",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut row = vec![
        report.theorem.as_str().to_string(),
        report.divergence.clone(),
        report.transform.clone().unwrap_or_default(),
        report.reference.label().to_string(),
        format_float(report.budget),
        direction_str(report.direction).to_string(),
        format_float(report.bound),
        report.vacuous.to_string(),
        report.verified.as_str().to_string(),
        gap(&report.verified).map(format_float).unwrap_or_default(),
    ];
    for (k, &v) in &report.quantities {
        header.push(k.clone());
        row.push(format_float(v));
    }
    for (k, &v) in extras {
        header.push(format!("instance_{k}"));
        row.push(format_float(v));
    }
    (header, row)
}

pub fn report_csv(report: &BoundReport, extras: &Extras) -> String {
    let (header, row) = report_row(report, extras);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    w.write_record(&row).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn round6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        format_float(x)
    }
}

pub fn report_table(report: &BoundReport, extras: &Extras) -> String {
    let mut lines: Vec<(String, String)> = vec![
        ("theorem".into(), report.theorem.as_str().into()),
        ("divergence".into(), report.divergence.clone()),
    ];
    if let Some(t) = &report.transform {
        lines.push(("transform".into(), t.clone()));
    }
    lines.push(("reference".into(), report.reference.label().into()));
    lines.push(("budget".into(), round6(report.budget)));
    lines.push(("direction".into(), direction_str(report.direction).into()));
    lines.push(("bound".into(), round6(report.bound)));
    for (k, &v) in &report.quantities {
        lines.push((k.clone(), round6(v)));
    }
    for (k, &v) in extras {
        lines.push((format!("instance.{k}"), round6(v)));
    }
    lines.push(("vacuous".into(), report.vacuous.to_string()));
    let verdict = match report.verified {
        Verdict::ExactFailsBy(g) => format!("exact_fails_by {}", round6(g)),
        v => v.as_str().into(),
    };
    lines.push(("verified".into(), verdict));
    let width = lines.iter().map(|l| l.0.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in lines {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

pub fn render(report: &BoundReport, extras: &Extras, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(report, extras)).expect("json value");
            s.push('\n');
            s
        }
        OutputFormat::Csv => report_csv(report, extras),
        OutputFormat::Table => report_table(report, extras),
    }
}

//! Deterministic report emission.
//!
//! JSON is canonical: object keys sorted, floats printed with 17 significant
//! digits so they round-trip exactly. CSV has a header row and one row per
//! point or check. Identical inputs produce byte-identical files.

use crate::algebra::AxiomReport;
use crate::error::Result;
use crate::funceq::DefectReport;
use crate::stability::{ExtractionRecord, StabilityReport};
use serde::Serialize;
use serde_json::Value;

/// 17-significant-digit scientific notation; round-trips any finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's map is BTree-backed, so iteration is key-sorted.
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(&Value::String(k.clone()), out);
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

/// Canonical single-line JSON without a trailing newline.
pub fn json_compact<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, &mut out);
    Ok(out)
}

/// Canonical JSON document (trailing newline included).
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = json_compact(value)?;
    out.push('\n');
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

fn csv_document(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut out = csv_line(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    out.push('\n');
    for row in rows {
        out.push_str(&csv_line(&row));
        out.push('\n');
    }
    out
}

/// One row per grid point: index, point coordinates, defect, optional ratio.
pub fn defect_csv(report: &DefectReport) -> Result<String> {
    let mut rows = Vec::with_capacity(report.rows.len());
    for (i, row) in report.rows.iter().enumerate() {
        rows.push(vec![
            i.to_string(),
            json_compact(&row.point)?,
            fmt_f64(row.value),
            row.ratio.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    Ok(csv_document(&["index", "point", "defect", "ratio"], rows))
}

/// One row per axiom: name, worst violation, pass.
pub fn axiom_csv(report: &AxiomReport) -> Result<String> {
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.axiom.clone(),
                fmt_f64(c.worst_violation),
                c.pass.to_string(),
            ]
        })
        .collect();
    Ok(csv_document(&["axiom", "worst_violation", "pass"], rows))
}

/// Flat table of an experiment's pointwise bound checks.
pub fn bound_checks_csv(report: &StabilityReport) -> Result<String> {
    let mut rows = Vec::with_capacity(report.bound_checks.len());
    for (i, check) in report.bound_checks.iter().enumerate() {
        rows.push(vec![
            i.to_string(),
            check.label.clone(),
            json_compact(&check.point)?,
            fmt_f64(check.lhs),
            fmt_f64(check.rhs),
            check.pass.to_string(),
        ]);
    }
    Ok(csv_document(
        &["index", "label", "point", "lhs", "rhs", "pass"],
        rows,
    ))
}

/// Flat table of extraction certificates (one row per point).
pub fn certificates_csv(records: &[ExtractionRecord]) -> Result<String> {
    let mut rows = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let cert = &rec.certificate;
        rows.push(vec![
            i.to_string(),
            rec.label.clone(),
            json_compact(&rec.point)?,
            json_compact(&cert.limit)?,
            cert.n_steps.to_string(),
            cert.converged.to_string(),
            if cert.aposteriori_bound.is_infinite() {
                "inf".to_string()
            } else {
                fmt_f64(cert.aposteriori_bound.value())
            },
            cert.increments.last().map(|d| fmt_f64(*d)).unwrap_or_default(),
        ]);
    }
    Ok(csv_document(
        &[
            "index",
            "label",
            "point",
            "limit",
            "n_steps",
            "converged",
            "aposteriori_bound",
            "final_increment",
        ],
        rows,
    ))
}

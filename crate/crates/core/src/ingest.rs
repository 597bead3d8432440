//! Turning pre-downloaded dataset exports into gaussian bandit instances.
//!
//! Both readers take two-column CSV text, `(id, value)`, with an optional
//! header row. Ids keep their order of first appearance.

use crate::bandit::{ArmDistribution, BanditInstance};
use crate::error::{CbaiError, Result};

/// Clip applied to percentage-control values before taking the logarithm.
pub const CONTROL_CLIP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct IngestedInstance {
    pub names: Vec<String>,
    pub instance: BanditInstance,
}

fn ingest_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CbaiError::Ingest(msg.into()))
}

/// Parses `(id, value)` rows. An empty value cell is kept as `None`.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, Option<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CbaiError::Ingest(e.to_string()))?;
        if record.len() < 2 {
            if record.iter().all(str::is_empty) {
                continue;
            }
            return ingest_err(format!("row {} has fewer than two columns", line + 1));
        }
        let id = record[0].to_string();
        let cell = &record[1];
        let value = if cell.is_empty() {
            None
        } else {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ if line == 0 => continue, // header
                _ => return ingest_err(format!("row {}: {cell:?} is not a number", line + 1)),
            }
        };
        rows.push((id, value));
    }
    Ok(rows)
}

/// Groups values by id in order of first appearance.
fn group(rows: &[(String, Option<f64>)]) -> Vec<(String, Vec<f64>)> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (id, v) in rows {
        let idx = match groups.iter().position(|(g, _)| g == id) {
            Some(i) => i,
            None => {
                groups.push((id.clone(), Vec::new()));
                groups.len() - 1
            }
        };
        if let Some(v) = v {
            groups[idx].1.push(*v);
        }
    }
    groups
}

/// One gaussian arm per item, centred on the item's mean rating.
pub fn ingest_ratings(rows: &[(String, Option<f64>)], sigma: f64) -> Result<IngestedInstance> {
    let groups = group(rows);
    if let Some((id, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return ingest_err(format!("item {id:?} has no ratings"));
    }
    if groups.len() < 2 {
        return ingest_err(format!("need at least two items, found {}", groups.len()));
    }
    let means: Vec<f64> = groups
        .iter()
        .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    build(
        groups.into_iter().map(|(id, _)| id).collect(),
        &means,
        sigma,
    )
}

/// Min-max normalises percentage inhibition over the file, converts it to
/// percentage control `1 - x` and uses `ln(max(control, 1e-6))` as the arm
/// mean. Repeated ids are averaged first.
pub fn ingest_pkis2(rows: &[(String, Option<f64>)], sigma: f64) -> Result<IngestedInstance> {
    let groups = group(rows);
    if let Some((id, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return ingest_err(format!("compound {id:?} has no inhibition value"));
    }
    if groups.len() < 2 {
        return ingest_err(format!(
            "need at least two compounds, found {}",
            groups.len()
        ));
    }
    let inhibition: Vec<f64> = groups
        .iter()
        .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let lo = inhibition.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inhibition.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return ingest_err("inhibition column is constant; cannot normalise");
    }
    let means: Vec<f64> = inhibition
        .iter()
        .map(|x| {
            let control = 1.0 - (x - lo) / (hi - lo);
            control.max(CONTROL_CLIP).ln()
        })
        .collect();
    build(
        groups.into_iter().map(|(id, _)| id).collect(),
        &means,
        sigma,
    )
}

fn build(names: Vec<String>, means: &[f64], sigma: f64) -> Result<IngestedInstance> {
    let arms = means
        .iter()
        .map(|&m| ArmDistribution::gaussian(m, sigma))
        .collect::<Result<Vec<_>>>()?;
    Ok(IngestedInstance {
        names,
        instance: BanditInstance::new(arms, sigma)?,
    })
}

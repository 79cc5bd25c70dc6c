//! Result records and their JSON / CSV encodings.

use std::collections::BTreeMap;

use holonomy_core::matcore::{c, unitarity_defect, CMatrix};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Job};
use crate::Failure;

/// Largest `‖M†M − I‖` accepted for an emitted matrix.
pub const UNITARITY_LIMIT: f64 = 1e-6;

/// Row-major complex matrix, each entry `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixRecord(pub Vec<Vec<[f64; 2]>>);

impl MatrixRecord {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixRecord(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.0.len();
        let k = self.0.first().map_or(0, Vec::len);
        CMatrix::from_fn(n, k, |i, j| c(self.0[i][j][0], self.0[i][j][1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyRecord {
    #[serde(rename = "M")]
    pub m: MatrixRecord,
    #[serde(rename = "W")]
    pub w: MatrixRecord,
    #[serde(rename = "B")]
    pub b: MatrixRecord,
    pub permutation: Vec<usize>,
    /// Phases (radians) of the pattern entries of `M`.
    pub level_phases: Vec<f64>,
    pub residual: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    #[serde(rename = "L")]
    pub kicks: usize,
    pub deviation: f64,
    pub permutation: Vec<usize>,
    /// Holonomy read off the exact evolution.
    #[serde(rename = "M_evolution")]
    pub m_evolution: MatrixRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub formula: String,
    pub inputs: BTreeMap<String, f64>,
    #[serde(rename = "M_expected")]
    pub m_expected: MatrixRecord,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub kicks: usize,
    pub deviation: f64,
    pub permutation: Vec<usize>,
}

/// Fields that legitimately differ between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Sidecar {
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub job: Job,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<HolonomyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    pub sidecar: Sidecar,
}

impl ResultRecord {
    fn matrices(&self) -> Vec<(&'static str, &MatrixRecord)> {
        let mut out = Vec::new();
        if let Some(h) = &self.holonomy {
            out.extend([("M", &h.m), ("W", &h.w), ("B", &h.b)]);
        }
        if let Some(e) = &self.evolution {
            out.push(("M_evolution", &e.m_evolution));
        }
        if let Some(v) = &self.verification {
            out.push(("M_expected", &v.m_expected));
        }
        out
    }

    pub fn check_unitary(&self) -> Result<(), Failure> {
        for (name, m) in self.matrices() {
            let d = unitarity_defect(&m.to_matrix());
            if !(d < UNITARITY_LIMIT) {
                return Err(Failure::Internal(format!("{name} is not unitary (defect {d:.3e}); nothing written")));
            }
        }
        Ok(())
    }

    /// The record without its sidecar, for determinism checks.
    pub fn body(&self) -> ResultRecord {
        ResultRecord {
            sidecar: Sidecar::default(),
            ..self.clone()
        }
    }
}

pub fn to_json(record: &ResultRecord) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(record).map_err(|e| Failure::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<ResultRecord, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Validation(format!("not a result record: {e}")))
}

/// One CSV line. Matrix entries fill `row`, `col`, `re`, `im`; scalars
/// use `re`; strings use `text`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    field: String,
    row: Option<usize>,
    col: Option<usize>,
    re: Option<f64>,
    im: Option<f64>,
    text: Option<String>,
}

impl CsvRow {
    fn scalar(field: &str, v: f64) -> Self {
        CsvRow { field: field.into(), row: None, col: None, re: Some(v), im: None, text: None }
    }
    fn text(field: &str, t: String) -> Self {
        CsvRow { field: field.into(), row: None, col: None, re: None, im: None, text: Some(t) }
    }
    fn indexed(field: &str, row: usize, col: Option<usize>, re: Option<f64>) -> Self {
        CsvRow { field: field.into(), row: Some(row), col, re, im: None, text: None }
    }
}

fn csv_error(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(format!("csv: {e}"))
}

fn push_matrix(rows: &mut Vec<CsvRow>, field: &str, m: &MatrixRecord) {
    for (i, r) in m.0.iter().enumerate() {
        for (j, z) in r.iter().enumerate() {
            rows.push(CsvRow {
                field: field.into(),
                row: Some(i),
                col: Some(j),
                re: Some(z[0]),
                im: Some(z[1]),
                text: None,
            });
        }
    }
}

fn push_permutation(rows: &mut Vec<CsvRow>, field: &str, perm: &[usize]) {
    for (n, &m) in perm.iter().enumerate() {
        rows.push(CsvRow::indexed(field, n, Some(m), None));
    }
}

/// Sweeps are emitted as the plot-ready table `L,deviation`; every other
/// job as one row per matrix entry plus summary rows.
pub fn to_csv(record: &ResultRecord) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(sweep) = &record.sweep {
        w.write_record(["L", "deviation"]).map_err(csv_error)?;
        for r in sweep {
            w.write_record([r.kicks.to_string(), r.deviation.to_string()]).map_err(csv_error)?;
        }
    } else {
        let mut rows = Vec::new();
        let job = serde_json::to_value(record.job).map_err(csv_error)?;
        rows.push(CsvRow::text("job", job.as_str().unwrap_or_default().to_string()));
        rows.push(CsvRow::text("config", serde_json::to_string(&record.config).map_err(csv_error)?));
        if let Some(h) = &record.holonomy {
            push_matrix(&mut rows, "M", &h.m);
            push_matrix(&mut rows, "W", &h.w);
            push_matrix(&mut rows, "B", &h.b);
            push_permutation(&mut rows, "permutation", &h.permutation);
            for (n, &ph) in h.level_phases.iter().enumerate() {
                rows.push(CsvRow::indexed("level_phase", n, None, Some(ph)));
            }
            rows.push(CsvRow::scalar("residual", h.residual));
            rows.push(CsvRow::scalar("steps", h.steps as f64));
            if let Some(warn) = &h.warning {
                rows.push(CsvRow::text("warning", warn.clone()));
            }
        }
        if let Some(e) = &record.evolution {
            rows.push(CsvRow::scalar("L", e.kicks as f64));
            rows.push(CsvRow::scalar("deviation", e.deviation));
            push_permutation(&mut rows, "evolution_permutation", &e.permutation);
            push_matrix(&mut rows, "M_evolution", &e.m_evolution);
        }
        if let Some(v) = &record.verification {
            rows.push(CsvRow::text("formula", v.formula.clone()));
            for (k, x) in &v.inputs {
                rows.push(CsvRow { field: "input".into(), row: None, col: None, re: Some(*x), im: None, text: Some(k.clone()) });
            }
            push_matrix(&mut rows, "M_expected", &v.m_expected);
            rows.push(CsvRow::scalar("error", v.error));
            rows.push(CsvRow::scalar("tolerance", v.tolerance));
            rows.push(CsvRow::scalar("passed", if v.passed { 1.0 } else { 0.0 }));
        }
        rows.push(CsvRow::scalar("wall_time_seconds", record.sidecar.wall_time_seconds));
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

/// Reads back the table written for a sweep.
pub fn sweep_from_csv(text: &str) -> Result<Vec<(usize, f64)>, Failure> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["L", "deviation"] {
        return Err(Failure::Validation(format!("expected header L,deviation, got {headers:?}")));
    }
    rd.deserialize::<(usize, f64)>().map(|r| r.map_err(csv_error)).collect()
}

fn put_matrix(m: &mut Option<Vec<Vec<[f64; 2]>>>, row: &CsvRow) -> Result<(), Failure> {
    let (Some(i), Some(j), Some(re), Some(im)) = (row.row, row.col, row.re, row.im) else {
        return Err(Failure::Validation(format!("incomplete matrix row for {}", row.field)));
    };
    let m = m.get_or_insert_with(Vec::new);
    if m.len() <= i {
        m.resize(i + 1, Vec::new());
    }
    if m[i].len() <= j {
        m[i].resize(j + 1, [0.0, 0.0]);
    }
    m[i][j] = [re, im];
    Ok(())
}

/// Rebuilds a record written by [`to_csv`] for a non-sweep job.
pub fn from_csv(text: &str) -> Result<ResultRecord, Failure> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut mats: BTreeMap<String, Option<Vec<Vec<[f64; 2]>>>> = BTreeMap::new();
    let mut scalars: BTreeMap<String, f64> = BTreeMap::new();
    let mut texts: BTreeMap<String, String> = BTreeMap::new();
    let mut perms: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut phases = Vec::new();
    let mut inputs = BTreeMap::new();
    for row in rd.deserialize::<CsvRow>() {
        let row = row.map_err(csv_error)?;
        match row.field.as_str() {
            "M" | "W" | "B" | "M_evolution" | "M_expected" => put_matrix(mats.entry(row.field.clone()).or_default(), &row)?,
            "permutation" | "evolution_permutation" => {
                let p = perms.entry(row.field.clone()).or_default();
                let (Some(n), Some(m)) = (row.row, row.col) else {
                    return Err(Failure::Validation("incomplete permutation row".into()));
                };
                if p.len() <= n {
                    p.resize(n + 1, 0);
                }
                p[n] = m;
            }
            "level_phase" => phases.push(row.re.unwrap_or(f64::NAN)),
            "input" => {
                inputs.insert(row.text.clone().unwrap_or_default(), row.re.unwrap_or(f64::NAN));
            }
            _ => {
                if let Some(t) = row.text {
                    texts.insert(row.field, t);
                } else if let Some(v) = row.re {
                    scalars.insert(row.field, v);
                }
            }
        }
    }
    let missing = |what: &str| Failure::Validation(format!("csv record has no `{what}` row"));
    let mut take = |k: &str| mats.remove(k).flatten().map(MatrixRecord);
    let config: ExperimentConfig = serde_json::from_str(texts.get("config").ok_or_else(|| missing("config"))?)
        .map_err(|e| Failure::Validation(format!("config row: {e}")))?;
    let job: Job = serde_json::from_value(serde_json::Value::String(texts.get("job").cloned().ok_or_else(|| missing("job"))?))
        .map_err(|e| Failure::Validation(format!("job row: {e}")))?;
    let holonomy = match (take("M"), take("W"), take("B")) {
        (Some(m), Some(w), Some(b)) => Some(HolonomyRecord {
            m,
            w,
            b,
            permutation: perms.remove("permutation").unwrap_or_default(),
            level_phases: phases,
            residual: *scalars.get("residual").ok_or_else(|| missing("residual"))?,
            steps: *scalars.get("steps").ok_or_else(|| missing("steps"))? as usize,
            warning: texts.get("warning").cloned(),
        }),
        _ => None,
    };
    let evolution = match take("M_evolution") {
        Some(m_evolution) => Some(EvolutionRecord {
            kicks: *scalars.get("L").ok_or_else(|| missing("L"))? as usize,
            deviation: *scalars.get("deviation").ok_or_else(|| missing("deviation"))?,
            permutation: perms.remove("evolution_permutation").unwrap_or_default(),
            m_evolution,
        }),
        None => None,
    };
    let verification = match take("M_expected") {
        Some(m_expected) => Some(VerificationRecord {
            formula: texts.get("formula").cloned().ok_or_else(|| missing("formula"))?,
            inputs,
            m_expected,
            error: *scalars.get("error").ok_or_else(|| missing("error"))?,
            tolerance: *scalars.get("tolerance").ok_or_else(|| missing("tolerance"))?,
            passed: *scalars.get("passed").ok_or_else(|| missing("passed"))? == 1.0,
        }),
        None => None,
    };
    Ok(ResultRecord {
        job,
        config,
        holonomy,
        evolution,
        verification,
        sweep: None,
        sidecar: Sidecar {
            wall_time_seconds: scalars.get("wall_time_seconds").copied().unwrap_or(0.0),
        },
    })
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// How a row value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Formula,
    MonteCarlo,
    Enumeration,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Formula => "formula",
            Provenance::MonteCarlo => "monte-carlo",
            Provenance::Enumeration => "enumeration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub value: f64,
    pub units: String,
    pub provenance: Provenance,
    /// Human-readable acceptance target, if the row is checked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Row {
    pub fn new(name: impl Into<String>, value: f64, units: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            value,
            units: units.into(),
            provenance,
            target: None,
            pass: None,
            note: None,
        }
    }

    pub fn check(mut self, target: impl Into<String>, pass: bool) -> Self {
        self.target = Some(target.into());
        self.pass = Some(pass);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Output of a harness run. Contains nothing that depends on the worker
/// count or the wall clock unless `runtime_s` is filled in by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub config: serde_json::Value,
    pub rows: Vec<Row>,
    /// Set when the run declined to produce its main output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl Report {
    pub fn new(title: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            title: title.into(),
            config,
            rows: Vec::new(),
            refusal: None,
            runtime_s: None,
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// True when no checked row failed.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.pass == Some(false)).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per row; the config echo goes into a leading comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        let _ = writeln!(out, "# config {}", serde_json::to_string(&self.config).expect("config serializes"));
        if let Some(r) = &self.refusal {
            let _ = writeln!(out, "# refused: {r}");
        }
        if let Some(t) = self.runtime_s {
            let _ = writeln!(out, "# runtime_s {t}");
        }
        out.push_str("name,value,units,provenance,target,pass,note\n");
        for r in &self.rows {
            let pass = match r.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&r.name),
                r.value,
                csv_field(&r.units),
                r.provenance.as_str(),
                csv_field(r.target.as_deref().unwrap_or("")),
                pass,
                csv_field(r.note.as_deref().unwrap_or("")),
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

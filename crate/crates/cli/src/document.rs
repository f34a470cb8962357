//! Scenario documents: a JSON object holding every `ScenarioConfig` field
//! plus harness-only keys (`id`, `sweep`, `compare_modes`, `output`,
//! `dump_layout`).

use std::path::PathBuf;

use ncsched_core::sim::build_layout;
use ncsched_core::{Mode, ScenarioConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::HarnessError;

/// Numeric config fields that may be swept, and whether they are integers.
pub const SWEEPABLE: &[(&str, bool)] = &[
    ("N", true),
    ("T", true),
    ("W", true),
    ("s", true),
    ("H", true),
    ("lambda", false),
    ("pbd", false),
    ("horizon", true),
    ("warmup", true),
    ("replications", true),
    ("master_seed", true),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioDocument {
    pub id: String,
    /// Config fields exactly as written (minus harness keys); sweeps and
    /// command-line overrides are applied on top of this map.
    base: Map<String, Value>,
    pub sweep: Option<Sweep>,
    pub compare_modes: Vec<Mode>,
    pub output: Option<PathBuf>,
    pub dump_layout: bool,
}

/// The resolved document as echoed to `scenario.json`.
#[derive(Debug, Serialize)]
pub struct ScenarioEcho<'a> {
    pub id: &'a str,
    pub compare_modes: &'a [Mode],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<&'a Sweep>,
    pub config: ScenarioConfig,
}

fn line_of(text: Option<&str>, key: &str) -> String {
    let Some(text) = text else {
        return String::new();
    };
    match text.find(&format!("\"{key}\"")) {
        Some(pos) => format!("line {}: ", text[..pos].matches('\n').count() + 1),
        None => String::new(),
    }
}

fn take<T: DeserializeOwned>(
    obj: &mut Map<String, Value>,
    key: &str,
    text: Option<&str>,
) -> Result<Option<T>, HarnessError> {
    match obj.remove(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| HarnessError::Parse(format!("{}field `{key}`: {e}", line_of(text, key)))),
    }
}

fn backticked(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

fn parse_config(
    map: &Map<String, Value>,
    text: Option<&str>,
) -> Result<ScenarioConfig, HarnessError> {
    serde_path_to_error::deserialize(Value::Object(map.clone())).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let key = if path == "." || path == "?" {
            backticked(&inner).unwrap_or("").to_string()
        } else {
            path.clone()
        };
        let at = if path == "." || path == "?" {
            String::new()
        } else {
            format!("field `{path}`: ")
        };
        HarnessError::Parse(format!(
            "{}{at}{inner}",
            line_of(text, key.split('.').next().unwrap_or(""))
        ))
    })
}

impl ScenarioDocument {
    /// Parses a document; syntax and field errors carry line information.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        Self::build(value, Some(text))
    }

    pub fn from_value(value: Value) -> Result<Self, HarnessError> {
        Self::build(value, None)
    }

    fn build(value: Value, text: Option<&str>) -> Result<Self, HarnessError> {
        let Value::Object(mut obj) = value else {
            return Err(HarnessError::Parse(
                "scenario document must be a JSON object".into(),
            ));
        };
        let id: Option<String> = take(&mut obj, "id", text)?;
        let sweep: Option<Sweep> = take(&mut obj, "sweep", text)?;
        let compare_modes: Option<Vec<Mode>> = take(&mut obj, "compare_modes", text)?;
        let output: Option<PathBuf> = take(&mut obj, "output", text)?;
        let dump_layout: Option<bool> = take(&mut obj, "dump_layout", text)?;

        let compare_modes = match compare_modes {
            Some(m) if m.is_empty() => {
                return Err(HarnessError::Config(
                    "compare_modes must not be empty".into(),
                ))
            }
            Some(m) => m,
            None => {
                let mode: Mode = match obj.get("mode") {
                    Some(v) => serde_json::from_value(v.clone()).map_err(|e| {
                        HarnessError::Parse(format!("{}field `mode`: {e}", line_of(text, "mode")))
                    })?,
                    None => {
                        return Err(HarnessError::Parse(
                            "missing field `mode` (or `compare_modes`)".into(),
                        ))
                    }
                };
                vec![mode]
            }
        };
        obj.entry("mode")
            .or_insert_with(|| serde_json::to_value(compare_modes[0]).expect("mode serializes"));
        parse_config(&obj, text)?;

        let doc = ScenarioDocument {
            id: id.unwrap_or_else(|| "scenario".into()),
            base: obj,
            sweep,
            compare_modes,
            output,
            dump_layout: dump_layout.unwrap_or(false),
        };
        doc.check()?;
        Ok(doc)
    }

    /// Validates every (mode, sweep value) cell, including layout feasibility.
    pub fn check(&self) -> Result<(), HarnessError> {
        if let Some(sw) = &self.sweep {
            if !SWEEPABLE.iter().any(|(name, _)| *name == sw.parameter) {
                let names: Vec<&str> = SWEEPABLE.iter().map(|(n, _)| *n).collect();
                return Err(HarnessError::Config(format!(
                    "sweep parameter `{}` is not a numeric field (expected one of {})",
                    sw.parameter,
                    names.join(", ")
                )));
            }
            if sw.values.is_empty() {
                return Err(HarnessError::Config(
                    "sweep values must not be empty".into(),
                ));
            }
        }
        for cell in self.cells() {
            let cfg = self.config_for(cell.0, cell.1)?;
            build_layout(&cfg)?;
        }
        Ok(())
    }

    /// Every (mode, sweep value) pair in output order: sweep value outer,
    /// mode inner, so paired modes sit next to each other.
    pub fn cells(&self) -> Vec<(Mode, Option<f64>)> {
        let values: Vec<Option<f64>> = match &self.sweep {
            Some(sw) => sw.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        };
        values
            .into_iter()
            .flat_map(|v| self.compare_modes.iter().map(move |&m| (m, v)))
            .collect()
    }

    /// Resolved configuration for one cell.
    pub fn config_for(
        &self,
        mode: Mode,
        sweep_value: Option<f64>,
    ) -> Result<ScenarioConfig, HarnessError> {
        let mut map = self.base.clone();
        map.insert(
            "mode".into(),
            serde_json::to_value(mode).expect("mode serializes"),
        );
        if let (Some(sw), Some(v)) = (&self.sweep, sweep_value) {
            let integer = SWEEPABLE
                .iter()
                .find(|(n, _)| *n == sw.parameter)
                .map(|(_, i)| *i)
                .unwrap_or(false);
            let value = if integer {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(HarnessError::Config(format!(
                        "sweep value {v} for `{}` must be a non-negative integer",
                        sw.parameter
                    )));
                }
                Value::from(v as u64)
            } else {
                serde_json::Number::from_f64(v)
                    .map(Value::Number)
                    .ok_or_else(|| HarnessError::Config(format!("sweep value {v} is not finite")))?
            };
            map.insert(sw.parameter.clone(), value);
        }
        let cfg = parse_config(&map, None)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides one config field (command-line flags) and re-validates.
    pub fn set(&mut self, key: &str, value: Value) -> Result<(), HarnessError> {
        let previous = self.base.insert(key.to_string(), value);
        let result = parse_config(&self.base, None).and_then(|_| self.check());
        if result.is_err() {
            match previous {
                Some(v) => self.base.insert(key.to_string(), v),
                None => self.base.remove(key),
            };
        }
        result
    }

    pub fn set_sweep_values(&mut self, values: Vec<f64>) -> Result<(), HarnessError> {
        match &mut self.sweep {
            Some(sw) => sw.values = values,
            None => {
                return Err(HarnessError::Config(
                    "document has no sweep to override".into(),
                ))
            }
        }
        self.check()
    }

    pub fn echo(&self) -> Result<ScenarioEcho<'_>, HarnessError> {
        let mut config = self.config_for(self.compare_modes[0], None)?;
        config.warmup = Some(config.warmup_slots());
        Ok(ScenarioEcho {
            id: &self.id,
            compare_modes: &self.compare_modes,
            sweep: self.sweep.as_ref(),
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
  "id": "small",
  "T": 4, "W": 2, "s": 2, "N": 3,
  "lambda": 0.5,
  "pbd": 0.3,
  "compare_modes": ["UNCODED_FIN", "CODED_FIN"],
  "sweep": {"parameter": "N", "values": [1, 2]}
}"#;

    #[test]
    fn parses_and_expands_cells() {
        let d = ScenarioDocument::from_json(DOC).unwrap();
        assert_eq!(d.cells().len(), 4);
        let c = d.config_for(Mode::CodedFin, Some(2.0)).unwrap();
        assert_eq!((c.n, c.mode, c.t), (2, Mode::CodedFin, 4));
    }

    #[test]
    fn reports_line_of_bad_field() {
        let bad = DOC.replace("\"pbd\": 0.3", "\"pbd\": \"high\"");
        let e = ScenarioDocument::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("line 5"), "{e}");
        assert!(e.to_string().contains("pbd"), "{e}");
        assert_eq!(e.exit_code(), 2);

        let bad = DOC.replace("\"lambda\"", "\"lamda\"");
        let e = ScenarioDocument::from_json(&bad).unwrap_err();
        assert!(
            e.to_string().contains("line 4") && e.to_string().contains("lamda"),
            "{e}"
        );

        let e = ScenarioDocument::from_json("{\"T\": 4,,}").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn rejects_invalid_cells() {
        let bad = DOC.replace("\"values\": [1, 2]", "\"values\": [1, 0]");
        assert!(matches!(
            ScenarioDocument::from_json(&bad),
            Err(HarnessError::Sim(_))
        ));
        let bad = DOC.replace("\"parameter\": \"N\"", "\"parameter\": \"policy\"");
        assert!(matches!(
            ScenarioDocument::from_json(&bad),
            Err(HarnessError::Config(_))
        ));
        let bad = DOC.replace("\"values\": [1, 2]", "\"values\": [1.5]");
        assert!(ScenarioDocument::from_json(&bad).is_err());
        let bad = DOC.replace("\"s\": 2", "\"s\": 3");
        assert_eq!(
            ScenarioDocument::from_json(&bad).unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn overrides_apply_to_every_cell() {
        let mut d = ScenarioDocument::from_json(DOC).unwrap();
        d.set("master_seed", 9.into()).unwrap();
        assert_eq!(
            d.config_for(Mode::UncodedFin, Some(1.0))
                .unwrap()
                .master_seed,
            9
        );
        assert!(d.set("policy", "best".into()).is_err());
    }
}

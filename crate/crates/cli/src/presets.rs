//! Built-in experiments: a buffer-size sweep (fig3), a drive-blocking sweep
//! (fig4) and leader-blocking curves (fig5).

use serde_json::{json, Value};

use crate::document::ScenarioDocument;
use crate::error::HarnessError;

pub const NAMES: [&str; 3] = ["fig3", "fig4", "fig5"];

fn pbd_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// External blocking and throughput versus buffer size.
pub fn fig3() -> Value {
    json!({
        "id": "fig3",
        "T": 100, "W": 2, "s": 4, "N": 1,
        "lambda": 0.9,
        "pbd": 0.5,
        "compare_modes": ["UNCODED_FIN", "CODED_FIN", "UNCODED_INF"],
        "sweep": {"parameter": "N", "values": (1..=32).collect::<Vec<u32>>()},
    })
}

/// Blocking and throughput versus drive blocking probability.
pub fn fig4() -> Value {
    json!({
        "id": "fig4",
        "T": 8, "W": 2, "s": 4, "N": 16,
        "lambda": 0.9,
        "pbd": 0.1,
        "compare_modes": ["UNCODED_FIN", "CODED_FIN"],
        "sweep": {"parameter": "pbd", "values": pbd_grid()},
    })
}

/// Leader internal-blocking curves over rank and drive blocking probability.
pub fn fig5() -> Value {
    json!({
        "id": "fig5",
        "T": 8, "W": 2, "s": 4, "N": 16,
        "lambda": 0.9,
        "pbd": 0.1,
        "compare_modes": ["UNCODED_FIN", "CODED_FIN"],
        "sweep": {"parameter": "pbd", "values": pbd_grid()},
    })
}

pub fn preset(name: &str) -> Result<ScenarioDocument, HarnessError> {
    let value = match name.to_ascii_lowercase().as_str() {
        "fig3" => fig3(),
        "fig4" => fig4(),
        "fig5" => fig5(),
        _ => {
            return Err(HarnessError::Config(format!(
                "unknown preset `{name}` (expected {})",
                NAMES.join(", ")
            )))
        }
    };
    ScenarioDocument::from_value(value)
}

//! Text tables and the JSON envelope.

use serde_json::{json, Value};

/// `{kind, payload}`, pretty-printed. Keys are sorted, so parsing and
/// re-serializing reproduces the same bytes.
pub fn emit(kind: &str, payload: Value) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&json!({ "kind": kind, "payload": payload }))
}

pub struct Rendered;

impl Rendered {
    /// Right-aligned columns, first column left-aligned.
    pub fn grid(rows: &[Vec<String>]) -> String {
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, cell)| {
                        if j == 0 {
                            format!("{cell:<w$}", w = widths[0])
                        } else {
                            format!("{cell:>w$}", w = widths[j])
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trips() {
        let s = emit("eta", json!({"value": "1", "modulus": 2, "order": "2"})).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string_pretty(&v).unwrap(), s);
        assert_eq!(v["kind"], "eta");
    }

    #[test]
    fn grid_alignment() {
        let g = Rendered::grid(&[vec!["".into(), "1".into(), "-1".into()], vec!["tau".into(), "2".into(), "-2".into()]]);
        assert_eq!(g, "     1  -1\ntau  2  -2");
    }
}

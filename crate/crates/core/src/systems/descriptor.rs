//! JSON system descriptors:
//! `{"state_dim": n, "control_dim": m, "components": [[{"coeff": c, "exponents": [...]}, ...], ...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolynomialSystem, Term};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    state_dim: usize,
    control_dim: usize,
    components: Vec<Vec<Term>>,
}

/// Parses and validates a descriptor. Duplicate multi-indices are merged by
/// summing their coefficients.
pub fn parse_descriptor(text: &str) -> Result<PolynomialSystem> {
    let d: Descriptor = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    PolynomialSystem::new(d.state_dim, d.control_dim, d.components)
}

pub fn load_descriptor(path: impl AsRef<Path>) -> Result<PolynomialSystem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let sys = parse_descriptor(&text)?;
    Ok(match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => sys.labeled(stem),
        None => sys,
    })
}

pub fn to_descriptor_json(sys: &PolynomialSystem) -> String {
    let d = Descriptor {
        state_dim: sys.state_dim(),
        control_dim: sys.control_dim(),
        components: sys
            .components()
            .iter()
            .map(|c| c.terms().to_vec())
            .collect(),
    };
    serde_json::to_string_pretty(&d).expect("descriptor serializes")
}

pub fn save_descriptor(sys: &PolynomialSystem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_descriptor_json(sys) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{builtin, ControlSystem};

    #[test]
    fn cubic_scalar_round_trips() {
        let sys = builtin("cubic_scalar").unwrap();
        let p = sys.as_polynomial().unwrap();
        assert_eq!(&parse_descriptor(&to_descriptor_json(p)).unwrap(), p);
    }

    #[test]
    fn constant_term_is_validation_error() {
        let text = r#"{"state_dim": 1, "control_dim": 1,
            "components": [[{"coeff": 1.0, "exponents": [0, 0]}, {"coeff": 1.0, "exponents": [3, 0]}]]}"#;
        match parse_descriptor(text) {
            Err(Error::Validation { location, .. }) => assert_eq!(location, "component 0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cubic2d_descriptor_evaluates() {
        let text = r#"{
  "state_dim": 2,
  "control_dim": 1,
  "components": [
    [{"coeff": 1, "exponents": [2,0,0]}, {"coeff": 1, "exponents": [0,2,0]}, {"coeff": 1, "exponents": [0,1,0]}],
    [{"coeff": 1, "exponents": [1,1,0]}, {"coeff": 1, "exponents": [0,2,0]}, {"coeff": 1, "exponents": [0,0,3]}]
  ]
}"#;
        let sys = parse_descriptor(text).unwrap();
        assert_eq!(sys.evaluate(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "{\n  \"state_dim\": 1,\n  \"control_dim\": ,\n}";
        match parse_descriptor(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"state_dim": 1, "control_dim": 0, "components": [[]], "extra": 1}"#;
        assert!(matches!(parse_descriptor(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn exponent_length_checked() {
        let text = r#"{"state_dim": 1, "control_dim": 1, "components": [[{"coeff": 1, "exponents": [3]}]]}"#;
        assert!(matches!(parse_descriptor(text), Err(Error::Validation { .. })));
    }

    #[test]
    fn duplicates_merge_on_load() {
        let text = r#"{"state_dim": 1, "control_dim": 0, "components": [[
            {"coeff": 1.5, "exponents": [2]}, {"coeff": 0.5, "exponents": [2]}]]}"#;
        let sys = parse_descriptor(text).unwrap();
        assert_eq!(sys.components()[0].terms(), &[Term::new(2.0, [2])]);
    }
}

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    ObstructionCertified,
    NoObstruction,
    Inconclusive,
}

impl Outcome {
    /// Process exit code: 0 certified, 1 no obstruction, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::ObstructionCertified => 0,
            Outcome::NoObstruction => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NumericGrid,
    SymbolicPowerLaw,
}

/// One grid row of a necessary inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    pub fn fails(&self) -> bool {
        self.lhs > self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub mode: Mode,
    pub checked_range: Option<[f64; 2]>,
    /// Rows where the necessary inequality fails.
    pub witnesses: Vec<Witness>,
    /// Rows where it holds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub satisfied: Vec<Witness>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    pub fn is_certified(&self) -> bool {
        self.outcome == Outcome::ObstructionCertified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

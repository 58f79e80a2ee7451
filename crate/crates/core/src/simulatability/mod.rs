//! Simulatability protocol: pick learning/evaluation samples, assemble the
//! prompt for a setting, query a simulator and score its guesses.

mod prompt;
mod scoring;
mod selection;
mod simulator;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use prompt::{
    build_prompt, check_leakage, ExplanationInputs, PromptBundle, PromptSection, EP_SECTION,
};
pub use scoring::{parse_response, run_simulator, score_response, SampleOutcome, SimulationResult};
pub use selection::{select_samples, SampleSplit, SPLIT_SIZE};
pub use simulator::{HttpSimulator, HttpSimulatorConfig, MockMode, MockSimulator, Simulator};

/// The five prompt types, ordered by how much the simulator is told.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptType {
    #[serde(rename = "NE1")]
    Ne1,
    #[serde(rename = "E1")]
    E1,
    #[serde(rename = "NE2")]
    Ne2,
    #[serde(rename = "E2")]
    E2,
    #[serde(rename = "E3")]
    E3,
}

impl PromptType {
    pub const ALL: [PromptType; 5] = [
        PromptType::Ne1,
        PromptType::E1,
        PromptType::Ne2,
        PromptType::E2,
        PromptType::E3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptType::Ne1 => "NE1",
            PromptType::E1 => "E1",
            PromptType::Ne2 => "NE2",
            PromptType::E2 => "E2",
            PromptType::E3 => "E3",
        }
    }

    pub fn has_global(self) -> bool {
        matches!(self, PromptType::E1 | PromptType::E2 | PromptType::E3)
    }

    pub fn has_learning_phase(self) -> bool {
        matches!(self, PromptType::Ne2 | PromptType::E2 | PromptType::E3)
    }

    pub fn has_local(self) -> bool {
        self == PromptType::E3
    }

    pub fn is_explained(self) -> bool {
        self.has_global()
    }

    /// The unexplained prompt type with the same phases.
    pub fn baseline(self) -> PromptType {
        if self.has_learning_phase() {
            PromptType::Ne2
        } else {
            PromptType::Ne1
        }
    }
}

impl fmt::Display for PromptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown prompt type `{s}`")))
    }
}

/// A prompt type, optionally with class names replaced by `Class_{j}`.
/// Written `E2` or `E2-a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PromptVariant {
    pub kind: PromptType,
    pub anonymous: bool,
}

impl PromptVariant {
    pub fn new(kind: PromptType, anonymous: bool) -> Self {
        Self { kind, anonymous }
    }

    /// All ten variants.
    pub fn all() -> Vec<PromptVariant> {
        PromptType::ALL
            .into_iter()
            .flat_map(|t| [PromptVariant::new(t, false), PromptVariant::new(t, true)])
            .collect()
    }

    pub fn baseline(self) -> PromptVariant {
        PromptVariant::new(self.kind.baseline(), self.anonymous)
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.anonymous {
            write!(f, "{}-a", self.kind)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

impl FromStr for PromptVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_suffix("-a") {
            Some(kind) => Ok(PromptVariant::new(kind.parse()?, true)),
            None => Ok(PromptVariant::new(s.parse()?, false)),
        }
    }
}

impl TryFrom<String> for PromptVariant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PromptVariant> for String {
    fn from(v: PromptVariant) -> String {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in PromptVariant::all() {
            assert_eq!(v.to_string().parse::<PromptVariant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<PromptVariant>(&json).unwrap(), v);
        }
        assert_eq!(PromptVariant::new(PromptType::E2, true).to_string(), "E2-a");
        assert!("E4".parse::<PromptVariant>().is_err());
    }

    #[test]
    fn baselines() {
        assert_eq!(PromptType::E1.baseline(), PromptType::Ne1);
        assert_eq!(PromptType::E2.baseline(), PromptType::Ne2);
        assert_eq!(PromptType::E3.baseline(), PromptType::Ne2);
        assert_eq!(PromptType::Ne2.baseline(), PromptType::Ne2);
    }
}

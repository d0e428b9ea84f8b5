use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::artifact::Stage;

/// The four fixed agent roles, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Analyst,
    Modeler,
    Designer,
    Evaluator,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Analyst,
        Role::Modeler,
        Role::Designer,
        Role::Evaluator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Analyst => "analyst",
            Role::Modeler => "modeler",
            Role::Designer => "designer",
            Role::Evaluator => "evaluator",
        }
    }

    /// The producing role responsible for a pipeline stage.
    pub fn for_stage(stage: Stage) -> Role {
        match stage {
            Stage::Analysis => Role::Analyst,
            Stage::Modeling => Role::Modeler,
            Stage::Design => Role::Designer,
        }
    }

    pub fn stage(self) -> Option<Stage> {
        match self {
            Role::Analyst => Some(Stage::Analysis),
            Role::Modeler => Some(Stage::Modeling),
            Role::Designer => Some(Stage::Design),
            Role::Evaluator => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    /// Accepts the full name or its first letter.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analyst" | "a" => Ok(Role::Analyst),
            "modeler" | "m" => Ok(Role::Modeler),
            "designer" | "d" => Ok(Role::Designer),
            "evaluator" | "e" => Ok(Role::Evaluator),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

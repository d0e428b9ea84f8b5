use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::artifact::{MismatchKind, RequirementKind, Stage};

const BUILTIN_RULES: &str = include_str!("../../config/evaluation_rules.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub kind: MismatchKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirement_kind: Option<RequirementKind>,
    pub severity: u8,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    rules: Vec<Rule>,
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::from_json(BUILTIN_RULES).expect("builtin rule table is valid")
    }
}

impl RuleTable {
    pub fn new(rules: Vec<Rule>) -> Result<Self, EvalError> {
        for rule in &rules {
            if !(1..=4).contains(&rule.severity) {
                return Err(EvalError::InvalidRules(format!(
                    "severity {} for `{}` outside [1, 4]",
                    rule.severity,
                    rule.kind.as_str()
                )));
            }
        }
        Ok(RuleTable { rules })
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let rules: Vec<Rule> =
            serde_json::from_str(text).map_err(|e| EvalError::InvalidRules(e.to_string()))?;
        RuleTable::new(rules)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::InvalidRules(format!("{}: {e}", path.display())))?;
        RuleTable::from_json(&text)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// The rule matching `kind` and, when given, the requirement kind; a
    /// rule naming a requirement kind wins over a generic one.
    pub fn lookup(
        &self,
        kind: MismatchKind,
        requirement_kind: Option<RequirementKind>,
    ) -> Option<&Rule> {
        let candidates = self.rules.iter().filter(|r| r.kind == kind);
        let mut generic = None;
        for rule in candidates {
            match rule.requirement_kind {
                Some(rk) if Some(rk) == requirement_kind => return Some(rule),
                None if generic.is_none() => generic = Some(rule),
                _ => {}
            }
        }
        generic
    }

    pub fn severity(
        &self,
        kind: MismatchKind,
        requirement_kind: Option<RequirementKind>,
    ) -> Option<u8> {
        self.lookup(kind, requirement_kind).map(|r| r.severity)
    }
}

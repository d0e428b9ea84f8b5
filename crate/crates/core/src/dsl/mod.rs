//! Parser and emitter for the constrained PlantUML dialect used for class,
//! sequence and deployment diagrams.
//!
//! The dialect is deliberately small: no notes, colors, packages, stereotypes
//! or skinparams. Anything outside the grammar is a [`ParseError`], never
//! silently skipped. Emission is byte-deterministic.

mod check;
mod emit;
pub mod lexical;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{ClassModel, DeploymentModel, SequenceModel};

pub use check::{
    check_class_model, check_deployment_model, check_sequence_model, ModelIssue, ModelIssueKind,
};
pub use emit::{emit_class, emit_deployment, emit_diagram, emit_sequence};
pub use parse::{parse_class, parse_deployment, parse_diagram, parse_sequence};

pub const START: &str = "@startuml";
pub const END: &str = "@enduml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagramKind {
    Class,
    Sequence,
    Deployment,
}

impl DiagramKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagramKind::Class => "class",
            DiagramKind::Sequence => "sequence",
            DiagramKind::Deployment => "deployment",
        }
    }
}

impl std::str::FromStr for DiagramKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "class" => Ok(DiagramKind::Class),
            "sequence" => Ok(DiagramKind::Sequence),
            "deployment" => Ok(DiagramKind::Deployment),
            other => Err(format!("unknown diagram kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramText {
    pub kind: DiagramKind,
    pub text: String,
}

/// Any one of the three diagram models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagramModel {
    Class(ClassModel),
    Sequence(SequenceModel),
    Deployment(DeploymentModel),
}

impl DiagramModel {
    pub fn kind(&self) -> DiagramKind {
        match self {
            DiagramModel::Class(_) => DiagramKind::Class,
            DiagramModel::Sequence(_) => DiagramKind::Sequence,
            DiagramModel::Deployment(_) => DiagramKind::Deployment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    /// 1-based.
    pub line_number: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: expected {}, found {:?}",
            self.line_number, self.column, self.expected, self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("parse error at {0}")]
    Syntax(ParseError),
    #[error("line {line}: duplicate name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: `{name}` is not declared")]
    DanglingEndpoint { line: usize, name: String },
}

impl DslError {
    pub fn line(&self) -> usize {
        match self {
            DslError::Syntax(e) => e.line_number,
            DslError::DuplicateName { line, .. } | DslError::DanglingEndpoint { line, .. } => *line,
        }
    }
}

/// Strips fields the grammar cannot carry and orders deployment artifacts the
/// way the emitter groups them, so that `parse(emit(m)) == projection(m)`.
pub fn class_projection(model: &ClassModel) -> ClassModel {
    let mut out = model.clone();
    for class in &mut out.classes {
        class.responsibility.clear();
    }
    out
}

pub fn sequence_projection(model: &SequenceModel) -> SequenceModel {
    model.clone()
}

pub fn deployment_projection(model: &DeploymentModel) -> DeploymentModel {
    let mut out = DeploymentModel {
        nodes: model.nodes.clone(),
        artifacts: Vec::new(),
        placements: Vec::new(),
        paths: model.paths.clone(),
    };
    for node in &model.nodes {
        for artifact in emit::artifacts_on(model, &node.name) {
            out.artifacts.push(crate::artifact::DeploymentArtifact {
                name: artifact.to_string(),
                realizes: String::new(),
            });
            out.placements.push(crate::artifact::Placement {
                artifact: artifact.to_string(),
                node: node.name.clone(),
            });
        }
    }
    out
}

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementKind {
    Functional,
    NonFunctional,
}

impl RequirementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequirementKind::Functional => "functional",
            RequirementKind::NonFunctional => "non_functional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementStatus {
    #[default]
    Active,
    Superseded,
}

/// The eight ISO/IEC 25010 product quality characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityAttribute {
    FunctionalSuitability,
    PerformanceEfficiency,
    Compatibility,
    Usability,
    Reliability,
    Security,
    Maintainability,
    Portability,
}

impl QualityAttribute {
    pub const ALL: [QualityAttribute; 8] = [
        QualityAttribute::FunctionalSuitability,
        QualityAttribute::PerformanceEfficiency,
        QualityAttribute::Compatibility,
        QualityAttribute::Usability,
        QualityAttribute::Reliability,
        QualityAttribute::Security,
        QualityAttribute::Maintainability,
        QualityAttribute::Portability,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub text: String,
    pub kind: RequirementKind,
    /// Zero-based half-open byte range into the SRS text.
    pub source_span: (usize, usize),
    #[serde(default)]
    pub attributes: Vec<QualityAttribute>,
    #[serde(default)]
    pub status: RequirementStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RequirementSet {
    /// Length in bytes of the SRS the spans point into.
    pub srs_length: usize,
    pub requirements: Vec<Requirement>,
}

impl RequirementSet {
    pub fn get(&self, id: &str) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsrTag {
    pub requirement_id: String,
    pub rationale: String,
    pub criticality: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    Ambiguity,
    Incompleteness,
    Conflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Open,
    Clarified,
    Assumed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskFlag {
    pub id: String,
    pub kind: RiskKind,
    pub affected_requirement_ids: Vec<String>,
    pub description: String,
    pub resolution: Resolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClarificationStatus {
    Pending,
    Answered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarificationExchange {
    pub question_id: String,
    pub risk_id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    pub status: ClarificationStatus,
}

impl ClarificationExchange {
    pub fn is_pending(&self) -> bool {
        self.status == ClarificationStatus::Pending
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityAttributePriority {
    pub attribute: QualityAttribute,
    /// 1 is the highest priority.
    pub rank: u32,
    pub scenario: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdrCategory {
    Style,
    Pattern,
    Technology,
}

/// A trimmed Nygard-style architectural decision record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitecturalDecisionRecord {
    pub id: String,
    pub category: AdrCategory,
    pub title: String,
    pub context: String,
    pub decision: String,
    #[serde(default)]
    pub alternatives: Vec<String>,
    pub consequences: String,
    pub addresses: Vec<String>,
    #[serde(default)]
    pub grounding: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalComponent {
    pub id: String,
    pub name: String,
    pub responsibility: String,
    pub domain: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalRelationKind {
    Uses,
    Contains,
    PublishesTo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalRelation {
    pub from_id: String,
    pub to_id: String,
    pub kind: LogicalRelationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LogicalView {
    pub components: Vec<LogicalComponent>,
    pub relations: Vec<LogicalRelation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicalNodeKind {
    Server,
    Device,
    ContainerHost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalNode {
    pub id: String,
    pub name: String,
    pub kind: PhysicalNodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub component_id: String,
    pub node_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLink {
    pub node_a: String,
    pub node_b: String,
    pub protocol: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhysicalView {
    pub nodes: Vec<PhysicalNode>,
    pub allocations: Vec<Allocation>,
    pub links: Vec<NodeLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassAttribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: String,
    #[serde(default)]
    pub attributes: Vec<ClassAttribute>,
    /// Method signatures in canonical form, e.g. `checkout(cart: Cart): Order`.
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub responsibility: String,
}

impl ClassDecl {
    pub fn new(name: impl Into<String>) -> Self {
        ClassDecl {
            name: name.into(),
            attributes: Vec::new(),
            methods: Vec::new(),
            responsibility: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassRelationKind {
    Inherits,
    Depends,
    Aggregates,
    Composes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRelation {
    pub from: String,
    pub to: String,
    pub kind: ClassRelationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassModel {
    pub classes: Vec<ClassDecl>,
    pub relations: Vec<ClassRelation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantKind {
    Actor,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub name: String,
    pub kind: ParticipantKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageStyle {
    Sync,
    Async,
    Reply,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub seq_index: u32,
    pub from: String,
    pub to: String,
    pub label: String,
    pub style: MessageStyle,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SequenceModel {
    pub participants: Vec<Participant>,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentNode {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentArtifact {
    pub name: String,
    /// Id of the logical component this artifact realizes.
    #[serde(default)]
    pub realizes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub artifact: String,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentPath {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeploymentModel {
    pub nodes: Vec<DeploymentNode>,
    pub artifacts: Vec<DeploymentArtifact>,
    pub placements: Vec<Placement>,
    pub paths: Vec<DeploymentPath>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    UncoveredAsr,
    DanglingReference,
    DiagramInconsistency,
    UnallocatedComponent,
    Judged,
}

impl MismatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MismatchKind::UncoveredAsr => "uncovered_asr",
            MismatchKind::DanglingReference => "dangling_reference",
            MismatchKind::DiagramInconsistency => "diagram_inconsistency",
            MismatchKind::UnallocatedComponent => "unallocated_component",
            MismatchKind::Judged => "judged",
        }
    }
}

/// Pipeline stage a mismatch is attributed to. Ordered upstream first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Analysis,
    Modeling,
    Design,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Analysis, Stage::Modeling, Stage::Design];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Analysis => "analysis",
            Stage::Modeling => "modeling",
            Stage::Design => "design",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub id: String,
    pub kind: MismatchKind,
    pub severity: u8,
    #[serde(default)]
    pub requirement_refs: Vec<String>,
    #[serde(default)]
    pub artifact_refs: Vec<String>,
    pub description: String,
    /// Stage named by the Evaluator agent for judged mismatches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judged_stage: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCause {
    pub mismatch_id: String,
    pub stage: Stage,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementSuggestion {
    pub mismatch_id: String,
    pub target_stage: Stage,
    pub directive: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceabilityLink {
    pub requirement_id: String,
    /// Slash-delimited element path, e.g. `class_model/classes/Order`.
    pub element: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackageVerdict {
    #[default]
    Unconfirmed,
    Confirmed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DesignPackage {
    pub requirement_set: RequirementSet,
    #[serde(default)]
    pub asr_tags: Vec<AsrTag>,
    #[serde(default)]
    pub risk_flags: Vec<RiskFlag>,
    #[serde(default)]
    pub clarifications: Vec<ClarificationExchange>,
    #[serde(default)]
    pub qa_priorities: Vec<QualityAttributePriority>,
    #[serde(default)]
    pub adrs: Vec<ArchitecturalDecisionRecord>,
    #[serde(default)]
    pub logical_view: LogicalView,
    #[serde(default)]
    pub physical_view: PhysicalView,
    #[serde(default)]
    pub class_model: ClassModel,
    #[serde(default)]
    pub sequence_models: Vec<SequenceModel>,
    #[serde(default)]
    pub deployment_model: DeploymentModel,
    #[serde(default)]
    pub traceability_links: Vec<TraceabilityLink>,
    #[serde(default)]
    pub verdict: PackageVerdict,
    #[serde(default)]
    pub round_count: u32,
}

impl DesignPackage {
    pub fn requirement(&self, id: &str) -> Option<&Requirement> {
        self.requirement_set.get(id)
    }

    pub fn pending_clarifications(&self) -> impl Iterator<Item = &ClarificationExchange> {
        self.clarifications.iter().filter(|c| c.is_pending())
    }

    /// Resolves a slash-delimited element path against the package.
    pub fn resolve_element(&self, path: &str) -> bool {
        if let Some(id) = path.strip_prefix("adrs/") {
            return self.adrs.iter().any(|a| a.id == id);
        }
        if let Some(id) = path.strip_prefix("logical_view/components/") {
            return self.logical_view.components.iter().any(|c| c.id == id);
        }
        if let Some(id) = path.strip_prefix("physical_view/nodes/") {
            return self.physical_view.nodes.iter().any(|n| n.id == id);
        }
        if let Some(name) = path.strip_prefix("class_model/classes/") {
            return self.class_model.classes.iter().any(|c| c.name == name);
        }
        if let Some(name) = path.strip_prefix("deployment_model/nodes/") {
            return self.deployment_model.nodes.iter().any(|n| n.name == name);
        }
        if let Some(name) = path.strip_prefix("deployment_model/artifacts/") {
            return self
                .deployment_model
                .artifacts
                .iter()
                .any(|a| a.name == name);
        }
        let Some(rest) = path.strip_prefix("sequence_models/") else {
            return false;
        };
        let (index, tail) = match rest.split_once('/') {
            Some((index, tail)) => (index, Some(tail)),
            None => (rest, None),
        };
        let Some(model) = index
            .parse::<usize>()
            .ok()
            .and_then(|i| self.sequence_models.get(i))
        else {
            return false;
        };
        match tail.map(|t| t.split_once('/')) {
            None => true,
            Some(Some(("participants", name))) => model.participants.iter().any(|p| p.name == name),
            Some(Some(("messages", seq))) => seq
                .parse::<u32>()
                .map(|s| model.messages.iter().any(|m| m.seq_index == s))
                .unwrap_or(false),
            Some(_) => false,
        }
    }
}

/// Roots of the element namespace owned by the Modeler.
pub const MODELING_ROOTS: [&str; 3] = ["adrs/", "logical_view/", "physical_view/"];
/// Roots of the element namespace owned by the Designer.
pub const DESIGN_ROOTS: [&str; 3] = ["class_model/", "sequence_models/", "deployment_model/"];

pub fn element_stage(path: &str) -> Option<Stage> {
    if MODELING_ROOTS.iter().any(|r| path.starts_with(r)) {
        Some(Stage::Modeling)
    } else if DESIGN_ROOTS.iter().any(|r| path.starts_with(r)) {
        Some(Stage::Design)
    } else {
        None
    }
}

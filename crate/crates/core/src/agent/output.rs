//! Per-role output schemas, fenced-block extraction and validation, and the
//! merge of validated artifacts into a package.

use std::collections::{BTreeMap, HashSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::TaskKind;
use crate::artifact::*;
use crate::dsl::{parse_class, parse_deployment, parse_sequence, DslError};
use crate::Role;

/// The single fenced block of a reply. Text outside the fence is ignored.
pub fn extract_fenced(raw: &str) -> Result<&str, String> {
    let mut blocks = Vec::new();
    let mut open: Option<usize> = None;
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            match open.take() {
                None => open = Some(offset + line.len()),
                Some(start) => blocks.push(&raw[start..offset]),
            }
        }
        offset += line.len();
    }
    if open.is_some() {
        return Err("unterminated fenced block".to_string());
    }
    match blocks.len() {
        1 => Ok(blocks[0]),
        n => Err(format!("expected exactly one fenced block, found {n}")),
    }
}

fn decode<T: DeserializeOwned>(raw: &str) -> Result<T, Vec<String>> {
    let body = extract_fenced(raw).map_err(|e| vec![e])?;
    serde_json::from_str(body).map_err(|e| vec![format!("output does not match the schema: {e}")])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionDraft {
    pub question_id: String,
    pub risk_id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalystOutput {
    pub requirements: Vec<Requirement>,
    #[serde(default)]
    pub asr_tags: Vec<AsrTag>,
    #[serde(default)]
    pub risk_flags: Vec<RiskFlag>,
    #[serde(default)]
    pub questions: Vec<QuestionDraft>,
    #[serde(default)]
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelerOutput {
    pub qa_priorities: Vec<QualityAttributePriority>,
    pub adrs: Vec<ArchitecturalDecisionRecord>,
    pub logical_view: LogicalView,
    pub physical_view: PhysicalView,
    #[serde(default)]
    pub traceability_links: Vec<TraceabilityLink>,
    #[serde(default)]
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignerOutput {
    pub class_diagram: String,
    pub sequence_diagrams: Vec<String>,
    pub deployment_diagram: String,
    #[serde(default)]
    pub class_responsibilities: BTreeMap<String, String>,
    #[serde(default)]
    pub artifact_realizes: BTreeMap<String, String>,
    #[serde(default)]
    pub traceability_links: Vec<TraceabilityLink>,
    #[serde(default)]
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgedMismatch {
    pub description: String,
    pub severity: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    #[serde(default)]
    pub requirement_refs: Vec<String>,
    #[serde(default)]
    pub artifact_refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directive: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorOutput {
    pub mismatches: Vec<JudgedMismatch>,
    #[serde(default)]
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedDirective {
    pub mismatch_id: String,
    pub directive: String,
}

/// Validated output of one agent task, as recorded in the journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentArtifacts {
    Analysis {
        requirement_set: RequirementSet,
        asr_tags: Vec<AsrTag>,
        risk_flags: Vec<RiskFlag>,
        /// Newly raised, pending questions.
        questions: Vec<ClarificationExchange>,
    },
    Modeling {
        qa_priorities: Vec<QualityAttributePriority>,
        adrs: Vec<ArchitecturalDecisionRecord>,
        logical_view: LogicalView,
        physical_view: PhysicalView,
        traceability_links: Vec<TraceabilityLink>,
    },
    Design {
        class_model: ClassModel,
        sequence_models: Vec<SequenceModel>,
        deployment_model: DeploymentModel,
        traceability_links: Vec<TraceabilityLink>,
    },
    Evaluation {
        mismatches: Vec<MismatchReport>,
        directives: Vec<JudgedDirective>,
    },
}

impl AgentArtifacts {
    pub fn role(&self) -> Role {
        match self {
            AgentArtifacts::Analysis { .. } => Role::Analyst,
            AgentArtifacts::Modeling { .. } => Role::Modeler,
            AgentArtifacts::Design { .. } => Role::Designer,
            AgentArtifacts::Evaluation { .. } => Role::Evaluator,
        }
    }
}

fn clear_modeling(pkg: &mut DesignPackage) {
    pkg.qa_priorities.clear();
    pkg.adrs.clear();
    pkg.logical_view = LogicalView::default();
    pkg.physical_view = PhysicalView::default();
    pkg.traceability_links
        .retain(|l| element_stage(&l.element) != Some(Stage::Modeling));
}

fn clear_design(pkg: &mut DesignPackage) {
    pkg.class_model = ClassModel::default();
    pkg.sequence_models.clear();
    pkg.deployment_model = DeploymentModel::default();
    pkg.traceability_links
        .retain(|l| element_stage(&l.element) != Some(Stage::Design));
}

/// Merges a task's artifacts into the package. A stage's output supersedes
/// everything downstream of it, which is cleared for a full rebuild.
pub fn apply_artifacts(pkg: &mut DesignPackage, artifacts: &AgentArtifacts) {
    match artifacts {
        AgentArtifacts::Analysis {
            requirement_set,
            asr_tags,
            risk_flags,
            questions,
        } => {
            pkg.requirement_set = requirement_set.clone();
            pkg.asr_tags = asr_tags.clone();
            pkg.risk_flags = risk_flags.clone();
            pkg.clarifications.extend(questions.iter().cloned());
            pkg.traceability_links.clear();
            clear_modeling(pkg);
            clear_design(pkg);
        }
        AgentArtifacts::Modeling {
            qa_priorities,
            adrs,
            logical_view,
            physical_view,
            traceability_links,
        } => {
            clear_modeling(pkg);
            clear_design(pkg);
            pkg.qa_priorities = qa_priorities.clone();
            pkg.adrs = adrs.clone();
            pkg.logical_view = logical_view.clone();
            pkg.physical_view = physical_view.clone();
            pkg.traceability_links
                .extend(traceability_links.iter().cloned());
        }
        AgentArtifacts::Design {
            class_model,
            sequence_models,
            deployment_model,
            traceability_links,
        } => {
            clear_design(pkg);
            pkg.class_model = class_model.clone();
            pkg.sequence_models = sequence_models.clone();
            pkg.deployment_model = deployment_model.clone();
            pkg.traceability_links
                .extend(traceability_links.iter().cloned());
        }
        AgentArtifacts::Evaluation { .. } => {}
    }
}

/// What a validator needs besides the raw reply.
pub struct ValidationContext<'a> {
    pub task: TaskKind,
    pub srs: &'a str,
    pub package: &'a DesignPackage,
    pub interactive: bool,
    pub prompt_citations: &'a [String],
}

/// A validated reply: the artifacts plus the chunk ids it cites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validated {
    pub artifacts: AgentArtifacts,
    pub citations: Vec<String>,
}

fn check_citations(
    cited: &[String],
    ctx: &ValidationContext<'_>,
    what: &str,
    errors: &mut Vec<String>,
) {
    for id in cited {
        if !ctx.prompt_citations.contains(id) {
            errors.push(format!(
                "{what} cites `{id}`, which was not in the prompt's knowledge"
            ));
        }
    }
}

fn integrity_errors(pkg: &DesignPackage, errors: &mut Vec<String>) {
    for v in validate_package(pkg) {
        errors.push(format!("{}: {}", v.path, v.message));
    }
}

fn check_link_roots(links: &[TraceabilityLink], stage: Stage, errors: &mut Vec<String>) {
    for (i, link) in links.iter().enumerate() {
        if element_stage(&link.element) != Some(stage) {
            errors.push(format!(
                "traceability_links[{i}]: `{}` is not a {} element",
                link.element,
                stage.as_str()
            ));
        }
    }
}

fn dedup_citations(cited: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    cited
        .into_iter()
        .filter(|c| seen.insert(c.clone()))
        .collect()
}

/// Parses and validates a raw reply for `role`. Errors are phrased for the
/// repair prompt.
pub fn validate_output(
    role: Role,
    raw: &str,
    ctx: &ValidationContext<'_>,
) -> Result<Validated, Vec<String>> {
    match role {
        Role::Analyst => validate_analyst(decode(raw)?, ctx),
        Role::Modeler => validate_modeler(decode(raw)?, ctx),
        Role::Designer => validate_designer(decode(raw)?, ctx),
        Role::Evaluator => validate_evaluator(decode(raw)?, ctx),
    }
}

fn validate_analyst(
    out: AnalystOutput,
    ctx: &ValidationContext<'_>,
) -> Result<Validated, Vec<String>> {
    let mut errors = Vec::new();
    if out.requirements.is_empty() {
        errors.push("requirements: at least one requirement is required".to_string());
    }
    for (i, r) in out.requirements.iter().enumerate() {
        let (start, end) = r.source_span;
        if end <= ctx.srs.len() && start <= end && ctx.srs.get(start..end).is_none() {
            errors.push(format!(
                "requirements[{i}].source_span: not on character boundaries"
            ));
        }
    }
    let asks = !out.questions.is_empty();
    if asks && !ctx.interactive {
        errors.push(
            "questions: stakeholders are unavailable; record assumptions instead".to_string(),
        );
    } else if asks && ctx.task != TaskKind::Initial {
        errors.push(
            "questions: new questions are only allowed on the first analysis pass".to_string(),
        );
    }
    let known: HashSet<&str> = ctx
        .package
        .clarifications
        .iter()
        .map(|c| c.question_id.as_str())
        .collect();
    for (i, q) in out.questions.iter().enumerate() {
        if known.contains(q.question_id.as_str()) {
            errors.push(format!(
                "questions[{i}].question_id: `{}` was already asked",
                q.question_id
            ));
        }
        if q.question.trim().is_empty() {
            errors.push(format!("questions[{i}].question: must not be empty"));
        }
    }
    let questions: Vec<ClarificationExchange> = out
        .questions
        .iter()
        .map(|q| ClarificationExchange {
            question_id: q.question_id.clone(),
            risk_id: q.risk_id.clone(),
            question: q.question.clone(),
            answer: None,
            status: ClarificationStatus::Pending,
        })
        .collect();
    let artifacts = AgentArtifacts::Analysis {
        requirement_set: RequirementSet {
            srs_length: ctx.srs.len(),
            requirements: out.requirements,
        },
        asr_tags: out.asr_tags,
        risk_flags: out.risk_flags,
        questions,
    };
    let mut candidate = ctx.package.clone();
    apply_artifacts(&mut candidate, &artifacts);
    integrity_errors(&candidate, &mut errors);

    for (i, risk) in candidate.risk_flags.iter().enumerate() {
        let asked = candidate
            .pending_clarifications()
            .any(|c| c.risk_id == risk.id);
        match risk.resolution {
            Resolution::Open if !asked => errors.push(format!(
                "risk_flags[{i}]: risk `{}` is open without a pending question; {}",
                risk.id,
                if ctx.interactive {
                    "ask a question or record an assumption"
                } else {
                    "mark it assumed with an assumption"
                }
            )),
            Resolution::Clarified if !ctx.interactive => errors.push(format!(
                "risk_flags[{i}]: no stakeholder answers exist; mark `{}` assumed",
                risk.id
            )),
            _ => {}
        }
    }
    check_citations(&out.citations, ctx, "citations", &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Validated {
        artifacts,
        citations: dedup_citations(out.citations),
    })
}

fn validate_modeler(
    out: ModelerOutput,
    ctx: &ValidationContext<'_>,
) -> Result<Validated, Vec<String>> {
    let mut errors = Vec::new();
    check_link_roots(&out.traceability_links, Stage::Modeling, &mut errors);
    for (i, adr) in out.adrs.iter().enumerate() {
        check_citations(
            &adr.grounding,
            ctx,
            &format!("adrs[{i}].grounding"),
            &mut errors,
        );
    }
    check_citations(&out.citations, ctx, "citations", &mut errors);
    let mut cited = out.citations.clone();
    cited.extend(out.adrs.iter().flat_map(|a| a.grounding.iter().cloned()));
    let artifacts = AgentArtifacts::Modeling {
        qa_priorities: out.qa_priorities,
        adrs: out.adrs,
        logical_view: out.logical_view,
        physical_view: out.physical_view,
        traceability_links: out.traceability_links,
    };
    let mut candidate = ctx.package.clone();
    apply_artifacts(&mut candidate, &artifacts);
    integrity_errors(&candidate, &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Validated {
        artifacts,
        citations: dedup_citations(cited),
    })
}

fn dsl_error(what: &str, e: &DslError) -> String {
    format!("{what}: {e}")
}

fn validate_designer(
    out: DesignerOutput,
    ctx: &ValidationContext<'_>,
) -> Result<Validated, Vec<String>> {
    let mut errors = Vec::new();
    let mut class_model = parse_class(&out.class_diagram).unwrap_or_else(|e| {
        errors.push(dsl_error("class_diagram", &e));
        ClassModel::default()
    });
    if out.sequence_diagrams.is_empty() {
        errors.push("sequence_diagrams: at least one sequence diagram is required".to_string());
    }
    let mut sequence_models = Vec::new();
    for (i, text) in out.sequence_diagrams.iter().enumerate() {
        match parse_sequence(text) {
            Ok(m) => sequence_models.push(m),
            Err(e) => errors.push(dsl_error(&format!("sequence_diagrams[{i}]"), &e)),
        }
    }
    let mut deployment_model = parse_deployment(&out.deployment_diagram).unwrap_or_else(|e| {
        errors.push(dsl_error("deployment_diagram", &e));
        DeploymentModel::default()
    });
    if !errors.is_empty() {
        return Err(errors);
    }

    for (name, responsibility) in &out.class_responsibilities {
        match class_model.classes.iter_mut().find(|c| &c.name == name) {
            Some(c) => c.responsibility = responsibility.clone(),
            None => errors.push(format!(
                "class_responsibilities: `{name}` is not a class in class_diagram"
            )),
        }
    }
    for artifact in &mut deployment_model.artifacts {
        match out.artifact_realizes.get(&artifact.name) {
            Some(component) => artifact.realizes = component.clone(),
            None => errors.push(format!(
                "artifact_realizes: missing entry for artifact `{}`",
                artifact.name
            )),
        }
    }
    for name in out.artifact_realizes.keys() {
        if !deployment_model.artifacts.iter().any(|a| &a.name == name) {
            errors.push(format!(
                "artifact_realizes: `{name}` is not an artifact in deployment_diagram"
            ));
        }
    }
    check_link_roots(&out.traceability_links, Stage::Design, &mut errors);
    check_citations(&out.citations, ctx, "citations", &mut errors);

    let artifacts = AgentArtifacts::Design {
        class_model,
        sequence_models,
        deployment_model,
        traceability_links: out.traceability_links,
    };
    let mut candidate = ctx.package.clone();
    apply_artifacts(&mut candidate, &artifacts);
    integrity_errors(&candidate, &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Validated {
        artifacts,
        citations: dedup_citations(out.citations),
    })
}

fn validate_evaluator(
    out: EvaluatorOutput,
    ctx: &ValidationContext<'_>,
) -> Result<Validated, Vec<String>> {
    let mut errors = Vec::new();
    let mut mismatches = Vec::new();
    let mut directives = Vec::new();
    for (i, m) in out.mismatches.iter().enumerate() {
        let path = format!("mismatches[{i}]");
        if m.description.trim().is_empty() {
            errors.push(format!("{path}.description: must not be empty"));
        }
        if !(1..=4).contains(&m.severity) {
            errors.push(format!("{path}.severity: {} outside [1, 4]", m.severity));
        }
        for (j, r) in m.requirement_refs.iter().enumerate() {
            if ctx.package.requirement(r).is_none() {
                errors.push(format!(
                    "{path}.requirement_refs[{j}]: requirement `{r}` does not exist"
                ));
            }
        }
        for (j, a) in m.artifact_refs.iter().enumerate() {
            if !ctx.package.resolve_element(a) {
                errors.push(format!(
                    "{path}.artifact_refs[{j}]: element `{a}` does not exist"
                ));
            }
        }
        let id = format!("judged:{}", i + 1);
        if let Some(d) = m.directive.as_ref().filter(|d| !d.trim().is_empty()) {
            directives.push(JudgedDirective {
                mismatch_id: id.clone(),
                directive: d.clone(),
            });
        }
        mismatches.push(MismatchReport {
            id,
            kind: MismatchKind::Judged,
            severity: m.severity,
            requirement_refs: m.requirement_refs.clone(),
            artifact_refs: m.artifact_refs.clone(),
            description: m.description.trim().to_string(),
            judged_stage: m.stage,
        });
    }
    check_citations(&out.citations, ctx, "citations", &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Validated {
        artifacts: AgentArtifacts::Evaluation {
            mismatches,
            directives,
        },
        citations: dedup_citations(out.citations),
    })
}

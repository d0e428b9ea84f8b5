use crate::artifact::{
    ClassModel, ClassRelationKind, DeploymentModel, MessageStyle, ParticipantKind, SequenceModel,
};

use super::{DiagramKind, DiagramModel, DiagramText, END, START};

pub(crate) fn relation_token(kind: ClassRelationKind) -> &'static str {
    match kind {
        ClassRelationKind::Inherits => "--|>",
        ClassRelationKind::Depends => "..>",
        ClassRelationKind::Aggregates => "o--",
        ClassRelationKind::Composes => "*--",
    }
}

pub(crate) fn message_token(style: MessageStyle) -> &'static str {
    match style {
        MessageStyle::Sync => "->",
        MessageStyle::Async => "->>",
        MessageStyle::Reply => "-->",
    }
}

fn finish(mut lines: Vec<String>) -> String {
    lines.insert(0, START.to_string());
    lines.push(END.to_string());
    lines.join("\n")
}

pub fn emit_class(model: &ClassModel) -> String {
    let mut lines = Vec::new();
    for class in &model.classes {
        if class.attributes.is_empty() && class.methods.is_empty() {
            lines.push(format!("class {}", class.name));
            continue;
        }
        lines.push(format!("class {} {{", class.name));
        for attr in &class.attributes {
            lines.push(format!("  +{}: {}", attr.name, attr.ty));
        }
        for method in &class.methods {
            lines.push(format!("  +{method}"));
        }
        lines.push("}".to_string());
    }
    for rel in &model.relations {
        lines.push(format!(
            "{} {} {}",
            rel.from,
            relation_token(rel.kind),
            rel.to
        ));
    }
    finish(lines)
}

pub fn emit_sequence(model: &SequenceModel) -> String {
    let mut lines = Vec::new();
    for p in &model.participants {
        let keyword = match p.kind {
            ParticipantKind::Actor => "actor",
            ParticipantKind::Object => "participant",
        };
        lines.push(format!("{keyword} {}", p.name));
    }
    for m in &model.messages {
        lines.push(format!(
            "{} {} {} : {}",
            m.from,
            message_token(m.style),
            m.to,
            m.label
        ));
    }
    finish(lines)
}

pub(crate) fn artifacts_on<'a>(
    model: &'a DeploymentModel,
    node: &'a str,
) -> impl Iterator<Item = &'a str> + 'a {
    model.artifacts.iter().filter_map(move |a| {
        model
            .placements
            .iter()
            .any(|p| p.artifact == a.name && p.node == node)
            .then_some(a.name.as_str())
    })
}

pub fn emit_deployment(model: &DeploymentModel) -> String {
    let mut lines = Vec::new();
    for node in &model.nodes {
        lines.push(format!("node {} {{", node.name));
        for artifact in artifacts_on(model, &node.name) {
            lines.push(format!("  artifact {artifact}"));
        }
        lines.push("}".to_string());
    }
    for path in &model.paths {
        match &path.label {
            Some(label) => lines.push(format!("{} -- {} : {label}", path.from, path.to)),
            None => lines.push(format!("{} -- {}", path.from, path.to)),
        }
    }
    finish(lines)
}

pub fn emit_diagram(model: &DiagramModel) -> DiagramText {
    let (kind, text) = match model {
        DiagramModel::Class(m) => (DiagramKind::Class, emit_class(m)),
        DiagramModel::Sequence(m) => (DiagramKind::Sequence, emit_sequence(m)),
        DiagramModel::Deployment(m) => (DiagramKind::Deployment, emit_deployment(m)),
    };
    DiagramText { kind, text }
}

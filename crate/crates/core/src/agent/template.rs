//! Role prompt templates.
//!
//! A template file holds the system text, a `=== user ===` separator line,
//! then the user text. Both parts may use `{{name}}` placeholders and
//! `{{#name}}` / `{{/name}}` section lines; a section is kept only when its
//! placeholder has a non-empty value.

use std::collections::BTreeMap;
use std::path::Path;

use super::AgentError;
use crate::Role;

const USER_SEPARATOR: &str = "=== user ===";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Placeholder {
    Srs,
    PriorArtifacts,
    Knowledge,
    RefinementDirectives,
    ClarificationAnswers,
}

impl Placeholder {
    pub const ALL: [Placeholder; 5] = [
        Placeholder::Srs,
        Placeholder::PriorArtifacts,
        Placeholder::Knowledge,
        Placeholder::RefinementDirectives,
        Placeholder::ClarificationAnswers,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Placeholder::Srs => "srs",
            Placeholder::PriorArtifacts => "prior_artifacts",
            Placeholder::Knowledge => "knowledge",
            Placeholder::RefinementDirectives => "refinement_directives",
            Placeholder::ClarificationAnswers => "clarification_answers",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Placeholder::ALL.into_iter().find(|p| p.as_str() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Value(Placeholder),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Block {
    Line(Vec<Segment>),
    Section(Placeholder, Vec<Vec<Segment>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Part {
    blocks: Vec<Block>,
}

/// Inputs for one rendering. `None` means the input is absent from the
/// session, which is an error for a placeholder outside any section.
pub type Values = BTreeMap<Placeholder, Option<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    role: Role,
    system: Part,
    user: Part,
}

fn template_error(role: Role, msg: String) -> AgentError {
    AgentError::Template { role, message: msg }
}

fn parse_line(role: Role, line: &str, lineno: usize) -> Result<Vec<Segment>, AgentError> {
    let mut segments = Vec::new();
    let mut rest = line;
    while let Some(start) = rest.find("{{") {
        if start > 0 {
            segments.push(Segment::Literal(rest[..start].to_string()));
        }
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| {
            template_error(role, format!("line {lineno}: unterminated placeholder"))
        })?;
        let name = after[..end].trim();
        let p = Placeholder::parse(name).ok_or_else(|| {
            template_error(role, format!("line {lineno}: unknown placeholder `{name}`"))
        })?;
        segments.push(Segment::Value(p));
        rest = &after[end + 2..];
    }
    if !rest.is_empty() {
        segments.push(Segment::Literal(rest.to_string()));
    }
    Ok(segments)
}

fn section_marker(line: &str, sigil: char) -> Option<&str> {
    line.trim()
        .strip_prefix("{{")?
        .strip_suffix("}}")?
        .strip_prefix(sigil)
        .map(str::trim)
}

fn parse_part(role: Role, text: &str, first_line: usize) -> Result<Part, AgentError> {
    let mut blocks = Vec::new();
    let mut open: Option<(Placeholder, Vec<Vec<Segment>>)> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = first_line + i;
        if let Some(name) = section_marker(line, '#') {
            let p = Placeholder::parse(name).ok_or_else(|| {
                template_error(role, format!("line {lineno}: unknown section `{name}`"))
            })?;
            if open.is_some() {
                return Err(template_error(
                    role,
                    format!("line {lineno}: nested section `{name}`"),
                ));
            }
            open = Some((p, Vec::new()));
            continue;
        }
        if let Some(name) = section_marker(line, '/') {
            match open.take() {
                Some((p, lines)) if p.as_str() == name => blocks.push(Block::Section(p, lines)),
                _ => {
                    return Err(template_error(
                        role,
                        format!("line {lineno}: unmatched section end `{name}`"),
                    ))
                }
            }
            continue;
        }
        let segments = parse_line(role, line, lineno)?;
        match open.as_mut() {
            Some((_, lines)) => lines.push(segments),
            None => blocks.push(Block::Line(segments)),
        }
    }
    if let Some((p, _)) = open {
        return Err(template_error(
            role,
            format!("section `{}` is never closed", p.as_str()),
        ));
    }
    Ok(Part { blocks })
}

fn render_line(
    segments: &[Segment],
    values: &Values,
    out: &mut Vec<String>,
) -> Result<(), Placeholder> {
    let mut line = String::new();
    for seg in segments {
        match seg {
            Segment::Literal(s) => line.push_str(s),
            Segment::Value(p) => match values.get(p).and_then(|v| v.as_deref()) {
                Some(v) => line.push_str(v),
                None => return Err(*p),
            },
        }
    }
    let only_placeholder = segments.len() == 1 && matches!(segments[0], Segment::Value(_));
    if !(only_placeholder && line.is_empty()) {
        out.push(line);
    }
    Ok(())
}

impl Part {
    fn render(&self, values: &Values) -> Result<String, Placeholder> {
        let mut out = Vec::new();
        for block in &self.blocks {
            match block {
                Block::Line(segments) => render_line(segments, values, &mut out)?,
                Block::Section(p, lines) => {
                    let present = values
                        .get(p)
                        .and_then(|v| v.as_deref())
                        .is_some_and(|v| !v.is_empty());
                    if present {
                        for segments in lines {
                            render_line(segments, values, &mut out)?;
                        }
                    }
                }
            }
        }
        Ok(out.join("\n").trim().to_string())
    }

    fn placeholders(&self, acc: &mut Vec<Placeholder>) {
        fn visit(segments: &[Segment], acc: &mut Vec<Placeholder>) {
            for seg in segments {
                if let Segment::Value(p) = seg {
                    acc.push(*p);
                }
            }
        }
        for block in &self.blocks {
            match block {
                Block::Line(segments) => visit(segments, acc),
                Block::Section(p, lines) => {
                    acc.push(*p);
                    for segments in lines {
                        visit(segments, acc);
                    }
                }
            }
        }
    }
}

impl Template {
    pub fn parse(role: Role, text: &str) -> Result<Self, AgentError> {
        let mut system = Vec::new();
        let mut user = None;
        for (i, line) in text.lines().enumerate() {
            if user.is_none() && line.trim() == USER_SEPARATOR {
                user = Some(i + 1);
                continue;
            }
            if user.is_none() {
                system.push(line);
            }
        }
        let user_start =
            user.ok_or_else(|| template_error(role, format!("missing `{USER_SEPARATOR}` line")))?;
        let user_text: Vec<&str> = text.lines().skip(user_start).collect();
        Ok(Template {
            role,
            system: parse_part(role, &system.join("\n"), 1)?,
            user: parse_part(role, &user_text.join("\n"), user_start + 1)?,
        })
    }

    /// The shipped template for `role`.
    pub fn builtin(role: Role) -> Self {
        let text = match role {
            Role::Analyst => include_str!("../../templates/analyst.txt"),
            Role::Modeler => include_str!("../../templates/modeler.txt"),
            Role::Designer => include_str!("../../templates/designer.txt"),
            Role::Evaluator => include_str!("../../templates/evaluator.txt"),
        };
        Template::parse(role, text).expect("builtin template is valid")
    }

    /// `<dir>/<role>.txt` when present, else the shipped template.
    pub fn load(role: Role, dir: Option<&Path>) -> Result<Self, AgentError> {
        if let Some(path) = dir.map(|d| d.join(format!("{}.txt", role.as_str()))) {
            if path.exists() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| template_error(role, format!("{}: {e}", path.display())))?;
                return Template::parse(role, &text);
            }
        }
        Ok(Template::builtin(role))
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Placeholders referenced anywhere, deduplicated.
    pub fn placeholders(&self) -> Vec<Placeholder> {
        let mut acc = Vec::new();
        self.system.placeholders(&mut acc);
        self.user.placeholders(&mut acc);
        acc.sort();
        acc.dedup();
        acc
    }

    pub fn render(&self, values: &Values) -> Result<(String, String), AgentError> {
        let missing = |p: Placeholder| AgentError::MissingInput {
            role: self.role,
            placeholder: p.as_str().to_string(),
        };
        Ok((
            self.system.render(values).map_err(missing)?,
            self.user.render(values).map_err(missing)?,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<Role, Template>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: Role::ALL
                .into_iter()
                .map(|r| (r, Template::builtin(r)))
                .collect(),
        }
    }
}

impl TemplateSet {
    pub fn load(dir: Option<&Path>) -> Result<Self, AgentError> {
        let mut templates = BTreeMap::new();
        for role in Role::ALL {
            templates.insert(role, Template::load(role, dir)?);
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, role: Role) -> &Template {
        &self.templates[&role]
    }
}

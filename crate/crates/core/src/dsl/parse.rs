use std::collections::HashMap;

use crate::artifact::{
    ClassAttribute, ClassDecl, ClassModel, ClassRelation, ClassRelationKind, DeploymentArtifact,
    DeploymentModel, DeploymentNode, DeploymentPath, Message, MessageStyle, Participant,
    ParticipantKind, Placement, SequenceModel,
};

use super::lexical::{is_name, is_type_char, MethodSignature};
use super::{DiagramKind, DiagramModel, DslError, ParseError, END, START};

type Result<T> = std::result::Result<T, DslError>;

const END_OF_LINE: &str = "end of line";

/// Character cursor over one source line.
struct Cursor {
    number: usize,
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn new(number: usize, line: &str) -> Self {
        Cursor {
            number,
            chars: line.chars().collect(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && matches!(self.chars[self.pos], ' ' | '\t') {
            self.pos += 1;
        }
    }

    fn found(&self) -> String {
        let token: String = self.chars[self.pos..]
            .iter()
            .take_while(|c| !c.is_whitespace())
            .collect();
        if token.is_empty() {
            END_OF_LINE.to_string()
        } else {
            token
        }
    }

    fn error(&self, expected: &str) -> DslError {
        DslError::Syntax(ParseError {
            line_number: self.number,
            column: self.pos + 1,
            expected: expected.to_string(),
            found: self.found(),
        })
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        let mut i = self.pos;
        for c in token.chars() {
            if self.chars.get(i) != Some(&c) {
                return false;
            }
            i += 1;
        }
        self.pos = i;
        true
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("`{token}`")))
        }
    }

    fn peek_word(&mut self) -> String {
        self.skip_ws();
        self.chars[self.pos..]
            .iter()
            .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
            .collect()
    }

    fn keyword(&mut self, word: &str) -> bool {
        if self.peek_word() == word {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String> {
        let word = self.peek_word();
        if !is_name(&word) {
            return Err(self.error("identifier"));
        }
        self.pos += word.len();
        Ok(word)
    }

    fn type_name(&mut self) -> Result<String> {
        self.skip_ws();
        let word: String = self.chars[self.pos..]
            .iter()
            .take_while(|c| is_type_char(**c))
            .collect();
        if !super::lexical::is_type(&word) {
            return Err(self.error("type"));
        }
        self.pos += word.chars().count();
        Ok(word)
    }

    fn label(&mut self) -> Result<String> {
        self.skip_ws();
        let rest: String = self.chars[self.pos..].iter().collect();
        let rest = rest.trim_end().to_string();
        if rest.is_empty() {
            return Err(self.error("label"));
        }
        self.pos = self.chars.len();
        Ok(rest)
    }

    fn end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos < self.chars.len() {
            Err(self.error(END_OF_LINE))
        } else {
            Ok(())
        }
    }

    fn is_blank(&self) -> bool {
        self.chars.iter().all(|c| matches!(c, ' ' | '\t'))
    }

    fn trimmed_is(&self, token: &str) -> bool {
        let s: String = self.chars.iter().collect();
        s.trim_matches([' ', '\t']) == token
    }
}

/// Splits the text into body cursors, checking the `@startuml`/`@enduml`
/// envelope. One trailing newline is tolerated.
fn body(text: &str) -> Result<Vec<Cursor>> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = if text.is_empty() {
        Vec::new()
    } else {
        text.split('\n').collect()
    };
    let first = Cursor::new(1, lines.first().copied().unwrap_or(""));
    if lines.first().copied() != Some(START) {
        return Err(if lines.is_empty() {
            DslError::Syntax(ParseError {
                line_number: 1,
                column: 1,
                expected: format!("`{START}`"),
                found: "end of input".to_string(),
            })
        } else {
            first.error(&format!("`{START}`"))
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let number = i + 1;
        if *line == END {
            if let Some(extra) = lines.get(i + 1) {
                let cursor = Cursor::new(number + 1, extra);
                return Err(DslError::Syntax(ParseError {
                    line_number: number + 1,
                    column: 1,
                    expected: "end of input".to_string(),
                    found: if cursor.is_blank() {
                        "empty line".to_string()
                    } else {
                        cursor.found()
                    },
                }));
            }
            return Ok(out);
        }
        out.push(Cursor::new(number, line));
    }
    let last = lines.len();
    Err(DslError::Syntax(ParseError {
        line_number: last,
        column: lines[last - 1].chars().count() + 1,
        expected: format!("`{END}`"),
        found: "end of input".to_string(),
    }))
}

fn reject_blank(cursor: &Cursor, expected: &str) -> Result<()> {
    if cursor.is_blank() {
        return Err(DslError::Syntax(ParseError {
            line_number: cursor.number,
            column: 1,
            expected: expected.to_string(),
            found: "empty line".to_string(),
        }));
    }
    Ok(())
}

fn unclosed_block(text: &str) -> DslError {
    let text = text.strip_suffix('\n').unwrap_or(text);
    let line = text.split('\n').count();
    DslError::Syntax(ParseError {
        line_number: line,
        column: 1,
        expected: "`}`".to_string(),
        found: END.to_string(),
    })
}

fn parse_member(cursor: &mut Cursor, class: &mut ClassDecl) -> Result<()> {
    cursor.expect("+")?;
    let name = cursor.name()?;
    if cursor.eat(":") {
        let ty = cursor.type_name()?;
        cursor.end()?;
        if class.attributes.iter().any(|a| a.name == name) {
            return Err(DslError::DuplicateName {
                line: cursor.number,
                name,
            });
        }
        class.attributes.push(ClassAttribute { name, ty });
        return Ok(());
    }
    if !cursor.eat("(") {
        return Err(cursor.error("`:` or `(`"));
    }
    let mut params = Vec::new();
    if !cursor.eat(")") {
        loop {
            let pname = cursor.name()?;
            cursor.expect(":")?;
            let pty = cursor.type_name()?;
            params.push((pname, pty));
            if cursor.eat(",") {
                continue;
            }
            cursor.expect(")")?;
            break;
        }
    }
    let return_type = if cursor.eat(":") {
        Some(cursor.type_name()?)
    } else {
        None
    };
    cursor.end()?;
    class.methods.push(
        MethodSignature {
            name,
            params,
            return_type,
        }
        .render(),
    );
    Ok(())
}

fn parse_relation_kind(cursor: &mut Cursor) -> Result<ClassRelationKind> {
    for (token, kind) in [
        ("--|>", ClassRelationKind::Inherits),
        ("..>", ClassRelationKind::Depends),
        ("o--", ClassRelationKind::Aggregates),
        ("*--", ClassRelationKind::Composes),
    ] {
        if cursor.eat(token) {
            return Ok(kind);
        }
    }
    Err(cursor.error("relation arrow"))
}

pub fn parse_class(text: &str) -> Result<ClassModel> {
    let mut model = ClassModel::default();
    let mut declared: HashMap<String, usize> = HashMap::new();
    let mut relation_lines = Vec::new();
    let mut open_block: Option<usize> = None;
    for mut cursor in body(text)? {
        if let Some(index) = open_block {
            if cursor.trimmed_is("}") {
                open_block = None;
                continue;
            }
            reject_blank(&cursor, "member or `}`")?;
            parse_member(&mut cursor, &mut model.classes[index])?;
            continue;
        }
        reject_blank(&cursor, "class declaration or relation")?;
        if cursor.keyword("class") {
            let name = cursor.name()?;
            if declared.contains_key(&name) {
                return Err(DslError::DuplicateName {
                    line: cursor.number,
                    name,
                });
            }
            let has_block = cursor.eat("{");
            cursor.end()?;
            declared.insert(name.clone(), cursor.number);
            model.classes.push(ClassDecl::new(name));
            if has_block {
                open_block = Some(model.classes.len() - 1);
            }
            continue;
        }
        let from = cursor.name()?;
        let kind = parse_relation_kind(&mut cursor)?;
        let to = cursor.name()?;
        cursor.end()?;
        relation_lines.push(cursor.number);
        model.relations.push(ClassRelation { from, to, kind });
    }
    if open_block.is_some() {
        return Err(unclosed_block(text));
    }
    for (rel, line) in model.relations.iter().zip(relation_lines) {
        for name in [&rel.from, &rel.to] {
            if !declared.contains_key(name) {
                return Err(DslError::DanglingEndpoint {
                    line,
                    name: name.clone(),
                });
            }
        }
    }
    Ok(model)
}

fn parse_message_style(cursor: &mut Cursor) -> Result<MessageStyle> {
    for (token, style) in [
        ("-->", MessageStyle::Reply),
        ("->>", MessageStyle::Async),
        ("->", MessageStyle::Sync),
    ] {
        if cursor.eat(token) {
            return Ok(style);
        }
    }
    Err(cursor.error("message arrow"))
}

pub fn parse_sequence(text: &str) -> Result<SequenceModel> {
    let mut model = SequenceModel::default();
    for mut cursor in body(text)? {
        reject_blank(&cursor, "participant declaration or message")?;
        let word = cursor.peek_word();
        if word == "actor" || word == "participant" {
            if !model.messages.is_empty() {
                return Err(cursor.error("message"));
            }
            cursor.keyword(&word);
            let kind = if word == "actor" {
                ParticipantKind::Actor
            } else {
                ParticipantKind::Object
            };
            let name = cursor.name()?;
            cursor.end()?;
            if model.participants.iter().any(|p| p.name == name) {
                return Err(DslError::DuplicateName {
                    line: cursor.number,
                    name,
                });
            }
            model.participants.push(Participant { name, kind });
            continue;
        }
        let from = cursor.name()?;
        let style = parse_message_style(&mut cursor)?;
        let to = cursor.name()?;
        cursor.expect(":")?;
        let label = cursor.label()?;
        for name in [&from, &to] {
            if !model.participants.iter().any(|p| &p.name == name) {
                return Err(DslError::DanglingEndpoint {
                    line: cursor.number,
                    name: name.clone(),
                });
            }
        }
        let seq_index = model.messages.len() as u32 + 1;
        model.messages.push(Message {
            seq_index,
            from,
            to,
            label,
            style,
        });
    }
    Ok(model)
}

pub fn parse_deployment(text: &str) -> Result<DeploymentModel> {
    let mut model = DeploymentModel::default();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut path_lines = Vec::new();
    let mut open_node: Option<String> = None;
    for mut cursor in body(text)? {
        if let Some(node) = &open_node {
            if cursor.trimmed_is("}") {
                open_node = None;
                continue;
            }
            reject_blank(&cursor, "artifact or `}`")?;
            if !cursor.keyword("artifact") {
                return Err(cursor.error("`artifact`"));
            }
            let name = cursor.name()?;
            cursor.end()?;
            if names.contains_key(&name) {
                return Err(DslError::DuplicateName {
                    line: cursor.number,
                    name,
                });
            }
            names.insert(name.clone(), cursor.number);
            model.artifacts.push(DeploymentArtifact {
                name: name.clone(),
                realizes: String::new(),
            });
            model.placements.push(Placement {
                artifact: name,
                node: node.clone(),
            });
            continue;
        }
        reject_blank(&cursor, "node declaration or path")?;
        if cursor.keyword("node") {
            let name = cursor.name()?;
            cursor.expect("{")?;
            cursor.end()?;
            if names.contains_key(&name) {
                return Err(DslError::DuplicateName {
                    line: cursor.number,
                    name,
                });
            }
            names.insert(name.clone(), cursor.number);
            model.nodes.push(DeploymentNode { name: name.clone() });
            open_node = Some(name);
            continue;
        }
        let from = cursor.name()?;
        cursor.expect("--")?;
        let to = cursor.name()?;
        let label = if cursor.eat(":") {
            Some(cursor.label()?)
        } else {
            None
        };
        cursor.end()?;
        path_lines.push(cursor.number);
        model.paths.push(DeploymentPath { from, to, label });
    }
    if open_node.is_some() {
        return Err(unclosed_block(text));
    }
    for (path, line) in model.paths.iter().zip(path_lines) {
        for name in [&path.from, &path.to] {
            if !model.nodes.iter().any(|n| &n.name == name) {
                return Err(DslError::DanglingEndpoint {
                    line,
                    name: name.clone(),
                });
            }
        }
    }
    Ok(model)
}

pub fn parse_diagram(kind: DiagramKind, text: &str) -> Result<DiagramModel> {
    Ok(match kind {
        DiagramKind::Class => DiagramModel::Class(parse_class(text)?),
        DiagramKind::Sequence => DiagramModel::Sequence(parse_sequence(text)?),
        DiagramKind::Deployment => DiagramModel::Deployment(parse_deployment(text)?),
    })
}

//! Token-level rules shared by the emitter, the parser and model validation.

pub const KEYWORDS: [&str; 5] = ["class", "actor", "participant", "node", "artifact"];

/// `[A-Za-z_][A-Za-z0-9_]*`, excluding directive keywords.
pub fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&s)
}

pub(crate) fn is_type_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '<' | '>' | '[' | ']' | '.' | '?')
}

/// A type is an identifier start followed by identifier or generic punctuation,
/// with no whitespace or commas (`List<Item>`, `byte[]`).
pub fn is_type(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(is_type_char)
}

/// A free-text label: non-empty, single line, no surrounding whitespace.
pub fn is_label(s: &str) -> bool {
    !s.is_empty() && !s.contains(['\n', '\r']) && s.trim() == s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSignature {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub return_type: Option<String>,
}

impl MethodSignature {
    pub fn render(&self) -> String {
        let params = self
            .params
            .iter()
            .map(|(n, t)| format!("{n}: {t}"))
            .collect::<Vec<_>>()
            .join(", ");
        match &self.return_type {
            Some(ret) => format!("{}({params}): {ret}", self.name),
            None => format!("{}({params})", self.name),
        }
    }
}

/// Parses a method signature, tolerating arbitrary spacing between tokens.
pub fn parse_signature(s: &str) -> Option<MethodSignature> {
    let s = s.trim();
    let open = s.find('(')?;
    let close = s.rfind(')')?;
    if close < open {
        return None;
    }
    let name = s[..open].trim();
    if !is_name(name) {
        return None;
    }
    let inner = s[open + 1..close].trim();
    let mut params = Vec::new();
    if !inner.is_empty() {
        for part in inner.split(',') {
            let (pname, pty) = part.split_once(':')?;
            let (pname, pty) = (pname.trim(), pty.trim());
            if !is_name(pname) || !is_type(pty) {
                return None;
            }
            params.push((pname.to_string(), pty.to_string()));
        }
    }
    let tail = s[close + 1..].trim();
    let return_type = if tail.is_empty() {
        None
    } else {
        let ty = tail.strip_prefix(':')?.trim();
        if !is_type(ty) {
            return None;
        }
        Some(ty.to_string())
    };
    Some(MethodSignature {
        name: name.to_string(),
        params,
        return_type,
    })
}

/// True when `s` is a method signature already in canonical rendering.
pub fn is_canonical_signature(s: &str) -> bool {
    parse_signature(s)
        .map(|sig| sig.render() == s)
        .unwrap_or(false)
}

//! Paragraph/sentence chunking of ingested documents.

pub const MAX_CHUNK_WORDS: usize = 200;

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n").trim().to_string());
                current.clear();
            }
        } else {
            current.push(line.trim_end());
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n").trim().to_string());
    }
    out
}

/// Splits after `.`, `!` or `?` when followed by whitespace.
fn sentences(paragraph: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = paragraph.chars().collect();
    let mut start = 0;
    for i in 0..chars.len() {
        let boundary = matches!(chars[i], '.' | '!' | '?')
            && chars.get(i + 1).is_some_and(|c| c.is_whitespace());
        if boundary {
            let s: String = chars[start..=i].iter().collect();
            if !s.trim().is_empty() {
                out.push(s.trim().to_string());
            }
            start = i + 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    if !tail.trim().is_empty() {
        out.push(tail.trim().to_string());
    }
    out
}

fn split_long_paragraph(paragraph: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut words = 0;
    let flush = |current: &mut Vec<String>, words: &mut usize, pieces: &mut Vec<String>| {
        if !current.is_empty() {
            pieces.push(current.join(" "));
            current.clear();
            *words = 0;
        }
    };
    for sentence in sentences(paragraph) {
        let n = word_count(&sentence);
        if n > MAX_CHUNK_WORDS {
            // A single run-on sentence: fall back to fixed word windows.
            flush(&mut current, &mut words, &mut pieces);
            let tokens: Vec<&str> = sentence.split_whitespace().collect();
            for window in tokens.chunks(MAX_CHUNK_WORDS) {
                pieces.push(window.join(" "));
            }
            continue;
        }
        if words + n > MAX_CHUNK_WORDS {
            flush(&mut current, &mut words, &mut pieces);
        }
        current.push(sentence);
        words += n;
    }
    flush(&mut current, &mut words, &mut pieces);
    pieces
}

/// Splits a document into chunk texts of at most [`MAX_CHUNK_WORDS`] words.
///
/// Consecutive paragraphs are merged greedily while the total stays within
/// the limit. An oversized paragraph is split at sentence boundaries into
/// standalone chunks and never merged with its neighbours.
pub fn chunk_document(text: &str) -> Vec<String> {
    let mut chunks = Vec::new();
    let mut acc: Vec<String> = Vec::new();
    let mut acc_words = 0;
    for paragraph in paragraphs(text) {
        let n = word_count(&paragraph);
        if n > MAX_CHUNK_WORDS {
            if !acc.is_empty() {
                chunks.push(acc.join("\n\n"));
                acc.clear();
                acc_words = 0;
            }
            chunks.extend(split_long_paragraph(&paragraph));
            continue;
        }
        if acc_words + n > MAX_CHUNK_WORDS && !acc.is_empty() {
            chunks.push(acc.join("\n\n"));
            acc.clear();
            acc_words = 0;
        }
        acc.push(paragraph);
        acc_words += n;
    }
    if !acc.is_empty() {
        chunks.push(acc.join("\n\n"));
    }
    chunks
}

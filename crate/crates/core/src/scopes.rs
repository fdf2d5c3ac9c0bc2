//! Heuristic scope extraction and snippet rendering with pruning markers.
//!
//! A snippet is rendered together with the header line of every scope that
//! encloses it (class header, function signature), and every maximal run of
//! omitted lines collapses to a single "…" marker line. Scope detection is
//! a lightweight heuristic: brace balancing for brace languages, indentation
//! outline otherwise. It needs no grammar and tolerates malformed input.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::context::{content_lines, line_char_spans, PackError};
use crate::session::Span;

/// Marker line standing in for one omitted region.
pub const PRUNING_MARKER: &str = "…";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopeMode {
    /// Brace balancing when the file contains any `{`, indentation otherwise.
    Auto,
    Brace,
    Indent,
}

/// One syntactic scope: the line that opens it and the line range it
/// encloses (body through the closing line).
#[derive(Debug, Clone, PartialEq, Eq)]
struct Scope {
    header: usize,
    /// Enclosed lines `[start, end)`, not counting the header itself.
    start: usize,
    end: usize,
}

fn detect_scopes(lines: &[&str], mode: ScopeMode) -> Vec<Scope> {
    let effective = match mode {
        ScopeMode::Auto => {
            if lines.iter().any(|l| l.contains('{')) {
                ScopeMode::Brace
            } else {
                ScopeMode::Indent
            }
        }
        other => other,
    };
    match effective {
        ScopeMode::Brace => brace_scopes(lines),
        ScopeMode::Indent => indent_scopes(lines),
        ScopeMode::Auto => unreachable!(),
    }
}

fn brace_scopes(lines: &[&str]) -> Vec<Scope> {
    let mut stack = Vec::new();
    let mut scopes = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        for c in line.chars() {
            match c {
                '{' => stack.push(i),
                '}' => {
                    if let Some(header) = stack.pop() {
                        scopes.push(Scope { header, start: header + 1, end: i + 1 });
                    }
                }
                _ => {}
            }
        }
    }
    // Unclosed scopes run to end of file.
    for header in stack {
        scopes.push(Scope { header, start: header + 1, end: lines.len() });
    }
    scopes
}

fn indent_width(line: &str) -> usize {
    let mut width = 0;
    for c in line.chars() {
        match c {
            ' ' => width += 1,
            '\t' => width += 4,
            _ => break,
        }
    }
    width
}

fn indent_scopes(lines: &[&str]) -> Vec<Scope> {
    let mut scopes = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let head = indent_width(line);
        let mut end = i + 1;
        let mut j = i + 1;
        while j < lines.len() {
            if lines[j].trim().is_empty() {
                j += 1;
                continue;
            }
            if indent_width(lines[j]) > head {
                end = j + 1;
                j += 1;
            } else {
                break;
            }
        }
        if end > i + 1 {
            scopes.push(Scope { header: i, start: i + 1, end });
        }
    }
    scopes
}

/// Header line indices of every scope enclosing `line`, outermost first.
fn enclosing_headers(scopes: &[Scope], line: usize) -> impl Iterator<Item = usize> + '_ {
    scopes
        .iter()
        .filter(move |s| s.start <= line && line < s.end)
        .map(|s| s.header)
}

/// Renders the given character ranges of a file with their enclosing scope
/// headers. Output lines are a subsequence of the input lines, in document
/// order, with exactly one marker line per maximal omitted region
/// (including omitted leading and trailing regions).
pub fn render_with_scopes(
    content: &str,
    ranges: &[Span],
    mode: ScopeMode,
) -> Result<String, PackError> {
    let total_chars = content.chars().count();
    for r in ranges {
        if r.start > r.end || r.end > total_chars {
            return Err(PackError::MalformedRange);
        }
    }
    let lines = content_lines(content);
    let line_spans = line_char_spans(content);
    let scopes = detect_scopes(&lines, mode);

    let mut kept: BTreeSet<usize> = BTreeSet::new();
    for r in ranges {
        for (i, span) in line_spans.iter().enumerate() {
            let covers = if r.is_empty() {
                span.start <= r.start && r.start < span.end.max(span.start + 1)
            } else {
                r.start < span.end && r.end > span.start
            };
            if covers {
                kept.insert(i);
            }
        }
    }
    for line in kept.clone() {
        kept.extend(enclosing_headers(&scopes, line));
    }

    let mut out: Vec<&str> = Vec::new();
    let mut previous: Option<usize> = None;
    for &line in &kept {
        let gap_start = previous.map(|p| p + 1).unwrap_or(0);
        if line > gap_start {
            out.push(PRUNING_MARKER);
        }
        out.push(lines[line]);
        previous = Some(line);
    }
    let after_last = previous.map(|p| p + 1).unwrap_or(0);
    if after_last < lines.len() {
        out.push(PRUNING_MARKER);
    }
    Ok(out.join("\n"))
}

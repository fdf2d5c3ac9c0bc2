//! Prompt context selection and packing: word-level lexical matching over
//! open files, snippet ranking, and greedy assembly into a token budget.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::scopes::{render_with_scopes, ScopeMode};
use crate::session::{DocumentState, EditRecord, FileId, Session, Span, TimestampMs};

/// A candidate context region competing for prompt budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snippet {
    pub file_id: FileId,
    /// Character span of the region within its file.
    pub range: Span,
    pub kind: SnippetKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnippetKind {
    /// Derived from the session's edit history; scored by recency.
    RecentEdit { last_touched: TimestampMs },
    /// Found by the sliding-window scan; scored by shared-word count.
    LexicalMatch { matched_words: usize },
}

/// Sliding-window and cursor-context geometry. All values are line counts
/// except the estimator divisor.
#[derive(Debug, Clone)]
pub struct PackerConfig {
    pub window_lines: usize,
    pub stride_lines: usize,
    pub cursor_lines_above: usize,
    pub cursor_lines_below: usize,
    pub chars_per_token: usize,
    pub scope_mode: ScopeMode,
}

impl Default for PackerConfig {
    fn default() -> Self {
        PackerConfig {
            window_lines: 30,
            stride_lines: 10,
            cursor_lines_above: 10,
            cursor_lines_below: 10,
            chars_per_token: 4,
            scope_mode: ScopeMode::Auto,
        }
    }
}

/// Prompt size limits in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenBudget {
    pub input_tokens: usize,
    /// Reserved for the model's reply; completions are clamped against it.
    pub output_tokens: usize,
}

impl Default for TokenBudget {
    fn default() -> Self {
        TokenBudget { input_tokens: 8192, output_tokens: 128 }
    }
}

/// Converts text to an estimated token count. Estimates only have to be
/// deterministic and monotone in text length, not tokenizer-accurate.
pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> usize;
}

/// Default estimator: one token per `chars_per_token` characters, rounded up.
#[derive(Debug, Clone, Copy)]
pub struct CharsPerToken(pub usize);

impl TokenEstimator for CharsPerToken {
    fn estimate(&self, text: &str) -> usize {
        let divisor = self.0.max(1);
        text.chars().count().div_ceil(divisor)
    }
}

/// Marker inserted at the cursor position in the prompt's cursor section.
pub const CURSOR_MARKER: &str = "<|cursor|>";
/// Header line prefix introducing each per-file prompt section.
pub const FILE_HEADER_PREFIX: &str = "FILE ";

/// The assembled prompt: per-file rendered sections plus the cursor section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    /// Rendered per-file sections, ordered by first snippet inclusion.
    pub sections: Vec<(FileId, String)>,
    /// Text around the cursor with the cursor marker spliced in.
    pub cursor_section: String,
    pub token_estimate: usize,
    pub budget: TokenBudget,
    /// Snippets that made it into the bundle, in rank order.
    pub included: Vec<Snippet>,
}

impl PromptBundle {
    /// Full prompt text: context sections first, cursor section last.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (_, section) in &self.sections {
            out.push_str(section);
        }
        out.push_str(&self.cursor_section);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PackError {
    /// The cursor section alone exceeds the input budget.
    CursorSectionOverBudget,
    /// A snippet range reaches outside its file's content.
    MalformedRange,
}

impl fmt::Display for PackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PackError::CursorSectionOverBudget => {
                f.write_str("cursor section alone exceeds the input token budget")
            }
            PackError::MalformedRange => f.write_str("snippet range outside file bounds"),
        }
    }
}

impl core::error::Error for PackError {}

/// Splits an identifier (or any text) into lowercase words at case
/// transitions, underscores, letter/digit boundaries, and anything
/// non-alphanumeric. `"ComputeAnnualBalance"` and `"annual_balance"` share
/// the words `annual` and `balance`.
pub fn split_words(identifier: &str) -> Vec<String> {
    let chars: Vec<char> = identifier.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();
    for i in 0..chars.len() {
        let c = chars[i];
        if !c.is_alphanumeric() {
            flush_word(&mut current, &mut words);
            continue;
        }
        if !current.is_empty() && word_boundary(&chars, i) {
            flush_word(&mut current, &mut words);
        }
        current.extend(c.to_lowercase());
    }
    flush_word(&mut current, &mut words);
    words
}

fn flush_word(current: &mut String, words: &mut Vec<String>) {
    if !current.is_empty() {
        words.push(core::mem::take(current));
    }
}

/// True when a new word starts at index `i` (which has an alphanumeric
/// predecessor in the same run).
pub(crate) fn word_boundary(chars: &[char], i: usize) -> bool {
    let prev = chars[i - 1];
    let c = chars[i];
    if c.is_uppercase() && (prev.is_lowercase() || prev.is_numeric()) {
        return true;
    }
    // Acronym end: the last capital before a lowercase run starts a word,
    // as in "HTTPServer" -> http, server.
    if c.is_uppercase() && prev.is_uppercase() && chars.get(i + 1).is_some_and(|n| n.is_lowercase())
    {
        return true;
    }
    if c.is_numeric() != prev.is_numeric() {
        return true;
    }
    false
}

fn word_set(text: &str) -> BTreeSet<String> {
    split_words(text).into_iter().collect()
}

/// Scans every open file with a sliding window and scores each window by
/// how many distinct words it shares with the cursor context. Windows with
/// no shared words are dropped, overlapping scoring windows in one file are
/// merged keeping the higher score, and the window holding the cursor
/// itself never competes. Results are ordered best-first.
pub fn scan_matches<'a>(
    open_files: impl IntoIterator<Item = (&'a FileId, &'a str)>,
    cursor: (&FileId, usize),
    cursor_context: &str,
    window_lines: usize,
    stride_lines: usize,
) -> Vec<Snippet> {
    let context_words = word_set(cursor_context);
    if context_words.is_empty() || window_lines == 0 {
        return Vec::new();
    }
    let stride = stride_lines.max(1);
    let (cursor_file, cursor_line) = cursor;
    let mut snippets = Vec::new();
    for (file_id, content) in open_files {
        let lines = content_lines(content);
        let line_spans = line_char_spans(content);
        // Scored line ranges [start, end) with their match counts.
        let mut windows: Vec<(usize, usize, usize)> = Vec::new();
        let mut start = 0;
        while start < lines.len() {
            let end = (start + window_lines).min(lines.len());
            let contains_cursor = file_id == cursor_file && (start..end).contains(&cursor_line);
            if !contains_cursor {
                let mut score = 0;
                let mut seen = BTreeSet::new();
                for line in &lines[start..end] {
                    for word in split_words(line) {
                        if context_words.contains(&word) && seen.insert(word) {
                            score += 1;
                        }
                    }
                }
                if score > 0 {
                    windows.push((start, end, score));
                }
            }
            start += stride;
        }
        // Windows come out sorted by start; merge overlapping ones.
        let mut merged: Vec<(usize, usize, usize)> = Vec::new();
        for w in windows {
            match merged.last_mut() {
                Some(last) if w.0 < last.1 => {
                    last.1 = last.1.max(w.1);
                    last.2 = last.2.max(w.2);
                }
                _ => merged.push(w),
            }
        }
        for (line_start, line_end, score) in merged {
            snippets.push(Snippet {
                file_id: file_id.clone(),
                range: lines_to_char_span(&line_spans, line_start, line_end),
                kind: SnippetKind::LexicalMatch { matched_words: score },
            });
        }
    }
    snippets.sort_by(|a, b| {
        let (SnippetKind::LexicalMatch { matched_words: sa }, SnippetKind::LexicalMatch { matched_words: sb }) =
            (&a.kind, &b.kind)
        else {
            unreachable!("scan emits lexical matches only");
        };
        sb.cmp(sa)
            .then_with(|| a.file_id.cmp(&b.file_id))
            .then_with(|| a.range.start.cmp(&b.range.start))
    });
    snippets
}

/// Splits content into lines. A trailing newline terminates the last line
/// rather than opening an empty one; this convention is shared by every
/// line-oriented operation in the crate.
pub fn content_lines(content: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = content.split('\n').collect();
    if content.ends_with('\n') {
        lines.pop();
    }
    lines
}

/// Character span of each line, including its trailing newline.
pub(crate) fn line_char_spans(content: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut current = 0;
    for c in content.chars() {
        current += 1;
        if c == '\n' {
            spans.push(Span::new(start, current));
            start = current;
        }
    }
    if start < current || spans.is_empty() {
        spans.push(Span::new(start, current));
    }
    spans
}

fn lines_to_char_span(line_spans: &[Span], line_start: usize, line_end: usize) -> Span {
    let start = line_spans.get(line_start).map(|s| s.start).unwrap_or(0);
    let end = if line_end == 0 {
        start
    } else {
        line_spans.get(line_end - 1).map(|s| s.end).unwrap_or(start)
    };
    Span::new(start, end)
}

/// Line index containing the given character offset.
pub(crate) fn line_of_char(line_spans: &[Span], offset: usize) -> usize {
    match line_spans.binary_search_by(|s| {
        if offset < s.start {
            core::cmp::Ordering::Greater
        } else if offset >= s.end {
            core::cmp::Ordering::Less
        } else {
            core::cmp::Ordering::Equal
        }
    }) {
        Ok(i) => i,
        // Past the last character: the final line.
        Err(_) => line_spans.len().saturating_sub(1),
    }
}

/// Combines recent-edit snippets and lexical matches into one ranked list:
/// edits first by recency, matches after by score. A lexical match that
/// overlaps an edit snippet in the same file is dropped so the region never
/// spends budget twice.
pub fn rank_snippets(edits: &[EditRecord], matches: Vec<Snippet>) -> Vec<Snippet> {
    let mut ranked: Vec<Snippet> = edits
        .iter()
        .map(|e| Snippet {
            file_id: e.file_id.clone(),
            range: e.range,
            kind: SnippetKind::RecentEdit { last_touched: e.last_touched },
        })
        .collect();
    ranked.sort_by(|a, b| {
        let (SnippetKind::RecentEdit { last_touched: ta }, SnippetKind::RecentEdit { last_touched: tb }) =
            (&a.kind, &b.kind)
        else {
            unreachable!("edit snippets only");
        };
        tb.cmp(ta)
            .then_with(|| a.file_id.cmp(&b.file_id))
            .then_with(|| a.range.start.cmp(&b.range.start))
    });
    let mut matches: Vec<Snippet> = matches
        .into_iter()
        .filter(|m| {
            !ranked
                .iter()
                .any(|e| e.file_id == m.file_id && e.range.overlaps(&m.range))
        })
        .collect();
    matches.sort_by(|a, b| {
        let score = |s: &Snippet| match s.kind {
            SnippetKind::LexicalMatch { matched_words } => matched_words,
            SnippetKind::RecentEdit { .. } => 0,
        };
        score(b)
            .cmp(&score(a))
            .then_with(|| a.file_id.cmp(&b.file_id))
            .then_with(|| a.range.start.cmp(&b.range.start))
    });
    ranked.extend(matches);
    ranked
}

/// Greedily packs ranked snippets around the always-included cursor section
/// until the next snippet would overflow the input budget. Packing stops at
/// the first snippet that does not fit, so the included set is always a
/// rank prefix; this is what makes packing monotone in the budget.
pub fn build_prompt(
    session: &Session,
    cursor_doc: &DocumentState,
    ranked: &[Snippet],
    config: &PackerConfig,
    budget: TokenBudget,
    estimator: &dyn TokenEstimator,
) -> Result<PromptBundle, PackError> {
    let cursor_section = render_cursor_section(cursor_doc, config);
    let cursor_cost = estimator.estimate(&cursor_section);
    if cursor_cost > budget.input_tokens {
        return Err(PackError::CursorSectionOverBudget);
    }

    // Per-file accumulated ranges, plus section order by first inclusion.
    let mut ranges: BTreeMap<FileId, Vec<Span>> = BTreeMap::new();
    let mut order: Vec<FileId> = Vec::new();
    let mut included = Vec::new();
    let mut sections: BTreeMap<FileId, String> = BTreeMap::new();
    let mut total = cursor_cost;

    for snippet in ranked {
        let Some(doc) = session.document(&snippet.file_id) else {
            continue;
        };
        let mut tentative = ranges.get(&snippet.file_id).cloned().unwrap_or_default();
        tentative.push(snippet.range);
        let rendered = render_section(doc, &tentative, config)?;
        let old_cost = sections
            .get(&snippet.file_id)
            .map(|s| estimator.estimate(s))
            .unwrap_or(0);
        let new_total = total - old_cost + estimator.estimate(&rendered);
        if new_total > budget.input_tokens {
            break;
        }
        total = new_total;
        if !order.contains(&snippet.file_id) {
            order.push(snippet.file_id.clone());
        }
        ranges.insert(snippet.file_id.clone(), tentative);
        sections.insert(snippet.file_id.clone(), rendered);
        included.push(snippet.clone());
    }

    let sections: Vec<(FileId, String)> = order
        .into_iter()
        .map(|f| {
            let text = sections.remove(&f).expect("section rendered for every ordered file");
            (f, text)
        })
        .collect();
    let bundle = PromptBundle {
        token_estimate: {
            let mut text = String::new();
            for (_, s) in &sections {
                text.push_str(s);
            }
            text.push_str(&cursor_section);
            estimator.estimate(&text)
        },
        sections,
        cursor_section,
        budget,
        included,
    };
    Ok(bundle)
}

fn render_section(
    doc: &DocumentState,
    ranges: &[Span],
    config: &PackerConfig,
) -> Result<String, PackError> {
    let body = render_with_scopes(doc.content(), ranges, config.scope_mode)?;
    let mut out = String::new();
    out.push_str(FILE_HEADER_PREFIX);
    out.push_str(doc.file_id().as_str());
    out.push('\n');
    out.push_str(&body);
    out.push('\n');
    Ok(out)
}

/// The window of lines around the cursor with the cursor marker spliced in,
/// introduced by the file header and fenced by markers where the file
/// continues beyond the window.
pub fn render_cursor_section(doc: &DocumentState, config: &PackerConfig) -> String {
    let content = doc.content();
    let line_spans = line_char_spans(content);
    let cursor_line = line_of_char(&line_spans, doc.cursor());
    let first = cursor_line.saturating_sub(config.cursor_lines_above);
    let last = (cursor_line + config.cursor_lines_below).min(line_spans.len() - 1);

    let mut out = String::new();
    out.push_str(FILE_HEADER_PREFIX);
    out.push_str(doc.file_id().as_str());
    out.push('\n');
    if first > 0 {
        out.push_str("…\n");
    }
    let window_start_char = line_spans[first].start;
    let window_end_char = line_spans[last].end;
    for (i, c) in content.chars().enumerate() {
        if i < window_start_char || i >= window_end_char {
            continue;
        }
        if i == doc.cursor() {
            out.push_str(CURSOR_MARKER);
        }
        out.push(c);
    }
    if doc.cursor() == window_end_char {
        out.push_str(CURSOR_MARKER);
    }
    if !out.ends_with('\n') {
        out.push('\n');
    }
    if last + 1 < line_spans.len() {
        out.push_str("…\n");
    }
    out
}

/// Extracts the cursor-context text used for lexical matching: the window
/// of lines around the cursor, without markers.
pub fn cursor_context_text(doc: &DocumentState, config: &PackerConfig) -> String {
    let content = doc.content();
    let line_spans = line_char_spans(content);
    let cursor_line = line_of_char(&line_spans, doc.cursor());
    let first = cursor_line.saturating_sub(config.cursor_lines_above);
    let last = (cursor_line + config.cursor_lines_below).min(line_spans.len() - 1);
    content
        .chars()
        .skip(line_spans[first].start)
        .take(line_spans[last].end - line_spans[first].start)
        .collect()
}

/// Line index of the cursor within its document.
pub fn cursor_line(doc: &DocumentState) -> usize {
    let line_spans = line_char_spans(doc.content());
    line_of_char(&line_spans, doc.cursor())
}

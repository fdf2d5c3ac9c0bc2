//! Compact anchor-line edit scripts: parsing, location, application, and
//! generation from before/after file pairs.
//!
//! A script is an ordered list of hunks. Each hunk locates its target region
//! through three anchor lines repeated verbatim from the input file: two
//! immediately before the edited region and one immediately after. Where the
//! region touches a file boundary the missing anchor is replaced by a
//! reserved sentinel. Anchors make application independent of absolute line
//! numbers, so a script survives edits elsewhere in the file.
//!
//! The text format is line oriented, one marker per line:
//!
//! ```text
//! @@
//! = second line before the region, or <BOF>
//! = first line before the region, or <BOF>
//! - removed line
//! + added line
//! = line after the region, or <EOF>
//! ```
//!
//! Removed lines precede added lines; a hunk must remove or add at least one
//! line. `parse_edit_script` and [`EditScript::render`] are exact inverses on
//! canonical scripts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::diff::{line_diff, LineOp};

/// Anchor payload standing in for the missing line before the first line.
pub const BOF_SENTINEL: &str = "<BOF>";
/// Anchor payload standing in for the missing line after the last line.
pub const EOF_SENTINEL: &str = "<EOF>";

/// One anchor slot: a line repeated verbatim from the file, or the file
/// boundary when the slot falls outside the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Anchor {
    Line(String),
    Boundary,
}

/// One contiguous edit: the anchor lines locating the region, the lines the
/// region currently holds, and the lines that replace them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    /// Second line before the removed region.
    pub anchor_pre2: Anchor,
    /// Line immediately before the removed region.
    pub anchor_pre1: Anchor,
    /// Line immediately after the removed region.
    pub anchor_post: Anchor,
    pub removed: Vec<String>,
    pub added: Vec<String>,
}

/// Hunks ordered by target position; regions never overlap. Both properties
/// are enforced against a concrete file by [`locate_anchors`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditScript {
    pub hunks: Vec<Hunk>,
}

/// Failures across parsing, locating, and applying scripts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptError {
    /// A line violates the marker grammar. Carries the 1-based line number.
    Syntax { line: usize },
    /// The script text contains no hunks.
    EmptyScript,
    /// No position in the file matches the hunk's anchors and removed lines.
    AnchorNotFound { hunk: usize },
    /// More than one position matches the hunk.
    AmbiguousAnchor { hunk: usize },
    /// Located hunk regions overlap or are out of order.
    OverlappingHunks,
    /// Serialization was asked for identical before and after contents.
    NoChange,
}

impl core::fmt::Display for ScriptError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ScriptError::Syntax { line } => {
                write!(f, "malformed edit script at line {line}")
            }
            ScriptError::EmptyScript => write!(f, "edit script contains no hunks"),
            ScriptError::AnchorNotFound { hunk } => {
                write!(f, "no file position matches hunk {hunk}")
            }
            ScriptError::AmbiguousAnchor { hunk } => {
                write!(f, "multiple file positions match hunk {hunk}")
            }
            ScriptError::OverlappingHunks => {
                write!(f, "hunk regions overlap or are out of order")
            }
            ScriptError::NoChange => write!(f, "before and after contents are identical"),
        }
    }
}

impl core::error::Error for ScriptError {}

impl EditScript {
    /// Renders the canonical text form. Every line carries a marker and the
    /// output ends with a newline; `parse_edit_script` inverts it exactly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for hunk in &self.hunks {
            out.push_str("@@\n");
            push_anchor(&mut out, &hunk.anchor_pre2, BOF_SENTINEL);
            push_anchor(&mut out, &hunk.anchor_pre1, BOF_SENTINEL);
            for line in &hunk.removed {
                out.push_str("- ");
                out.push_str(line);
                out.push('\n');
            }
            for line in &hunk.added {
                out.push_str("+ ");
                out.push_str(line);
                out.push('\n');
            }
            push_anchor(&mut out, &hunk.anchor_post, EOF_SENTINEL);
        }
        out
    }
}

fn push_anchor(out: &mut String, anchor: &Anchor, sentinel: &str) {
    out.push_str("= ");
    match anchor {
        Anchor::Line(text) => out.push_str(text),
        Anchor::Boundary => out.push_str(sentinel),
    }
    out.push('\n');
}

/// Which sentinel an anchor slot admits.
#[derive(Clone, Copy)]
enum Slot {
    Pre,
    Post,
}

/// Parses the frozen text format. Each physical line may end in `\r` to
/// tolerate CRLF transport; payloads themselves are taken verbatim after the
/// two-character marker.
pub fn parse_edit_script(text: &str) -> Result<EditScript, ScriptError> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|line| line.strip_suffix('\r').unwrap_or(line))
        .collect();
    while lines.last().is_some_and(|line| line.is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(ScriptError::EmptyScript);
    }

    let mut hunks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i] != "@@" {
            return Err(ScriptError::Syntax { line: i + 1 });
        }
        i += 1;
        let anchor_pre2 = parse_anchor(&lines, &mut i, Slot::Pre)?;
        let anchor_pre1 = parse_anchor(&lines, &mut i, Slot::Pre)?;
        let mut removed = Vec::new();
        while let Some(payload) = marker_payload(&lines, i, '-') {
            removed.push(payload.to_string());
            i += 1;
        }
        let mut added = Vec::new();
        while let Some(payload) = marker_payload(&lines, i, '+') {
            added.push(payload.to_string());
            i += 1;
        }
        // Canonical order puts every removed line before the added block.
        if marker_payload(&lines, i, '-').is_some() {
            return Err(ScriptError::Syntax { line: i + 1 });
        }
        if removed.is_empty() && added.is_empty() {
            return Err(ScriptError::Syntax { line: i + 1 });
        }
        let anchor_post = parse_anchor(&lines, &mut i, Slot::Post)?;
        hunks.push(Hunk {
            anchor_pre2,
            anchor_pre1,
            anchor_post,
            removed,
            added,
        });
    }
    Ok(EditScript { hunks })
}

/// Returns the payload of the line at `i` when it starts with `marker`.
/// A line holding just the marker is an empty payload, so editors that trim
/// trailing whitespace do not break blank removed or added lines.
fn marker_payload<'a>(lines: &[&'a str], i: usize, marker: char) -> Option<&'a str> {
    let line = *lines.get(i)?;
    let rest = line.strip_prefix(marker)?;
    if rest.is_empty() {
        return Some("");
    }
    rest.strip_prefix(' ')
}

fn parse_anchor(lines: &[&str], i: &mut usize, slot: Slot) -> Result<Anchor, ScriptError> {
    let line = *i + 1;
    let payload = marker_payload(lines, *i, '=').ok_or(ScriptError::Syntax { line })?;
    let anchor = match (payload, slot) {
        (BOF_SENTINEL, Slot::Pre) | (EOF_SENTINEL, Slot::Post) => Anchor::Boundary,
        (BOF_SENTINEL, Slot::Post) | (EOF_SENTINEL, Slot::Pre) => {
            return Err(ScriptError::Syntax { line });
        }
        _ => Anchor::Line(payload.to_string()),
    };
    *i += 1;
    Ok(anchor)
}

/// Finds each hunk's target: the index of the first line of its removed
/// region. A position matches when the two lines before it equal the pre
/// anchors, the removed lines match verbatim, and the line after the region
/// equals the post anchor; boundary anchors match only the file edges. Every
/// hunk must match exactly once, and the located regions must be disjoint
/// and in script order.
pub fn locate_anchors(script: &EditScript, lines: &[&str]) -> Result<Vec<usize>, ScriptError> {
    let mut positions = Vec::with_capacity(script.hunks.len());
    for (hunk_idx, hunk) in script.hunks.iter().enumerate() {
        let mut found = None;
        for start in 0..=lines.len() {
            if hunk_matches_at(hunk, lines, start) {
                if found.is_some() {
                    return Err(ScriptError::AmbiguousAnchor { hunk: hunk_idx });
                }
                found = Some(start);
            }
        }
        positions.push(found.ok_or(ScriptError::AnchorNotFound { hunk: hunk_idx })?);
    }
    for idx in 1..positions.len() {
        let prev_start = positions[idx - 1];
        let prev_end = prev_start + script.hunks[idx - 1].removed.len();
        // Equal start positions would leave the application order of two
        // insertions at one point unspecified, so they are rejected too.
        if positions[idx] < prev_end || positions[idx] <= prev_start {
            return Err(ScriptError::OverlappingHunks);
        }
    }
    Ok(positions)
}

fn anchor_matches(anchor: &Anchor, line: Option<&str>) -> bool {
    match (anchor, line) {
        (Anchor::Boundary, None) => true,
        (Anchor::Line(text), Some(actual)) => text == actual,
        _ => false,
    }
}

fn hunk_matches_at(hunk: &Hunk, lines: &[&str], start: usize) -> bool {
    let len = hunk.removed.len();
    if start + len > lines.len() {
        return false;
    }
    let pre1 = start.checked_sub(1).map(|i| lines[i]);
    let pre2 = start.checked_sub(2).map(|i| lines[i]);
    anchor_matches(&hunk.anchor_pre1, pre1)
        && anchor_matches(&hunk.anchor_pre2, pre2)
        && lines[start..start + len]
            .iter()
            .zip(&hunk.removed)
            .all(|(line, removed)| *line == removed.as_str())
        && anchor_matches(&hunk.anchor_post, lines.get(start + len).copied())
}

/// Applies the script: each hunk's removed region is replaced by its added
/// lines. Hunks are spliced last to first so earlier positions stay valid.
/// All lines outside the removed regions are untouched.
pub fn apply_edit(script: &EditScript, lines: &[&str]) -> Result<Vec<String>, ScriptError> {
    let positions = locate_anchors(script, lines)?;
    let mut out: Vec<String> = lines.iter().map(|line| line.to_string()).collect();
    for (hunk, &start) in script.hunks.iter().zip(&positions).rev() {
        out.splice(start..start + hunk.removed.len(), hunk.added.iter().cloned());
    }
    Ok(out)
}

/// Builds a script that rewrites `before` into `after`: one hunk per changed
/// region of the minimal line diff, anchored on the surrounding unchanged
/// lines. When any hunk would match ambiguously, or an anchor line's text
/// collides with a sentinel payload, the whole script is replaced by a
/// single hunk covering the entire file, which always locates uniquely.
pub fn serialize_edit_script(before: &[&str], after: &[&str]) -> Result<EditScript, ScriptError> {
    if before == after {
        return Err(ScriptError::NoChange);
    }
    let ops = line_diff(before, after);
    let mut hunks = Vec::new();
    for region in change_regions(&ops) {
        hunks.push(Hunk {
            anchor_pre2: pre_anchor(before, region.before_start, 2),
            anchor_pre1: pre_anchor(before, region.before_start, 1),
            anchor_post: if region.before_end < before.len() {
                Anchor::Line(before[region.before_end].to_string())
            } else {
                Anchor::Boundary
            },
            removed: before[region.before_start..region.before_end]
                .iter()
                .map(|line| line.to_string())
                .collect(),
            added: after[region.after_start..region.after_end]
                .iter()
                .map(|line| line.to_string())
                .collect(),
        });
    }
    let script = EditScript { hunks };
    if locate_anchors(&script, before).is_err() || collides_with_sentinel(&script) {
        return Ok(whole_file_script(before, after));
    }
    Ok(script)
}

/// A sentinel payload appearing as a real anchor line would re-parse as a
/// boundary, breaking the render/parse round trip.
fn collides_with_sentinel(script: &EditScript) -> bool {
    script.hunks.iter().any(|hunk| {
        [&hunk.anchor_pre2, &hunk.anchor_pre1, &hunk.anchor_post]
            .into_iter()
            .any(|anchor| {
                matches!(anchor, Anchor::Line(text)
                    if text == BOF_SENTINEL || text == EOF_SENTINEL)
            })
    })
}

fn whole_file_script(before: &[&str], after: &[&str]) -> EditScript {
    EditScript {
        hunks: alloc::vec![Hunk {
            anchor_pre2: Anchor::Boundary,
            anchor_pre1: Anchor::Boundary,
            anchor_post: Anchor::Boundary,
            removed: before.iter().map(|line| line.to_string()).collect(),
            added: after.iter().map(|line| line.to_string()).collect(),
        }],
    }
}

fn pre_anchor(before: &[&str], start: usize, distance: usize) -> Anchor {
    match start.checked_sub(distance) {
        Some(i) => Anchor::Line(before[i].to_string()),
        None => Anchor::Boundary,
    }
}

/// One maximal run of non-unchanged diff ops, as half-open index ranges into
/// the before and after files. A pure insertion has an empty before range
/// positioned at the line the insertion precedes.
struct ChangeRegion {
    before_start: usize,
    before_end: usize,
    after_start: usize,
    after_end: usize,
}

fn change_regions(ops: &[LineOp]) -> Vec<ChangeRegion> {
    let mut regions: Vec<ChangeRegion> = Vec::new();
    // Index of the next before line once all prior ops are consumed; a run
    // opening here starts its removed region at this line.
    let mut next_before = 0;
    let mut next_after = 0;
    let mut open = false;
    for op in ops {
        match *op {
            LineOp::Unchanged(before, after) => {
                next_before = before + 1;
                next_after = after + 1;
                open = false;
            }
            LineOp::Removed(before) => {
                if !open {
                    regions.push(ChangeRegion {
                        before_start: next_before,
                        before_end: next_before,
                        after_start: next_after,
                        after_end: next_after,
                    });
                    open = true;
                }
                let region = regions.last_mut().expect("a region is open");
                region.before_end = before + 1;
                next_before = before + 1;
            }
            LineOp::Added(after) => {
                if !open {
                    regions.push(ChangeRegion {
                        before_start: next_before,
                        before_end: next_before,
                        after_start: next_after,
                        after_end: next_after,
                    });
                    open = true;
                }
                let region = regions.last_mut().expect("a region is open");
                region.after_end = after + 1;
                next_after = after + 1;
            }
        }
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn owned(lines: &[&str]) -> Vec<String> {
        lines.iter().map(|line| line.to_string()).collect()
    }

    const SINGLE_HUNK: &str = "@@\n\
                               = fn main() {\n\
                               =     let total = compute();\n\
                               -     let x = abc;\n\
                               +     let x = num1;\n\
                               = }\n";

    #[test]
    fn parses_a_single_hunk() {
        let script = parse_edit_script(SINGLE_HUNK).unwrap();
        assert_eq!(script.hunks.len(), 1);
        let hunk = &script.hunks[0];
        assert_eq!(hunk.anchor_pre2, Anchor::Line("fn main() {".into()));
        assert_eq!(
            hunk.anchor_pre1,
            Anchor::Line("    let total = compute();".into())
        );
        assert_eq!(hunk.anchor_post, Anchor::Line("}".into()));
        assert_eq!(hunk.removed, owned(&["    let x = abc;"]));
        assert_eq!(hunk.added, owned(&["    let x = num1;"]));
    }

    #[test]
    fn missing_anchor_marker_is_a_syntax_error() {
        // The post anchor line is dropped entirely.
        let text = "@@\n= a\n= b\n- c\n+ d\n";
        assert_eq!(
            parse_edit_script(text),
            Err(ScriptError::Syntax { line: 6 })
        );
    }

    #[test]
    fn rejects_removed_after_added() {
        let text = "@@\n= a\n= b\n+ c\n- d\n= e\n";
        assert_eq!(
            parse_edit_script(text),
            Err(ScriptError::Syntax { line: 5 })
        );
    }

    #[test]
    fn rejects_hunk_without_changes() {
        let text = "@@\n= a\n= b\n= c\n";
        assert_eq!(
            parse_edit_script(text),
            Err(ScriptError::Syntax { line: 4 })
        );
    }

    #[test]
    fn rejects_misplaced_sentinels() {
        let pre_eof = "@@\n= <EOF>\n= b\n+ c\n= d\n";
        assert_eq!(
            parse_edit_script(pre_eof),
            Err(ScriptError::Syntax { line: 2 })
        );
        let post_bof = "@@\n= a\n= b\n+ c\n= <BOF>\n";
        assert_eq!(
            parse_edit_script(post_bof),
            Err(ScriptError::Syntax { line: 5 })
        );
    }

    #[test]
    fn empty_text_is_empty_script() {
        assert_eq!(parse_edit_script(""), Err(ScriptError::EmptyScript));
        assert_eq!(parse_edit_script("\n\n"), Err(ScriptError::EmptyScript));
    }

    #[test]
    fn tolerates_crlf_and_stripped_blank_markers() {
        let text = "@@\r\n= a\r\n= b\r\n-\r\n+ x\r\n= c\r\n";
        let script = parse_edit_script(text).unwrap();
        assert_eq!(script.hunks[0].removed, owned(&[""]));
        assert_eq!(script.hunks[0].added, owned(&["x"]));
    }

    #[test]
    fn render_and_parse_are_inverses() {
        let before = ["a", "b", "c", "d", "e", "f"];
        let after = ["a", "B", "c", "d", "E2", "f"];
        let script = serialize_edit_script(&before, &after).unwrap();
        assert_eq!(script.hunks.len(), 2);
        let reparsed = parse_edit_script(&script.render()).unwrap();
        assert_eq!(reparsed, script);
    }

    #[test]
    fn blank_payload_lines_round_trip() {
        let hunk = Hunk {
            anchor_pre2: Anchor::Boundary,
            anchor_pre1: Anchor::Line("a".into()),
            anchor_post: Anchor::Boundary,
            removed: vec!["".to_string()],
            added: vec![" ".to_string()],
        };
        let script = EditScript { hunks: vec![hunk] };
        assert_eq!(parse_edit_script(&script.render()).unwrap(), script);
    }

    #[test]
    fn locates_a_unique_match() {
        let lines = ["a", "b", "c", "d", "e"];
        let script = parse_edit_script("@@\n= a\n= b\n- c\n+ x\n= d\n").unwrap();
        assert_eq!(locate_anchors(&script, &lines).unwrap(), vec![2]);
    }

    #[test]
    fn duplicate_region_is_ambiguous() {
        // The same anchored neighborhood appears at lines 2 and 6.
        let lines = ["a", "b", "c", "d", "x", "a", "b", "c", "d"];
        let script = parse_edit_script("@@\n= a\n= b\n- c\n+ y\n= d\n").unwrap();
        assert_eq!(
            locate_anchors(&script, &lines),
            Err(ScriptError::AmbiguousAnchor { hunk: 0 })
        );

        // An exhaustive scan agrees that exactly two positions match.
        let hunk = &script.hunks[0];
        let matches = (0..=lines.len())
            .filter(|&start| hunk_matches_at(hunk, &lines, start))
            .count();
        assert_eq!(matches, 2);
    }

    #[test]
    fn absent_anchors_are_not_found() {
        let lines = ["a", "b", "c"];
        let script = parse_edit_script("@@\n= p\n= q\n- r\n+ s\n= t\n").unwrap();
        assert_eq!(
            locate_anchors(&script, &lines),
            Err(ScriptError::AnchorNotFound { hunk: 0 })
        );
    }

    #[test]
    fn overlapping_regions_are_rejected() {
        let lines = ["a", "b", "c", "d"];
        let text = "@@\n= <BOF>\n= a\n- b\n- c\n+ x\n= d\n\
                    @@\n= a\n= b\n- c\n- d\n+ y\n= <EOF>\n";
        let script = parse_edit_script(text).unwrap();
        assert_eq!(
            locate_anchors(&script, &lines),
            Err(ScriptError::OverlappingHunks)
        );
    }

    #[test]
    fn out_of_order_hunks_are_rejected() {
        let lines = ["a", "b", "c", "d", "e", "f"];
        // The second hunk targets an earlier region than the first.
        let text = "@@\n= c\n= d\n- e\n+ y\n= f\n\
                    @@\n= <BOF>\n= a\n- b\n+ x\n= c\n";
        let script = parse_edit_script(text).unwrap();
        assert_eq!(
            locate_anchors(&script, &lines),
            Err(ScriptError::OverlappingHunks)
        );
    }

    #[test]
    fn applies_a_single_line_substitution() {
        let before = ["fn main() {", "    let x = abc;", "}"];
        let script = parse_edit_script(
            "@@\n= <BOF>\n= fn main() {\n-     let x = abc;\n+     let x = num1;\n= }\n",
        )
        .unwrap();
        let after = apply_edit(&script, &before).unwrap();
        assert_eq!(after, owned(&["fn main() {", "    let x = num1;", "}"]));
    }

    #[test]
    fn applies_a_pure_insertion_after_its_anchor() {
        let before = ["a", "b", "c"];
        let script = parse_edit_script("@@\n= a\n= b\n+ inserted\n= c\n").unwrap();
        let after = apply_edit(&script, &before).unwrap();
        assert_eq!(after, owned(&["a", "b", "inserted", "c"]));
    }

    #[test]
    fn serializes_a_mid_file_change_with_real_anchors() {
        let before = ["a", "b", "c", "d", "e"];
        let after = ["a", "b", "C", "d", "e"];
        let script = serialize_edit_script(&before, &after).unwrap();
        assert_eq!(script.hunks.len(), 1);
        let hunk = &script.hunks[0];
        assert_eq!(hunk.anchor_pre2, Anchor::Line("a".into()));
        assert_eq!(hunk.anchor_pre1, Anchor::Line("b".into()));
        assert_eq!(hunk.anchor_post, Anchor::Line("d".into()));
        assert_eq!(apply_edit(&script, &before).unwrap(), owned(&after));
    }

    #[test]
    fn serializes_a_first_line_change_with_begin_sentinels() {
        let before = ["a", "b", "c"];
        let after = ["A", "b", "c"];
        let script = serialize_edit_script(&before, &after).unwrap();
        let hunk = &script.hunks[0];
        assert_eq!(hunk.anchor_pre2, Anchor::Boundary);
        assert_eq!(hunk.anchor_pre1, Anchor::Boundary);
        assert_eq!(hunk.anchor_post, Anchor::Line("b".into()));
        assert_eq!(apply_edit(&script, &before).unwrap(), owned(&after));
    }

    #[test]
    fn serializes_a_last_line_change_with_end_sentinel() {
        let before = ["a", "b", "c"];
        let after = ["a", "b", "C"];
        let script = serialize_edit_script(&before, &after).unwrap();
        let hunk = &script.hunks[0];
        assert_eq!(hunk.anchor_post, Anchor::Boundary);
        assert_eq!(apply_edit(&script, &before).unwrap(), owned(&after));
    }

    #[test]
    fn grows_a_file_from_empty() {
        let before: [&str; 0] = [];
        let after = ["a", "b"];
        let script = serialize_edit_script(&before, &after).unwrap();
        assert_eq!(apply_edit(&script, &before).unwrap(), owned(&after));
    }

    #[test]
    fn identical_contents_are_no_change() {
        let lines = ["a", "b"];
        assert_eq!(
            serialize_edit_script(&lines, &lines),
            Err(ScriptError::NoChange)
        );
    }

    #[test]
    fn ambiguous_anchors_fail_over_to_a_whole_file_hunk() {
        // The changed line sits deep inside one of two identical blocks, so
        // all three anchors and the removed line match both copies.
        let before = ["p", "a", "b", "c", "q", "p", "a", "b", "c", "q"];
        let after = ["p", "a", "x", "c", "q", "p", "a", "b", "c", "q"];
        let script = serialize_edit_script(&before, &after).unwrap();
        assert_eq!(script.hunks.len(), 1);
        let hunk = &script.hunks[0];
        assert_eq!(hunk.anchor_pre1, Anchor::Boundary);
        assert_eq!(hunk.anchor_post, Anchor::Boundary);
        assert_eq!(hunk.removed, owned(&before));
        assert_eq!(apply_edit(&script, &before).unwrap(), owned(&after));
    }

    #[test]
    fn sentinel_collision_fails_over_to_a_whole_file_hunk() {
        // The line before the change is literally the begin sentinel text.
        let before = ["<BOF>", "x", "y"];
        let after = ["<BOF>", "z", "y"];
        let script = serialize_edit_script(&before, &after).unwrap();
        assert_eq!(script.hunks.len(), 1);
        assert_eq!(script.hunks[0].anchor_pre1, Anchor::Boundary);
        assert_eq!(apply_edit(&script, &before).unwrap(), owned(&after));
        // The fallback still round-trips through text.
        let reparsed = parse_edit_script(&script.render()).unwrap();
        assert_eq!(reparsed, script);
    }

    #[test]
    fn round_trips_randomized_small_files() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pool = ["alpha", "beta", "gamma", "delta", "", "alpha"];
        for _ in 0..200 {
            let before: Vec<&str> = (0..rng.gen_range(0..12))
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            let after: Vec<&str> = (0..rng.gen_range(0..12))
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            if before == after {
                continue;
            }
            let script = serialize_edit_script(&before, &after).unwrap();
            let applied = apply_edit(&script, &before)
                .unwrap_or_else(|e| panic!("apply failed: {e} on {before:?} -> {after:?}"));
            assert_eq!(applied, owned(&after), "script:\n{}", script.render());
            let reparsed = parse_edit_script(&script.render())
                .unwrap_or_else(|e| panic!("reparse failed: {e}\n{}", script.render()));
            assert_eq!(reparsed, script);
        }
    }
}

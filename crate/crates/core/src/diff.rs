//! Minimal line diffs with move detection and word-level change rendering.
//!
//! [`line_diff`] computes a shortest edit script over lines (the decoration
//! count always equals `len(before) + len(after) - 2 * LCS`). On top of it,
//! [`detect_moves`] pairs lines that were deleted in one place and inserted
//! verbatim elsewhere, and [`render_diff`] produces the decorated line list
//! a reviewer sees: unchanged context, added and removed lines, relocated
//! lines tagged as moves, and one-line replacements fused into a single
//! modified line with the differing words highlighted.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::context::word_boundary;
use crate::session::Span;

/// One step of a line edit script. Indices refer to the before file for
/// removed lines, the after file for added lines, and both for unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineOp {
    Unchanged(usize, usize),
    Removed(usize),
    Added(usize),
}

/// A removed line and an added line with identical trimmed content,
/// reclassified as one relocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MovedPair {
    pub before_line: usize,
    pub after_line: usize,
}

/// Decoration attached to one rendered line. Moved tags carry the index of
/// their partner pair, so each moved_from references exactly one moved_to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTag {
    Unchanged,
    Added,
    Removed,
    /// A one-line replacement fused from one removed and one added line; the
    /// rendered text is the after line.
    Modified,
    MovedFrom { pair: usize },
    MovedTo { pair: usize },
}

/// One output line of a rendered diff. `highlights` is non-empty only for
/// modified lines, where it spans the characters of the after-line words
/// that are not part of the word-level common subsequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedLine {
    pub text: String,
    pub tag: LineTag,
    pub highlights: Vec<Span>,
}

/// The full decorated rendering of a before/after comparison.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RenderedDiff {
    pub decorated_lines: Vec<DecoratedLine>,
}

impl RenderedDiff {
    /// Counts edit decorations. A modified line counts twice because it
    /// fuses one removal and one addition; moved lines count once each, so
    /// the total always equals the minimal-diff decoration bound.
    pub fn decoration_count(&self) -> usize {
        self.decorated_lines
            .iter()
            .map(|line| match line.tag {
                LineTag::Unchanged => 0,
                LineTag::Modified => 2,
                _ => 1,
            })
            .sum()
    }
}

/// Computes a shortest line edit script between `before` and `after`.
/// Equal lines are interned to integer ids, then diffed with the
/// divide-and-conquer middle-snake search, so memory stays linear in the
/// input length.
pub fn line_diff(before: &[&str], after: &[&str]) -> Vec<LineOp> {
    let mut table = BTreeMap::new();
    let a: Vec<u32> = before.iter().map(|l| intern(&mut table, l)).collect();
    let b: Vec<u32> = after.iter().map(|l| intern(&mut table, l)).collect();
    diff_ids(&a, &b)
}

fn intern<'a>(table: &mut BTreeMap<&'a str, u32>, text: &'a str) -> u32 {
    let next = table.len() as u32;
    *table.entry(text).or_insert(next)
}

fn diff_ids(a: &[u32], b: &[u32]) -> Vec<LineOp> {
    let mut ops = Vec::new();
    let max_d = (a.len() + b.len() + 1) / 2 + 1;
    let mut forward = Furthest::new(max_d);
    let mut backward = Furthest::new(max_d);
    conquer(a, b, 0, 0, &mut forward, &mut backward, &mut ops);
    normalize_runs(&mut ops);
    ops
}

/// Reorders each maximal run of non-unchanged ops so removals come before
/// additions; the search can emit them interleaved depending on which
/// frontier met first, but a rendered diff lists what went away first.
/// Index order within each kind is preserved.
fn normalize_runs(ops: &mut [LineOp]) {
    let mut i = 0;
    while i < ops.len() {
        if matches!(ops[i], LineOp::Unchanged(..)) {
            i += 1;
            continue;
        }
        let start = i;
        while i < ops.len() && !matches!(ops[i], LineOp::Unchanged(..)) {
            i += 1;
        }
        ops[start..i].sort_by_key(|op| matches!(op, LineOp::Added(_)));
    }
}

/// Furthest-reaching x coordinate per diagonal k, where k may be negative.
struct Furthest {
    offset: isize,
    slots: Vec<usize>,
}

impl Furthest {
    fn new(max_d: usize) -> Self {
        Furthest {
            offset: max_d as isize,
            slots: vec![0; 2 * max_d + 2],
        }
    }

    fn get(&self, k: isize) -> usize {
        self.slots[(k + self.offset) as usize]
    }

    fn set(&mut self, k: isize, x: usize) {
        self.slots[(k + self.offset) as usize] = x;
    }
}

fn conquer(
    a: &[u32],
    b: &[u32],
    a_origin: usize,
    b_origin: usize,
    forward: &mut Furthest,
    backward: &mut Furthest,
    out: &mut Vec<LineOp>,
) {
    let prefix = common_prefix(a, b);
    for i in 0..prefix {
        out.push(LineOp::Unchanged(a_origin + i, b_origin + i));
    }
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let (a_origin, b_origin) = (a_origin + prefix, b_origin + prefix);
    let suffix = common_suffix(a, b);
    let a_mid = &a[..a.len() - suffix];
    let b_mid = &b[..b.len() - suffix];

    if a_mid.is_empty() {
        for j in 0..b_mid.len() {
            out.push(LineOp::Added(b_origin + j));
        }
    } else if b_mid.is_empty() {
        for i in 0..a_mid.len() {
            out.push(LineOp::Removed(a_origin + i));
        }
    } else {
        let (split_a, split_b) = middle_snake_start(a_mid, b_mid, forward, backward);
        conquer(
            &a_mid[..split_a],
            &b_mid[..split_b],
            a_origin,
            b_origin,
            forward,
            backward,
            out,
        );
        conquer(
            &a_mid[split_a..],
            &b_mid[split_b..],
            a_origin + split_a,
            b_origin + split_b,
            forward,
            backward,
            out,
        );
    }

    for i in 0..suffix {
        out.push(LineOp::Unchanged(
            a_origin + a.len() - suffix + i,
            b_origin + b.len() - suffix + i,
        ));
    }
}

fn common_prefix(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn common_suffix(a: &[u32], b: &[u32]) -> usize {
    a.iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count()
}

/// Finds the start of the middle snake of an optimal path by running the
/// furthest-reaching search from both corners until the frontiers overlap.
/// Inputs must be non-empty with no common prefix or suffix, which
/// guarantees the returned split strictly reduces at least one side.
fn middle_snake_start(
    a: &[u32],
    b: &[u32],
    forward: &mut Furthest,
    backward: &mut Furthest,
) -> (usize, usize) {
    let n = a.len();
    let m = b.len();
    let delta = n as isize - m as isize;
    let odd = (delta & 1) != 0;
    forward.set(1, 0);
    backward.set(1, 0);
    let d_max = ((n + m + 1) / 2 + 1) as isize;

    for d in 0..d_max {
        let mut k = d;
        while k >= -d {
            let mut x = if k == -d || (k != d && forward.get(k - 1) < forward.get(k + 1)) {
                forward.get(k + 1)
            } else {
                forward.get(k - 1) + 1
            };
            let mut y = (x as isize - k) as usize;
            let (snake_x, snake_y) = (x, y);
            while x < n && y < m && a[x] == b[y] {
                x += 1;
                y += 1;
            }
            forward.set(k, x);
            // The frontiers can only meet on a shared diagonal, which exists
            // for the forward pass one step early exactly when delta is odd.
            if odd && (k - delta).abs() <= d - 1 && forward.get(k) + backward.get(delta - k) >= n {
                return (snake_x, snake_y);
            }
            k -= 2;
        }

        let mut k = d;
        while k >= -d {
            let mut x = if k == -d || (k != d && backward.get(k - 1) < backward.get(k + 1)) {
                backward.get(k + 1)
            } else {
                backward.get(k - 1) + 1
            };
            let mut y = (x as isize - k) as usize;
            // Backward coordinates count from the bottom-right corner.
            while x < n && y < m && a[n - 1 - x] == b[m - 1 - y] {
                x += 1;
                y += 1;
            }
            backward.set(k, x);
            if !odd && (k - delta).abs() <= d && backward.get(k) + forward.get(delta - k) >= n {
                return (n - x, m - y);
            }
            k -= 2;
        }
    }
    unreachable!("the frontiers of a finite edit graph always meet");
}

/// A line qualifies for move pairing only when it has enough substance for
/// relocation to be meaningful: at least 3 non-whitespace characters, which
/// also rules out blank lines and lone braces.
fn movable(line: &str) -> bool {
    line.chars().filter(|c| !c.is_whitespace()).count() >= 3
}

fn move_match(removed: &str, added: &str) -> bool {
    movable(removed) && movable(added) && removed.trim_end() == added.trim_end()
}

/// Pairs removed lines with added lines of identical content (ignoring
/// trailing whitespace) from one [`line_diff`] result. Runs of consecutive
/// file lines are matched greedily, longest first; ties prefer the earliest
/// source run, then the earliest target. Each line joins at most one pair.
/// Pairs are returned ordered by before-file line.
pub fn detect_moves(ops: &[LineOp], before: &[&str], after: &[&str]) -> Vec<MovedPair> {
    let mut removed: Vec<usize> = Vec::new();
    let mut added: Vec<usize> = Vec::new();
    for op in ops {
        match *op {
            LineOp::Removed(i) => removed.push(i),
            LineOp::Added(j) => added.push(j),
            LineOp::Unchanged(..) => {}
        }
    }
    let mut removed_free: BTreeSet<usize> = removed.into_iter().collect();
    let mut added_free: BTreeSet<usize> = added.into_iter().collect();

    let mut pairs = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for &from in &removed_free {
            for &to in &added_free {
                if !move_match(before[from], after[to]) {
                    continue;
                }
                let mut len = 1;
                while removed_free.contains(&(from + len))
                    && added_free.contains(&(to + len))
                    && move_match(before[from + len], after[to + len])
                {
                    len += 1;
                }
                let better = match best {
                    None => true,
                    Some((best_len, best_from, best_to)) => {
                        (len > best_len)
                            || (len == best_len && from < best_from)
                            || (len == best_len && from == best_from && to < best_to)
                    }
                };
                if better {
                    best = Some((len, from, to));
                }
            }
        }
        let Some((len, from, to)) = best else { break };
        for i in 0..len {
            removed_free.remove(&(from + i));
            added_free.remove(&(to + i));
            pairs.push(MovedPair {
                before_line: from + i,
                after_line: to + i,
            });
        }
    }
    pairs.sort_by_key(|pair| pair.before_line);
    pairs
}

/// Renders the decorated line list for a before/after comparison: the
/// minimal line diff, with relocations retagged as moves and one-for-one
/// line replacements that still share a word fused into modified lines
/// carrying word-level highlight spans.
pub fn render_diff(before: &[&str], after: &[&str]) -> RenderedDiff {
    let ops = line_diff(before, after);
    let moves = detect_moves(&ops, before, after);
    let from_pair: BTreeMap<usize, usize> = moves
        .iter()
        .enumerate()
        .map(|(pair, mv)| (mv.before_line, pair))
        .collect();
    let to_pair: BTreeMap<usize, usize> = moves
        .iter()
        .enumerate()
        .map(|(pair, mv)| (mv.after_line, pair))
        .collect();

    let mut decorated_lines = Vec::with_capacity(ops.len());
    let mut i = 0;
    while i < ops.len() {
        match ops[i] {
            LineOp::Unchanged(bi, _) => {
                decorated_lines.push(DecoratedLine {
                    text: before[bi].to_string(),
                    tag: LineTag::Unchanged,
                    highlights: Vec::new(),
                });
                i += 1;
            }
            LineOp::Removed(bi) => {
                if let Some(&pair) = from_pair.get(&bi) {
                    decorated_lines.push(DecoratedLine {
                        text: before[bi].to_string(),
                        tag: LineTag::MovedFrom { pair },
                        highlights: Vec::new(),
                    });
                    i += 1;
                } else if let Some(ai) = merge_candidate(&ops, i, &from_pair, &to_pair)
                    .filter(|&ai| shares_word(before[bi], after[ai]))
                {
                    decorated_lines.push(DecoratedLine {
                        text: after[ai].to_string(),
                        tag: LineTag::Modified,
                        highlights: changed_word_spans(before[bi], after[ai]),
                    });
                    i += 2;
                } else {
                    decorated_lines.push(DecoratedLine {
                        text: before[bi].to_string(),
                        tag: LineTag::Removed,
                        highlights: Vec::new(),
                    });
                    i += 1;
                }
            }
            LineOp::Added(ai) => {
                let tag = match to_pair.get(&ai) {
                    Some(&pair) => LineTag::MovedTo { pair },
                    None => LineTag::Added,
                };
                decorated_lines.push(DecoratedLine {
                    text: after[ai].to_string(),
                    tag,
                    highlights: Vec::new(),
                });
                i += 1;
            }
        }
    }
    RenderedDiff { decorated_lines }
}

/// A removed op at `i` can fuse with an added op at `i + 1` only when the
/// two of them form an entire change run (one removed line replaced by one
/// added line) and neither side is already claimed by a move pair.
fn merge_candidate(
    ops: &[LineOp],
    i: usize,
    from_pair: &BTreeMap<usize, usize>,
    to_pair: &BTreeMap<usize, usize>,
) -> Option<usize> {
    let LineOp::Added(ai) = *ops.get(i + 1)? else {
        return None;
    };
    let run_starts = i == 0 || matches!(ops[i - 1], LineOp::Unchanged(..));
    let run_ends = i + 2 == ops.len() || matches!(ops[i + 2], LineOp::Unchanged(..));
    if !run_starts || !run_ends || to_pair.contains_key(&ai) {
        return None;
    }
    let LineOp::Removed(bi) = ops[i] else {
        return None;
    };
    if from_pair.contains_key(&bi) {
        return None;
    }
    Some(ai)
}

/// A fused modified line must preserve at least one word; replacing every
/// word reads better as a removal plus an addition, and fusing it would
/// highlight the entire line.
fn shares_word(before_line: &str, after_line: &str) -> bool {
    let words: BTreeSet<String> = tokenize_line(before_line)
        .into_iter()
        .filter(|(_, token)| token.chars().all(char::is_alphanumeric))
        .map(|(_, token)| token)
        .collect();
    tokenize_line(after_line)
        .into_iter()
        .filter(|(_, token)| token.chars().all(char::is_alphanumeric))
        .any(|(_, token)| words.contains(&token))
}

/// Character spans of the after-line tokens that are not part of a longest
/// common token subsequence with the before line. Adjacent spans merge.
fn changed_word_spans(before_line: &str, after_line: &str) -> Vec<Span> {
    let before_tokens = tokenize_line(before_line);
    let after_tokens = tokenize_line(after_line);
    let mut table = BTreeMap::new();
    let a: Vec<u32> = before_tokens
        .iter()
        .map(|(_, t)| intern(&mut table, t))
        .collect();
    let b: Vec<u32> = after_tokens
        .iter()
        .map(|(_, t)| intern(&mut table, t))
        .collect();

    let mut spans: Vec<Span> = Vec::new();
    for op in diff_ids(&a, &b) {
        if let LineOp::Added(j) = op {
            let span = after_tokens[j].0;
            match spans.last_mut() {
                Some(last) if last.end == span.start => last.end = span.end,
                _ => spans.push(span),
            }
        }
    }
    spans
}

/// Splits a line into tokens that tile it completely: identifier words cut
/// at case and digit boundaries with their case preserved, and every other
/// character (punctuation, whitespace) as its own single-character token.
/// Spans are in characters.
fn tokenize_line(line: &str) -> Vec<(Span, String)> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let split = if !chars[i].is_alphanumeric() || !chars[i - 1].is_alphanumeric() {
            true
        } else {
            word_boundary(&chars, i)
        };
        if split {
            tokens.push((Span::new(start, i), chars[start..i].iter().collect()));
            start = i;
        }
    }
    if start < chars.len() {
        tokens.push((
            Span::new(start, chars.len()),
            chars[start..].iter().collect(),
        ));
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent minimality oracle: classic longest-common-subsequence
    /// length by dynamic programming.
    fn lcs_len(a: &[&str], b: &[&str]) -> usize {
        let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                table[i + 1][j + 1] = if a[i] == b[j] {
                    table[i][j] + 1
                } else {
                    table[i][j + 1].max(table[i + 1][j])
                };
            }
        }
        table[a.len()][b.len()]
    }

    fn op_cost(ops: &[LineOp]) -> usize {
        ops.iter()
            .filter(|op| !matches!(op, LineOp::Unchanged(..)))
            .count()
    }

    /// Replaying the ops must reconstruct the after file from the before
    /// file, which proves the script is a valid edit path.
    fn check_ops_rebuild(ops: &[LineOp], before: &[&str], after: &[&str]) {
        let mut rebuilt: Vec<&str> = Vec::new();
        let mut next_before = 0;
        for op in ops {
            match *op {
                LineOp::Unchanged(bi, ai) => {
                    assert_eq!(bi, next_before, "unchanged ops must consume in order");
                    assert_eq!(before[bi], after[ai]);
                    rebuilt.push(after[ai]);
                    next_before += 1;
                }
                LineOp::Removed(bi) => {
                    assert_eq!(bi, next_before);
                    next_before += 1;
                }
                LineOp::Added(ai) => rebuilt.push(after[ai]),
            }
        }
        assert_eq!(next_before, before.len());
        assert_eq!(rebuilt, after);
    }

    #[test]
    fn identical_inputs_are_all_unchanged() {
        let lines = ["a", "b", "c"];
        let ops = line_diff(&lines, &lines);
        assert_eq!(
            ops,
            vec![
                LineOp::Unchanged(0, 0),
                LineOp::Unchanged(1, 1),
                LineOp::Unchanged(2, 2)
            ]
        );
    }

    #[test]
    fn one_insertion_is_one_added_op() {
        let before = ["a", "b"];
        let after = ["a", "x", "b"];
        let ops = line_diff(&before, &after);
        assert_eq!(op_cost(&ops), 1);
        assert!(ops.contains(&LineOp::Added(1)));
        check_ops_rebuild(&ops, &before, &after);
    }

    #[test]
    fn empty_sides_diff_cleanly() {
        let lines = ["a", "b"];
        let empty: [&str; 0] = [];
        assert_eq!(op_cost(&line_diff(&empty, &lines)), 2);
        assert_eq!(op_cost(&line_diff(&lines, &empty)), 2);
        assert_eq!(line_diff(&empty, &empty), Vec::new());
    }

    #[test]
    fn matches_the_lcs_bound_exhaustively_on_short_inputs() {
        // Every pair of sequences up to length 4 over {a, b, c}.
        let symbols = ["a", "b", "c"];
        let mut sequences: Vec<Vec<&str>> = vec![Vec::new()];
        let mut frontier = vec![Vec::new()];
        for _ in 0..4 {
            let mut next = Vec::new();
            for seq in &frontier {
                for s in symbols {
                    let mut longer = seq.clone();
                    longer.push(s);
                    next.push(longer);
                }
            }
            sequences.extend(next.iter().cloned());
            frontier = next;
        }
        for before in &sequences {
            for after in &sequences {
                let ops = line_diff(before, after);
                let bound = before.len() + after.len() - 2 * lcs_len(before, after);
                assert_eq!(
                    op_cost(&ops),
                    bound,
                    "non-minimal diff for {before:?} -> {after:?}"
                );
                check_ops_rebuild(&ops, before, after);
            }
        }
    }

    #[test]
    fn matches_the_lcs_bound_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let symbols = ["x", "y", "z", "w"];
        for _ in 0..300 {
            let before: Vec<&str> = (0..rng.gen_range(0..30))
                .map(|_| symbols[rng.gen_range(0..symbols.len())])
                .collect();
            let after: Vec<&str> = (0..rng.gen_range(0..30))
                .map(|_| symbols[rng.gen_range(0..symbols.len())])
                .collect();
            let ops = line_diff(&before, &after);
            let bound = before.len() + after.len() - 2 * lcs_len(&before, &after);
            assert_eq!(op_cost(&ops), bound);
            check_ops_rebuild(&ops, &before, &after);
        }
    }

    #[test]
    fn relocated_block_yields_move_pairs() {
        let before = ["first();", "second();", "third();", "tail();"];
        let after = ["tail();", "first();", "second();", "third();"];
        let ops = line_diff(&before, &after);
        let moves = detect_moves(&ops, &before, &after);
        // Minimality moves the single "tail();" line, not the 3-line block.
        assert_eq!(
            moves,
            vec![MovedPair {
                before_line: 3,
                after_line: 0
            }]
        );
    }

    #[test]
    fn trivial_lines_never_pair() {
        let before = ["}", "alpha();", "x", ""];
        let after = ["alpha();", "x", "", "}"];
        let ops = line_diff(&before, &after);
        let moves = detect_moves(&ops, &before, &after);
        assert_eq!(moves, Vec::new());
    }

    #[test]
    fn earliest_target_wins_ties() {
        // Both insertion sites carry trailing spaces, so neither equals the
        // removed line exactly (keeping the line diff unambiguous) while
        // both trim-match it as move targets.
        let before = ["moved_line();", "keep_one();", "keep_two();"];
        let after = [
            "keep_one();",
            "moved_line(); ",
            "keep_two();",
            "moved_line();  ",
        ];
        let ops = line_diff(&before, &after);
        let moves = detect_moves(&ops, &before, &after);
        assert_eq!(
            moves,
            vec![MovedPair {
                before_line: 0,
                after_line: 1
            }]
        );
    }

    #[test]
    fn longest_run_wins_before_earlier_position() {
        // A lone trim-matching echo of "pair_a();" appears early, but the
        // full 2-line run later must be preferred despite its later target.
        let before = [
            "pair_a();",
            "pair_b();",
            "keep_one();",
            "keep_two();",
            "keep_three();",
            "keep_four();",
        ];
        let after = [
            "keep_one();",
            "pair_a(); ",
            "keep_two();",
            "keep_three();",
            "keep_four();",
            "pair_a();",
            "pair_b();",
        ];
        let ops = line_diff(&before, &after);
        let moves = detect_moves(&ops, &before, &after);
        assert_eq!(
            moves,
            vec![
                MovedPair {
                    before_line: 0,
                    after_line: 5
                },
                MovedPair {
                    before_line: 1,
                    after_line: 6
                },
            ]
        );
    }

    #[test]
    fn single_word_change_renders_one_modified_line() {
        let before = ["let total = abc;"];
        let after = ["let total = num1;"];
        let diff = render_diff(&before, &after);
        assert_eq!(diff.decorated_lines.len(), 1);
        let line = &diff.decorated_lines[0];
        assert_eq!(line.tag, LineTag::Modified);
        assert_eq!(line.text, "let total = num1;");
        // Exactly the characters of "num1" are highlighted.
        assert_eq!(line.highlights, vec![Span::new(12, 16)]);
    }

    #[test]
    fn replacement_without_shared_words_stays_removed_plus_added() {
        let before = ["alpha", "old_line", "omega"];
        let after = ["alpha", "brand::new!", "omega"];
        let diff = render_diff(&before, &after);
        let tags: Vec<LineTag> = diff.decorated_lines.iter().map(|l| l.tag).collect();
        assert_eq!(
            tags,
            vec![
                LineTag::Unchanged,
                LineTag::Removed,
                LineTag::Added,
                LineTag::Unchanged
            ]
        );
    }

    #[test]
    fn multi_line_replacements_do_not_fuse() {
        let before = ["a", "shared one", "shared two", "z"];
        let after = ["a", "shared one x", "z"];
        let diff = render_diff(&before, &after);
        assert!(diff
            .decorated_lines
            .iter()
            .all(|line| line.tag != LineTag::Modified));
    }

    #[test]
    fn pure_move_renders_only_move_tags() {
        let before = ["block_a();", "block_b();", "block_c();", "rest();"];
        let after = ["rest();", "block_a();", "block_b();", "block_c();"];
        let diff = render_diff(&before, &after);
        for line in &diff.decorated_lines {
            assert!(
                !matches!(line.tag, LineTag::Added | LineTag::Removed),
                "unexpected plain tag on {:?}",
                line
            );
        }
        let froms: Vec<usize> = diff
            .decorated_lines
            .iter()
            .filter_map(|l| match l.tag {
                LineTag::MovedFrom { pair } => Some(pair),
                _ => None,
            })
            .collect();
        let tos: Vec<usize> = diff
            .decorated_lines
            .iter()
            .filter_map(|l| match l.tag {
                LineTag::MovedTo { pair } => Some(pair),
                _ => None,
            })
            .collect();
        assert_eq!(froms.len(), 1);
        assert_eq!(froms, tos);
    }

    #[test]
    fn empty_before_renders_all_added() {
        let before: [&str; 0] = [];
        let after = ["a", "b"];
        let diff = render_diff(&before, &after);
        assert!(diff
            .decorated_lines
            .iter()
            .all(|line| line.tag == LineTag::Added));
        assert_eq!(diff.decoration_count(), 2);
    }

    #[test]
    fn modified_lines_count_two_decorations() {
        let before = ["use abc here;"];
        let after = ["use num1 here;"];
        let diff = render_diff(&before, &after);
        assert_eq!(diff.decorated_lines[0].tag, LineTag::Modified);
        assert_eq!(diff.decoration_count(), 2);
        let bound = 1 + 1 - 2 * lcs_len(&before, &after);
        assert_eq!(diff.decoration_count(), bound);
    }

    #[test]
    fn decoration_count_matches_the_bound_with_moves_and_merges() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let pool = [
            "alpha one",
            "beta two",
            "gamma three",
            "delta",
            "x",
            "alpha one",
        ];
        for _ in 0..300 {
            let before: Vec<&str> = (0..rng.gen_range(0..8))
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            let after: Vec<&str> = (0..rng.gen_range(0..8))
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            let diff = render_diff(&before, &after);
            let bound = before.len() + after.len() - 2 * lcs_len(&before, &after);
            assert_eq!(
                diff.decoration_count(),
                bound,
                "bound mismatch for {before:?} -> {after:?}"
            );
        }
    }

    #[test]
    fn move_conservation_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let pool = ["carry_one();", "carry_two();", "carry_three();", "x", "{"];
        for _ in 0..200 {
            let before: Vec<&str> = (0..rng.gen_range(0..10))
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            let after: Vec<&str> = (0..rng.gen_range(0..10))
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            let ops = line_diff(&before, &after);
            let moves = detect_moves(&ops, &before, &after);
            let mut from_texts: Vec<&str> =
                moves.iter().map(|m| before[m.before_line].trim_end()).collect();
            let mut to_texts: Vec<&str> =
                moves.iter().map(|m| after[m.after_line].trim_end()).collect();
            from_texts.sort_unstable();
            to_texts.sort_unstable();
            assert_eq!(from_texts, to_texts);
        }
    }

    #[test]
    fn tokenizer_tiles_the_line_and_splits_words() {
        let tokens = tokenize_line("ComputeAnnualBalance += x2;");
        let texts: Vec<&str> = tokens.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(
            texts,
            vec!["Compute", "Annual", "Balance", " ", "+", "=", " ", "x", "2", ";"]
        );
        // Spans tile the whole line in order.
        let mut expected_start = 0;
        for (span, text) in &tokens {
            assert_eq!(span.start, expected_start);
            assert_eq!(span.end - span.start, text.chars().count());
            expected_start = span.end;
        }
        assert_eq!(expected_start, "ComputeAnnualBalance += x2;".chars().count());
    }

    #[test]
    fn trailing_whitespace_differences_still_pair_as_moves() {
        let before = ["payload();   ", "k1", "k2"];
        let after = ["k1", "k2", "payload();"];
        let ops = line_diff(&before, &after);
        let moves = detect_moves(&ops, &before, &after);
        assert_eq!(
            moves,
            vec![MovedPair {
                before_line: 0,
                after_line: 2
            }]
        );
    }
}

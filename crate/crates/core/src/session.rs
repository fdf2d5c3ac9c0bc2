//! Per-session document state: open files, cursor tracking, and a
//! recency-ordered edit history consumed by the context packer.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Milliseconds since session start.
pub type TimestampMs = u64;

/// How many coalesced edit records a session keeps before dropping the oldest.
pub const DEFAULT_EDIT_HISTORY: usize = 32;

/// Opaque identifier for a file open in a session.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FileId(String);

impl FileId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for FileId {
    fn from(s: &str) -> Self {
        FileId(String::from(s))
    }
}

impl From<String> for FileId {
    fn from(s: String) -> Self {
        FileId(s)
    }
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Half-open character span `[start, end)` within a file's content.
///
/// All offsets in this crate count characters, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// True when the spans overlap or sit directly against each other.
    pub fn touches(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// True when the spans share at least one position.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn merge(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// A text buffer open in a session, with a cursor and a mutation counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentState {
    file_id: FileId,
    content: String,
    cursor: usize,
    version: u64,
}

impl DocumentState {
    pub fn file_id(&self) -> &FileId {
        &self.file_id
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    /// Cursor position as a character offset into the content.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn char_len(&self) -> usize {
        self.content.chars().count()
    }

    /// Byte offset of the given character offset, for slicing.
    fn byte_at(&self, char_offset: usize) -> usize {
        byte_at(&self.content, char_offset)
    }
}

fn byte_at(s: &str, char_offset: usize) -> usize {
    s.char_indices()
        .nth(char_offset)
        .map(|(b, _)| b)
        .unwrap_or(s.len())
}

/// One editor action, stamped with session-relative time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditorEvent {
    pub file_id: FileId,
    pub timestamp: TimestampMs,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// Insert text at the cursor.
    Insert { text: String },
    /// Delete `count` characters forward from the cursor.
    Delete { count: usize },
    /// Move the cursor to an absolute character offset.
    CursorMove { offset: usize },
    /// Paste text at the cursor. With `full_file` set the paste replaces the
    /// entire buffer instead (the flag is supplied by the client).
    Paste { text: String, full_file: bool },
    FileOpen { content: String },
    FileClose,
}

/// A contiguous region touched by recent edits. Records whose ranges touch
/// or overlap are coalesced into one, keeping the latest timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditRecord {
    pub file_id: FileId,
    pub range: Span,
    pub last_touched: TimestampMs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionError {
    /// The event targets a file that is not open.
    UnknownFile,
    /// A delete or cursor move reaches past the end of the content.
    OutOfBounds,
}

impl fmt::Display for SessionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionError::UnknownFile => f.write_str("event targets a file that is not open"),
            SessionError::OutOfBounds => f.write_str("offset or count reaches past end of content"),
        }
    }
}

impl core::error::Error for SessionError {}

/// All document and edit-history state for one editing session.
///
/// Events are applied strictly in order (single writer); distinct sessions
/// are independent.
#[derive(Debug, Clone)]
pub struct Session {
    files: BTreeMap<FileId, DocumentState>,
    edits: Vec<EditRecord>,
    focused: Option<FileId>,
    edit_history: usize,
}

impl Default for Session {
    fn default() -> Self {
        Session::new(DEFAULT_EDIT_HISTORY)
    }
}

impl Session {
    pub fn new(edit_history: usize) -> Self {
        Session {
            files: BTreeMap::new(),
            edits: Vec::new(),
            focused: None,
            edit_history,
        }
    }

    pub fn document(&self, file_id: &FileId) -> Option<&DocumentState> {
        self.files.get(file_id)
    }

    /// Open documents in file-id order.
    pub fn open_files(&self) -> impl Iterator<Item = &DocumentState> {
        self.files.values()
    }

    /// The file the last event targeted, if it is still open.
    pub fn focused_file(&self) -> Option<&FileId> {
        self.focused.as_ref()
    }

    pub fn apply_event(&mut self, event: &EditorEvent) -> Result<(), SessionError> {
        let file_id = &event.file_id;
        match &event.kind {
            EventKind::FileOpen { content } => {
                let version = self.files.get(file_id).map(|d| d.version).unwrap_or(0) + 1;
                self.files.insert(
                    file_id.clone(),
                    DocumentState {
                        file_id: file_id.clone(),
                        content: content.clone(),
                        cursor: 0,
                        version,
                    },
                );
                self.edits.retain(|r| &r.file_id != file_id);
            }
            EventKind::FileClose => {
                self.files.remove(file_id).ok_or(SessionError::UnknownFile)?;
                self.edits.retain(|r| &r.file_id != file_id);
                if self.focused.as_ref() == Some(file_id) {
                    self.focused = None;
                }
                return Ok(());
            }
            EventKind::Insert { text } => {
                let touched = self.insert_at_cursor(file_id, text)?;
                self.push_record(file_id, touched, event.timestamp);
            }
            EventKind::Delete { count } => {
                let doc = self.files.get_mut(file_id).ok_or(SessionError::UnknownFile)?;
                if doc.cursor + count > doc.char_len() {
                    return Err(SessionError::OutOfBounds);
                }
                let start = doc.byte_at(doc.cursor);
                let end = doc.byte_at(doc.cursor + count);
                doc.content.replace_range(start..end, "");
                doc.version += 1;
                let at = doc.cursor;
                self.remap_after_delete(file_id, at, *count);
                self.push_record(file_id, Span::new(at, at), event.timestamp);
            }
            EventKind::CursorMove { offset } => {
                let doc = self.files.get_mut(file_id).ok_or(SessionError::UnknownFile)?;
                if *offset > doc.char_len() {
                    return Err(SessionError::OutOfBounds);
                }
                doc.cursor = *offset;
                doc.version += 1;
            }
            EventKind::Paste { text, full_file } => {
                let touched = if *full_file {
                    let doc = self.files.get_mut(file_id).ok_or(SessionError::UnknownFile)?;
                    doc.content = text.clone();
                    doc.cursor = doc.char_len();
                    doc.version += 1;
                    self.edits.retain(|r| &r.file_id != file_id);
                    Span::new(0, text.chars().count())
                } else {
                    self.insert_at_cursor(file_id, text)?
                };
                self.push_record(file_id, touched, event.timestamp);
            }
        }
        self.focused = Some(file_id.clone());
        Ok(())
    }

    /// Edit records ordered by last_touched descending; ties by file id then
    /// range start.
    pub fn recent_edits(&self) -> Vec<EditRecord> {
        let mut out = self.edits.clone();
        sort_recent(&mut out);
        out
    }

    fn insert_at_cursor(&mut self, file_id: &FileId, text: &str) -> Result<Span, SessionError> {
        let doc = self.files.get_mut(file_id).ok_or(SessionError::UnknownFile)?;
        let at = doc.cursor;
        let byte = doc.byte_at(at);
        doc.content.insert_str(byte, text);
        let len = text.chars().count();
        doc.cursor = at + len;
        doc.version += 1;
        self.remap_after_insert(file_id, at, len);
        Ok(Span::new(at, at + len))
    }

    fn remap_after_insert(&mut self, file_id: &FileId, at: usize, len: usize) {
        for r in self.edits.iter_mut().filter(|r| &r.file_id == file_id) {
            if r.range.start >= at {
                r.range.start += len;
                r.range.end += len;
            } else if r.range.end > at {
                r.range.end += len;
            }
        }
    }

    fn remap_after_delete(&mut self, file_id: &FileId, at: usize, count: usize) {
        let shift = |pos: usize| {
            if pos <= at {
                pos
            } else {
                at.max(pos.saturating_sub(count))
            }
        };
        for r in self.edits.iter_mut().filter(|r| &r.file_id == file_id) {
            r.range.start = shift(r.range.start);
            r.range.end = shift(r.range.end);
        }
    }

    fn push_record(&mut self, file_id: &FileId, mut range: Span, now: TimestampMs) {
        let mut latest = now;
        // Existing records are pairwise non-touching, so one sweep collects
        // everything the new range bridges.
        let mut i = 0;
        while i < self.edits.len() {
            let r = &self.edits[i];
            if &r.file_id == file_id && r.range.touches(&range) {
                range = range.merge(&r.range);
                latest = latest.max(r.last_touched);
                self.edits.swap_remove(i);
            } else {
                i += 1;
            }
        }
        self.edits.push(EditRecord {
            file_id: file_id.clone(),
            range,
            last_touched: latest,
        });
        if self.edits.len() > self.edit_history {
            sort_recent(&mut self.edits);
            self.edits.truncate(self.edit_history);
        }
    }
}

fn sort_recent(records: &mut [EditRecord]) {
    records.sort_by(|a, b| {
        b.last_touched
            .cmp(&a.last_touched)
            .then_with(|| a.file_id.cmp(&b.file_id))
            .then_with(|| a.range.start.cmp(&b.range.start))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(session: &mut Session, file: &str, content: &str, ts: TimestampMs) {
        session
            .apply_event(&EditorEvent {
                file_id: file.into(),
                timestamp: ts,
                kind: EventKind::FileOpen { content: content.into() },
            })
            .unwrap();
    }

    fn insert(session: &mut Session, file: &str, text: &str, ts: TimestampMs) {
        session
            .apply_event(&EditorEvent {
                file_id: file.into(),
                timestamp: ts,
                kind: EventKind::Insert { text: text.into() },
            })
            .unwrap();
    }

    fn cursor_move(session: &mut Session, file: &str, offset: usize, ts: TimestampMs) {
        session
            .apply_event(&EditorEvent {
                file_id: file.into(),
                timestamp: ts,
                kind: EventKind::CursorMove { offset },
            })
            .unwrap();
    }

    #[test]
    fn insert_at_cursor_updates_content_and_records() {
        let mut s = Session::default();
        open(&mut s, "a", "ab", 0);
        cursor_move(&mut s, "a", 2, 1);
        insert(&mut s, "a", "c", 2);
        let doc = s.document(&"a".into()).unwrap();
        assert_eq!(doc.content(), "abc");
        assert_eq!(doc.cursor(), 3);
        let edits = s.recent_edits();
        assert_eq!(edits.len(), 1);
        assert_eq!(edits[0].range, Span::new(2, 3));
    }

    #[test]
    fn adjacent_inserts_coalesce_into_one_record() {
        let mut s = Session::default();
        open(&mut s, "a", "", 0);
        insert(&mut s, "a", "x", 1);
        insert(&mut s, "a", "y", 2);
        let edits = s.recent_edits();
        assert_eq!(edits.len(), 1);
        assert_eq!(edits[0].range, Span::new(0, 2));
        assert_eq!(edits[0].last_touched, 2);
    }

    #[test]
    fn delete_past_end_is_out_of_bounds() {
        let mut s = Session::default();
        open(&mut s, "a", "abc", 0);
        let err = s
            .apply_event(&EditorEvent {
                file_id: "a".into(),
                timestamp: 1,
                kind: EventKind::Delete { count: 5 },
            })
            .unwrap_err();
        assert_eq!(err, SessionError::OutOfBounds);
    }

    #[test]
    fn cursor_move_past_end_is_out_of_bounds() {
        let mut s = Session::default();
        open(&mut s, "a", "abc", 0);
        let err = s
            .apply_event(&EditorEvent {
                file_id: "a".into(),
                timestamp: 1,
                kind: EventKind::CursorMove { offset: 4 },
            })
            .unwrap_err();
        assert_eq!(err, SessionError::OutOfBounds);
    }

    #[test]
    fn events_for_unopened_files_are_rejected() {
        let mut s = Session::default();
        let err = s
            .apply_event(&EditorEvent {
                file_id: "ghost".into(),
                timestamp: 0,
                kind: EventKind::Insert { text: "x".into() },
            })
            .unwrap_err();
        assert_eq!(err, SessionError::UnknownFile);
    }

    #[test]
    fn recent_edits_order_by_recency_then_file() {
        let mut s = Session::default();
        open(&mut s, "a", "", 0);
        open(&mut s, "b", "", 0);
        insert(&mut s, "a", "x", 10);
        insert(&mut s, "b", "y", 20);
        let edits = s.recent_edits();
        assert_eq!(edits[0].file_id, "b".into());
        assert_eq!(edits[1].file_id, "a".into());
    }

    #[test]
    fn equal_timestamps_tie_break_by_file_id() {
        let mut s = Session::default();
        open(&mut s, "b", "", 0);
        open(&mut s, "a", "", 0);
        insert(&mut s, "b", "y", 5);
        insert(&mut s, "a", "x", 5);
        let edits = s.recent_edits();
        assert_eq!(edits[0].file_id, "a".into());
        assert_eq!(edits[1].file_id, "b".into());
    }

    #[test]
    fn no_edits_yields_empty_history() {
        let s = Session::default();
        assert!(s.recent_edits().is_empty());
    }

    #[test]
    fn earlier_insert_shifts_later_records() {
        let mut s = Session::default();
        open(&mut s, "a", "abcdef", 0);
        cursor_move(&mut s, "a", 4, 1);
        insert(&mut s, "a", "XY", 2);
        cursor_move(&mut s, "a", 0, 3);
        insert(&mut s, "a", "ZZZ", 4);
        let edits = s.recent_edits();
        assert_eq!(edits.len(), 2);
        assert_eq!(edits[0].range, Span::new(0, 3));
        // The record at 4..6 moved right by the three inserted characters.
        assert_eq!(edits[1].range, Span::new(7, 9));
    }

    #[test]
    fn delete_collapses_records_inside_the_removed_region() {
        let mut s = Session::default();
        open(&mut s, "a", "abcdef", 0);
        cursor_move(&mut s, "a", 4, 1);
        insert(&mut s, "a", "XY", 2); // record 4..6
        cursor_move(&mut s, "a", 3, 3);
        s.apply_event(&EditorEvent {
            file_id: "a".into(),
            timestamp: 4,
            kind: EventKind::Delete { count: 4 },
        })
        .unwrap();
        let edits = s.recent_edits();
        // The deletion swallowed the old record; both collapse to the cut point.
        assert_eq!(edits.len(), 1);
        assert_eq!(edits[0].range, Span::new(3, 3));
        assert_eq!(edits[0].last_touched, 4);
    }

    #[test]
    fn full_file_paste_replaces_buffer_and_history() {
        let mut s = Session::default();
        open(&mut s, "a", "old", 0);
        insert(&mut s, "a", "x", 1);
        s.apply_event(&EditorEvent {
            file_id: "a".into(),
            timestamp: 2,
            kind: EventKind::Paste { text: "brand new".into(), full_file: true },
        })
        .unwrap();
        let doc = s.document(&"a".into()).unwrap();
        assert_eq!(doc.content(), "brand new");
        assert_eq!(doc.cursor(), 9);
        let edits = s.recent_edits();
        assert_eq!(edits.len(), 1);
        assert_eq!(edits[0].range, Span::new(0, 9));
    }

    #[test]
    fn closing_a_file_drops_its_records() {
        let mut s = Session::default();
        open(&mut s, "a", "", 0);
        insert(&mut s, "a", "x", 1);
        s.apply_event(&EditorEvent {
            file_id: "a".into(),
            timestamp: 2,
            kind: EventKind::FileClose,
        })
        .unwrap();
        assert!(s.document(&"a".into()).is_none());
        assert!(s.recent_edits().is_empty());
        assert!(s.focused_file().is_none());
    }

    #[test]
    fn history_capacity_drops_the_oldest_record() {
        let mut s = Session::new(2);
        open(&mut s, "a", &" ".repeat(100), 0);
        for i in 0..3u64 {
            // Two positions apart so the records never touch.
            cursor_move(&mut s, "a", (i as usize) * 3, i * 10);
            insert(&mut s, "a", "x", i * 10 + 1);
        }
        let edits = s.recent_edits();
        assert_eq!(edits.len(), 2);
        assert_eq!(edits[0].last_touched, 21);
        assert_eq!(edits[1].last_touched, 11);
    }

    #[test]
    fn version_increases_across_mutations() {
        let mut s = Session::default();
        open(&mut s, "a", "ab", 0);
        let v1 = s.document(&"a".into()).unwrap().version();
        insert(&mut s, "a", "c", 1);
        let v2 = s.document(&"a".into()).unwrap().version();
        cursor_move(&mut s, "a", 0, 2);
        let v3 = s.document(&"a".into()).unwrap().version();
        assert!(v1 < v2 && v2 < v3);
    }

    #[test]
    fn replaying_the_same_events_is_deterministic() {
        let events = [
            EditorEvent {
                file_id: "a".into(),
                timestamp: 0,
                kind: EventKind::FileOpen { content: "seed".into() },
            },
            EditorEvent {
                file_id: "a".into(),
                timestamp: 1,
                kind: EventKind::CursorMove { offset: 4 },
            },
            EditorEvent {
                file_id: "a".into(),
                timestamp: 2,
                kind: EventKind::Insert { text: "ling".into() },
            },
        ];
        let mut s1 = Session::default();
        let mut s2 = Session::default();
        for e in &events {
            s1.apply_event(e).unwrap();
            s2.apply_event(e).unwrap();
        }
        let d1 = s1.document(&"a".into()).unwrap();
        let d2 = s2.document(&"a".into()).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d1.content(), "seedling");
    }

    #[test]
    fn multibyte_characters_use_character_offsets() {
        let mut s = Session::default();
        open(&mut s, "a", "héllo", 0);
        cursor_move(&mut s, "a", 2, 1);
        insert(&mut s, "a", "…", 2);
        let doc = s.document(&"a".into()).unwrap();
        assert_eq!(doc.content(), "hé…llo");
        assert_eq!(doc.cursor(), 3);
        assert_eq!(doc.char_len(), 6);
    }
}

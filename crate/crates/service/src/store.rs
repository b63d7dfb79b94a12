//! Append-only judgment log and the state folded from it.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use kgbench_core::sampling::{Judgment, Verdict};
use serde::Serialize;

use crate::ServiceError;

pub const JUDGMENT_LOG: &str = "judgments.log";

/// One JSON judgment per line. A record counts once its line, newline
/// included, has been written and synced.
#[derive(Debug)]
pub struct JudgmentLog {
    path: PathBuf,
    file: File,
    len: u64,
}

impl JudgmentLog {
    /// Opens (or creates) the log and returns its records. A torn last line
    /// left by a crash mid-write is cut off.
    pub fn open(path: &Path) -> Result<(Self, Vec<Judgment>), ServiceError> {
        let storage = |e: std::io::Error| ServiceError::Storage(format!("{}: {e}", path.display()));
        let text = match std::fs::read(path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(storage(e)),
        };
        let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            log::warn!("{}: dropping {} byte(s) of an unterminated record", path.display(), text.len() - complete);
        }
        let body = std::str::from_utf8(&text[..complete]).map_err(|e| ServiceError::Load(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let j: Judgment =
                serde_json::from_str(line).map_err(|e| ServiceError::Load(format!("{}:{}: {e}", path.display(), i + 1)))?;
            records.push(j);
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(storage)?;
        if complete < text.len() {
            file.set_len(complete as u64).map_err(storage)?;
        }
        Ok((JudgmentLog { path: path.to_path_buf(), file, len: complete as u64 }, records))
    }

    /// Writes one record with a single write call and syncs it. On failure the
    /// file is cut back to its previous length.
    pub fn append(&mut self, judgment: &Judgment) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(judgment).map_err(|e| ServiceError::Storage(e.to_string()))?;
        line.push(b'\n');
        let result = self.file.write_all(&line).and_then(|_| self.file.sync_data());
        if let Err(e) = result {
            let _ = self.file.set_len(self.len);
            return Err(ServiceError::Storage(format!("{}: {e}", self.path.display())));
        }
        self.len += line.len() as u64;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub same: usize,
    pub different: usize,
    pub unsure: usize,
}

impl Tally {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Same => self.same += 1,
            Verdict::Different => self.different += 1,
            Verdict::Unsure => self.unsure += 1,
        }
    }

    pub fn decisive(&self) -> usize {
        self.same + self.different
    }
}

/// Effective verdicts: the last record per (item, annotator) wins.
#[derive(Debug, Clone, Default)]
pub struct SessionState {
    effective: BTreeMap<(usize, String), Judgment>,
    pub revisions: usize,
    pub records: usize,
}

impl SessionState {
    /// Folds log records in order. Records must name items of the sample.
    pub fn replay(records: &[Judgment], index: &HashMap<String, usize>) -> Result<Self, ServiceError> {
        let mut state = SessionState::default();
        for j in records {
            let i = *index.get(&j.item_id).ok_or_else(|| ServiceError::Load(format!("log references unknown item {}", j.item_id)))?;
            state.apply(i, j.clone());
        }
        Ok(state)
    }

    /// Returns whether the record replaced an earlier verdict.
    pub fn apply(&mut self, item: usize, judgment: Judgment) -> bool {
        self.records += 1;
        let revision = self.effective.insert((item, judgment.annotator.clone()), judgment).is_some();
        if revision {
            self.revisions += 1;
        }
        revision
    }

    pub fn effective(&self) -> impl Iterator<Item = (usize, &Judgment)> {
        self.effective.iter().map(|((i, _), j)| (*i, j))
    }

    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        for j in self.effective.values() {
            t.add(j.verdict);
        }
        t
    }

    pub fn tally_for(&self, annotator: &str) -> Tally {
        let mut t = Tally::default();
        for j in self.effective.values().filter(|j| j.annotator == annotator) {
            t.add(j.verdict);
        }
        t
    }

    pub fn annotators(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.effective.keys().map(|(_, a)| a.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    pub fn has_judged(&self, item: usize, annotator: &str) -> bool {
        self.effective.contains_key(&(item, annotator.to_owned()))
    }

    /// Lowest item index this annotator has not judged.
    pub fn next_for(&self, annotator: &str, total: usize) -> Option<usize> {
        (0..total).find(|&i| !self.has_judged(i, annotator))
    }

    pub fn judged_by(&self, annotator: &str) -> usize {
        self.effective.keys().filter(|(_, a)| a == annotator).count()
    }
}

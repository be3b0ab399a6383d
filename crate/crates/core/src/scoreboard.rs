//! Shared store of event occurrences backing causality checks.
//!
//! Writes made during a global tick are buffered and become visible only
//! after [`Scoreboard::commit`], so every reader within a tick observes the
//! same snapshot regardless of the order in which monitors step.

use std::collections::BTreeSet;
use std::fmt::{self, Write};
use std::sync::Arc;

use thiserror::Error;

/// Identity of one match attempt: the monitor instance that owns it and the
/// domain tick at which the attempt started.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttemptId {
    pub owner: u32,
    pub start: u64,
}

impl fmt::Display for AttemptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.owner, self.start)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreEntry {
    pub event: String,
    pub global_tick: u64,
    pub domain: String,
    pub attempt: AttemptId,
    /// Chart tick of the source occurrence that recorded this entry.
    pub slot: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoreboardError {
    #[error("E_NOT_EVENT: `{0}` is not an event")]
    NotEvent(String),
}

impl ScoreboardError {
    pub fn code(&self) -> &'static str {
        "E_NOT_EVENT"
    }
}

/// Narrows a check to entries from one attempt, owner or source slot.
#[derive(Clone, Copy, Debug, Default)]
pub struct Scope {
    pub attempt: Option<AttemptId>,
    pub owner: Option<u32>,
    pub slot: Option<usize>,
}

impl Scope {
    fn admits(&self, e: &ScoreEntry) -> bool {
        self.attempt.is_none_or(|a| a == e.attempt)
            && self.owner.is_none_or(|o| o == e.attempt.owner)
            && self.slot.is_none_or(|s| s == e.slot)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Scoreboard {
    events: Arc<BTreeSet<String>>,
    committed: Vec<ScoreEntry>,
    pending_adds: Vec<ScoreEntry>,
    pending_dels: Vec<(String, AttemptId)>,
    pending_owner_purges: Vec<u32>,
}

impl Scoreboard {
    pub fn new<I, S>(events: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Scoreboard {
            events: Arc::new(events.into_iter().map(Into::into).collect()),
            ..Default::default()
        }
    }

    fn require_event(&self, e: &str) -> Result<(), ScoreboardError> {
        if self.events.contains(e) {
            Ok(())
        } else {
            Err(ScoreboardError::NotEvent(e.to_string()))
        }
    }

    /// Records an occurrence; visible to checks from the next commit on.
    pub fn add_evt(
        &mut self,
        e: &str,
        tick: u64,
        domain: &str,
        attempt: AttemptId,
        slot: usize,
    ) -> Result<(), ScoreboardError> {
        self.require_event(e)?;
        self.pending_adds.push(ScoreEntry {
            event: e.to_string(),
            global_tick: tick,
            domain: domain.to_string(),
            attempt,
            slot,
        });
        Ok(())
    }

    /// True iff the committed snapshot holds an entry for `e`.
    pub fn chk_evt(&self, e: &str) -> Result<bool, ScoreboardError> {
        self.chk_scoped(e, &Scope::default())
    }

    pub fn chk_scoped(&self, e: &str, scope: &Scope) -> Result<bool, ScoreboardError> {
        self.require_event(e)?;
        Ok(self
            .committed
            .iter()
            .any(|x| x.event == e && scope.admits(x)))
    }

    /// Removes the entries for `e` recorded by `attempt`. Pending entries go
    /// at once; committed ones at the next commit. Idempotent.
    pub fn del_evt(&mut self, e: &str, attempt: AttemptId) {
        self.pending_adds
            .retain(|x| !(x.event == e && x.attempt == attempt));
        if self
            .committed
            .iter()
            .any(|x| x.event == e && x.attempt == attempt)
        {
            self.pending_dels.push((e.to_string(), attempt));
        }
    }

    /// Drops every entry of a monitor instance at the next commit.
    pub fn purge_owner(&mut self, owner: u32) {
        self.pending_adds.retain(|x| x.attempt.owner != owner);
        self.pending_owner_purges.push(owner);
    }

    pub fn commit(&mut self) {
        let dels = std::mem::take(&mut self.pending_dels);
        let purges = std::mem::take(&mut self.pending_owner_purges);
        self.committed.retain(|x| {
            !dels.iter().any(|(e, a)| *e == x.event && *a == x.attempt)
                && !purges.contains(&x.attempt.owner)
        });
        self.committed.append(&mut self.pending_adds);
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.committed
    }

    /// Committed entries recorded by one attempt.
    pub fn entries_of(&self, attempt: AttemptId) -> impl Iterator<Item = &ScoreEntry> {
        self.committed.iter().filter(move |x| x.attempt == attempt)
    }

    pub fn pending_len(&self) -> usize {
        self.pending_adds.len()
    }

    /// One committed entry per line: `event tick domain attempt slot`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for x in &self.committed {
            let _ = writeln!(
                out,
                "entry event={} tick={} domain={} attempt={} slot={}",
                x.event, x.global_tick, x.domain, x.attempt, x.slot
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A1: AttemptId = AttemptId { owner: 0, start: 1 };
    const A2: AttemptId = AttemptId { owner: 0, start: 2 };

    fn sb() -> Scoreboard {
        Scoreboard::new(["e", "f"])
    }

    #[test]
    fn add_is_invisible_until_commit() {
        let mut s = sb();
        s.add_evt("e", 3, "c1", A1, 0).unwrap();
        assert!(!s.chk_evt("e").unwrap());
        s.commit();
        // tick 4 passes with nothing new, tick 5 checks
        s.commit();
        assert!(s.chk_evt("e").unwrap());
    }

    #[test]
    fn cross_domain_visibility() {
        let mut s = sb();
        s.add_evt("e", 0, "c1", AttemptId { owner: 0, start: 0 }, 0).unwrap();
        s.commit();
        let scope = Scope {
            owner: Some(0),
            slot: Some(0),
            ..Default::default()
        };
        assert!(s.chk_scoped("e", &scope).unwrap());
        assert!(!s
            .chk_scoped("e", &Scope { owner: Some(1), ..Default::default() })
            .unwrap());
    }

    #[test]
    fn checks_and_deletes() {
        let mut s = sb();
        assert!(!s.chk_evt("e").unwrap());
        s.del_evt("e", A1);
        s.commit();
        assert!(s.entries().is_empty());

        s.add_evt("e", 0, "c1", A1, 0).unwrap();
        s.commit();
        assert!(s.chk_evt("e").unwrap());
        s.del_evt("e", A2);
        s.commit();
        assert!(s.chk_evt("e").unwrap(), "attempt 1's entry survives a delete by attempt 2");

        s.del_evt("e", A1);
        assert!(s.chk_evt("e").unwrap(), "committed delete waits for commit");
        s.commit();
        assert!(!s.chk_evt("e").unwrap());
    }

    #[test]
    fn pending_add_cancelled_by_delete() {
        let mut s = sb();
        s.add_evt("e", 0, "c1", A1, 0).unwrap();
        s.del_evt("e", A1);
        s.commit();
        assert!(!s.chk_evt("e").unwrap());
    }

    #[test]
    fn not_event() {
        let mut s = sb();
        assert_eq!(s.add_evt("p", 0, "c1", A1, 0).unwrap_err().code(), "E_NOT_EVENT");
        assert!(s.chk_evt("p").is_err());
    }

    #[test]
    fn attempts_coexist() {
        let mut s = sb();
        s.add_evt("e", 0, "c1", A1, 0).unwrap();
        s.add_evt("e", 1, "c1", A2, 0).unwrap();
        s.commit();
        s.del_evt("e", A1);
        s.commit();
        assert_eq!(s.entries().len(), 1);
        assert_eq!(s.entries()[0].attempt, A2);
        assert!(s.dump().contains("attempt=0:2"));
    }
}

//! Finite event alphabets partitioned by subject.
//!
//! An alphabet assigns every event exactly one owning subject, so the event
//! set Σ splits into disjoint per-subject families Σ_u. Events may also carry
//! optional object, action, and level labels used by the resource and channel
//! models.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an event within its [`EventAlphabet`].
///
/// Ids are only meaningful relative to the alphabet that issued them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub usize);

/// Declaration of one event: an opaque identifier plus the label maps that
/// place it in a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDecl {
    pub id: String,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
}

impl EventDecl {
    /// A bare event with only the mandatory subject label.
    pub fn new(id: impl Into<String>, subject: impl Into<String>) -> Self {
        EventDecl {
            id: id.into(),
            subject: subject.into(),
            object: None,
            action: None,
            level: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("duplicate event id {0:?}")]
    DuplicateEvent(String),
    #[error("unknown event id {0:?}")]
    UnknownEvent(String),
    #[error("unknown subject {0:?}")]
    UnknownSubject(String),
}

/// A finite event alphabet with a total subject map.
///
/// Event order follows the declaration list and is the tie-breaking order for
/// every witness search in the crate, so two loads of the same model file
/// always produce the same witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventAlphabet {
    events: Vec<EventDecl>,
    by_name: BTreeMap<String, EventId>,
    subjects: Vec<String>,
}

impl EventAlphabet {
    pub fn new(events: Vec<EventDecl>) -> Result<Self, AlphabetError> {
        let mut by_name = BTreeMap::new();
        let mut subjects: Vec<String> = Vec::new();
        for (k, decl) in events.iter().enumerate() {
            if by_name.insert(decl.id.clone(), EventId(k)).is_some() {
                return Err(AlphabetError::DuplicateEvent(decl.id.clone()));
            }
            if !subjects.contains(&decl.subject) {
                subjects.push(decl.subject.clone());
            }
        }
        Ok(EventAlphabet {
            events,
            by_name,
            subjects,
        })
    }

    /// Shorthand for an alphabet of bare `(id, subject)` events.
    pub fn of_pairs(pairs: &[(&str, &str)]) -> Self {
        EventAlphabet::new(
            pairs
                .iter()
                .map(|(id, subject)| EventDecl::new(*id, *subject))
                .collect(),
        )
        .expect("pair alphabet is well-formed")
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn decls(&self) -> &[EventDecl] {
        &self.events
    }

    pub fn decl(&self, e: EventId) -> &EventDecl {
        &self.events[e.0]
    }

    pub fn id(&self, name: &str) -> Result<EventId, AlphabetError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| AlphabetError::UnknownEvent(name.to_owned()))
    }

    pub fn name(&self, e: EventId) -> &str {
        &self.events[e.0].id
    }

    pub fn subject_of(&self, e: EventId) -> &str {
        &self.events[e.0].subject
    }

    /// Subjects in order of first appearance in the declaration list.
    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn has_subject(&self, u: &str) -> bool {
        self.subjects.iter().any(|s| s == u)
    }

    pub fn check_subject(&self, u: &str) -> Result<(), AlphabetError> {
        if self.has_subject(u) {
            Ok(())
        } else {
            Err(AlphabetError::UnknownSubject(u.to_owned()))
        }
    }

    /// All event ids in declaration order.
    pub fn ids(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.events.len()).map(EventId)
    }

    /// The events owned by subject `u`, in declaration order.
    pub fn events_of(&self, u: &str) -> Vec<EventId> {
        self.ids()
            .filter(|e| self.subject_of(*e) == u)
            .collect()
    }

    /// The sub-alphabet Σ_u together with the per-event translation map
    /// (full-alphabet id → local id, `None` for events of other subjects).
    pub fn restrict_to_subject(&self, u: &str) -> Result<(EventAlphabet, Vec<Option<EventId>>), AlphabetError> {
        self.check_subject(u)?;
        let mut decls = Vec::new();
        let mut map = vec![None; self.events.len()];
        for e in self.ids() {
            if self.subject_of(e) == u {
                map[e.0] = Some(EventId(decls.len()));
                decls.push(self.decl(e).clone());
            }
        }
        Ok((EventAlphabet::new(decls).expect("restriction keeps ids unique"), map))
    }

    /// Render an event id for human-readable output.
    pub fn show(&self, e: EventId) -> &str {
        self.name(e)
    }
}

impl fmt::Display for EventAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, d) in self.events.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", d.id, d.subject)?;
        }
        write!(f, "}}")
    }
}

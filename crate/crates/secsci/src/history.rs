//! Histories (finite event sequences), the prefix order, purges, and
//! schedule recomposition.
//!
//! Histories form a free monoid under concatenation. The purge of a history
//! deletes every event outside a subject's view while preserving order; a
//! global history is recovered uniquely from its per-subject purges plus the
//! schedule saying whose event came when.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::alphabet::{AlphabetError, EventAlphabet, EventId};

/// A finite sequence of events from one alphabet.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History(pub Vec<EventId>);

impl History {
    pub fn empty() -> Self {
        History(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Monoid multiplication: `self` followed by `other`.
    pub fn concat(&self, other: &History) -> History {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        History(v)
    }

    pub fn push(&mut self, e: EventId) {
        self.0.push(e);
    }

    /// The prefix partial order on histories.
    pub fn is_prefix_of(&self, other: &History) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// All prefixes, shortest first (including ε and the history itself).
    pub fn prefixes(&self) -> impl Iterator<Item = History> + '_ {
        (0..=self.0.len()).map(move |n| History(self.0[..n].to_vec()))
    }

    /// Parse a history from event names over `alphabet`.
    pub fn from_names(alphabet: &EventAlphabet, names: &[&str]) -> Result<History, AlphabetError> {
        names
            .iter()
            .map(|n| alphabet.id(n))
            .collect::<Result<Vec<_>, _>>()
            .map(History)
    }

    /// Event names of the history, for display and serialization.
    pub fn names(&self, alphabet: &EventAlphabet) -> Vec<String> {
        self.0.iter().map(|e| alphabet.name(*e).to_owned()).collect()
    }

    pub fn render(&self, alphabet: &EventAlphabet) -> String {
        format!("⟨{}⟩", self.names(alphabet).join(" "))
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "#{}", e.0)?;
        }
        write!(f, "⟩")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HistoryError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("schedule uses subject {subject:?} {scheduled} times but its local history has length {available}")]
    ScheduleMismatch {
        subject: String,
        scheduled: usize,
        available: usize,
    },
}

/// Strict purge: the subsequence of `h` owned by subject `u`, order preserved.
pub fn purge_strict(alphabet: &EventAlphabet, h: &History, u: &str) -> Result<History, AlphabetError> {
    alphabet.check_subject(u)?;
    Ok(purge_where(h, |e| alphabet.subject_of(e) == u))
}

/// General purge: keep exactly the events satisfying the visibility
/// predicate (e.g. "event level is below the observer's clearance"),
/// order preserved.
pub fn purge_where(h: &History, mut visible: impl FnMut(EventId) -> bool) -> History {
    History(h.0.iter().copied().filter(|e| visible(*e)).collect())
}

/// The schedule of a history: the subject of each event in order.
pub fn schedule_of(alphabet: &EventAlphabet, h: &History) -> Vec<String> {
    h.0.iter()
        .map(|e| alphabet.subject_of(*e).to_owned())
        .collect()
}

/// Rebuild the unique global history whose k-th event is the next unconsumed
/// event of `locals[sched[k]]`.
///
/// Purging the result by each subject returns exactly that subject's local
/// history, so histories are in bijection with (purges, schedule) pairs.
pub fn schedule_recompose(
    alphabet: &EventAlphabet,
    locals: &BTreeMap<String, History>,
    sched: &[String],
) -> Result<History, HistoryError> {
    for (u, local) in locals {
        alphabet.check_subject(u)?;
        let scheduled = sched.iter().filter(|s| *s == u).count();
        if scheduled != local.len() {
            return Err(HistoryError::ScheduleMismatch {
                subject: u.clone(),
                scheduled,
                available: local.len(),
            });
        }
    }
    let mut cursors: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = History::empty();
    for u in sched {
        let local = locals.get(u).ok_or(HistoryError::ScheduleMismatch {
            subject: u.clone(),
            scheduled: sched.iter().filter(|s| *s == u).count(),
            available: 0,
        })?;
        let k = cursors.entry(u.as_str()).or_insert(0);
        out.push(local.0[*k]);
        *k += 1;
    }
    Ok(out)
}

/// Every history over `alphabet` of length ≤ `max_len`, in length-then-
/// lexicographic order (the enumeration order used by all brute-force
/// oracles in the test suite).
pub fn enumerate_histories(alphabet: &EventAlphabet, max_len: usize) -> Vec<History> {
    let mut out = vec![History::empty()];
    let mut layer = vec![History::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for h in &layer {
            for e in alphabet.ids() {
                let mut v = h.clone();
                v.push(e);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab_alphabet() -> EventAlphabet {
        EventAlphabet::of_pairs(&[("a", "A"), ("b", "B")])
    }

    #[test]
    fn purge_keeps_own_events_in_order() {
        let alpha = ab_alphabet();
        // ⟨a a b b⟩ purged to A is ⟨a a⟩.
        let h = History::from_names(&alpha, &["a", "a", "b", "b"]).unwrap();
        let p = purge_strict(&alpha, &h, "A").unwrap();
        assert_eq!(p.names(&alpha), vec!["a", "a"]);
        // ⟨b a b a b⟩ purged to A is ⟨a a⟩.
        let h = History::from_names(&alpha, &["b", "a", "b", "a", "b"]).unwrap();
        let p = purge_strict(&alpha, &h, "A").unwrap();
        assert_eq!(p.names(&alpha), vec!["a", "a"]);
        // Empty base case.
        assert_eq!(purge_strict(&alpha, &History::empty(), "B").unwrap(), History::empty());
        assert!(purge_strict(&alpha, &h, "nobody").is_err());
    }

    #[test]
    fn purge_is_a_monoid_homomorphism_and_idempotent() {
        let alpha = ab_alphabet();
        for x in enumerate_histories(&alpha, 3) {
            for y in enumerate_histories(&alpha, 2) {
                let joint = purge_strict(&alpha, &x.concat(&y), "A").unwrap();
                let split = purge_strict(&alpha, &x, "A")
                    .unwrap()
                    .concat(&purge_strict(&alpha, &y, "A").unwrap());
                assert_eq!(joint, split);
            }
            let once = purge_strict(&alpha, &x, "A").unwrap();
            let twice = purge_strict(&alpha, &once, "A").unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn recompose_inverts_purge_plus_schedule() {
        let alpha = ab_alphabet();
        // The worked two-subject interleaving: A sees ⟨aa⟩, B sees ⟨bb⟩,
        // schedule ABAB gives ⟨abab⟩.
        let locals = BTreeMap::from([
            ("A".to_owned(), History::from_names(&alpha, &["a", "a"]).unwrap()),
            ("B".to_owned(), History::from_names(&alpha, &["b", "b"]).unwrap()),
        ]);
        let sched: Vec<String> = ["A", "B", "A", "B"].map(str::to_owned).to_vec();
        let h = schedule_recompose(&alpha, &locals, &sched).unwrap();
        assert_eq!(h.names(&alpha), vec!["a", "b", "a", "b"]);

        // Round trip on every history of length ≤ 4.
        for h in enumerate_histories(&alpha, 4) {
            let locals = BTreeMap::from([
                ("A".to_owned(), purge_strict(&alpha, &h, "A").unwrap()),
                ("B".to_owned(), purge_strict(&alpha, &h, "B").unwrap()),
            ]);
            let sched = schedule_of(&alpha, &h);
            assert_eq!(schedule_recompose(&alpha, &locals, &sched).unwrap(), h);
        }

        // Length mismatch is rejected.
        let locals = BTreeMap::from([
            ("A".to_owned(), History::from_names(&alpha, &["a"]).unwrap()),
            ("B".to_owned(), History::empty()),
        ]);
        assert!(schedule_recompose(&alpha, &locals, &[]).is_err());
    }

    #[test]
    fn two_locals_give_exactly_the_schedules() {
        let alpha = ab_alphabet();
        let locals = BTreeMap::from([
            ("A".to_owned(), History::from_names(&alpha, &["a"]).unwrap()),
            ("B".to_owned(), History::from_names(&alpha, &["b"]).unwrap()),
        ]);
        let mut results = Vec::new();
        for sched in [["A", "B"], ["B", "A"]] {
            let sched: Vec<String> = sched.map(str::to_owned).to_vec();
            results.push(schedule_recompose(&alpha, &locals, &sched).unwrap());
        }
        assert_eq!(
            results,
            vec![
                History::from_names(&alpha, &["a", "b"]).unwrap(),
                History::from_names(&alpha, &["b", "a"]).unwrap(),
            ]
        );
    }

    #[test]
    fn prefix_is_a_partial_order() {
        let alpha = ab_alphabet();
        let hs = enumerate_histories(&alpha, 3);
        for x in &hs {
            assert!(x.is_prefix_of(x));
            for y in &hs {
                if x.is_prefix_of(y) && y.is_prefix_of(x) {
                    assert_eq!(x, y);
                }
                for z in &hs {
                    if x.is_prefix_of(y) && y.is_prefix_of(z) {
                        assert!(x.is_prefix_of(z));
                    }
                }
            }
        }
    }
}

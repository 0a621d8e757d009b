//! Regular trace properties over an event alphabet.
//!
//! A property is a set of histories, stored as a canonical minimized
//! deterministic acceptor so that set equality is decidable (and cheap).
//! Boolean algebra, concatenation/star, prefix closure and interior, purges
//! and their cylinder liftings all stay within the representation.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::{AlphabetError, EventAlphabet, EventDecl, EventId};
use crate::automata::{Dfa, Nfa};
use crate::history::History;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PropertyError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("/{section}/{index}: unknown state {state:?}")]
    UnknownState {
        section: &'static str,
        index: usize,
        state: String,
    },
    #[error("/transitions/{index}/event: unknown event {event:?}")]
    UnknownTransitionEvent { index: usize, event: String },
    #[error("/initial: unknown state {0:?}")]
    UnknownInitial(String),
    #[error("pattern references event {0:?} outside the alphabet")]
    PatternEvent(String),
}

/// A regular set of histories bound to its alphabet.
#[derive(Clone, Debug)]
pub struct RegularProperty {
    alphabet: Arc<EventAlphabet>,
    dfa: Dfa,
}

impl PartialEq for RegularProperty {
    /// Semantic equality: same alphabet, same language.
    fn eq(&self, other: &Self) -> bool {
        *self.alphabet == *other.alphabet && self.dfa == other.dfa
    }
}
impl Eq for RegularProperty {}

impl RegularProperty {
    /// Wrap and normalize an acceptor (minimize into canonical form).
    pub fn from_dfa(alphabet: Arc<EventAlphabet>, dfa: Dfa) -> Self {
        assert_eq!(dfa.alphabet_len, alphabet.len(), "acceptor/alphabet size mismatch");
        RegularProperty {
            alphabet,
            dfa: dfa.minimized(),
        }
    }

    pub fn from_nfa(alphabet: Arc<EventAlphabet>, nfa: Nfa) -> Self {
        RegularProperty::from_dfa(alphabet, nfa.determinize())
    }

    /// Σ* — the only property that is both safe and live.
    pub fn universal(alphabet: Arc<EventAlphabet>) -> Self {
        let dfa = Dfa::universal(alphabet.len());
        RegularProperty { alphabet, dfa }
    }

    /// ∅.
    pub fn empty(alphabet: Arc<EventAlphabet>) -> Self {
        let dfa = Dfa::empty(alphabet.len());
        RegularProperty { alphabet, dfa }
    }

    /// The finite property consisting of exactly the given histories.
    pub fn of_histories(alphabet: Arc<EventAlphabet>, histories: &[History]) -> Self {
        let mut nfa = Nfa::blank(alphabet.len(), 0);
        for h in histories {
            let mut word = Nfa::epsilon(alphabet.len());
            for e in &h.0 {
                word = word.concat(&Nfa::letters(alphabet.len(), &[e.0]));
            }
            nfa = if nfa.states == 0 { word } else { nfa.union(&word) };
        }
        if nfa.states == 0 {
            return RegularProperty::empty(alphabet);
        }
        RegularProperty::from_nfa(alphabet, nfa)
    }

    pub fn alphabet(&self) -> &Arc<EventAlphabet> {
        &self.alphabet
    }

    pub fn acceptor(&self) -> &Dfa {
        &self.dfa
    }

    pub fn contains(&self, h: &History) -> bool {
        let word: Vec<usize> = h.0.iter().map(|e| e.0).collect();
        self.dfa.accepts(&word)
    }

    fn same_alphabet(&self, other: &RegularProperty) {
        assert!(
            *self.alphabet == *other.alphabet,
            "properties over different alphabets"
        );
    }

    pub fn complement(&self) -> RegularProperty {
        RegularProperty {
            alphabet: self.alphabet.clone(),
            dfa: self.dfa.complement().minimized(),
        }
    }

    pub fn intersect(&self, other: &RegularProperty) -> RegularProperty {
        self.same_alphabet(other);
        RegularProperty {
            alphabet: self.alphabet.clone(),
            dfa: self.dfa.intersect(&other.dfa).minimized(),
        }
    }

    pub fn union(&self, other: &RegularProperty) -> RegularProperty {
        self.same_alphabet(other);
        RegularProperty {
            alphabet: self.alphabet.clone(),
            dfa: self.dfa.union(&other.dfa).minimized(),
        }
    }

    pub fn difference(&self, other: &RegularProperty) -> RegularProperty {
        self.same_alphabet(other);
        RegularProperty {
            alphabet: self.alphabet.clone(),
            dfa: self.dfa.difference(&other.dfa).minimized(),
        }
    }

    pub fn concat(&self, other: &RegularProperty) -> RegularProperty {
        self.same_alphabet(other);
        let nfa = Nfa::from_dfa(&self.dfa).concat(&Nfa::from_dfa(&other.dfa));
        RegularProperty::from_nfa(self.alphabet.clone(), nfa)
    }

    pub fn star(&self) -> RegularProperty {
        RegularProperty::from_nfa(self.alphabet.clone(), Nfa::from_dfa(&self.dfa).star())
    }

    pub fn is_emptyset(&self) -> bool {
        self.dfa.is_emptyset()
    }

    pub fn is_universal(&self) -> bool {
        self.dfa.is_universal()
    }

    pub fn included_in(&self, other: &RegularProperty) -> bool {
        self.same_alphabet(other);
        self.dfa.included_in(&other.dfa)
    }

    pub fn equivalent(&self, other: &RegularProperty) -> bool {
        self == other
    }

    /// ⌈P⌉ — the lower (prefix) closure: all prefixes of members.
    pub fn lower_closure(&self) -> RegularProperty {
        RegularProperty {
            alphabet: self.alphabet.clone(),
            dfa: self.dfa.prefix_closure().minimized(),
        }
    }

    /// The largest upper-closed (extension-closed) subset:
    /// int P = ¬⌈¬P⌉.
    pub fn interior(&self) -> RegularProperty {
        self.complement().lower_closure().complement()
    }

    /// Safety: the property is closed under taking prefixes.
    pub fn is_safe(&self) -> bool {
        self.dfa.is_prefix_closed()
    }

    /// Liveness: every history extends into the property (density).
    pub fn is_live(&self) -> bool {
        self.dfa.is_dense()
    }

    /// The purge image P_u = { h↾u | h ∈ P }, as a property over the
    /// sub-alphabet Σ_u.
    pub fn purge_image(&self, u: &str) -> Result<RegularProperty, AlphabetError> {
        let (sub, map) = self.alphabet.restrict_to_subject(u)?;
        let letter_map: Vec<Option<usize>> = map.iter().map(|m| m.map(|e| e.0)).collect();
        let nfa = self.dfa.map_letters(&letter_map, sub.len());
        Ok(RegularProperty::from_nfa(Arc::new(sub), nfa))
    }

    /// Inverse purge (the cylinder over a local property): all global
    /// histories whose purge to `u` lands in `self`.
    ///
    /// `self` must be a property over the Σ_u sub-alphabet of `full`.
    pub fn lift_to(&self, full: &Arc<EventAlphabet>, u: &str) -> Result<RegularProperty, AlphabetError> {
        let (sub, map) = full.restrict_to_subject(u)?;
        assert!(
            sub == **self.alphabet(),
            "local property alphabet is not the {u} sub-alphabet"
        );
        let letter_map: Vec<Option<usize>> = map.iter().map(|m| m.map(|e| e.0)).collect();
        Ok(RegularProperty::from_dfa(
            full.clone(),
            self.dfa.inverse_map_letters(&letter_map),
        ))
    }

    /// Localization (cylinder closure): the histories all of whose
    /// per-subject purges are purges of members,
    /// P̂ = ∩_u { z | z↾u ∈ P_u }.
    pub fn cylinder_closure(&self) -> RegularProperty {
        let mut out = RegularProperty::universal(self.alphabet.clone());
        for u in self.alphabet.subjects().to_vec() {
            let local = self.purge_image(&u).expect("subject from own alphabet");
            out = out.intersect(&local.lift_to(&self.alphabet, &u).expect("same alphabet"));
        }
        out
    }

    /// Cylinder interior, by duality with the closure.
    pub fn cylinder_interior(&self) -> RegularProperty {
        self.complement().cylinder_closure().complement()
    }

    /// Cylinder interior built directly as the union over subjects of the
    /// cylinders on the ∀-images (the second route of the duality; kept
    /// separate so tests can compare both).
    pub fn cylinder_interior_direct(&self) -> RegularProperty {
        let mut out = RegularProperty::empty(self.alphabet.clone());
        for u in self.alphabet.subjects().to_vec() {
            // u_*(P) = ¬ u_!(¬P), the local histories all of whose
            // global preimages lie in P.
            let forall_image = self
                .complement()
                .purge_image(&u)
                .expect("subject from own alphabet")
                .complement();
            out = out.union(&forall_image.lift_to(&self.alphabet, &u).expect("same alphabet"));
        }
        out
    }

    /// Lexicographically least shortest member, if the property is nonempty.
    pub fn shortest_member(&self) -> Option<History> {
        self.dfa
            .shortest_accepted()
            .map(|w| History(w.into_iter().map(EventId).collect()))
    }

    /// All members of length ≤ `max_len` (desk-scale enumeration).
    pub fn members_upto(&self, max_len: usize) -> Vec<History> {
        self.dfa
            .accepted_upto(max_len)
            .into_iter()
            .map(|w| History(w.into_iter().map(EventId).collect()))
            .collect()
    }
}

/// The property-pattern family: occurrence and precedence patterns plus the
/// boolean/sequential combinators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    /// Histories in which `a` occurs at least once.
    Occurs(String),
    /// Histories with some occurrence of `a` strictly before some later `b`.
    Before(String, String),
    /// Every occurrence of `a` is followed by a strictly later `b`.
    EventuallyFollows(String, String),
    /// Every occurrence of `b` has a strictly earlier `a`.
    AlwaysPreceded(String, String),
    Complement(Box<Pattern>),
    Union(Box<Pattern>, Box<Pattern>),
    Intersection(Box<Pattern>, Box<Pattern>),
    /// One-letter histories drawn from a literal event set.
    AnyOf(Vec<String>),
    /// The empty history only.
    Epsilon,
    /// All histories.
    All,
    Concat(Box<Pattern>, Box<Pattern>),
    Star(Box<Pattern>),
}

impl Pattern {
    pub fn occurs(a: &str) -> Pattern {
        Pattern::Occurs(a.to_owned())
    }
    pub fn before(a: &str, b: &str) -> Pattern {
        Pattern::Before(a.to_owned(), b.to_owned())
    }
    pub fn eventually_follows(a: &str, b: &str) -> Pattern {
        Pattern::EventuallyFollows(a.to_owned(), b.to_owned())
    }
    pub fn always_preceded(a: &str, b: &str) -> Pattern {
        Pattern::AlwaysPreceded(a.to_owned(), b.to_owned())
    }
    pub fn any_of(events: &[&str]) -> Pattern {
        Pattern::AnyOf(events.iter().map(|s| (*s).to_owned()).collect())
    }
    pub fn not(self) -> Pattern {
        Pattern::Complement(Box::new(self))
    }
    pub fn or(self, other: Pattern) -> Pattern {
        Pattern::Union(Box::new(self), Box::new(other))
    }
    pub fn and(self, other: Pattern) -> Pattern {
        Pattern::Intersection(Box::new(self), Box::new(other))
    }
    pub fn then(self, other: Pattern) -> Pattern {
        Pattern::Concat(Box::new(self), Box::new(other))
    }
    pub fn star(self) -> Pattern {
        Pattern::Star(Box::new(self))
    }
}

/// Compile a pattern into the regular property it denotes.
pub fn pattern_property(alphabet: &Arc<EventAlphabet>, pattern: &Pattern) -> Result<RegularProperty, PropertyError> {
    let n = alphabet.len();
    let lookup = |name: &str| {
        alphabet
            .id(name)
            .map_err(|_| PropertyError::PatternEvent(name.to_owned()))
    };
    let prop = match pattern {
        Pattern::Occurs(a) => {
            let a = lookup(a)?.0;
            // Two states: "not seen yet" → "seen" (absorbing, accepting).
            let delta = vec![
                (0..n).map(|x| if x == a { 1 } else { 0 }).collect(),
                vec![1; n],
            ];
            RegularProperty::from_dfa(
                alphabet.clone(),
                Dfa {
                    alphabet_len: n,
                    initial: 0,
                    accepting: vec![false, true],
                    delta,
                },
            )
        }
        Pattern::Before(a, b) => {
            let (a, b) = (lookup(a)?.0, lookup(b)?.0);
            // Waiting for a, then waiting for a later b, then accept all.
            let delta = vec![
                (0..n).map(|x| if x == a { 1 } else { 0 }).collect(),
                (0..n).map(|x| if x == b { 2 } else { 1 }).collect(),
                vec![2; n],
            ];
            RegularProperty::from_dfa(
                alphabet.clone(),
                Dfa {
                    alphabet_len: n,
                    initial: 0,
                    accepting: vec![false, false, true],
                    delta,
                },
            )
        }
        Pattern::EventuallyFollows(a, b) => {
            if a == b {
                // An occurrence can never be followed by a later one at the
                // end, so only a-free histories qualify.
                return pattern_property(alphabet, &Pattern::occurs(a).not());
            }
            let (a, b) = (lookup(a)?.0, lookup(b)?.0);
            // State 1 = "an a is pending a response"; accepting iff none is.
            let step = |pending: usize, x: usize| {
                if x == a {
                    1
                } else if x == b {
                    0
                } else {
                    pending
                }
            };
            let delta = vec![
                (0..n).map(|x| step(0, x)).collect(),
                (0..n).map(|x| step(1, x)).collect(),
            ];
            RegularProperty::from_dfa(
                alphabet.clone(),
                Dfa {
                    alphabet_len: n,
                    initial: 0,
                    accepting: vec![true, false],
                    delta,
                },
            )
        }
        Pattern::AlwaysPreceded(a, b) => {
            if a == b {
                // The first occurrence has no earlier one.
                return pattern_property(alphabet, &Pattern::occurs(a).not());
            }
            let (a, b) = (lookup(a)?.0, lookup(b)?.0);
            // Before any a: a b is fatal. After an a: anything goes.
            let delta = vec![
                (0..n)
                    .map(|x| {
                        if x == a {
                            1
                        } else if x == b {
                            2
                        } else {
                            0
                        }
                    })
                    .collect(),
                vec![1; n],
                vec![2; n],
            ];
            RegularProperty::from_dfa(
                alphabet.clone(),
                Dfa {
                    alphabet_len: n,
                    initial: 0,
                    accepting: vec![true, true, false],
                    delta,
                },
            )
        }
        Pattern::Complement(p) => pattern_property(alphabet, p)?.complement(),
        Pattern::Union(p, q) => pattern_property(alphabet, p)?.union(&pattern_property(alphabet, q)?),
        Pattern::Intersection(p, q) => pattern_property(alphabet, p)?.intersect(&pattern_property(alphabet, q)?),
        Pattern::AnyOf(events) => {
            let letters = events
                .iter()
                .map(|e| lookup(e).map(|id| id.0))
                .collect::<Result<Vec<_>, _>>()?;
            RegularProperty::from_nfa(alphabet.clone(), Nfa::letters(n, &letters))
        }
        Pattern::Epsilon => RegularProperty::from_nfa(alphabet.clone(), Nfa::epsilon(n)),
        Pattern::All => RegularProperty::universal(alphabet.clone()),
        Pattern::Concat(p, q) => pattern_property(alphabet, p)?.concat(&pattern_property(alphabet, q)?),
        Pattern::Star(p) => pattern_property(alphabet, p)?.star(),
    };
    Ok(prop)
}

/// JSON model of an alphabet plus acceptor. Transitions form a relation, so
/// partial or nondeterministic descriptions are fine; loading determinizes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PropertyFile {
    pub events: Vec<EventDecl>,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub transitions: Vec<TransitionDecl>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TransitionDecl {
    pub from: String,
    pub event: String,
    pub to: String,
}

/// Build a property over a shared alphabet from named states, an initial
/// state, accepting states, and a transition relation.
fn acceptor_to_property(
    alphabet: &Arc<EventAlphabet>,
    states: &[String],
    initial: &str,
    accepting: &[String],
    transitions: &[TransitionDecl],
) -> Result<RegularProperty, PropertyError> {
    let state_index = |name: &str| states.iter().position(|s| s == name);
    let initial =
        state_index(initial).ok_or_else(|| PropertyError::UnknownInitial(initial.to_owned()))?;
    let mut nfa = Nfa::blank(alphabet.len(), states.len());
    nfa.initial.insert(initial);
    for (k, acc) in accepting.iter().enumerate() {
        let s = state_index(acc).ok_or_else(|| PropertyError::UnknownState {
            section: "accepting",
            index: k,
            state: acc.clone(),
        })?;
        nfa.accepting.insert(s);
    }
    for (k, t) in transitions.iter().enumerate() {
        let from = state_index(&t.from).ok_or_else(|| PropertyError::UnknownState {
            section: "transitions",
            index: k,
            state: t.from.clone(),
        })?;
        let to = state_index(&t.to).ok_or_else(|| PropertyError::UnknownState {
            section: "transitions",
            index: k,
            state: t.to.clone(),
        })?;
        let event = alphabet.id(&t.event).map_err(|_| PropertyError::UnknownTransitionEvent {
            index: k,
            event: t.event.clone(),
        })?;
        nfa.delta.entry((from, event.0)).or_default().insert(to);
    }
    Ok(RegularProperty::from_nfa(alphabet.clone(), nfa))
}

impl PropertyFile {
    pub fn to_property(&self) -> Result<RegularProperty, PropertyError> {
        let alphabet = Arc::new(EventAlphabet::new(self.events.clone())?);
        acceptor_to_property(
            &alphabet,
            &self.states,
            &self.initial,
            &self.accepting,
            &self.transitions,
        )
    }

    /// Serialize a property in its canonical form, with states named q0, q1…
    pub fn from_property(p: &RegularProperty) -> PropertyFile {
        let dfa = p.acceptor();
        let states: Vec<String> = (0..dfa.states()).map(|s| format!("q{s}")).collect();
        let accepting = (0..dfa.states())
            .filter(|&s| dfa.accepting[s])
            .map(|s| format!("q{s}"))
            .collect();
        let mut transitions = Vec::new();
        for s in 0..dfa.states() {
            for a in 0..dfa.alphabet_len {
                transitions.push(TransitionDecl {
                    from: format!("q{s}"),
                    event: p.alphabet().name(EventId(a)).to_owned(),
                    to: format!("q{}", dfa.delta[s][a]),
                });
            }
        }
        PropertyFile {
            events: p.alphabet().decls().to_vec(),
            states,
            initial: format!("q{}", dfa.initial),
            accepting,
            transitions,
        }
    }
}

/// JSON model of several named properties sharing one alphabet.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PropertySetFile {
    pub events: Vec<EventDecl>,
    pub properties: Vec<NamedAcceptor>,
}

/// One named acceptor within a [`PropertySetFile`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct NamedAcceptor {
    pub name: String,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub transitions: Vec<TransitionDecl>,
}

impl PropertySetFile {
    /// The named properties, all over the same alphabet, in file order.
    pub fn to_properties(&self) -> Result<Vec<(String, RegularProperty)>, PropertyError> {
        let alphabet = Arc::new(EventAlphabet::new(self.events.clone())?);
        let mut out = Vec::new();
        for p in &self.properties {
            let prop = acceptor_to_property(
                &alphabet,
                &p.states,
                &p.initial,
                &p.accepting,
                &p.transitions,
            )?;
            out.push((p.name.clone(), prop));
        }
        Ok(out)
    }
}

/// Event names of a raw letter word, for witness rendering.
pub fn word_names(alphabet: &EventAlphabet, word: &[usize]) -> Vec<String> {
    word.iter().map(|&a| alphabet.name(EventId(a)).to_owned()).collect()
}

/// The distinct members of a finite set of histories (test helper for
/// comparing enumerations).
pub fn history_set(hs: impl IntoIterator<Item = History>) -> BTreeSet<History> {
    hs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{enumerate_histories, purge_strict};
    use proptest::prelude::*;

    fn ab() -> Arc<EventAlphabet> {
        Arc::new(EventAlphabet::of_pairs(&[("a", "A"), ("b", "B")]))
    }

    /// Brute-force membership for the pattern family, straight from the
    /// set-comprehension definitions.
    fn oracle(alphabet: &EventAlphabet, pattern: &Pattern, h: &History) -> bool {
        let name = |k: usize| alphabet.name(h.0[k]);
        match pattern {
            Pattern::Occurs(a) => (0..h.len()).any(|k| name(k) == a),
            Pattern::Before(a, b) => (0..h.len())
                .any(|i| name(i) == a && (i + 1..h.len()).any(|j| name(j) == b)),
            Pattern::EventuallyFollows(a, b) => {
                (0..h.len()).all(|i| name(i) != a || (i + 1..h.len()).any(|j| name(j) == b))
            }
            Pattern::AlwaysPreceded(a, b) => {
                (0..h.len()).all(|j| name(j) != b || (0..j).any(|i| name(i) == a))
            }
            Pattern::Complement(p) => !oracle(alphabet, p, h),
            Pattern::Union(p, q) => oracle(alphabet, p, h) || oracle(alphabet, q, h),
            Pattern::Intersection(p, q) => oracle(alphabet, p, h) && oracle(alphabet, q, h),
            Pattern::AnyOf(events) => h.len() == 1 && events.iter().any(|e| e == name(0)),
            Pattern::Epsilon => h.is_empty(),
            Pattern::All => true,
            Pattern::Concat(p, q) => (0..=h.len()).any(|k| {
                oracle(alphabet, p, &History(h.0[..k].to_vec()))
                    && oracle(alphabet, q, &History(h.0[k..].to_vec()))
            }),
            Pattern::Star(p) => {
                // Dynamic program over split points.
                let n = h.len();
                let mut ok = vec![false; n + 1];
                ok[0] = true;
                for end in 1..=n {
                    for start in 0..end {
                        if ok[start]
                            && oracle(alphabet, p, &History(h.0[start..end].to_vec()))
                            && h.0[start..end].len() > 0
                        {
                            ok[end] = true;
                        }
                    }
                }
                ok[n]
            }
        }
    }

    #[test]
    fn pattern_compilation_matches_the_definitions() {
        let alphabet = ab();
        let patterns = vec![
            Pattern::occurs("a"),
            Pattern::before("a", "b"),
            Pattern::before("b", "a"),
            Pattern::eventually_follows("a", "b"),
            Pattern::always_preceded("a", "b"),
            Pattern::eventually_follows("a", "a"),
            Pattern::always_preceded("b", "b"),
            Pattern::occurs("a").not(),
            Pattern::any_of(&["a", "b"]).star().then(Pattern::any_of(&["b"])),
            Pattern::any_of(&["a"]).star(),
            Pattern::occurs("a").and(Pattern::occurs("b")),
            Pattern::occurs("a").or(Pattern::Epsilon),
        ];
        for pattern in patterns {
            let prop = pattern_property(&alphabet, &pattern).unwrap();
            for h in enumerate_histories(&alphabet, 4) {
                assert_eq!(
                    prop.contains(&h),
                    oracle(&alphabet, &pattern, &h),
                    "pattern {pattern:?} history {h:?}"
                );
            }
        }
    }

    #[test]
    fn occurs_and_its_complement_are_disjoint() {
        let alphabet = ab();
        let p = pattern_property(&alphabet, &Pattern::occurs("a")).unwrap();
        assert!(p.intersect(&p.complement()).is_emptyset());
        // before(a,b) ⊆ occurs(a), by automaton inclusion.
        let before = pattern_property(&alphabet, &Pattern::before("a", "b")).unwrap();
        assert!(before.included_in(&p));
    }

    #[test]
    fn unknown_pattern_event_is_an_error() {
        let alphabet = ab();
        assert_eq!(
            pattern_property(&alphabet, &Pattern::occurs("zap")).unwrap_err(),
            PropertyError::PatternEvent("zap".into())
        );
    }

    #[test]
    fn purge_image_of_the_four_history_property() {
        // P = {aaaa, aabb, baab, bbbb}: Alice's view collapses to {aa, aaaa}.
        let alphabet = ab();
        let histories: Vec<History> = ["aaaa", "aabb", "baab", "bbbb"]
            .iter()
            .map(|w| {
                History::from_names(&alphabet, &w.chars().map(|c| if c == 'a' { "a" } else { "b" }).collect::<Vec<_>>())
                    .unwrap()
            })
            .collect();
        let p = RegularProperty::of_histories(alphabet.clone(), &histories);
        let pa = p.purge_image("A").unwrap();
        let members = history_set(pa.members_upto(5));
        // bbbb purges to the empty history, so ε is in the image too.
        let expect: BTreeSet<History> = ["", "aa", "aaaa"]
            .iter()
            .map(|w| History::from_names(pa.alphabet(), &w.chars().map(|_| "a").collect::<Vec<_>>()).unwrap())
            .collect();
        assert_eq!(members, expect);

        // Purge image by enumeration on arbitrary members, as an oracle.
        let enumerated: BTreeSet<History> = p
            .members_upto(4)
            .iter()
            .map(|h| purge_strict(&alphabet, h, "A").unwrap())
            .collect();
        assert_eq!(history_set(pa.members_upto(4)), enumerated);
    }

    #[test]
    fn purge_image_of_everything_is_everything_local() {
        let alphabet = ab();
        let p = RegularProperty::universal(alphabet);
        let pa = p.purge_image("A").unwrap();
        assert!(pa.is_universal());
        // {ab, ba} purges to {a} for Alice.
        let alphabet = ab();
        let p = RegularProperty::of_histories(
            alphabet.clone(),
            &[
                History::from_names(&alphabet, &["a", "b"]).unwrap(),
                History::from_names(&alphabet, &["b", "a"]).unwrap(),
            ],
        );
        let pa = p.purge_image("A").unwrap();
        assert_eq!(pa.members_upto(3).len(), 1);
    }

    #[test]
    fn property_file_round_trip() {
        let alphabet = ab();
        let p = pattern_property(&alphabet, &Pattern::eventually_follows("a", "b")).unwrap();
        let file = PropertyFile::from_property(&p);
        let reloaded = file.to_property().unwrap();
        assert!(reloaded.equivalent(&p));
        // Serializing the reload is byte-stable.
        assert_eq!(PropertyFile::from_property(&reloaded), file);
    }

    proptest! {
        #[test]
        fn cylinder_closure_is_a_closure_operator(accepting in proptest::collection::vec(any::<bool>(), 8)) {
            // Random property over the 2-subject alphabet from a random
            // 8-state acceptor shape (fixed transition skeleton, random
            // acceptance) — enough variety to exercise the operators.
            let alphabet = ab();
            let dfa = Dfa {
                alphabet_len: 2,
                initial: 0,
                accepting: accepting.clone(),
                delta: (0..8).map(|s| vec![(s + 1) % 8, (s * 2 + 1) % 8]).collect(),
            };
            let p = RegularProperty::from_dfa(alphabet, dfa);
            let closed = p.cylinder_closure();
            prop_assert!(p.included_in(&closed));
            prop_assert!(closed.cylinder_closure().equivalent(&closed));
            // Duality: the direct interior construction agrees.
            prop_assert!(p.cylinder_interior().equivalent(&p.cylinder_interior_direct()));
            // Interior is inside, closure outside.
            prop_assert!(p.cylinder_interior().included_in(&p));
        }
    }

    #[test]
    fn single_subject_cylinder_closure_is_identity() {
        let alphabet = Arc::new(EventAlphabet::of_pairs(&[("x", "U"), ("y", "U")]));
        let p = pattern_property(&alphabet, &Pattern::before("x", "y")).unwrap();
        assert!(p.cylinder_closure().equivalent(&p));
    }

    #[test]
    fn consistent_histories_of_the_four_history_property() {
        // With Alice seeing ⟨aa⟩ and Bob seeing ⟨bb⟩, the localization
        // contains all six interleavings of aa and bb.
        let alphabet = ab();
        let histories: Vec<History> = ["aaaa", "aabb", "baab", "bbbb"]
            .iter()
            .map(|w| {
                History::from_names(&alphabet, &w.chars().map(|c| if c == 'a' { "a" } else { "b" }).collect::<Vec<_>>())
                    .unwrap()
            })
            .collect();
        let p = RegularProperty::of_histories(alphabet.clone(), &histories);
        let localized = p.cylinder_closure();
        for w in ["aabb", "abab", "abba", "baab", "baba", "bbaa"] {
            let h = History::from_names(&alphabet, &w.chars().map(|c| if c == 'a' { "a" } else { "b" }).collect::<Vec<_>>()).unwrap();
            assert!(localized.contains(&h), "{w} should be in the localization");
        }
    }
}

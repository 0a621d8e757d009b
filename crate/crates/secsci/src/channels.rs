//! Relational channels realized by finite-state transducers, shared between
//! subjects via a clearance poset: running histories, bounded inversion,
//! local views, interference channels, noninterference checking, and the
//! purge-projector invariance route.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{AccessError, Poset};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("duplicate {kind} {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error(
        "marked deterministic, but state {state:?} on input {input:?} has \
         {branches} branches with {outputs} outputs in total"
    )]
    NotDeterministic {
        state: String,
        input: String,
        branches: usize,
        outputs: usize,
    },
    #[error("the exact check needs a deterministic transducer; use the bounded mode instead")]
    ExactNeedsDeterministic,
    #[error("input {input:?} carries no subject label")]
    MissingSubjectLabel { input: String },
    #[error("the bound {bound} is smaller than the local history length {len}")]
    BoundTooSmall { bound: usize, len: usize },
    #[error("channels take nonempty histories; this one was empty")]
    EmptyHistory,
    #[error(transparent)]
    Level(#[from] AccessError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TransitionFile {
    state: String,
    input: String,
    next: String,
    #[serde(default)]
    outputs: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TransducerFile {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: String,
    transitions: Vec<TransitionFile>,
    #[serde(default)]
    deterministic: bool,
}

/// A finite-state transducer presenting a relational channel: each step
/// consumes one input and offers a set of possible outputs. A missing
/// (state, input) entry blocks that step. With the deterministic flag set,
/// every (state, input) pair has exactly one successor carrying at most one
/// output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TransducerFile", into = "TransducerFile")]
pub struct Transducer {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: usize,
    transitions: BTreeMap<(usize, usize), Vec<(usize, BTreeSet<usize>)>>,
    deterministic: bool,
}

impl TryFrom<TransducerFile> for Transducer {
    type Error = ChannelError;
    fn try_from(f: TransducerFile) -> Result<Transducer, ChannelError> {
        Transducer::new(f.inputs, f.outputs, f.states, &f.initial, f.transitions, f.deterministic)
    }
}

impl From<Transducer> for TransducerFile {
    fn from(t: Transducer) -> TransducerFile {
        let mut transitions = Vec::new();
        for (&(s, x), branches) in &t.transitions {
            for (next, outs) in branches {
                transitions.push(TransitionFile {
                    state: t.states[s].clone(),
                    input: t.inputs[x].clone(),
                    next: t.states[*next].clone(),
                    outputs: outs.iter().map(|&o| t.outputs[o].clone()).collect(),
                });
            }
        }
        TransducerFile {
            inputs: t.inputs.clone(),
            outputs: t.outputs.clone(),
            states: t.states.clone(),
            initial: t.states[t.initial].clone(),
            transitions,
            deterministic: t.deterministic,
        }
    }
}

fn position(space: &[String], kind: &'static str, name: &str) -> Result<usize, ChannelError> {
    space
        .iter()
        .position(|e| e == name)
        .ok_or_else(|| ChannelError::UnknownName {
            kind,
            name: name.to_owned(),
        })
}

fn check_distinct(space: &[String], kind: &'static str) -> Result<(), ChannelError> {
    let mut seen = BTreeSet::new();
    for name in space {
        if !seen.insert(name.clone()) {
            return Err(ChannelError::DuplicateName {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

impl Transducer {
    fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        states: Vec<String>,
        initial: &str,
        transition_list: Vec<TransitionFile>,
        deterministic: bool,
    ) -> Result<Transducer, ChannelError> {
        check_distinct(&inputs, "input")?;
        check_distinct(&outputs, "output")?;
        check_distinct(&states, "state")?;
        let initial = position(&states, "state", initial)?;
        let mut transitions: BTreeMap<(usize, usize), Vec<(usize, BTreeSet<usize>)>> =
            BTreeMap::new();
        for decl in transition_list {
            let s = position(&states, "state", &decl.state)?;
            let x = position(&inputs, "input", &decl.input)?;
            let next = position(&states, "state", &decl.next)?;
            let outs = decl
                .outputs
                .iter()
                .map(|o| position(&outputs, "output", o))
                .collect::<Result<BTreeSet<usize>, _>>()?;
            transitions.entry((s, x)).or_default().push((next, outs));
        }
        let t = Transducer {
            inputs,
            outputs,
            states,
            initial,
            transitions,
            deterministic,
        };
        if deterministic {
            for s in 0..t.states.len() {
                for x in 0..t.inputs.len() {
                    let branches = t.successors(s, x);
                    let outputs: usize = branches.iter().map(|(_, o)| o.len()).sum();
                    if branches.len() != 1 || outputs > 1 {
                        return Err(ChannelError::NotDeterministic {
                            state: t.states[s].clone(),
                            input: t.inputs[x].clone(),
                            branches: branches.len(),
                            outputs,
                        });
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn successors(&self, state: usize, input: usize) -> &[(usize, BTreeSet<usize>)] {
        self.transitions
            .get(&(state, input))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn input_ids(&self, history: &[String]) -> Result<Vec<usize>, ChannelError> {
        history
            .iter()
            .map(|x| position(&self.inputs, "input", x))
            .collect()
    }

    fn step(&self, states: &BTreeSet<usize>, input: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let mut next = BTreeSet::new();
        let mut outs = BTreeSet::new();
        for &s in states {
            for (n, o) in self.successors(s, input) {
                next.insert(*n);
                outs.extend(o.iter().copied());
            }
        }
        (next, outs)
    }

    fn out_names(&self, outs: &BTreeSet<usize>) -> BTreeSet<String> {
        outs.iter().map(|&o| self.outputs[o].clone()).collect()
    }

    /// The single-output channel f: the outputs possible at the final step
    /// of the history.
    pub fn last_step_outputs(&self, history: &[String]) -> Result<BTreeSet<String>, ChannelError> {
        if history.is_empty() {
            return Err(ChannelError::EmptyHistory);
        }
        let ids = self.input_ids(history)?;
        let mut states: BTreeSet<usize> = [self.initial].into();
        let mut outs = BTreeSet::new();
        for x in ids {
            let (next, o) = self.step(&states, x);
            states = next;
            outs = o;
        }
        Ok(self.out_names(&outs))
    }

    /// The cumulative channel: one set of possible outputs per step,
    /// collected over all runs of the input history. An output-less step
    /// collapses the whole image to the empty set.
    pub fn run(&self, history: &[String]) -> Result<OutputProduct, ChannelError> {
        let ids = self.input_ids(history)?;
        let mut states: BTreeSet<usize> = [self.initial].into();
        let mut product = OutputProduct::unit();
        for x in ids {
            let (next, outs) = self.step(&states, x);
            product.push(self.out_names(&outs));
            states = next;
        }
        Ok(product)
    }

    /// All input histories of each length ≤ bound, in length-then-lex order
    /// with respect to the input declaration order.
    pub fn histories_upto(&self, bound: usize) -> Vec<Vec<String>> {
        let mut all: Vec<Vec<usize>> = vec![vec![]];
        let mut layer: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..bound {
            let mut next_layer = Vec::new();
            for h in &layer {
                for x in 0..self.inputs.len() {
                    let mut h2 = h.clone();
                    h2.push(x);
                    next_layer.push(h2);
                }
            }
            all.extend(next_layer.iter().cloned());
            layer = next_layer;
        }
        all.into_iter()
            .map(|h| h.into_iter().map(|x| self.inputs[x].clone()).collect())
            .collect()
    }

    /// The bounded inverse channel: for every producible output history of
    /// length ≤ bound, the set of input histories of length ≤ bound mapping
    /// to it.
    pub fn invert(&self, bound: usize) -> BTreeMap<Vec<String>, BTreeSet<Vec<String>>> {
        let mut table: BTreeMap<Vec<String>, BTreeSet<Vec<String>>> = BTreeMap::new();
        for h in self.histories_upto(bound) {
            let image = self.run(&h).expect("own inputs");
            for y in image.enumerate() {
                table.entry(y).or_default().insert(h.clone());
            }
        }
        table
    }
}

/// The image of a cumulative channel on one input history: a set of output
/// histories presented as one set of possibilities per observed step (the
/// image is their cartesian product), or the empty set if some step offered
/// no output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutputProduct {
    steps: Option<Vec<BTreeSet<String>>>,
}

impl OutputProduct {
    /// The image of the empty history: just the empty output history.
    pub fn unit() -> OutputProduct {
        OutputProduct { steps: Some(vec![]) }
    }

    pub fn empty_set() -> OutputProduct {
        OutputProduct { steps: None }
    }

    fn push(&mut self, step: BTreeSet<String>) {
        if let Some(steps) = &mut self.steps {
            if step.is_empty() {
                self.steps = None;
            } else {
                steps.push(step);
            }
        }
    }

    pub fn is_empty_set(&self) -> bool {
        self.steps.is_none()
    }

    pub fn steps(&self) -> Option<&[BTreeSet<String>]> {
        self.steps.as_deref()
    }

    /// Explicitly list the output histories (use only at small bounds).
    pub fn enumerate(&self) -> BTreeSet<Vec<String>> {
        let Some(steps) = &self.steps else {
            return BTreeSet::new();
        };
        let mut words: Vec<Vec<String>> = vec![vec![]];
        for step in steps {
            words = words
                .into_iter()
                .flat_map(|w| {
                    step.iter().map(move |y| {
                        let mut w2 = w.clone();
                        w2.push(y.clone());
                        w2
                    })
                })
                .collect();
        }
        words.into_iter().collect()
    }

    /// Set inclusion of the presented images.
    pub fn includes(&self, other: &OutputProduct) -> bool {
        match (&self.steps, &other.steps) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(s, t)| t.is_subset(s))
            }
        }
    }
}

/// A transducer shared between subjects: inputs carry locality levels,
/// subjects carry clearances, and a subject observes exactly the inputs
/// whose level sits below their clearance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedChannelModel {
    pub transducer: Transducer,
    pub subjects: Vec<String>,
    pub levels: Poset,
    /// Input locality: pl : inputs → levels.
    pub pl: BTreeMap<String, String>,
    /// Subject clearance: cl : subjects → levels.
    pub cl: BTreeMap<String, String>,
    /// Who enters each input; used by the last-input purge projector.
    #[serde(default)]
    pub subject_of: BTreeMap<String, String>,
}

/// How a noninterference check is run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Product reachability over two synchronized copies; deterministic
    /// transducers only, but exhaustive.
    ExactDeterministic,
    /// Test the local-view/purge equation on every history up to the bound.
    Bounded(usize),
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::ExactDeterministic => write!(f, "exact"),
            Mode::Bounded(n) => write!(f, "bounded({n})"),
        }
    }
}

/// Two input histories a subject cannot tell apart that nevertheless give
/// them different observations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterferenceWitness {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub left_view: Vec<Vec<String>>,
    pub right_view: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NoninterferenceReport {
    pub subject: String,
    pub mode: String,
    pub noninterfering: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<InterferenceWitness>,
}

/// Results of the projector route: purge idempotence and invariance of the
/// single-output channel under the last-input purge, compared against the
/// bounded noninterference verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProjectorReport {
    pub subject: String,
    pub bound: usize,
    pub purge_idempotent: bool,
    pub bundled_purge_idempotent: bool,
    pub invariant_under_purge: bool,
    pub noninterfering_bounded: bool,
    /// Invariance of the channel under the purge must match the
    /// noninterference verdict.
    pub routes_agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance_witness: Option<InvarianceWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvarianceWitness {
    pub history: Vec<String>,
    pub purged: Vec<String>,
    pub outputs: BTreeSet<String>,
    pub purged_outputs: BTreeSet<String>,
}

impl SharedChannelModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        check_distinct(&self.subjects, "subject")?;
        for x in self.transducer.inputs() {
            let level = self.pl.get(x).ok_or_else(|| ChannelError::UnknownName {
                kind: "input level",
                name: x.clone(),
            })?;
            if !self.levels.contains(level) {
                return Err(AccessError::UnknownName {
                    kind: "level",
                    name: level.clone(),
                }
                .into());
            }
        }
        for u in &self.subjects {
            let level = self.cl.get(u).ok_or_else(|| ChannelError::UnknownName {
                kind: "subject clearance",
                name: u.clone(),
            })?;
            if !self.levels.contains(level) {
                return Err(AccessError::UnknownName {
                    kind: "level",
                    name: level.clone(),
                }
                .into());
            }
        }
        for (x, u) in &self.subject_of {
            position(self.transducer.inputs(), "input", x)?;
            position(&self.subjects, "subject", u)?;
        }
        Ok(())
    }

    fn subject_index(&self, u: &str) -> Result<(), ChannelError> {
        position(&self.subjects, "subject", u).map(|_| ())
    }

    /// The clearance relation: the subject may observe this input.
    pub fn cleared(&self, input: &str, subject: &str) -> Result<bool, ChannelError> {
        self.subject_index(subject)?;
        let pl = self.pl.get(input).ok_or_else(|| ChannelError::UnknownName {
            kind: "input",
            name: input.to_owned(),
        })?;
        Ok(self.levels.leq(pl, &self.cl[subject])?)
    }

    /// The subject's view of an input history: the events they observe.
    pub fn purge(&self, history: &[String], subject: &str) -> Result<Vec<String>, ChannelError> {
        history
            .iter()
            .filter_map(|x| match self.cleared(x, subject) {
                Ok(true) => Some(Ok(x.clone())),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }

    /// The events the subject does not observe.
    pub fn complementary_purge(
        &self,
        history: &[String],
        subject: &str,
    ) -> Result<Vec<String>, ChannelError> {
        history
            .iter()
            .filter_map(|x| match self.cleared(x, subject) {
                Ok(false) => Some(Ok(x.clone())),
                Ok(true) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }

    /// The subject's local view of the channel: outputs are accumulated only
    /// at the steps whose input the subject observes, but each is produced by
    /// the full global history up to that step.
    pub fn local_view(
        &self,
        subject: &str,
        history: &[String],
    ) -> Result<OutputProduct, ChannelError> {
        self.subject_index(subject)?;
        let t = &self.transducer;
        let ids = t.input_ids(history)?;
        let mut states: BTreeSet<usize> = [t.initial].into();
        let mut product = OutputProduct::unit();
        for (k, &x) in ids.iter().enumerate() {
            let (next, outs) = t.step(&states, x);
            if self.cleared(&history[k], subject)? {
                product.push(t.out_names(&outs));
            }
            states = next;
        }
        Ok(product)
    }

    /// Everything the subject can observe by replaying one local input
    /// history inside every global context of length ≤ bound.
    pub fn interference_channel(
        &self,
        subject: &str,
        local: &[String],
        bound: usize,
    ) -> Result<BTreeSet<Vec<String>>, ChannelError> {
        self.subject_index(subject)?;
        if bound < local.len() {
            return Err(ChannelError::BoundTooSmall {
                bound,
                len: local.len(),
            });
        }
        for x in local {
            if !self.cleared(x, subject)? {
                return Err(ChannelError::UnknownName {
                    kind: "cleared input",
                    name: x.clone(),
                });
            }
        }
        let mut union = BTreeSet::new();
        for h in self.transducer.histories_upto(bound) {
            if self.purge(&h, subject)? == local {
                union.extend(self.local_view(subject, &h)?.enumerate());
            }
        }
        Ok(union)
    }

    /// Can other subjects' inputs change what this subject observes?
    pub fn check_noninterference(
        &self,
        subject: &str,
        mode: Mode,
    ) -> Result<NoninterferenceReport, ChannelError> {
        self.validate()?;
        self.subject_index(subject)?;
        let witness = match mode {
            Mode::Bounded(bound) => self.bounded_interference_witness(subject, bound)?,
            Mode::ExactDeterministic => self.exact_interference_witness(subject)?,
        };
        Ok(NoninterferenceReport {
            subject: subject.to_owned(),
            mode: mode.to_string(),
            noninterfering: witness.is_none(),
            witness,
        })
    }

    /// First history (length-lex) where the local view differs from running
    /// the purged history; the witness pairs it with its purge.
    fn bounded_interference_witness(
        &self,
        subject: &str,
        bound: usize,
    ) -> Result<Option<InterferenceWitness>, ChannelError> {
        for h in self.transducer.histories_upto(bound) {
            let view = self.local_view(subject, &h)?;
            let purged = self.purge(&h, subject)?;
            let direct = self.transducer.run(&purged)?;
            if view != direct {
                return Ok(Some(InterferenceWitness {
                    left: h,
                    right: purged,
                    left_view: view.enumerate().into_iter().collect(),
                    right_view: direct.enumerate().into_iter().collect(),
                }));
            }
        }
        Ok(None)
    }

    /// Search the product of two copies of the transducer, synchronized on
    /// the subject's cleared inputs and free on the others, for a reachable
    /// state pair whose next cleared step produces different outputs.
    fn exact_interference_witness(
        &self,
        subject: &str,
    ) -> Result<Option<InterferenceWitness>, ChannelError> {
        let t = &self.transducer;
        if !t.deterministic {
            return Err(ChannelError::ExactNeedsDeterministic);
        }
        let cleared: Vec<bool> = t
            .inputs
            .iter()
            .map(|x| self.cleared(x, subject))
            .collect::<Result<_, _>>()?;
        let det_step = |s: usize, x: usize| -> (usize, BTreeSet<usize>) {
            let (next, outs) = &t.successors(s, x)[0];
            (*next, outs.clone())
        };

        #[derive(Clone, Copy)]
        enum Edge {
            Sync(usize),
            Left(usize),
            Right(usize),
        }
        let root = (t.initial, t.initial);
        let mut parent: BTreeMap<(usize, usize), ((usize, usize), Edge)> = BTreeMap::new();
        let mut seen: BTreeSet<(usize, usize)> = [root].into();
        let mut queue: VecDeque<(usize, usize)> = [root].into();
        let rebuild = |parent: &BTreeMap<(usize, usize), ((usize, usize), Edge)>,
                       mut node: (usize, usize)| {
            let mut left = Vec::new();
            let mut right = Vec::new();
            while let Some((prev, edge)) = parent.get(&node) {
                match edge {
                    Edge::Sync(x) => {
                        left.push(t.inputs[*x].clone());
                        right.push(t.inputs[*x].clone());
                    }
                    Edge::Left(x) => left.push(t.inputs[*x].clone()),
                    Edge::Right(x) => right.push(t.inputs[*x].clone()),
                }
                node = *prev;
            }
            left.reverse();
            right.reverse();
            (left, right)
        };

        while let Some((p, q)) = queue.pop_front() {
            for x in 0..t.inputs.len() {
                if cleared[x] {
                    let (p2, op) = det_step(p, x);
                    let (q2, oq) = det_step(q, x);
                    if op != oq {
                        let (mut left, mut right) = rebuild(&parent, (p, q));
                        left.push(t.inputs[x].clone());
                        right.push(t.inputs[x].clone());
                        let left_view = self.local_view(subject, &left)?;
                        let right_view = self.local_view(subject, &right)?;
                        return Ok(Some(InterferenceWitness {
                            left,
                            right,
                            left_view: left_view.enumerate().into_iter().collect(),
                            right_view: right_view.enumerate().into_iter().collect(),
                        }));
                    }
                    if seen.insert((p2, q2)) {
                        parent.insert((p2, q2), ((p, q), Edge::Sync(x)));
                        queue.push_back((p2, q2));
                    }
                } else {
                    let (p2, _) = det_step(p, x);
                    if seen.insert((p2, q)) {
                        parent.insert((p2, q), ((p, q), Edge::Left(x)));
                        queue.push_back((p2, q));
                    }
                    let (q2, _) = det_step(q, x);
                    if seen.insert((p, q2)) {
                        parent.insert((p, q2), ((p, q), Edge::Right(x)));
                        queue.push_back((p, q2));
                    }
                }
            }
        }
        Ok(None)
    }

    /// The last-input purge: project the history to the view of whoever
    /// entered its final input.
    pub fn bundled_purge(&self, history: &[String]) -> Result<Vec<String>, ChannelError> {
        let Some(last) = history.last() else {
            return Ok(vec![]);
        };
        let subject = self
            .subject_of
            .get(last)
            .ok_or_else(|| ChannelError::MissingSubjectLabel { input: last.clone() })?;
        self.purge(history, subject)
    }

    /// Check the projector laws and the invariance route to noninterference:
    /// the single-output channel is invariant under the last-input purge iff
    /// the subject's traffic does not suffer interference.
    pub fn purge_projector_check(
        &self,
        subject: &str,
        bound: usize,
    ) -> Result<ProjectorReport, ChannelError> {
        self.validate()?;
        self.subject_index(subject)?;
        let histories = self.transducer.histories_upto(bound);

        let mut purge_idempotent = true;
        let mut bundled_purge_idempotent = true;
        for h in &histories {
            let once = self.purge(h, subject)?;
            if self.purge(&once, subject)? != once {
                purge_idempotent = false;
            }
            let bundled_once = self.bundled_purge(h)?;
            if self.bundled_purge(&bundled_once)? != bundled_once {
                bundled_purge_idempotent = false;
            }
        }

        // Invariance of the single-output channel, tested on the histories
        // the subject drives (their inputs last).
        let mut invariance_witness = None;
        for h in &histories {
            let Some(last) = h.last() else { continue };
            if self.subject_of.get(last).map(String::as_str) != Some(subject) {
                continue;
            }
            let outputs = self.transducer.last_step_outputs(h)?;
            let purged = self.bundled_purge(h)?;
            // A history whose own driver is not cleared for its last input
            // purges to nothing, and nothing offers no output.
            let purged_outputs = if purged.is_empty() {
                BTreeSet::new()
            } else {
                self.transducer.last_step_outputs(&purged)?
            };
            if outputs != purged_outputs {
                invariance_witness = Some(InvarianceWitness {
                    history: h.clone(),
                    purged,
                    outputs,
                    purged_outputs,
                });
                break;
            }
        }
        let invariant_under_purge = invariance_witness.is_none();
        let noninterfering_bounded = self
            .bounded_interference_witness(subject, bound)?
            .is_none();
        Ok(ProjectorReport {
            subject: subject.to_owned(),
            bound,
            purge_idempotent,
            bundled_purge_idempotent,
            invariant_under_purge,
            noninterfering_bounded,
            routes_agree: invariant_under_purge == noninterfering_bounded,
            invariance_witness,
        })
    }
}

/// The immediate-service elevator over the given number of floors: calling
/// it to the floor it stands on answers "already there", any other call
/// makes it come.
pub fn elevator(floors: usize) -> Transducer {
    let states: Vec<String> = (0..floors).map(|i| format!("floor-{i}")).collect();
    let inputs: Vec<String> = (0..floors).map(|i| format!("call-{i}")).collect();
    let mut outputs = Vec::new();
    for i in 0..floors {
        outputs.push(format!("at-{i}"));
        outputs.push(format!("comes-{i}"));
    }
    let mut transitions = Vec::new();
    for j in 0..floors {
        for i in 0..floors {
            transitions.push(TransitionFile {
                state: format!("floor-{j}"),
                input: format!("call-{i}"),
                next: format!("floor-{i}"),
                outputs: vec![if i == j {
                    format!("at-{i}")
                } else {
                    format!("comes-{i}")
                }],
            });
        }
    }
    Transducer::new(inputs, outputs, states, "floor-0", transitions, true)
        .expect("the elevator is deterministic")
}

/// The elevator shared between two subjects with incomparable clearances:
/// each one's calls and observations are invisible to the other.
pub fn shared_elevator(floors: usize) -> SharedChannelModel {
    let subjects = ["A", "B"];
    let states: Vec<String> = (0..floors).map(|i| format!("floor-{i}")).collect();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut transitions = Vec::new();
    let mut pl = BTreeMap::new();
    let mut subject_of = BTreeMap::new();
    for u in subjects {
        for i in 0..floors {
            inputs.push(format!("call-{i}-{u}"));
            outputs.push(format!("at-{i}-{u}"));
            outputs.push(format!("comes-{i}-{u}"));
            pl.insert(format!("call-{i}-{u}"), format!("l{u}"));
            subject_of.insert(format!("call-{i}-{u}"), u.to_owned());
        }
    }
    for j in 0..floors {
        for u in subjects {
            for i in 0..floors {
                transitions.push(TransitionFile {
                    state: format!("floor-{j}"),
                    input: format!("call-{i}-{u}"),
                    next: format!("floor-{i}"),
                    outputs: vec![if i == j {
                        format!("at-{i}-{u}")
                    } else {
                        format!("comes-{i}-{u}")
                    }],
                });
            }
        }
    }
    let transducer = Transducer::new(inputs, outputs, states, "floor-0", transitions, true)
        .expect("the shared elevator is deterministic");
    SharedChannelModel {
        transducer,
        subjects: subjects.iter().map(|s| (*s).to_owned()).collect(),
        levels: Poset::from_covers(vec!["lA".into(), "lB".into()], vec![]).expect("two points"),
        pl,
        cl: [("A", "lA"), ("B", "lB")]
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .into(),
        subject_of,
    }
}

/// A sweeping elevator with a bounded pending-call set: each call is queued
/// (dropped if the queue is full), then the cabin serves the standing floor
/// or moves one floor toward the nearest pending call, sweeping in its
/// current direction before reversing.
pub fn queued_elevator(floors: usize, capacity: usize) -> Transducer {
    assert!(floors >= 2, "a one-floor elevator has nowhere to go");
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    struct Cab {
        floor: usize,
        up: bool,
        pending: BTreeSet<usize>,
    }
    fn name(c: &Cab) -> String {
        let pending: Vec<String> = c.pending.iter().map(ToString::to_string).collect();
        format!(
            "floor-{}-{}-[{}]",
            c.floor,
            if c.up { "up" } else { "down" },
            pending.join(",")
        )
    }
    let start = Cab {
        floor: 0,
        up: true,
        pending: BTreeSet::new(),
    };
    let mut states: BTreeSet<Cab> = [start.clone()].into();
    let mut frontier = vec![start.clone()];
    let mut transitions = Vec::new();
    let mut outputs: BTreeSet<String> = BTreeSet::new();
    while let Some(cab) = frontier.pop() {
        for call in 0..floors {
            let mut next = cab.clone();
            if next.pending.len() < capacity || next.pending.contains(&call) {
                next.pending.insert(call);
            }
            let output;
            if next.pending.contains(&next.floor) {
                next.pending.remove(&next.floor);
                output = format!("at-{}", next.floor);
            } else if next.pending.is_empty() {
                output = "idle".to_owned();
            } else {
                let above = next.pending.iter().any(|&p| p > next.floor);
                let below = next.pending.iter().any(|&p| p < next.floor);
                if next.up && !above {
                    next.up = false;
                } else if !next.up && !below {
                    next.up = true;
                }
                next.floor = if next.up { next.floor + 1 } else { next.floor - 1 };
                if next.pending.remove(&next.floor) {
                    output = format!("serve-{}", next.floor);
                } else {
                    output = format!("toward-{}", next.floor);
                }
            }
            outputs.insert(output.clone());
            transitions.push(TransitionFile {
                state: name(&cab),
                input: format!("call-{call}"),
                next: name(&next),
                outputs: vec![output],
            });
            if states.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    let state_names: Vec<String> = states.iter().map(name).collect();
    let inputs: Vec<String> = (0..floors).map(|i| format!("call-{i}")).collect();
    Transducer::new(
        inputs,
        outputs.into_iter().collect(),
        state_names,
        &name(&start),
        transitions,
        true,
    )
    .expect("the queued elevator is deterministic")
}

//! Finite acceptors over an indexed alphabet.
//!
//! Trace properties are stored as complete deterministic acceptors in a
//! canonical minimized form, so semantic equality of properties is structural
//! equality of automata. Nondeterministic acceptors (with ε-moves) appear
//! only as intermediate results of homomorphic images and of the
//! concatenation/star builders.
//!
//! Letters are `usize` indices; the property layer maps event ids onto them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// A complete deterministic finite acceptor: every state has exactly one
/// successor per letter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    pub alphabet_len: usize,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// `delta[state][letter]` → state; inner length is `alphabet_len`.
    pub delta: Vec<Vec<usize>>,
}

impl Dfa {
    pub fn states(&self) -> usize {
        self.accepting.len()
    }

    /// The empty language ∅.
    pub fn empty(alphabet_len: usize) -> Dfa {
        Dfa {
            alphabet_len,
            initial: 0,
            accepting: vec![false],
            delta: vec![vec![0; alphabet_len]],
        }
    }

    /// The full language Σ*.
    pub fn universal(alphabet_len: usize) -> Dfa {
        Dfa {
            alphabet_len,
            initial: 0,
            accepting: vec![true],
            delta: vec![vec![0; alphabet_len]],
        }
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut s = self.initial;
        for &a in word {
            s = self.delta[s][a];
        }
        self.accepting[s]
    }

    pub fn complement(&self) -> Dfa {
        let mut out = self.clone();
        for b in &mut out.accepting {
            *b = !*b;
        }
        out
    }

    /// Binary boolean combination of two languages over the same alphabet,
    /// built on the reachable product of the two acceptors.
    pub fn combine(&self, other: &Dfa, op: impl Fn(bool, bool) -> bool) -> Dfa {
        assert_eq!(self.alphabet_len, other.alphabet_len, "alphabet mismatch");
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let mut accepting = Vec::new();
        let mut queue = VecDeque::new();
        index.insert((self.initial, other.initial), 0);
        delta.push(vec![usize::MAX; self.alphabet_len]);
        accepting.push(op(self.accepting[self.initial], other.accepting[other.initial]));
        queue.push_back((self.initial, other.initial));
        while let Some((p, q)) = queue.pop_front() {
            let here = index[&(p, q)];
            for a in 0..self.alphabet_len {
                let succ = (self.delta[p][a], other.delta[q][a]);
                let next = *index.entry(succ).or_insert_with(|| {
                    delta.push(vec![usize::MAX; self.alphabet_len]);
                    accepting.push(op(self.accepting[succ.0], other.accepting[succ.1]));
                    queue.push_back(succ);
                    accepting.len() - 1
                });
                delta[here][a] = next;
            }
        }
        Dfa {
            alphabet_len: self.alphabet_len,
            initial: 0,
            accepting,
            delta,
        }
    }

    pub fn intersect(&self, other: &Dfa) -> Dfa {
        self.combine(other, |x, y| x && y)
    }

    pub fn union(&self, other: &Dfa) -> Dfa {
        self.combine(other, |x, y| x || y)
    }

    pub fn difference(&self, other: &Dfa) -> Dfa {
        self.combine(other, |x, y| x && !y)
    }

    /// States reachable from the initial state.
    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for a in 0..self.alphabet_len {
                let t = self.delta[s][a];
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// States from which some accepting state is reachable (by ≥ 0 steps).
    pub fn coreachable(&self) -> Vec<bool> {
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); self.states()];
        for s in 0..self.states() {
            for a in 0..self.alphabet_len {
                rev[self.delta[s][a]].push(s);
            }
        }
        let mut seen = vec![false; self.states()];
        let mut queue: VecDeque<usize> = (0..self.states()).filter(|&s| self.accepting[s]).collect();
        for &s in &queue {
            seen[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &rev[s] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// The language of all prefixes of members: mark every state that can
    /// still reach acceptance as accepting.
    pub fn prefix_closure(&self) -> Dfa {
        let co = self.coreachable();
        Dfa {
            alphabet_len: self.alphabet_len,
            initial: self.initial,
            accepting: co,
            delta: self.delta.clone(),
        }
    }

    /// Prefix-closedness, read directly off the graph: every reachable state
    /// that can still reach acceptance must already accept.
    pub fn is_prefix_closed(&self) -> bool {
        let reach = self.reachable();
        let co = self.coreachable();
        (0..self.states()).all(|s| !reach[s] || !co[s] || self.accepting[s])
    }

    /// Density: every word extends to a member, i.e. every reachable state
    /// can reach an accepting state.
    pub fn is_dense(&self) -> bool {
        let reach = self.reachable();
        let co = self.coreachable();
        (0..self.states()).all(|s| !reach[s] || co[s])
    }

    pub fn is_emptyset(&self) -> bool {
        let reach = self.reachable();
        (0..self.states()).all(|s| !reach[s] || !self.accepting[s])
    }

    pub fn is_universal(&self) -> bool {
        self.complement().is_emptyset()
    }

    pub fn included_in(&self, other: &Dfa) -> bool {
        self.difference(other).is_emptyset()
    }

    /// Semantic equality: minimize both sides into the canonical form and
    /// compare structurally (minimal complete acceptors are unique up to the
    /// state numbering, which canonicalization fixes).
    pub fn equivalent(&self, other: &Dfa) -> bool {
        self.minimized() == other.minimized()
    }

    /// Lexicographically least shortest accepted word, if any.
    pub fn shortest_accepted(&self) -> Option<Vec<usize>> {
        self.shortest_accepted_from(self.initial)
    }

    /// Like [`Dfa::shortest_accepted`], starting from an arbitrary state.
    pub fn shortest_accepted_from(&self, from: usize) -> Option<Vec<usize>> {
        let all = vec![true; self.alphabet_len];
        self.shortest_accepted_via(from, &all)
    }

    /// Lexicographically least shortest word over the `allowed` letters that
    /// leads from `from` to an accepting state — the restricted-reachability
    /// search behind single-subject extension witnesses.
    pub fn shortest_accepted_via(&self, from: usize, allowed: &[bool]) -> Option<Vec<usize>> {
        if self.accepting[from] {
            return Some(Vec::new());
        }
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.states()];
        let mut seen = vec![false; self.states()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(s) = queue.pop_front() {
            for a in 0..self.alphabet_len {
                if !allowed[a] {
                    continue;
                }
                let t = self.delta[s][a];
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some((s, a));
                    if self.accepting[t] {
                        let mut word = Vec::new();
                        let mut cur = t;
                        while let Some((p, letter)) = parent[cur] {
                            word.push(letter);
                            cur = p;
                        }
                        word.reverse();
                        return Some(word);
                    }
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// The state reached from the initial state on `word`.
    pub fn run_to(&self, word: &[usize]) -> usize {
        word.iter().fold(self.initial, |s, &a| self.delta[s][a])
    }

    /// All accepted words of length ≤ `max_len`, in length-lexicographic
    /// order. Desk-scale only; used by examples and oracles.
    pub fn accepted_upto(&self, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut layer = vec![(Vec::new(), self.initial)];
        if self.accepting[self.initial] {
            out.push(Vec::new());
        }
        for _ in 0..max_len {
            let mut next = Vec::new();
            for (word, s) in &layer {
                for a in 0..self.alphabet_len {
                    let t = self.delta[*s][a];
                    let mut w = word.clone();
                    w.push(a);
                    if self.accepting[t] {
                        out.push(w.clone());
                    }
                    next.push((w, t));
                }
            }
            layer = next;
        }
        out
    }

    /// Hopcroft-style partition refinement followed by a breadth-first
    /// renumbering, yielding the canonical minimal complete acceptor.
    pub fn minimized(&self) -> Dfa {
        // Work on the reachable part only.
        let reach = self.reachable();
        let live: Vec<usize> = (0..self.states()).filter(|&s| reach[s]).collect();
        let renum: BTreeMap<usize, usize> = live.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let n = live.len();
        let accepting: Vec<bool> = live.iter().map(|&s| self.accepting[s]).collect();
        let delta: Vec<Vec<usize>> = live
            .iter()
            .map(|&s| (0..self.alphabet_len).map(|a| renum[&self.delta[s][a]]).collect())
            .collect();

        // Moore refinement: split classes by (acceptance, successor classes).
        let mut class: Vec<usize> = accepting.iter().map(|&b| usize::from(b)).collect();
        loop {
            let mut sig_index: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
            let mut next_class = vec![0usize; n];
            for s in 0..n {
                let sig = (class[s], (0..self.alphabet_len).map(|a| class[delta[s][a]]).collect::<Vec<_>>());
                let fresh = sig_index.len();
                let id = *sig_index.entry(sig).or_insert(fresh);
                next_class[s] = id;
            }
            if next_class == class {
                break;
            }
            class = next_class;
        }
        let class_count = class.iter().max().map_or(0, |m| m + 1);

        // Quotient automaton, then canonical BFS numbering from the initial
        // class expanding letters in ascending order.
        let q_initial = class[renum[&self.initial]];
        let mut q_delta = vec![vec![usize::MAX; self.alphabet_len]; class_count];
        let mut q_accept = vec![false; class_count];
        for s in 0..n {
            q_accept[class[s]] = accepting[s];
            for a in 0..self.alphabet_len {
                q_delta[class[s]][a] = class[delta[s][a]];
            }
        }
        let mut order: Vec<usize> = Vec::with_capacity(class_count);
        let mut pos = vec![usize::MAX; class_count];
        let mut queue = VecDeque::from([q_initial]);
        pos[q_initial] = 0;
        order.push(q_initial);
        while let Some(c) = queue.pop_front() {
            for a in 0..self.alphabet_len {
                let t = q_delta[c][a];
                if pos[t] == usize::MAX {
                    pos[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        // Every class of a complete reachable-quotient automaton is reachable.
        Dfa {
            alphabet_len: self.alphabet_len,
            initial: 0,
            accepting: order.iter().map(|&c| q_accept[c]).collect(),
            delta: order
                .iter()
                .map(|&c| (0..self.alphabet_len).map(|a| pos[q_delta[c][a]]).collect())
                .collect(),
        }
    }

    /// Image of the language under a letter-to-letter map; `None` erases the
    /// letter. The result is nondeterministic in general.
    pub fn map_letters(&self, map: &[Option<usize>], new_alphabet_len: usize) -> Nfa {
        assert_eq!(map.len(), self.alphabet_len);
        let mut nfa = Nfa::blank(new_alphabet_len, self.states());
        nfa.initial.insert(self.initial);
        for (s, acc) in self.accepting.iter().enumerate() {
            if *acc {
                nfa.accepting.insert(s);
            }
        }
        for s in 0..self.states() {
            for a in 0..self.alphabet_len {
                let t = self.delta[s][a];
                match map[a] {
                    Some(b) => {
                        nfa.delta.entry((s, b)).or_default().insert(t);
                    }
                    None => {
                        nfa.eps.entry(s).or_default().insert(t);
                    }
                }
            }
        }
        nfa
    }

    /// Inverse image under a letter map: accepts `w` iff the mapped word
    /// (letters with `map[a] = None` dropped) is accepted by `self`.
    pub fn inverse_map_letters(&self, map: &[Option<usize>]) -> Dfa {
        let delta = (0..self.states())
            .map(|s| {
                map.iter()
                    .map(|m| match m {
                        Some(b) => self.delta[s][*b],
                        None => s,
                    })
                    .collect()
            })
            .collect();
        Dfa {
            alphabet_len: map.len(),
            initial: self.initial,
            accepting: self.accepting.clone(),
            delta,
        }
    }
}

/// A nondeterministic finite acceptor with ε-moves.
#[derive(Clone, Debug, Default)]
pub struct Nfa {
    pub alphabet_len: usize,
    pub states: usize,
    pub initial: BTreeSet<usize>,
    pub accepting: BTreeSet<usize>,
    pub delta: BTreeMap<(usize, usize), BTreeSet<usize>>,
    pub eps: BTreeMap<usize, BTreeSet<usize>>,
}

impl Nfa {
    pub fn blank(alphabet_len: usize, states: usize) -> Nfa {
        Nfa {
            alphabet_len,
            states,
            ..Nfa::default()
        }
    }

    /// Accepts exactly the empty word.
    pub fn epsilon(alphabet_len: usize) -> Nfa {
        let mut nfa = Nfa::blank(alphabet_len, 1);
        nfa.initial.insert(0);
        nfa.accepting.insert(0);
        nfa
    }

    /// Accepts the one-letter words drawn from `letters`.
    pub fn letters(alphabet_len: usize, letters: &[usize]) -> Nfa {
        let mut nfa = Nfa::blank(alphabet_len, 2);
        nfa.initial.insert(0);
        nfa.accepting.insert(1);
        for &a in letters {
            nfa.delta.entry((0, a)).or_default().insert(1);
        }
        nfa
    }

    pub fn from_dfa(dfa: &Dfa) -> Nfa {
        let mut nfa = Nfa::blank(dfa.alphabet_len, dfa.states());
        nfa.initial.insert(dfa.initial);
        for (s, acc) in dfa.accepting.iter().enumerate() {
            if *acc {
                nfa.accepting.insert(s);
            }
        }
        for s in 0..dfa.states() {
            for a in 0..dfa.alphabet_len {
                nfa.delta.entry((s, a)).or_default().insert(dfa.delta[s][a]);
            }
        }
        nfa
    }

    /// Disjoint-union relabeling helper: shift all state indices by `offset`.
    fn shifted(&self, offset: usize) -> Nfa {
        let shift_set = |set: &BTreeSet<usize>| set.iter().map(|s| s + offset).collect::<BTreeSet<_>>();
        Nfa {
            alphabet_len: self.alphabet_len,
            states: self.states + offset,
            initial: shift_set(&self.initial),
            accepting: shift_set(&self.accepting),
            delta: self
                .delta
                .iter()
                .map(|((s, a), ts)| ((s + offset, *a), shift_set(ts)))
                .collect(),
            eps: self.eps.iter().map(|(s, ts)| (s + offset, shift_set(ts))).collect(),
        }
    }

    pub fn union(&self, other: &Nfa) -> Nfa {
        assert_eq!(self.alphabet_len, other.alphabet_len);
        let mut out = self.clone();
        let other = other.shifted(self.states);
        out.states = other.states;
        out.initial.extend(&other.initial);
        out.accepting.extend(&other.accepting);
        out.delta.extend(other.delta);
        out.eps.extend(other.eps);
        out
    }

    pub fn concat(&self, other: &Nfa) -> Nfa {
        assert_eq!(self.alphabet_len, other.alphabet_len);
        let other = other.shifted(self.states);
        let mut out = self.clone();
        out.states = other.states;
        for &f in &self.accepting {
            out.eps.entry(f).or_default().extend(&other.initial);
        }
        out.accepting = other.accepting;
        out.delta.extend(other.delta);
        for (s, ts) in other.eps {
            out.eps.entry(s).or_default().extend(ts);
        }
        out
    }

    pub fn star(&self) -> Nfa {
        // Fresh initial state that accepts ε and loops back from finals.
        let inner = self.shifted(1);
        let mut out = Nfa::blank(self.alphabet_len, inner.states);
        out.initial.insert(0);
        out.accepting.insert(0);
        out.accepting.extend(&inner.accepting);
        out.delta = inner.delta;
        out.eps = inner.eps;
        out.eps.entry(0).or_default().extend(&inner.initial);
        for &f in &inner.accepting {
            out.eps.entry(f).or_default().insert(0);
        }
        out
    }

    fn eps_closure(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut closed = set.clone();
        let mut queue: VecDeque<usize> = set.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            if let Some(ts) = self.eps.get(&s) {
                for &t in ts {
                    if closed.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }
        closed
    }

    /// Subset construction; the result is complete (missing transitions fall
    /// into the ∅ subset, which is a rejecting sink).
    pub fn determinize(&self) -> Dfa {
        let start = self.eps_closure(&self.initial);
        let mut index: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let mut subsets: Vec<BTreeSet<usize>> = Vec::new();
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();
        index.insert(start.clone(), 0);
        subsets.push(start.clone());
        delta.push(vec![usize::MAX; self.alphabet_len]);
        queue.push_back(0usize);
        while let Some(k) = queue.pop_front() {
            for a in 0..self.alphabet_len {
                let mut step = BTreeSet::new();
                for &s in &subsets[k] {
                    if let Some(ts) = self.delta.get(&(s, a)) {
                        step.extend(ts);
                    }
                }
                let step = self.eps_closure(&step);
                let next = match index.get(&step) {
                    Some(&i) => i,
                    None => {
                        let i = subsets.len();
                        index.insert(step.clone(), i);
                        subsets.push(step);
                        delta.push(vec![usize::MAX; self.alphabet_len]);
                        queue.push_back(i);
                        i
                    }
                };
                delta[k][a] = next;
            }
        }
        let accepting = subsets
            .iter()
            .map(|set| set.iter().any(|s| self.accepting.contains(s)))
            .collect();
        Dfa {
            alphabet_len: self.alphabet_len,
            initial: 0,
            accepting,
            delta,
        }
    }
}

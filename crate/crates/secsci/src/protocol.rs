//! Symbolic protocol verification: a term algebra with public-key
//! envelopes, protocol roles as template state machines, bounded
//! adversarial interleaving search where the network is the intruder, and
//! challenge-response authentication checked as a hyperproperty over the
//! authenticator's worldview.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("cannot parse term {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("duplicate {kind} {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("role {role:?} sends variable {var:?} before it is bound by fresh or receive")]
    UnboundInSend { role: String, var: String },
    #[error("role {role:?} declares partner {var:?} which is never bound")]
    UnboundPartner { role: String, var: String },
    #[error("instance {instance} cannot send an open or ill-keyed message at step {step}")]
    OpenSend { instance: usize, step: usize },
    #[error("honest run is stuck: instance {instance} waits at step {step}")]
    Stuck { instance: usize, step: usize },
    #[error("scenario error: {0}")]
    BadScenario(String),
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

/// Messages are closed terms; templates and patterns may contain variables.
/// `Enc(payload, key)` is a public-key envelope for the agent named by
/// `key`: anyone can build it, only the key's owner can open it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Name(String),
    Nonce(String),
    Var(String),
    Pair(Box<Term>, Box<Term>),
    Enc(Box<Term>, Box<Term>),
}

impl Term {
    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn enc(payload: Term, key: Term) -> Term {
        Term::Enc(Box::new(payload), Box::new(key))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Name(_) | Term::Nonce(_) => true,
            Term::Var(_) => false,
            Term::Pair(a, b) => a.is_closed() && b.is_closed(),
            Term::Enc(p, k) => p.is_closed() && k.is_closed(),
        }
    }

    /// Free variables in first-occurrence (left-to-right) order.
    pub fn vars(&self) -> Vec<String> {
        fn walk(t: &Term, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
            match t {
                Term::Var(v) => {
                    if seen.insert(v.clone()) {
                        out.push(v.clone());
                    }
                }
                Term::Pair(a, b) | Term::Enc(a, b) => {
                    walk(a, seen, out);
                    walk(b, seen, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Apply a substitution; unbound variables stay in place. Distinct
    /// variables are independent, so substitutions commute.
    pub fn subst(&self, binding: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Pair(a, b) => Term::pair(a.subst(binding), b.subst(binding)),
            Term::Enc(p, k) => Term::enc(p.subst(binding), k.subst(binding)),
            _ => self.clone(),
        }
    }

    /// Round-trippable grammar form: `enc(pair(A, var m), pk(B))`.
    pub fn grammar_string(&self) -> String {
        match self {
            Term::Name(n) => n.clone(),
            Term::Nonce(n) => format!("nonce({n})"),
            Term::Var(v) => format!("var {v}"),
            Term::Pair(a, b) => format!("pair({}, {})", a.grammar_string(), b.grammar_string()),
            Term::Enc(p, k) => format!("enc({}, pk({}))", p.grammar_string(), k.grammar_string()),
        }
    }
}

/// Whiteboard rendering: `{A,m}_B` for envelopes, tuples flattened.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn flat(t: &Term, out: &mut String) {
            match t {
                Term::Pair(a, b) => {
                    flat(a, out);
                    out.push(',');
                    flat(b, out);
                }
                other => out.push_str(&leaf(other)),
            }
        }
        fn leaf(t: &Term) -> String {
            match t {
                Term::Name(n) | Term::Nonce(n) | Term::Var(n) => n.clone(),
                Term::Enc(p, k) => {
                    let mut inner = String::new();
                    flat(p, &mut inner);
                    format!("{{{}}}_{}", inner, leaf(k))
                }
                Term::Pair(_, _) => {
                    let mut inner = String::new();
                    flat(t, &mut inner);
                    format!("({inner})")
                }
            }
        }
        write!(f, "{}", leaf(self))
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.grammar_string())
    }
}

/// Parse the term grammar. Bare identifiers listed in `params` become
/// variables (role parameters); all other bare identifiers are agent names.
pub fn parse_term(text: &str, params: &BTreeSet<String>) -> Result<Term, ProtocolError> {
    struct P<'a> {
        tokens: Vec<String>,
        pos: usize,
        text: &'a str,
        params: &'a BTreeSet<String>,
    }
    impl<'a> P<'a> {
        fn err(&self, reason: &str) -> ProtocolError {
            ProtocolError::Parse {
                text: self.text.to_owned(),
                reason: reason.to_owned(),
            }
        }
        fn peek(&self) -> Option<&str> {
            self.tokens.get(self.pos).map(String::as_str)
        }
        fn next(&mut self) -> Option<String> {
            let t = self.tokens.get(self.pos).cloned();
            self.pos += 1;
            t
        }
        fn expect(&mut self, t: &str) -> Result<(), ProtocolError> {
            match self.next() {
                Some(got) if got == t => Ok(()),
                got => Err(self.err(&format!("expected {t:?}, got {got:?}"))),
            }
        }
        fn ident(&mut self) -> Result<String, ProtocolError> {
            match self.next() {
                Some(t) if t != "(" && t != ")" && t != "," => Ok(t),
                got => Err(self.err(&format!("expected identifier, got {got:?}"))),
            }
        }
        fn term(&mut self) -> Result<Term, ProtocolError> {
            let head = self.ident()?;
            match head.as_str() {
                "enc" => {
                    self.expect("(")?;
                    let payload = self.term()?;
                    self.expect(",")?;
                    self.expect("pk")?;
                    self.expect("(")?;
                    let key = self.atom()?;
                    self.expect(")")?;
                    self.expect(")")?;
                    Ok(Term::enc(payload, key))
                }
                "pair" => {
                    self.expect("(")?;
                    let mut items = vec![self.term()?];
                    while self.peek() == Some(",") {
                        self.next();
                        items.push(self.term()?);
                    }
                    self.expect(")")?;
                    if items.len() < 2 {
                        return Err(self.err("pair needs at least two components"));
                    }
                    let mut t = items.pop().unwrap();
                    while let Some(prev) = items.pop() {
                        t = Term::pair(prev, t);
                    }
                    Ok(t)
                }
                "var" => Ok(Term::Var(self.ident()?)),
                "nonce" => {
                    self.expect("(")?;
                    let n = self.ident()?;
                    self.expect(")")?;
                    Ok(Term::Nonce(n))
                }
                "pk" => Err(self.err("pk(...) is only valid as an enc key")),
                other => Ok(self.atom_from(other.to_owned())),
            }
        }
        fn atom(&mut self) -> Result<Term, ProtocolError> {
            if self.peek() == Some("var") {
                self.next();
                return Ok(Term::Var(self.ident()?));
            }
            let id = self.ident()?;
            Ok(self.atom_from(id))
        }
        fn atom_from(&self, id: String) -> Term {
            if self.params.contains(&id) {
                Term::Var(id)
            } else {
                Term::Name(id)
            }
        }
    }
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' | ',' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    let mut p = P {
        tokens,
        pos: 0,
        text,
        params,
    };
    let t = p.term()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing tokens"));
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Pattern matching
// ---------------------------------------------------------------------------

/// Match a closed message against a pattern. Envelopes only open when the
/// matcher owns the private key for the envelope's (closed) key name;
/// repeated variables must bind consistently. Returns the most general
/// substitution, or `None` on failure.
pub fn pattern_match(
    msg: &Term,
    pat: &Term,
    owned_keys: &BTreeSet<String>,
) -> Option<BTreeMap<String, Term>> {
    fn go(
        msg: &Term,
        pat: &Term,
        owned: &BTreeSet<String>,
        opens_all: bool,
        binding: &mut BTreeMap<String, Term>,
    ) -> bool {
        match pat {
            Term::Var(v) => match binding.get(v) {
                Some(prev) => prev == msg,
                None => {
                    binding.insert(v.clone(), msg.clone());
                    true
                }
            },
            Term::Name(_) | Term::Nonce(_) => pat == msg,
            Term::Pair(pa, pb) => match msg {
                Term::Pair(ma, mb) => {
                    go(ma, pa, owned, opens_all, binding) && go(mb, pb, owned, opens_all, binding)
                }
                _ => false,
            },
            Term::Enc(pp, pk) => match msg {
                Term::Enc(mp, mk) => {
                    // The key must agree before the envelope is considered,
                    // and the matcher must be able to open it.
                    if !go(mk, pk, owned, opens_all, binding) {
                        return false;
                    }
                    let key_name = match pk.subst(binding) {
                        Term::Name(n) => n,
                        _ => return false,
                    };
                    if !opens_all && !owned.contains(&key_name) {
                        return false;
                    }
                    go(mp, pp, owned, opens_all, binding)
                }
                _ => false,
            },
        }
    }
    let mut binding = BTreeMap::new();
    if go(msg, pat, owned_keys, false, &mut binding) {
        Some(binding)
    } else {
        None
    }
}

/// Analyst-side matching: opens every envelope (used when checking the
/// state of the world, not an agent's capability).
pub fn analyst_match(msg: &Term, pat: &Term) -> Option<BTreeMap<String, Term>> {
    fn go(msg: &Term, pat: &Term, binding: &mut BTreeMap<String, Term>) -> bool {
        match pat {
            Term::Var(v) => match binding.get(v) {
                Some(prev) => prev == msg,
                None => {
                    binding.insert(v.clone(), msg.clone());
                    true
                }
            },
            Term::Name(_) | Term::Nonce(_) => pat == msg,
            Term::Pair(pa, pb) => match msg {
                Term::Pair(ma, mb) => go(ma, pa, binding) && go(mb, pb, binding),
                _ => false,
            },
            Term::Enc(pp, pk) => match msg {
                Term::Enc(mp, mk) => go(mk, pk, binding) && go(mp, pp, binding),
                _ => false,
            },
        }
    }
    let mut binding = BTreeMap::new();
    if go(msg, pat, &mut binding) {
        Some(binding)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Role scripts and protocol specifications
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Generate fresh values and bind them to the listed variables.
    Fresh(Vec<String>),
    /// Send the template instantiated with the current bindings.
    Send(Term),
    /// Wait for a message matching the pattern; bind its variables.
    Receive(Term),
}

/// One protocol role: ordered steps over parameters bound at instantiation
/// plus variables bound by fresh and receive steps. `partner` names the
/// parameter or variable holding the peer this role believes it talks to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleScript {
    pub name: String,
    pub params: Vec<String>,
    pub partner: String,
    pub steps: Vec<Step>,
}

impl RoleScript {
    /// Every send-template variable must be bound earlier (parameter,
    /// fresh, or receive), so that sent messages are always closed.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let mut bound: BTreeSet<String> = BTreeSet::new();
        for p in &self.params {
            if !bound.insert(p.clone()) {
                return Err(ProtocolError::DuplicateName {
                    kind: "parameter",
                    name: p.clone(),
                });
            }
        }
        for step in &self.steps {
            match step {
                Step::Fresh(vars) => {
                    for v in vars {
                        if !bound.insert(v.clone()) {
                            return Err(ProtocolError::DuplicateName {
                                kind: "variable",
                                name: v.clone(),
                            });
                        }
                    }
                }
                Step::Send(template) => {
                    for v in template.vars() {
                        if !bound.contains(&v) {
                            return Err(ProtocolError::UnboundInSend {
                                role: self.name.clone(),
                                var: v,
                            });
                        }
                    }
                }
                Step::Receive(pat) => {
                    bound.extend(pat.vars());
                }
            }
        }
        if !bound.contains(&self.partner) {
            return Err(ProtocolError::UnboundPartner {
                role: self.name.clone(),
                var: self.partner.clone(),
            });
        }
        Ok(())
    }

    /// Parameters after self, then fresh/receive variables in
    /// first-occurrence order: the display order of the state vector.
    fn display_slots(&self) -> Vec<String> {
        let mut slots: Vec<String> = self.params.iter().skip(1).cloned().collect();
        let mut seen: BTreeSet<String> = self.params.iter().cloned().collect();
        for step in &self.steps {
            match step {
                Step::Fresh(vars) => {
                    for v in vars {
                        if seen.insert(v.clone()) {
                            slots.push(v.clone());
                        }
                    }
                }
                Step::Receive(pat) => {
                    for v in pat.vars() {
                        if seen.insert(v.clone()) {
                            slots.push(v.clone());
                        }
                    }
                }
                Step::Send(_) => {}
            }
        }
        slots
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolSpec {
    pub name: String,
    pub roles: Vec<RoleScript>,
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let mut names = BTreeSet::new();
        for r in &self.roles {
            if !names.insert(r.name.clone()) {
                return Err(ProtocolError::DuplicateName {
                    kind: "role",
                    name: r.name.clone(),
                });
            }
            r.validate()?;
        }
        Ok(())
    }

    pub fn role(&self, name: &str) -> Result<&RoleScript, ProtocolError> {
        self.roles
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| ProtocolError::UnknownName {
                kind: "role",
                name: name.to_owned(),
            })
    }
}

// --- JSON forms -------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RoleFile {
    name: String,
    params: Vec<String>,
    partner: String,
    steps: Vec<StepFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StepFile {
    Fresh(Vec<String>),
    Send(String),
    Receive(String),
}

#[derive(Serialize, Deserialize)]
struct ProtocolFile {
    name: String,
    roles: Vec<RoleFile>,
}

impl ProtocolSpec {
    pub fn from_json(json: &str) -> Result<ProtocolSpec, ProtocolError> {
        let file: ProtocolFile = serde_json::from_str(json).map_err(|e| ProtocolError::Parse {
            text: "protocol file".to_owned(),
            reason: e.to_string(),
        })?;
        let mut roles = Vec::new();
        for r in file.roles {
            let params: BTreeSet<String> = r.params.iter().cloned().collect();
            let mut steps = Vec::new();
            let mut known = params.clone();
            for s in r.steps {
                steps.push(match s {
                    StepFile::Fresh(vars) => {
                        known.extend(vars.iter().cloned());
                        Step::Fresh(vars)
                    }
                    StepFile::Send(t) => Step::Send(parse_term(&t, &known)?),
                    StepFile::Receive(t) => {
                        let pat = parse_term(&t, &known)?;
                        known.extend(pat.vars());
                        Step::Receive(pat)
                    }
                });
            }
            roles.push(RoleScript {
                name: r.name,
                params: r.params,
                partner: r.partner,
                steps,
            });
        }
        let spec = ProtocolSpec {
            name: file.name,
            roles,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let file = ProtocolFile {
            name: self.name.clone(),
            roles: self
                .roles
                .iter()
                .map(|r| RoleFile {
                    name: r.name.clone(),
                    params: r.params.clone(),
                    partner: r.partner.clone(),
                    steps: r
                        .steps
                        .iter()
                        .map(|s| match s {
                            Step::Fresh(vars) => StepFile::Fresh(vars.clone()),
                            Step::Send(t) => StepFile::Send(t.grammar_string()),
                            Step::Receive(t) => StepFile::Receive(t.grammar_string()),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("protocol files serialize")
    }
}

// Note: parse_term treats bare identifiers as variables only when they are
// declared params/known variables, so receive patterns like
// `enc(pair(var m, var y), pk(self))` resolve `self` to a variable and the
// rest explicitly; in a receive pattern a bare previously-bound variable
// (e.g. `m` after `fresh m`) also resolves to a variable, enforcing the
// equality check the walkthrough describes.

// ---------------------------------------------------------------------------
// Scenarios: instances, the intruder, goals
// ---------------------------------------------------------------------------

/// A challenge-response authentication goal: the authenticator's challenge
/// and response message families, sharing the index variable (the freshness
/// token binding response to challenge).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChreSpec {
    pub authenticator: String,
    pub peer: String,
    pub challenge: Term,
    pub response: Term,
    pub index: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSpec {
    pub role: String,
    pub bindings: BTreeMap<String, Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub agents: Vec<String>,
    pub compromised: BTreeSet<String>,
    pub intruder_knowledge: Vec<Term>,
    pub instances: Vec<InstanceSpec>,
    pub goals: Vec<ChreSpec>,
    pub max_events: usize,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    role: String,
    bind: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct ChreFile {
    authenticator: String,
    peer: String,
    challenge: String,
    response: String,
    index: String,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    agents: Vec<String>,
    #[serde(default)]
    compromised: Vec<String>,
    #[serde(default)]
    intruder_knowledge: Vec<String>,
    instances: Vec<InstanceFile>,
    #[serde(default)]
    goals: Vec<ChreFile>,
    #[serde(default)]
    max_events: Option<usize>,
}

impl Scenario {
    pub fn from_json(json: &str) -> Result<Scenario, ProtocolError> {
        let file: ScenarioFile = serde_json::from_str(json).map_err(|e| ProtocolError::Parse {
            text: "scenario file".to_owned(),
            reason: e.to_string(),
        })?;
        let none = BTreeSet::new();
        let mut instances = Vec::new();
        for i in &file.instances {
            let mut bindings = BTreeMap::new();
            for (param, value) in &i.bind {
                let t = parse_term(value, &none)?;
                if !t.is_closed() {
                    return Err(ProtocolError::BadScenario(format!(
                        "binding {param}={value} is not closed"
                    )));
                }
                bindings.insert(param.clone(), t);
            }
            instances.push(InstanceSpec {
                role: i.role.clone(),
                bindings,
            });
        }
        let mut goals = Vec::new();
        for g in &file.goals {
            goals.push(ChreSpec {
                authenticator: g.authenticator.clone(),
                peer: g.peer.clone(),
                challenge: parse_term(&g.challenge, &none)?,
                response: parse_term(&g.response, &none)?,
                index: g.index.clone(),
            });
        }
        let mut knowledge = Vec::new();
        for k in &file.intruder_knowledge {
            knowledge.push(parse_term(k, &none)?);
        }
        Ok(Scenario {
            agents: file.agents,
            compromised: file.compromised.into_iter().collect(),
            intruder_knowledge: knowledge,
            instances,
            goals,
            max_events: file.max_events.unwrap_or(0),
        })
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            agents: self.agents.clone(),
            compromised: self.compromised.iter().cloned().collect(),
            intruder_knowledge: self
                .intruder_knowledge
                .iter()
                .map(Term::grammar_string)
                .collect(),
            instances: self
                .instances
                .iter()
                .map(|i| InstanceFile {
                    role: i.role.clone(),
                    bind: i
                        .bindings
                        .iter()
                        .map(|(k, v)| (k.clone(), v.grammar_string()))
                        .collect(),
                })
                .collect(),
            goals: self
                .goals
                .iter()
                .map(|g| ChreFile {
                    authenticator: g.authenticator.clone(),
                    peer: g.peer.clone(),
                    challenge: g.challenge.grammar_string(),
                    response: g.response.grammar_string(),
                    index: g.index.clone(),
                })
                .collect(),
            max_events: Some(self.max_events),
        };
        serde_json::to_string_pretty(&file).expect("scenario files serialize")
    }
}

// ---------------------------------------------------------------------------
// Intruder knowledge
// ---------------------------------------------------------------------------

/// The network adversary's knowledge: a set of observed closed terms,
/// analyzed by unpairing and by opening envelopes whose private keys it
/// owns. Derivability composes analyzed parts by pairing and encrypting
/// (agent names, hence public keys, are public).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct IntruderState {
    raw: BTreeSet<Term>,
    analyzed: BTreeSet<Term>,
    owned_keys: BTreeSet<String>,
    public_names: BTreeSet<String>,
    fresh_nonce: Term,
}

impl IntruderState {
    pub fn new(
        public_names: BTreeSet<String>,
        owned_keys: BTreeSet<String>,
        initial: &[Term],
    ) -> IntruderState {
        let mut s = IntruderState {
            raw: initial.iter().cloned().collect(),
            analyzed: BTreeSet::new(),
            owned_keys,
            public_names,
            fresh_nonce: Term::Nonce("e0".to_owned()),
        };
        s.saturate();
        s
    }

    /// Record an observed message and re-close the analysis.
    pub fn observe(&mut self, msg: Term) {
        self.raw.insert(msg);
        self.saturate();
    }

    /// Fixpoint of unpair + decrypt-with-owned-key over the raw set.
    fn saturate(&mut self) {
        let mut analyzed = self.raw.clone();
        let mut frontier: Vec<Term> = analyzed.iter().cloned().collect();
        while let Some(t) = frontier.pop() {
            let parts: Vec<Term> = match &t {
                Term::Pair(a, b) => vec![(**a).clone(), (**b).clone()],
                Term::Enc(p, k) => match &**k {
                    Term::Name(n) if self.owned_keys.contains(n) => vec![(**p).clone()],
                    _ => vec![],
                },
                _ => vec![],
            };
            for part in parts {
                if analyzed.insert(part.clone()) {
                    frontier.push(part);
                }
            }
        }
        self.analyzed = analyzed;
    }

    pub fn analyzed(&self) -> &BTreeSet<Term> {
        &self.analyzed
    }

    /// Can the adversary produce this closed term?
    pub fn derivable(&self, t: &Term) -> bool {
        if self.analyzed.contains(t) || *t == self.fresh_nonce {
            return true;
        }
        match t {
            Term::Name(n) => self.public_names.contains(n),
            Term::Pair(a, b) => self.derivable(a) && self.derivable(b),
            Term::Enc(p, k) => matches!(&**k, Term::Name(_)) && self.derivable(p),
            _ => false,
        }
    }

    /// Finite instantiation pool for receive-pattern variables: everything
    /// analyzed, all public names, and one adversary-generated nonce. For
    /// protocols whose receive patterns bind variables at atomic positions,
    /// any attack has an equivalent within this pool.
    pub fn pool(&self) -> Vec<Term> {
        let mut pool: BTreeSet<Term> = self.analyzed.clone();
        pool.extend(self.public_names.iter().map(|n| Term::Name(n.clone())));
        pool.insert(self.fresh_nonce.clone());
        pool.into_iter().collect()
    }
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Send,
    Receive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub instance: usize,
    pub subject: String,
    pub action: Action,
    pub message: Term,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            Action::Send => write!(f, "<{}>_{}", self.message, self.subject),
            Action::Receive => write!(f, "({})_{}", self.message, self.subject),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceSnapshot {
    pub role: String,
    pub agent: String,
    pub sigma: BTreeMap<String, Term>,
    pub pc: usize,
    pub state_vector: String,
    /// The parameter or variable holding this instance's believed partner.
    pub partner_key: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolicTrace {
    pub events: Vec<Event>,
    pub instances: Vec<InstanceSnapshot>,
}

impl SymbolicTrace {
    /// Independent re-check that the network could deliver every receive:
    /// replay the trace against a fresh adversary state.
    pub fn network_sound(
        &self,
        public_names: &BTreeSet<String>,
        owned_keys: &BTreeSet<String>,
        initial: &[Term],
    ) -> bool {
        let mut k = IntruderState::new(public_names.clone(), owned_keys.clone(), initial);
        for e in &self.events {
            match e.action {
                Action::Send => k.observe(e.message.clone()),
                Action::Receive => {
                    if !k.derivable(&e.message) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn message_sequence(&self) -> Vec<String> {
        self.events.iter().map(|e| e.to_string()).collect()
    }
}

// ---------------------------------------------------------------------------
// Role instances
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Instance {
    role_idx: usize,
    sigma: BTreeMap<String, Term>,
    pc: usize,
}

impl Instance {
    fn agent(&self, spec: &ProtocolSpec) -> String {
        let script = &spec.roles[self.role_idx];
        match self.sigma.get(&script.params[0]) {
            Some(Term::Name(n)) => n.clone(),
            _ => "?".to_owned(),
        }
    }

    fn next_step<'a>(&self, spec: &'a ProtocolSpec) -> Option<&'a Step> {
        spec.roles[self.role_idx].steps.get(self.pc)
    }

    /// The walkthrough-style state vector: own name, then each slot in
    /// declaration order — its value if bound, its variable name if the
    /// next step is a receive binding it, omitted otherwise — then the
    /// step counter.
    fn state_vector(&self, spec: &ProtocolSpec) -> String {
        let script = &spec.roles[self.role_idx];
        let next_receive_vars: BTreeSet<String> = match self.next_step(spec) {
            Some(Step::Receive(pat)) => pat
                .vars()
                .into_iter()
                .filter(|v| !self.sigma.contains_key(v))
                .collect(),
            _ => BTreeSet::new(),
        };
        let mut parts = vec![self.agent(spec)];
        for slot in script.display_slots() {
            if let Some(value) = self.sigma.get(&slot) {
                parts.push(value.to_string());
            } else if next_receive_vars.contains(&slot) {
                parts.push(slot.clone());
            }
        }
        parts.push(self.pc.to_string());
        format!("({})", parts.join(","))
    }

    fn snapshot(&self, spec: &ProtocolSpec) -> InstanceSnapshot {
        InstanceSnapshot {
            role: spec.roles[self.role_idx].name.clone(),
            agent: self.agent(spec),
            sigma: self.sigma.clone(),
            pc: self.pc,
            state_vector: self.state_vector(spec),
            partner_key: spec.roles[self.role_idx].partner.clone(),
        }
    }
}

/// Build runtime instances; fresh variables get globally distinct display
/// names (the variable name, primed once per earlier instance that uses the
/// same name).
fn instantiate(
    spec: &ProtocolSpec,
    scenario_instances: &[InstanceSpec],
) -> Result<(Vec<Instance>, Vec<BTreeMap<String, Term>>), ProtocolError> {
    let mut instances = Vec::new();
    let mut fresh_names: Vec<BTreeMap<String, Term>> = Vec::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for ispec in scenario_instances {
        let role_idx = spec
            .roles
            .iter()
            .position(|r| r.name == ispec.role)
            .ok_or_else(|| ProtocolError::UnknownName {
                kind: "role",
                name: ispec.role.clone(),
            })?;
        let script = &spec.roles[role_idx];
        let mut sigma = BTreeMap::new();
        for p in &script.params {
            let v = ispec.bindings.get(p).ok_or_else(|| {
                ProtocolError::BadScenario(format!(
                    "instance of role {:?} does not bind parameter {:?}",
                    ispec.role, p
                ))
            })?;
            sigma.insert(p.clone(), v.clone());
        }
        let mut names = BTreeMap::new();
        for step in &script.steps {
            if let Step::Fresh(vars) = step {
                for v in vars {
                    let primes = used.entry(v.clone()).or_insert(0);
                    let display = format!("{}{}", v, "'".repeat(*primes));
                    *primes += 1;
                    names.insert(v.clone(), Term::Nonce(display));
                }
            }
        }
        instances.push(Instance {
            role_idx,
            sigma,
            pc: 0,
        });
        fresh_names.push(names);
    }
    Ok((instances, fresh_names))
}

/// Run fresh steps silently (they produce no events but advance the
/// counter, as in the walkthrough's state changes).
fn run_fresh_steps(
    spec: &ProtocolSpec,
    instances: &mut [Instance],
    fresh_names: &[BTreeMap<String, Term>],
) {
    loop {
        let mut progressed = false;
        for (i, inst) in instances.iter_mut().enumerate() {
            while let Some(Step::Fresh(vars)) = inst.next_step(spec) {
                for v in vars.clone() {
                    let value = fresh_names[i][&v].clone();
                    inst.sigma.insert(v, value);
                }
                inst.pc += 1;
                progressed = true;
            }
        }
        if !progressed {
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Honest runs
// ---------------------------------------------------------------------------

/// Run the protocol among honest parties only: messages flow directly, each
/// receive taking the oldest undelivered message that matches its pattern.
/// Returns the unique interleaving under round-robin scheduling in
/// declaration order.
pub fn run_honest(
    spec: &ProtocolSpec,
    scenario_instances: &[InstanceSpec],
) -> Result<SymbolicTrace, ProtocolError> {
    spec.validate()?;
    let (mut instances, fresh_names) = instantiate(spec, scenario_instances)?;
    let mut pending: Vec<(Term, bool)> = Vec::new();
    let mut events = Vec::new();
    loop {
        run_fresh_steps(spec, &mut instances, &fresh_names);
        let mut progressed = false;
        for i in 0..instances.len() {
            run_fresh_steps(spec, &mut instances, &fresh_names);
            let (step, agent) = match instances[i].next_step(spec) {
                Some(s) => (s.clone(), instances[i].agent(spec)),
                None => continue,
            };
            match step {
                Step::Fresh(_) => unreachable!("fresh steps ran above"),
                Step::Send(template) => {
                    let msg = template.subst(&instances[i].sigma);
                    if !msg.is_closed() {
                        return Err(ProtocolError::OpenSend {
                            instance: i,
                            step: instances[i].pc,
                        });
                    }
                    pending.push((msg.clone(), false));
                    events.push(Event {
                        instance: i,
                        subject: agent,
                        action: Action::Send,
                        message: msg,
                    });
                    instances[i].pc += 1;
                    progressed = true;
                }
                Step::Receive(pat) => {
                    let pattern = pat.subst(&instances[i].sigma);
                    let owned: BTreeSet<String> = [agent.clone()].into();
                    let mut delivered = None;
                    for (msg, taken) in pending.iter_mut() {
                        if *taken {
                            continue;
                        }
                        if let Some(binding) = pattern_match(msg, &pattern, &owned) {
                            *taken = true;
                            delivered = Some((msg.clone(), binding));
                            break;
                        }
                    }
                    if let Some((msg, binding)) = delivered {
                        instances[i].sigma.extend(binding);
                        events.push(Event {
                            instance: i,
                            subject: agent,
                            action: Action::Receive,
                            message: msg,
                        });
                        instances[i].pc += 1;
                        progressed = true;
                    }
                }
            }
        }
        if instances
            .iter()
            .all(|inst| inst.next_step(spec).is_none())
        {
            break;
        }
        if !progressed {
            let stuck = instances
                .iter()
                .position(|inst| inst.next_step(spec).is_some())
                .unwrap();
            return Err(ProtocolError::Stuck {
                instance: stuck,
                step: instances[stuck].pc,
            });
        }
    }
    Ok(SymbolicTrace {
        instances: instances.iter().map(|i| i.snapshot(spec)).collect(),
        events,
    })
}

// ---------------------------------------------------------------------------
// Challenge-response monitoring
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthLevel {
    /// The peer never performed the receive-respond interval: violated.
    None,
    /// The peer responded, but toward a different believed partner:
    /// aliveness only.
    Ping,
    /// The peer responded and its believed partner is the authenticator.
    Agreement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChallengeVerdict {
    pub goal: usize,
    pub challenge: Term,
    pub response: Term,
    pub satisfied: bool,
    pub level: AuthLevel,
    /// Indices of the authenticator's challenge send and response receive.
    pub challenge_at: usize,
    pub completed_at: usize,
    /// The instance that performed the peer's response send, if any.
    pub responder: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Tracker {
    index_value: Term,
    peer_received: bool,
    /// Response terms the peer sent inside the window, with the sender.
    responses: BTreeMap<Term, usize>,
}

/// Incremental monitors for the authentication goals: one tracker per
/// outstanding challenge, keyed by the exact challenge term. A verdict is
/// produced at each completion (the authenticator's receive of a matching
/// response); the completion is a violation unless the peer received that
/// exact challenge and then sent that exact response inside the window.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Monitors {
    trackers: BTreeMap<(usize, Term), Tracker>,
}

impl Monitors {
    fn observe(
        &mut self,
        goals: &[ChreSpec],
        event: &Event,
    ) -> Vec<(usize, Term, Term, bool, Option<usize>)> {
        let mut completions = Vec::new();
        for (g, goal) in goals.iter().enumerate() {
            if event.action == Action::Send && event.subject == goal.authenticator {
                if let Some(binding) = analyst_match(&event.message, &goal.challenge) {
                    if let Some(index_value) = binding.get(&goal.index) {
                        self.trackers.insert(
                            (g, event.message.clone()),
                            Tracker {
                                index_value: index_value.clone(),
                                peer_received: false,
                                responses: BTreeMap::new(),
                            },
                        );
                    }
                }
            }
            if event.subject == goal.peer {
                match event.action {
                    Action::Receive => {
                        for ((gi, chal), tracker) in self.trackers.iter_mut() {
                            if *gi == g && *chal == event.message {
                                tracker.peer_received = true;
                            }
                        }
                    }
                    Action::Send => {
                        if let Some(binding) = analyst_match(&event.message, &goal.response) {
                            let idx = binding.get(&goal.index).cloned();
                            for ((gi, _), tracker) in self.trackers.iter_mut() {
                                if *gi == g
                                    && tracker.peer_received
                                    && idx.as_ref() == Some(&tracker.index_value)
                                {
                                    tracker
                                        .responses
                                        .insert(event.message.clone(), event.instance);
                                }
                            }
                        }
                    }
                }
            }
            if event.action == Action::Receive && event.subject == goal.authenticator {
                if let Some(binding) = analyst_match(&event.message, &goal.response) {
                    if let Some(idx) = binding.get(&goal.index) {
                        let key = self
                            .trackers
                            .iter()
                            .find(|((gi, _), t)| *gi == g && t.index_value == *idx)
                            .map(|(k, _)| k.clone());
                        if let Some(key) = key {
                            let tracker = self.trackers.remove(&key).unwrap();
                            let ok = tracker.peer_received
                                && tracker.responses.contains_key(&event.message);
                            let responder = tracker.responses.get(&event.message).copied();
                            completions.push((g, key.1, event.message.clone(), ok, responder));
                        }
                    }
                }
            }
        }
        completions
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChreReport {
    pub verdicts: Vec<ChallengeVerdict>,
    pub satisfied: bool,
}

/// Check the challenge-response authentication goals over a recorded trace:
/// for every completed challenge (sent, then a matching response received),
/// the peer must have received that exact challenge and then sent that
/// exact response strictly inside the window.
pub fn check_chre(trace: &SymbolicTrace, goals: &[ChreSpec]) -> ChreReport {
    let mut monitors = Monitors::default();
    let mut verdicts = Vec::new();
    let mut challenge_at: BTreeMap<(usize, Term), usize> = BTreeMap::new();
    for (at, event) in trace.events.iter().enumerate() {
        for (g, goal) in goals.iter().enumerate() {
            if event.action == Action::Send
                && event.subject == goal.authenticator
                && analyst_match(&event.message, &goal.challenge).is_some()
            {
                challenge_at
                    .entry((g, event.message.clone()))
                    .or_insert(at);
            }
        }
        for (g, challenge, response, ok, responder) in monitors.observe(goals, event) {
            let level = if !ok {
                AuthLevel::None
            } else {
                let believed_partner = responder.and_then(|r| {
                    let snap = trace.instances.get(r)?;
                    match snap.sigma.get(&snap.partner_key) {
                        Some(Term::Name(n)) => Some(n.clone()),
                        _ => None,
                    }
                });
                if believed_partner.as_deref() == Some(goals[g].authenticator.as_str()) {
                    AuthLevel::Agreement
                } else {
                    AuthLevel::Ping
                }
            };
            verdicts.push(ChallengeVerdict {
                goal: g,
                challenge: challenge.clone(),
                response,
                satisfied: ok,
                level,
                challenge_at: challenge_at
                    .get(&(g, challenge.clone()))
                    .copied()
                    .unwrap_or(0),
                completed_at: at,
                responder,
            });
        }
    }
    let satisfied = verdicts.iter().all(|v| v.satisfied);
    ChreReport {
        verdicts,
        satisfied,
    }
}

// ---------------------------------------------------------------------------
// Adversarial search
// ---------------------------------------------------------------------------

/// Outcome of a bounded attack search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackReport {
    pub trace: SymbolicTrace,
    pub verdict: ChallengeVerdict,
    pub states_explored: usize,
}

struct Search<'a> {
    spec: &'a ProtocolSpec,
    goals: &'a [ChreSpec],
    fresh_names: Vec<BTreeMap<String, Term>>,
    max_events: usize,
    visited: BTreeMap<String, usize>,
    states: usize,
}

#[derive(Clone)]
struct SearchState {
    instances: Vec<Instance>,
    knowledge: IntruderState,
    monitors: Monitors,
    sent: BTreeSet<Term>,
}

impl SearchState {
    fn key(&self) -> String {
        format!(
            "{:?}|{:?}|{:?}",
            self.instances, self.knowledge.raw, self.monitors
        )
    }
}

impl<'a> Search<'a> {
    fn dfs(
        &mut self,
        state: &SearchState,
        trace: &mut Vec<Event>,
    ) -> Option<(Vec<Event>, Vec<Instance>, ChallengeVerdict)> {
        self.states += 1;
        if trace.len() >= self.max_events {
            return None;
        }
        for i in 0..state.instances.len() {
            let step = match state.instances[i].next_step(self.spec) {
                Some(s) => s.clone(),
                None => continue,
            };
            let agent = state.instances[i].agent(self.spec);
            match step {
                Step::Fresh(_) => unreachable!("fresh steps run eagerly"),
                Step::Send(template) => {
                    let msg = template.subst(&state.instances[i].sigma);
                    if !msg.is_closed() || ill_keyed(&msg) {
                        continue; // this branch is stuck, not an error
                    }
                    let event = Event {
                        instance: i,
                        subject: agent,
                        action: Action::Send,
                        message: msg.clone(),
                    };
                    let mut next = state.clone();
                    next.instances[i].pc += 1;
                    run_fresh_steps(self.spec, &mut next.instances, &self.fresh_names);
                    next.knowledge.observe(msg.clone());
                    next.sent.insert(msg);
                    if let Some(found) = self.step(next, event, trace) {
                        return Some(found);
                    }
                }
                Step::Receive(pat) => {
                    let pattern = pat.subst(&state.instances[i].sigma);
                    let owned: BTreeSet<String> = [agent.clone()].into();
                    for (msg, binding) in
                        candidate_messages(&pattern, &state.knowledge, &state.sent, &owned)
                    {
                        let event = Event {
                            instance: i,
                            subject: agent.clone(),
                            action: Action::Receive,
                            message: msg,
                        };
                        let mut next = state.clone();
                        next.instances[i].sigma.extend(binding);
                        next.instances[i].pc += 1;
                        run_fresh_steps(self.spec, &mut next.instances, &self.fresh_names);
                        if let Some(found) = self.step(next, event, trace) {
                            return Some(found);
                        }
                    }
                }
            }
        }
        None
    }

    fn step(
        &mut self,
        mut next: SearchState,
        event: Event,
        trace: &mut Vec<Event>,
    ) -> Option<(Vec<Event>, Vec<Instance>, ChallengeVerdict)> {
        let at = trace.len();
        trace.push(event.clone());
        let completions = next.monitors.observe(self.goals, &event);
        for (g, challenge, response, ok, responder) in completions {
            if !ok {
                let verdict = ChallengeVerdict {
                    goal: g,
                    challenge,
                    response,
                    satisfied: false,
                    level: AuthLevel::None,
                    challenge_at: 0,
                    completed_at: at,
                    responder,
                };
                let found = (trace.clone(), next.instances.clone(), verdict);
                trace.pop();
                return Some(found);
            }
        }
        // Revisit a seen state only from a strictly shallower depth: with a
        // depth bound, a state reached earlier in the trace has more budget
        // left, so skipping it there would lose completeness.
        let key = next.key();
        let depth = trace.len();
        let explore = match self.visited.get(&key) {
            Some(&best) if best <= depth => false,
            _ => {
                self.visited.insert(key, depth);
                true
            }
        };
        if explore {
            if let Some(found) = self.dfs(&next, trace) {
                trace.pop();
                return Some(found);
            }
        }
        trace.pop();
        None
    }
}

fn ill_keyed(t: &Term) -> bool {
    match t {
        Term::Enc(p, k) => !matches!(&**k, Term::Name(_)) || ill_keyed(p),
        Term::Pair(a, b) => ill_keyed(a) || ill_keyed(b),
        _ => false,
    }
}

/// All closed, adversary-derivable instantiations of a receive pattern that
/// the receiving agent can match. Honest-origin messages (previously sent
/// by some instance) come first, then adversary syntheses, each group in
/// term order.
fn candidate_messages(
    pattern: &Term,
    knowledge: &IntruderState,
    sent: &BTreeSet<Term>,
    owned: &BTreeSet<String>,
) -> Vec<(Term, BTreeMap<String, Term>)> {
    let mut out: Vec<(bool, Term, BTreeMap<String, Term>)> = Vec::new();
    let mut seen = BTreeSet::new();
    // Forwarding: any known term that matches the pattern can be delivered
    // whole, even when its bound parts are not separately derivable.
    for msg in knowledge.analyzed() {
        if let Some(binding) = pattern_match(msg, pattern, owned) {
            if seen.insert(msg.clone()) {
                out.push((!sent.contains(msg), msg.clone(), binding));
            }
        }
    }
    // Synthesis: instantiate the pattern's variables from the derivable
    // pool and keep the instantiations the adversary can actually build.
    let vars = pattern.vars();
    let pool = knowledge.pool();
    let mut assignments: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
    for v in &vars {
        let mut next = Vec::new();
        for a in &assignments {
            for t in &pool {
                let mut b = a.clone();
                b.insert(v.clone(), t.clone());
                next.push(b);
            }
        }
        assignments = next;
    }
    for a in assignments {
        let msg = pattern.subst(&a);
        if !msg.is_closed() || !knowledge.derivable(&msg) || !seen.insert(msg.clone()) {
            continue;
        }
        if let Some(binding) = pattern_match(&msg, pattern, owned) {
            out.push((!sent.contains(&msg), msg, binding));
        }
    }
    out.sort();
    out.into_iter().map(|(_, m, b)| (m, b)).collect()
}

/// Bounded search for a violation of any authentication goal: depth-first
/// over all interleavings of honest steps and adversarial deliveries, in a
/// fixed deterministic order. Returns the first violating trace found, or
/// None if the bound is exhausted.
pub fn search_attack(
    spec: &ProtocolSpec,
    scenario: &Scenario,
) -> Result<Option<AttackReport>, ProtocolError> {
    spec.validate()?;
    for c in &scenario.compromised {
        if !scenario.agents.contains(c) {
            return Err(ProtocolError::UnknownName {
                kind: "agent",
                name: c.clone(),
            });
        }
    }
    let (mut instances, fresh_names) = instantiate(spec, &scenario.instances)?;
    run_fresh_steps(spec, &mut instances, &fresh_names);
    let public_names: BTreeSet<String> = scenario.agents.iter().cloned().collect();
    let knowledge = IntruderState::new(
        public_names,
        scenario.compromised.clone(),
        &scenario.intruder_knowledge,
    );
    let max_events = if scenario.max_events > 0 {
        scenario.max_events
    } else {
        instances
            .iter()
            .map(|i| {
                spec.roles[i.role_idx]
                    .steps
                    .iter()
                    .filter(|s| !matches!(s, Step::Fresh(_)))
                    .count()
            })
            .sum()
    };
    let mut search = Search {
        spec,
        goals: &scenario.goals,
        fresh_names,
        max_events,
        visited: BTreeMap::new(),
        states: 0,
    };
    let state = SearchState {
        instances,
        knowledge,
        monitors: Monitors::default(),
        sent: BTreeSet::new(),
    };
    let found = search.dfs(&state, &mut Vec::new());
    Ok(found.map(|(events, instances, mut verdict)| {
        let trace = SymbolicTrace {
            instances: instances.iter().map(|i| i.snapshot(spec)).collect(),
            events,
        };
        // Recover the challenge position for the report.
        verdict.challenge_at = trace
            .events
            .iter()
            .position(|e| e.action == Action::Send && e.message == verdict.challenge)
            .unwrap_or(0);
        AttackReport {
            trace,
            verdict,
            states_explored: search.states,
        }
    }))
}

// ---------------------------------------------------------------------------
// Built-in protocols
// ---------------------------------------------------------------------------

/// The classic three-message mutual-authentication protocol: the initiator
/// names itself in its challenge, the responder does not — the gap behind
/// the man-in-the-middle attack.
pub const NSPK_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/nspk.json"));

/// The repaired variant: the responder also names itself inside its
/// challenge, so the initiator can detect a swapped responder.
pub const NSPK_FIXED_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/nspk-fixed.json"));

/// One-sided aliveness check: send a fresh secret under the peer's key,
/// accept the echo under one's own.
pub const PING_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/ping.json"));

/// The aliveness check without freshness: the probe value is a parameter,
/// so a replay of a previously seen value completes it.
pub const PING_STATIC_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/ping-static.json"));

pub fn nspk() -> ProtocolSpec {
    ProtocolSpec::from_json(NSPK_JSON).expect("built-in protocol parses")
}

pub fn nspk_fixed() -> ProtocolSpec {
    ProtocolSpec::from_json(NSPK_FIXED_JSON).expect("built-in protocol parses")
}

pub fn ping() -> ProtocolSpec {
    ProtocolSpec::from_json(PING_JSON).expect("built-in protocol parses")
}

pub fn ping_static() -> ProtocolSpec {
    ProtocolSpec::from_json(PING_STATIC_JSON).expect("built-in protocol parses")
}

fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, Term> {
    pairs
        .iter()
        .map(|(k, v)| {
            (
                (*k).to_owned(),
                parse_term(v, &BTreeSet::new()).expect("binding term parses"),
            )
        })
        .collect()
}

/// The responder-side authentication goal of the classic protocol: the
/// responder authenticates the initiator through the challenge it embeds in
/// its second message.
pub fn responder_authenticates_initiator(responder: &str, initiator: &str) -> ChreSpec {
    let none = BTreeSet::new();
    ChreSpec {
        authenticator: responder.to_owned(),
        peer: initiator.to_owned(),
        challenge: parse_term(
            &format!("enc(pair(var x, var n), pk({initiator}))"),
            &none,
        )
        .unwrap(),
        response: parse_term(&format!("enc(var n, pk({responder}))"), &none).unwrap(),
        index: "n".to_owned(),
    }
}

/// Same goal family against the repaired responder message shape.
pub fn responder_authenticates_initiator_fixed(responder: &str, initiator: &str) -> ChreSpec {
    let none = BTreeSet::new();
    ChreSpec {
        authenticator: responder.to_owned(),
        peer: initiator.to_owned(),
        challenge: parse_term(
            &format!("enc(pair(var x, {responder}, var n), pk({initiator}))"),
            &none,
        )
        .unwrap(),
        response: parse_term(&format!("enc(var n, pk({responder}))"), &none).unwrap(),
        index: "n".to_owned(),
    }
}

/// The initiator-side goal: the initiator authenticates the responder it
/// addressed its first message to.
pub fn initiator_authenticates_responder(initiator: &str, responder: &str) -> ChreSpec {
    let none = BTreeSet::new();
    ChreSpec {
        authenticator: initiator.to_owned(),
        peer: responder.to_owned(),
        challenge: parse_term(
            &format!("enc(pair({initiator}, var m), pk({responder}))"),
            &none,
        )
        .unwrap(),
        response: parse_term(
            &format!("enc(pair(var m, var y), pk({initiator}))"),
            &none,
        )
        .unwrap(),
        index: "m".to_owned(),
    }
}

/// Initiator-side goal for the repaired message shapes.
pub fn initiator_authenticates_responder_fixed(initiator: &str, responder: &str) -> ChreSpec {
    let none = BTreeSet::new();
    ChreSpec {
        authenticator: initiator.to_owned(),
        peer: responder.to_owned(),
        challenge: parse_term(
            &format!("enc(pair({initiator}, var m), pk({responder}))"),
            &none,
        )
        .unwrap(),
        response: parse_term(
            &format!("enc(pair(var m, {responder}, var y), pk({initiator}))"),
            &none,
        )
        .unwrap(),
        index: "m".to_owned(),
    }
}

/// The man-in-the-middle scenario: an honest initiator talks to a
/// compromised peer, an honest responder waits, and the question is whether
/// the responder can be fooled about the initiator.
pub fn mitm_scenario() -> Scenario {
    Scenario {
        agents: vec!["A".to_owned(), "B".to_owned(), "C".to_owned()],
        compromised: ["B".to_owned()].into(),
        intruder_knowledge: vec![],
        instances: vec![
            InstanceSpec {
                role: "initiator".to_owned(),
                bindings: bind(&[("self", "A"), ("peer", "B")]),
            },
            InstanceSpec {
                role: "responder".to_owned(),
                bindings: bind(&[("self", "C")]),
            },
        ],
        goals: vec![responder_authenticates_initiator("C", "A")],
        max_events: 7,
    }
}

/// The same scenario against the repaired protocol (goal shapes updated).
pub fn mitm_scenario_fixed() -> Scenario {
    Scenario {
        goals: vec![responder_authenticates_initiator_fixed("C", "A")],
        ..mitm_scenario()
    }
}

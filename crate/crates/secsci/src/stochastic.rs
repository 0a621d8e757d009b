//! Probabilistic channels as exact-rational stochastic matrices: frequency
//! estimation, generative sources and the chain law, Bayesian inversion,
//! entropy, probabilistic noninterference, and perfect secrecy of ciphers.

use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::access::Poset;

/// Exact probability value.
pub type Q = BigRational;

/// Build an exact rational from an integer pair.
pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parse "3/4", "1", or "0.25"-free rational notation.
pub fn parse_q(text: &str) -> Result<Q, StochasticError> {
    text.trim()
        .parse::<Q>()
        .map_err(|_| StochasticError::BadRational {
            text: text.to_owned(),
        })
}

fn ser_q<S: Serializer>(value: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_string())
}

fn ser_q_map<S: Serializer>(value: &BTreeMap<String, Q>, s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(value.len()))?;
    for (k, v) in value {
        map.serialize_entry(k, &v.to_string())?;
    }
    map.end()
}

fn ser_q_rows<S: Serializer>(
    value: &BTreeMap<String, BTreeMap<String, Q>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(value.len()))?;
    for (k, row) in value {
        let printable: BTreeMap<&String, String> =
            row.iter().map(|(y, p)| (y, p.to_string())).collect();
        map.serialize_entry(k, &printable)?;
    }
    map.end()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StochasticError {
    #[error("cannot parse {text:?} as a rational number")]
    BadRational { text: String },
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("duplicate {kind} {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("row {row:?} sums to {sum} instead of 1")]
    NotStochastic { row: String, sum: String },
    #[error("distribution sums to {sum} instead of 1")]
    NotADistribution { sum: String },
    #[error("no samples were collected for context {context:?}")]
    EmptyContext { context: String },
    #[error("source has no step distribution for context {context:?}")]
    MissingContext { context: String },
    #[error("cipher does not decrypt: D[{key},{cipher}] = {got:?}, expected {expected:?}")]
    NotACipher {
        key: String,
        cipher: String,
        got: String,
        expected: String,
    },
    #[error("only 0/1-probability machines embed a relational model")]
    NotZeroOne,
    #[error(transparent)]
    Level(#[from] crate::access::AccessError),
}

fn check_distinct(space: &[String], kind: &'static str) -> Result<(), StochasticError> {
    let mut seen = BTreeSet::new();
    for name in space {
        if !seen.insert(name.clone()) {
            return Err(StochasticError::DuplicateName {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

fn check_distribution(dist: &BTreeMap<String, Q>) -> Result<(), StochasticError> {
    let sum: Q = dist.values().sum();
    if sum != Q::one() {
        return Err(StochasticError::NotADistribution {
            sum: sum.to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Stochastic matrices
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StochasticChannelFile {
    inputs: Vec<String>,
    outputs: Vec<String>,
    rows: BTreeMap<String, BTreeMap<String, String>>,
}

/// A finite probabilistic channel: one exact probability distribution over
/// the outputs per input row. Zero entries may be omitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StochasticChannelFile", into = "StochasticChannelFile")]
pub struct StochasticChannel {
    inputs: Vec<String>,
    outputs: Vec<String>,
    rows: BTreeMap<String, BTreeMap<String, Q>>,
}

impl TryFrom<StochasticChannelFile> for StochasticChannel {
    type Error = StochasticError;
    fn try_from(f: StochasticChannelFile) -> Result<Self, StochasticError> {
        let mut rows = BTreeMap::new();
        for (x, row) in f.rows {
            let parsed: BTreeMap<String, Q> = row
                .iter()
                .map(|(y, p)| Ok((y.clone(), parse_q(p)?)))
                .collect::<Result<_, StochasticError>>()?;
            rows.insert(x, parsed);
        }
        StochasticChannel::new(f.inputs, f.outputs, rows)
    }
}

impl From<StochasticChannel> for StochasticChannelFile {
    fn from(c: StochasticChannel) -> Self {
        StochasticChannelFile {
            inputs: c.inputs.clone(),
            outputs: c.outputs.clone(),
            rows: c
                .rows
                .iter()
                .map(|(x, row)| {
                    (
                        x.clone(),
                        row.iter().map(|(y, p)| (y.clone(), p.to_string())).collect(),
                    )
                })
                .collect(),
        }
    }
}

impl StochasticChannel {
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        rows: BTreeMap<String, BTreeMap<String, Q>>,
    ) -> Result<StochasticChannel, StochasticError> {
        check_distinct(&inputs, "input")?;
        check_distinct(&outputs, "output")?;
        for (x, row) in &rows {
            if !inputs.contains(x) {
                return Err(StochasticError::UnknownName {
                    kind: "input",
                    name: x.clone(),
                });
            }
            for (y, p) in row {
                if !outputs.contains(y) {
                    return Err(StochasticError::UnknownName {
                        kind: "output",
                        name: y.clone(),
                    });
                }
                if p.is_negative() {
                    return Err(StochasticError::BadRational { text: p.to_string() });
                }
            }
            let sum: Q = row.values().sum();
            if sum != Q::one() {
                return Err(StochasticError::NotStochastic {
                    row: x.clone(),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(StochasticChannel {
            inputs,
            outputs,
            rows,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Inputs that actually carry a distribution (a channel may leave some
    /// declared inputs without a row; those are undefined, not zero).
    pub fn defined_inputs(&self) -> impl Iterator<Item = &String> {
        self.rows.keys()
    }

    /// The sequent ⟨x|y⟩; zero when omitted from the row.
    pub fn entry(&self, x: &str, y: &str) -> Q {
        self.rows
            .get(x)
            .and_then(|row| row.get(y))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn row(&self, x: &str) -> Option<&BTreeMap<String, Q>> {
        self.rows.get(x)
    }
}

// ---------------------------------------------------------------------------
// Frequency estimation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SampleEstimate {
    pub channel: StochasticChannel,
    /// Overall frequency of each output across all contexts.
    #[serde(serialize_with = "ser_q_map")]
    pub output_marginal: BTreeMap<String, Q>,
    /// Requested contexts that had no samples: their rows are undefined.
    pub missing: Vec<String>,
}

/// Estimate a channel from a multiset of (context, output) samples: each row
/// is the exact frequency of outputs within that context, and the marginal is
/// the share of each output in the whole multiset.
pub fn estimate_from_samples(
    samples: &[(String, String)],
    requested: &[String],
) -> Result<SampleEstimate, StochasticError> {
    let mut context_totals: BTreeMap<&String, u64> = BTreeMap::new();
    let mut pair_counts: BTreeMap<(&String, &String), u64> = BTreeMap::new();
    let mut output_counts: BTreeMap<&String, u64> = BTreeMap::new();
    for (x, y) in samples {
        *context_totals.entry(x).or_default() += 1;
        *pair_counts.entry((x, y)).or_default() += 1;
        *output_counts.entry(y).or_default() += 1;
    }
    let inputs: Vec<String> = context_totals.keys().map(|x| (*x).clone()).collect();
    let outputs: Vec<String> = output_counts.keys().map(|y| (*y).clone()).collect();
    let mut rows: BTreeMap<String, BTreeMap<String, Q>> = BTreeMap::new();
    for ((x, y), n) in &pair_counts {
        rows.entry((*x).clone()).or_default().insert(
            (*y).clone(),
            Q::new(BigInt::from(*n), BigInt::from(context_totals[*x])),
        );
    }
    let total: u64 = samples.len() as u64;
    let output_marginal = output_counts
        .iter()
        .map(|(y, n)| {
            (
                (*y).clone(),
                Q::new(BigInt::from(*n), BigInt::from(total.max(1))),
            )
        })
        .collect();
    let missing = requested
        .iter()
        .filter(|x| !context_totals.contains_key(*x))
        .cloned()
        .collect();
    Ok(SampleEstimate {
        channel: StochasticChannel::new(inputs, outputs, rows)?,
        output_marginal,
        missing,
    })
}

// ---------------------------------------------------------------------------
// Generative sources and the chain law
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SourceFile {
    alphabet: Vec<String>,
    depth: usize,
    #[serde(default)]
    default_row: Option<BTreeMap<String, String>>,
    #[serde(default)]
    rows: BTreeMap<String, BTreeMap<String, String>>,
}

/// A generative channel over one alphabet: every context of length below the
/// truncation depth has a next-symbol distribution (either its own row, keyed
/// by the space-joined context, or the memoryless default row).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SourceFile", into = "SourceFile")]
pub struct Source {
    alphabet: Vec<String>,
    depth: usize,
    default_row: Option<BTreeMap<String, Q>>,
    rows: BTreeMap<Vec<String>, BTreeMap<String, Q>>,
}

impl TryFrom<SourceFile> for Source {
    type Error = StochasticError;
    fn try_from(f: SourceFile) -> Result<Source, StochasticError> {
        let parse_row = |row: &BTreeMap<String, String>| -> Result<BTreeMap<String, Q>, StochasticError> {
            row.iter()
                .map(|(x, p)| Ok((x.clone(), parse_q(p)?)))
                .collect()
        };
        let default_row = f.default_row.as_ref().map(parse_row).transpose()?;
        let mut rows = BTreeMap::new();
        for (ctx, row) in &f.rows {
            let context: Vec<String> = if ctx.is_empty() {
                vec![]
            } else {
                ctx.split_whitespace().map(str::to_owned).collect()
            };
            rows.insert(context, parse_row(row)?);
        }
        Source::new(f.alphabet, f.depth, default_row, rows)
    }
}

impl From<Source> for SourceFile {
    fn from(s: Source) -> SourceFile {
        let print_row =
            |row: &BTreeMap<String, Q>| row.iter().map(|(x, p)| (x.clone(), p.to_string())).collect();
        SourceFile {
            alphabet: s.alphabet.clone(),
            depth: s.depth,
            default_row: s.default_row.as_ref().map(print_row),
            rows: s
                .rows
                .iter()
                .map(|(ctx, row)| (ctx.join(" "), print_row(row)))
                .collect(),
        }
    }
}

impl Source {
    pub fn new(
        alphabet: Vec<String>,
        depth: usize,
        default_row: Option<BTreeMap<String, Q>>,
        rows: BTreeMap<Vec<String>, BTreeMap<String, Q>>,
    ) -> Result<Source, StochasticError> {
        check_distinct(&alphabet, "symbol")?;
        let check_row = |row: &BTreeMap<String, Q>| -> Result<(), StochasticError> {
            for x in row.keys() {
                if !alphabet.contains(x) {
                    return Err(StochasticError::UnknownName {
                        kind: "symbol",
                        name: x.clone(),
                    });
                }
            }
            check_distribution(row)
        };
        if let Some(row) = &default_row {
            check_row(row)?;
        }
        for row in rows.values() {
            check_row(row)?;
        }
        Ok(Source {
            alphabet,
            depth,
            default_row,
            rows,
        })
    }

    /// A memoryless source: the same next-symbol distribution in every
    /// context.
    pub fn memoryless(
        alphabet: Vec<String>,
        row: BTreeMap<String, Q>,
        depth: usize,
    ) -> Result<Source, StochasticError> {
        Source::new(alphabet, depth, Some(row), BTreeMap::new())
    }

    /// The coin with the given heads bias, as a source over {H, T}.
    pub fn coin(heads: Q, depth: usize) -> Source {
        let tails = Q::one() - heads.clone();
        Source::memoryless(
            vec!["H".into(), "T".into()],
            [("H".to_owned(), heads), ("T".to_owned(), tails)].into(),
            depth,
        )
        .expect("two-sided coins are distributions")
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn step(&self, context: &[String]) -> Result<&BTreeMap<String, Q>, StochasticError> {
        self.rows
            .get(context)
            .or(self.default_row.as_ref())
            .ok_or_else(|| StochasticError::MissingContext {
                context: context.join(" "),
            })
    }

    /// The chain-law sequent ⟨context|continuation⟩: the probability that
    /// the source, standing at the context, generates the continuation —
    /// the product of its single-step sequents.
    pub fn cumulative_probability(
        &self,
        context: &[String],
        continuation: &[String],
    ) -> Result<Q, StochasticError> {
        let mut ctx = context.to_vec();
        let mut p = Q::one();
        for x in continuation {
            let row = self.step(&ctx)?;
            p *= row.get(x).cloned().unwrap_or_else(Q::zero);
            ctx.push(x.clone());
        }
        Ok(p)
    }

    /// The probability that the source generates the word from the empty
    /// context. At each fixed length these sum to 1.
    pub fn marginal(&self, word: &[String]) -> Result<Q, StochasticError> {
        self.cumulative_probability(&[], word)
    }

    /// All words of the given length with their generation probabilities.
    pub fn marginals_at_length(
        &self,
        len: usize,
    ) -> Result<BTreeMap<Vec<String>, Q>, StochasticError> {
        let mut layer: BTreeMap<Vec<String>, Q> = [(vec![], Q::one())].into();
        for _ in 0..len {
            let mut next = BTreeMap::new();
            for (word, p) in &layer {
                let row = self.step(word)?;
                for (x, px) in row {
                    if px.is_zero() {
                        continue;
                    }
                    let mut w = word.clone();
                    w.push(x.clone());
                    next.insert(w, p * px);
                }
            }
            layer = next;
        }
        Ok(layer)
    }
}

// ---------------------------------------------------------------------------
// Bayesian inversion
// ---------------------------------------------------------------------------

/// The inverse of a channel under a prior: defined rows of ⟨y|x⟩, the output
/// marginal, and the outputs that can never be observed (probability zero),
/// whose inverse rows are undefined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BayesInverse {
    pub inverse: StochasticChannel,
    #[serde(serialize_with = "ser_q_map")]
    pub output_marginal: BTreeMap<String, Q>,
    pub undefined: BTreeSet<String>,
}

/// Invert a channel across a prior on its inputs: ⟨y|x⟩ = [x]·⟨x|y⟩ / [y]
/// with [y] = Σ_x [x]·⟨x|y⟩; rows with [y] = 0 are reported undefined.
pub fn bayes_invert(
    channel: &StochasticChannel,
    prior: &BTreeMap<String, Q>,
) -> Result<BayesInverse, StochasticError> {
    for x in prior.keys() {
        if !channel.inputs.contains(x) {
            return Err(StochasticError::UnknownName {
                kind: "input",
                name: x.clone(),
            });
        }
    }
    check_distribution(prior)?;
    let prior_of = |x: &String| prior.get(x).cloned().unwrap_or_else(Q::zero);

    let mut output_marginal: BTreeMap<String, Q> = BTreeMap::new();
    for y in &channel.outputs {
        let p: Q = channel
            .inputs
            .iter()
            .map(|x| prior_of(x) * channel.entry(x, y))
            .sum();
        output_marginal.insert(y.clone(), p);
    }
    let mut rows: BTreeMap<String, BTreeMap<String, Q>> = BTreeMap::new();
    let mut undefined = BTreeSet::new();
    for y in &channel.outputs {
        let py = &output_marginal[y];
        if py.is_zero() {
            undefined.insert(y.clone());
            continue;
        }
        let mut row = BTreeMap::new();
        for x in &channel.inputs {
            let p = prior_of(x) * channel.entry(x, y) / py.clone();
            if !p.is_zero() {
                row.insert(x.clone(), p);
            }
        }
        rows.insert(y.clone(), row);
    }
    Ok(BayesInverse {
        inverse: StochasticChannel::new(channel.outputs.clone(), channel.inputs.clone(), rows)?,
        output_marginal,
        undefined,
    })
}

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

/// Entropy in bits. When every probability in the distribution factors as
/// 2^i·3^j, the exact symbolic value a + b·log2(3) is also reported.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entropy {
    pub bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<SymbolicEntropy>,
}

/// The exact value a + b·log2(3).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolicEntropy {
    #[serde(serialize_with = "ser_q")]
    pub rational_part: Q,
    #[serde(serialize_with = "ser_q")]
    pub log3_coefficient: Q,
}

/// Exponent of `factor` in `n`, with the remaining cofactor.
fn factor_out(mut n: BigInt, factor: u32) -> (i64, BigInt) {
    let f = BigInt::from(factor);
    let mut count = 0;
    while !n.is_zero() && (&n % &f).is_zero() {
        n /= &f;
        count += 1;
    }
    (count, n)
}

/// p = 2^i·3^j exactly, if the probability factors that way.
fn two_three_split(p: &Q) -> Option<(i64, i64)> {
    let (n2, n_rest) = factor_out(p.numer().clone(), 2);
    let (n3, n_core) = factor_out(n_rest, 3);
    let (d2, d_rest) = factor_out(p.denom().clone(), 2);
    let (d3, d_core) = factor_out(d_rest, 3);
    (n_core == BigInt::one() && d_core == BigInt::one()).then_some((n2 - d2, n3 - d3))
}

/// Shannon entropy of an exact distribution, with 0·log 0 = 0.
pub fn entropy(dist: &BTreeMap<String, Q>) -> Result<Entropy, StochasticError> {
    check_distribution(dist)?;
    let mut bits = 0.0f64;
    let mut rational_part = Q::zero();
    let mut log3_coefficient = Q::zero();
    let mut symbolic_ok = true;
    for p in dist.values() {
        if p.is_zero() {
            continue;
        }
        let pf = p.to_f64().expect("probability fits in f64");
        bits -= pf * pf.log2();
        match two_three_split(p) {
            Some((i, j)) => {
                // −p·log2(p) = −p·(i + j·log2 3)
                rational_part -= p * q(i, 1);
                log3_coefficient -= p * q(j, 1);
            }
            None => symbolic_ok = false,
        }
    }
    let symbolic = symbolic_ok.then(|| {
        // Recompute bits from the exact form to kill accumulation error.
        SymbolicEntropy {
            rational_part,
            log3_coefficient,
        }
    });
    if let Some(s) = &symbolic {
        bits = s.rational_part.to_f64().expect("fits")
            + s.log3_coefficient.to_f64().expect("fits") * 3f64.log2();
    }
    Ok(Entropy { bits, symbolic })
}

/// Entropy of one channel row.
pub fn row_entropy(channel: &StochasticChannel, x: &str) -> Result<Entropy, StochasticError> {
    let row = channel.row(x).ok_or_else(|| StochasticError::UnknownName {
        kind: "input",
        name: x.to_owned(),
    })?;
    entropy(row)
}

// ---------------------------------------------------------------------------
// Shared stochastic channels and probabilistic noninterference
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StochasticTransitionFile {
    state: String,
    input: String,
    next: String,
    output: String,
    probability: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StochasticTransducerFile {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: String,
    transitions: Vec<StochasticTransitionFile>,
}

/// A finite-state probabilistic transducer: each (state, input) pair carries
/// an exact distribution over (next state, output) branches. It presents the
/// single-output channel ⟨x⃗|y⟩ by running the state distribution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StochasticTransducerFile", into = "StochasticTransducerFile")]
pub struct StochasticTransducer {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: usize,
    transitions: BTreeMap<(usize, usize), Vec<(Q, usize, usize)>>,
}

impl TryFrom<StochasticTransducerFile> for StochasticTransducer {
    type Error = StochasticError;
    fn try_from(f: StochasticTransducerFile) -> Result<Self, StochasticError> {
        check_distinct(&f.inputs, "input")?;
        check_distinct(&f.outputs, "output")?;
        check_distinct(&f.states, "state")?;
        let find = |space: &[String], kind: &'static str, name: &str| {
            space
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| StochasticError::UnknownName {
                    kind,
                    name: name.to_owned(),
                })
        };
        let initial = find(&f.states, "state", &f.initial)?;
        let mut transitions: BTreeMap<(usize, usize), Vec<(Q, usize, usize)>> = BTreeMap::new();
        for t in &f.transitions {
            let s = find(&f.states, "state", &t.state)?;
            let x = find(&f.inputs, "input", &t.input)?;
            let next = find(&f.states, "state", &t.next)?;
            let y = find(&f.outputs, "output", &t.output)?;
            transitions
                .entry((s, x))
                .or_default()
                .push((parse_q(&t.probability)?, next, y));
        }
        for s in 0..f.states.len() {
            for x in 0..f.inputs.len() {
                let sum: Q = transitions
                    .get(&(s, x))
                    .map(|b| b.iter().map(|(p, _, _)| p.clone()).sum())
                    .unwrap_or_else(Q::zero);
                if sum != Q::one() {
                    return Err(StochasticError::NotStochastic {
                        row: format!("{}, {}", f.states[s], f.inputs[x]),
                        sum: sum.to_string(),
                    });
                }
            }
        }
        Ok(StochasticTransducer {
            inputs: f.inputs,
            outputs: f.outputs,
            states: f.states,
            initial,
            transitions,
        })
    }
}

impl From<StochasticTransducer> for StochasticTransducerFile {
    fn from(t: StochasticTransducer) -> Self {
        let mut transitions = Vec::new();
        for (&(s, x), branches) in &t.transitions {
            for (p, next, y) in branches {
                transitions.push(StochasticTransitionFile {
                    state: t.states[s].clone(),
                    input: t.inputs[x].clone(),
                    next: t.states[*next].clone(),
                    output: t.outputs[*y].clone(),
                    probability: p.to_string(),
                });
            }
        }
        StochasticTransducerFile {
            inputs: t.inputs.clone(),
            outputs: t.outputs.clone(),
            states: t.states.clone(),
            initial: t.states[t.initial].clone(),
            transitions,
        }
    }
}

impl StochasticTransducer {
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn input_ids(&self, history: &[String]) -> Result<Vec<usize>, StochasticError> {
        history
            .iter()
            .map(|x| {
                self.inputs
                    .iter()
                    .position(|e| e == x)
                    .ok_or_else(|| StochasticError::UnknownName {
                        kind: "input",
                        name: x.clone(),
                    })
            })
            .collect()
    }

    /// The single-output channel: the distribution of the output emitted at
    /// the final step of the history.
    pub fn last_step_distribution(
        &self,
        history: &[String],
    ) -> Result<BTreeMap<String, Q>, StochasticError> {
        let ids = self.input_ids(history)?;
        let mut states: BTreeMap<usize, Q> = [(self.initial, Q::one())].into();
        let mut out: BTreeMap<String, Q> = BTreeMap::new();
        for x in ids {
            let mut next: BTreeMap<usize, Q> = BTreeMap::new();
            out.clear();
            for (s, ps) in &states {
                for (p, s2, y) in self.transitions.get(&(*s, x)).into_iter().flatten() {
                    *next.entry(*s2).or_insert_with(Q::zero) += ps * p;
                    *out.entry(self.outputs[*y].clone()).or_insert_with(Q::zero) += ps * p;
                }
            }
            states = next;
        }
        out.retain(|_, p| !p.is_zero());
        Ok(out)
    }

    /// All input histories of each length ≤ bound, length-then-lex.
    pub fn histories_upto(&self, bound: usize) -> Vec<Vec<String>> {
        let mut all: Vec<Vec<String>> = vec![vec![]];
        let mut layer: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..bound {
            let mut next = Vec::new();
            for h in &layer {
                for x in &self.inputs {
                    let mut h2 = h.clone();
                    h2.push(x.clone());
                    next.push(h2);
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        all
    }
}

/// A probabilistic channel shared between subjects, with input localities
/// and subject clearances over a level poset, plus an optional per-input
/// source distribution used to weight worldviews.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedStochasticModel {
    pub transducer: StochasticTransducer,
    pub subjects: Vec<String>,
    pub levels: Poset,
    pub pl: BTreeMap<String, String>,
    pub cl: BTreeMap<String, String>,
    /// Per-step input distribution (independent steps); uniform if absent.
    #[serde(default)]
    pub input_source: Option<BTreeMap<String, String>>,
}

/// A history and an output word on which the local view and the purged
/// channel assign different probabilities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbWitness {
    pub history: Vec<String>,
    pub purged: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(serialize_with = "ser_q")]
    pub viewed_probability: Q,
    #[serde(serialize_with = "ser_q")]
    pub purged_probability: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbNoninterferenceReport {
    pub subject: String,
    pub bound: usize,
    pub noninterfering: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ProbWitness>,
    /// Worldviews with zero source probability: conditioning on them is
    /// undefined, so histories restricting to them are skipped.
    pub skipped_worldviews: Vec<Vec<String>>,
}

impl SharedStochasticModel {
    pub fn validate(&self) -> Result<(), StochasticError> {
        check_distinct(&self.subjects, "subject")?;
        for x in self.transducer.inputs() {
            let level = self.pl.get(x).ok_or_else(|| StochasticError::UnknownName {
                kind: "input level",
                name: x.clone(),
            })?;
            if !self.levels.contains(level) {
                return Err(StochasticError::UnknownName {
                    kind: "level",
                    name: level.clone(),
                });
            }
        }
        for u in &self.subjects {
            let level = self.cl.get(u).ok_or_else(|| StochasticError::UnknownName {
                kind: "subject clearance",
                name: u.clone(),
            })?;
            if !self.levels.contains(level) {
                return Err(StochasticError::UnknownName {
                    kind: "level",
                    name: level.clone(),
                });
            }
        }
        if let Some(source) = &self.input_source {
            for x in source.keys() {
                if !self.transducer.inputs().contains(x) {
                    return Err(StochasticError::UnknownName {
                        kind: "input",
                        name: x.clone(),
                    });
                }
            }
            check_distribution(&self.source_distribution()?)?;
        }
        Ok(())
    }

    fn source_distribution(&self) -> Result<BTreeMap<String, Q>, StochasticError> {
        match &self.input_source {
            Some(rows) => rows
                .iter()
                .map(|(x, p)| Ok((x.clone(), parse_q(p)?)))
                .collect(),
            None => {
                let n = self.transducer.inputs().len() as i64;
                Ok(self
                    .transducer
                    .inputs()
                    .iter()
                    .map(|x| (x.clone(), q(1, n)))
                    .collect())
            }
        }
    }

    pub fn cleared(&self, input: &str, subject: &str) -> Result<bool, StochasticError> {
        if !self.subjects.contains(&subject.to_owned()) {
            return Err(StochasticError::UnknownName {
                kind: "subject",
                name: subject.to_owned(),
            });
        }
        let pl = self
            .pl
            .get(input)
            .ok_or_else(|| StochasticError::UnknownName {
                kind: "input",
                name: input.to_owned(),
            })?;
        Ok(self.levels.leq(pl, &self.cl[subject])?)
    }

    pub fn purge(&self, history: &[String], subject: &str) -> Result<Vec<String>, StochasticError> {
        history
            .iter()
            .filter_map(|x| match self.cleared(x, subject) {
                Ok(true) => Some(Ok(x.clone())),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }

    /// The subject's local view as one output distribution per cleared step,
    /// each produced by the full global prefix.
    pub fn local_view_steps(
        &self,
        subject: &str,
        history: &[String],
    ) -> Result<Vec<BTreeMap<String, Q>>, StochasticError> {
        let mut steps = Vec::new();
        for k in 0..history.len() {
            if self.cleared(&history[k], subject)? {
                steps.push(self.transducer.last_step_distribution(&history[..=k])?);
            }
        }
        Ok(steps)
    }

    /// Bounded probabilistic noninterference: the local-view distribution
    /// must equal the purged-history channel distribution, exactly, on every
    /// history up to the bound. Zero-probability worldviews are skipped and
    /// reported.
    pub fn check_prob_noninterference(
        &self,
        subject: &str,
        bound: usize,
    ) -> Result<ProbNoninterferenceReport, StochasticError> {
        self.validate()?;
        let source = self.source_distribution()?;
        let weight = |h: &[String]| -> Q {
            h.iter()
                .map(|x| source.get(x).cloned().unwrap_or_else(Q::zero))
                .product()
        };
        let histories = self.transducer.histories_upto(bound);
        let mut skipped: BTreeSet<Vec<String>> = BTreeSet::new();
        let mut witness = None;
        for h in &histories {
            let Some(last) = h.last() else { continue };
            if !self.cleared(last, subject)? {
                continue;
            }
            if weight(h).is_zero() {
                skipped.insert(self.purge(h, subject)?);
                continue;
            }
            let purged = self.purge(h, subject)?;
            let viewed = self.transducer.last_step_distribution(h)?;
            let direct = self.transducer.last_step_distribution(&purged)?;
            if viewed != direct && witness.is_none() {
                // First output whose probability differs.
                let outputs: BTreeSet<&String> = viewed.keys().chain(direct.keys()).collect();
                let v = outputs
                    .into_iter()
                    .find(|y| {
                        viewed.get(*y).cloned().unwrap_or_else(Q::zero)
                            != direct.get(*y).cloned().unwrap_or_else(Q::zero)
                    })
                    .expect("distributions differ");
                // Extend the differing last step to full output words by
                // routing the earlier cleared steps through any shared
                // positive-probability output.
                let mut word = Vec::new();
                let mut viewed_p = Q::one();
                let mut direct_p = Q::one();
                let earlier = self.local_view_steps(subject, &h[..h.len() - 1])?;
                for step in earlier {
                    let (y, p) = step
                        .iter()
                        .next()
                        .map(|(y, p)| (y.clone(), p.clone()))
                        .unwrap_or_else(|| (String::new(), Q::zero()));
                    viewed_p *= &p;
                    direct_p *= &p;
                    word.push(y);
                }
                word.push(v.clone());
                viewed_p *= viewed.get(v).cloned().unwrap_or_else(Q::zero);
                direct_p *= direct.get(v).cloned().unwrap_or_else(Q::zero);
                witness = Some(ProbWitness {
                    history: h.clone(),
                    purged,
                    outputs: word,
                    viewed_probability: viewed_p,
                    purged_probability: direct_p,
                });
            }
        }
        Ok(ProbNoninterferenceReport {
            subject: subject.to_owned(),
            bound,
            noninterfering: witness.is_none(),
            witness,
            skipped_worldviews: skipped.into_iter().collect(),
        })
    }
}

/// Embed a relational shared model with a deterministic transducer as a
/// 0/1-probability stochastic model. The noninterference verdicts must
/// agree.
pub fn embed_relational(
    model: &crate::channels::SharedChannelModel,
) -> Result<SharedStochasticModel, StochasticError> {
    let file = serde_json::to_value(&model.transducer).expect("transducer serializes");
    let inputs: Vec<String> =
        serde_json::from_value(file["inputs"].clone()).expect("inputs array");
    let outputs: Vec<String> =
        serde_json::from_value(file["outputs"].clone()).expect("outputs array");
    let states: Vec<String> =
        serde_json::from_value(file["states"].clone()).expect("states array");
    let initial: String = serde_json::from_value(file["initial"].clone()).expect("initial");
    let mut transitions = Vec::new();
    for t in file["transitions"].as_array().expect("transition array") {
        let outs = t["outputs"].as_array().expect("outputs");
        if outs.len() != 1 {
            return Err(StochasticError::NotZeroOne);
        }
        transitions.push(StochasticTransitionFile {
            state: t["state"].as_str().expect("state").to_owned(),
            input: t["input"].as_str().expect("input").to_owned(),
            next: t["next"].as_str().expect("next").to_owned(),
            output: outs[0].as_str().expect("output").to_owned(),
            probability: "1".to_owned(),
        });
    }
    let transducer = StochasticTransducer::try_from(StochasticTransducerFile {
        inputs,
        outputs,
        states,
        initial,
        transitions,
    })?;
    Ok(SharedStochasticModel {
        transducer,
        subjects: model.subjects.clone(),
        levels: model.levels.clone(),
        pl: model.pl.clone(),
        cl: model.cl.clone(),
        input_source: None,
    })
}

// ---------------------------------------------------------------------------
// Ciphers, guessing channels, perfect secrecy
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CipherFile {
    keys: Vec<String>,
    messages: Vec<String>,
    ciphertexts: Vec<String>,
    /// encrypt[key][message] = ciphertext
    encrypt: BTreeMap<String, BTreeMap<String, String>>,
    /// decrypt[key][ciphertext] = message
    decrypt: BTreeMap<String, BTreeMap<String, String>>,
}

/// A cipher: per-key encryption and decryption tables with the functional
/// requirement that decryption undoes encryption under the same key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CipherFile", into = "CipherFile")]
pub struct Cipher {
    keys: Vec<String>,
    messages: Vec<String>,
    ciphertexts: Vec<String>,
    encrypt: BTreeMap<(String, String), String>,
    decrypt: BTreeMap<(String, String), String>,
}

impl TryFrom<CipherFile> for Cipher {
    type Error = StochasticError;
    fn try_from(f: CipherFile) -> Result<Cipher, StochasticError> {
        let mut encrypt = BTreeMap::new();
        for (k, row) in &f.encrypt {
            for (m, c) in row {
                encrypt.insert((k.clone(), m.clone()), c.clone());
            }
        }
        let mut decrypt = BTreeMap::new();
        for (k, row) in &f.decrypt {
            for (c, m) in row {
                decrypt.insert((k.clone(), c.clone()), m.clone());
            }
        }
        Cipher::new(f.keys, f.messages, f.ciphertexts, encrypt, decrypt)
    }
}

impl From<Cipher> for CipherFile {
    fn from(c: Cipher) -> CipherFile {
        let mut encrypt: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for ((k, m), ct) in &c.encrypt {
            encrypt.entry(k.clone()).or_default().insert(m.clone(), ct.clone());
        }
        let mut decrypt: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for ((k, ct), m) in &c.decrypt {
            decrypt.entry(k.clone()).or_default().insert(ct.clone(), m.clone());
        }
        CipherFile {
            keys: c.keys.clone(),
            messages: c.messages.clone(),
            ciphertexts: c.ciphertexts.clone(),
            encrypt,
            decrypt,
        }
    }
}

impl Cipher {
    pub fn new(
        keys: Vec<String>,
        messages: Vec<String>,
        ciphertexts: Vec<String>,
        encrypt: BTreeMap<(String, String), String>,
        decrypt: BTreeMap<(String, String), String>,
    ) -> Result<Cipher, StochasticError> {
        check_distinct(&keys, "key")?;
        check_distinct(&messages, "message")?;
        check_distinct(&ciphertexts, "ciphertext")?;
        let c = Cipher {
            keys,
            messages,
            ciphertexts,
            encrypt,
            decrypt,
        };
        for k in &c.keys {
            for m in &c.messages {
                let ct = c
                    .encrypt
                    .get(&(k.clone(), m.clone()))
                    .ok_or_else(|| StochasticError::UnknownName {
                        kind: "encryption entry",
                        name: format!("{k},{m}"),
                    })?;
                if !c.ciphertexts.contains(ct) {
                    return Err(StochasticError::UnknownName {
                        kind: "ciphertext",
                        name: ct.clone(),
                    });
                }
                let back = c
                    .decrypt
                    .get(&(k.clone(), ct.clone()))
                    .ok_or_else(|| StochasticError::UnknownName {
                        kind: "decryption entry",
                        name: format!("{k},{ct}"),
                    })?;
                if back != m {
                    return Err(StochasticError::NotACipher {
                        key: k.clone(),
                        cipher: ct.clone(),
                        got: back.clone(),
                        expected: m.clone(),
                    });
                }
            }
        }
        Ok(c)
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn ciphertexts(&self) -> &[String] {
        &self.ciphertexts
    }

    pub fn encrypt(&self, key: &str, message: &str) -> Option<&String> {
        self.encrypt.get(&(key.to_owned(), message.to_owned()))
    }
}

/// The one-time pad over bit strings of the given width: keys, messages, and
/// ciphertexts are the same space, and encryption is bitwise xor.
pub fn one_time_pad(bits: u32) -> Cipher {
    let words: Vec<String> = (0..(1u64 << bits))
        .map(|v| format!("{v:0width$b}", width = bits as usize))
        .collect();
    let xor = |a: &str, b: &str| -> String {
        a.chars()
            .zip(b.chars())
            .map(|(x, y)| if x == y { '0' } else { '1' })
            .collect()
    };
    let mut encrypt = BTreeMap::new();
    let mut decrypt = BTreeMap::new();
    for k in &words {
        for m in &words {
            encrypt.insert((k.clone(), m.clone()), xor(k, m));
            decrypt.insert((k.clone(), xor(k, m)), m.clone());
        }
    }
    Cipher::new(words.clone(), words.clone(), words, encrypt, decrypt)
        .expect("xor decrypts itself")
}

/// The cipher that does nothing: every key sends each message to itself.
pub fn identity_cipher(messages: &[&str], keys: &[&str]) -> Cipher {
    let mut encrypt = BTreeMap::new();
    let mut decrypt = BTreeMap::new();
    for k in keys {
        for m in messages {
            encrypt.insert(((*k).to_owned(), (*m).to_owned()), (*m).to_owned());
            decrypt.insert(((*k).to_owned(), (*m).to_owned()), (*m).to_owned());
        }
    }
    Cipher::new(
        keys.iter().map(|k| (*k).to_owned()).collect(),
        messages.iter().map(|m| (*m).to_owned()).collect(),
        messages.iter().map(|m| (*m).to_owned()).collect(),
        encrypt,
        decrypt,
    )
    .expect("identity decrypts itself")
}

/// The enemy-knows-the-system guessing table: ⟨c|m⟩ is the share of keys
/// that encipher m as c. Unreachable ciphertexts have no row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GuessingChannel {
    #[serde(serialize_with = "ser_q_rows")]
    pub rows: BTreeMap<String, BTreeMap<String, Q>>,
    pub unreachable: BTreeSet<String>,
}

impl GuessingChannel {
    pub fn entry(&self, c: &str, m: &str) -> Q {
        self.rows
            .get(c)
            .and_then(|row| row.get(m))
            .cloned()
            .unwrap_or_else(Q::zero)
    }
}

/// Average the cipher over its key space into the attacker's guessing
/// channel.
pub fn guessing_channel(cipher: &Cipher) -> GuessingChannel {
    let total = BigInt::from(cipher.keys.len() as u64);
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for k in &cipher.keys {
        for m in &cipher.messages {
            let c = cipher.encrypt(k, m).expect("validated total").clone();
            *counts.entry((c, m.clone())).or_default() += 1;
        }
    }
    let mut rows: BTreeMap<String, BTreeMap<String, Q>> = BTreeMap::new();
    for ((c, m), n) in counts {
        rows.entry(c)
            .or_default()
            .insert(m, Q::new(BigInt::from(n), total.clone()));
    }
    let unreachable = cipher
        .ciphertexts
        .iter()
        .filter(|c| !rows.contains_key(*c))
        .cloned()
        .collect();
    GuessingChannel { rows, unreachable }
}

/// One (ciphertext, message) pair at which a secrecy check failed, with the
/// two sides of the failed equation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SecrecyWitness {
    pub ciphertext: String,
    pub message: String,
    #[serde(serialize_with = "ser_q")]
    pub lhs: Q,
    #[serde(serialize_with = "ser_q")]
    pub rhs: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SecrecyReport {
    /// Pointwise requirement: the guess ⟨c|m⟩ equals the prior [m]
    /// for every reachable ciphertext and every message.
    pub pointwise_secret: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointwise_witness: Option<SecrecyWitness>,
    /// Projector route: pushing any point distribution on ciphertexts
    /// through the averaged guessing channel gives the same answer as
    /// pushing the uniform distribution.
    pub projector_secret: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projector_witness: Option<SecrecyWitness>,
    pub routes_agree: bool,
}

/// Check Shannon perfect secrecy both ways: pointwise against the message
/// prior, and as invariance of the averaged channel under collapsing the
/// ciphertext distribution to uniform.
pub fn check_perfect_secrecy(
    cipher: &Cipher,
    prior: &BTreeMap<String, Q>,
) -> Result<SecrecyReport, StochasticError> {
    for m in prior.keys() {
        if !cipher.messages.contains(m) {
            return Err(StochasticError::UnknownName {
                kind: "message",
                name: m.clone(),
            });
        }
    }
    check_distribution(prior)?;
    let guess = guessing_channel(cipher);
    let reachable: Vec<&String> = cipher
        .ciphertexts
        .iter()
        .filter(|c| guess.rows.contains_key(*c))
        .collect();

    let mut pointwise_witness = None;
    'point: for c in &reachable {
        for m in &cipher.messages {
            let lhs = guess.entry(c, m);
            let rhs = prior.get(m).cloned().unwrap_or_else(Q::zero);
            if lhs != rhs {
                pointwise_witness = Some(SecrecyWitness {
                    ciphertext: (*c).clone(),
                    message: m.clone(),
                    lhs,
                    rhs,
                });
                break 'point;
            }
        }
    }

    // The uniform push: average the reachable rows.
    let n = q(reachable.len().max(1) as i64, 1);
    let mut averaged: BTreeMap<&String, Q> = BTreeMap::new();
    for m in &cipher.messages {
        let total: Q = reachable.iter().map(|c| guess.entry(c, m)).sum();
        averaged.insert(m, total / n.clone());
    }
    let mut projector_witness = None;
    'proj: for c in &reachable {
        for m in &cipher.messages {
            let lhs = guess.entry(c, m);
            let rhs = averaged[m].clone();
            if lhs != rhs {
                projector_witness = Some(SecrecyWitness {
                    ciphertext: (*c).clone(),
                    message: m.clone(),
                    lhs,
                    rhs,
                });
                break 'proj;
            }
        }
    }

    let pointwise_secret = pointwise_witness.is_none();
    let projector_secret = projector_witness.is_none();
    Ok(SecrecyReport {
        pointwise_secret,
        pointwise_witness,
        projector_secret,
        projector_witness,
        routes_agree: pointwise_secret == projector_secret,
    })
}

/// The inversion-projector identity E∘A∘E = E: does the candidate inverter
/// A recover, for every message, some preimage of its ciphertext? This is
/// the functional shape of one-wayness; no hardness is claimed.
pub fn inverts_encryption(
    encrypt: &BTreeMap<String, String>,
    candidate: &BTreeMap<String, String>,
) -> bool {
    encrypt.iter().all(|(_, c)| {
        candidate
            .get(c)
            .and_then(|m2| encrypt.get(m2))
            .is_some_and(|c2| c2 == c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(name: &str) -> String {
        name.to_owned()
    }

    fn dist(entries: &[(&str, Q)]) -> BTreeMap<String, Q> {
        entries.iter().map(|(k, v)| (s(k), v.clone())).collect()
    }

    #[test]
    fn frequencies_are_exact_ratios() {
        let samples: Vec<(String, String)> = [("c", "H"), ("c", "H"), ("c", "H"), ("c", "T")]
            .iter()
            .map(|(x, y)| (s(x), s(y)))
            .collect();
        let est = estimate_from_samples(&samples, &[s("c"), s("d")]).unwrap();
        assert_eq!(est.channel.entry("c", "H"), q(3, 4));
        assert_eq!(est.channel.entry("c", "T"), q(1, 4));
        assert_eq!(est.missing, vec![s("d")]);
        assert_eq!(est.output_marginal["H"], q(3, 4));

        let fair: Vec<(String, String)> = (0..8)
            .map(|i| (s("c"), s(if i % 2 == 0 { "H" } else { "T" })))
            .collect();
        let est = estimate_from_samples(&fair, &[]).unwrap();
        assert_eq!(est.channel.entry("c", "H"), q(1, 2));
    }

    #[test]
    fn coin_products_match_the_closed_forms() {
        let fair = Source::coin(q(1, 2), 6);
        let empty: [String; 0] = [];
        assert_eq!(fair.cumulative_probability(&empty, &empty).unwrap(), q(1, 1));
        let hth = [s("H"), s("T"), s("H")];
        assert_eq!(fair.cumulative_probability(&empty, &hth).unwrap(), q(1, 8));

        let biased = Source::coin(q(3, 4), 6);
        // h heads in D flips → 3^h / 4^D.
        let hht = [s("H"), s("H"), s("T")];
        assert_eq!(biased.cumulative_probability(&empty, &hht).unwrap(), q(9, 64));
        let ttt = [s("T"), s("T"), s("T")];
        assert_eq!(biased.cumulative_probability(&empty, &ttt).unwrap(), q(1, 64));
        let hhh = [s("H"), s("H"), s("H")];
        assert_eq!(
            biased.cumulative_probability(&empty, &hhh).unwrap(),
            q(27, 64)
        );
    }

    #[test]
    fn marginals_normalize_at_each_length() {
        let biased = Source::coin(q(3, 4), 6);
        for len in 0..=4 {
            let sum: Q = biased.marginals_at_length(len).unwrap().values().sum();
            assert_eq!(sum, q(1, 1), "length {len}");
        }
    }

    fn context_source() -> Source {
        // A two-symbol source whose second step depends on the first.
        Source::new(
            vec![s("a"), s("b")],
            4,
            Some(dist(&[("a", q(1, 2)), ("b", q(1, 2))])),
            [
                (vec![s("a")], dist(&[("a", q(1, 4)), ("b", q(3, 4))])),
                (vec![s("b")], dist(&[("a", q(2, 3)), ("b", q(1, 3))])),
            ]
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn chain_law_splits_products() {
        let src = context_source();
        let words: Vec<Vec<String>> = vec![
            vec![],
            vec![s("a")],
            vec![s("b")],
            vec![s("a"), s("b")],
            vec![s("b"), s("a")],
        ];
        for x in &words {
            for y in &words {
                for z in &words {
                    let mut yz = y.clone();
                    yz.extend(z.iter().cloned());
                    let mut xy = x.clone();
                    xy.extend(y.iter().cloned());
                    let whole = src.cumulative_probability(x, &yz).unwrap();
                    let split = src.cumulative_probability(x, y).unwrap()
                        * src.cumulative_probability(&xy, z).unwrap();
                    assert_eq!(whole, split, "x={x:?} y={y:?} z={z:?}");
                }
            }
        }
    }

    fn monty_hall() -> (StochasticChannel, BTreeMap<String, Q>) {
        let channel = StochasticChannel::new(
            vec![s("C0"), s("C1"), s("C2")],
            vec![s("G0"), s("G1"), s("G2")],
            [
                (s("C0"), dist(&[("G1", q(1, 2)), ("G2", q(1, 2))])),
                (s("C1"), dist(&[("G2", q(1, 1))])),
                (s("C2"), dist(&[("G1", q(1, 1))])),
            ]
            .into(),
        )
        .unwrap();
        let prior = dist(&[("C0", q(1, 3)), ("C1", q(1, 3)), ("C2", q(1, 3))]);
        (channel, prior)
    }

    #[test]
    fn monty_hall_inverse_says_switch() {
        let (channel, prior) = monty_hall();
        let inv = bayes_invert(&channel, &prior).unwrap();
        assert_eq!(inv.output_marginal["G0"], q(0, 1));
        assert_eq!(inv.output_marginal["G1"], q(1, 2));
        assert_eq!(inv.output_marginal["G2"], q(1, 2));
        assert_eq!(inv.undefined, [s("G0")].into());
        assert_eq!(inv.inverse.entry("G1", "C0"), q(1, 3));
        assert_eq!(inv.inverse.entry("G1", "C1"), q(0, 1));
        assert_eq!(inv.inverse.entry("G1", "C2"), q(2, 3));
        assert_eq!(inv.inverse.entry("G2", "C0"), q(1, 3));
        assert_eq!(inv.inverse.entry("G2", "C1"), q(2, 3));
        assert_eq!(inv.inverse.entry("G2", "C2"), q(0, 1));
    }

    #[test]
    fn car_rental_inverse_matches_the_worked_tables() {
        let channel = StochasticChannel::new(
            vec![s("a"), s("not-a")],
            vec![s("p"), s("not-p")],
            [
                (s("a"), dist(&[("p", q(1, 5)), ("not-p", q(4, 5))])),
                (s("not-a"), dist(&[("p", q(9, 10)), ("not-p", q(1, 10))])),
            ]
            .into(),
        )
        .unwrap();
        let prior = dist(&[("a", q(1, 2)), ("not-a", q(1, 2))]);
        let inv = bayes_invert(&channel, &prior).unwrap();
        assert_eq!(inv.output_marginal["p"], q(11, 20));
        assert_eq!(inv.output_marginal["not-p"], q(9, 20));
        assert_eq!(inv.inverse.entry("p", "a"), q(2, 11));
        assert_eq!(inv.inverse.entry("p", "not-a"), q(9, 11));
        assert_eq!(inv.inverse.entry("not-p", "a"), q(8, 9));
        assert_eq!(inv.inverse.entry("not-p", "not-a"), q(1, 9));
    }

    #[test]
    fn identity_channel_inverts_to_itself() {
        let channel = StochasticChannel::new(
            vec![s("x"), s("y")],
            vec![s("x"), s("y")],
            [
                (s("x"), dist(&[("x", q(1, 1))])),
                (s("y"), dist(&[("y", q(1, 1))])),
            ]
            .into(),
        )
        .unwrap();
        let prior = dist(&[("x", q(1, 4)), ("y", q(3, 4))]);
        let inv = bayes_invert(&channel, &prior).unwrap();
        assert_eq!(inv.inverse.entry("x", "x"), q(1, 1));
        assert_eq!(inv.inverse.entry("y", "y"), q(1, 1));
        assert_eq!(inv.output_marginal, prior);
    }

    #[test]
    fn entropy_of_the_three_worked_distributions() {
        let fair = entropy(&dist(&[("H", q(1, 2)), ("T", q(1, 2))])).unwrap();
        assert_eq!(fair.bits, 1.0);
        let sym = fair.symbolic.unwrap();
        assert_eq!(sym.rational_part, q(1, 1));
        assert_eq!(sym.log3_coefficient, q(0, 1));

        // Three fair flips: eight outcomes of probability 1/8 each.
        let mut eight = BTreeMap::new();
        for i in 0..8 {
            eight.insert(format!("y{i}"), q(1, 8));
        }
        let three = entropy(&eight).unwrap();
        assert_eq!(three.bits, 3.0);
        assert_eq!(three.symbolic.unwrap().rational_part, q(3, 1));

        let biased = entropy(&dist(&[("H", q(3, 4)), ("T", q(1, 4))])).unwrap();
        let sym = biased.symbolic.unwrap();
        assert_eq!(sym.rational_part, q(2, 1));
        assert_eq!(sym.log3_coefficient, q(-3, 4));
        assert!((biased.bits - (2.0 - 0.75 * 3f64.log2())).abs() < 1e-12);
        assert!((biased.bits - 0.8112781244591328).abs() < 1e-12);
    }

    #[test]
    fn entropy_detects_non_factoring_distributions() {
        let h = entropy(&dist(&[("a", q(1, 5)), ("b", q(4, 5))])).unwrap();
        assert!(h.symbolic.is_none());
        assert!(h.bits > 0.0 && h.bits < 1.0);
    }

    proptest! {
        #[test]
        fn estimated_rows_sum_to_one(raw in proptest::collection::vec((0u8..3, 0u8..4), 1..40)) {
            let samples: Vec<(String, String)> = raw
                .iter()
                .map(|(x, y)| (format!("x{x}"), format!("y{y}")))
                .collect();
            let est = estimate_from_samples(&samples, &[]).unwrap();
            for x in est.channel.defined_inputs() {
                let sum: Q = est.channel.row(x).unwrap().values().sum();
                prop_assert_eq!(sum, q(1, 1));
            }
            let total: Q = est.output_marginal.values().sum();
            prop_assert_eq!(total, q(1, 1));
        }

        #[test]
        fn bayes_inversion_round_trips(nums in proptest::collection::vec(1u32..20, 6), priors in proptest::collection::vec(1u32..20, 2)) {
            // A random strictly positive 2×3 channel and prior.
            let inputs = [s("x0"), s("x1")];
            let outputs = [s("y0"), s("y1"), s("y2")];
            let mut rows = BTreeMap::new();
            for (i, x) in inputs.iter().enumerate() {
                let chunk = &nums[3 * i..3 * i + 3];
                let total: u32 = chunk.iter().sum();
                let row: BTreeMap<String, Q> = outputs
                    .iter()
                    .zip(chunk)
                    .map(|(y, n)| (y.clone(), Q::new(BigInt::from(*n), BigInt::from(total))))
                    .collect();
                rows.insert(x.clone(), row);
            }
            let channel = StochasticChannel::new(inputs.to_vec(), outputs.to_vec(), rows).unwrap();
            let ptotal: u32 = priors.iter().sum();
            let prior: BTreeMap<String, Q> = inputs
                .iter()
                .zip(&priors)
                .map(|(x, n)| (x.clone(), Q::new(BigInt::from(*n), BigInt::from(ptotal))))
                .collect();

            let inv = bayes_invert(&channel, &prior).unwrap();
            // Joint symmetry: [x]·⟨x|y⟩ = [y]·⟨y|x⟩.
            for x in &inputs {
                for y in &outputs {
                    prop_assert_eq!(
                        prior[x].clone() * channel.entry(x, y),
                        inv.output_marginal[y].clone() * inv.inverse.entry(y, x)
                    );
                }
            }
            // Inverting the inverse with the output marginal recovers the
            // original channel.
            let back = bayes_invert(&inv.inverse, &inv.output_marginal).unwrap();
            for x in &inputs {
                prop_assert_eq!(&back.output_marginal[x], &prior[x]);
                for y in &outputs {
                    prop_assert_eq!(back.inverse.entry(x, y), channel.entry(x, y));
                }
            }
        }

        #[test]
        fn entropy_stays_between_point_mass_and_uniform(nums in proptest::collection::vec(0u32..10, 4)) {
            prop_assume!(nums.iter().sum::<u32>() > 0);
            let total: u32 = nums.iter().sum();
            let d: BTreeMap<String, Q> = nums
                .iter()
                .enumerate()
                .map(|(i, n)| (format!("v{i}"), Q::new(BigInt::from(*n), BigInt::from(total))))
                .collect();
            let h = entropy(&d).unwrap();
            prop_assert!(h.bits >= -1e-12);
            prop_assert!(h.bits <= 2.0 + 1e-12); // log2(4)
        }

        #[test]
        fn random_two_key_ciphers_match_the_counting_oracle(perm in 0usize..6, swap in proptest::bool::ANY) {
            // Key k0 applies a random permutation of three messages; key k1
            // optionally swaps the first two.
            let msgs = [s("m0"), s("m1"), s("m2")];
            let perms = [
                [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
            ];
            let p0 = perms[perm];
            let p1 = if swap { [1, 0, 2] } else { [0, 1, 2] };
            let mut encrypt = BTreeMap::new();
            let mut decrypt = BTreeMap::new();
            for (key, p) in [("k0", p0), ("k1", p1)] {
                for (i, m) in msgs.iter().enumerate() {
                    let c = msgs[p[i]].clone();
                    encrypt.insert((s(key), m.clone()), c.clone());
                    decrypt.insert((s(key), c), m.clone());
                }
            }
            let cipher = Cipher::new(
                vec![s("k0"), s("k1")],
                msgs.to_vec(),
                msgs.to_vec(),
                encrypt.clone(),
                decrypt,
            ).unwrap();
            let guess = guessing_channel(&cipher);
            for c in &msgs {
                for m in &msgs {
                    let count = ["k0", "k1"]
                        .iter()
                        .filter(|k| encrypt[&(s(k), m.clone())] == *c)
                        .count() as i64;
                    prop_assert_eq!(guess.entry(c, m), q(count, 2));
                }
                let sum: Q = msgs.iter().map(|m| guess.entry(c, m)).sum();
                prop_assert_eq!(sum, q(1, 1));
            }
        }
    }

    #[test]
    fn entropy_of_point_mass_and_uniform_hit_the_bounds() {
        let point = entropy(&dist(&[("a", q(1, 1)), ("b", q(0, 1))])).unwrap();
        assert_eq!(point.bits, 0.0);
        let uniform = entropy(&dist(&[
            ("a", q(1, 4)),
            ("b", q(1, 4)),
            ("c", q(1, 4)),
            ("d", q(1, 4)),
        ]))
        .unwrap();
        assert_eq!(uniform.bits, 2.0);
    }

    #[test]
    fn embedded_elevator_reproduces_the_relational_witness() {
        let relational = crate::channels::shared_elevator(2);
        let stochastic = embed_relational(&relational).unwrap();
        let report = stochastic.check_prob_noninterference("B", 4).unwrap();
        assert!(!report.noninterfering);
        let w = report.witness.unwrap();
        let relational_report = relational
            .check_noninterference("B", crate::channels::Mode::Bounded(4))
            .unwrap();
        let rw = relational_report.witness.unwrap();
        assert_eq!(w.history, rw.left);
        assert_eq!(w.purged, rw.right);
        // The first differing output word: the purged run produces it with
        // certainty while the local view never sees it.
        assert_eq!(w.viewed_probability, q(0, 1));
        assert_eq!(w.purged_probability, q(1, 1));
        assert!(report.skipped_worldviews.is_empty());
    }

    #[test]
    fn relational_and_stochastic_verdicts_agree_on_corpus() {
        for (model, subjects) in [
            (crate::channels::shared_elevator(2), ["A", "B"]),
            (crate::channels::shared_elevator(3), ["A", "B"]),
        ] {
            let embedded = embed_relational(&model).unwrap();
            for u in subjects {
                let relational = model
                    .check_noninterference(u, crate::channels::Mode::Bounded(3))
                    .unwrap();
                let stochastic = embedded.check_prob_noninterference(u, 3).unwrap();
                assert_eq!(relational.noninterfering, stochastic.noninterfering);
            }
        }
    }

    fn noisy_shared_channel() -> SharedStochasticModel {
        // Rows identical for all contexts with equal purge: B's step output
        // distribution depends only on B's own last input.
        let file = StochasticTransducerFile {
            inputs: vec![s("in-A"), s("in-B")],
            outputs: vec![s("out-0"), s("out-1")],
            states: vec![s("s")],
            initial: s("s"),
            transitions: vec![
                StochasticTransitionFile {
                    state: s("s"),
                    input: s("in-A"),
                    next: s("s"),
                    output: s("out-0"),
                    probability: "1/3".into(),
                },
                StochasticTransitionFile {
                    state: s("s"),
                    input: s("in-A"),
                    next: s("s"),
                    output: s("out-1"),
                    probability: "2/3".into(),
                },
                StochasticTransitionFile {
                    state: s("s"),
                    input: s("in-B"),
                    next: s("s"),
                    output: s("out-0"),
                    probability: "1/4".into(),
                },
                StochasticTransitionFile {
                    state: s("s"),
                    input: s("in-B"),
                    next: s("s"),
                    output: s("out-1"),
                    probability: "3/4".into(),
                },
            ],
        };
        SharedStochasticModel {
            transducer: StochasticTransducer::try_from(file).unwrap(),
            subjects: vec![s("A"), s("B")],
            levels: Poset::from_covers(vec![s("lA"), s("lB")], vec![]).unwrap(),
            pl: [(s("in-A"), s("lA")), (s("in-B"), s("lB"))].into(),
            cl: [(s("A"), s("lA")), (s("B"), s("lB"))].into(),
            input_source: None,
        }
    }

    #[test]
    fn memoryless_noisy_channel_is_noninterfering() {
        let m = noisy_shared_channel();
        for u in ["A", "B"] {
            let report = m.check_prob_noninterference(u, 4).unwrap();
            assert!(report.noninterfering, "{u}");
        }
    }

    #[test]
    fn single_subject_stochastic_model_is_noninterfering() {
        let mut m = noisy_shared_channel();
        m.subjects = vec![s("A")];
        m.cl = [(s("A"), s("lA"))].into();
        // Everything is A's: relabel in-B's level to lA.
        m.pl.insert(s("in-B"), s("lA"));
        let report = m.check_prob_noninterference("A", 4).unwrap();
        assert!(report.noninterfering);
        assert!(report.skipped_worldviews.is_empty());
    }

    #[test]
    fn zero_probability_worldviews_are_skipped_and_reported() {
        let relational = crate::channels::shared_elevator(2);
        let mut m = embed_relational(&relational).unwrap();
        // Bob never presses call-1: worldviews containing it cannot occur.
        m.input_source = Some(
            [
                (s("call-0-A"), s("1/3")),
                (s("call-1-A"), s("1/3")),
                (s("call-0-B"), s("1/3")),
                (s("call-1-B"), s("0")),
            ]
            .into(),
        );
        let report = m.check_prob_noninterference("B", 3).unwrap();
        assert!(report
            .skipped_worldviews
            .iter()
            .all(|w| w.contains(&s("call-1-B"))));
        assert!(!report.skipped_worldviews.is_empty());
        // Interference is still caught through call-0 worldviews.
        assert!(!report.noninterfering);
    }

    #[test]
    fn one_time_pad_is_perfectly_secret_both_ways() {
        let otp = one_time_pad(1);
        let guess = guessing_channel(&otp);
        for c in ["0", "1"] {
            for m in ["0", "1"] {
                assert_eq!(guess.entry(c, m), q(1, 2));
            }
        }
        assert!(guess.unreachable.is_empty());
        let prior = dist(&[("0", q(1, 2)), ("1", q(1, 2))]);
        let report = check_perfect_secrecy(&otp, &prior).unwrap();
        assert!(report.pointwise_secret);
        assert!(report.projector_secret);
        assert!(report.routes_agree);
    }

    #[test]
    fn identity_cipher_fails_both_routes_with_the_same_witness() {
        let cipher = identity_cipher(&["0", "1"], &["k0", "k1"]);
        let prior = dist(&[("0", q(1, 2)), ("1", q(1, 2))]);
        let report = check_perfect_secrecy(&cipher, &prior).unwrap();
        assert!(!report.pointwise_secret);
        assert!(!report.projector_secret);
        assert!(report.routes_agree);
        let pw = report.pointwise_witness.unwrap();
        let pj = report.projector_witness.unwrap();
        assert_eq!((pw.ciphertext.clone(), pw.message.clone()),
                   (pj.ciphertext.clone(), pj.message.clone()));
        assert_eq!(pw.lhs, q(1, 1));
        assert_eq!(pw.rhs, q(1, 2));
        assert_eq!(pj.lhs, q(1, 1));
        assert_eq!(pj.rhs, q(1, 2));
    }

    #[test]
    fn single_key_cipher_guesses_are_certain() {
        let cipher = identity_cipher(&["a", "b"], &["k"]);
        let guess = guessing_channel(&cipher);
        assert_eq!(guess.entry("a", "a"), q(1, 1));
        assert_eq!(guess.entry("a", "b"), q(0, 1));
    }

    #[test]
    fn inversion_projector_identity_on_a_toy_table() {
        let encrypt: BTreeMap<String, String> =
            [(s("m0"), s("c1")), (s("m1"), s("c0")), (s("m2"), s("c1"))].into();
        // A correct inverter picks any preimage.
        let good: BTreeMap<String, String> = [(s("c1"), s("m2")), (s("c0"), s("m1"))].into();
        assert!(inverts_encryption(&encrypt, &good));
        // A wrong inverter misses c0.
        let bad: BTreeMap<String, String> = [(s("c1"), s("m0")), (s("c0"), s("m2"))].into();
        assert!(!inverts_encryption(&encrypt, &bad));
    }

    #[test]
    fn channel_files_round_trip() {
        let (channel, _) = monty_hall();
        let json = serde_json::to_string(&channel).unwrap();
        let back: StochasticChannel = serde_json::from_str(&json).unwrap();
        assert_eq!(channel, back);

        let otp = one_time_pad(1);
        let json = serde_json::to_string(&otp).unwrap();
        let back: Cipher = serde_json::from_str(&json).unwrap();
        assert_eq!(otp, back);
    }

    #[test]
    fn stochastic_rows_must_sum_to_one() {
        let bad = StochasticChannel::new(
            vec![s("x")],
            vec![s("y"), s("z")],
            [(s("x"), dist(&[("y", q(1, 2)), ("z", q(1, 3))]))].into(),
        );
        assert!(matches!(bad, Err(StochasticError::NotStochastic { .. })));
    }
}

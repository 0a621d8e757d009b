//! Tabular data privacy: quasi-identifier linkage, k-anonymity with
//! generalization and suppression, and differential privacy through the
//! Laplace mechanism with a privacy-budget ledger.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PrivacyError {
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("duplicate {kind} {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("record {record} has {got} cells, expected {expected}")]
    RaggedRecord {
        record: usize,
        got: usize,
        expected: usize,
    },
    #[error("value {value:?} is outside the domain of attribute {attribute:?}")]
    OutsideDomain { attribute: String, value: String },
    #[error("hierarchy for {attribute:?} does not cover value {value:?}")]
    NotCovered { attribute: String, value: String },
    #[error("hierarchy for {attribute:?} is not a tree: {value_a:?} and {value_b:?} share class {class:?} but diverge above it")]
    NotNested {
        attribute: String,
        value_a: String,
        value_b: String,
        class: String,
    },
    #[error("hierarchy chains for {attribute:?} have unequal depths")]
    UnevenChains { attribute: String },
    #[error("k must be at least 1")]
    BadK,
    #[error("privacy parameter must be positive, got {value}")]
    BadEpsilon { value: f64 },
    #[error("cell {value:?} of attribute {attribute:?} is not numeric")]
    NotNumeric { attribute: String, value: String },
    #[error("privacy budget exhausted: {spent} of {budget} already spent, query costs {cost}")]
    BudgetExhausted {
        spent: f64,
        budget: f64,
        cost: f64,
    },
    #[error("tables are not adjacent: they differ in {differing} records")]
    NotAdjacent { differing: usize },
    #[error("k-anonymity needs at most {budget} suppressions but the best level vector still leaves {deficit} records in undersized groups (best achievable k with the budget: {best_k})")]
    InfeasibleBudget {
        budget: usize,
        deficit: usize,
        best_k: usize,
    },
    #[error("csv error: {0}")]
    Csv(String),
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeRole {
    Identifier,
    QuasiCandidate,
    Sensitive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub role: AttributeRole,
    /// Closed value domain; open when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BTreeSet<String>>,
}

/// A database table: records × attributes with every cell inside its
/// attribute's domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableFile", into = "TableFile")]
pub struct Table {
    attributes: Vec<Attribute>,
    records: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TableFile {
    attributes: Vec<Attribute>,
    records: Vec<Vec<String>>,
}

impl TryFrom<TableFile> for Table {
    type Error = PrivacyError;
    fn try_from(f: TableFile) -> Result<Table, PrivacyError> {
        Table::new(f.attributes, f.records)
    }
}

impl From<Table> for TableFile {
    fn from(t: Table) -> TableFile {
        TableFile {
            attributes: t.attributes,
            records: t.records,
        }
    }
}

impl Table {
    pub fn new(
        attributes: Vec<Attribute>,
        records: Vec<Vec<String>>,
    ) -> Result<Table, PrivacyError> {
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.name.clone()) {
                return Err(PrivacyError::DuplicateName {
                    kind: "attribute",
                    name: a.name.clone(),
                });
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.len() != attributes.len() {
                return Err(PrivacyError::RaggedRecord {
                    record: i,
                    got: r.len(),
                    expected: attributes.len(),
                });
            }
            for (a, v) in attributes.iter().zip(r) {
                if let Some(domain) = &a.domain {
                    if !domain.contains(v) {
                        return Err(PrivacyError::OutsideDomain {
                            attribute: a.name.clone(),
                            value: v.clone(),
                        });
                    }
                }
            }
        }
        Ok(Table {
            attributes,
            records,
        })
    }

    /// Read a table from CSV text plus a JSON sidecar declaring the
    /// attribute roles and domains. The CSV header must match the sidecar's
    /// attribute names.
    pub fn from_csv(csv_text: &str, sidecar_json: &str) -> Result<Table, PrivacyError> {
        #[derive(Deserialize)]
        struct Sidecar {
            attributes: Vec<Attribute>,
        }
        let sidecar: Sidecar =
            serde_json::from_str(sidecar_json).map_err(|e| PrivacyError::Csv(e.to_string()))?;
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| PrivacyError::Csv(e.to_string()))?
            .clone();
        let names: Vec<String> = sidecar.attributes.iter().map(|a| a.name.clone()).collect();
        let got: Vec<String> = headers.iter().map(str::to_owned).collect();
        if names != got {
            return Err(PrivacyError::Csv(format!(
                "header {got:?} does not match declared attributes {names:?}"
            )));
        }
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| PrivacyError::Csv(e.to_string()))?;
            records.push(row.iter().map(str::to_owned).collect());
        }
        Table::new(sidecar.attributes, records)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn records(&self) -> &[Vec<String>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize, PrivacyError> {
        self.attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| PrivacyError::UnknownName {
                kind: "attribute",
                name: name.to_owned(),
            })
    }

    pub fn cell(&self, record: usize, attribute: &str) -> Result<&str, PrivacyError> {
        let a = self.attribute_index(attribute)?;
        Ok(&self.records[record][a])
    }

    /// The tuple of the record's values at the given attributes, in order.
    pub fn tuple(&self, record: usize, attrs: &[String]) -> Result<Vec<String>, PrivacyError> {
        attrs
            .iter()
            .map(|a| self.cell(record, a).map(str::to_owned))
            .collect()
    }

    /// Group record indices by their value tuple at the given attributes.
    pub fn group_by(
        &self,
        attrs: &[String],
    ) -> Result<BTreeMap<Vec<String>, Vec<usize>>, PrivacyError> {
        let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
        for r in 0..self.records.len() {
            groups.entry(self.tuple(r, attrs)?).or_default().push(r);
        }
        Ok(groups)
    }

    /// A copy without the given record indices.
    pub fn without_records(&self, drop: &BTreeSet<usize>) -> Table {
        Table {
            attributes: self.attributes.clone(),
            records: self
                .records
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, r)| r.clone())
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Quasi-identifier linkage
// ---------------------------------------------------------------------------

/// One record of the inspected table re-identified through an external
/// table: its quasi-tuple matches exactly one external record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Identification {
    pub record: usize,
    pub tuple: Vec<String>,
    pub external_record: usize,
    /// The external record's identifier values (its non-join attributes).
    pub entity: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QidFinding {
    pub attributes: Vec<String>,
    pub identified: Vec<Identification>,
}

/// Search attribute subsets of the join attributes (up to `size_cap`) for
/// quasi-identifiers: subsets whose value tuple links some record of `t` to
/// exactly one record of the external table.
pub fn find_quasi_identifiers(
    t: &Table,
    external: &Table,
    join_attrs: &[String],
    size_cap: usize,
) -> Result<Vec<QidFinding>, PrivacyError> {
    for a in join_attrs {
        t.attribute_index(a)?;
        external.attribute_index(a)?;
    }
    let entity_attrs: Vec<String> = external
        .attributes()
        .iter()
        .filter(|a| !join_attrs.contains(&a.name))
        .map(|a| a.name.clone())
        .collect();
    let mut findings = Vec::new();
    for subset in subsets_upto(join_attrs, size_cap) {
        let external_groups = external.group_by(&subset)?;
        let mut identified = Vec::new();
        for r in 0..t.len() {
            let tuple = t.tuple(r, &subset)?;
            if let Some(matches) = external_groups.get(&tuple) {
                if matches.len() == 1 {
                    identified.push(Identification {
                        record: r,
                        tuple,
                        external_record: matches[0],
                        entity: external.tuple(matches[0], &entity_attrs)?,
                    });
                }
            }
        }
        if !identified.is_empty() {
            findings.push(QidFinding {
                attributes: subset,
                identified,
            });
        }
    }
    Ok(findings)
}

fn subsets_upto(attrs: &[String], cap: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    let n = attrs.len();
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > cap {
            continue;
        }
        out.push(
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| attrs[i].clone())
                .collect(),
        );
    }
    out.sort_by_key(|s| (s.len(), s.clone()));
    out
}

/// One step of a narrowing linkage: after matching the target's values on
/// the attribute prefix, this many external candidates remain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NarrowingStep {
    pub attribute: String,
    pub candidates: usize,
}

/// Replay a linkage chain: match a target value tuple against an external
/// table one attribute at a time and report how the candidate set narrows.
pub fn replay_linkage(
    external: &Table,
    chain: &[(String, String)],
) -> Result<Vec<NarrowingStep>, PrivacyError> {
    let mut candidates: Vec<usize> = (0..external.len()).collect();
    let mut steps = Vec::new();
    for (attribute, value) in chain {
        let a = external.attribute_index(attribute)?;
        candidates.retain(|r| external.records()[*r][a] == *value);
        steps.push(NarrowingStep {
            attribute: attribute.clone(),
            candidates: candidates.len(),
        });
    }
    Ok(steps)
}

// ---------------------------------------------------------------------------
// k-anonymity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolatingGroup {
    pub tuple: Vec<String>,
    pub records: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KAnonymityReport {
    pub k: usize,
    pub quasi_attributes: Vec<String>,
    pub anonymous: bool,
    pub group_count: usize,
    pub min_group_size: usize,
    /// Groups smaller than k, smallest first (ties by tuple order).
    pub violating: Vec<ViolatingGroup>,
}

/// Does every occurring quasi-tuple appear in at least k records? Checking
/// the full attribute set suffices for all its subsets, because subset
/// groups are unions of full-tuple groups.
pub fn check_k_anonymity(
    t: &Table,
    k: usize,
    quasi_attrs: &[String],
) -> Result<KAnonymityReport, PrivacyError> {
    if k < 1 {
        return Err(PrivacyError::BadK);
    }
    let groups = t.group_by(quasi_attrs)?;
    let mut violating: Vec<ViolatingGroup> = groups
        .iter()
        .filter(|(_, rs)| rs.len() < k)
        .map(|(tuple, rs)| ViolatingGroup {
            tuple: tuple.clone(),
            records: rs.clone(),
        })
        .collect();
    violating.sort_by_key(|g| (g.records.len(), g.tuple.clone()));
    Ok(KAnonymityReport {
        k,
        quasi_attributes: quasi_attrs.to_vec(),
        anonymous: violating.is_empty(),
        group_count: groups.len(),
        min_group_size: groups.values().map(Vec::len).min().unwrap_or(0),
        violating,
    })
}

// ---------------------------------------------------------------------------
// Generalization hierarchies
// ---------------------------------------------------------------------------

/// A per-attribute generalization tree, stored as one chain of value
/// classes per raw value: level 0 is the raw value, the last level is the
/// root class. Chains must be nested: values sharing a class at some level
/// share all classes above it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HierarchyFile", into = "HierarchyFile")]
pub struct Hierarchy {
    attribute: String,
    depth: usize,
    chains: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct HierarchyFile {
    attribute: String,
    chains: BTreeMap<String, Vec<String>>,
}

impl TryFrom<HierarchyFile> for Hierarchy {
    type Error = PrivacyError;
    fn try_from(f: HierarchyFile) -> Result<Hierarchy, PrivacyError> {
        Hierarchy::new(f.attribute, f.chains)
    }
}

impl From<Hierarchy> for HierarchyFile {
    fn from(h: Hierarchy) -> HierarchyFile {
        HierarchyFile {
            attribute: h.attribute,
            chains: h.chains,
        }
    }
}

impl Hierarchy {
    pub fn new(
        attribute: String,
        chains: BTreeMap<String, Vec<String>>,
    ) -> Result<Hierarchy, PrivacyError> {
        let depth = chains.values().next().map(Vec::len).unwrap_or(0);
        for chain in chains.values() {
            if chain.len() != depth {
                return Err(PrivacyError::UnevenChains {
                    attribute: attribute.clone(),
                });
            }
        }
        // Nesting: equal class at level l forces equal classes above l.
        let entries: Vec<(&String, &Vec<String>)> = chains.iter().collect();
        for (i, (va, ca)) in entries.iter().enumerate() {
            for (vb, cb) in entries.iter().skip(i + 1) {
                for l in 0..depth {
                    if ca[l] == cb[l] {
                        for m in l + 1..depth {
                            if ca[m] != cb[m] {
                                return Err(PrivacyError::NotNested {
                                    attribute: attribute.clone(),
                                    value_a: (*va).clone(),
                                    value_b: (*vb).clone(),
                                    class: ca[l].clone(),
                                });
                            }
                        }
                        break;
                    }
                }
            }
        }
        Ok(Hierarchy {
            attribute,
            depth,
            chains,
        })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    /// Number of levels above the raw values.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The value's class at the given level; level 0 is the raw value.
    pub fn generalize(&self, value: &str, level: usize) -> Result<String, PrivacyError> {
        if level == 0 {
            return Ok(value.to_owned());
        }
        let chain = self
            .chains
            .get(value)
            .ok_or_else(|| PrivacyError::NotCovered {
                attribute: self.attribute.clone(),
                value: value.to_owned(),
            })?;
        Ok(chain[(level - 1).min(self.depth - 1)].clone())
    }
}

/// Build a hierarchy for ZIP-like codes by masking trailing characters:
/// one level per masked character, root masks all but `keep` characters.
pub fn masking_hierarchy(attribute: &str, values: &[&str], keep: usize) -> Hierarchy {
    let mut chains = BTreeMap::new();
    for v in values {
        let mut chain = Vec::new();
        let len = v.chars().count();
        for masked in 1..=len.saturating_sub(keep) {
            let kept: String = v.chars().take(len - masked).collect();
            chain.push(format!("{}{}", kept, "*".repeat(masked)));
        }
        chains.insert((*v).to_owned(), chain);
    }
    Hierarchy::new(attribute.to_owned(), chains).expect("masking chains are nested")
}

// ---------------------------------------------------------------------------
// Anonymization by generalization and suppression
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnonymizationLineage {
    /// Chosen generalization level per quasi-attribute, in argument order.
    pub levels: Vec<usize>,
    /// Record indices of the input table that were suppressed.
    pub suppressed: Vec<usize>,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Anonymization {
    pub table: Table,
    pub lineage: AnonymizationLineage,
}

fn generalized_table(
    t: &Table,
    quasi_attrs: &[String],
    hierarchies: &BTreeMap<String, Hierarchy>,
    levels: &[usize],
) -> Result<Table, PrivacyError> {
    let mut records = t.records().to_vec();
    for (attr, level) in quasi_attrs.iter().zip(levels) {
        if *level == 0 {
            continue;
        }
        let idx = t.attribute_index(attr)?;
        let h = &hierarchies[attr];
        for r in &mut records {
            r[idx] = h.generalize(&r[idx], *level)?;
        }
    }
    // Generalized values leave the declared domains; drop the domains.
    let attributes = t
        .attributes()
        .iter()
        .map(|a| Attribute {
            name: a.name.clone(),
            role: a.role,
            domain: None,
        })
        .collect();
    Table::new(attributes, records)
}

/// All level vectors in search order: total depth first, then
/// lexicographically (attribute argument order breaks ties).
fn level_vectors(maxima: &[usize]) -> Vec<Vec<usize>> {
    let mut all = vec![vec![]];
    for m in maxima {
        let mut next = Vec::new();
        for v in &all {
            for l in 0..=*m {
                let mut w = v.clone();
                w.push(l);
                next.push(w);
            }
        }
        all = next;
    }
    all.sort_by_key(|v| (v.iter().sum::<usize>(), v.clone()));
    all
}

/// Make the table k-anonymous on the quasi-attributes by the least
/// generalization (total depth, then attribute order) that succeeds after
/// suppressing at most `suppression_budget` records.
pub fn anonymize(
    t: &Table,
    k: usize,
    quasi_attrs: &[String],
    hierarchies: &BTreeMap<String, Hierarchy>,
    suppression_budget: usize,
) -> Result<Anonymization, PrivacyError> {
    if k < 1 {
        return Err(PrivacyError::BadK);
    }
    for attr in quasi_attrs {
        t.attribute_index(attr)?;
        if !hierarchies.contains_key(attr) {
            return Err(PrivacyError::UnknownName {
                kind: "hierarchy",
                name: attr.clone(),
            });
        }
    }
    let maxima: Vec<usize> = quasi_attrs.iter().map(|a| hierarchies[a].depth()).collect();
    let mut best_k = 0usize;
    let mut least_deficit = usize::MAX;
    for levels in level_vectors(&maxima) {
        let g = generalized_table(t, quasi_attrs, hierarchies, &levels)?;
        let groups = g.group_by(quasi_attrs)?;
        let undersized: BTreeSet<usize> = groups
            .values()
            .filter(|rs| rs.len() < k)
            .flat_map(|rs| rs.iter().copied())
            .collect();
        if undersized.len() <= suppression_budget {
            let table = g.without_records(&undersized);
            let report = check_k_anonymity(&table, k, quasi_attrs)?;
            debug_assert!(report.anonymous || table.is_empty());
            return Ok(Anonymization {
                table,
                lineage: AnonymizationLineage {
                    levels,
                    suppressed: undersized.into_iter().collect(),
                    k,
                },
            });
        }
        least_deficit = least_deficit.min(undersized.len());
        // Best k achievable at this vector with the budget: suppress the
        // smallest groups first, then take the smallest surviving group.
        let mut sizes: Vec<usize> = groups.values().map(Vec::len).collect();
        sizes.sort_unstable();
        let mut budget = suppression_budget;
        let mut survivors = sizes.clone();
        let mut cut = 0;
        for s in &sizes {
            if *s <= budget {
                budget -= s;
                cut += 1;
            } else {
                break;
            }
        }
        survivors.drain(..cut);
        if let Some(min) = survivors.first() {
            best_k = best_k.max(*min);
        }
    }
    Err(PrivacyError::InfeasibleBudget {
        budget: suppression_budget,
        deficit: least_deficit,
        best_k,
    })
}

// ---------------------------------------------------------------------------
// Differential privacy: queries, the Laplace mechanism, the budget ledger
// ---------------------------------------------------------------------------

/// Numeric queries with computable global sensitivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Query {
    /// Number of records whose attribute equals the value; sensitivity 1.
    Count { attribute: String, value: String },
    /// Sum of a numeric attribute clamped into [lower, upper];
    /// sensitivity upper − lower.
    BoundedSum {
        attribute: String,
        lower: f64,
        upper: f64,
    },
}

impl Query {
    pub fn evaluate(&self, t: &Table) -> Result<f64, PrivacyError> {
        match self {
            Query::Count { attribute, value } => {
                let a = t.attribute_index(attribute)?;
                Ok(t.records().iter().filter(|r| r[a] == *value).count() as f64)
            }
            Query::BoundedSum {
                attribute,
                lower,
                upper,
            } => {
                let a = t.attribute_index(attribute)?;
                let mut total = 0.0;
                for r in t.records() {
                    let v: f64 = r[a].parse().map_err(|_| PrivacyError::NotNumeric {
                        attribute: attribute.clone(),
                        value: r[a].clone(),
                    })?;
                    total += v.clamp(*lower, *upper);
                }
                Ok(total)
            }
        }
    }

    /// Global sensitivity: the largest possible change of the query value
    /// between tables differing in at most one record.
    pub fn global_sensitivity(&self) -> f64 {
        match self {
            Query::Count { .. } => 1.0,
            Query::BoundedSum { lower, upper, .. } => upper - lower,
        }
    }
}

/// A noisy disclosure mechanism: query plus privacy parameter, noise scale
/// λ = GS/ε, and a spending ledger against a total privacy budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisclosureMechanism {
    pub query: Query,
    pub epsilon: f64,
    pub budget: f64,
    #[serde(default)]
    spent: f64,
    /// Test-only override of the noise scale (negative controls). The
    /// mechanism is only differentially private at the declared ε when this
    /// is unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_override: Option<f64>,
}

/// One noisy answer together with the ledger state after it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisyAnswer {
    pub value: f64,
    pub epsilon_spent: f64,
    pub budget_remaining: f64,
}

/// Inverse-CDF Laplace sample with scale λ from a seeded generator. The
/// explicit seed makes runs reproducible; production use must replace the
/// seeded generator with a cryptographic source.
pub fn laplace_sample(rng: &mut impl Rng, lambda: f64) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    let inner = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    -lambda * u.signum() * inner.ln()
}

impl DisclosureMechanism {
    pub fn new(query: Query, epsilon: f64, budget: f64) -> Result<Self, PrivacyError> {
        if !(epsilon > 0.0) {
            return Err(PrivacyError::BadEpsilon { value: epsilon });
        }
        Ok(DisclosureMechanism {
            query,
            epsilon,
            budget,
            spent: 0.0,
            lambda_override: None,
        })
    }

    /// Noise scale λ = GS/ε (unless overridden for a negative control).
    pub fn lambda(&self) -> f64 {
        self.lambda_override
            .unwrap_or(self.query.global_sensitivity() / self.epsilon)
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    /// Answer the query with Laplace noise, spending ε from the budget.
    pub fn laplace_answer(&mut self, t: &Table, seed: u64) -> Result<NoisyAnswer, PrivacyError> {
        if self.spent + self.epsilon > self.budget + 1e-12 {
            return Err(PrivacyError::BudgetExhausted {
                spent: self.spent,
                budget: self.budget,
                cost: self.epsilon,
            });
        }
        let exact = self.query.evaluate(t)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let value = exact + laplace_sample(&mut rng, self.lambda());
        self.spent += self.epsilon;
        Ok(NoisyAnswer {
            value,
            epsilon_spent: self.epsilon,
            budget_remaining: self.budget - self.spent,
        })
    }

    /// One noisy answer without touching the ledger (Monte-Carlo trials).
    fn sample_answer(&self, exact: f64, rng: &mut impl Rng) -> f64 {
        exact + laplace_sample(rng, self.lambda())
    }
}

/// The normalized ratio: min(x,y)/max(x,y) for non-negative x, y.
pub fn normalized_ratio(x: f64, y: f64) -> f64 {
    if x <= y {
        x / y
    } else {
        y / x
    }
}

/// Do two tables differ in at most one record (as multisets)?
pub fn tables_adjacent(a: &Table, b: &Table) -> bool {
    if a.attributes() != b.attributes() {
        return false;
    }
    let mut counts: BTreeMap<&Vec<String>, i64> = BTreeMap::new();
    for r in a.records() {
        *counts.entry(r).or_default() += 1;
    }
    for r in b.records() {
        *counts.entry(r).or_default() -= 1;
    }
    let added: i64 = counts.values().filter(|c| **c > 0).sum();
    let removed: i64 = -counts.values().filter(|c| **c < 0).sum::<i64>();
    added <= 1 && removed <= 1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinRatio {
    pub low: f64,
    pub high: f64,
    pub count_left: usize,
    pub count_right: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioTestReport {
    pub trials: usize,
    pub bins: usize,
    pub epsilon: f64,
    /// Minimum normalized ratio over bins with enough mass on both sides.
    pub min_ratio: f64,
    /// The privacy bound e^{−ε}.
    pub bound: f64,
    /// PASS iff min_ratio ≥ e^{−ε}·(1 − tolerance).
    pub pass: bool,
    pub tolerance: f64,
    pub considered_bins: Vec<BinRatio>,
}

/// Monte-Carlo check of the differential-privacy bound: histogram the
/// mechanism's answers on two adjacent tables and verify every
/// well-populated bin's normalized probability ratio stays above e^{−ε}.
pub fn dp_ratio_test(
    mechanism: &DisclosureMechanism,
    t: &Table,
    t_adjacent: &Table,
    trials: usize,
    bins: usize,
    seed: u64,
    tolerance: f64,
) -> Result<RatioTestReport, PrivacyError> {
    if !tables_adjacent(t, t_adjacent) {
        let differing = t
            .records()
            .iter()
            .filter(|r| !t_adjacent.records().contains(r))
            .count()
            .max(
                t_adjacent
                    .records()
                    .iter()
                    .filter(|r| !t.records().contains(r))
                    .count(),
            );
        return Err(PrivacyError::NotAdjacent { differing });
    }
    let exact_left = mechanism.query.evaluate(t)?;
    let exact_right = mechanism.query.evaluate(t_adjacent)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let left: Vec<f64> = (0..trials)
        .map(|_| mechanism.sample_answer(exact_left, &mut rng))
        .collect();
    let right: Vec<f64> = (0..trials)
        .map(|_| mechanism.sample_answer(exact_right, &mut rng))
        .collect();

    let lo = left
        .iter()
        .chain(&right)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = left
        .iter()
        .chain(&right)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let bin_of = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut count_left = vec![0usize; bins];
    let mut count_right = vec![0usize; bins];
    for x in &left {
        count_left[bin_of(*x)] += 1;
    }
    for x in &right {
        count_right[bin_of(*x)] += 1;
    }

    // Only bins with enough mass on both sides say anything statistically.
    let min_count = (trials / (bins * 10)).max(25);
    let mut considered = Vec::new();
    let mut min_ratio = 1.0f64;
    for b in 0..bins {
        if count_left[b] < min_count || count_right[b] < min_count {
            continue;
        }
        let ratio = normalized_ratio(count_left[b] as f64, count_right[b] as f64);
        min_ratio = min_ratio.min(ratio);
        considered.push(BinRatio {
            low: lo + b as f64 * width,
            high: lo + (b + 1) as f64 * width,
            count_left: count_left[b],
            count_right: count_right[b],
            ratio,
        });
    }
    let bound = (-mechanism.epsilon).exp();
    Ok(RatioTestReport {
        trials,
        bins,
        epsilon: mechanism.epsilon,
        min_ratio,
        bound,
        pass: min_ratio >= bound * (1.0 - tolerance),
        tolerance,
        considered_bins: considered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &str) -> String {
        v.to_owned()
    }

    fn attr(name: &str, role: AttributeRole) -> Attribute {
        Attribute {
            name: s(name),
            role,
            domain: None,
        }
    }

    fn rows(data: &[&[&str]]) -> Vec<Vec<String>> {
        data.iter()
            .map(|r| r.iter().map(|v| s(v)).collect())
            .collect()
    }

    /// The six-record medical table with names attached.
    fn medical_table() -> Table {
        Table::new(
            vec![
                attr("Name", AttributeRole::Identifier),
                attr("Zipcode", AttributeRole::QuasiCandidate),
                attr("Age", AttributeRole::QuasiCandidate),
                attr("Sex", AttributeRole::QuasiCandidate),
                attr("Disease", AttributeRole::Sensitive),
            ],
            rows(&[
                &["Alice", "47677", "29", "F", "ovarian cancer"],
                &["Betty", "47602", "22", "F", "ovarian cancer"],
                &["Charles", "47678", "27", "M", "prostate cancer"],
                &["David", "47905", "43", "M", "flu"],
                &["Emily", "47909", "52", "F", "heart disease"],
                &["Fred", "47906", "47", "M", "heart disease"],
            ]),
        )
        .unwrap()
    }

    /// The same table with the identifier column removed.
    fn medical_anonymized() -> Table {
        Table::new(
            vec![
                attr("Zipcode", AttributeRole::QuasiCandidate),
                attr("Age", AttributeRole::QuasiCandidate),
                attr("Sex", AttributeRole::QuasiCandidate),
                attr("Disease", AttributeRole::Sensitive),
            ],
            rows(&[
                &["47677", "29", "F", "ovarian cancer"],
                &["47602", "22", "F", "ovarian cancer"],
                &["47678", "27", "M", "prostate cancer"],
                &["47905", "43", "M", "flu"],
                &["47909", "52", "F", "heart disease"],
                &["47906", "47", "M", "heart disease"],
            ]),
        )
        .unwrap()
    }

    fn voter_register() -> Table {
        Table::new(
            vec![
                attr("Name", AttributeRole::Identifier),
                attr("Zipcode", AttributeRole::QuasiCandidate),
                attr("Age", AttributeRole::QuasiCandidate),
                attr("Sex", AttributeRole::QuasiCandidate),
            ],
            rows(&[
                &["Alice", "47677", "29", "F"],
                &["Bob", "47983", "65", "M"],
                &["Carol", "47677", "22", "F"],
                &["Dan", "47532", "23", "M"],
                &["Ellen", "46789", "43", "F"],
            ]),
        )
        .unwrap()
    }

    #[test]
    fn linking_the_medical_table_to_the_voter_register_identifies_alice() {
        let findings = find_quasi_identifiers(
            &medical_anonymized(),
            &voter_register(),
            &[s("Zipcode"), s("Age"), s("Sex")],
            3,
        )
        .unwrap();
        let full = findings
            .iter()
            .find(|f| f.attributes == vec![s("Age"), s("Sex"), s("Zipcode")] || f.attributes == vec![s("Zipcode"), s("Age"), s("Sex")])
            .expect("full attribute set is a quasi-identifier");
        let alice = full
            .identified
            .iter()
            .find(|i| i.record == 0)
            .expect("the first record is identified");
        assert_eq!(alice.entity, vec![s("Alice")]);
        assert!(alice.tuple.contains(&s("47677")));
        assert!(alice.tuple.contains(&s("29")));
        assert!(alice.tuple.contains(&s("F")));
    }

    #[test]
    fn identical_external_rows_identify_nobody() {
        let external = Table::new(
            vec![
                attr("Name", AttributeRole::Identifier),
                attr("Zipcode", AttributeRole::QuasiCandidate),
            ],
            rows(&[
                &["P", "47677"],
                &["Q", "47677"],
                &["R", "47677"],
            ]),
        )
        .unwrap();
        let findings = find_quasi_identifiers(
            &medical_anonymized(),
            &external,
            &[s("Zipcode")],
            1,
        )
        .unwrap();
        assert!(findings.is_empty());
    }

    /// The published re-identification case: the medical table verbatim,
    /// and a voter register whose elided rows are populated so the
    /// narrative counts replay.
    fn governor_medical() -> Table {
        Table::new(
            vec![
                attr("Race", AttributeRole::QuasiCandidate),
                attr("DateOfBirth", AttributeRole::QuasiCandidate),
                attr("Gender", AttributeRole::QuasiCandidate),
                attr("ZIP", AttributeRole::QuasiCandidate),
                attr("MaritalStatus", AttributeRole::QuasiCandidate),
                attr("Problem", AttributeRole::Sensitive),
            ],
            rows(&[
                &["asian", "09/27/64", "female", "02139", "divorced", "hypertension"],
                &["asian", "09/30/64", "female", "02139", "divorced", "obesity"],
                &["asian", "04/18/64", "male", "02139", "married", "chest pain"],
                &["asian", "04/15/64", "male", "02139", "married", "obesity"],
                &["black", "03/13/63", "male", "02138", "married", "hypertension"],
                &["black", "03/18/63", "male", "02138", "married", "shortness of breath"],
                &["black", "09/13/64", "female", "02141", "married", "shortness of breath"],
                &["black", "09/07/64", "female", "02141", "married", "obesity"],
                &["white", "05/14/61", "male", "02138", "single", "chest pain"],
                &["white", "05/08/61", "male", "02138", "single", "obesity"],
                &["white", "09/15/61", "female", "02142", "widow", "shortness of breath"],
            ]),
        )
        .unwrap()
    }

    fn governor_voters() -> Table {
        // One concrete row is published; the remaining rows are elided in
        // the source and populated here so the documented narrowing counts
        // hold: six voters share the target's date of birth, three of them
        // the gender, one of those the ZIP.
        Table::new(
            vec![
                attr("Name", AttributeRole::Identifier),
                attr("ZIP", AttributeRole::QuasiCandidate),
                attr("DOB", AttributeRole::QuasiCandidate),
                attr("Gender", AttributeRole::QuasiCandidate),
            ],
            rows(&[
                &["Sue J. Carlson", "02142", "09/15/61", "female"],
                &["Ann Ames", "02138", "09/15/61", "female"],
                &["Beth Burke", "02139", "09/15/61", "female"],
                &["Carl Cole", "02142", "09/15/61", "male"],
                &["Dave Dunn", "02141", "09/15/61", "male"],
                &["Ed Evans", "02139", "09/15/61", "male"],
                &["Fay Field", "02142", "04/02/62", "female"],
                &["Gus Grant", "02138", "11/21/60", "male"],
            ]),
        )
        .unwrap()
    }

    #[test]
    fn governor_linkage_narrows_six_three_one() {
        let medical = governor_medical();
        let voters = governor_voters();
        // The target record: the one the linkage singled out.
        let target = 10usize;
        let chain = vec![
            (s("DOB"), medical.cell(target, "DateOfBirth").unwrap().to_owned()),
            (s("Gender"), medical.cell(target, "Gender").unwrap().to_owned()),
            (s("ZIP"), medical.cell(target, "ZIP").unwrap().to_owned()),
        ];
        let steps = replay_linkage(&voters, &chain).unwrap();
        let counts: Vec<usize> = steps.iter().map(|st| st.candidates).collect();
        assert_eq!(counts, vec![6, 3, 1]);
        // The survivor is the named voter.
        let survivors: Vec<usize> = (0..voters.len())
            .filter(|r| {
                chain.iter().all(|(a, v)| voters.cell(*r, a).unwrap() == v)
            })
            .collect();
        assert_eq!(survivors, vec![0]);
        assert_eq!(voters.cell(0, "Name").unwrap(), "Sue J. Carlson");
    }

    #[test]
    fn removing_identifiers_leaves_singleton_groups() {
        let report = check_k_anonymity(
            &medical_anonymized(),
            2,
            &[s("Zipcode"), s("Age"), s("Sex")],
        )
        .unwrap();
        assert!(!report.anonymous);
        assert_eq!(report.group_count, 6);
        assert_eq!(report.violating.len(), 6);
        assert!(report.violating.iter().all(|g| g.records.len() == 1));
    }

    #[test]
    fn one_anonymity_is_vacuous() {
        let report = check_k_anonymity(
            &medical_anonymized(),
            1,
            &[s("Zipcode"), s("Age"), s("Sex")],
        )
        .unwrap();
        assert!(report.anonymous);
    }

    fn kanonex_table() -> Table {
        Table::new(
            vec![
                attr("ZIP", AttributeRole::QuasiCandidate),
                attr("car", AttributeRole::QuasiCandidate),
                attr("child", AttributeRole::QuasiCandidate),
                attr("condition", AttributeRole::Sensitive),
            ],
            rows(&[
                &["96822", "Subaru Outback 1999", "8 year old", "asthma"],
                &["96813", "Subaru Forester 2001", "12 year old", "flu"],
                &["96826", "Subaru Impreza 2005", "15 year old", "allergy"],
            ]),
        )
        .unwrap()
    }

    fn kanonex_hierarchies() -> BTreeMap<String, Hierarchy> {
        let zip = Hierarchy::new(
            s("ZIP"),
            [
                (s("96822"), vec![s("96***"), s("*")]),
                (s("96813"), vec![s("96***"), s("*")]),
                (s("96826"), vec![s("96***"), s("*")]),
            ]
            .into(),
        )
        .unwrap();
        let car = Hierarchy::new(
            s("car"),
            [
                (s("Subaru Outback 1999"), vec![s("Subaru"), s("any car")]),
                (s("Subaru Forester 2001"), vec![s("Subaru"), s("any car")]),
                (s("Subaru Impreza 2005"), vec![s("Subaru"), s("any car")]),
            ]
            .into(),
        )
        .unwrap();
        let child = Hierarchy::new(
            s("child"),
            [
                (s("8 year old"), vec![s("<18 years old"), s("any age")]),
                (s("12 year old"), vec![s("<18 years old"), s("any age")]),
                (s("15 year old"), vec![s("<18 years old"), s("any age")]),
            ]
            .into(),
        )
        .unwrap();
        [(s("ZIP"), zip), (s("car"), car), (s("child"), child)].into()
    }

    #[test]
    fn generalizing_zip_car_and_child_reaches_the_group() {
        let t = kanonex_table();
        let quasi = [s("ZIP"), s("car"), s("child")];
        // Raw table: the highlighted tuple occurs exactly once.
        let before = check_k_anonymity(&t, 2, &quasi).unwrap();
        assert!(!before.anonymous);
        let result = anonymize(&t, 3, &quasi, &kanonex_hierarchies(), 0).unwrap();
        assert_eq!(result.lineage.levels, vec![1, 1, 1]);
        assert!(result.lineage.suppressed.is_empty());
        let after = check_k_anonymity(&result.table, 3, &quasi).unwrap();
        assert!(after.anonymous);
        assert_eq!(result.table.cell(0, "ZIP").unwrap(), "96***");
        assert_eq!(result.table.cell(0, "car").unwrap(), "Subaru");
        assert_eq!(result.table.cell(0, "child").unwrap(), "<18 years old");
    }

    #[test]
    fn already_anonymous_tables_stay_untouched() {
        let t = Table::new(
            vec![
                attr("zip", AttributeRole::QuasiCandidate),
                attr("disease", AttributeRole::Sensitive),
            ],
            rows(&[
                &["111", "flu"],
                &["111", "cold"],
                &["222", "flu"],
                &["222", "cold"],
            ]),
        )
        .unwrap();
        let hierarchies: BTreeMap<String, Hierarchy> =
            [(s("zip"), masking_hierarchy("zip", &["111", "222"], 1))].into();
        let result = anonymize(&t, 2, &[s("zip")], &hierarchies, 2).unwrap();
        assert_eq!(result.lineage.levels, vec![0]);
        assert!(result.lineage.suppressed.is_empty());
        assert_eq!(result.table, t.clone().without_records(&BTreeSet::new()));
    }

    #[test]
    fn a_single_outlier_is_suppressed() {
        let t = Table::new(
            vec![
                attr("zip", AttributeRole::QuasiCandidate),
                attr("disease", AttributeRole::Sensitive),
            ],
            rows(&[
                &["111", "flu"],
                &["111", "cold"],
                &["222", "flu"],
                &["222", "cold"],
                &["999", "measles"],
            ]),
        )
        .unwrap();
        // The hierarchy cannot merge 999 with the others below the root.
        let hierarchies: BTreeMap<String, Hierarchy> = [(
            s("zip"),
            Hierarchy::new(
                s("zip"),
                [
                    (s("111"), vec![s("low")]),
                    (s("222"), vec![s("low")]),
                    (s("999"), vec![s("high")]),
                ]
                .into(),
            )
            .unwrap(),
        )]
        .into();
        let result = anonymize(&t, 2, &[s("zip")], &hierarchies, 1).unwrap();
        assert_eq!(result.lineage.levels, vec![0]);
        assert_eq!(result.lineage.suppressed, vec![4]);
        assert_eq!(result.table.len(), 4);
        assert!(check_k_anonymity(&result.table, 2, &[s("zip")])
            .unwrap()
            .anonymous);
    }

    #[test]
    fn infeasible_budgets_fail_with_the_best_achievable_k() {
        let t = Table::new(
            vec![
                attr("zip", AttributeRole::QuasiCandidate),
                attr("disease", AttributeRole::Sensitive),
            ],
            rows(&[
                &["111", "flu"],
                &["222", "cold"],
                &["999", "measles"],
            ]),
        )
        .unwrap();
        let hierarchies: BTreeMap<String, Hierarchy> = [(
            s("zip"),
            Hierarchy::new(
                s("zip"),
                [
                    (s("111"), vec![s("a")]),
                    (s("222"), vec![s("a")]),
                    (s("999"), vec![s("b")]),
                ]
                .into(),
            )
            .unwrap(),
        )]
        .into();
        // Budget 1 can drop the outlier, leaving the size-2 class: best k
        // is 2, still short of the requested 3.
        let err = anonymize(&t, 3, &[s("zip")], &hierarchies, 1).unwrap_err();
        match err {
            PrivacyError::InfeasibleBudget { best_k, .. } => assert_eq!(best_k, 2),
            other => panic!("unexpected error {other:?}"),
        }
        // With no budget at all nothing can be suppressed anywhere.
        let err0 = anonymize(&t, 3, &[s("zip")], &hierarchies, 0).unwrap_err();
        match err0 {
            PrivacyError::InfeasibleBudget { best_k, .. } => assert_eq!(best_k, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn generalization_never_shrinks_groups(
            cells in proptest::collection::vec(0u8..4, 2..12),
            level_a in 0usize..3,
            level_b in 0usize..3,
        ) {
            prop_assume!(level_a <= level_b);
            let t = Table::new(
                vec![attr("v", AttributeRole::QuasiCandidate)],
                cells.iter().map(|c| vec![format!("v{c}")]).collect(),
            ).unwrap();
            // Two-level chain: v0,v1 → low; v2,v3 → high; everything → all.
            let hierarchy = Hierarchy::new(
                s("v"),
                (0..4u8).map(|c| (
                    format!("v{c}"),
                    vec![s(if c < 2 { "low" } else { "high" }), s("all")],
                )).collect(),
            ).unwrap();
            let hs: BTreeMap<String, Hierarchy> = [(s("v"), hierarchy)].into();
            let ga = generalized_table(&t, &[s("v")], &hs, &[level_a]).unwrap();
            let gb = generalized_table(&t, &[s("v")], &hs, &[level_b]).unwrap();
            let min_a = check_k_anonymity(&ga, 1, &[s("v")]).unwrap().min_group_size;
            let min_b = check_k_anonymity(&gb, 1, &[s("v")]).unwrap().min_group_size;
            prop_assert!(min_b >= min_a);
        }

        #[test]
        fn counting_queries_have_unit_sensitivity(
            cells in proptest::collection::vec(0u8..3, 1..10),
            replace_at in 0usize..10,
            new_cell in 0u8..3,
        ) {
            prop_assume!(replace_at < cells.len());
            let table = |cs: &[u8]| Table::new(
                vec![attr("grade", AttributeRole::Sensitive)],
                cs.iter().map(|c| vec![format!("g{c}")]).collect(),
            ).unwrap();
            let t = table(&cells);
            let mut changed = cells.clone();
            changed[replace_at] = new_cell;
            let t2 = table(&changed);
            prop_assert!(tables_adjacent(&t, &t2));
            let query = Query::Count { attribute: s("grade"), value: s("g0") };
            let diff = (query.evaluate(&t).unwrap() - query.evaluate(&t2).unwrap()).abs();
            prop_assert!(diff <= query.global_sensitivity());
        }
    }

    fn grades_table(failing: usize, passing: usize) -> Table {
        let mut data: Vec<Vec<String>> = Vec::new();
        for i in 0..failing {
            data.push(vec![format!("student-f{i}"), s("fail")]);
        }
        for i in 0..passing {
            data.push(vec![format!("student-p{i}"), s("pass")]);
        }
        Table::new(
            vec![
                attr("name", AttributeRole::Identifier),
                attr("grade", AttributeRole::Sensitive),
            ],
            data,
        )
        .unwrap()
    }

    #[test]
    fn exact_count_release_enables_the_differencing_attack() {
        // The class database and the same database without one student.
        let d = grades_table(3, 7);
        let d_prime = d.without_records(&[0usize].into());
        let query = Query::Count {
            attribute: s("grade"),
            value: s("fail"),
        };
        let full = query.evaluate(&d).unwrap();
        let rest = query.evaluate(&d_prime).unwrap();
        assert_eq!(full, 3.0);
        assert_eq!(rest, 2.0);
        // The difference pins the removed student's grade exactly.
        assert_eq!(full - rest, 1.0);
    }

    #[test]
    fn noisy_counts_blur_the_differencing_attack() {
        let d = grades_table(3, 7);
        let d_prime = d.without_records(&[0usize].into());
        let query = Query::Count {
            attribute: s("grade"),
            value: s("fail"),
        };
        let epsilon = 0.5;
        let exact_d = query.evaluate(&d).unwrap();
        let exact_dp = query.evaluate(&d_prime).unwrap();
        let lambda = query.global_sensitivity() / epsilon;
        let trials = 10_000;
        let mut wrong_sign = 0usize;
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..trials {
            let noisy_d = exact_d + laplace_sample(&mut rng, lambda);
            let noisy_dp = exact_dp + laplace_sample(&mut rng, lambda);
            // The true difference is +1; a non-positive noisy difference
            // points the attacker the wrong way.
            if noisy_d - noisy_dp <= 0.0 {
                wrong_sign += 1;
            }
        }
        let share = wrong_sign as f64 / trials as f64;
        assert!(share > 0.30, "wrong-sign share {share}");
    }

    #[test]
    fn seeded_answers_are_reproducible_and_ledgered() {
        let t = grades_table(3, 7);
        let query = Query::Count {
            attribute: s("grade"),
            value: s("fail"),
        };
        let mut m = DisclosureMechanism::new(query.clone(), 2f64.ln(), 3.0 * 2f64.ln()).unwrap();
        let a = m.laplace_answer(&t, 0).unwrap();
        let mut m2 = DisclosureMechanism::new(query, 2f64.ln(), 3.0 * 2f64.ln()).unwrap();
        let b = m2.laplace_answer(&t, 0).unwrap();
        assert_eq!(a.value, b.value);
        assert!((a.value - 3.0).abs() < 30.0);
        // Three answers fit the budget; the fourth is refused.
        m.laplace_answer(&t, 1).unwrap();
        let third = m.laplace_answer(&t, 2).unwrap();
        assert!(third.budget_remaining.abs() < 1e-9);
        let err = m.laplace_answer(&t, 3).unwrap_err();
        assert!(matches!(err, PrivacyError::BudgetExhausted { .. }));
    }

    #[test]
    fn huge_epsilon_answers_are_nearly_exact() {
        let t = grades_table(3, 7);
        for seed in 0..100u64 {
            let mut m = DisclosureMechanism::new(
                Query::Count {
                    attribute: s("grade"),
                    value: s("fail"),
                },
                1e6,
                f64::INFINITY,
            )
            .unwrap();
            let answer = m.laplace_answer(&t, seed).unwrap();
            assert!((answer.value - 3.0).abs() < 1e-4, "seed {seed}");
        }
    }

    #[test]
    fn laplace_sampler_matches_its_density() {
        let lambda = 1.0;
        let n = 100_000usize;
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let samples: Vec<f64> = (0..n).map(|_| laplace_sample(&mut rng, lambda)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * lambda / (n as f64).sqrt() * 2.0, "mean {mean}");
        // Density ratio between windows at 0 and at λ ≈ e^{−1}.
        let w = 0.2 * lambda;
        let at = |c: f64| {
            samples
                .iter()
                .filter(|x| (**x - c).abs() < w / 2.0)
                .count() as f64
        };
        let ratio = at(lambda) / at(0.0);
        let expected = (-1.0f64).exp();
        assert!(
            (ratio - expected).abs() / expected < 0.10,
            "ratio {ratio} vs {expected}"
        );
    }

    #[test]
    fn ratio_test_passes_at_the_declared_epsilon() {
        let t = grades_table(3, 7);
        let t2 = t.without_records(&[0usize].into());
        let m = DisclosureMechanism::new(
            Query::Count {
                attribute: s("grade"),
                value: s("fail"),
            },
            1.0,
            f64::INFINITY,
        )
        .unwrap();
        let report = dp_ratio_test(&m, &t, &t2, 30_000, 16, 11, 0.10).unwrap();
        assert!(report.pass, "min ratio {}", report.min_ratio);
        assert!(report.min_ratio >= report.bound * 0.90);
    }

    #[test]
    fn halved_noise_fails_the_ratio_test() {
        let t = grades_table(3, 7);
        let t2 = t.without_records(&[0usize].into());
        let mut m = DisclosureMechanism::new(
            Query::Count {
                attribute: s("grade"),
                value: s("fail"),
            },
            1.0,
            f64::INFINITY,
        )
        .unwrap();
        m.lambda_override = Some(m.lambda() / 2.0);
        let report = dp_ratio_test(&m, &t, &t2, 30_000, 16, 11, 0.10).unwrap();
        assert!(!report.pass, "min ratio {}", report.min_ratio);
    }

    #[test]
    fn identical_tables_have_flat_ratios() {
        let t = grades_table(3, 7);
        let m = DisclosureMechanism::new(
            Query::Count {
                attribute: s("grade"),
                value: s("fail"),
            },
            1.0,
            f64::INFINITY,
        )
        .unwrap();
        let report = dp_ratio_test(&m, &t, &t.clone(), 30_000, 16, 5, 0.10).unwrap();
        assert!(report.min_ratio > 0.85, "min ratio {}", report.min_ratio);
    }

    #[test]
    fn non_adjacent_tables_are_rejected() {
        let t = grades_table(3, 7);
        let t2 = grades_table(1, 7);
        let m = DisclosureMechanism::new(
            Query::Count {
                attribute: s("grade"),
                value: s("fail"),
            },
            1.0,
            1.0,
        )
        .unwrap();
        let err = dp_ratio_test(&m, &t, &t2, 100, 4, 0, 0.1).unwrap_err();
        assert!(matches!(err, PrivacyError::NotAdjacent { .. }));
    }

    #[test]
    fn bounded_sums_clamp_and_bound_sensitivity() {
        let t = Table::new(
            vec![attr("score", AttributeRole::Sensitive)],
            rows(&[&["5"], &["12"], &["-3"]]),
        )
        .unwrap();
        let query = Query::BoundedSum {
            attribute: s("score"),
            lower: 0.0,
            upper: 10.0,
        };
        assert_eq!(query.evaluate(&t).unwrap(), 15.0);
        assert_eq!(query.global_sensitivity(), 10.0);
    }

    #[test]
    fn normalized_ratio_is_min_over_max() {
        assert_eq!(normalized_ratio(1.0, 2.0), 0.5);
        assert_eq!(normalized_ratio(2.0, 1.0), 0.5);
        assert_eq!(normalized_ratio(3.0, 3.0), 1.0);
    }

    #[test]
    fn hierarchies_must_nest() {
        let err = Hierarchy::new(
            s("zip"),
            [
                (s("111"), vec![s("low"), s("all")]),
                (s("112"), vec![s("low"), s("other")]),
            ]
            .into(),
        )
        .unwrap_err();
        assert!(matches!(err, PrivacyError::NotNested { .. }));
    }

    #[test]
    fn masking_hierarchy_generalizes_stepwise() {
        let h = masking_hierarchy("ZIP", &["96822", "96813"], 2);
        assert_eq!(h.depth(), 3);
        assert_eq!(h.generalize("96822", 0).unwrap(), "96822");
        assert_eq!(h.generalize("96822", 1).unwrap(), "9682*");
        assert_eq!(h.generalize("96822", 3).unwrap(), "96***");
        assert_eq!(h.generalize("96813", 3).unwrap(), "96***");
    }

    #[test]
    fn csv_ingestion_round_trips() {
        let csv_text = "Name,Zipcode,Age,Sex,Disease\n\
                        Alice,47677,29,F,ovarian cancer\n\
                        Betty,47602,22,F,ovarian cancer\n";
        let sidecar = r#"{
            "attributes": [
                {"name": "Name", "role": "identifier"},
                {"name": "Zipcode", "role": "quasi-candidate"},
                {"name": "Age", "role": "quasi-candidate"},
                {"name": "Sex", "role": "quasi-candidate"},
                {"name": "Disease", "role": "sensitive"}
            ]
        }"#;
        let t = Table::from_csv(csv_text, sidecar).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.cell(0, "Name").unwrap(), "Alice");
        assert_eq!(t.cell(1, "Disease").unwrap(), "ovarian cancer");
        let json = serde_json::to_string(&t).unwrap();
        let back: Table = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn domains_are_enforced() {
        let err = Table::new(
            vec![Attribute {
                name: s("sex"),
                role: AttributeRole::QuasiCandidate,
                domain: Some([s("F"), s("M")].into()),
            }],
            rows(&[&["X"]]),
        )
        .unwrap_err();
        assert!(matches!(err, PrivacyError::OutsideDomain { .. }));
    }
}

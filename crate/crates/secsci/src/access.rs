//! Resource security models: access-control matrices, multi-level security
//! over a level poset, the combined authorization model with no-read-up /
//! no-write-down, the constructive reductions between the matrix world and
//! the level world, and the small state machine of classification /
//! declassification transfers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AccessError {
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("duplicate {kind} {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("poset order violated: {a:?} and {b:?} are mutually below each other")]
    NotAntisymmetric { a: String, b: String },
    #[error("matrix cell ({subject:?}, {object:?}) uses action {action:?} outside the action set")]
    ForeignAction {
        subject: String,
        object: String,
        action: String,
    },
    #[error("{who:?} has no assigned level")]
    MissingLevel { who: String },
}

/// A finite partially ordered set of security levels, specified by its
/// covering pairs; the full order is the reflexive-transitive closure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PosetFile", into = "PosetFile")]
pub struct Poset {
    elements: Vec<String>,
    covers: Vec<(String, String)>,
    leq: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PosetFile {
    elements: Vec<String>,
    covers: Vec<(String, String)>,
}

impl TryFrom<PosetFile> for Poset {
    type Error = AccessError;
    fn try_from(f: PosetFile) -> Result<Poset, AccessError> {
        Poset::from_covers(f.elements, f.covers)
    }
}

impl From<Poset> for PosetFile {
    fn from(p: Poset) -> PosetFile {
        PosetFile {
            elements: p.elements,
            covers: p.covers,
        }
    }
}

impl Poset {
    /// Build from `lower < upper` covering pairs. Rejects duplicate
    /// elements, unknown names, and order cycles (antisymmetry failures).
    pub fn from_covers(
        elements: Vec<String>,
        covers: Vec<(String, String)>,
    ) -> Result<Poset, AccessError> {
        let n = elements.len();
        let mut seen = BTreeSet::new();
        for e in &elements {
            if !seen.insert(e.clone()) {
                return Err(AccessError::DuplicateName {
                    kind: "level",
                    name: e.clone(),
                });
            }
        }
        let index = |name: &str| {
            elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| AccessError::UnknownName {
                    kind: "level",
                    name: name.to_owned(),
                })
        };
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (lo, hi) in &covers {
            let (lo, hi) = (index(lo)?, index(hi)?);
            leq[lo][hi] = true;
        }
        // Transitive closure.
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i][j] && leq[j][i] {
                    return Err(AccessError::NotAntisymmetric {
                        a: elements[i].clone(),
                        b: elements[j].clone(),
                    });
                }
            }
        }
        Ok(Poset {
            elements,
            covers,
            leq,
        })
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    fn index(&self, name: &str) -> Result<usize, AccessError> {
        self.elements
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| AccessError::UnknownName {
                kind: "level",
                name: name.to_owned(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.elements.iter().any(|e| e == name)
    }

    pub fn leq(&self, a: &str, b: &str) -> Result<bool, AccessError> {
        Ok(self.leq[self.index(a)?][self.index(b)?])
    }

    /// The down-set ∇ℓ = { x | x ≤ ℓ }.
    pub fn down_set(&self, l: &str) -> Result<BTreeSet<String>, AccessError> {
        let j = self.index(l)?;
        Ok((0..self.elements.len())
            .filter(|&i| self.leq[i][j])
            .map(|i| self.elements[i].clone())
            .collect())
    }
}

/// Matrix cells: subject → object → set of actions; missing cells are empty.
pub type Matrix = BTreeMap<String, BTreeMap<String, BTreeSet<String>>>;

fn cell<'a>(m: &'a Matrix, u: &str, i: &str) -> Option<&'a BTreeSet<String>> {
    m.get(u).and_then(|row| row.get(i))
}

fn cell_actions(m: &Matrix, u: &str, i: &str) -> BTreeSet<String> {
    cell(m, u, i).cloned().unwrap_or_default()
}

/// An access-control model: who is permitted to do what to which resource
/// (matrix M), and which accesses have actually been granted (matrix B).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcModel {
    pub subjects: Vec<String>,
    pub objects: Vec<String>,
    pub actions: Vec<String>,
    /// The permission matrix M.
    #[serde(default)]
    pub permissions: Matrix,
    /// The access matrix B.
    #[serde(default)]
    pub accesses: Matrix,
}

impl AcModel {
    /// Check well-formedness: matrix rows/columns name known subjects,
    /// objects and actions.
    pub fn validate(&self) -> Result<(), AccessError> {
        for (matrix_name, matrix) in [("permissions", &self.permissions), ("accesses", &self.accesses)] {
            let _ = matrix_name;
            for (u, row) in matrix {
                if !self.subjects.contains(u) {
                    return Err(AccessError::UnknownName {
                        kind: "subject",
                        name: u.clone(),
                    });
                }
                for (i, actions) in row {
                    if !self.objects.contains(i) {
                        return Err(AccessError::UnknownName {
                            kind: "object",
                            name: i.clone(),
                        });
                    }
                    for a in actions {
                        if !self.actions.contains(a) {
                            return Err(AccessError::ForeignAction {
                                subject: u.clone(),
                                object: i.clone(),
                                action: a.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn permitted(&self, u: &str, i: &str) -> BTreeSet<String> {
        cell_actions(&self.permissions, u, i)
    }

    pub fn accessed(&self, u: &str, i: &str) -> BTreeSet<String> {
        cell_actions(&self.accesses, u, i)
    }

    /// The requirement B ⊆ M, cellwise; returns every violating
    /// (subject, object, action) triple in lexicographic order.
    pub fn violations(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for u in &self.subjects {
            for i in &self.objects {
                let m = self.permitted(u, i);
                for a in self.accessed(u, i) {
                    if !m.contains(&a) {
                        out.push((u.clone(), i.clone(), a));
                    }
                }
            }
        }
        out
    }

    pub fn ac_ok(&self) -> bool {
        self.violations().is_empty()
    }
}

/// A reflexive-transitive comparison relation derived from a model, e.g.
/// "u can do everything v can".
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Preorder {
    pub elements: Vec<String>,
    /// leq[i][j] ⟺ elements[i] ≤ elements[j].
    pub leq: Vec<Vec<bool>>,
}

impl Preorder {
    pub fn leq(&self, a: &str, b: &str) -> Option<bool> {
        let i = self.elements.iter().position(|e| e == a)?;
        let j = self.elements.iter().position(|e| e == b)?;
        Some(self.leq[i][j])
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.elements.len()).all(|i| self.leq[i][i])
    }

    pub fn is_transitive(&self) -> bool {
        let n = self.elements.len();
        (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|k| !(self.leq[i][j] && self.leq[j][k]) || self.leq[i][k])
            })
        })
    }
}

/// The clearance preorder on subjects (u ≤ v iff v is permitted everything u
/// is, objectwise) and the classification preorder on objects (i ≤ j iff
/// every subject accessing i also accesses j).
pub fn implicit_preorders(ac: &AcModel) -> (Preorder, Preorder) {
    let subject_leq = ac
        .subjects
        .iter()
        .map(|u| {
            ac.subjects
                .iter()
                .map(|v| {
                    ac.objects
                        .iter()
                        .all(|i| ac.permitted(u, i).is_subset(&ac.permitted(v, i)))
                })
                .collect()
        })
        .collect();
    let object_leq = ac
        .objects
        .iter()
        .map(|i| {
            ac.objects
                .iter()
                .map(|j| {
                    ac.subjects
                        .iter()
                        .all(|u| ac.accessed(u, i).is_subset(&ac.accessed(u, j)))
                })
                .collect()
        })
        .collect();
    let subjects = Preorder {
        elements: ac.subjects.clone(),
        leq: subject_leq,
    };
    let objects = Preorder {
        elements: ac.objects.clone(),
        leq: object_leq,
    };
    debug_assert!(subjects.is_reflexive() && subjects.is_transitive());
    debug_assert!(objects.is_reflexive() && objects.is_transitive());
    (subjects, objects)
}

/// A multi-level security model: a clearance and a location in the level
/// poset for every subject, and a location for every object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlsModel {
    pub subjects: Vec<String>,
    pub objects: Vec<String>,
    pub levels: Poset,
    /// cl : subjects → levels.
    pub clearance: BTreeMap<String, String>,
    /// pl : subjects ∪ objects → levels.
    pub location: BTreeMap<String, String>,
}

impl MlsModel {
    pub fn validate(&self) -> Result<(), AccessError> {
        for u in &self.subjects {
            if !self.clearance.contains_key(u) || !self.location.contains_key(u) {
                return Err(AccessError::MissingLevel { who: u.clone() });
            }
        }
        for i in &self.objects {
            if !self.location.contains_key(i) {
                return Err(AccessError::MissingLevel { who: i.clone() });
            }
        }
        for l in self.clearance.values().chain(self.location.values()) {
            if !self.levels.contains(l) {
                return Err(AccessError::UnknownName {
                    kind: "level",
                    name: l.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn clearance_of(&self, u: &str) -> &str {
        &self.clearance[u]
    }

    pub fn location_of(&self, x: &str) -> &str {
        &self.location[x]
    }

    /// Subjects violating pl(u) ≤ cl(u), in declaration order.
    pub fn violations(&self) -> Vec<String> {
        self.subjects
            .iter()
            .filter(|u| {
                !self
                    .levels
                    .leq(self.location_of(u), self.clearance_of(u))
                    .unwrap_or(false)
            })
            .cloned()
            .collect()
    }

    pub fn mls_ok(&self) -> bool {
        self.violations().is_empty()
    }
}

/// AC and MLS structure over the same subjects and objects, with designated
/// read and write actions that the level assignments constrain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorizationModel {
    pub ac: AcModel,
    pub mls: MlsModel,
    pub read_action: String,
    pub write_action: String,
}

/// One requirement violation in an authorization model.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// B ⊄ M at this cell.
    Access {
        subject: String,
        object: String,
        action: String,
    },
    /// pl(u) ≰ cl(u).
    Clearance { subject: String },
    /// read granted but cl(u) ≱ pl(i).
    ReadUp { subject: String, object: String },
    /// write granted but pl(u) ≰ pl(i).
    WriteDown { subject: String, object: String },
}

/// Verdicts for each requirement, with all violations listed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SecurityReport {
    pub ac_ok: bool,
    pub mls_ok: bool,
    pub no_read_up_ok: bool,
    pub no_write_down_ok: bool,
    pub secure_state: bool,
    pub violations: Vec<Violation>,
}

impl AuthorizationModel {
    pub fn validate(&self) -> Result<(), AccessError> {
        self.ac.validate()?;
        self.mls.validate()?;
        for a in [&self.read_action, &self.write_action] {
            if !self.ac.actions.contains(a) {
                return Err(AccessError::UnknownName {
                    kind: "action",
                    name: a.clone(),
                });
            }
        }
        Ok(())
    }

    /// The secure-state check: B ⊆ M, pl ≤ cl, and granted reads/writes
    /// respect no-read-up / no-write-down.
    pub fn check(&self) -> SecurityReport {
        let mut violations: Vec<Violation> = Vec::new();
        for (u, i, a) in self.ac.violations() {
            violations.push(Violation::Access {
                subject: u,
                object: i,
                action: a,
            });
        }
        let ac_ok = violations.is_empty();
        let mls_violations = self.mls.violations();
        let mls_ok = mls_violations.is_empty();
        for u in mls_violations {
            violations.push(Violation::Clearance { subject: u });
        }

        let mut no_read_up_ok = true;
        let mut no_write_down_ok = true;
        let leq = |a: &str, b: &str| self.mls.levels.leq(a, b).unwrap_or(false);
        for u in &self.ac.subjects {
            for i in &self.ac.objects {
                let granted = self.ac.accessed(u, i);
                if granted.contains(&self.read_action)
                    && !leq(self.mls.location_of(i), self.mls.clearance_of(u))
                {
                    no_read_up_ok = false;
                    violations.push(Violation::ReadUp {
                        subject: u.clone(),
                        object: i.clone(),
                    });
                }
                if granted.contains(&self.write_action)
                    && !leq(self.mls.location_of(u), self.mls.location_of(i))
                {
                    no_write_down_ok = false;
                    violations.push(Violation::WriteDown {
                        subject: u.clone(),
                        object: i.clone(),
                    });
                }
            }
        }
        SecurityReport {
            ac_ok,
            mls_ok,
            no_read_up_ok,
            no_write_down_ok,
            secure_state: ac_ok && mls_ok && no_read_up_ok && no_write_down_ok,
            violations,
        }
    }
}

/// Express an AC model as an MLS model: levels are tables objects → action
/// sets ordered by pointwise inclusion; a subject's clearance is their
/// permission row and their location is their access row. Only the occurring
/// levels, their pairwise meets, and the bottom table are materialized — the
/// full table space is exponential.
pub fn ac_to_mls(ac: &AcModel) -> MlsModel {
    type Table = BTreeMap<String, BTreeSet<String>>;
    let row = |matrix: &Matrix, u: &str| -> Table {
        ac.objects
            .iter()
            .map(|i| (i.clone(), cell_actions(matrix, u, i)))
            .collect()
    };
    let render = |t: &Table| -> String {
        let cells: Vec<String> = ac
            .objects
            .iter()
            .map(|i| {
                let actions: Vec<&str> = t[i].iter().map(String::as_str).collect();
                format!("{i}:{{{}}}", actions.join(","))
            })
            .collect();
        format!("{{{}}}", cells.join(";"))
    };
    let mut tables: BTreeSet<Table> = BTreeSet::new();
    tables.insert(ac.objects.iter().map(|i| (i.clone(), BTreeSet::new())).collect());
    let mut clearance = BTreeMap::new();
    let mut location = BTreeMap::new();
    for u in &ac.subjects {
        let cl = row(&ac.permissions, u);
        let pl = row(&ac.accesses, u);
        clearance.insert(u.clone(), render(&cl));
        location.insert(u.clone(), render(&pl));
        tables.insert(cl);
        tables.insert(pl);
    }
    // Pairwise meets (pointwise intersections) so that greatest lower bounds
    // of occurring levels exist in the materialized poset.
    let occurring: Vec<Table> = tables.iter().cloned().collect();
    for s in &occurring {
        for t in &occurring {
            let meet: Table = ac
                .objects
                .iter()
                .map(|i| (i.clone(), s[i].intersection(&t[i]).cloned().collect()))
                .collect();
            tables.insert(meet);
        }
    }
    // Objects carry no matrix rows; they sit at the bottom (all-empty) table.
    let bottom: Table = ac.objects.iter().map(|i| (i.clone(), BTreeSet::new())).collect();
    for i in &ac.objects {
        location.insert(i.clone(), render(&bottom));
    }

    let tables: Vec<Table> = tables.into_iter().collect();
    let elements: Vec<String> = tables.iter().map(render).collect();
    // Covers: list every ≤ pair; Poset closure tolerates redundancy.
    let mut covers = Vec::new();
    for (x, s) in tables.iter().enumerate() {
        for (y, t) in tables.iter().enumerate() {
            if x != y && ac.objects.iter().all(|i| s[i].is_subset(&t[i])) {
                covers.push((elements[x].clone(), elements[y].clone()));
            }
        }
    }
    MlsModel {
        subjects: ac.subjects.clone(),
        objects: ac.objects.clone(),
        levels: Poset::from_covers(elements, covers).expect("pointwise inclusion is a partial order"),
        clearance,
        location,
    }
}

/// Express an authorization model as a pure AC model over action-level
/// pairs: permitted pairs bundle an action with every level the subject is
/// cleared for (meeting the object's level for writes), while granted pairs
/// bundle it with the levels at or below the participants' locations. The
/// derived inclusion B̂ ⊆ M̂ holds exactly when the original model is a
/// secure state.
pub fn authorization_to_ac(am: &AuthorizationModel) -> AcModel {
    let levels = &am.mls.levels;
    let pair = |a: &str, l: &str| format!("{a}@{l}");
    let actions: Vec<String> = am
        .ac
        .actions
        .iter()
        .flat_map(|a| levels.elements().iter().map(move |l| pair(a, l)))
        .collect();
    let down = |l: &str| levels.down_set(l).expect("validated level");

    let mut permissions: Matrix = BTreeMap::new();
    let mut accesses: Matrix = BTreeMap::new();
    for u in &am.ac.subjects {
        for i in &am.ac.objects {
            let mut m_cell = BTreeSet::new();
            for a in am.ac.permitted(u, i) {
                let levels_for: BTreeSet<String> = if a == am.write_action {
                    down(am.mls.clearance_of(u))
                        .intersection(&down(am.mls.location_of(i)))
                        .cloned()
                        .collect()
                } else {
                    down(am.mls.clearance_of(u))
                };
                m_cell.extend(levels_for.iter().map(|l| pair(&a, l)));
            }
            let mut b_cell = BTreeSet::new();
            for a in am.ac.accessed(u, i) {
                let levels_for: BTreeSet<String> = if a == am.read_action {
                    down(am.mls.location_of(u))
                        .union(&down(am.mls.location_of(i)))
                        .cloned()
                        .collect()
                } else {
                    down(am.mls.location_of(u))
                };
                b_cell.extend(levels_for.iter().map(|l| pair(&a, l)));
            }
            if !m_cell.is_empty() {
                permissions.entry(u.clone()).or_default().insert(i.clone(), m_cell);
            }
            if !b_cell.is_empty() {
                accesses.entry(u.clone()).or_default().insert(i.clone(), b_cell);
            }
        }
    }
    AcModel {
        subjects: am.ac.subjects.clone(),
        objects: am.ac.objects.clone(),
        actions,
        permissions,
        accesses,
    }
}

/// State-machine events over an authorization model: an interaction that
/// transfers an object between levels (writer pushes, reader takes), or a
/// subject relocating to another level within their clearance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AuthEvent {
    Write {
        writer: String,
        object: String,
        from: String,
        to: String,
        reader: String,
    },
    SetLevel { subject: String, level: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransitionError {
    #[error(transparent)]
    Model(#[from] AccessError),
    #[error("object {object:?} is at {actual:?}, not {expected:?}")]
    ObjectElsewhere {
        object: String,
        expected: String,
        actual: String,
    },
    #[error("{subject:?} is not permitted {action:?} on {object:?}")]
    NotPermitted {
        subject: String,
        object: String,
        action: String,
    },
    #[error("no-read-up violated: {level:?} ≰ cl({subject:?}) = {clearance:?}")]
    ReadUp {
        subject: String,
        level: String,
        clearance: String,
    },
    #[error("no-write-down violated: pl({subject:?}) = {location:?} ≰ {level:?}")]
    WriteDown {
        subject: String,
        location: String,
        level: String,
    },
    #[error("result would not be a secure state: {0:?}")]
    InsecureResult(Violation),
}

/// Apply one event, rejecting anything that would break the no-read-up /
/// no-write-down discipline or leave the model outside a secure state. The
/// model is immutable; a new one is returned.
///
/// Interaction legality, for `Write { writer, object, from, to, reader }`:
/// the object must currently sit at `from`; both participants need the
/// matching permission; the writer must reach the source (`from ≤ cl`) and
/// must not push below their own level (`pl ≤ to`); the reader takes at `to`
/// (`to ≤ cl`). A `SetLevel` keeps the subject within their clearance.
pub fn transition(am: &AuthorizationModel, event: &AuthEvent) -> Result<AuthorizationModel, TransitionError> {
    am.validate()?;
    let levels = &am.mls.levels;
    let leq = |a: &str, b: &str| levels.leq(a, b).unwrap_or(false);
    let mut next = am.clone();
    match event {
        AuthEvent::Write {
            writer,
            object,
            from,
            to,
            reader,
        } => {
            for (kind, name) in [("subject", writer), ("subject", reader)] {
                if !am.ac.subjects.contains(name) {
                    return Err(AccessError::UnknownName {
                        kind,
                        name: name.clone(),
                    }
                    .into());
                }
            }
            if !am.ac.objects.contains(object) {
                return Err(AccessError::UnknownName {
                    kind: "object",
                    name: object.clone(),
                }
                .into());
            }
            for l in [from, to] {
                if !levels.contains(l) {
                    return Err(AccessError::UnknownName {
                        kind: "level",
                        name: l.clone(),
                    }
                    .into());
                }
            }
            let actual = am.mls.location_of(object);
            if actual != from {
                return Err(TransitionError::ObjectElsewhere {
                    object: object.clone(),
                    expected: from.clone(),
                    actual: actual.to_owned(),
                });
            }
            if !am.ac.permitted(writer, object).contains(&am.write_action) {
                return Err(TransitionError::NotPermitted {
                    subject: writer.clone(),
                    object: object.clone(),
                    action: am.write_action.clone(),
                });
            }
            if !am.ac.permitted(reader, object).contains(&am.read_action) {
                return Err(TransitionError::NotPermitted {
                    subject: reader.clone(),
                    object: object.clone(),
                    action: am.read_action.clone(),
                });
            }
            // Writer picks the object up: no-read-up on the source level.
            if !leq(from, am.mls.clearance_of(writer)) {
                return Err(TransitionError::ReadUp {
                    subject: writer.clone(),
                    level: from.clone(),
                    clearance: am.mls.clearance_of(writer).to_owned(),
                });
            }
            // Writer pushes: no-write-down on the target level.
            if !leq(am.mls.location_of(writer), to) {
                return Err(TransitionError::WriteDown {
                    subject: writer.clone(),
                    location: am.mls.location_of(writer).to_owned(),
                    level: to.clone(),
                });
            }
            // Reader takes at the target level: no-read-up.
            if !leq(to, am.mls.clearance_of(reader)) {
                return Err(TransitionError::ReadUp {
                    subject: reader.clone(),
                    level: to.clone(),
                    clearance: am.mls.clearance_of(reader).to_owned(),
                });
            }
            next.mls.location.insert(object.clone(), to.clone());
        }
        AuthEvent::SetLevel { subject, level } => {
            if !am.ac.subjects.contains(subject) {
                return Err(AccessError::UnknownName {
                    kind: "subject",
                    name: subject.clone(),
                }
                .into());
            }
            if !levels.contains(level) {
                return Err(AccessError::UnknownName {
                    kind: "level",
                    name: level.clone(),
                }
                .into());
            }
            if !leq(level, am.mls.clearance_of(subject)) {
                return Err(TransitionError::ReadUp {
                    subject: subject.clone(),
                    level: level.clone(),
                    clearance: am.mls.clearance_of(subject).to_owned(),
                });
            }
            next.mls.location.insert(subject.clone(), level.clone());
        }
    }
    // The monitor invariant: granted accesses must still respect the level
    // assignments after the move.
    let report = next.check();
    if let Some(v) = report.violations.into_iter().next() {
        return Err(TransitionError::InsecureResult(v));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(actions: &[&str]) -> BTreeSet<String> {
        actions.iter().map(|s| (*s).to_owned()).collect()
    }

    fn matrix(cells: &[(&str, &str, &[&str])]) -> Matrix {
        let mut m: Matrix = BTreeMap::new();
        for (u, i, actions) in cells {
            m.entry((*u).to_owned())
                .or_default()
                .insert((*i).to_owned(), set(actions));
        }
        m
    }

    /// The five-level vault world: a ground floor under three rooms, two of
    /// which sit under the top chamber.
    fn vault_poset() -> Poset {
        Poset::from_covers(
            ["l1", "l2", "l3", "l4", "l5"].map(String::from).to_vec(),
            [
                ("l1", "l2"),
                ("l1", "l3"),
                ("l1", "l4"),
                ("l2", "l5"),
                ("l3", "l5"),
            ]
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .to_vec(),
        )
        .unwrap()
    }

    fn vault_mls() -> MlsModel {
        MlsModel {
            subjects: vec!["Alice".into(), "Bob".into()],
            objects: vec!["sheep".into(), "oil".into()],
            levels: vault_poset(),
            clearance: [("Alice", "l4"), ("Bob", "l5")]
                .map(|(k, v)| (k.to_owned(), v.to_owned()))
                .into(),
            location: [("Alice", "l1"), ("Bob", "l2"), ("sheep", "l1"), ("oil", "l5")]
                .map(|(k, v)| (k.to_owned(), v.to_owned()))
                .into(),
        }
    }

    /// The trading permission matrix: Alice works the sheep, Bob cooks.
    fn trade_ac(accesses: Matrix) -> AcModel {
        AcModel {
            subjects: vec!["Alice".into(), "Bob".into()],
            objects: vec!["sheep".into(), "oil".into()],
            actions: ["milk", "wool", "meat", "cook"].map(String::from).to_vec(),
            permissions: matrix(&[
                ("Alice", "sheep", &["milk", "wool", "meat"]),
                ("Bob", "oil", &["cook"]),
            ]),
            accesses,
        }
    }

    #[test]
    fn poset_rejects_cycles() {
        let err = Poset::from_covers(
            vec!["a".into(), "b".into()],
            vec![("a".into(), "b".into()), ("b".into(), "a".into())],
        )
        .unwrap_err();
        assert!(matches!(err, AccessError::NotAntisymmetric { .. }));
    }

    #[test]
    fn vault_assignments_satisfy_mls() {
        let m = vault_mls();
        m.validate().unwrap();
        assert!(m.mls_ok());
        // The fourth room is incomparable with the vault side.
        assert!(!m.levels.leq("l2", "l4").unwrap());
        assert!(!m.levels.leq("l4", "l5").unwrap());
        assert!(m.levels.leq("l1", "l5").unwrap());
    }

    #[test]
    fn empty_access_matrix_is_always_ok() {
        let ac = trade_ac(BTreeMap::new());
        assert!(ac.ac_ok());
    }

    #[test]
    fn injected_extra_access_is_reported_exactly() {
        let ac = trade_ac(matrix(&[
            ("Alice", "sheep", &["milk"]),
            ("Bob", "sheep", &["meat"]), // not permitted
        ]));
        assert_eq!(
            ac.violations(),
            vec![("Bob".to_owned(), "sheep".to_owned(), "meat".to_owned())]
        );
        assert!(!ac.ac_ok());
    }

    #[test]
    fn equal_permission_rows_compare_both_ways() {
        let mut ac = trade_ac(BTreeMap::new());
        ac.permissions = matrix(&[
            ("Alice", "sheep", &["milk"]),
            ("Bob", "sheep", &["milk"]),
        ]);
        let (subjects, _) = implicit_preorders(&ac);
        assert_eq!(subjects.leq("Alice", "Bob"), Some(true));
        assert_eq!(subjects.leq("Bob", "Alice"), Some(true));
    }

    #[test]
    fn preorders_match_brute_force_inclusion() {
        let ac = AcModel {
            subjects: vec!["u".into(), "v".into(), "w".into()],
            objects: vec!["i".into(), "j".into(), "k".into()],
            actions: ["a", "b", "c"].map(String::from).to_vec(),
            permissions: matrix(&[
                ("u", "i", &["a"]),
                ("u", "j", &["a", "b"]),
                ("v", "i", &["a", "c"]),
                ("v", "j", &["a", "b"]),
                ("w", "k", &["b"]),
            ]),
            accesses: matrix(&[
                ("u", "i", &["a"]),
                ("v", "i", &["a"]),
                ("v", "j", &["a"]),
            ]),
        };
        let (subjects, objects) = implicit_preorders(&ac);
        assert!(subjects.is_reflexive() && subjects.is_transitive());
        assert!(objects.is_reflexive() && objects.is_transitive());
        assert_eq!(subjects.leq("u", "v"), Some(true));
        assert_eq!(subjects.leq("v", "u"), Some(false));
        assert_eq!(subjects.leq("w", "u"), Some(false));
        // i ≤ j: everyone who accessed i also accessed j.
        assert_eq!(objects.leq("i", "j"), Some(false), "u accessed i but not j");
        assert_eq!(objects.leq("k", "i"), Some(true), "nobody accessed k");
    }

    #[test]
    fn trade_matrix_reduces_to_a_satisfied_mls_model() {
        // B = M: locations coincide with clearances, so pl ≤ cl everywhere.
        let permissions = matrix(&[
            ("Alice", "sheep", &["milk", "wool", "meat"]),
            ("Bob", "oil", &["cook"]),
        ]);
        let ac = trade_ac(permissions);
        let mls = ac_to_mls(&ac);
        mls.validate().unwrap();
        assert!(mls.mls_ok());
        assert!(ac.ac_ok());
    }

    #[test]
    fn empty_accesses_reduce_to_the_bottom_level() {
        let ac = trade_ac(BTreeMap::new());
        let mls = ac_to_mls(&ac);
        let bottom = mls.location_of("Alice").to_owned();
        assert_eq!(mls.location_of("Bob"), bottom);
        // Bottom is below every materialized level.
        for l in mls.levels.elements().to_vec() {
            assert!(mls.levels.leq(&bottom, &l).unwrap());
        }
        assert!(mls.mls_ok());
    }

    #[test]
    fn ac_violation_maps_to_the_violating_subject() {
        let ac = trade_ac(matrix(&[("Bob", "sheep", &["meat"])]));
        assert!(!ac.ac_ok());
        let mls = ac_to_mls(&ac);
        let bad: Vec<String> = mls.violations();
        assert_eq!(bad, vec!["Bob".to_owned()]);
        assert!(!mls.mls_ok());
    }

    /// The two-level storage world driving the classify/declassify cycle.
    fn storage_world() -> AuthorizationModel {
        let levels = Poset::from_covers(
            vec!["l1".into(), "l2".into()],
            vec![("l1".into(), "l2".into())],
        )
        .unwrap();
        AuthorizationModel {
            ac: AcModel {
                subjects: vec!["Alice".into(), "Bob".into()],
                objects: vec!["sheep".into(), "oil".into()],
                actions: vec!["read".into(), "write".into()],
                permissions: matrix(&[
                    ("Alice", "sheep", &["read", "write"]),
                    ("Bob", "sheep", &["read", "write"]),
                    ("Bob", "oil", &["read", "write"]),
                ]),
                accesses: BTreeMap::new(),
            },
            mls: MlsModel {
                subjects: vec!["Alice".into(), "Bob".into()],
                objects: vec!["sheep".into(), "oil".into()],
                levels,
                clearance: [("Alice", "l1"), ("Bob", "l2")]
                    .map(|(k, v)| (k.to_owned(), v.to_owned()))
                    .into(),
                location: [("Alice", "l1"), ("Bob", "l2"), ("sheep", "l1"), ("oil", "l2")]
                    .map(|(k, v)| (k.to_owned(), v.to_owned()))
                    .into(),
            },
            read_action: "read".into(),
            write_action: "write".into(),
        }
    }

    fn write_event(writer: &str, object: &str, from: &str, to: &str, reader: &str) -> AuthEvent {
        AuthEvent::Write {
            writer: writer.into(),
            object: object.into(),
            from: from.into(),
            to: to.into(),
            reader: reader.into(),
        }
    }

    #[test]
    fn storage_cycle_returns_to_the_initial_state() {
        let q0 = storage_world();
        assert!(q0.check().secure_state);
        // Classify: Alice writes the sheep up, Bob takes it in the vault.
        let q1 = transition(&q0, &write_event("Alice", "sheep", "l1", "l2", "Bob")).unwrap();
        assert_eq!(q1.mls.location_of("sheep"), "l2");
        // From up there Bob may not push it down: that is a write-down.
        let err = transition(&q1, &write_event("Bob", "sheep", "l2", "l1", "Alice")).unwrap_err();
        assert!(matches!(err, TransitionError::WriteDown { .. }));
        // And Alice cannot fetch it herself: the source is over her head.
        let err = transition(&q1, &write_event("Alice", "sheep", "l2", "l1", "Alice")).unwrap_err();
        assert!(matches!(err, TransitionError::ReadUp { .. }));
        // So Bob descends (clearance intact — he is still cleared for the
        // vault, merely standing downstairs now)…
        let q2 = transition(
            &q1,
            &AuthEvent::SetLevel {
                subject: "Bob".into(),
                level: "l1".into(),
            },
        )
        .unwrap();
        assert_eq!(q2.mls.location_of("Bob"), "l1");
        assert_eq!(q2.mls.clearance_of("Bob"), "l2");
        // …declassifies the sheep to Alice…
        let q3 = transition(&q2, &write_event("Bob", "sheep", "l2", "l1", "Alice")).unwrap();
        assert_eq!(q3.mls.location_of("sheep"), "l1");
        // …and climbs back up.
        let q4 = transition(
            &q3,
            &AuthEvent::SetLevel {
                subject: "Bob".into(),
                level: "l2".into(),
            },
        )
        .unwrap();
        assert_eq!(q4, q0, "the cycle must close exactly");
    }

    #[test]
    fn subject_cannot_relocate_beyond_clearance() {
        let q0 = storage_world();
        let err = transition(
            &q0,
            &AuthEvent::SetLevel {
                subject: "Alice".into(),
                level: "l2".into(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, TransitionError::ReadUp { .. }));
    }

    #[test]
    fn unpermitted_participants_are_rejected() {
        let q0 = storage_world();
        // Alice has no permission on oil at all.
        let err = transition(&q0, &write_event("Alice", "oil", "l2", "l2", "Bob")).unwrap_err();
        assert!(matches!(err, TransitionError::NotPermitted { .. }));
        // Wrong source level.
        let err = transition(&q0, &write_event("Alice", "sheep", "l2", "l2", "Bob")).unwrap_err();
        assert!(matches!(err, TransitionError::ObjectElsewhere { .. }));
    }

    #[test]
    fn derived_ac_inclusion_matches_secure_state_on_the_storage_world() {
        let mut am = storage_world();
        am.ac.accesses = matrix(&[("Bob", "oil", &["read", "write"])]);
        assert!(am.check().secure_state);
        assert!(authorization_to_ac(&am).ac_ok());

        // Now grant Bob a write on the sheep downstairs: pl(Bob)=l2 ≰ l1.
        am.ac.accesses = matrix(&[("Bob", "sheep", &["write"])]);
        let report = am.check();
        assert!(!report.no_write_down_ok);
        let derived = authorization_to_ac(&am);
        assert!(!derived.ac_ok());
        // The witness pair bundles the write with the writer's location.
        assert!(derived
            .violations()
            .iter()
            .any(|(u, i, a)| u == "Bob" && i == "sheep" && a == "write@l2"));
    }

    /// Randomized authorization models over a four-element diamond-ish
    /// poset. Every subject gets at least one granted access — the reverse
    /// direction of the inclusion equivalence reads a subject's location off
    /// some granted pair, so a subject with no accesses at all would leave
    /// pl ≤ cl unobserved.
    fn arb_auth_model() -> impl Strategy<Value = AuthorizationModel> {
        let levels = || ["l1", "l2", "l3", "l4"];
        let action_sets = proptest::collection::vec(
            proptest::collection::btree_set(
                prop_oneof![Just("read"), Just("write"), Just("use")],
                0..=3,
            ),
            8,
        );
        let level_choices = proptest::collection::vec(0usize..4, 7);
        (action_sets, level_choices, proptest::collection::vec(any::<bool>(), 4)).prop_map(
            move |(sets, lvls, _)| {
                let subjects = vec!["u".to_owned(), "v".to_owned()];
                let objects = vec!["i".to_owned(), "j".to_owned()];
                let mut permissions: Matrix = BTreeMap::new();
                let mut accesses: Matrix = BTreeMap::new();
                let mut k = 0;
                for u in &subjects {
                    for i in &objects {
                        let m: BTreeSet<String> = sets[k].iter().map(|s| (*s).to_owned()).collect();
                        let b: BTreeSet<String> = sets[k + 4].iter().map(|s| (*s).to_owned()).collect();
                        if !m.is_empty() {
                            permissions.entry(u.clone()).or_default().insert(i.clone(), m);
                        }
                        if !b.is_empty() {
                            accesses.entry(u.clone()).or_default().insert(i.clone(), b);
                        }
                        k += 1;
                    }
                }
                for u in &subjects {
                    let empty = objects.iter().all(|i| cell_actions(&accesses, u, i).is_empty());
                    if empty {
                        accesses
                            .entry(u.clone())
                            .or_default()
                            .insert(objects[0].clone(), set(&["use"]));
                    }
                }
                // Diamond: l1 < l2 < l4, l1 < l3 < l4.
                let poset = Poset::from_covers(
                    levels().map(String::from).to_vec(),
                    vec![
                        ("l1".into(), "l2".into()),
                        ("l1".into(), "l3".into()),
                        ("l2".into(), "l4".into()),
                        ("l3".into(), "l4".into()),
                    ],
                )
                .unwrap();
                let l = |k: usize| levels()[lvls[k]].to_owned();
                AuthorizationModel {
                    ac: AcModel {
                        subjects: subjects.clone(),
                        objects: objects.clone(),
                        actions: ["read", "write", "use"].map(String::from).to_vec(),
                        permissions,
                        accesses,
                    },
                    mls: MlsModel {
                        subjects,
                        objects,
                        levels: poset,
                        clearance: [("u".to_owned(), l(0)), ("v".to_owned(), l(1))].into(),
                        location: [
                            ("u".to_owned(), l(2)),
                            ("v".to_owned(), l(3)),
                            ("i".to_owned(), l(4)),
                            ("j".to_owned(), l(5)),
                        ]
                        .into(),
                    },
                    read_action: "read".into(),
                    write_action: "write".into(),
                }
            },
        )
    }

    proptest! {
        #[test]
        fn ac_mls_reduction_preserves_the_verdict(model in arb_auth_model()) {
            let ac = &model.ac;
            let mls = ac_to_mls(ac);
            prop_assert_eq!(ac.ac_ok(), mls.mls_ok());
        }

        #[test]
        fn authorization_ac_reduction_is_a_biconditional(model in arb_auth_model()) {
            let derived = authorization_to_ac(&model);
            prop_assert_eq!(model.check().secure_state, derived.ac_ok());
        }

        #[test]
        fn transitions_from_secure_states_stay_secure(raw in arb_auth_model()) {
            // Repair the random model into a secure state: locations within
            // clearance, granted accesses permitted and level-respecting.
            let mut model = raw;
            for u in model.ac.subjects.clone() {
                let cl = model.mls.clearance_of(&u).to_owned();
                if !model.mls.levels.leq(model.mls.location_of(&u), &cl).unwrap() {
                    model.mls.location.insert(u.clone(), cl);
                }
            }
            let snapshot = model.clone();
            for u in &snapshot.ac.subjects {
                for i in &snapshot.ac.objects {
                    let mut b: BTreeSet<String> = snapshot
                        .ac
                        .accessed(u, i)
                        .intersection(&snapshot.ac.permitted(u, i))
                        .cloned()
                        .collect();
                    let leq = |a: &str, c: &str| snapshot.mls.levels.leq(a, c).unwrap();
                    if !leq(snapshot.mls.location_of(i), snapshot.mls.clearance_of(u)) {
                        b.remove(&snapshot.read_action);
                    }
                    if !leq(snapshot.mls.location_of(u), snapshot.mls.location_of(i)) {
                        b.remove(&snapshot.write_action);
                    }
                    model.ac.accesses.entry(u.clone()).or_default().insert(i.clone(), b);
                }
            }
            prop_assert!(model.check().secure_state);
            let events = [
                AuthEvent::Write {
                    writer: "u".into(),
                    object: "i".into(),
                    from: model.mls.location_of("i").to_owned(),
                    to: "l2".into(),
                    reader: "v".into(),
                },
                AuthEvent::SetLevel { subject: "u".into(), level: "l1".into() },
                AuthEvent::SetLevel { subject: "v".into(), level: "l4".into() },
            ];
            for event in events {
                if let Ok(next) = transition(&model, &event) {
                    prop_assert!(next.check().secure_state);
                }
            }
        }
    }
}

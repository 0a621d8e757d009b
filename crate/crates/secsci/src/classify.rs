//! Classification of regular properties along the safety/liveness and
//! localized/authorized/available axes, canonical decompositions, and the
//! denial-of-service witness search.

use serde::Serialize;

use crate::props::{word_names, RegularProperty};

/// A prefix of a member that is itself outside the property, together with
/// the shortest completion back in — the two halves demonstrate that the
/// property is not prefix-closed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SafetyWitness {
    pub prefix: Vec<String>,
    pub completion: Vec<String>,
}

/// A subject whose local view can reach a point from which no local
/// continuation re-enters the property's local image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AvailabilityWitness {
    pub subject: String,
    pub dead_local_history: Vec<String>,
}

/// Where a property sits in the classification lattice, with a minimal
/// witness for every failed axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationReport {
    /// Closed under prefixes: once violated, violated forever.
    pub safe: bool,
    /// Dense: every history can still be extended into the property.
    pub live: bool,
    /// Equal to its own localization — membership is determined by the
    /// per-subject views alone.
    pub localized: bool,
    /// Safe and localized: enforceable by per-subject gatekeeping.
    pub authorized: bool,
    /// Every subject's local image is live: no subject's view ever goes dead.
    pub available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub safety_witness: Option<SafetyWitness>,
    /// A history no extension of which lies in the property.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub liveness_witness: Option<Vec<String>>,
    /// A history outside the property all of whose per-subject views are
    /// views of members.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localization_witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub availability_witness: Option<AvailabilityWitness>,
}

impl ClassificationReport {
    /// One-line tag like "Safe ∧ ¬Live ∧ Localized …" for display.
    pub fn tag(&self) -> String {
        let mark = |b: bool, name: &str| if b { name.to_owned() } else { format!("¬{name}") };
        [
            mark(self.safe, "Safe"),
            mark(self.live, "Live"),
            mark(self.localized, "Localized"),
            mark(self.authorized, "Authorized"),
            mark(self.available, "Available"),
        ]
        .join(" ∧ ")
    }
}

/// Classify a property on all five axes, producing minimal
/// (lexicographically least shortest) witnesses for the failed ones.
pub fn classify(p: &RegularProperty) -> ClassificationReport {
    let alphabet = p.alphabet().clone();
    let closure = p.lower_closure();

    let safe = p.is_safe();
    let safety_witness = if safe {
        None
    } else {
        let outside = closure.difference(p);
        let prefix = outside
            .acceptor()
            .shortest_accepted()
            .expect("a non-prefix-closed property has a member prefix outside it");
        let state = p.acceptor().run_to(&prefix);
        let completion = p
            .acceptor()
            .shortest_accepted_from(state)
            .expect("prefixes of members complete into the property");
        Some(SafetyWitness {
            prefix: word_names(&alphabet, &prefix),
            completion: word_names(&alphabet, &completion),
        })
    };

    let live = p.is_live();
    let liveness_witness = if live {
        None
    } else {
        let dead = closure.complement();
        Some(word_names(
            &alphabet,
            &dead.acceptor().shortest_accepted().expect("non-live property has a dead history"),
        ))
    };

    let localization = p.cylinder_closure();
    let localized = localization.equivalent(p);
    let localization_witness = if localized {
        None
    } else {
        let gap = localization.difference(p);
        Some(word_names(
            &alphabet,
            &gap.acceptor().shortest_accepted().expect("non-localized property has a gap"),
        ))
    };

    let mut availability_witness = None;
    for u in alphabet.subjects().to_vec() {
        let local = p.purge_image(&u).expect("subject from own alphabet");
        if !local.is_live() {
            let dead = local.lower_closure().complement();
            availability_witness = Some(AvailabilityWitness {
                subject: u.clone(),
                dead_local_history: word_names(
                    local.alphabet(),
                    &dead.acceptor().shortest_accepted().expect("non-live local image has a dead history"),
                ),
            });
            break;
        }
    }
    let available = availability_witness.is_none();

    ClassificationReport {
        safe,
        live,
        localized,
        authorized: safe && localized,
        available,
        safety_witness,
        liveness_witness,
        localization_witness,
        availability_witness,
    }
}

/// The three canonical two-part decompositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    /// intersection of a safety property and a liveness property
    SafetyLiveness,
    /// intersection of an authorization property and an availability property
    AuthAvail,
    /// union of the largest strong availability inside the property and the
    /// breach remainder
    StrongavailBreach,
}

impl DecompositionKind {
    pub const ALL: [DecompositionKind; 3] = [
        DecompositionKind::SafetyLiveness,
        DecompositionKind::AuthAvail,
        DecompositionKind::StrongavailBreach,
    ];

    /// Whether the parts recombine by intersection (true) or union (false).
    pub fn recombines_by_intersection(self) -> bool {
        !matches!(self, DecompositionKind::StrongavailBreach)
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub kind: DecompositionKind,
    pub part1: RegularProperty,
    pub part2: RegularProperty,
}

impl Decomposition {
    /// Recombine the parts; always equals the decomposed property.
    pub fn reconstructed(&self) -> RegularProperty {
        if self.kind.recombines_by_intersection() {
            self.part1.intersect(&self.part2)
        } else {
            self.part1.union(&self.part2)
        }
    }
}

/// Split a property into two parts with guaranteed shapes:
///
/// * safety-liveness: part1 = ⌈P⌉ is safe, part2 = P ∪ ¬⌈P⌉ is live,
///   P = part1 ∩ part2;
/// * auth-avail: part1 = the localization of ⌈P⌉ is authorized,
///   part2 = P ∪ ¬part1 is available, P = part1 ∩ part2;
/// * strongavail-breach: part1 = ¬(localization of ⌈¬P⌉) is the largest
///   strong availability inside P, part2 = P ∩ ¬part1 is the breach
///   remainder, P = part1 ∪ part2 with the parts disjoint.
pub fn decompose(p: &RegularProperty, kind: DecompositionKind) -> Decomposition {
    let (part1, part2) = match kind {
        DecompositionKind::SafetyLiveness => {
            let closure = p.lower_closure();
            let live = p.union(&closure.complement());
            (closure, live)
        }
        DecompositionKind::AuthAvail => {
            let auth = p.lower_closure().cylinder_closure();
            let avail = p.union(&auth.complement());
            (auth, avail)
        }
        DecompositionKind::StrongavailBreach => {
            let blocked = p.complement().lower_closure().cylinder_closure();
            let strong = blocked.complement();
            let breach = p.intersect(&blocked);
            (strong, breach)
        }
    };
    Decomposition { kind, part1, part2 }
}

/// Outcome of the denial-of-service analysis: the situation where both the
/// property and its complement are live, so no finite history settles the
/// outcome — and, when one exists, a single subject who can unilaterally
/// steer any history back out of the property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DosReport {
    pub property_live: bool,
    pub complement_live: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<DosWitness>,
}

impl DosReport {
    /// Both the property and its complement are live.
    pub fn contested(&self) -> bool {
        self.property_live && self.complement_live
    }
}

/// `base` is in the property; appending `extension` (events of `subject`
/// only) leaves it — and the same subject can do that from *any* history.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DosWitness {
    pub subject: String,
    pub base: Vec<String>,
    pub extension: Vec<String>,
}

/// Search for a denial-of-service witness: a subject who, from every
/// history, can extend using only their own events into the complement of
/// the property. Checked exactly on the complement's minimal acceptor:
/// the subject qualifies iff from every state an accepting state is
/// reachable along their letters alone.
pub fn dos_witness(p: &RegularProperty) -> DosReport {
    let property_live = p.is_live();
    let complement = p.complement();
    let complement_live = complement.is_live();
    if !property_live || !complement_live {
        return DosReport {
            property_live,
            complement_live,
            witness: None,
        };
    }

    let alphabet = p.alphabet();
    let spoiler = complement.acceptor();
    for u in alphabet.subjects().to_vec() {
        let allowed: Vec<bool> = (0..alphabet.len())
            .map(|a| alphabet.subject_of(crate::alphabet::EventId(a)) == u)
            .collect();
        // Every state of the canonical acceptor is reachable, so quantifying
        // over all states is quantifying over all histories.
        let qualifies = (0..spoiler.states())
            .all(|s| spoiler.shortest_accepted_via(s, &allowed).is_some());
        if !qualifies {
            continue;
        }
        let base = p
            .acceptor()
            .shortest_accepted()
            .expect("a live property is nonempty");
        let state = spoiler.run_to(&base);
        let extension = spoiler
            .shortest_accepted_via(state, &allowed)
            .expect("qualifying subject re-enters from every state");
        return DosReport {
            property_live,
            complement_live,
            witness: Some(DosWitness {
                subject: u,
                base: word_names(alphabet, &base),
                extension: word_names(alphabet, &extension),
            }),
        };
    }
    DosReport {
        property_live,
        complement_live,
        witness: None,
    }
}

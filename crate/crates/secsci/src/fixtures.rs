//! Shipped fixture corpus: a registry of ready-to-run JSON models.
//!
//! Every fixture is embedded in the library at compile time so the binary and
//! the examples can run without touching the filesystem.  Each entry carries a
//! machine-readable kind (which loader understands it), a stable name, and a
//! one-line description of what the model demonstrates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::access::{AcModel, AuthorizationModel};
use crate::channels::{SharedChannelModel, Transducer};
use crate::privacy::{Hierarchy, Query, Table};
use crate::props::PropertySetFile;
use crate::protocol::{ProtocolSpec, Scenario};
use crate::stochastic::{parse_q, Cipher, Q, StochasticChannel};

/// Which loader a fixture file is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    /// A shared event alphabet plus named finite acceptors.
    PropertySet,
    /// A permission/access matrix pair.
    AccessControl,
    /// An access-control model joined with a level assignment.
    Authorization,
    /// A transducer with subjects, levels, and clearances attached.
    SharedChannel,
    /// A bare input/output transducer.
    Transducer,
    /// A stochastic matrix plus an input prior.
    ProbChannel,
    /// A single probability distribution.
    Distribution,
    /// A cipher table plus a message prior.
    SecrecyModel,
    /// Role scripts for a message-passing protocol.
    Protocol,
    /// A concrete deployment of a protocol: agents, instances, goals.
    Scenario,
    /// An attributed data table.
    Table,
    /// Generalization ladders for table attributes.
    HierarchySet,
    /// A table, an adjacent neighbor, a query, and a privacy budget.
    DpScenario,
}

impl FixtureKind {
    /// Stable lower-case label used by the command-line listing.
    pub fn label(self) -> &'static str {
        match self {
            FixtureKind::PropertySet => "property-set",
            FixtureKind::AccessControl => "access-control",
            FixtureKind::Authorization => "authorization",
            FixtureKind::SharedChannel => "shared-channel",
            FixtureKind::Transducer => "transducer",
            FixtureKind::ProbChannel => "prob-channel",
            FixtureKind::Distribution => "distribution",
            FixtureKind::SecrecyModel => "secrecy-model",
            FixtureKind::Protocol => "protocol",
            FixtureKind::Scenario => "scenario",
            FixtureKind::Table => "table",
            FixtureKind::HierarchySet => "hierarchy-set",
            FixtureKind::DpScenario => "dp-scenario",
        }
    }
}

/// One embedded fixture: name, loader kind, description, and raw JSON.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    /// File stem, unique across the corpus.
    pub name: &'static str,
    /// Which loader understands `json`.
    pub kind: FixtureKind,
    /// One line on what the model demonstrates.
    pub description: &'static str,
    /// The embedded file contents.
    pub json: &'static str,
}

macro_rules! fixture_json {
    ($file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/", $file))
    };
}

/// A stochastic channel bundled with a prior on its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbChannelFixture {
    pub channel: StochasticChannel,
    /// Input name to probability, as exact `"num/den"` strings.
    pub prior: BTreeMap<String, String>,
}

impl ProbChannelFixture {
    /// Parse the prior into exact rationals.
    pub fn prior_q(&self) -> Result<BTreeMap<String, Q>, String> {
        parse_prior(&self.prior)
    }
}

/// A probability distribution on its own, keyed by outcome name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFixture {
    /// Outcome name to probability, as exact `"num/den"` strings.
    pub distribution: BTreeMap<String, String>,
}

impl DistributionFixture {
    /// Parse the distribution into exact rationals.
    pub fn distribution_q(&self) -> Result<BTreeMap<String, Q>, String> {
        parse_prior(&self.distribution)
    }
}

/// A cipher table bundled with a prior on messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecrecyFixture {
    pub cipher: Cipher,
    /// Message name to probability, as exact `"num/den"` strings.
    pub prior: BTreeMap<String, String>,
}

impl SecrecyFixture {
    /// Parse the prior into exact rationals.
    pub fn prior_q(&self) -> Result<BTreeMap<String, Q>, String> {
        parse_prior(&self.prior)
    }
}

/// A noisy-disclosure scenario: the real table, an adjacent neighbor that
/// differs in one record, the query under test, and the privacy parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpScenarioFixture {
    pub table: Table,
    pub adjacent: Table,
    pub query: Query,
    pub epsilon: f64,
    pub budget: f64,
}

fn parse_prior(raw: &BTreeMap<String, String>) -> Result<BTreeMap<String, Q>, String> {
    raw.iter()
        .map(|(k, v)| {
            parse_q(v)
                .map(|q| (k.clone(), q))
                .map_err(|e| format!("entry {k:?}: {e}"))
        })
        .collect()
}

/// The full shipped corpus, sorted by name.
pub fn all() -> &'static [Fixture] {
    &[
        Fixture {
            name: "car-rental",
            kind: FixtureKind::ProbChannel,
            description: "punctuality-to-approval channel whose posterior flips the \
                          direction of the prior",
            json: fixture_json!("car-rental.json"),
        },
        Fixture {
            name: "coin-biased",
            kind: FixtureKind::Distribution,
            description: "single coin weighted 3/4 heads, entropy strictly below one bit",
            json: fixture_json!("coin-biased.json"),
        },
        Fixture {
            name: "coin-fair",
            kind: FixtureKind::Distribution,
            description: "single fair coin flip, exactly one bit of entropy",
            json: fixture_json!("coin-fair.json"),
        },
        Fixture {
            name: "deidentified-medical",
            kind: FixtureKind::Table,
            description: "name-stripped medical table whose zipcode/age/sex tuples are \
                          all unique, so it fails 2-anonymity",
            json: fixture_json!("deidentified-medical.json"),
        },
        Fixture {
            name: "either-alternate-finish",
            kind: FixtureKind::PropertySet,
            description: "two-subject coordination properties separating safety, \
                          locality, liveness, and availability",
            json: fixture_json!("either-alternate-finish.json"),
        },
        Fixture {
            name: "elevator",
            kind: FixtureKind::SharedChannel,
            description: "two-floor elevator shared by two riders; cabin position \
                          leaks one rider's calls to the other",
            json: fixture_json!("elevator.json"),
        },
        Fixture {
            name: "elevator-plain",
            kind: FixtureKind::Transducer,
            description: "two-floor elevator transducer without subject annotations",
            json: fixture_json!("elevator-plain.json"),
        },
        Fixture {
            name: "empty",
            kind: FixtureKind::PropertySet,
            description: "the empty property: vacuously safe, never live",
            json: fixture_json!("empty.json"),
        },
        Fixture {
            name: "governor-medical",
            kind: FixtureKind::Table,
            description: "de-identified hospital sample containing one widowed female \
                          born 09/15/61 in ZIP 02142",
            json: fixture_json!("governor-medical.json"),
        },
        Fixture {
            name: "governor-voters",
            kind: FixtureKind::Table,
            description: "voter roll whose birth-date, gender, and ZIP columns narrow \
                          eight people down to one",
            json: fixture_json!("governor-voters.json"),
        },
        Fixture {
            name: "household-hierarchies",
            kind: FixtureKind::HierarchySet,
            description: "generalization ladders (ZIP, car, child) for the household \
                          records",
            json: fixture_json!("household-hierarchies.json"),
        },
        Fixture {
            name: "household-records",
            kind: FixtureKind::Table,
            description: "three households whose quasi-identifiers generalize to \
                          3-anonymity without suppressing any record",
            json: fixture_json!("household-records.json"),
        },
        Fixture {
            name: "identity-cipher",
            kind: FixtureKind::SecrecyModel,
            description: "cipher that ignores its key, so the ciphertext reveals the \
                          message outright",
            json: fixture_json!("identity-cipher.json"),
        },
        Fixture {
            name: "montyhall",
            kind: FixtureKind::ProbChannel,
            description: "three-door quiz-show channel from prize position to opened \
                          door, with the uniform prior",
            json: fixture_json!("montyhall.json"),
        },
        Fixture {
            name: "noisy-grade-count",
            kind: FixtureKind::DpScenario,
            description: "pass/fail roster with an adjacent neighbor, a counting \
                          query, and a privacy-loss budget",
            json: fixture_json!("noisy-grade-count.json"),
        },
        Fixture {
            name: "nspk",
            kind: FixtureKind::Protocol,
            description: "two-party public-key mutual-authentication protocol with a \
                          re-encrypting middleman weakness",
            json: fixture_json!("nspk.json"),
        },
        Fixture {
            name: "nspk-fixed",
            kind: FixtureKind::Protocol,
            description: "repaired variant in which the responder names itself inside \
                          its challenge",
            json: fixture_json!("nspk-fixed.json"),
        },
        Fixture {
            name: "nspk-fixed-middleman",
            kind: FixtureKind::Scenario,
            description: "the insider scenario replayed against the repaired protocol",
            json: fixture_json!("nspk-fixed-middleman.json"),
        },
        Fixture {
            name: "nspk-honest",
            kind: FixtureKind::Scenario,
            description: "two honest parties completing mutual authentication",
            json: fixture_json!("nspk-honest.json"),
        },
        Fixture {
            name: "nspk-middleman",
            kind: FixtureKind::Scenario,
            description: "compromised insider makes a responder authenticate an \
                          initiator who never spoke to it",
            json: fixture_json!("nspk-middleman.json"),
        },
        Fixture {
            name: "one-time-pad",
            kind: FixtureKind::SecrecyModel,
            description: "one-bit XOR cipher under a uniform key: the ciphertext \
                          carries no information about the message",
            json: fixture_json!("one-time-pad.json"),
        },
        Fixture {
            name: "ping",
            kind: FixtureKind::Protocol,
            description: "fresh-nonce echo protocol for checking a peer is alive",
            json: fixture_json!("ping.json"),
        },
        Fixture {
            name: "ping-replay",
            kind: FixtureKind::Scenario,
            description: "replay scenario completing the static echo without the peer \
                          ever speaking",
            json: fixture_json!("ping-replay.json"),
        },
        Fixture {
            name: "ping-static",
            kind: FixtureKind::Protocol,
            description: "echo protocol whose probe value is fixed in advance, so old \
                          answers replay",
            json: fixture_json!("ping-static.json"),
        },
        Fixture {
            name: "qa-conversation",
            kind: FixtureKind::PropertySet,
            description: "question-answer conversation in which one side's questions \
                          and the other's answers deny each other service",
            json: fixture_json!("qa-conversation.json"),
        },
        Fixture {
            name: "sheep-properties",
            kind: FixtureKind::PropertySet,
            description: "six grazing-schedule properties over milk/wool/meat, \
                          covering safe-not-live through live-not-safe",
            json: fixture_json!("sheep-properties.json"),
        },
        Fixture {
            name: "storage-authorization",
            kind: FixtureKind::Authorization,
            description: "two-level read/write authorization model sitting in a \
                          secure state",
            json: fixture_json!("storage-authorization.json"),
        },
        Fixture {
            name: "three-flips",
            kind: FixtureKind::Distribution,
            description: "three independent fair flips, exactly three bits of entropy",
            json: fixture_json!("three-flips.json"),
        },
        Fixture {
            name: "trade-permissions",
            kind: FixtureKind::AccessControl,
            description: "permission and access matrices for two traders sharing \
                          sheep and oil",
            json: fixture_json!("trade-permissions.json"),
        },
        Fixture {
            name: "voter-register",
            kind: FixtureKind::Table,
            description: "public register that re-identifies the medical table by \
                          zipcode, age, and sex",
            json: fixture_json!("voter-register.json"),
        },
    ]
}

/// Look a fixture up by its name.
pub fn by_name(name: &str) -> Option<&'static Fixture> {
    all().iter().find(|f| f.name == name)
}

/// Typed view of one fixture, produced by [`Fixture::load`].
#[derive(Debug, Clone)]
pub enum Loaded {
    PropertySet(PropertySetFile),
    AccessControl(AcModel),
    Authorization(AuthorizationModel),
    SharedChannel(SharedChannelModel),
    Transducer(Transducer),
    ProbChannel(ProbChannelFixture),
    Distribution(DistributionFixture),
    SecrecyModel(SecrecyFixture),
    Protocol(ProtocolSpec),
    Scenario(Scenario),
    Table(Table),
    HierarchySet(Vec<Hierarchy>),
    DpScenario(DpScenarioFixture),
}

impl Fixture {
    /// Parse the embedded JSON with the loader matching `kind`.
    pub fn load(&self) -> Result<Loaded, String> {
        let err = |e: serde_json::Error| format!("{}: {e}", self.name);
        Ok(match self.kind {
            FixtureKind::PropertySet => {
                Loaded::PropertySet(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::AccessControl => {
                Loaded::AccessControl(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::Authorization => {
                Loaded::Authorization(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::SharedChannel => {
                Loaded::SharedChannel(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::Transducer => {
                Loaded::Transducer(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::ProbChannel => {
                Loaded::ProbChannel(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::Distribution => {
                Loaded::Distribution(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::SecrecyModel => {
                Loaded::SecrecyModel(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::Protocol => {
                Loaded::Protocol(ProtocolSpec::from_json(self.json).map_err(|e| {
                    format!("{}: {e}", self.name)
                })?)
            }
            FixtureKind::Scenario => {
                Loaded::Scenario(Scenario::from_json(self.json).map_err(|e| {
                    format!("{}: {e}", self.name)
                })?)
            }
            FixtureKind::Table => Loaded::Table(serde_json::from_str(self.json).map_err(err)?),
            FixtureKind::HierarchySet => {
                Loaded::HierarchySet(serde_json::from_str(self.json).map_err(err)?)
            }
            FixtureKind::DpScenario => {
                Loaded::DpScenario(serde_json::from_str(self.json).map_err(err)?)
            }
        })
    }

    /// Re-serialize the typed view back to JSON.
    pub fn reserialize(&self) -> Result<String, String> {
        let err = |e: serde_json::Error| format!("{}: {e}", self.name);
        Ok(match self.load()? {
            Loaded::PropertySet(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::AccessControl(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::Authorization(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::SharedChannel(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::Transducer(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::ProbChannel(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::Distribution(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::SecrecyModel(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::Protocol(m) => m.to_json(),
            Loaded::Scenario(m) => m.to_json(),
            Loaded::Table(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::HierarchySet(m) => serde_json::to_string_pretty(&m).map_err(err)?,
            Loaded::DpScenario(m) => serde_json::to_string_pretty(&m).map_err(err)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{elevator, shared_elevator};
    use crate::classify::{classify, dos_witness};
    use crate::protocol::{mitm_scenario, mitm_scenario_fixed, nspk, nspk_fixed, ping, ping_static};
    use crate::stochastic::{identity_cipher, one_time_pad};

    fn loaded_equal(a: &Loaded, b: &Loaded) -> bool {
        match (a, b) {
            (Loaded::PropertySet(x), Loaded::PropertySet(y)) => x == y,
            (Loaded::AccessControl(x), Loaded::AccessControl(y)) => x == y,
            (Loaded::Authorization(x), Loaded::Authorization(y)) => x == y,
            (Loaded::SharedChannel(x), Loaded::SharedChannel(y)) => x == y,
            (Loaded::Transducer(x), Loaded::Transducer(y)) => x == y,
            (Loaded::ProbChannel(x), Loaded::ProbChannel(y)) => x == y,
            (Loaded::Distribution(x), Loaded::Distribution(y)) => x == y,
            (Loaded::SecrecyModel(x), Loaded::SecrecyModel(y)) => x == y,
            (Loaded::Protocol(x), Loaded::Protocol(y)) => x == y,
            (Loaded::Scenario(x), Loaded::Scenario(y)) => x == y,
            (Loaded::Table(x), Loaded::Table(y)) => x == y,
            (Loaded::HierarchySet(x), Loaded::HierarchySet(y)) => x == y,
            (Loaded::DpScenario(x), Loaded::DpScenario(y)) => x == y,
            _ => false,
        }
    }

    #[test]
    fn registry_is_sorted_unique_and_nonempty() {
        let names: Vec<&str> = all().iter().map(|f| f.name).collect();
        assert!(!names.is_empty());
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted, "names must be sorted and unique");
        assert!(all().iter().all(|f| !f.description.trim().is_empty()));
    }

    #[test]
    fn every_fixture_loads_and_round_trips() {
        for f in all() {
            let first = f.load().unwrap_or_else(|e| panic!("load {}: {e}", f.name));
            let text = f.reserialize().unwrap();
            let relaxed = Fixture { json: Box::leak(text.into_boxed_str()), ..*f };
            let second = relaxed
                .load()
                .unwrap_or_else(|e| panic!("reload {}: {e}", f.name));
            assert!(loaded_equal(&first, &second), "{} round-trip", f.name);
        }
    }

    #[test]
    fn lookup_finds_each_registered_name() {
        for f in all() {
            let hit = by_name(f.name).expect(f.name);
            assert_eq!(hit.kind, f.kind);
        }
        assert!(by_name("no-such-fixture").is_none());
    }

    #[test]
    fn machine_built_models_match_their_fixture_files() {
        let Loaded::SharedChannel(m) = by_name("elevator").unwrap().load().unwrap() else {
            panic!()
        };
        assert_eq!(m, shared_elevator(2));

        let Loaded::Transducer(t) = by_name("elevator-plain").unwrap().load().unwrap() else {
            panic!()
        };
        assert_eq!(t, elevator(2));

        let Loaded::SecrecyModel(s) = by_name("one-time-pad").unwrap().load().unwrap() else {
            panic!()
        };
        assert_eq!(s.cipher, one_time_pad(1));

        let Loaded::SecrecyModel(s) = by_name("identity-cipher").unwrap().load().unwrap() else {
            panic!()
        };
        assert_eq!(s.cipher, identity_cipher(&["0", "1"], &["k0", "k1"]));

        for (name, spec) in [
            ("nspk", nspk()),
            ("nspk-fixed", nspk_fixed()),
            ("ping", ping()),
            ("ping-static", ping_static()),
        ] {
            let Loaded::Protocol(p) = by_name(name).unwrap().load().unwrap() else {
                panic!()
            };
            assert_eq!(p, spec, "{name}");
        }

        let Loaded::Scenario(sc) = by_name("nspk-middleman").unwrap().load().unwrap() else {
            panic!()
        };
        assert_eq!(sc, mitm_scenario());

        let Loaded::Scenario(sc) = by_name("nspk-fixed-middleman").unwrap().load().unwrap()
        else {
            panic!()
        };
        assert_eq!(sc, mitm_scenario_fixed());
    }

    #[test]
    fn grazing_property_set_classifies_as_documented() {
        let Loaded::PropertySet(file) = by_name("sheep-properties").unwrap().load().unwrap()
        else {
            panic!()
        };
        let props = file.to_properties().unwrap();
        let expect = [
            ("milk-wool", true, false),
            ("milk-wool-meat", false, false),
            ("milk-wool-wool", false, false),
            ("milk-wool-meat-meat", false, true),
            ("meat-wool-milk-milk", false, true),
            ("milk-wool-annual", true, false),
        ];
        assert_eq!(props.len(), expect.len());
        for ((name, p), (want_name, safe, live)) in props.iter().zip(expect) {
            assert_eq!(name, want_name);
            let report = classify(p);
            assert_eq!(report.safe, safe, "{name} safe");
            assert_eq!(report.live, live, "{name} live");
        }
    }

    #[test]
    fn coordination_property_set_classifies_as_documented() {
        let Loaded::PropertySet(file) =
            by_name("either-alternate-finish").unwrap().load().unwrap()
        else {
            panic!()
        };
        let props: BTreeMap<_, _> = file.to_properties().unwrap().into_iter().collect();

        let either = classify(&props["either"]);
        assert!(either.safe && !either.authorized && !either.localized);

        let alternate = classify(&props["alternate"]);
        assert!(!alternate.live);

        let finish = classify(&props["finish"]);
        assert!(finish.live && finish.available);
    }

    #[test]
    fn conversation_contested_by_the_asking_side() {
        let Loaded::PropertySet(file) = by_name("qa-conversation").unwrap().load().unwrap()
        else {
            panic!()
        };
        let props = file.to_properties().unwrap();
        assert_eq!(props.len(), 1);
        let report = dos_witness(&props[0].1);
        assert!(report.contested());
        let w = report.witness.expect("witness");
        assert_eq!(w.subject, "B");
        assert_eq!(w.base, Vec::<String>::new());
        assert_eq!(w.extension, vec!["ask-q-B".to_owned()]);
    }

    #[test]
    fn matrix_and_authorization_fixtures_are_consistent() {
        let Loaded::AccessControl(ac) = by_name("trade-permissions").unwrap().load().unwrap()
        else {
            panic!()
        };
        ac.validate().unwrap();
        assert!(ac.ac_ok());

        let Loaded::Authorization(am) =
            by_name("storage-authorization").unwrap().load().unwrap()
        else {
            panic!()
        };
        let report = am.check();
        assert!(report.secure_state, "violations: {:?}", report.violations);
    }

    #[test]
    fn probability_fixtures_have_normalized_priors() {
        for name in ["montyhall", "car-rental"] {
            let Loaded::ProbChannel(pc) = by_name(name).unwrap().load().unwrap() else {
                panic!()
            };
            let prior = pc.prior_q().unwrap();
            let total: Q = prior.values().cloned().sum();
            assert_eq!(total, crate::stochastic::q(1, 1), "{name}");
            assert!(prior.keys().all(|k| pc.channel.inputs().contains(k)));
        }
        for name in ["coin-fair", "coin-biased", "three-flips"] {
            let Loaded::Distribution(d) = by_name(name).unwrap().load().unwrap() else {
                panic!()
            };
            let dist = d.distribution_q().unwrap();
            let total: Q = dist.values().cloned().sum();
            assert_eq!(total, crate::stochastic::q(1, 1), "{name}");
        }
    }

    #[test]
    fn tables_and_disclosure_scenario_parse_with_expected_shapes() {
        let rows = |name: &str| {
            let Loaded::Table(t) = by_name(name).unwrap().load().unwrap() else {
                panic!()
            };
            t.records().len()
        };
        assert_eq!(rows("deidentified-medical"), 6);
        assert_eq!(rows("voter-register"), 5);
        assert_eq!(rows("governor-medical"), 11);
        assert_eq!(rows("governor-voters"), 8);
        assert_eq!(rows("household-records"), 3);

        let Loaded::HierarchySet(hs) =
            by_name("household-hierarchies").unwrap().load().unwrap()
        else {
            panic!()
        };
        assert_eq!(hs.len(), 3);

        let Loaded::DpScenario(dp) = by_name("noisy-grade-count").unwrap().load().unwrap()
        else {
            panic!()
        };
        assert_eq!(dp.table.records().len(), 10);
        assert_eq!(dp.adjacent.records().len(), 9);
        assert_eq!(dp.epsilon, 1.0);
    }
}

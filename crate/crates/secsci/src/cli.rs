//! Command-line dispatcher: loads model files (or shipped fixtures by name),
//! runs the requested check, and reports the outcome both human-readably and
//! as deterministic JSON.
//!
//! Exit codes: `0` = the checked property holds / the operation succeeded,
//! `1` = the property is violated (a witness is emitted), `2` = usage or
//! input error (schema errors carry JSON-pointer paths).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::access::{
    ac_to_mls, authorization_to_ac, transition, AcModel, AuthEvent, AuthorizationModel,
};
use crate::channels::{Mode, SharedChannelModel, Transducer};
use crate::classify::{classify, decompose, dos_witness, DecompositionKind};
use crate::fixtures::{self, DistributionFixture, DpScenarioFixture, ProbChannelFixture, SecrecyFixture};
use crate::privacy::{
    anonymize, check_k_anonymity, dp_ratio_test, find_quasi_identifiers, replay_linkage,
    AttributeRole, DisclosureMechanism, Hierarchy, Table,
};
use crate::props::{PropertyFile, PropertySetFile, RegularProperty};
use crate::protocol::{check_chre, run_honest, search_attack, ProtocolSpec, Scenario};
use crate::stochastic::{
    bayes_invert, check_perfect_secrecy, embed_relational, entropy, SharedStochasticModel,
};

/// Top-level argument grammar.
#[derive(Parser)]
#[command(
    name = "secsci",
    version,
    about = "Check safety, liveness, authorization, noninterference, secrecy, \
             anonymity, and authentication properties of security models",
    max_term_width = 100
)]
struct Cli {
    /// Emit the run report as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized operations (noisy answers, statistical tests).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Depth bound for bounded enumerations and checks.
    #[arg(long, global = true)]
    bound: Option<usize>,
    /// Allow a time-derived seed where a seed is otherwise required.
    #[arg(long, global = true)]
    insecure_seed: bool,
    /// Include wall-clock timing in JSON reports (JSON output is then no
    /// longer byte-identical across runs).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify, decompose, or probe regular trace properties.
    #[command(subcommand)]
    Prop(PropCmd),
    /// Check access-control matrices and derive level assignments.
    #[command(subcommand)]
    Acm(AcmCmd),
    /// Work with authorization models (matrices joined with levels).
    #[command(subcommand)]
    Auth(AuthCmd),
    /// Run and analyze relational channels and shared-channel models.
    #[command(subcommand)]
    Chan(ChanCmd),
    /// Probabilistic channels: inversion, entropy, secrecy.
    #[command(subcommand)]
    Prob(ProbCmd),
    /// Table privacy: re-identification, k-anonymity, noisy disclosure.
    #[command(subcommand)]
    Privacy(PrivacyCmd),
    /// Run protocols honestly or search for authentication attacks.
    #[command(subcommand)]
    Proto(ProtoCmd),
    /// Inspect the shipped fixture corpus.
    #[command(subcommand)]
    Corpus(CorpusCmd),
}

#[derive(Subcommand)]
enum PropCmd {
    /// Report safe/live/localized/authorized/available for each property.
    Classify {
        /// Property-set file (or shipped fixture name).
        file: String,
        /// Only this named property.
        #[arg(long)]
        name: Option<String>,
    },
    /// Split a property into two parts with guaranteed shapes.
    Decompose {
        /// Property-set file (or shipped fixture name).
        file: String,
        /// safety-liveness, auth-avail, or strongavail-breach.
        #[arg(long, value_parser = ["safety-liveness", "auth-avail", "strongavail-breach"])]
        kind: String,
        /// Only this named property (default: every property in the file).
        #[arg(long)]
        name: Option<String>,
    },
    /// Find a denial-of-service witness: a subject able to drive the
    /// property dead from any reachable situation.
    Dos {
        /// Property-set file (or shipped fixture name).
        file: String,
        /// Only this named property.
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Subcommand)]
enum AcmCmd {
    /// Verify every current access is permitted by the matrix.
    Check {
        /// Access-control model file (or shipped fixture name).
        file: String,
    },
    /// Derive the level structure implicit in the permission matrix.
    ToMls {
        /// Access-control model file (or shipped fixture name).
        file: String,
    },
}

#[derive(Subcommand)]
enum AuthCmd {
    /// Check the model: matrix consistency, clearances, no-read-up,
    /// no-write-down.
    Check {
        /// Authorization-model file (or shipped fixture name).
        file: String,
    },
    /// Flatten the authorization model back to a bare access matrix.
    ToAc {
        /// Authorization-model file (or shipped fixture name).
        file: String,
    },
    /// Apply one event (write or set-level) and print the successor model.
    Step {
        /// Authorization-model file (or shipped fixture name).
        file: String,
        /// Event file: {"kind": "write", ...} or {"kind": "set-level", ...}.
        event: String,
    },
}

#[derive(Subcommand)]
enum ChanCmd {
    /// Feed an input history through the channel and print its outputs.
    Run {
        /// Transducer or shared-channel file (or shipped fixture name).
        file: String,
        /// Input history, one event per argument.
        inputs: Vec<String>,
    },
    /// Tabulate the bounded inverse: output history -> input histories.
    Invert {
        /// Transducer or shared-channel file (or shipped fixture name).
        file: String,
    },
    /// One subject's view of an input history.
    View {
        /// Shared-channel file (or shipped fixture name).
        file: String,
        /// The observing subject.
        #[arg(long)]
        subject: String,
        /// Input history, one event per argument.
        inputs: Vec<String>,
    },
    /// Everything a subject can observe around one of its local histories.
    Interfere {
        /// Shared-channel file (or shipped fixture name).
        file: String,
        /// The observing subject.
        #[arg(long)]
        subject: String,
        /// The subject's own (cleared) input history.
        local: Vec<String>,
    },
    /// Can other subjects' inputs change what this subject observes?
    Noninterference {
        /// Shared-channel file (or shipped fixture name).
        file: String,
        /// The subject whose view is checked.
        #[arg(long)]
        subject: String,
        /// exact (deterministic self-composition) or bounded.
        #[arg(long, value_parser = ["exact", "bounded"])]
        mode: Option<String>,
    },
}

#[derive(Subcommand)]
enum ProbCmd {
    /// Invert a stochastic channel across a prior (posterior table).
    Invert {
        /// File with {"channel": ..., "prior": ...} (or fixture name).
        file: String,
    },
    /// Entropy of a distribution in bits, with exact symbolic form when
    /// probabilities factor over 2 and 3.
    Entropy {
        /// File with {"distribution": ...} (or fixture name).
        file: String,
    },
    /// Probabilistic noninterference for a subject of a shared model.
    Noninterference {
        /// Stochastic shared-channel file, or a relational shared-channel
        /// file to embed with 0/1 probabilities (or fixture name).
        file: String,
        /// The subject whose view is checked.
        #[arg(long)]
        subject: String,
    },
    /// Perfect secrecy of a cipher under a message prior, both pointwise
    /// and by the projector route.
    Secrecy {
        /// File with {"cipher": ..., "prior": ...} (or fixture name).
        file: String,
    },
}

#[derive(Subcommand)]
enum PrivacyCmd {
    /// Find quasi-identifiers by joining against an external table, or
    /// replay a linkage chain with --chain.
    Qid {
        /// Table file (with --chain: the external table; or fixture name).
        file: String,
        /// External table to join against.
        #[arg(long)]
        external: Option<String>,
        /// Comma-separated shared attributes to try joining on.
        #[arg(long, value_delimiter = ',')]
        join: Vec<String>,
        /// Largest attribute-combination size to try.
        #[arg(long, default_value_t = 3)]
        cap: usize,
        /// Replay a linkage chain: attr=value,attr=value,... narrowing the
        /// candidate set one attribute at a time.
        #[arg(long, value_delimiter = ',')]
        chain: Vec<String>,
    },
    /// Does every quasi-identifier tuple occur at least k times?
    Kanon {
        /// Table file (or shipped fixture name).
        file: String,
        /// The required minimum group size.
        #[arg(long)]
        k: usize,
        /// Comma-separated quasi-identifier attributes (default: the
        /// table's quasi-candidate columns).
        #[arg(long, value_delimiter = ',')]
        quasi: Vec<String>,
    },
    /// Generalize (and minimally suppress) until k-anonymity holds.
    Anonymize {
        /// Table file (or shipped fixture name).
        file: String,
        /// The required minimum group size.
        #[arg(long)]
        k: usize,
        /// File with the generalization ladders (JSON array).
        #[arg(long)]
        hierarchies: String,
        /// How many records may be suppressed.
        #[arg(long, default_value_t = 0)]
        budget: usize,
        /// Comma-separated quasi-identifier attributes (default: the
        /// table's quasi-candidate columns).
        #[arg(long, value_delimiter = ',')]
        quasi: Vec<String>,
    },
    /// Answer the scenario's query once with seeded Laplace noise.
    DpAnswer {
        /// Noisy-disclosure scenario file (or shipped fixture name).
        file: String,
    },
    /// Statistically test the privacy bound on the scenario's two tables.
    DpTest {
        /// Noisy-disclosure scenario file (or shipped fixture name).
        file: String,
        /// Number of sampled answers per table.
        #[arg(long, default_value_t = 30_000)]
        trials: usize,
        /// Histogram resolution.
        #[arg(long, default_value_t = 16)]
        bins: usize,
        /// Slack on the e^{-epsilon} bound.
        #[arg(long, default_value_t = 0.10)]
        tolerance: f64,
        /// Sabotage the mechanism with half the required noise scale; the
        /// test is then expected to fail.
        #[arg(long)]
        negative_control: bool,
    },
}

#[derive(Subcommand)]
enum ProtoCmd {
    /// Execute the scenario's instances honestly and check its goals.
    Run {
        /// Protocol file (or shipped fixture name).
        spec: String,
        /// Scenario file (or shipped fixture name).
        scenario: String,
    },
    /// Search for an authentication attack within the scenario's bounds.
    Verify {
        /// Protocol file (or shipped fixture name).
        spec: String,
        /// Scenario file (or shipped fixture name).
        scenario: String,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// List every shipped fixture with its kind and description.
    List,
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// Digest of one loaded input, for the report.
#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    /// The path or fixture name as given on the command line.
    pub label: String,
    /// SHA-256 of the bytes that were parsed.
    pub sha256: String,
}

/// The complete machine-readable result of one invocation.
#[derive(Serialize)]
pub struct RunReport {
    /// Dotted command path, e.g. "prop.classify".
    pub command: String,
    /// Digests of every input file in load order.
    pub inputs: Vec<InputDigest>,
    /// "holds", "violated", or "report" (informational output).
    pub verdict: String,
    /// Command-specific payload.
    pub data: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    /// Wall-clock milliseconds; present only when requested, since it
    /// varies run to run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

enum Verdict {
    Holds,
    Violated,
    Report,
}

impl Verdict {
    fn exit(&self) -> i32 {
        match self {
            Verdict::Violated => 1,
            Verdict::Holds | Verdict::Report => 0,
        }
    }
    fn label(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Report => "report",
        }
    }
}

struct Outcome {
    verdict: Verdict,
    data: Value,
    witness: Option<Value>,
    human: String,
}

struct UsageError(String);

type CliResult = Result<Outcome, UsageError>;

/// Loads inputs and remembers their digests for the report.
struct Loader {
    inputs: Vec<InputDigest>,
}

struct LoadedText {
    label: String,
    text: String,
}

impl Loader {
    fn new() -> Loader {
        Loader { inputs: Vec::new() }
    }

    /// Read a file from disk, or fall back to the shipped fixture of that
    /// name (`fixtures/` prefix and `.json` suffix are ignored for lookup).
    fn text(&mut self, arg: &str) -> Result<LoadedText, UsageError> {
        let text = if Path::new(arg).is_file() {
            fs::read_to_string(arg)
                .map_err(|e| UsageError(format!("cannot read {arg}: {e}")))?
        } else {
            let stem = arg
                .trim_start_matches("fixtures/")
                .trim_end_matches(".json");
            match fixtures::by_name(stem) {
                Some(f) => f.json.to_owned(),
                None => {
                    return Err(UsageError(format!(
                        "no such file, and no shipped fixture named {stem:?}: {arg}"
                    )))
                }
            }
        };
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let mut sha256 = String::with_capacity(64);
        for b in digest {
            write!(sha256, "{b:02x}").expect("hex");
        }
        self.inputs.push(InputDigest {
            label: arg.to_owned(),
            sha256,
        });
        Ok(LoadedText {
            label: arg.to_owned(),
            text,
        })
    }

    /// Load and parse, reporting schema errors with JSON-pointer paths.
    fn parse<T: DeserializeOwned>(&mut self, arg: &str) -> Result<T, UsageError> {
        let loaded = self.text(arg)?;
        parse_json(&loaded)
    }
}

fn parse_json<T: DeserializeOwned>(loaded: &LoadedText) -> Result<T, UsageError> {
    let de = &mut serde_json::Deserializer::from_str(&loaded.text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        UsageError(format!(
            "{}: schema error at {}: {}",
            loaded.label,
            json_pointer(e.path()),
            e.inner()
        ))
    })
}

/// RFC 6901 JSON pointer for a deserialization error path.
fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => {
                let _ = write!(out, "/{index}");
            }
            Segment::Map { key } | Segment::Enum { variant: key } => {
                let _ = write!(out, "/{}", key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "(root)".to_owned()
    } else {
        out
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report payloads serialize")
}

fn usage<T: std::fmt::Display>(e: T) -> UsageError {
    UsageError(e.to_string())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse arguments, dispatch, print the report, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive here too; they exit 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let started = Instant::now();
    let mut loader = Loader::new();
    let command_path = command_path(&cli.command);
    let result = dispatch(&cli, &mut loader);
    let elapsed = started.elapsed().as_millis();

    match result {
        Ok(outcome) => {
            let report = RunReport {
                command: command_path,
                inputs: loader.inputs,
                verdict: outcome.verdict.label().to_owned(),
                data: outcome.data,
                witness: outcome.witness,
                timing_ms: cli.timings.then_some(elapsed),
            };
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", outcome.human);
                if !outcome.human.ends_with('\n') && !outcome.human.is_empty() {
                    println!();
                }
                println!("verdict: {}  ({} ms)", report.verdict, elapsed);
            }
            outcome.verdict.exit()
        }
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn command_path(cmd: &Command) -> String {
    match cmd {
        Command::Prop(c) => format!(
            "prop.{}",
            match c {
                PropCmd::Classify { .. } => "classify",
                PropCmd::Decompose { .. } => "decompose",
                PropCmd::Dos { .. } => "dos",
            }
        ),
        Command::Acm(c) => format!(
            "acm.{}",
            match c {
                AcmCmd::Check { .. } => "check",
                AcmCmd::ToMls { .. } => "to-mls",
            }
        ),
        Command::Auth(c) => format!(
            "auth.{}",
            match c {
                AuthCmd::Check { .. } => "check",
                AuthCmd::ToAc { .. } => "to-ac",
                AuthCmd::Step { .. } => "step",
            }
        ),
        Command::Chan(c) => format!(
            "chan.{}",
            match c {
                ChanCmd::Run { .. } => "run",
                ChanCmd::Invert { .. } => "invert",
                ChanCmd::View { .. } => "view",
                ChanCmd::Interfere { .. } => "interfere",
                ChanCmd::Noninterference { .. } => "noninterference",
            }
        ),
        Command::Prob(c) => format!(
            "prob.{}",
            match c {
                ProbCmd::Invert { .. } => "invert",
                ProbCmd::Entropy { .. } => "entropy",
                ProbCmd::Noninterference { .. } => "noninterference",
                ProbCmd::Secrecy { .. } => "secrecy",
            }
        ),
        Command::Privacy(c) => format!(
            "privacy.{}",
            match c {
                PrivacyCmd::Qid { .. } => "qid",
                PrivacyCmd::Kanon { .. } => "kanon",
                PrivacyCmd::Anonymize { .. } => "anonymize",
                PrivacyCmd::DpAnswer { .. } => "dp-answer",
                PrivacyCmd::DpTest { .. } => "dp-test",
            }
        ),
        Command::Proto(c) => format!(
            "proto.{}",
            match c {
                ProtoCmd::Run { .. } => "run",
                ProtoCmd::Verify { .. } => "verify",
            }
        ),
        Command::Corpus(CorpusCmd::List) => "corpus.list".to_owned(),
    }
}

fn dispatch(cli: &Cli, loader: &mut Loader) -> CliResult {
    match &cli.command {
        Command::Prop(cmd) => prop_cmd(cli, loader, cmd),
        Command::Acm(cmd) => acm_cmd(loader, cmd),
        Command::Auth(cmd) => auth_cmd(loader, cmd),
        Command::Chan(cmd) => chan_cmd(cli, loader, cmd),
        Command::Prob(cmd) => prob_cmd(cli, loader, cmd),
        Command::Privacy(cmd) => privacy_cmd(cli, loader, cmd),
        Command::Proto(cmd) => proto_cmd(loader, cmd),
        Command::Corpus(CorpusCmd::List) => corpus_list(),
    }
}

// ---------------------------------------------------------------------------
// prop
// ---------------------------------------------------------------------------

/// Load a property-set file and optionally restrict it to one name.
fn load_properties(
    loader: &mut Loader,
    file: &str,
    name: &Option<String>,
) -> Result<Vec<(String, RegularProperty)>, UsageError> {
    let set: PropertySetFile = loader.parse(file)?;
    let mut props = set.to_properties().map_err(usage)?;
    if let Some(name) = name {
        props.retain(|(n, _)| n == name);
        if props.is_empty() {
            return Err(UsageError(format!("no property named {name:?} in {file}")));
        }
    }
    Ok(props)
}

fn prop_cmd(_cli: &Cli, loader: &mut Loader, cmd: &PropCmd) -> CliResult {
    match cmd {
        PropCmd::Classify { file, name } => {
            let props = load_properties(loader, file, name)?;
            let mut human = String::new();
            let mut rows = Vec::new();
            for (name, p) in &props {
                let report = classify(p);
                let _ = writeln!(
                    human,
                    "{name}: safe={} live={} localized={} authorized={} available={}",
                    report.safe, report.live, report.localized, report.authorized, report.available
                );
                if let Some(w) = &report.safety_witness {
                    let _ = writeln!(
                        human,
                        "  not safe: non-member prefix {:?} completes to member {:?}",
                        w.prefix, w.completion
                    );
                }
                if let Some(w) = &report.liveness_witness {
                    let _ = writeln!(human, "  not live: history {w:?} has no extension inside");
                }
                rows.push(json!({ "name": name, "classification": to_value(&report) }));
            }
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "properties": rows }),
                witness: None,
                human,
            })
        }
        PropCmd::Decompose { file, kind, name } => {
            let props = load_properties(loader, file, name)?;
            let kind = match kind.as_str() {
                "safety-liveness" => DecompositionKind::SafetyLiveness,
                "auth-avail" => DecompositionKind::AuthAvail,
                _ => DecompositionKind::StrongavailBreach,
            };
            let mut human = String::new();
            let mut rows = Vec::new();
            let mut all_ok = true;
            for (name, p) in &props {
                let d = decompose(p, kind);
                let ok = d.reconstructed().equivalent(p);
                all_ok &= ok;
                let c1 = classify(&d.part1);
                let c2 = classify(&d.part2);
                let op = if kind.recombines_by_intersection() {
                    "intersection"
                } else {
                    "union"
                };
                let _ = writeln!(
                    human,
                    "{name}: part1 [{}] {op} part2 [{}] reconstructs={ok}",
                    c1.tag(),
                    c2.tag()
                );
                rows.push(json!({
                    "name": name,
                    "recombine_by": op,
                    "part1": to_value(&PropertyFile::from_property(&d.part1)),
                    "part1_classification": to_value(&c1),
                    "part2": to_value(&PropertyFile::from_property(&d.part2)),
                    "part2_classification": to_value(&c2),
                    "reconstructs": ok,
                }));
            }
            Ok(Outcome {
                verdict: if all_ok { Verdict::Holds } else { Verdict::Violated },
                data: json!({ "kind": kind, "properties": rows }),
                witness: None,
                human,
            })
        }
        PropCmd::Dos { file, name } => {
            let props = load_properties(loader, file, name)?;
            let mut human = String::new();
            let mut rows = Vec::new();
            let mut witness = None;
            let mut contested = false;
            for (name, p) in &props {
                let report = dos_witness(p);
                if report.contested() {
                    contested = true;
                    let w = report.witness.as_ref().expect("contested has witness");
                    let _ = writeln!(
                        human,
                        "{name}: contested — subject {} extends {:?} with {:?} to leave the property dead-alive",
                        w.subject, w.base, w.extension
                    );
                    if witness.is_none() {
                        witness = Some(to_value(w));
                    }
                } else {
                    let _ = writeln!(
                        human,
                        "{name}: not contested (property live: {}, complement live: {})",
                        report.property_live, report.complement_live
                    );
                }
                rows.push(json!({ "name": name, "dos": to_value(&report) }));
            }
            Ok(Outcome {
                verdict: if contested { Verdict::Violated } else { Verdict::Holds },
                data: json!({ "properties": rows }),
                witness,
                human,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// acm / auth
// ---------------------------------------------------------------------------

fn acm_cmd(loader: &mut Loader, cmd: &AcmCmd) -> CliResult {
    match cmd {
        AcmCmd::Check { file } => {
            let ac: AcModel = loader.parse(file)?;
            ac.validate().map_err(usage)?;
            let violations = ac.violations();
            let ok = violations.is_empty();
            let mut human = String::new();
            if ok {
                let _ = writeln!(human, "every current access is permitted");
            } else {
                for (u, i, a) in &violations {
                    let _ = writeln!(human, "unpermitted access: {u} does {a} on {i}");
                }
            }
            let witness = (!ok).then(|| to_value(&violations));
            Ok(Outcome {
                verdict: if ok { Verdict::Holds } else { Verdict::Violated },
                data: json!({ "ac_ok": ok, "violations": to_value(&violations) }),
                witness,
                human,
            })
        }
        AcmCmd::ToMls { file } => {
            let ac: AcModel = loader.parse(file)?;
            ac.validate().map_err(usage)?;
            let mls = ac_to_mls(&ac);
            let human = format!(
                "derived levels: {}\n",
                serde_json::to_string_pretty(&mls).expect("mls serializes")
            );
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "mls": to_value(&mls) }),
                witness: None,
                human,
            })
        }
    }
}

fn auth_cmd(loader: &mut Loader, cmd: &AuthCmd) -> CliResult {
    match cmd {
        AuthCmd::Check { file } => {
            let am: AuthorizationModel = loader.parse(file)?;
            am.validate().map_err(usage)?;
            let report = am.check();
            let mut human = String::new();
            let _ = writeln!(
                human,
                "ac_ok={} mls_ok={} no_read_up={} no_write_down={} secure_state={}",
                report.ac_ok,
                report.mls_ok,
                report.no_read_up_ok,
                report.no_write_down_ok,
                report.secure_state
            );
            for v in &report.violations {
                let _ = writeln!(human, "  violation: {}", to_value(v));
            }
            let secure = report.secure_state;
            let witness = (!secure).then(|| to_value(&report.violations));
            Ok(Outcome {
                verdict: if secure { Verdict::Holds } else { Verdict::Violated },
                data: to_value(&report),
                witness,
                human,
            })
        }
        AuthCmd::ToAc { file } => {
            let am: AuthorizationModel = loader.parse(file)?;
            am.validate().map_err(usage)?;
            let ac = authorization_to_ac(&am);
            let human = format!(
                "flattened matrix: {}\n",
                serde_json::to_string_pretty(&ac).expect("ac serializes")
            );
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "ac": to_value(&ac) }),
                witness: None,
                human,
            })
        }
        AuthCmd::Step { file, event } => {
            let am: AuthorizationModel = loader.parse(file)?;
            am.validate().map_err(usage)?;
            let ev: AuthEvent = loader.parse(event)?;
            match transition(&am, &ev) {
                Ok(next) => {
                    let human = format!(
                        "event allowed; successor model: {}\n",
                        serde_json::to_string_pretty(&next).expect("model serializes")
                    );
                    Ok(Outcome {
                        verdict: Verdict::Holds,
                        data: json!({ "allowed": true, "model": to_value(&next) }),
                        witness: None,
                        human,
                    })
                }
                Err(e) => Ok(Outcome {
                    verdict: Verdict::Violated,
                    data: json!({ "allowed": false, "reason": e.to_string() }),
                    witness: Some(json!({ "event": to_value(&ev), "reason": e.to_string() })),
                    human: format!("event rejected: {e}\n"),
                }),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// chan
// ---------------------------------------------------------------------------

/// A channel file is either a bare transducer or a shared-channel model
/// (recognized by its "transducer" key).
fn load_channel(
    loader: &mut Loader,
    file: &str,
) -> Result<(Transducer, Option<SharedChannelModel>), UsageError> {
    let loaded = loader.text(file)?;
    let sniff: Value = serde_json::from_str(&loaded.text)
        .map_err(|e| UsageError(format!("{}: not JSON: {e}", loaded.label)))?;
    if sniff.get("transducer").is_some() {
        let model: SharedChannelModel = parse_json(&loaded)?;
        model.validate().map_err(usage)?;
        Ok((model.transducer.clone(), Some(model)))
    } else {
        let t: Transducer = parse_json(&loaded)?;
        Ok((t, None))
    }
}

fn require_shared(
    model: Option<SharedChannelModel>,
    file: &str,
) -> Result<SharedChannelModel, UsageError> {
    model.ok_or_else(|| {
        UsageError(format!(
            "{file}: this operation needs a shared-channel model (with subjects \
             and clearances), not a bare transducer"
        ))
    })
}

fn format_output_sets(sets: &[Vec<String>]) -> String {
    sets.iter()
        .map(|w| format!("  {}", w.join(" ")))
        .collect::<Vec<_>>()
        .join("\n")
}

fn chan_cmd(cli: &Cli, loader: &mut Loader, cmd: &ChanCmd) -> CliResult {
    match cmd {
        ChanCmd::Run { file, inputs } => {
            let (t, _) = load_channel(loader, file)?;
            let image = t.run(inputs).map_err(usage)?;
            let words: Vec<Vec<String>> = image.enumerate().into_iter().collect();
            let human = if words.is_empty() {
                "no output (some step offered nothing)\n".to_owned()
            } else {
                format!("outputs:\n{}\n", format_output_sets(&words))
            };
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "inputs": inputs, "outputs": words }),
                witness: None,
                human,
            })
        }
        ChanCmd::Invert { file } => {
            let (t, _) = load_channel(loader, file)?;
            let bound = cli.bound.unwrap_or(4);
            let table = t.invert(bound);
            let mut human = format!("inverse relation up to length {bound}:\n");
            let mut rows = Vec::new();
            for (output, inputs) in &table {
                let _ = writeln!(
                    human,
                    "  [{}] <- {}",
                    output.join(" "),
                    inputs
                        .iter()
                        .map(|h| format!("[{}]", h.join(" ")))
                        .collect::<Vec<_>>()
                        .join(" ")
                );
                rows.push(json!({ "output": output, "inputs": inputs }));
            }
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "bound": bound, "inverse": rows }),
                witness: None,
                human,
            })
        }
        ChanCmd::View {
            file,
            subject,
            inputs,
        } => {
            let (_, shared) = load_channel(loader, file)?;
            let model = require_shared(shared, file)?;
            let image = model.local_view(subject, inputs).map_err(usage)?;
            let words: Vec<Vec<String>> = image.enumerate().into_iter().collect();
            let human = format!(
                "{subject}'s view of [{}]:\n{}\n",
                inputs.join(" "),
                format_output_sets(&words)
            );
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "subject": subject, "inputs": inputs, "view": words }),
                witness: None,
                human,
            })
        }
        ChanCmd::Interfere {
            file,
            subject,
            local,
        } => {
            let (_, shared) = load_channel(loader, file)?;
            let model = require_shared(shared, file)?;
            let bound = cli.bound.unwrap_or_else(|| local.len().max(4) + 2);
            let observable = model
                .interference_channel(subject, local, bound)
                .map_err(usage)?;
            let words: Vec<Vec<String>> = observable.into_iter().collect();
            let human = format!(
                "around {subject}'s local history [{}] (global contexts up to {bound}):\n{}\n",
                local.join(" "),
                format_output_sets(&words)
            );
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({
                    "subject": subject,
                    "local": local,
                    "bound": bound,
                    "observable": words,
                }),
                witness: None,
                human,
            })
        }
        ChanCmd::Noninterference {
            file,
            subject,
            mode,
        } => {
            let (t, shared) = load_channel(loader, file)?;
            let model = require_shared(shared, file)?;
            let mode = match mode.as_deref() {
                Some("exact") => Mode::ExactDeterministic,
                Some(_) => Mode::Bounded(cli.bound.unwrap_or(6)),
                None if t.is_deterministic() && cli.bound.is_none() => Mode::ExactDeterministic,
                None => Mode::Bounded(cli.bound.unwrap_or(6)),
            };
            let report = model.check_noninterference(subject, mode).map_err(usage)?;
            let mut human = format!(
                "subject {}: {} ({} check)\n",
                report.subject,
                if report.noninterfering {
                    "noninterfering"
                } else {
                    "interfering"
                },
                report.mode
            );
            if let Some(w) = &report.witness {
                let _ = writeln!(
                    human,
                    "  global history [{}] restricts to [{}]",
                    w.left.join(" "),
                    w.right.join(" ")
                );
                let _ = writeln!(
                    human,
                    "  but the subject sees {:?} there versus {:?} alone",
                    w.left_view, w.right_view
                );
            }
            let ok = report.noninterfering;
            let witness = report.witness.as_ref().map(to_value);
            Ok(Outcome {
                verdict: if ok { Verdict::Holds } else { Verdict::Violated },
                data: to_value(&report),
                witness,
                human,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// prob
// ---------------------------------------------------------------------------

fn prob_cmd(cli: &Cli, loader: &mut Loader, cmd: &ProbCmd) -> CliResult {
    match cmd {
        ProbCmd::Invert { file } => {
            let fx: ProbChannelFixture = loader.parse(file)?;
            let prior = fx.prior_q().map_err(UsageError)?;
            let inv = bayes_invert(&fx.channel, &prior).map_err(usage)?;
            let mut human = String::from("posterior (input given output):\n");
            for y in fx.channel.outputs() {
                if inv.undefined.contains(y) {
                    let _ = writeln!(human, "  {y}: undefined (never produced)");
                    continue;
                }
                let row = inv.inverse.row(y).expect("defined row");
                let cells = row
                    .iter()
                    .map(|(x, p)| format!("{x}={p}"))
                    .collect::<Vec<_>>()
                    .join("  ");
                let _ = writeln!(human, "  {y}: {cells}");
            }
            let marg = inv
                .output_marginal
                .iter()
                .map(|(y, p)| format!("{y}={p}"))
                .collect::<Vec<_>>()
                .join("  ");
            let _ = writeln!(human, "output marginal: {marg}");
            Ok(Outcome {
                verdict: Verdict::Report,
                data: to_value(&inv),
                witness: None,
                human,
            })
        }
        ProbCmd::Entropy { file } => {
            let fx: DistributionFixture = loader.parse(file)?;
            let dist = fx.distribution_q().map_err(UsageError)?;
            let e = entropy(&dist).map_err(usage)?;
            let mut human = format!("entropy: {} bits\n", e.bits);
            if let Some(s) = &e.symbolic {
                let _ = writeln!(
                    human,
                    "exact form: {} + {}·log2(3)",
                    s.rational_part, s.log3_coefficient
                );
            }
            Ok(Outcome {
                verdict: Verdict::Report,
                data: to_value(&e),
                witness: None,
                human,
            })
        }
        ProbCmd::Noninterference { file, subject } => {
            let loaded = loader.text(file)?;
            let sniff: Value = serde_json::from_str(&loaded.text)
                .map_err(|e| UsageError(format!("{}: not JSON: {e}", loaded.label)))?;
            // A relational shared model carries subject_of; embed it with
            // 0/1 probabilities. Otherwise expect a stochastic model.
            let model: SharedStochasticModel = if sniff.get("subject_of").is_some() {
                let relational: SharedChannelModel = parse_json(&loaded)?;
                embed_relational(&relational).map_err(usage)?
            } else {
                parse_json(&loaded)?
            };
            let bound = cli.bound.unwrap_or(6);
            let report = model
                .check_prob_noninterference(subject, bound)
                .map_err(usage)?;
            let mut human = format!(
                "subject {}: {} (bounded at {})\n",
                report.subject,
                if report.noninterfering {
                    "noninterfering"
                } else {
                    "interfering"
                },
                report.bound
            );
            if let Some(w) = &report.witness {
                let _ = writeln!(
                    human,
                    "  history [{}] gives output [{}] probability {}, but alone [{}] gives {}",
                    w.history.join(" "),
                    w.outputs.join(" "),
                    w.viewed_probability,
                    w.purged.join(" "),
                    w.purged_probability
                );
            }
            let ok = report.noninterfering;
            let witness = report.witness.as_ref().map(to_value);
            Ok(Outcome {
                verdict: if ok { Verdict::Holds } else { Verdict::Violated },
                data: to_value(&report),
                witness,
                human,
            })
        }
        ProbCmd::Secrecy { file } => {
            let fx: SecrecyFixture = loader.parse(file)?;
            let prior = fx.prior_q().map_err(UsageError)?;
            let report = check_perfect_secrecy(&fx.cipher, &prior).map_err(usage)?;
            let secret = report.pointwise_secret && report.projector_secret;
            let mut human = format!(
                "pointwise_secret={} projector_secret={} routes_agree={}\n",
                report.pointwise_secret, report.projector_secret, report.routes_agree
            );
            if let Some(w) = &report.pointwise_witness {
                let _ = writeln!(human, "  pointwise witness: {}", to_value(w));
            }
            let witness = report
                .pointwise_witness
                .as_ref()
                .map(to_value)
                .or_else(|| report.projector_witness.as_ref().map(to_value));
            Ok(Outcome {
                verdict: if secret { Verdict::Holds } else { Verdict::Violated },
                data: to_value(&report),
                witness,
                human,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// privacy
// ---------------------------------------------------------------------------

fn quasi_or_default(table: &Table, quasi: &[String]) -> Vec<String> {
    if quasi.is_empty() {
        table
            .attributes()
            .iter()
            .filter(|a| a.role == AttributeRole::QuasiCandidate)
            .map(|a| a.name.clone())
            .collect()
    } else {
        quasi.to_vec()
    }
}

fn privacy_cmd(cli: &Cli, loader: &mut Loader, cmd: &PrivacyCmd) -> CliResult {
    match cmd {
        PrivacyCmd::Qid {
            file,
            external,
            join,
            cap,
            chain,
        } => {
            if !chain.is_empty() {
                let ext: Table = loader.parse(file)?;
                let pairs: Vec<(String, String)> = chain
                    .iter()
                    .map(|c| {
                        c.split_once('=')
                            .map(|(a, v)| (a.to_owned(), v.to_owned()))
                            .ok_or_else(|| {
                                UsageError(format!("--chain entries are attr=value, got {c:?}"))
                            })
                    })
                    .collect::<Result<_, _>>()?;
                let steps = replay_linkage(&ext, &pairs).map_err(usage)?;
                let mut human = format!("linkage against {} records:\n", ext.len());
                for s in &steps {
                    let _ = writeln!(human, "  after {}: {} candidates", s.attribute, s.candidates);
                }
                let identified = steps.last().map(|s| s.candidates == 1).unwrap_or(false);
                if identified {
                    let _ = writeln!(human, "  narrowed to a single person");
                }
                return Ok(Outcome {
                    verdict: if identified { Verdict::Violated } else { Verdict::Holds },
                    data: json!({ "steps": to_value(&steps), "identified": identified }),
                    witness: identified.then(|| to_value(&steps)),
                    human,
                });
            }
            let Some(external) = external else {
                return Err(UsageError(
                    "qid needs either --external with --join, or --chain".to_owned(),
                ));
            };
            let t: Table = loader.parse(file)?;
            let ext: Table = loader.parse(external)?;
            if join.is_empty() {
                return Err(UsageError("--join lists the shared attributes to try".to_owned()));
            }
            let findings = find_quasi_identifiers(&t, &ext, join, *cap).map_err(usage)?;
            let mut human = String::new();
            let mut any = false;
            for f in &findings {
                if f.identified.is_empty() {
                    continue;
                }
                any = true;
                let _ = writeln!(
                    human,
                    "attributes {:?} uniquely re-identify {} of {} records",
                    f.attributes,
                    f.identified.len(),
                    t.len()
                );
            }
            if !any {
                human.push_str("no attribute combination re-identifies anyone\n");
            }
            Ok(Outcome {
                verdict: if any { Verdict::Violated } else { Verdict::Holds },
                data: json!({ "findings": to_value(&findings) }),
                witness: any.then(|| to_value(&findings)),
                human,
            })
        }
        PrivacyCmd::Kanon { file, k, quasi } => {
            let t: Table = loader.parse(file)?;
            let quasi = quasi_or_default(&t, quasi);
            let report = check_k_anonymity(&t, *k, &quasi).map_err(usage)?;
            let mut human = format!(
                "k={} over {:?}: {} ({} groups, smallest {})\n",
                report.k,
                report.quasi_attributes,
                if report.anonymous { "anonymous" } else { "NOT anonymous" },
                report.group_count,
                report.min_group_size
            );
            for g in report.violating.iter().take(10) {
                let _ = writeln!(
                    human,
                    "  group {:?} has only {} record(s)",
                    g.tuple,
                    g.records.len()
                );
            }
            let ok = report.anonymous;
            let witness = (!ok).then(|| to_value(&report.violating));
            Ok(Outcome {
                verdict: if ok { Verdict::Holds } else { Verdict::Violated },
                data: to_value(&report),
                witness,
                human,
            })
        }
        PrivacyCmd::Anonymize {
            file,
            k,
            hierarchies,
            budget,
            quasi,
        } => {
            let t: Table = loader.parse(file)?;
            let ladder_list: Vec<Hierarchy> = loader.parse(hierarchies)?;
            let ladders: BTreeMap<String, Hierarchy> = ladder_list
                .into_iter()
                .map(|h| (h.attribute().to_owned(), h))
                .collect();
            let quasi = quasi_or_default(&t, quasi);
            match anonymize(&t, *k, &quasi, &ladders, *budget) {
                Ok(result) => {
                    let mut human = format!(
                        "achieved {}-anonymity: levels {:?}, {} record(s) suppressed\n",
                        k, result.lineage.levels, result.lineage.suppressed.len()
                    );
                    let _ = writeln!(
                        human,
                        "{}",
                        serde_json::to_string_pretty(&result.table).expect("table serializes")
                    );
                    Ok(Outcome {
                        verdict: Verdict::Holds,
                        data: to_value(&result),
                        witness: None,
                        human,
                    })
                }
                Err(e) => Ok(Outcome {
                    verdict: Verdict::Violated,
                    data: json!({ "achieved": false, "reason": e.to_string() }),
                    witness: Some(json!({ "reason": e.to_string() })),
                    human: format!("cannot reach k={k} within the budget: {e}\n"),
                }),
            }
        }
        PrivacyCmd::DpAnswer { file } => {
            let fx: DpScenarioFixture = loader.parse(file)?;
            let seed = match cli.seed {
                Some(s) => s,
                None if cli.insecure_seed => std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .expect("clock after epoch")
                    .as_nanos() as u64,
                None => {
                    return Err(UsageError(
                        "dp-answer draws noise: pass --seed <n> (or --insecure-seed to \
                         accept a time-derived seed)"
                            .to_owned(),
                    ))
                }
            };
            let mut mech =
                DisclosureMechanism::new(fx.query.clone(), fx.epsilon, fx.budget).map_err(usage)?;
            let answer = mech.laplace_answer(&fx.table, seed).map_err(usage)?;
            let human = format!(
                "noisy answer: {}\n(epsilon spent {}, budget remaining {})\n",
                answer.value, answer.epsilon_spent, answer.budget_remaining
            );
            Ok(Outcome {
                verdict: Verdict::Report,
                data: json!({ "seed": seed, "answer": to_value(&answer) }),
                witness: None,
                human,
            })
        }
        PrivacyCmd::DpTest {
            file,
            trials,
            bins,
            tolerance,
            negative_control,
        } => {
            let fx: DpScenarioFixture = loader.parse(file)?;
            let Some(seed) = cli.seed else {
                return Err(UsageError(
                    "dp-test samples noise: pass --seed <n> for a reproducible run".to_owned(),
                ));
            };
            let mut mech =
                DisclosureMechanism::new(fx.query.clone(), fx.epsilon, fx.budget).map_err(usage)?;
            if *negative_control {
                mech.lambda_override = Some(mech.lambda() / 2.0);
            }
            let report = dp_ratio_test(&mech, &fx.table, &fx.adjacent, *trials, *bins, seed, *tolerance)
                .map_err(usage)?;
            let human = format!(
                "min ratio {:.4} vs bound e^-eps = {:.4} (tolerance {}): {}{}\n",
                report.min_ratio,
                report.bound,
                report.tolerance,
                if report.pass { "PASS" } else { "FAIL" },
                if *negative_control { " [negative control]" } else { "" }
            );
            let ok = report.pass;
            let witness = (!ok).then(|| {
                json!({
                    "min_ratio": report.min_ratio,
                    "bound": report.bound,
                    "negative_control": negative_control,
                })
            });
            Ok(Outcome {
                verdict: if ok { Verdict::Holds } else { Verdict::Violated },
                data: to_value(&report),
                witness,
                human,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// proto / corpus
// ---------------------------------------------------------------------------

fn load_protocol(loader: &mut Loader, file: &str) -> Result<ProtocolSpec, UsageError> {
    let loaded = loader.text(file)?;
    ProtocolSpec::from_json(&loaded.text)
        .map_err(|e| UsageError(format!("{}: {e}", loaded.label)))
}

fn load_scenario(loader: &mut Loader, file: &str) -> Result<Scenario, UsageError> {
    let loaded = loader.text(file)?;
    Scenario::from_json(&loaded.text).map_err(|e| UsageError(format!("{}: {e}", loaded.label)))
}

fn proto_cmd(loader: &mut Loader, cmd: &ProtoCmd) -> CliResult {
    match cmd {
        ProtoCmd::Run { spec, scenario } => {
            let spec = load_protocol(loader, spec)?;
            let scenario = load_scenario(loader, scenario)?;
            let trace = run_honest(&spec, &scenario.instances).map_err(usage)?;
            let chre = check_chre(&trace, &scenario.goals);
            let mut human = String::from("message sequence:\n");
            for m in trace.message_sequence() {
                let _ = writeln!(human, "  {m}");
            }
            human.push_str("final states:\n");
            for i in &trace.instances {
                let _ = writeln!(human, "  {}", i.state_vector);
            }
            let ok = chre.satisfied;
            let _ = writeln!(
                human,
                "authentication goals: {}",
                if scenario.goals.is_empty() {
                    "none declared"
                } else if ok {
                    "satisfied"
                } else {
                    "VIOLATED"
                }
            );
            let witness = (!ok).then(|| to_value(&chre.verdicts));
            Ok(Outcome {
                verdict: if ok { Verdict::Holds } else { Verdict::Violated },
                data: json!({ "trace": to_value(&trace), "goals": to_value(&chre) }),
                witness,
                human,
            })
        }
        ProtoCmd::Verify { spec, scenario } => {
            let spec = load_protocol(loader, spec)?;
            let scenario = load_scenario(loader, scenario)?;
            let attack = search_attack(&spec, &scenario).map_err(usage)?;
            match attack {
                None => Ok(Outcome {
                    verdict: Verdict::Holds,
                    data: json!({ "attack": Value::Null }),
                    witness: None,
                    human: format!(
                        "no authentication attack within {} events\n",
                        scenario.max_events
                    ),
                }),
                Some(report) => {
                    let mut human = String::from("attack found:\n");
                    for m in report.trace.message_sequence() {
                        let _ = writeln!(human, "  {m}");
                    }
                    let fooled = scenario
                        .goals
                        .get(report.verdict.goal)
                        .map(|g| g.authenticator.as_str())
                        .unwrap_or("?");
                    let _ = writeln!(
                        human,
                        "fooled: {fooled} (completed an exchange its peer never ran)"
                    );
                    let _ = writeln!(human, "states explored: {}", report.states_explored);
                    Ok(Outcome {
                        verdict: Verdict::Violated,
                        data: to_value(&report),
                        witness: Some(to_value(&report.verdict)),
                        human,
                    })
                }
            }
        }
    }
}

fn corpus_list() -> CliResult {
    let mut human = String::new();
    let mut rows = Vec::new();
    for f in fixtures::all() {
        let _ = writeln!(human, "{:24} {:14} {}", f.name, f.kind.label(), f.description);
        rows.push(json!({
            "name": f.name,
            "kind": f.kind.label(),
            "description": f.description,
        }));
    }
    Ok(Outcome {
        verdict: Verdict::Report,
        data: json!({ "fixtures": rows }),
        witness: None,
        human,
    })
}

//! Scenario configuration.
//!
//! A scenario is a TOML file:
//!
//! ```toml
//! schema_version = 1
//! id = "f1u-gcm"                 # optional, derived from the settings otherwise
//! experiment = "up-echo"         # up-echo | cp-procedures | bench
//! mode = "disaggregated"         # monolithic | disaggregated
//! repetitions = 20000
//! payload_size = 1024
//! warmup = 100
//! seed = 1
//! execution = "deterministic"    # deterministic | threaded
//!
//! [links.F1-U]
//! security = "AES-GCM-128"       # suite name or "none"
//! transport = "in-process"       # in-process | udp-loopback
//! port = 40000                   # udp-loopback only
//! added_delay_us = 0
//! enc_key = "00112233..."        # hex, optional
//!
//! [bench]
//! sizes = [1024, 4096]
//! repetitions = 9
//! suites = ["AES-GCM-128"]
//! ```
//!
//! Unknown fields are rejected. Every field has a flat key (`mode`,
//! `links.F1-U.security`, `bench.sizes`) and an environment variable
//! (`RANSEC_MODE`, `RANSEC_F1U_SECURITY`, `RANSEC_BENCH_SIZES`). Resolution
//! order is flag, then environment, then file, then default. List values
//! are comma separated outside the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::crypto::{suite_by_id, SuiteFamily, SuiteId};
use crate::pipeline::{
    Execution, Interface, LinkKeys, LinkSpec, Mode, PipelineError, PipelineTopology, TransportKind,
};

pub const SCHEMA_VERSION: i64 = 1;
pub const ENV_PREFIX: &str = "RANSEC_";

pub const DEFAULT_UP_REPETITIONS: usize = 20_000;
pub const DEFAULT_CP_REPETITIONS: usize = 1_000;
pub const DEFAULT_PAYLOAD: usize = 1024;
pub const DEFAULT_WARMUP: usize = 100;
pub const DEFAULT_BENCH_REPETITIONS: usize = 9;

/// Powers of four from 1 KiB to 256 MiB.
pub fn default_bench_sizes() -> Vec<usize> {
    (0..10).map(|i| 1024usize << (2 * i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    UpEcho,
    CpProcedures,
    Bench,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::UpEcho => "up-echo",
            Experiment::CpProcedures => "cp-procedures",
            Experiment::Bench => "bench",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up-echo" => Ok(Experiment::UpEcho),
            "cp-procedures" => Ok(Experiment::CpProcedures),
            "bench" => Ok(Experiment::Bench),
            _ => Err(format!("unknown experiment {s:?}; expected up-echo, cp-procedures or bench")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("schema_version must be {SCHEMA_VERSION}, found {0}")]
    SchemaVersion(String),
    #[error("unknown setting {key:?}; known settings: {known}")]
    UnknownKey { key: String, known: String },
    #[error("unknown environment variable {0}")]
    UnknownEnv(String),
    #[error("{key} = {value:?}: {reason}")]
    Field { key: String, value: String, reason: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub suites: Vec<SuiteId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub id: String,
    pub experiment: Experiment,
    pub mode: Mode,
    pub repetitions: usize,
    pub payload_size: usize,
    pub warmup: usize,
    pub seed: u64,
    pub execution: Execution,
    /// One spec per interface, in `Interface::ALL` order.
    pub links: Vec<LinkSpec>,
    pub bench: BenchConfig,
}

impl Scenario {
    pub fn link(&self, i: Interface) -> &LinkSpec {
        self.links.iter().find(|l| l.interface == i).expect("all interfaces present")
    }

    pub fn link_mut(&mut self, i: Interface) -> &mut LinkSpec {
        self.links.iter_mut().find(|l| l.interface == i).expect("all interfaces present")
    }

    pub fn topology(&self) -> Result<PipelineTopology, PipelineError> {
        PipelineTopology::new(self.mode, &self.links)
    }

    /// Settings that are active in this mode and carry security.
    pub fn security_label(&self) -> String {
        let active: Vec<String> = self
            .links
            .iter()
            .filter(|l| self.mode == Mode::Disaggregated || matches!(l.interface, Interface::Uu | Interface::N3))
            .filter_map(|l| l.security.map(|s| format!("{}={}", l.interface, s)))
            .collect();
        if active.is_empty() {
            "baseline".into()
        } else {
            active.join(",")
        }
    }

    fn derived_id(&self) -> String {
        format!("{}/{}/{}", self.experiment.as_str(), self.mode.as_str(), self.security_label())
    }
}

/// A set of flat `key -> value` settings from one source.
pub type Layer = BTreeMap<String, String>;

const GLOBAL_KEYS: [&str; 8] = [
    "id",
    "experiment",
    "mode",
    "repetitions",
    "payload_size",
    "warmup",
    "seed",
    "execution",
];
const LINK_FIELDS: [&str; 7] = [
    "security",
    "transport",
    "port",
    "added_delay_us",
    "enc_key",
    "auth_key",
    "salt",
];
const BENCH_KEYS: [&str; 3] = ["bench.sizes", "bench.repetitions", "bench.suites"];

/// Every accepted flat key.
pub fn known_keys() -> Vec<String> {
    let mut k: Vec<String> = GLOBAL_KEYS.iter().map(|s| s.to_string()).collect();
    for i in Interface::ALL {
        for f in LINK_FIELDS {
            k.push(format!("links.{i}.{f}"));
        }
    }
    k.extend(BENCH_KEYS.iter().map(|s| s.to_string()));
    k
}

/// Environment variable name for a flat key.
pub fn env_name(key: &str) -> String {
    let mut parts: Vec<String> = key.split('.').map(str::to_string).collect();
    if parts.len() == 3 && parts[0] == "links" {
        let i: Interface = parts[1].parse().expect("known interface");
        parts = vec![i.env_token().to_string(), parts[2].clone()];
    }
    format!("{ENV_PREFIX}{}", parts.join("_").to_ascii_uppercase())
}

/// Normalise a user-supplied key, accepting any interface spelling.
pub fn canonical_key(key: &str) -> Result<String, ScenarioError> {
    let unknown = || ScenarioError::UnknownKey {
        key: key.to_string(),
        known: known_keys().join(", "),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let k = if parts.len() == 3 && parts[0] == "links" {
        let i: Interface = parts[1].parse().map_err(|_| unknown())?;
        format!("links.{i}.{}", parts[2])
    } else {
        key.to_string()
    };
    if known_keys().contains(&k) {
        Ok(k)
    } else {
        Err(unknown())
    }
}

/// Pick the `RANSEC_*` variables out of an environment. Unrecognised
/// variables with the prefix are an error, so typos do not pass silently.
pub fn env_layer<I: IntoIterator<Item = (String, String)>>(vars: I) -> Result<Layer, ScenarioError> {
    let by_env: BTreeMap<String, String> = known_keys().into_iter().map(|k| (env_name(&k), k)).collect();
    let mut layer = Layer::new();
    for (name, value) in vars {
        if !name.starts_with(ENV_PREFIX) {
            continue;
        }
        match by_env.get(&name) {
            Some(k) => {
                layer.insert(k.clone(), value);
            }
            None => return Err(ScenarioError::UnknownEnv(name)),
        }
    }
    Ok(layer)
}

/// Parse `key=value` override strings.
pub fn flag_layer<'a, I: IntoIterator<Item = &'a str>>(sets: I) -> Result<Layer, ScenarioError> {
    let mut layer = Layer::new();
    for s in sets {
        let (k, v) = s.split_once('=').ok_or_else(|| ScenarioError::Field {
            key: s.to_string(),
            value: String::new(),
            reason: "expected key=value".into(),
        })?;
        layer.insert(canonical_key(k.trim())?, v.trim().to_string());
    }
    Ok(layer)
}

/// Expand a `--secure` preset into link settings.
///
/// `all` secures every interface (Uu with NIA2/NEA2, the rest with
/// AES-GCM-128), `up` only Uu, F1-U and N3, `none` nothing. Otherwise a comma
/// separated list of interfaces, each optionally `IF=SUITE`.
pub fn secure_preset(spec: &str) -> Result<Layer, ScenarioError> {
    let default_for = |i: Interface| {
        if i == Interface::Uu {
            SuiteId::Nia2Nea2
        } else {
            SuiteId::AesGcm128
        }
    };
    let mut layer = Layer::new();
    let set = |layer: &mut Layer, i: Interface, v: String| {
        layer.insert(format!("links.{i}.security"), v);
    };
    match spec {
        "all" => Interface::ALL.into_iter().for_each(|i| set(&mut layer, i, default_for(i).to_string())),
        "up" => {
            for i in Interface::ALL {
                let v = if i.is_control() { "none".into() } else { default_for(i).to_string() };
                set(&mut layer, i, v);
            }
        }
        "none" => Interface::ALL.into_iter().for_each(|i| set(&mut layer, i, "none".into())),
        list => {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (name, suite) = match item.split_once('=') {
                    Some((n, s)) => (n, Some(s)),
                    None => (item, None),
                };
                let i: Interface = name.parse().map_err(|reason| ScenarioError::Field {
                    key: "secure".into(),
                    value: item.into(),
                    reason,
                })?;
                let v = suite.map(str::to_string).unwrap_or_else(|| default_for(i).to_string());
                set(&mut layer, i, v);
            }
        }
    }
    Ok(layer)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLink {
    security: Option<String>,
    transport: Option<String>,
    port: Option<u16>,
    added_delay_us: Option<u64>,
    enc_key: Option<String>,
    auth_key: Option<String>,
    salt: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBench {
    sizes: Option<Vec<u64>>,
    repetitions: Option<u64>,
    suites: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: Option<toml::Value>,
    id: Option<String>,
    experiment: Option<String>,
    mode: Option<String>,
    repetitions: Option<u64>,
    payload_size: Option<u64>,
    warmup: Option<u64>,
    seed: Option<u64>,
    execution: Option<String>,
    #[serde(default)]
    links: BTreeMap<Interface, FileLink>,
    bench: Option<FileBench>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Parse scenario text into a flat layer.
pub fn file_layer(text: &str) -> Result<Layer, ScenarioError> {
    let f: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    match &f.schema_version {
        Some(toml::Value::Integer(SCHEMA_VERSION)) => {}
        Some(v) => return Err(ScenarioError::SchemaVersion(v.to_string())),
        None => return Err(ScenarioError::SchemaVersion("nothing (field missing)".into())),
    }
    let mut l = Layer::new();
    let mut put = |k: String, v: Option<String>| {
        if let Some(v) = v {
            l.insert(k, v);
        }
    };
    put("id".into(), f.id);
    put("experiment".into(), f.experiment);
    put("mode".into(), f.mode);
    put("repetitions".into(), f.repetitions.map(|v| v.to_string()));
    put("payload_size".into(), f.payload_size.map(|v| v.to_string()));
    put("warmup".into(), f.warmup.map(|v| v.to_string()));
    put("seed".into(), f.seed.map(|v| v.to_string()));
    put("execution".into(), f.execution);
    for (i, link) in f.links {
        let k = |f: &str| format!("links.{i}.{f}");
        put(k("security"), link.security);
        put(k("transport"), link.transport);
        put(k("port"), link.port.map(|v| v.to_string()));
        put(k("added_delay_us"), link.added_delay_us.map(|v| v.to_string()));
        put(k("enc_key"), link.enc_key);
        put(k("auth_key"), link.auth_key);
        put(k("salt"), link.salt);
    }
    if let Some(b) = f.bench {
        put("bench.sizes".into(), b.sizes.map(|v| join(&v)));
        put("bench.repetitions".into(), b.repetitions.map(|v| v.to_string()));
        put("bench.suites".into(), b.suites.map(|v| v.join(",")));
    }
    Ok(l)
}

pub fn read_file_layer(path: &Path) -> Result<Layer, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file_layer(&text).map_err(|e| match e {
        ScenarioError::Parse(m) => ScenarioError::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// Layers in increasing precedence: file, environment, flags.
#[derive(Debug, Clone, Default)]
pub struct ScenarioSources {
    pub file: Layer,
    pub env: Layer,
    pub flags: Layer,
}

impl ScenarioSources {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .or_else(|| self.env.get(key))
            .or_else(|| self.file.get(key))
            .map(String::as_str)
    }

    /// Which layer supplied `key`.
    pub fn origin(&self, key: &str) -> &'static str {
        if self.flags.contains_key(key) {
            "flag"
        } else if self.env.contains_key(key) {
            "env"
        } else if self.file.contains_key(key) {
            "file"
        } else {
            "default"
        }
    }

    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        let experiment: Experiment = self.parse_or("experiment", Experiment::UpEcho)?;
        let default_reps = match experiment {
            Experiment::CpProcedures => DEFAULT_CP_REPETITIONS,
            Experiment::Bench => DEFAULT_BENCH_REPETITIONS,
            Experiment::UpEcho => DEFAULT_UP_REPETITIONS,
        };
        let repetitions: usize = self.parse_or("repetitions", default_reps)?;
        let payload_size: usize = self.parse_or("payload_size", DEFAULT_PAYLOAD)?;
        if payload_size > 60_000 {
            return Err(self.field_err("payload_size", "must fit one datagram (at most 60000 bytes)"));
        }
        let mut links = Vec::new();
        for i in Interface::ALL {
            links.push(self.link(i)?);
        }
        let bench_reps: usize = self.parse_or(
            "bench.repetitions",
            if experiment == Experiment::Bench { repetitions } else { DEFAULT_BENCH_REPETITIONS },
        )?;
        let sizes = match self.get("bench.sizes") {
            None => default_bench_sizes(),
            Some(s) => self.list("bench.sizes", s, |x| x.parse::<usize>().map_err(|e| e.to_string()))?,
        };
        if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
            return Err(self.field_err("bench.sizes", "sizes must be positive and strictly increasing"));
        }
        let suites = match self.get("bench.suites") {
            None => SuiteId::ALL.into_iter().filter(|s| s.suite().family != SuiteFamily::Dtls).collect(),
            Some(s) => self.list("bench.suites", s, parse_suite)?,
        };
        let mut sc = Scenario {
            id: String::new(),
            experiment,
            mode: self.parse_or("mode", Mode::Disaggregated)?,
            repetitions,
            payload_size,
            warmup: self.parse_or("warmup", DEFAULT_WARMUP)?,
            seed: self.parse_or("seed", 1u64)?,
            execution: self.parse_or("execution", Execution::Deterministic)?,
            links,
            bench: BenchConfig {
                sizes,
                repetitions: bench_reps,
                suites,
            },
        };
        sc.id = match self.get("id") {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => sc.derived_id(),
        };
        sc.topology()?;
        Ok(sc)
    }

    fn field_err(&self, key: &str, reason: impl Into<String>) -> ScenarioError {
        ScenarioError::Field {
            key: format!("{key} (from {})", self.origin(key)),
            value: self.get(key).unwrap_or_default().to_string(),
            reason: reason.into(),
        }
    }

    fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ScenarioError>
    where
        T::Err: ToString,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|e: T::Err| self.field_err(key, e.to_string())),
        }
    }

    fn list<T>(&self, key: &str, s: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, ScenarioError> {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| f(x).map_err(|r| self.field_err(key, r)))
            .collect()
    }

    fn hex(&self, key: &str) -> Result<Option<Vec<u8>>, ScenarioError> {
        self.get(key)
            .map(|v| hex::decode(v.trim()).map_err(|e| self.field_err(key, format!("not hex: {e}"))))
            .transpose()
    }

    fn link(&self, i: Interface) -> Result<LinkSpec, ScenarioError> {
        let k = |f: &str| format!("links.{i}.{f}");
        let security = match self.get(&k("security")).map(str::trim) {
            None | Some("none") | Some("") => None,
            Some(s) => Some(parse_suite(s).map_err(|r| self.field_err(&k("security"), r))?),
        };
        let mut spec = LinkSpec::plain(i);
        spec.security = security;
        spec.transport = self.parse_or(&k("transport"), TransportKind::InProcess)?;
        spec.port = self.get(&k("port")).map(|_| self.parse_or(&k("port"), 0u16)).transpose()?;
        spec.added_delay = Duration::from_micros(self.parse_or(&k("added_delay_us"), 0u64)?);
        let mut keys = LinkKeys::default_for(i);
        if let Some(v) = self.hex(&k("enc_key"))? {
            if v.len() < 16 {
                return Err(self.field_err(&k("enc_key"), "at least 16 bytes of key material"));
            }
            keys.enc_key = v;
        }
        if let Some(v) = self.hex(&k("auth_key"))? {
            keys.auth_key = v;
        }
        if let Some(v) = self.hex(&k("salt"))? {
            keys.salt = v;
        }
        spec.keys = keys;
        spec.validate().map_err(|e| self.field_err(&k("security"), e.to_string()))?;
        Ok(spec)
    }
}

fn parse_suite(s: &str) -> Result<SuiteId, String> {
    suite_by_id(s).map(|suite| suite.id).map_err(|e| e.to_string())
}

/// Resolve a scenario from an optional file, an environment and `key=value`
/// overrides.
pub fn load_scenario<'a>(
    path: Option<&Path>,
    env: impl IntoIterator<Item = (String, String)>,
    sets: impl IntoIterator<Item = &'a str>,
) -> Result<Scenario, ScenarioError> {
    let src = ScenarioSources {
        file: path.map(read_file_layer).transpose()?.unwrap_or_default(),
        env: env_layer(env)?,
        flags: flag_layer(sets)?,
    };
    src.resolve()
}

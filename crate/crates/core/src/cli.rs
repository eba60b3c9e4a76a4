//! Scenario configuration and report rendering behind the `hopshare` binary.
//!
//! Settings come from three layers, later ones winning: built-in defaults,
//! a flat `key = value` config file, command-line flags. Every flag has a
//! file key of the same name (`--hop-seed 7` is `hop-seed = 7`).

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, Scenario};
use crate::hopping::{self, CHANNEL_COUNT, MAX_PARTS, MIN_PARTS};
use crate::medium::{AdversaryMode, MediumConfig, MediumState};
use crate::node::{self, NodeConfig, NodeError, NodeState, SyncOutcome, DEFAULT_T_MAX};
use crate::sim;
use crate::trace::{self, TraceEvent};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn runtime_err(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Send a message end to end and verify the receiver recovers it
    Simulate,
    /// Monte Carlo capture experiment against an eavesdropper
    Attack,
    /// Exact capture probabilities next to the published figures
    Analyze,
    /// One SYNC round over a set of nodes
    Sync,
    /// Channel index to frequency table as CSV
    DumpFreqTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Independent,
    Fixed,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub command: Command,
    pub message: Option<String>,
    pub message_file: Option<PathBuf>,
    pub n_parts: usize,
    pub k: usize,
    pub ks: Vec<u32>,
    pub hop_seed: u32,
    pub share_seed: u64,
    pub adversary_seed: u64,
    pub seed: u64,
    pub channels: u32,
    pub trials: u64,
    pub t_max: u64,
    pub mode: ModeKind,
    pub q: f64,
    pub m: u32,
    pub nodes: usize,
    pub clocks: Vec<u64>,
    pub max_skew: u64,
    pub sender_id: u32,
    pub receiver_id: u32,
    pub loss: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub deterministic: bool,
}

impl ScenarioConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            message: None,
            message_file: None,
            n_parts: 5,
            k: 3,
            ks: Vec::new(),
            hop_seed: 1,
            share_seed: 1,
            adversary_seed: 1,
            seed: 1,
            channels: CHANNEL_COUNT,
            trials: 10_000,
            t_max: DEFAULT_T_MAX,
            mode: ModeKind::Independent,
            q: 1.0 / CHANNEL_COUNT as f64,
            m: 1,
            nodes: 3,
            clocks: Vec::new(),
            max_skew: 1_000,
            sender_id: 1,
            receiver_id: 2,
            loss: 0.0,
            output: None,
            format: Format::Text,
            deterministic: false,
        }
    }

    /// Applies one `key = value` setting.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), RunError> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, RunError> {
            value.parse().map_err(|_| config_err(format!("invalid value {value:?} for `{key}`")))
        }
        fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, RunError> {
            value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s.trim())).collect()
        }
        match key {
            "message" => self.message = Some(value.to_owned()),
            "message-file" => self.message_file = Some(PathBuf::from(value)),
            "n" => self.n_parts = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "ks" => self.ks = list(key, value)?,
            "hop-seed" => self.hop_seed = parse(key, value)?,
            "share-seed" => self.share_seed = parse(key, value)?,
            "adversary-seed" => self.adversary_seed = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "channels" => self.channels = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "t-max" => self.t_max = parse(key, value)?,
            "mode" => {
                self.mode = ModeKind::from_str(value, true)
                    .map_err(|_| config_err(format!("mode must be `independent` or `fixed`, got {value:?}")))?
            }
            "q" => self.q = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "nodes" => self.nodes = parse(key, value)?,
            "clocks" => self.clocks = list(key, value)?,
            "max-skew" => self.max_skew = parse(key, value)?,
            "sender-id" => self.sender_id = parse(key, value)?,
            "receiver-id" => self.receiver_id = parse(key, value)?,
            "loss" => self.loss = parse(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "format" => {
                self.format = Format::from_str(value, true)
                    .map_err(|_| config_err(format!("format must be json, csv or text, got {value:?}")))?
            }
            "deterministic" => self.deterministic = parse(key, value)?,
            other => return Err(config_err(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat config file. Blank lines and `#` comments are ignored.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), RunError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", i + 1)))?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_file_text(&text)
    }

    pub fn apply_flags(&mut self, f: &Flags) -> Result<(), RunError> {
        for (key, value) in f.pairs() {
            self.apply_kv(key, &value)?;
        }
        if f.deterministic {
            self.deterministic = true;
        }
        Ok(())
    }

    fn check_seeds(&self) -> Result<(), RunError> {
        if self.hop_seed & hopping::LFSR_PERIOD == 0 {
            return Err(config_err("hop-seed must be nonzero in its low 17 bits"));
        }
        if self.share_seed == 0 || self.adversary_seed == 0 || self.seed == 0 {
            return Err(config_err("seeds must be nonzero"));
        }
        Ok(())
    }

    fn check_channels(&self) -> Result<(), RunError> {
        if !(2..=CHANNEL_COUNT).contains(&self.channels) {
            return Err(config_err(format!("channels must be in 2..={CHANNEL_COUNT}, got {}", self.channels)));
        }
        Ok(())
    }

    /// Checks the settings the current command depends on.
    pub fn validate(&self) -> Result<(), RunError> {
        self.check_seeds()?;
        match self.command {
            Command::Simulate => {
                self.check_channels()?;
                if !(MIN_PARTS..=MAX_PARTS).contains(&self.n_parts) {
                    return Err(config_err(format!(
                        "n must be between {MIN_PARTS} and {MAX_PARTS}, got {}",
                        self.n_parts
                    )));
                }
                if self.k == 0 || self.k > self.n_parts {
                    return Err(config_err(format!("k must satisfy 1 <= k <= n, got k={} n={}", self.k, self.n_parts)));
                }
                if self.message.is_some() && self.message_file.is_some() {
                    return Err(config_err("give either message or message-file, not both"));
                }
                if !(0.0..=1.0).contains(&self.loss) {
                    return Err(config_err("loss must be a probability in [0, 1]"));
                }
            }
            Command::Attack => {
                self.check_channels()?;
                if self.k == 0 || self.k as u64 > self.channels as u64 {
                    return Err(config_err("k must be between 1 and the channel count"));
                }
                if self.trials == 0 {
                    return Err(config_err("trials must be at least 1"));
                }
                if self.mode == ModeKind::Independent && !(0.0..=1.0).contains(&self.q) {
                    return Err(config_err("q must be a probability in [0, 1]"));
                }
                if self.mode == ModeKind::Fixed && self.m > self.channels {
                    return Err(config_err("m cannot exceed the channel count"));
                }
            }
            Command::Analyze => {
                self.check_channels()?;
                if self.analyze_ks().contains(&0) {
                    return Err(config_err("k must be at least 1"));
                }
            }
            Command::Sync => {
                if self.clocks.is_empty() && self.nodes == 0 {
                    return Err(config_err("sync needs at least one node"));
                }
                if !(0.0..=1.0).contains(&self.loss) {
                    return Err(config_err("loss must be a probability in [0, 1]"));
                }
            }
            Command::DumpFreqTable => {
                if !(1..=CHANNEL_COUNT).contains(&self.channels) {
                    return Err(config_err(format!("channels must be in 1..={CHANNEL_COUNT}")));
                }
            }
        }
        Ok(())
    }

    fn analyze_ks(&self) -> Vec<u32> {
        if self.ks.is_empty() {
            vec![self.k as u32]
        } else {
            self.ks.clone()
        }
    }

    fn message_bytes(&self) -> Result<Vec<u8>, RunError> {
        match (&self.message, &self.message_file) {
            (Some(m), _) => Ok(m.as_bytes().to_vec()),
            (None, Some(p)) => {
                fs::read(p).map_err(|e| config_err(format!("cannot read message file {}: {e}", p.display())))
            }
            (None, None) => Err(config_err("simulate needs --message or --message-file")),
        }
    }

    fn adversary_mode(&self) -> AdversaryMode {
        match self.mode {
            ModeKind::Independent => AdversaryMode::IndependentPerPacket { q: self.q },
            ModeKind::Fixed => AdversaryMode::FixedChannelSet { m: self.m },
        }
    }
}

/// Flags shared by every subcommand. Each maps to the config key of the
/// same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat key=value config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub message: Option<String>,
    #[arg(long, global = true)]
    pub message_file: Option<PathBuf>,
    /// Number of share streams and channels (5..=10)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Reconstruction threshold
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Comma-separated thresholds for `analyze`
    #[arg(long, global = true)]
    pub ks: Option<String>,
    #[arg(long, global = true)]
    pub hop_seed: Option<u32>,
    #[arg(long, global = true)]
    pub share_seed: Option<u64>,
    /// Master seed for Monte Carlo attack trials
    #[arg(long, global = true)]
    pub adversary_seed: Option<u64>,
    /// Seed for medium loss and generated sync clocks
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub channels: Option<u32>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub t_max: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeKind>,
    /// Per-packet capture probability (independent mode)
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Watched channel count (fixed mode)
    #[arg(long, global = true)]
    pub m: Option<u32>,
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Comma-separated starting clocks for `sync`
    #[arg(long, global = true)]
    pub clocks: Option<String>,
    #[arg(long, global = true)]
    pub max_skew: Option<u64>,
    #[arg(long, global = true)]
    pub sender_id: Option<u32>,
    #[arg(long, global = true)]
    pub receiver_id: Option<u32>,
    /// Per-packet loss probability on the medium
    #[arg(long, global = true)]
    pub loss: Option<f64>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Leave wall-clock fields out of reports
    #[arg(long, global = true)]
    pub deterministic: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("message", self.message.clone());
        push("message-file", self.message_file.as_ref().map(|p| p.display().to_string()));
        push("n", self.n.map(|v| v.to_string()));
        push("k", self.k.map(|v| v.to_string()));
        push("ks", self.ks.clone());
        push("hop-seed", self.hop_seed.map(|v| v.to_string()));
        push("share-seed", self.share_seed.map(|v| v.to_string()));
        push("adversary-seed", self.adversary_seed.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("channels", self.channels.map(|v| v.to_string()));
        push("trials", self.trials.map(|v| v.to_string()));
        push("t-max", self.t_max.map(|v| v.to_string()));
        push("mode", self.mode.map(|m| format!("{m:?}").to_lowercase()));
        push("q", self.q.map(|v| v.to_string()));
        push("m", self.m.map(|v| v.to_string()));
        push("nodes", self.nodes.map(|v| v.to_string()));
        push("clocks", self.clocks.clone());
        push("max-skew", self.max_skew.map(|v| v.to_string()));
        push("sender-id", self.sender_id.map(|v| v.to_string()));
        push("receiver-id", self.receiver_id.map(|v| v.to_string()));
        push("loss", self.loss.map(|v| v.to_string()));
        push("output", self.output.as_ref().map(|p| p.display().to_string()));
        push("format", self.format.map(|f| format!("{f:?}").to_lowercase()));
        out
    }
}

#[derive(Debug, Parser)]
#[command(name = "hopshare", version, about = "Secret-shared frequency-hopping transmission simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

impl Cli {
    /// Resolves defaults, config file and flags into one config.
    pub fn resolve(&self) -> Result<ScenarioConfig, RunError> {
        let mut cfg = ScenarioConfig::defaults(self.command);
        if let Some(path) = &self.flags.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_flags(&self.flags)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    elapsed_ms: u128,
    generated_at: u64,
}

fn timing(cfg: &ScenarioConfig, started: Instant) -> Option<Timing> {
    (!cfg.deterministic).then(|| Timing {
        elapsed_ms: started.elapsed().as_millis(),
        generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub record: &'static str,
    pub verdict: &'static str,
    pub recovered: Option<String>,
    pub error: Option<String>,
    pub n: usize,
    pub k: usize,
    pub hop_seed: u32,
    pub share_seed: u64,
    pub channel_indices: Vec<u32>,
    pub frequencies_hz: Vec<u64>,
    pub packets_per_stream: usize,
    pub slots: u64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackSummary {
    pub record: &'static str,
    pub channels: u32,
    pub k: usize,
    pub mode: ModeKind,
    pub q: Option<f64>,
    pub m: Option<u32>,
    pub trials: u64,
    pub seed: u64,
    pub captures_without_sharing: u64,
    pub captures_with_sharing: u64,
    pub rate_without_sharing: f64,
    pub rate_with_sharing: f64,
    pub analytic_without_sharing: String,
    pub analytic_with_sharing: String,
    pub analytic_without_sharing_f64: f64,
    pub analytic_with_sharing_f64: f64,
    pub bits_without_sharing: Option<f64>,
    pub bits_with_sharing: Option<f64>,
    #[serde(rename = "P1_formula")]
    pub p1_formula: String,
    #[serde(rename = "P2_formula")]
    pub p2_formula: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SyncRow {
    pub node_id: u32,
    pub clock_before: u64,
    pub adopted_clock: u64,
    pub source_device: u32,
    pub synced: bool,
}

/// What a run produced, ready to render.
#[derive(Debug, Clone)]
pub enum Report {
    Simulate { summary: SimulateSummary, trace: Vec<TraceEvent> },
    Attack(AttackSummary),
    Analyze(Vec<analysis::ReportRow>),
    Sync(Vec<SyncRow>),
    FreqTable { channels: u32 },
}

impl Report {
    /// True when the run met its own success condition.
    pub fn ok(&self) -> bool {
        match self {
            Self::Simulate { summary, .. } => summary.verdict == "OK",
            Self::Sync(rows) => rows.iter().all(|r| r.synced),
            _ => true,
        }
    }

    pub fn render<W: Write>(&self, format: Format, mut out: W) -> io::Result<()> {
        let csv_err = |e: csv::Error| io::Error::other(e);
        match (self, format) {
            (Self::FreqTable { channels }, _) => {
                hopping::write_frequency_table(out, *channels).map_err(csv_err)
            }
            (Self::Simulate { summary, trace }, Format::Json) => {
                trace::write_jsonl(&mut out, std::slice::from_ref(summary))?;
                trace::write_jsonl(out, trace)
            }
            (Self::Simulate { trace, .. }, Format::Csv) => trace::write_csv(out, trace).map_err(csv_err),
            (Self::Simulate { summary, trace }, Format::Text) => {
                out.write_all(simulate_text(summary, trace).as_bytes())
            }
            (Self::Attack(s), Format::Json) => trace::write_jsonl(out, std::slice::from_ref(s)),
            (Self::Attack(s), Format::Csv) => trace::write_csv(out, std::slice::from_ref(s)).map_err(csv_err),
            (Self::Attack(s), Format::Text) => out.write_all(attack_text(s).as_bytes()),
            (Self::Analyze(rows), Format::Json) => trace::write_jsonl(out, rows),
            (Self::Analyze(rows), Format::Csv) => trace::write_csv(out, rows).map_err(csv_err),
            (Self::Analyze(rows), Format::Text) => out.write_all(analyze_text(rows).as_bytes()),
            (Self::Sync(rows), Format::Json) => trace::write_jsonl(out, rows),
            (Self::Sync(rows), Format::Csv) => trace::write_csv(out, rows).map_err(csv_err),
            (Self::Sync(rows), Format::Text) => out.write_all(sync_text(rows).as_bytes()),
        }
    }
}

fn simulate_text(s: &SimulateSummary, trace: &[TraceEvent]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "verdict: {}", s.verdict);
    match (&s.recovered, &s.error) {
        (Some(r), _) => {
            let _ = writeln!(t, "recovered: {r}");
        }
        (None, Some(e)) => {
            let _ = writeln!(t, "error: {e}");
        }
        _ => {}
    }
    let _ = writeln!(t, "n={} k={} packets/stream={} slots={}", s.n, s.k, s.packets_per_stream, s.slots);
    for (j, (c, f)) in s.channel_indices.iter().zip(&s.frequencies_hz).enumerate() {
        let _ = writeln!(t, "stream {} -> channel {c} ({f} Hz)", j + 1);
    }
    for e in trace {
        let _ = writeln!(t, "slot {:>4} ch {:>6} {:<9} {}", e.slot, e.channel, e.event, e.packet_hex);
    }
    t
}

fn attack_text(s: &AttackSummary) -> String {
    format!(
        "trials: {}\nwithout sharing: {} captured, rate {:.5} (predicted {:.5})\n\
         with sharing:    {} captured, rate {:.5} (predicted {:.5})\n\
         P1 formula: {}\nP2 formula: {}\n",
        s.trials,
        s.captures_without_sharing,
        s.rate_without_sharing,
        s.analytic_without_sharing_f64,
        s.captures_with_sharing,
        s.rate_with_sharing,
        s.analytic_with_sharing_f64,
        s.p1_formula,
        s.p2_formula,
    )
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}"))
}

fn analyze_text(rows: &[analysis::ReportRow]) -> String {
    let mut t = String::from("N\tk\tbits_P1\tbits_P2\tpaper_claim\tdelta_bits\tpaper_claim_P1\tdelta_bits_P1\n");
    for r in rows {
        let _ = writeln!(
            t,
            "{}\t{}\t{:.3}\t{:.3}\t{}\t{}\t{}\t{}",
            r.channels,
            r.k,
            r.bits_p1,
            r.bits_p2,
            opt(r.published_p2),
            opt(r.delta_bits),
            opt(r.published_p1),
            opt(r.delta_bits_p1)
        );
    }
    t
}

fn sync_text(rows: &[SyncRow]) -> String {
    let mut t = String::new();
    for r in rows {
        let _ = writeln!(
            t,
            "node {}: {} -> {} (set by {}){}",
            r.node_id,
            r.clock_before,
            r.adopted_clock,
            r.source_device,
            if r.synced { "" } else { " UNSYNCED" }
        );
    }
    t
}

fn run_simulate(cfg: &ScenarioConfig) -> Result<Report, RunError> {
    let started = Instant::now();
    let plain = cfg.message_bytes()?;
    let node_cfg = |id| NodeConfig {
        device_id: id,
        hop_seed: cfg.hop_seed,
        share_seed: cfg.share_seed,
        k: cfg.k,
        n_parts: cfg.n_parts,
        channel_count: cfg.channels,
        t_max: cfg.t_max,
    };
    let mut sender = NodeState::new(node_cfg(cfg.sender_id)).map_err(|e| config_err(e.to_string()))?;
    let mut receiver = NodeState::new(node_cfg(cfg.receiver_id)).map_err(|e| config_err(e.to_string()))?;
    let mut medium = MediumState::new(MediumConfig { channel_count: cfg.channels, loss_prob: cfg.loss, seed: cfg.seed })
        .map_err(|e| config_err(e.to_string()))?;
    let outcome = sim::run_session(&mut sender, &mut receiver, &mut medium, &plain, 0, None).map_err(|e| match e {
        NodeError::EmptyMessage | NodeError::StreamTooLong(_) => config_err(e.to_string()),
        e => runtime_err(e),
    })?;
    let ok = outcome.verified(&plain);
    let summary = SimulateSummary {
        record: "simulate",
        verdict: if ok { "OK" } else { "FAIL" },
        recovered: outcome.recovered.as_ref().ok().map(|r| String::from_utf8_lossy(r).into_owned()),
        error: outcome.recovered.as_ref().err().map(|e| e.to_string()),
        n: cfg.n_parts,
        k: cfg.k,
        hop_seed: cfg.hop_seed,
        share_seed: cfg.share_seed,
        channel_indices: outcome.plan.schedule.channels().iter().map(|c| c.get()).collect(),
        frequencies_hz: outcome.plan.schedule.frequencies(),
        packets_per_stream: outcome.plan.packets_per_stream,
        slots: outcome.slots,
        timing: timing(cfg, started),
    };
    Ok(Report::Simulate { summary, trace: outcome.trace })
}

fn run_attack(cfg: &ScenarioConfig) -> Result<Report, RunError> {
    let started = Instant::now();
    let sc = Scenario::new(cfg.channels, cfg.k, cfg.adversary_mode(), cfg.trials, cfg.adversary_seed);
    let st = analysis::monte_carlo(&sc).map_err(runtime_err)?;
    let (bits_without, bits_with) = st.security_bits();
    Ok(Report::Attack(AttackSummary {
        record: "attack",
        channels: cfg.channels,
        k: cfg.k,
        mode: cfg.mode,
        q: (cfg.mode == ModeKind::Independent).then_some(cfg.q),
        m: (cfg.mode == ModeKind::Fixed).then_some(cfg.m),
        trials: st.trials,
        seed: cfg.adversary_seed,
        captures_without_sharing: st.captures_without_sharing,
        captures_with_sharing: st.captures_with_sharing,
        rate_without_sharing: st.rate_without_sharing(),
        rate_with_sharing: st.rate_with_sharing(),
        analytic_without_sharing: st.analytic_p1.to_string(),
        analytic_with_sharing: st.analytic_p2.to_string(),
        analytic_without_sharing_f64: analysis::to_f64(&st.analytic_p1),
        analytic_with_sharing_f64: analysis::to_f64(&st.analytic_p2),
        bits_without_sharing: bits_without,
        bits_with_sharing: bits_with,
        p1_formula: st.formula_p1.to_string(),
        p2_formula: st.formula_p2.to_string(),
        timing: timing(cfg, started),
    }))
}

fn run_analyze(cfg: &ScenarioConfig) -> Result<Report, RunError> {
    analysis::report(cfg.channels as u64, &cfg.analyze_ks())
        .map(Report::Analyze)
        .map_err(|e| config_err(e.to_string()))
}

fn run_sync(cfg: &ScenarioConfig) -> Result<Report, RunError> {
    let clocks: Vec<u64> = if cfg.clocks.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..cfg.nodes).map(|_| cfg.t_max + rng.gen_range(0..=cfg.max_skew)).collect()
    } else {
        cfg.clocks.clone()
    };
    let mut nodes = clocks
        .iter()
        .enumerate()
        .map(|(i, &clock)| {
            let mut nc = NodeConfig::new(cfg.sender_id + i as u32, cfg.hop_seed, cfg.share_seed, MIN_PARTS, 1);
            nc.t_max = cfg.t_max;
            let mut n = NodeState::new(nc)?;
            n.local_clock = clock;
            Ok(n)
        })
        .collect::<Result<Vec<_>, NodeError>>()
        .map_err(|e| config_err(e.to_string()))?;
    let mut medium = MediumState::new(MediumConfig { channel_count: cfg.channels, loss_prob: cfg.loss, seed: cfg.seed })
        .map_err(|e| config_err(e.to_string()))?;
    let outcomes: Vec<SyncOutcome> = match node::sync_round(&mut nodes, &mut medium, 0) {
        Ok(o) => o,
        Err(NodeError::UnsyncedNodes { outcomes, .. }) => outcomes,
        Err(NodeError::ClockOverflow(c)) => return Err(config_err(format!("clock {c} exceeds 32 bits"))),
        Err(e) => return Err(runtime_err(e)),
    };
    let top = outcomes.iter().map(|o| o.adopted_clock).max().unwrap_or(0);
    Ok(Report::Sync(
        outcomes
            .iter()
            .zip(&clocks)
            .map(|(o, &before)| SyncRow {
                node_id: o.node_id,
                clock_before: before,
                adopted_clock: o.adopted_clock,
                source_device: o.source_device,
                synced: o.adopted_clock == top,
            })
            .collect(),
    ))
}

/// Executes a validated config.
pub fn run(cfg: &ScenarioConfig) -> Result<Report, RunError> {
    match cfg.command {
        Command::Simulate => run_simulate(cfg),
        Command::Attack => run_attack(cfg),
        Command::Analyze => run_analyze(cfg),
        Command::Sync => run_sync(cfg),
        Command::DumpFreqTable => Ok(Report::FreqTable { channels: cfg.channels }),
    }
}

fn emit(cfg: &ScenarioConfig, report: &Report, stdout: &mut dyn Write) -> Result<(), RunError> {
    match &cfg.output {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| runtime_err(format!("cannot create {}: {e}", path.display())))?;
            report.render(cfg.format, io::BufWriter::new(file)).map_err(runtime_err)
        }
        None => report.render(cfg.format, stdout).map_err(runtime_err),
    }
}

/// Parses `args`, runs, writes the report and returns the exit status:
/// 0 success, 1 configuration error, 2 runtime error or failed verdict.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = cli.resolve().and_then(|cfg| {
        let report = run(&cfg)?;
        emit(&cfg, &report, stdout)?;
        if report.ok() {
            Ok(())
        } else {
            Err(RunError::Runtime("run did not reach its success condition".into()))
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

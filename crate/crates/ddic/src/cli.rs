//! Batch front-end: JSON experiment configs, report files, and the
//! `run` / `bounds` / `audit` / `visibility` / `ingest` / `states`
//! subcommands.
//!
//! Every report embeds the tool version and a SHA-256 hash of the effective
//! configuration (after `--seed` overrides), and is byte-deterministic
//! given those two. Exit codes: 0 on success, 1 for validation problems,
//! 2 for numerical failures (no violation, non-monotone visibility,
//! vanishing filter success).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bell::BellInequality;
use crate::covering::{biseparable_bound, optimality_audit, Covering, CoveringFamily};
use crate::error::{Error, Result};
use crate::protocol::{
    critical_visibility, ingest_counts, run_ddic, synthesize_counts, Certificate,
    MeasurementStrategy,
};
use crate::qcore::State;
use crate::states;

// ---------------------------------------------------------------------------
// Experiment configuration

/// State family selected by a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// `(|0...0> + |1...1>)/sqrt(2)`
    Ghz,
    /// `cos(theta)|0...0> + sin(theta)|1...1>`
    TiltedGhz { theta_degrees: f64 },
    /// Linear cluster state.
    Cluster,
    /// Pair-entangled but biseparable product state.
    BiseparableProduct,
    /// The optimal biseparable cheating model for the configured covering
    /// and inequality, materialized as a density matrix.
    Adversary,
}

/// Covering selected by a config file: exactly one of `family` or a
/// one-indexed edge list.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<CoveringFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
}

/// Inequality selected by a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InequalitySpec {
    Chsh,
    Tilted {
        theta_degrees: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        local_bound: Option<f64>,
    },
}

/// Measurement strategy selected by a config file.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StrategySpec {
    GhzX,
    TiltedX,
    ClusterPauli,
    #[default]
    Auto,
}

/// Noise applied before certification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// White-noise visibility `v`: the state becomes
    /// `v rho + (1 - v) I/d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    /// Uniform detector efficiency. Under weak fair sampling this only
    /// rescales the postselected sample — the certificate is unchanged —
    /// so it is reported as a filter success probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
}

/// A full experiment description as read from `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub parties: usize,
    pub state: StateSpec,
    pub covering: CoveringSpec,
    pub inequality: InequalitySpec,
    #[serde(default)]
    pub strategy: StrategySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    /// When set, `run` synthesizes this many shots per (branch, setting)
    /// cell and certifies from the resulting counts instead of from exact
    /// expectation values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_cell: Option<u64>,
    /// Where `run` writes the synthesized counts table, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parties < 2 {
            return Err(Error::Config("parties must be at least 2".into()));
        }
        match (&self.covering.family, &self.covering.edges) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "covering: give either a family or an edge list, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "covering: give a family (minimal|full|ring) or an edge list".into(),
                ))
            }
            _ => {}
        }
        if let StateSpec::TiltedGhz { .. } = self.state {
            if !matches!(self.inequality, InequalitySpec::Tilted { .. }) {
                return Err(Error::Config(
                    "a tilted state needs the tilted inequality".into(),
                ));
            }
        }
        if let Some(noise) = &self.noise {
            if let Some(v) = noise.visibility {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!(
                        "noise.visibility must lie in [0, 1], got {v}"
                    )));
                }
            }
            if let Some(eta) = noise.efficiency {
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(Error::Config(format!(
                        "noise.efficiency must lie in (0, 1], got {eta}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_covering(&self) -> Result<Covering> {
        match (&self.covering.family, &self.covering.edges) {
            (Some(family), None) => Covering::from_family(*family, self.parties),
            (None, Some(edges)) => {
                let mut zero_based = Vec::with_capacity(edges.len());
                for &(i, j) in edges {
                    if i == 0 || j == 0 {
                        return Err(Error::Config(
                            "covering edges are one-indexed; party 0 is invalid".into(),
                        ));
                    }
                    zero_based.push((i - 1, j - 1));
                }
                Covering::from_edges(self.parties, &zero_based)
            }
            _ => unreachable!("validated"),
        }
    }

    pub fn build_inequality(&self) -> Result<BellInequality> {
        match &self.inequality {
            InequalitySpec::Chsh => Ok(BellInequality::chsh()),
            InequalitySpec::Tilted { theta_degrees, local_bound } => {
                let theta = theta_degrees.to_radians();
                match local_bound {
                    Some(beta_l) => BellInequality::tilted_with_local_bound(theta, *beta_l),
                    None => BellInequality::tilted(theta),
                }
            }
        }
    }

    pub fn build_strategy(&self) -> MeasurementStrategy {
        match self.strategy {
            StrategySpec::GhzX => MeasurementStrategy::GhzX,
            StrategySpec::TiltedX => MeasurementStrategy::TiltedX,
            StrategySpec::ClusterPauli => MeasurementStrategy::ClusterPauli,
            StrategySpec::Auto => MeasurementStrategy::Auto,
        }
    }

    /// The configured state before noise.
    pub fn build_bare_state(&self) -> Result<State> {
        let n = self.parties;
        Ok(match &self.state {
            StateSpec::Ghz => State::Pure(states::ghz(n)?),
            StateSpec::TiltedGhz { theta_degrees } => {
                State::Pure(states::tilted_ghz(n, theta_degrees.to_radians())?)
            }
            StateSpec::Cluster => State::Pure(states::linear_cluster(n)?),
            StateSpec::BiseparableProduct => State::Pure(states::biseparable_product(n)?),
            StateSpec::Adversary => {
                let covering = self.build_covering()?;
                let ineq = self.build_inequality()?;
                let model = states::biseparable_adversary(&covering, &ineq)?;
                State::Mixed(model.to_state()?)
            }
        })
    }

    /// The configured state with white noise applied (detector efficiency
    /// is handled separately, at certification time).
    pub fn build_state(&self) -> Result<State> {
        let bare = self.build_bare_state()?;
        match self.noise.and_then(|n| n.visibility) {
            Some(v) => Ok(State::Mixed(states::white_noise(&bare, v)?)),
            None => Ok(bare),
        }
    }
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "ddic",
    version,
    about = "Device-independent certification of genuine multipartite entanglement \
             from dissociated pair experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Number of parties to audit (3 to 7).
    #[arg(long)]
    pub parties: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Counts table (CSV) to certify from.
    #[arg(long)]
    pub counts: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the certification protocol and emit a certificate.
    Run(ConfigArgs),
    /// Tabulate biseparable bounds across covering families.
    Bounds(ConfigArgs),
    /// Enumerate all connected coverings of N parties and audit the
    /// mincut/|E| ratio against the full covering.
    Audit(AuditArgs),
    /// Bisect for the critical white-noise visibility.
    Visibility(ConfigArgs),
    /// Certify from a table of measured coincidence counts.
    Ingest(IngestArgs),
    /// Dump the amplitudes of a configured pure state.
    States(ConfigArgs),
}

// ---------------------------------------------------------------------------
// Reports

/// Envelope written by every subcommand.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub version: &'static str,
    pub command: &'static str,
    /// SHA-256 over the canonical JSON of the effective configuration.
    pub config_hash: String,
    pub payload: T,
}

pub fn config_hash<T: Serialize>(effective: &T) -> String {
    let canonical = serde_json::to_string(effective).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

#[derive(Debug, Serialize)]
pub struct RunPayload {
    pub certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots_per_cell: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Probability that all parties' detectors click, when a detector
    /// efficiency is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_success: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BoundsRow {
    pub family: String,
    pub parties: usize,
    pub edge_count: usize,
    pub mincut: usize,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundsPayload {
    pub inequality: String,
    pub beta_local: f64,
    pub beta_quantum: f64,
    pub rows: Vec<BoundsRow>,
}

#[derive(Debug, Serialize)]
pub struct AmplitudeRow {
    pub index: usize,
    pub label: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Serialize)]
pub struct StatesPayload {
    pub parties: usize,
    pub dimension: usize,
    /// Entries with |amplitude| > 1e-12, in index order.
    pub amplitudes: Vec<AmplitudeRow>,
}

// ---------------------------------------------------------------------------
// Entry points

/// Parse `std::env::args`, execute, and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    Ok(config)
}

/// Run one parsed command, writing the report to `--out` or to `writer`.
pub fn execute(cli: &Cli, writer: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(args) => {
            let config = load_config(args)?;
            let report = cmd_run(&config)?;
            let text = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    render_csv_certificate(&report, &report.payload.certificate)
                }
                Format::Table => render_table_certificate(&report, &report.payload.certificate),
            };
            deliver(args.out.as_deref(), writer, &text, || {
                render_table_certificate(&report, &report.payload.certificate)
            })
        }
        Command::Bounds(args) => {
            let config = load_config(args)?;
            let report = cmd_bounds(&config)?;
            let text = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => render_csv_bounds(&report),
                Format::Table => render_table_bounds(&report),
            };
            deliver(args.out.as_deref(), writer, &text, || render_table_bounds(&report))
        }
        Command::Audit(args) => {
            let report = cmd_audit(args.parties)?;
            let text = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => render_csv_audit(&report),
                Format::Table => render_table_audit(&report),
            };
            deliver(args.out.as_deref(), writer, &text, || render_table_audit(&report))
        }
        Command::Visibility(args) => {
            let config = load_config(args)?;
            let report = cmd_visibility(&config)?;
            let text = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => render_csv_visibility(&report),
                Format::Table => render_table_visibility(&report),
            };
            deliver(args.out.as_deref(), writer, &text, || render_table_visibility(&report))
        }
        Command::Ingest(args) => {
            let config = load_config(&args.common)?;
            let counts = fs::read_to_string(&args.counts)?;
            let report = cmd_ingest(&config, &counts)?;
            let text = match args.common.format {
                Format::Json => to_json(&report)?,
                Format::Csv => render_csv_certificate(&report, &report.payload),
                Format::Table => render_table_certificate(&report, &report.payload),
            };
            deliver(args.common.out.as_deref(), writer, &text, || {
                render_table_certificate(&report, &report.payload)
            })
        }
        Command::States(args) => {
            let config = load_config(args)?;
            let report = cmd_states(&config)?;
            let text = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => render_csv_states(&report),
                Format::Table => render_table_states(&report),
            };
            deliver(args.out.as_deref(), writer, &text, || render_table_states(&report))
        }
    }
}

fn to_json<T: Serialize>(report: &Report<T>) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Write `text` to the file when `--out` is given (printing a short
/// human-readable summary to `writer` instead), otherwise print `text`.
fn deliver(
    out: Option<&std::path::Path>,
    writer: &mut dyn Write,
    text: &str,
    summary: impl Fn() -> String,
) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
            write!(writer, "{}", summary())?;
            writeln!(writer, "report written to {}", path.display())?;
        }
        None => write!(writer, "{text}")?,
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Command bodies

pub fn cmd_run(config: &ExperimentConfig) -> Result<Report<RunPayload>> {
    let covering = config.build_covering()?;
    let ineq = config.build_inequality()?;
    let strategy = config.build_strategy();
    let mut state = config.build_state()?;

    // a uniform detector efficiency acts as the trivial filter sqrt(eta) I
    let mut filter_success = None;
    if let Some(eta) = config.noise.and_then(|n| n.efficiency) {
        let filters: Vec<_> = (0..config.parties)
            .map(|p| {
                let d = state.register().dim(p);
                crate::qcore::CMatrix::identity(d, d)
                    * crate::qcore::C64::new(eta.sqrt(), 0.0)
            })
            .collect();
        let (filtered, p) = crate::fairsampling::filtered_state(&state, &filters)?;
        state = State::Mixed(filtered);
        filter_success = Some(p);
    }

    let (certificate, shots, seed) = match config.shots_per_cell {
        Some(shots) => {
            let seed = config.seed.unwrap_or(0);
            let counts = synthesize_counts(&state, &covering, &ineq, &strategy, shots, seed)?;
            if let Some(path) = &config.counts_out {
                fs::write(path, &counts)?;
            }
            (ingest_counts(&counts, &covering, &ineq)?, Some(shots), Some(seed))
        }
        None => (run_ddic(&state, &covering, &ineq, &strategy)?, None, None),
    };
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        command: "run",
        config_hash: config_hash(config),
        payload: RunPayload { certificate, shots_per_cell: shots, seed, filter_success },
    })
}

pub fn cmd_bounds(config: &ExperimentConfig) -> Result<Report<BoundsPayload>> {
    let ineq = config.build_inequality()?;
    let n = config.parties;
    let mut families = vec![CoveringFamily::Minimal, CoveringFamily::Full];
    if n >= 3 {
        families.push(CoveringFamily::Ring);
    }
    let mut rows = Vec::new();
    for family in families {
        let covering = Covering::from_family(family, n)?;
        rows.push(BoundsRow {
            family: format!("{family:?}").to_lowercase(),
            parties: n,
            edge_count: covering.edge_count(),
            mincut: covering.mincut(),
            bound: biseparable_bound(&covering, &ineq),
        });
    }
    if config.covering.edges.is_some() {
        let covering = config.build_covering()?;
        rows.push(BoundsRow {
            family: "custom".into(),
            parties: n,
            edge_count: covering.edge_count(),
            mincut: covering.mincut(),
            bound: biseparable_bound(&covering, &ineq),
        });
    }
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        command: "bounds",
        config_hash: config_hash(config),
        payload: BoundsPayload {
            inequality: ineq.id().to_string(),
            beta_local: ineq.local_bound(),
            beta_quantum: ineq.quantum_bound(),
            rows,
        },
    })
}

pub fn cmd_audit(parties: usize) -> Result<Report<crate::covering::AuditReport>> {
    let payload = optimality_audit(parties)?;
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        command: "audit",
        config_hash: config_hash(&serde_json::json!({ "parties": parties })),
        payload,
    })
}

pub fn cmd_visibility(
    config: &ExperimentConfig,
) -> Result<Report<crate::protocol::VisibilityReport>> {
    if config.noise.is_some() {
        return Err(Error::Config(
            "the visibility command sweeps noise itself; remove the noise block".into(),
        ));
    }
    let covering = config.build_covering()?;
    let ineq = config.build_inequality()?;
    let state = config.build_state()?;
    let payload = critical_visibility(&state, &covering, &ineq)?;
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        command: "visibility",
        config_hash: config_hash(config),
        payload,
    })
}

pub fn cmd_ingest(config: &ExperimentConfig, counts: &str) -> Result<Report<Certificate>> {
    let covering = config.build_covering()?;
    let ineq = config.build_inequality()?;
    let payload = ingest_counts(counts, &covering, &ineq)?;
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        command: "ingest",
        config_hash: config_hash(config),
        payload,
    })
}

pub fn cmd_states(config: &ExperimentConfig) -> Result<Report<StatesPayload>> {
    if config.noise.is_some() {
        return Err(Error::Config(
            "amplitude dumps are for pure states; remove the noise block".into(),
        ));
    }
    let state = config.build_bare_state()?;
    let pure = match &state {
        State::Pure(p) => p,
        State::Mixed(_) => {
            return Err(Error::Config(
                "the configured state family is mixed; amplitude dumps need a pure state".into(),
            ))
        }
    };
    let register = pure.register().clone();
    let mut amplitudes = Vec::new();
    for (index, amp) in pure.amplitudes().iter().enumerate() {
        if amp.norm() > 1e-12 {
            let digits = register.digits_of(index);
            let label: String =
                digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("");
            amplitudes.push(AmplitudeRow { index, label, re: amp.re, im: amp.im });
        }
    }
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        command: "states",
        config_hash: config_hash(config),
        payload: StatesPayload {
            parties: config.parties,
            dimension: register.total_dim(),
            amplitudes,
        },
    })
}

// ---------------------------------------------------------------------------
// Renderers

fn header_comment<T: Serialize>(report: &Report<T>) -> String {
    format!(
        "# ddic {} {}\n# config sha256:{}\n",
        report.version, report.command, report.config_hash
    )
}

fn render_csv_certificate<T: Serialize>(report: &Report<T>, cert: &Certificate) -> String {
    let mut s = header_comment(report);
    s.push_str("edge,beta_e,branches,excluded_probability\n");
    for e in &cert.edges {
        let _ = writeln!(
            s,
            "{}-{},{},{},{}",
            e.edge[0],
            e.edge[1],
            e.beta_e,
            e.branches.len(),
            e.excluded_probability
        );
    }
    let _ = writeln!(s, "average,{},,", cert.beta_bar);
    let _ = writeln!(s, "bound,{},,", cert.biseparable_bound);
    let _ = writeln!(s, "gme_weight,{},,", cert.gme_weight.clamped);
    s
}

fn render_table_certificate<T: Serialize>(report: &Report<T>, cert: &Certificate) -> String {
    let mut s = header_comment(report);
    let _ = writeln!(
        s,
        "inequality {} (local {:.6}, quantum {:.6})",
        cert.inequality, cert.local_bound.configured, cert.beta_quantum
    );
    let _ = writeln!(
        s,
        "covering   {} edges on {} parties, mincut {}",
        cert.covering.edge_count, cert.covering.n_parties, cert.covering.mincut
    );
    let _ = writeln!(s, "strategy   {}", cert.strategy);
    let _ = writeln!(s, "{:-<58}", "");
    let _ = writeln!(s, "{:>8}  {:>12}  {:>8}", "edge", "beta_e", "branches");
    for e in &cert.edges {
        let _ = writeln!(
            s,
            "{:>8}  {:>12.8}  {:>8}",
            format!("{}-{}", e.edge[0], e.edge[1]),
            e.beta_e,
            e.branches.len()
        );
    }
    let _ = writeln!(s, "{:-<58}", "");
    let _ = writeln!(s, "edge average     {:.10}", cert.beta_bar);
    let _ = writeln!(s, "biseparable bound {:.10}", cert.biseparable_bound);
    if let Some(stats) = &cert.stats {
        let _ = writeln!(
            s,
            "standard error   {:.2e} ({} shots)",
            stats.beta_bar_stderr, stats.total_shots
        );
    }
    let _ = writeln!(
        s,
        "verdict          {}",
        if cert.certified { "GME certified" } else { "not certified" }
    );
    let _ = writeln!(s, "gme weight       {:.10}", cert.gme_weight.clamped);
    if let Some(caveat) = &cert.caveat {
        let _ = writeln!(s, "caveat           {caveat}");
    }
    s
}

fn render_csv_bounds(report: &Report<BoundsPayload>) -> String {
    let mut s = header_comment(report);
    s.push_str("family,parties,edges,mincut,bound\n");
    for r in &report.payload.rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.family, r.parties, r.edge_count, r.mincut, r.bound);
    }
    s
}

fn render_table_bounds(report: &Report<BoundsPayload>) -> String {
    let p = &report.payload;
    let mut s = header_comment(report);
    let _ = writeln!(
        s,
        "{} (local {:.6}, quantum {:.6})",
        p.inequality, p.beta_local, p.beta_quantum
    );
    let _ = writeln!(s, "{:>8} {:>8} {:>6} {:>7} {:>14}", "family", "parties", "edges", "mincut", "bound");
    for r in &p.rows {
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>6} {:>7} {:>14.10}",
            r.family, r.parties, r.edge_count, r.mincut, r.bound
        );
    }
    s
}

fn render_csv_audit(report: &Report<crate::covering::AuditReport>) -> String {
    let p = &report.payload;
    let mut s = header_comment(report);
    s.push_str("parties,connected_graphs,equality_attainers,violations,max_ratio\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{}/{}",
        p.n, p.connected_graphs, p.equality_attainers, p.violations, p.max_ratio.0, p.max_ratio.1
    );
    s
}

fn render_table_audit(report: &Report<crate::covering::AuditReport>) -> String {
    let p = &report.payload;
    let mut s = header_comment(report);
    let _ = writeln!(s, "parties            {}", p.n);
    let _ = writeln!(s, "connected coverings {}", p.connected_graphs);
    let _ = writeln!(s, "max mincut/|E|     {}/{}", p.max_ratio.0, p.max_ratio.1);
    let _ = writeln!(s, "equality attainers {}", p.equality_attainers);
    let _ = writeln!(
        s,
        "violations         {} {}",
        p.violations,
        if p.violations == 0 { "(full covering is optimal)" } else { "(!)" }
    );
    s
}

fn render_csv_visibility(report: &Report<crate::protocol::VisibilityReport>) -> String {
    let p = &report.payload;
    let mut s = header_comment(report);
    s.push_str("v_critical,bound,beta_bar_at_v1,strategy,evaluations\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{}",
        p.v_critical, p.biseparable_bound, p.beta_bar_at_full_visibility, p.strategy, p.evaluations
    );
    s
}

fn render_table_visibility(report: &Report<crate::protocol::VisibilityReport>) -> String {
    let p = &report.payload;
    let mut s = header_comment(report);
    let _ = writeln!(s, "critical visibility {:.4}", p.v_critical);
    let _ = writeln!(s, "biseparable bound   {:.10}", p.biseparable_bound);
    let _ = writeln!(s, "score at v = 1      {:.10}", p.beta_bar_at_full_visibility);
    let _ = writeln!(s, "strategy            {}", p.strategy);
    let _ = writeln!(s, "evaluations         {}", p.evaluations);
    s
}

fn render_csv_states(report: &Report<StatesPayload>) -> String {
    let mut s = header_comment(report);
    s.push_str("index,label,re,im\n");
    for a in &report.payload.amplitudes {
        let _ = writeln!(s, "{},{},{},{}", a.index, a.label, a.re, a.im);
    }
    s
}

fn render_table_states(report: &Report<StatesPayload>) -> String {
    let p = &report.payload;
    let mut s = header_comment(report);
    let _ = writeln!(s, "{} parties, dimension {}", p.parties, p.dimension);
    let _ = writeln!(s, "{:>6}  {:>10}  {:>22}  {:>22}", "index", "label", "re", "im");
    for a in &p.amplitudes {
        let _ = writeln!(s, "{:>6}  {:>10}  {:>22.16}  {:>22.16}", a.index, a.label, a.re, a.im);
    }
    s
}

// ---------------------------------------------------------------------------

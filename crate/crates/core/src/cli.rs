//! Scenario files and the command runner behind the `soen` binary.
//!
//! A scenario is a TOML document whose tables mirror the library modules:
//!
//! ```toml
//! command = "simulate"
//! seed = 7
//!
//! [topology]
//! kind = "random"
//! n = 1000
//! k = 10
//!
//! [simulation]
//! t_end = 1e-5
//! stimulus_rate = 1e6
//! ```
//!
//! Every omitted key takes its documented default and unknown keys are
//! rejected.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::devices::{DeviceError, SomaSpec, StdpParams, SynapseSpec, TransmitterSpec};
use crate::engine::{self, EngineError, Network, SimConfig};
use crate::layout::{self, ColumnSpec, DeviceLatency, LayoutError, TilingSpec, WaferSpec};
use crate::photonics::{DeliveryMode, MediumTable, PhotonicsError, PowerModel};
use crate::scaling::{self, ScalingError, SystemSpec};
use crate::time::secs_to_ps;
use crate::topology::{self, HierarchyLevel, Topology, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[value(name = "scaling-report")]
    ScalingReport,
    #[value(name = "topology-stats")]
    TopologyStats,
    Simulate,
    Fig2a,
    Fig2b,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::ScalingReport => "scaling-report",
            Command::TopologyStats => "topology-stats",
            Command::Simulate => "simulate",
            Command::Fig2a => "fig2a",
            Command::Fig2b => "fig2b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioError::Parse(_) => "config_parse",
            ScenarioError::Invalid { .. } => "config_invalid",
            ScenarioError::Topology(_) => "topology",
            ScenarioError::Layout(_) => "layout",
            ScenarioError::Photonics(_) => "photonics",
            ScenarioError::Engine(_) => "engine",
            ScenarioError::Io(_) => "io",
        }
    }

    /// Machine-readable form written to stderr by the binary.
    pub fn to_json(&self) -> Value {
        let mut err = json!({ "kind": self.kind(), "message": self.to_string() });
        if let ScenarioError::Invalid { key, .. } = self {
            err["key"] = json!(key);
        }
        json!({ "error": err })
    }
}

impl From<ScalingError> for ScenarioError {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::Layout(e) => e.into(),
            ScalingError::Photonics(e) => e.into(),
        }
    }
}

fn key_err(block: &str, field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: format!("{block}.{field}"),
        reason: reason.into(),
    }
}

trait Keyed<T> {
    fn at(self, block: &str) -> Result<T, ScenarioError>;
}

impl<T> Keyed<T> for Result<T, DeviceError> {
    fn at(self, block: &str) -> Result<T, ScenarioError> {
        self.map_err(|e| match e {
            DeviceError::Invalid { field, reason } => key_err(block, field, reason),
            other => ScenarioError::Parse(other.to_string()),
        })
    }
}

impl<T> Keyed<T> for Result<T, LayoutError> {
    fn at(self, block: &str) -> Result<T, ScenarioError> {
        self.map_err(|e| match e {
            LayoutError::Invalid { field, reason } => key_err(block, field, reason),
            other => other.into(),
        })
    }
}

impl<T> Keyed<T> for Result<T, PhotonicsError> {
    fn at(self, block: &str) -> Result<T, ScenarioError> {
        self.map_err(|e| match e {
            PhotonicsError::Invalid { field, reason } => key_err(block, field, reason),
            other => other.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    #[default]
    Random,
    SmallWorld,
    Hierarchical,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub levels: Vec<HierarchyLevel>,
    /// Edge-list file for `kind = "file"`.
    pub path: Option<PathBuf>,
    /// Initial weight of every edge; the synapse weight when unset.
    pub weight: Option<f64>,
    /// BFS sources for path lengths on graphs above the exact-mode limit.
    pub sample_size: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            kind: TopologyKind::Random,
            n: 1000,
            k: 10,
            beta: 0.1,
            levels: Vec::new(),
            path: None,
            weight: None,
            sample_size: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhotonicsConfig {
    pub eta: f64,
    /// Mean firing rate used for power estimates, Hz.
    pub f_avg: f64,
    pub cooling_factor: f64,
    /// Per-photon Bernoulli delivery instead of the deterministic budget.
    pub stochastic: bool,
    pub media: MediumTable,
}

impl Default for PhotonicsConfig {
    fn default() -> Self {
        let p = PowerModel::default();
        Self {
            eta: p.eta,
            f_avg: p.f_avg,
            cooling_factor: p.cooling_factor,
            stochastic: false,
            media: MediumTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Seconds.
    pub t_end: f64,
    /// Poisson rate of external photons into each neuron, Hz.
    pub stimulus_rate: f64,
    /// Stimulus events in the event-log line format; replaces the Poisson drive.
    pub stimulus_file: Option<PathBuf>,
    pub stimulus_weight: f64,
    pub stimulus_latency: f64,
    pub plasticity: bool,
    pub dendrite: bool,
    pub latency: DeviceLatency,
    pub write_events: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_end: 10e-6,
            stimulus_rate: 1e6,
            stimulus_file: None,
            stimulus_weight: 1.0,
            stimulus_latency: 0.0,
            plasticity: true,
            dendrite: false,
            latency: DeviceLatency::default(),
            write_events: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub synapse: SynapseSpec,
    pub soma: SomaSpec,
    pub transmitter: TransmitterSpec,
    /// Derived from `synapse.tau_syn` when unset.
    pub stdp: Option<StdpParams>,
    pub photonics: PhotonicsConfig,
    pub wafer: WaferSpec,
    pub column: ColumnSpec,
    pub tiling: TilingSpec,
    pub topology: TopologyConfig,
    pub system: SystemSpec,
    pub simulation: SimulationConfig,
}

/// Parses, fills derived defaults and validates a scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    cfg.normalize();
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    parse_config(&fs::read_to_string(path)?)
}

impl ScenarioConfig {
    /// Fills every derived default so that serializing gives the full form.
    pub fn normalize(&mut self) {
        if self.stdp.is_none() {
            self.stdp = Some(StdpParams::for_tau_syn(self.synapse.tau_syn));
        }
        if self.topology.weight.is_none() {
            self.topology.weight = Some(self.synapse.weight);
        }
        if self.system.white_matter_coefficient.is_none() {
            self.system.white_matter_coefficient = Some(layout::default_white_matter_coefficient());
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn stdp(&self) -> StdpParams {
        self.stdp
            .unwrap_or_else(|| StdpParams::for_tau_syn(self.synapse.tau_syn))
    }

    pub fn power_model(&self) -> PowerModel {
        PowerModel {
            eta: self.photonics.eta,
            photons_per_pulse: self.transmitter.photons_per_pulse,
            wavelength: self.transmitter.wavelength,
            f_avg: self.photonics.f_avg,
            cooling_factor: self.photonics.cooling_factor,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            synapse: self.synapse,
            soma: self.soma,
            transmitter: self.transmitter,
            stdp: self.stdp(),
            plasticity: self.simulation.plasticity,
            dendrite: self.simulation.dendrite,
            delivery: if self.photonics.stochastic {
                DeliveryMode::Stochastic { seed: self.seed }
            } else {
                DeliveryMode::Deterministic
            },
            latency: self.simulation.latency,
            media: self.photonics.media,
            stimulus_weight: self.simulation.stimulus_weight,
            stimulus_latency: self.simulation.stimulus_latency,
        }
    }

    /// Checks every block against its module invariants.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.synapse.validate().at("synapse")?;
        self.soma.validate().at("soma")?;
        // Fan-out is checked when the network is compiled.
        self.transmitter.validate(&self.soma, 0).at("transmitter")?;
        self.stdp().validate().at("stdp")?;
        self.power_model()
            .validate(Some(self.transmitter.max_rate))
            .at("photonics")?;
        self.photonics.media.validate().at("photonics.media")?;
        self.wafer.validate().at("wafer")?;
        self.column.validate().at("column")?;
        self.tiling.validate().at("tiling")?;
        self.simulation.latency.validate().at("simulation.latency")?;

        let t = &self.topology;
        if let Some(w) = t.weight {
            if !(self.synapse.w_min..=self.synapse.w_max).contains(&w) {
                return Err(key_err("topology", "weight", "must lie within [synapse.w_min, synapse.w_max]"));
            }
        }
        if !(0.0..=1.0).contains(&t.beta) {
            return Err(key_err("topology", "beta", "must lie in [0, 1]"));
        }
        match t.kind {
            TopologyKind::Random | TopologyKind::SmallWorld if t.k >= t.n.max(1) && t.k > 0 => {
                return Err(key_err("topology", "k", format!("{} must be < n = {}", t.k, t.n)));
            }
            TopologyKind::SmallWorld if !t.k.is_multiple_of(2) => {
                return Err(key_err("topology", "k", "must be even for a small-world ring"));
            }
            TopologyKind::Hierarchical if t.levels.is_empty() => {
                return Err(key_err("topology", "levels", "hierarchical topologies need at least one level"));
            }
            TopologyKind::File if t.path.is_none() => {
                return Err(key_err("topology", "path", "required for kind = \"file\""));
            }
            _ => {}
        }

        let s = &self.system;
        if s.neurons_per_wafer == 0 {
            return Err(key_err("system", "neurons_per_wafer", "must be >= 1"));
        }
        if s.white_matter_coefficient.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
            return Err(key_err("system", "white_matter_coefficient", "must be finite and > 0"));
        }
        if !(s.f_osc > 0.0 && s.f_osc.is_finite()) {
            return Err(key_err("system", "f_osc", "must be finite and > 0"));
        }
        if !(s.velocity > 0.0 && s.velocity.is_finite()) {
            return Err(key_err("system", "velocity", "must be finite and > 0"));
        }

        let sim = &self.simulation;
        for (field, v) in [
            ("t_end", sim.t_end),
            ("stimulus_rate", sim.stimulus_rate),
            ("stimulus_weight", sim.stimulus_weight),
            ("stimulus_latency", sim.stimulus_latency),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(key_err("simulation", field, "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn build_topology(&self) -> Result<Topology, ScenarioError> {
        let t = &self.topology;
        let mut topo = match t.kind {
            TopologyKind::Random => topology::generate_random(t.n, t.k, self.seed)?,
            TopologyKind::SmallWorld => topology::generate_small_world(t.n, t.k, t.beta, self.seed)?,
            TopologyKind::Hierarchical => topology::generate_hierarchical(&t.levels, self.seed)?,
            TopologyKind::File => {
                let path = t.path.as_ref().expect("validated");
                return Ok(Topology::read_edge_list(BufReader::new(File::open(path)?))?);
            }
        };
        topo.set_uniform_weight(t.weight.unwrap_or(self.synapse.weight));
        Ok(topo)
    }
}

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(sig6).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), ScenarioError> {
    let mut v = serde_json::to_value(value).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), ScenarioError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

/// Scientific notation with six significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

/// Runs the configured command and returns the artifacts it wrote.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, ScenarioError> {
    let command = cfg
        .command
        .ok_or_else(|| ScenarioError::Invalid {
            key: "command".into(),
            reason: "no command given".into(),
        })?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut out = |name: &str| {
        let p = out_dir.join(name);
        written.push(p.clone());
        p
    };
    match command {
        Command::Fig2a => {
            let rows = scaling::fig2a_rows(&scaling::decade_grid(3, 11));
            match format {
                OutputFormat::Csv => write_csv(
                    &out("fig2a.csv"),
                    "L,N_tot,k",
                    rows.iter().map(|r| format!("{},{},{}", r.path_length, r.n_total, r.k)),
                )?,
                OutputFormat::Json => write_json(&out("fig2a.json"), &rows)?,
            }
        }
        Command::Fig2b => {
            let rows = scaling::fig2b_rows(&cfg.wafer, &scaling::decade_grid(1, 4));
            match format {
                OutputFormat::Csv => write_csv(
                    &out("fig2b.csv"),
                    "k,p,N_300",
                    rows.iter().map(|r| format!("{},{},{}", r.k, r.p, r.n_300)),
                )?,
                OutputFormat::Json => write_json(&out("fig2b.json"), &rows)?,
            }
        }
        Command::ScalingReport => {
            let r = scaling::scaling_report(&cfg.wafer, &cfg.column, &cfg.power_model(), &cfg.system)?;
            match format {
                OutputFormat::Json => write_json(&out("scaling_report.json"), &r)?,
                OutputFormat::Csv => write_csv(
                    &out("scaling_report.csv"),
                    "wafer_capacity,vertical_links,edge_couplers_per_side,fiber_tract_total,fibers_per_wafer,grey_m3,white_m3,total_m3,device_w,wallplug_w,max_span_m",
                    [format!(
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        r.wafer_capacity,
                        r.vertical_links,
                        r.edge_couplers_per_side,
                        r.fiber_tract_total,
                        r.fibers_per_wafer,
                        sci(r.grey_m3),
                        sci(r.white_m3),
                        sci(r.total_m3),
                        sci(r.device_w),
                        sci(r.wallplug_w),
                        sci(r.max_span_m)
                    )],
                )?,
            }
        }
        Command::TopologyStats => {
            let topo = cfg.build_topology()?;
            let m = topology::graph_metrics(&topo, cfg.topology.sample_size, cfg.seed)?;
            match format {
                OutputFormat::Json => write_json(&out("topology_stats.json"), &m)?,
                OutputFormat::Csv => write_csv(
                    &out("topology_stats.csv"),
                    "n_nodes,n_edges,avg_path_length,disconnected_fraction,clustering",
                    [format!(
                        "{},{},{},{},{}",
                        m.n_nodes,
                        m.n_edges,
                        m.avg_path_length.mean.map(sci).unwrap_or_default(),
                        sci(m.avg_path_length.disconnected_fraction),
                        sci(m.clustering)
                    )],
                )?,
            }
        }
        Command::Simulate => {
            let topo = cfg.build_topology()?;
            let placed = layout::place_system(&topo, &cfg.wafer, &cfg.column, &cfg.tiling, cfg.seed)?;
            let net = Network::build(&topo, &placed, cfg.sim_config())?;
            let t_end = secs_to_ps(cfg.simulation.t_end);
            let stimulus = match &cfg.simulation.stimulus_file {
                Some(p) => engine::read_events(BufReader::new(File::open(p)?))?,
                None => engine::poisson_stimulus(topo.n_nodes(), cfg.simulation.stimulus_rate, t_end, cfg.seed),
            };
            let log = engine::run(&net, &stimulus, t_end)?;
            if cfg.simulation.write_events {
                let mut w = BufWriter::new(File::create(out("events.log"))?);
                log.write_text(&mut w)?;
                w.flush()?;
            }
            let summary = json!({
                "summary": log.summary,
                "neurons": topo.n_nodes(),
                "edges": topo.n_edges(),
                "t_end_ps": t_end,
                "stimulus_events": stimulus.len(),
                "wafers_used": placed.wafer_of.iter().max().map_or(0, |&w| w + 1),
                "fiber_demand_max": placed.fiber_demand.iter().max().copied().unwrap_or(0),
                "fibers_per_wafer": placed.fibers_per_wafer,
            });
            write_json(&out("summary.json"), &summary)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scaling_config_takes_defaults() {
        let cfg = parse_config("command = \"scaling-report\"\n").unwrap();
        assert_eq!(cfg.command, Some(Command::ScalingReport));
        assert_eq!(cfg.wafer, WaferSpec::default());
        assert_eq!(cfg.stdp(), StdpParams::for_tau_syn(cfg.synapse.tau_syn));
    }

    #[test]
    fn negative_pitch_names_the_key() {
        match parse_config("[wafer]\nwaveguide_pitch = -1.0\n") {
            Err(ScenarioError::Invalid { key, .. }) => assert_eq!(key, "wafer.waveguide_pitch"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        let e = parse_config("[wafer]\nradiuss = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("radiuss"), "{e}");
        let e = parse_config("[wafer]\nplanes = \"six\"\n").unwrap_err();
        assert!(e.to_string().contains("planes"), "{e}");
        assert!(parse_config("bogus = 1\n").is_err());
    }

    #[test]
    fn cross_block_invariants() {
        let e = parse_config("[transmitter]\nmax_rate = 1e9\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid { ref key, .. } if key == "transmitter.max_rate"));
        let e = parse_config("[photonics]\nf_avg = 1e9\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid { ref key, .. } if key == "photonics.f_avg"));
        let e = parse_config("[topology]\nkind = \"small_world\"\nk = 5\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid { ref key, .. } if key == "topology.k"));
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(sig6(1.281_625_4), 1.28163);
        assert_eq!(sig6(0.0), 0.0);
        assert_eq!(sci(12_816.26), "1.28163e4");
    }

    #[test]
    fn error_json_shape() {
        let e = key_err("wafer", "radius", "must be > 0");
        let v = e.to_json();
        assert_eq!(v["error"]["kind"], "config_invalid");
        assert_eq!(v["error"]["key"], "wafer.radius");
    }
}

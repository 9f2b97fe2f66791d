//! Deterministic discrete-event simulation of a placed network.
//!
//! Events carry integer picosecond timestamps and are processed in the strict
//! order `(time, kind, src, dst, payload)` with kinds ranked
//! `photon_arrival < fire < emission < stdp_pairing`, so plasticity at a
//! timestamp sees every spike of that timestamp.
//!
//! A photon arriving at time `t` is integrated immediately; if the soma drive
//! reaches threshold the fire is scheduled one processing stage later. A fire
//! schedules the emission (rate-limited by the transmitter) and, with
//! plasticity on, a pairing event. Emissions schedule one arrival per
//! destination that receives at least one photon.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::{
    self, Destination, DeviceError, FanOut, SomaSpec, StdpParams, SynapseSpec, TransmitterSpec, TransmitterState,
};
use crate::layout::{propagation_delay, DeviceLatency, LayoutError, PhysicalLayout};
use crate::photonics::{self, DeliveryMode, MediumTable, PhotonicsError};
use crate::time::{ps_to_secs, secs_to_ps, Picos};
use crate::topology::Topology;

/// `aux` value of queue entries that do not travel along a topology edge.
const NO_EDGE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("causality violation: {event} scheduled before current time {now} ps")]
    Causality { event: Event, now: Picos },
    #[error("invalid stimulus: {0}")]
    Stimulus(String),
    #[error("neuron {neuron}: pulse of {photons} photons leaves destination {dst} without a photon")]
    UnderBudget { neuron: u32, dst: u32, photons: u64 },
    #[error("event log line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("layout does not match topology: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PhotonArrival,
    Fire,
    Emission,
    StdpPairing,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PhotonArrival => "photon_arrival",
            EventKind::Fire => "fire",
            EventKind::Emission => "emission",
            EventKind::StdpPairing => "stdp_pairing",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            EventKind::PhotonArrival,
            EventKind::Fire,
            EventKind::Emission,
            EventKind::StdpPairing,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

/// A timestamped simulation event. The derived order is the processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub time: Picos,
    pub kind: EventKind,
    pub src: u32,
    pub dst: u32,
    /// Photons for arrivals and emissions, pairings applied for plasticity.
    pub payload: u64,
}

impl Event {
    pub fn photon(time: Picos, src: u32, dst: u32, photons: u64) -> Self {
        Self {
            time,
            kind: EventKind::PhotonArrival,
            src,
            dst,
            payload: photons,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.time, self.kind.as_str(), self.src, self.dst, self.payload)
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = s.split_whitespace().collect();
        if f.len() != 5 {
            return Err(format!("expected `time_ps kind src dst payload`, got `{s}`"));
        }
        let num = |name: &str, v: &str| -> Result<u64, String> { v.parse().map_err(|e| format!("{name}: {e}")) };
        let id = |name: &str, v: &str| -> Result<u32, String> { v.parse().map_err(|e| format!("{name}: {e}")) };
        Ok(Event {
            time: num("time_ps", f[0])?,
            kind: f[1].parse()?,
            src: id("src", f[2])?,
            dst: id("dst", f[3])?,
            payload: num("payload", f[4])?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Queued {
    event: Event,
    aux: u32,
}

/// Priority queue in strict event order that refuses to go back in time.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Queued>>,
    now: Picos,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Picos {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, event: Event) -> Result<(), EngineError> {
        self.schedule_with(event, NO_EDGE)
    }

    fn schedule_with(&mut self, event: Event, aux: u32) -> Result<(), EngineError> {
        if event.time < self.now {
            return Err(EngineError::Causality { event, now: self.now });
        }
        self.heap.push(Reverse(Queued { event, aux }));
        Ok(())
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|r| &r.0.event)
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.pop_queued().map(|q| q.event)
    }

    fn pop_queued(&mut self) -> Option<Queued> {
        let q = self.heap.pop()?.0;
        self.now = q.event.time;
        Some(q)
    }
}

/// Device and link parameters shared by every neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub synapse: SynapseSpec,
    pub soma: SomaSpec,
    pub transmitter: TransmitterSpec,
    pub stdp: StdpParams,
    pub plasticity: bool,
    /// Insert a dendritic integration stage decaying with `soma.tau_mem`.
    pub dendrite: bool,
    pub delivery: DeliveryMode,
    pub latency: DeviceLatency,
    pub media: MediumTable,
    /// Weight of the external input synapse every neuron carries.
    pub stimulus_weight: f64,
    /// Latency added to stimulus timestamps, seconds.
    pub stimulus_latency: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            synapse: SynapseSpec::default(),
            soma: SomaSpec::default(),
            transmitter: TransmitterSpec::default(),
            stdp: StdpParams::default(),
            plasticity: true,
            dendrite: false,
            delivery: DeliveryMode::Deterministic,
            latency: DeviceLatency::default(),
            media: MediumTable::default(),
            stimulus_weight: 1.0,
            stimulus_latency: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, max_fan_out: usize) -> Result<(), EngineError> {
        self.synapse.validate()?;
        self.soma.validate()?;
        self.transmitter.validate(&self.soma, max_fan_out)?;
        self.stdp.validate()?;
        self.latency.validate()?;
        self.media.validate()?;
        if !(self.stimulus_weight >= 0.0 && self.stimulus_weight.is_finite()) {
            return Err(DeviceError::Invalid {
                field: "stimulus_weight",
                reason: "must be finite and >= 0".into(),
            }
            .into());
        }
        if !(self.stimulus_latency >= 0.0 && self.stimulus_latency.is_finite()) {
            return Err(DeviceError::Invalid {
                field: "stimulus_latency",
                reason: "must be finite and >= 0".into(),
            }
            .into());
        }
        Ok(())
    }
}

/// Per-edge link properties fixed before the simulation starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLink {
    pub efficiency: f64,
    /// Emission to detection, excluding synaptic processing.
    pub latency_ps: Picos,
}

/// A topology compiled against its links and device parameters.
#[derive(Debug, Clone)]
pub struct Network {
    pub config: SimConfig,
    n: usize,
    fan_outs: Vec<FanOut>,
    edge_src: Vec<u32>,
    initial_weights: Vec<f64>,
    incoming: Vec<Vec<u32>>,
    processing_ps: Picos,
    refractory_ps: Picos,
    dead_ps: Picos,
    cutoff_ps: Picos,
    tau_drive: f64,
}

impl Network {
    /// Compiles a placed topology; per-edge latency and efficiency come from
    /// the layout and are immutable afterwards.
    pub fn build(topology: &Topology, layout: &PhysicalLayout, config: SimConfig) -> Result<Self, EngineError> {
        if layout.paths.len() != topology.n_edges() || layout.positions.len() != topology.n_nodes() {
            return Err(EngineError::Mismatch(format!(
                "{} paths / {} positions for {} edges / {} nodes",
                layout.paths.len(),
                layout.positions.len(),
                topology.n_edges(),
                topology.n_nodes()
            )));
        }
        let link_delay = config.latency.transmitter + config.latency.detector;
        let links = layout
            .paths
            .iter()
            .map(|p| {
                Ok(EdgeLink {
                    efficiency: photonics::link_efficiency(p, &config.media)?,
                    latency_ps: secs_to_ps(propagation_delay(p, &config.media) + link_delay),
                })
            })
            .collect::<Result<Vec<_>, PhotonicsError>>()?;
        Self::from_links(topology, &links, config)
    }

    /// Compiles a topology with explicitly given links, one per edge.
    pub fn from_links(topology: &Topology, links: &[EdgeLink], config: SimConfig) -> Result<Self, EngineError> {
        if links.len() != topology.n_edges() {
            return Err(EngineError::Mismatch(format!(
                "{} links for {} edges",
                links.len(),
                topology.n_edges()
            )));
        }
        let n = topology.n_nodes();
        let max_fan_out = (0..n).map(|i| topology.out_degree(i)).max().unwrap_or(0);
        config.validate(max_fan_out)?;
        let mut fan_outs = Vec::with_capacity(n);
        let mut edge_src = vec![0u32; topology.n_edges()];
        for src in 0..n {
            let dests: Vec<Destination> = topology
                .out_range(src)
                .map(|e| {
                    edge_src[e] = src as u32;
                    Destination {
                        dst: topology.target(e),
                        edge: e as u32,
                        efficiency: links[e].efficiency,
                        latency_ps: links[e].latency_ps,
                    }
                })
                .collect();
            let fan = FanOut::new(config.transmitter.photons_per_pulse, dests)?;
            if config.delivery == DeliveryMode::Deterministic {
                for (d, &alloc) in fan.destinations.iter().zip(&fan.allocation) {
                    if config.delivery.delivered(alloc, d.efficiency, src as u32, 0, d.dst) == 0 {
                        return Err(EngineError::UnderBudget {
                            neuron: src as u32,
                            dst: d.dst,
                            photons: config.transmitter.photons_per_pulse,
                        });
                    }
                }
            }
            fan_outs.push(fan);
        }
        let stages = if config.dendrite { 2.0 } else { 1.0 };
        Ok(Self {
            n,
            fan_outs,
            edge_src,
            initial_weights: topology.weights().to_vec(),
            incoming: topology.incoming(),
            processing_ps: secs_to_ps(config.latency.processing * stages),
            refractory_ps: secs_to_ps(config.soma.refractory),
            dead_ps: secs_to_ps(config.synapse.dead_time),
            cutoff_ps: secs_to_ps(config.stdp.cutoff()),
            tau_drive: if config.dendrite {
                config.soma.tau_mem
            } else {
                config.synapse.tau_syn
            },
            config,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn fan_out(&self, neuron: usize) -> &FanOut {
        &self.fan_outs[neuron]
    }

    /// Emission-to-arrival latency of an edge, picoseconds.
    pub fn edge_latency_ps(&self, edge: usize) -> Picos {
        let src = self.edge_src[edge] as usize;
        let fan = &self.fan_outs[src];
        fan.destinations
            .iter()
            .find(|d| d.edge as usize == edge)
            .map(|d| d.latency_ps)
            .expect("edge belongs to its source fan-out")
    }

    pub fn processing_ps(&self) -> Picos {
        self.processing_ps
    }

    pub fn edge_source(&self, edge: usize) -> u32 {
        self.edge_src[edge]
    }
}

/// Photon bookkeeping for one emitted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub src: u32,
    pub time: Picos,
    pub emitted: u64,
    pub delivered: u64,
    pub lost: u64,
    pub throttled: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub events: u64,
    pub spikes: u64,
    pub pulses: u64,
    pub photons_emitted: u64,
    pub photons_delivered: u64,
    pub photons_lost: u64,
    /// Photons that hit a synapse inside its detector dead time.
    pub photons_ignored: u64,
    pub throttled_emissions: u64,
    pub stdp_pairings: u64,
    pub optical_energy_j: f64,
    pub end_time_ps: Picos,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub pulses: Vec<PulseRecord>,
    pub summary: SimSummary,
    /// Synaptic weights at the end of the run, indexed by edge.
    pub final_weights: Vec<f64>,
}

impl EventLog {
    /// Writes one `time_ps kind src dst payload` line per processed event.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    pub fn spike_times(&self) -> Vec<Vec<Picos>> {
        let n = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Fire)
            .map(|e| e.src as usize + 1)
            .max()
            .unwrap_or(0);
        let mut out = vec![Vec::new(); n];
        for e in self.events.iter().filter(|e| e.kind == EventKind::Fire) {
            out[e.src as usize].push(e.time);
        }
        out
    }
}

/// Reads events in the line format of [`EventLog::write_text`]. Blank lines
/// and lines starting with `#` are skipped.
pub fn read_events<R: BufRead>(r: R) -> Result<Vec<Event>, EngineError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse().map_err(|reason| EngineError::Format { line: i + 1, reason })?);
    }
    Ok(out)
}

/// Independent Poisson photon trains into every neuron's input synapse.
/// External sources are numbered `n..` so they never alias a neuron.
pub fn poisson_stimulus(n: usize, rate_hz: f64, t_end: Picos, seed: u64) -> Vec<Event> {
    if rate_hz <= 0.0 || n == 0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_hz).expect("positive rate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for dst in 0..n {
        let mut t = 0.0;
        loop {
            t += rng.sample(exp);
            let ps = secs_to_ps(t);
            if ps >= t_end {
                break;
            }
            out.push(Event::photon(ps, n as u32, dst as u32, 1));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy)]
struct NeuronState {
    drive: f64,
    drive_time: Picos,
    refractory_until: Picos,
    last_spike: Option<Picos>,
    pending_fire: bool,
    input_last_photon: Option<Picos>,
    tx: TransmitterState,
}

impl Default for NeuronState {
    fn default() -> Self {
        Self {
            drive: 0.0,
            drive_time: 0,
            refractory_until: 0,
            last_spike: None,
            pending_fire: false,
            input_last_photon: None,
            tx: TransmitterState::default(),
        }
    }
}

/// An in-progress simulation over a compiled [`Network`].
pub struct Simulation<'n> {
    net: &'n Network,
    queue: EventQueue,
    neurons: Vec<NeuronState>,
    weights: Vec<f64>,
    edge_last_photon: Vec<Option<Picos>>,
    log: EventLog,
}

impl<'n> Simulation<'n> {
    pub fn new(net: &'n Network, stimulus: &[Event]) -> Result<Self, EngineError> {
        let mut queue = EventQueue::new();
        let shift = secs_to_ps(net.config.stimulus_latency);
        for e in stimulus {
            if e.kind != EventKind::PhotonArrival {
                return Err(EngineError::Stimulus(format!("{e}: only photon_arrival events may be injected")));
            }
            if e.dst as usize >= net.n {
                return Err(EngineError::Stimulus(format!("{e}: destination outside 0..{}", net.n)));
            }
            queue.schedule_with(
                Event {
                    time: e.time + shift,
                    ..*e
                },
                NO_EDGE,
            )?;
        }
        Ok(Self {
            net,
            queue,
            neurons: vec![NeuronState::default(); net.n],
            weights: net.initial_weights.clone(),
            edge_last_photon: vec![None; net.initial_weights.len()],
            log: EventLog::default(),
        })
    }

    pub fn now(&self) -> Picos {
        self.queue.now()
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn next_time(&self) -> Option<Picos> {
        self.queue.peek().map(|e| e.time)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Processes exactly one event; `None` once the queue is drained.
    pub fn step(&mut self) -> Option<Event> {
        let q = self.queue.pop_queued()?;
        let event = match q.event.kind {
            EventKind::PhotonArrival => self.on_photon(q.event, q.aux),
            EventKind::Fire => self.on_fire(q.event),
            EventKind::Emission => self.on_emission(q.event, q.aux),
            EventKind::StdpPairing => self.on_pairing(q.event),
        };
        if let Some(e) = event {
            self.log.events.push(e);
            self.log.summary.events += 1;
            self.log.summary.end_time_ps = e.time;
        }
        Some(q.event)
    }

    /// Processes events strictly before `t_end`.
    pub fn run_until(&mut self, t_end: Picos) {
        while self.next_time().is_some_and(|t| t < t_end) {
            self.step();
        }
    }

    pub fn into_log(mut self) -> EventLog {
        let s = &mut self.log.summary;
        s.optical_energy_j =
            photonics::pulse_energy(s.photons_emitted, self.net.config.transmitter.wavelength).unwrap_or(0.0);
        self.log.final_weights = self.weights;
        self.log
    }

    fn schedule(&mut self, event: Event, aux: u32) {
        self.queue
            .schedule_with(event, aux)
            .expect("engine schedules only at or after the current time");
    }

    fn on_photon(&mut self, e: Event, edge: u32) -> Option<Event> {
        let net = self.net;
        let t = e.time;
        let dst = e.dst as usize;
        let neuron = &mut self.neurons[dst];
        let last = if edge == NO_EDGE {
            &mut neuron.input_last_photon
        } else {
            &mut self.edge_last_photon[edge as usize]
        };
        if last.is_some_and(|lp| t - lp < net.dead_ps) {
            self.log.summary.photons_ignored += e.payload;
            return Some(e);
        }
        *last = Some(t);
        let increment = if edge == NO_EDGE {
            net.config.stimulus_weight
        } else {
            self.weights[edge as usize]
        };
        let dt = ps_to_secs(t - neuron.drive_time);
        neuron.drive = neuron.drive * (-dt / net.tau_drive).exp() + increment;
        neuron.drive_time = t;
        let fire_at = t + net.processing_ps;
        if !neuron.pending_fire && fire_at >= neuron.refractory_until && neuron.drive >= net.config.soma.threshold {
            neuron.pending_fire = true;
            let fire = Event {
                time: fire_at,
                kind: EventKind::Fire,
                src: e.dst,
                dst: e.dst,
                payload: 0,
            };
            self.schedule(fire, NO_EDGE);
        }
        Some(e)
    }

    fn on_fire(&mut self, e: Event) -> Option<Event> {
        let net = self.net;
        let t = e.time;
        let neuron = &mut self.neurons[e.src as usize];
        neuron.pending_fire = false;
        neuron.drive = 0.0;
        neuron.drive_time = t;
        neuron.refractory_until = t + net.refractory_ps;
        neuron.last_spike = Some(t);
        self.log.summary.spikes += 1;
        self.schedule(
            Event {
                kind: EventKind::Emission,
                payload: net.config.transmitter.photons_per_pulse,
                ..e
            },
            0,
        );
        if net.config.plasticity {
            self.schedule(
                Event {
                    kind: EventKind::StdpPairing,
                    payload: 0,
                    ..e
                },
                NO_EDGE,
            );
        }
        Some(e)
    }

    fn on_emission(&mut self, e: Event, throttled: u32) -> Option<Event> {
        let net = self.net;
        let src = e.src as usize;
        let spec = &net.config.transmitter;
        let state = self.neurons[src].tx;
        if let Some(last) = state.last_emission {
            let earliest = last.saturating_add(spec.min_interval_ps());
            if e.time < earliest {
                self.log.summary.throttled_emissions += 1;
                self.schedule(Event { time: earliest, ..e }, 1);
                return None;
            }
        }
        let (state, pulse) =
            devices::transmitter_emit(spec, state, e.src, &net.fan_outs[src], e.time, &net.config.delivery);
        self.neurons[src].tx = state;
        for d in pulse.deliveries.iter().filter(|d| d.delivered > 0) {
            self.schedule(Event::photon(d.arrival, e.src, d.dst, d.delivered), d.edge);
        }
        let (delivered, lost) = (pulse.delivered(), pulse.lost());
        let s = &mut self.log.summary;
        s.pulses += 1;
        s.photons_emitted += pulse.photons;
        s.photons_delivered += delivered;
        s.photons_lost += lost;
        self.log.pulses.push(PulseRecord {
            src: e.src,
            time: pulse.emitted_at,
            emitted: pulse.photons,
            delivered,
            lost,
            throttled: throttled != 0,
        });
        Some(e)
    }

    fn on_pairing(&mut self, e: Event) -> Option<Event> {
        let net = self.net;
        let t = e.time;
        let j = e.src as usize;
        let params = &net.config.stdp;
        let bounds = net.config.synapse.bounds();
        let mut applied = 0u64;
        // j as postsynaptic partner: pair with each presynaptic neuron's last spike.
        for &edge in &net.incoming[j] {
            let pre = net.edge_src[edge as usize] as usize;
            if let Some(tp) = self.neurons[pre].last_spike {
                if t - tp <= net.cutoff_ps {
                    let w = &mut self.weights[edge as usize];
                    *w = devices::stdp_update(*w, ps_to_secs(t - tp), params, bounds);
                    applied += 1;
                }
            }
        }
        // j as presynaptic partner: depress toward postsynaptic spikes that
        // strictly precede this one; equal times were potentiated above.
        for d in &net.fan_outs[j].destinations {
            if let Some(tq) = self.neurons[d.dst as usize].last_spike {
                if tq < t && t - tq <= net.cutoff_ps {
                    let w = &mut self.weights[d.edge as usize];
                    *w = devices::stdp_update(*w, -ps_to_secs(t - tq), params, bounds);
                    applied += 1;
                }
            }
        }
        self.log.summary.stdp_pairings += applied;
        Some(Event { payload: applied, ..e })
    }
}

/// Runs `stimulus` through `net` until the queue drains or `t_end` is reached.
pub fn run(net: &Network, stimulus: &[Event], t_end: Picos) -> Result<EventLog, EngineError> {
    if let Some(late) = stimulus.iter().find(|e| e.time >= t_end) {
        return Err(EngineError::Stimulus(format!("{late}: at or after t_end = {t_end} ps")));
    }
    let mut sim = Simulation::new(net, stimulus)?;
    sim.run_until(t_end);
    Ok(sim.into_log())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(time: Picos, kind: EventKind, src: u32, dst: u32) -> Event {
        Event {
            time,
            kind,
            src,
            dst,
            payload: 0,
        }
    }

    #[test]
    fn queue_orders_ties_by_kind_then_ids() {
        let mut q = EventQueue::new();
        q.schedule(ev(5, EventKind::Emission, 0, 0)).unwrap();
        q.schedule(ev(5, EventKind::Fire, 2, 2)).unwrap();
        q.schedule(ev(5, EventKind::Fire, 1, 9)).unwrap();
        q.schedule(ev(5, EventKind::PhotonArrival, 3, 1)).unwrap();
        q.schedule(ev(5, EventKind::PhotonArrival, 3, 0)).unwrap();
        q.schedule(ev(4, EventKind::StdpPairing, 0, 0)).unwrap();
        let order: Vec<(EventKind, u32, u32)> = std::iter::from_fn(|| q.pop()).map(|e| (e.kind, e.src, e.dst)).collect();
        assert_eq!(
            order,
            vec![
                (EventKind::StdpPairing, 0, 0),
                (EventKind::PhotonArrival, 3, 0),
                (EventKind::PhotonArrival, 3, 1),
                (EventKind::Fire, 1, 9),
                (EventKind::Fire, 2, 2),
                (EventKind::Emission, 0, 0),
            ]
        );
    }

    #[test]
    fn queue_single_event_and_causality() {
        let mut q = EventQueue::new();
        let e = ev(1000, EventKind::Fire, 0, 0);
        q.schedule(e).unwrap();
        assert_eq!(q.peek(), Some(&e));
        assert_eq!(q.pop(), Some(e));
        assert!(q.is_empty());
        match q.schedule(ev(999, EventKind::Fire, 0, 0)) {
            Err(EngineError::Causality { event, now }) => {
                assert_eq!(event.time, 999);
                assert_eq!(now, 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(q.schedule(ev(1000, EventKind::Fire, 0, 0)).is_ok());
    }

    #[test]
    fn event_text_round_trip() {
        let e = Event::photon(10_050, 3, 7, 12);
        assert_eq!(e.to_string(), "10050 photon_arrival 3 7 12");
        assert_eq!("10050 photon_arrival 3 7 12".parse::<Event>().unwrap(), e);
        assert!("1 fired 0 0 0".parse::<Event>().is_err());
        let parsed = read_events("# stimulus\n\n5 photon_arrival 9 0 1\n".as_bytes()).unwrap();
        assert_eq!(parsed, vec![Event::photon(5, 9, 0, 1)]);
        assert!(matches!(read_events("5 photon_arrival 9\n".as_bytes()), Err(EngineError::Format { line: 1, .. })));
    }

    #[test]
    fn poisson_stimulus_is_seeded_and_bounded() {
        let a = poisson_stimulus(10, 1e8, 1_000_000, 3);
        assert_eq!(a, poisson_stimulus(10, 1e8, 1_000_000, 3));
        assert!(a.iter().all(|e| e.time < 1_000_000 && e.src == 10));
        // 10 neurons * 100 MHz * 1 us = 1000 expected
        assert!((850..1150).contains(&a.len()), "{}", a.len());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}

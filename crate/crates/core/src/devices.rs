//! Behavioral models of loop-neuron components.
//!
//! Synapses, the optional dendrite stage and the soma are leaky integrators
//! with exponential decay. A synapse registers a single-photon detection as an
//! additive increment equal to its weight, then ignores further photons for a
//! detector dead time. The soma fires when the summed (decayed) synaptic drive
//! reaches threshold and then stays refractory for a fixed window.
//!
//! Every transition here is a pure function of its inputs; the engine owns
//! the mutable per-neuron state and serializes updates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::photonics::{self, DeliveryMode};
use crate::time::Picos;

/// Processing latency of one Josephson stage (synapse or dendrite).
pub const STAGE_LATENCY_S: f64 = 50e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("non-monotonic timestamp: t = {t:e} s precedes last update {last_update:e} s")]
    Ordering { t: f64, last_update: f64 },
    #[error("invalid device parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> DeviceError {
    DeviceError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynapseSpec {
    /// Signal increment per detected photon.
    pub weight: f64,
    /// Decay constant of the integration loop, seconds.
    pub tau_syn: f64,
    /// Detector recovery time, seconds.
    pub dead_time: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for SynapseSpec {
    fn default() -> Self {
        Self {
            weight: 0.5,
            tau_syn: 100e-9,
            dead_time: 50e-9,
            w_min: 0.0,
            w_max: 1.0,
        }
    }
}

impl SynapseSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.tau_syn > 0.0 && self.tau_syn.is_finite()) {
            return Err(invalid("tau_syn", "must be finite and > 0"));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(invalid("dead_time", "must be finite and >= 0"));
        }
        if !(self.w_min.is_finite() && self.w_max.is_finite() && self.w_min <= self.w_max) {
            return Err(invalid("w_min", "requires finite w_min <= w_max"));
        }
        if !(self.w_min..=self.w_max).contains(&self.weight) {
            return Err(invalid("weight", "must lie within [w_min, w_max]"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> WeightBounds {
        WeightBounds {
            min: self.w_min,
            max: self.w_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SomaSpec {
    pub threshold: f64,
    /// Seconds.
    pub refractory: f64,
    /// Decay constant of the dendritic integration loop, seconds. Only used
    /// when the dendrite stage is enabled.
    pub tau_mem: f64,
}

impl Default for SomaSpec {
    fn default() -> Self {
        Self {
            threshold: 1.0,
            refractory: 50e-9,
            tau_mem: 100e-9,
        }
    }
}

impl SomaSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(invalid("threshold", "must be finite and > 0"));
        }
        if !(self.refractory >= 0.0 && self.refractory.is_finite()) {
            return Err(invalid("refractory", "must be finite and >= 0"));
        }
        if !(self.tau_mem > 0.0 && self.tau_mem.is_finite()) {
            return Err(invalid("tau_mem", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmitterSpec {
    pub photons_per_pulse: u64,
    /// Maximum pulse rate, Hz.
    pub max_rate: f64,
    /// Emission wavelength, meters.
    pub wavelength: f64,
}

impl Default for TransmitterSpec {
    fn default() -> Self {
        Self {
            photons_per_pulse: 10_000,
            max_rate: 20e6,
            wavelength: 1550e-9,
        }
    }
}

impl TransmitterSpec {
    /// Checks the transmitter against the soma that drives it and the number
    /// of destinations it must reach.
    pub fn validate(&self, soma: &SomaSpec, fan_out: usize) -> Result<(), DeviceError> {
        if !(self.max_rate > 0.0 && self.max_rate.is_finite()) {
            return Err(invalid("max_rate", "must be finite and > 0"));
        }
        if soma.refractory > 0.0 && self.max_rate * soma.refractory > 1.0 + 1e-12 {
            return Err(invalid(
                "max_rate",
                format!(
                    "{} Hz exceeds 1/refractory = {} Hz",
                    self.max_rate,
                    1.0 / soma.refractory
                ),
            ));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(invalid("wavelength", "must be finite and > 0"));
        }
        if (self.photons_per_pulse as usize) < fan_out {
            return Err(invalid(
                "photons_per_pulse",
                format!(
                    "{} photons cannot reach {fan_out} destinations (one photon per synapse minimum)",
                    self.photons_per_pulse
                ),
            ));
        }
        Ok(())
    }

    /// Minimum spacing between emissions in picoseconds.
    pub fn min_interval_ps(&self) -> Picos {
        (1e12 / self.max_rate).ceil() as Picos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    /// Seconds.
    pub tau_plus: f64,
    /// Seconds.
    pub tau_minus: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self::for_tau_syn(SynapseSpec::default().tau_syn)
    }
}

impl StdpParams {
    /// Default window: amplitudes 0.01, time constants ten synaptic decay times.
    pub fn for_tau_syn(tau_syn: f64) -> Self {
        Self {
            a_plus: 0.01,
            a_minus: 0.01,
            tau_plus: 10.0 * tau_syn,
            tau_minus: 10.0 * tau_syn,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        for (field, v) in [
            ("a_plus", self.a_plus),
            ("a_minus", self.a_minus),
            ("tau_plus", self.tau_plus),
            ("tau_minus", self.tau_minus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Pairings further apart than this are ignored by the engine.
    pub fn cutoff(&self) -> f64 {
        5.0 * self.tau_plus.max(self.tau_minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBounds {
    pub min: f64,
    pub max: f64,
}

/// Integration-loop state of one synapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseState {
    /// Signal value at `last_update`.
    pub signal: f64,
    pub last_update: f64,
    /// Time of the last detected photon; `-inf` before the first.
    pub last_photon: f64,
    pub weight: f64,
}

impl SynapseState {
    pub fn new(weight: f64) -> Self {
        Self {
            signal: 0.0,
            last_update: 0.0,
            last_photon: f64::NEG_INFINITY,
            weight,
        }
    }
}

fn check_order(t: f64, last_update: f64) -> Result<(), DeviceError> {
    if t < last_update || t.is_nan() {
        Err(DeviceError::Ordering { t, last_update })
    } else {
        Ok(())
    }
}

/// Signal of `state` decayed to time `t`.
pub fn evaluate_signal(state: &SynapseState, spec: &SynapseSpec, t: f64) -> Result<f64, DeviceError> {
    check_order(t, state.last_update)?;
    Ok(state.signal * (-(t - state.last_update) / spec.tau_syn).exp())
}

/// Applies a photon arriving at `t`. A photon inside the dead time is not
/// detected: the signal is only decayed to `t`.
pub fn synapse_on_photon(
    state: &SynapseState,
    spec: &SynapseSpec,
    t: f64,
) -> Result<SynapseState, DeviceError> {
    let decayed = evaluate_signal(state, spec, t)?;
    if t - state.last_photon < spec.dead_time {
        return Ok(SynapseState {
            signal: decayed,
            last_update: t,
            ..*state
        });
    }
    Ok(SynapseState {
        signal: decayed + state.weight,
        last_update: t,
        last_photon: t,
        weight: state.weight,
    })
}

/// Decision to fire produced by [`soma_integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireDecision {
    pub time: f64,
    /// Drive that crossed threshold.
    pub drive: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SomaState {
    pub last_fire: Option<f64>,
    pub refractory_until: f64,
}

impl Default for SomaState {
    fn default() -> Self {
        Self {
            last_fire: None,
            refractory_until: f64::NEG_INFINITY,
        }
    }
}

impl SomaState {
    pub fn is_refractory(&self, t: f64) -> bool {
        t < self.refractory_until
    }
}

/// Sums the synaptic signals (already decayed to `t`) and fires on reaching
/// threshold. On a fire the soma enters its refractory window; the caller
/// resets the contributing integration loops to zero.
pub fn soma_integrate<I>(state: &mut SomaState, spec: &SomaSpec, inputs: I, t: f64) -> Option<FireDecision>
where
    I: IntoIterator<Item = f64>,
{
    if state.is_refractory(t) {
        return None;
    }
    let drive: f64 = inputs.into_iter().sum();
    if drive < spec.threshold {
        return None;
    }
    state.last_fire = Some(t);
    state.refractory_until = t + spec.refractory;
    Some(FireDecision { time: t, drive })
}

/// Pair-based exponential STDP. `dt` is post minus pre spike time; `dt == 0`
/// takes the potentiation branch.
pub fn stdp_update(weight: f64, dt: f64, params: &StdpParams, bounds: WeightBounds) -> f64 {
    weight_delta(dt, params)
        .map(|dw| (weight + dw).clamp(bounds.min, bounds.max))
        .unwrap_or(weight)
}

/// Unclipped weight change for a pairing; `None` for NaN.
pub fn weight_delta(dt: f64, params: &StdpParams) -> Option<f64> {
    if dt.is_nan() {
        None
    } else if dt >= 0.0 {
        Some(params.a_plus * (-dt / params.tau_plus).exp())
    } else {
        Some(-params.a_minus * (dt / params.tau_minus).exp())
    }
}

/// One destination reached by a transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Destination {
    pub dst: u32,
    /// Index of the edge in the owning topology.
    pub edge: u32,
    pub efficiency: f64,
    /// Emission-to-detection latency, excluding the synaptic processing stage.
    pub latency_ps: Picos,
}

/// Static fan-out of one transmitter with its photon allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct FanOut {
    pub destinations: Vec<Destination>,
    pub allocation: Vec<u64>,
}

impl FanOut {
    /// Splits `photons_per_pulse` across `destinations` in proportion to each
    /// path's photon budget.
    pub fn new(photons_per_pulse: u64, destinations: Vec<Destination>) -> Result<Self, photonics::PhotonicsError> {
        let effs: Vec<f64> = destinations.iter().map(|d| d.efficiency).collect();
        let allocation = photonics::allocate_photons(photons_per_pulse, &effs)?;
        Ok(Self {
            destinations,
            allocation,
        })
    }

    pub fn len(&self) -> usize {
        self.destinations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.destinations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransmitterState {
    pub last_emission: Option<Picos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhotonDelivery {
    pub dst: u32,
    pub edge: u32,
    pub arrival: Picos,
    pub allocated: u64,
    pub delivered: u64,
}

impl PhotonDelivery {
    pub fn lost(&self) -> u64 {
        self.allocated - self.delivered
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulseEvent {
    pub src: u32,
    pub requested: Picos,
    pub emitted_at: Picos,
    pub throttled: bool,
    pub photons: u64,
    pub deliveries: Vec<PhotonDelivery>,
}

impl PulseEvent {
    pub fn delivered(&self) -> u64 {
        self.deliveries.iter().map(|d| d.delivered).sum()
    }

    pub fn lost(&self) -> u64 {
        self.deliveries.iter().map(PhotonDelivery::lost).sum::<u64>() + self.unallocated()
    }

    /// Photons not assigned to any destination (only when fan-out is empty).
    pub fn unallocated(&self) -> u64 {
        self.photons - self.deliveries.iter().map(|d| d.allocated).sum::<u64>()
    }
}

/// Emits one pulse from `src`. A request closer than `1/max_rate` to the
/// previous emission is deferred to the earliest legal time and flagged as
/// throttled.
pub fn transmitter_emit(
    spec: &TransmitterSpec,
    state: TransmitterState,
    src: u32,
    fan_out: &FanOut,
    t: Picos,
    mode: &DeliveryMode,
) -> (TransmitterState, PulseEvent) {
    let earliest = state
        .last_emission
        .map_or(0, |last| last.saturating_add(spec.min_interval_ps()));
    let emitted_at = t.max(earliest);
    let deliveries = fan_out
        .destinations
        .iter()
        .zip(&fan_out.allocation)
        .map(|(d, &allocated)| PhotonDelivery {
            dst: d.dst,
            edge: d.edge,
            arrival: emitted_at + d.latency_ps,
            allocated,
            delivered: mode.delivered(allocated, d.efficiency, src, emitted_at, d.dst),
        })
        .collect();
    let pulse = PulseEvent {
        src,
        requested: t,
        emitted_at,
        throttled: emitted_at > t,
        photons: spec.photons_per_pulse,
        deliveries,
    };
    (
        TransmitterState {
            last_emission: Some(emitted_at),
        },
        pulse,
    )
}

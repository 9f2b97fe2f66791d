//! Photon budgets, link losses, pulse energy and power accounting.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Picos;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotonicsError {
    #[error("unknown link medium `{0}`")]
    UnknownMedium(String),
    #[error("invalid photonics parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("link {index} has zero efficiency; no photon budget can reach it")]
    InfeasibleLink { index: usize },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> PhotonicsError {
    PhotonicsError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    Waveguide,
    FreeSpaceVertical,
    Fiber,
    EdgeCoupler,
}

impl Medium {
    pub const ALL: [Medium; 4] = [
        Medium::Waveguide,
        Medium::FreeSpaceVertical,
        Medium::Fiber,
        Medium::EdgeCoupler,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Medium::Waveguide => "waveguide",
            Medium::FreeSpaceVertical => "free_space_vertical",
            Medium::Fiber => "fiber",
            Medium::EdgeCoupler => "edge_coupler",
        }
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Medium {
    type Err = PhotonicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Medium::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| PhotonicsError::UnknownMedium(s.to_string()))
    }
}

/// Loss and propagation properties of one medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumProperties {
    pub loss_db_per_m: f64,
    /// Fixed loss per segment of this medium, dB.
    pub insertion_db: f64,
    pub group_index: f64,
}

/// Per-medium properties plus the per-tap loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumTable {
    pub waveguide: MediumProperties,
    pub free_space_vertical: MediumProperties,
    pub fiber: MediumProperties,
    pub edge_coupler: MediumProperties,
    pub tap_db: f64,
}

impl Default for MediumTable {
    fn default() -> Self {
        Self {
            waveguide: MediumProperties {
                loss_db_per_m: 1.0,
                insertion_db: 0.0,
                group_index: 2.0,
            },
            free_space_vertical: MediumProperties {
                loss_db_per_m: 0.0,
                insertion_db: 0.0,
                group_index: 1.0,
            },
            fiber: MediumProperties {
                loss_db_per_m: 0.3e-3,
                insertion_db: 0.0,
                group_index: 1.5,
            },
            edge_coupler: MediumProperties {
                loss_db_per_m: 0.0,
                insertion_db: 1.0,
                group_index: 2.0,
            },
            tap_db: 0.1,
        }
    }
}

impl MediumTable {
    /// A table with no losses anywhere; group indices keep their defaults.
    pub fn lossless() -> Self {
        let mut t = Self::default();
        for m in Medium::ALL {
            let p = t.get_mut(m);
            p.loss_db_per_m = 0.0;
            p.insertion_db = 0.0;
        }
        t.tap_db = 0.0;
        t
    }

    pub fn get(&self, medium: Medium) -> &MediumProperties {
        match medium {
            Medium::Waveguide => &self.waveguide,
            Medium::FreeSpaceVertical => &self.free_space_vertical,
            Medium::Fiber => &self.fiber,
            Medium::EdgeCoupler => &self.edge_coupler,
        }
    }

    pub fn get_mut(&mut self, medium: Medium) -> &mut MediumProperties {
        match medium {
            Medium::Waveguide => &mut self.waveguide,
            Medium::FreeSpaceVertical => &mut self.free_space_vertical,
            Medium::Fiber => &mut self.fiber,
            Medium::EdgeCoupler => &mut self.edge_coupler,
        }
    }

    pub fn validate(&self) -> Result<(), PhotonicsError> {
        for m in Medium::ALL {
            let p = self.get(m);
            if !(p.loss_db_per_m >= 0.0 && p.loss_db_per_m.is_finite()) {
                return Err(invalid("loss_db_per_m", format!("{m}: must be finite and >= 0")));
            }
            if !(p.insertion_db >= 0.0 && p.insertion_db.is_finite()) {
                return Err(invalid("insertion_db", format!("{m}: must be finite and >= 0")));
            }
            if !(p.group_index >= 1.0 && p.group_index.is_finite()) {
                return Err(invalid("group_index", format!("{m}: must be finite and >= 1")));
            }
        }
        if !(self.tap_db >= 0.0 && self.tap_db.is_finite()) {
            return Err(invalid("tap_db", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub medium: Medium,
    /// Meters.
    pub length: f64,
    pub taps: u32,
}

impl Segment {
    pub fn new(medium: Medium, length: f64, taps: u32) -> Self {
        Self { medium, length, taps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPath {
    pub segments: Vec<Segment>,
    pub detector_efficiency: f64,
    /// Light production efficiency. Reported separately, never folded into
    /// [`link_efficiency`].
    pub source_efficiency: f64,
}

impl Default for LinkPath {
    fn default() -> Self {
        Self {
            segments: Vec::new(),
            detector_efficiency: 1.0,
            source_efficiency: 1.0,
        }
    }
}

impl LinkPath {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self {
            segments,
            ..Self::default()
        }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Concatenation of two paths (detector of `other`, source of `self`).
    pub fn concat(&self, other: &LinkPath) -> LinkPath {
        LinkPath {
            segments: self.segments.iter().chain(&other.segments).copied().collect(),
            detector_efficiency: other.detector_efficiency,
            source_efficiency: self.source_efficiency,
        }
    }

    pub fn validate(&self) -> Result<(), PhotonicsError> {
        for s in &self.segments {
            if !(s.length >= 0.0 && s.length.is_finite()) {
                return Err(invalid("length", format!("segment length {} must be finite and >= 0", s.length)));
            }
        }
        for (field, v) in [
            ("detector_efficiency", self.detector_efficiency),
            ("source_efficiency", self.source_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(field, format!("{v} must lie in (0, 1]")));
            }
        }
        Ok(())
    }
}

fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Total loss in dB along the path, excluding the detector.
pub fn path_loss_db(path: &LinkPath, table: &MediumTable) -> f64 {
    path.segments
        .iter()
        .map(|s| {
            let p = table.get(s.medium);
            s.length * p.loss_db_per_m + p.insertion_db + f64::from(s.taps) * table.tap_db
        })
        .sum()
}

/// End-to-end transmission of a path: propagation, insertion and tap losses
/// times detector efficiency. Source efficiency is excluded.
pub fn link_efficiency(path: &LinkPath, table: &MediumTable) -> Result<f64, PhotonicsError> {
    path.validate()?;
    Ok(db_to_transmission(path_loss_db(path, table)) * path.detector_efficiency)
}

// Guards ceil() against sums like 1000.0000000000001 produced by dB round trips.
const CEIL_SLACK: f64 = 1e-9;

fn ceil_count(x: f64) -> u64 {
    (x * (1.0 - CEIL_SLACK)).ceil() as u64
}

/// Photons a neuron must emit so each destination receives `safety` photons
/// in expectation.
pub fn required_photons_per_firing(
    destinations: &[LinkPath],
    safety: f64,
    table: &MediumTable,
) -> Result<u64, PhotonicsError> {
    let effs = destinations
        .iter()
        .map(|p| link_efficiency(p, table))
        .collect::<Result<Vec<_>, _>>()?;
    required_photons_for_efficiencies(&effs, safety)
}

/// As [`required_photons_per_firing`] for precomputed efficiencies.
pub fn required_photons_for_efficiencies(effs: &[f64], safety: f64) -> Result<u64, PhotonicsError> {
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(invalid("safety", "must be finite and >= 1"));
    }
    let mut total = 0.0;
    for (index, &eff) in effs.iter().enumerate() {
        if !(eff > 0.0) {
            return Err(PhotonicsError::InfeasibleLink { index });
        }
        total += safety / eff;
    }
    Ok(ceil_count(total))
}

/// Splits `total` photons across paths in proportion to `1/efficiency`
/// using largest-remainder rounding, so the parts sum to `total` exactly.
/// Ties in the remainder go to the lower index.
pub fn allocate_photons(total: u64, effs: &[f64]) -> Result<Vec<u64>, PhotonicsError> {
    if effs.is_empty() {
        return Ok(Vec::new());
    }
    let mut budget_sum = 0.0;
    for (index, &eff) in effs.iter().enumerate() {
        if !(eff > 0.0) {
            return Err(PhotonicsError::InfeasibleLink { index });
        }
        budget_sum += 1.0 / eff;
    }
    let mut alloc = Vec::with_capacity(effs.len());
    let mut remainders = Vec::with_capacity(effs.len());
    let mut assigned = 0u64;
    for (i, &eff) in effs.iter().enumerate() {
        let share = total as f64 * (1.0 / eff) / budget_sum;
        let base = (share.floor() as u64).min(total - assigned);
        assigned += base;
        alloc.push(base);
        remainders.push((share - base as f64, i));
    }
    let mut left = total - assigned;
    if left > 0 {
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in remainders.iter().cycle() {
            if left == 0 {
                break;
            }
            alloc[i] += 1;
            left -= 1;
        }
    }
    Ok(alloc)
}

/// Energy of `photons` at `wavelength` meters, joules.
pub fn pulse_energy(photons: u64, wavelength: f64) -> Result<f64, PhotonicsError> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(invalid("wavelength", "must be finite and > 0"));
    }
    Ok(photons as f64 * PLANCK * SPEED_OF_LIGHT / wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    /// Light production efficiency.
    pub eta: f64,
    pub photons_per_pulse: u64,
    /// Meters.
    pub wavelength: f64,
    /// Mean firing rate, Hz.
    pub f_avg: f64,
    pub cooling_factor: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            eta: 1e-4,
            photons_per_pulse: 10_000,
            wavelength: 1550e-9,
            f_avg: 100e3,
            cooling_factor: 1000.0,
        }
    }
}

impl PowerModel {
    pub fn validate(&self, max_rate: Option<f64>) -> Result<(), PhotonicsError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", "must lie in (0, 1]"));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(invalid("wavelength", "must be finite and > 0"));
        }
        if !(self.f_avg >= 0.0 && self.f_avg.is_finite()) {
            return Err(invalid("f_avg", "must be finite and >= 0"));
        }
        if let Some(max) = max_rate {
            if self.f_avg > max {
                return Err(invalid("f_avg", format!("{} Hz exceeds transmitter max_rate {max} Hz", self.f_avg)));
            }
        }
        if !(self.cooling_factor >= 1.0 && self.cooling_factor.is_finite()) {
            return Err(invalid("cooling_factor", "must be finite and >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub per_wafer_w: f64,
    pub device_w: f64,
    pub wallplug_w: f64,
}

/// Optical power drawn by `wafers` wafers of `neurons_per_wafer` neurons.
pub fn power_report(wafers: u64, neurons_per_wafer: u64, model: &PowerModel) -> Result<PowerReport, PhotonicsError> {
    if !(model.eta > 0.0) {
        return Err(invalid("eta", "must be > 0"));
    }
    let energy = pulse_energy(model.photons_per_pulse, model.wavelength)?;
    let per_wafer_w = neurons_per_wafer as f64 * model.f_avg * energy / model.eta;
    let device_w = per_wafer_w * wafers as f64;
    Ok(PowerReport {
        per_wafer_w,
        device_w,
        wallplug_w: device_w * model.cooling_factor,
    })
}

/// How allocated photons turn into detected photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DeliveryMode {
    /// `floor(allocated * efficiency)` arrive.
    #[default]
    Deterministic,
    /// Each photon arrives independently with probability `efficiency`.
    Stochastic { seed: u64 },
}

impl DeliveryMode {
    pub fn delivered(&self, allocated: u64, efficiency: f64, src: u32, emitted_at: Picos, dst: u32) -> u64 {
        match *self {
            DeliveryMode::Deterministic => {
                let expected = allocated as f64 * efficiency;
                ((expected + CEIL_SLACK * expected.max(1.0)).floor() as u64).min(allocated)
            }
            DeliveryMode::Stochastic { seed } => {
                if allocated == 0 {
                    return 0;
                }
                if efficiency >= 1.0 {
                    return allocated;
                }
                let mut rng = delivery_rng(seed, src, emitted_at, dst);
                Binomial::new(allocated, efficiency)
                    .map(|b| b.sample(&mut rng))
                    .unwrap_or(0)
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based generator keyed by (seed, source, emission time, destination);
/// the draw for a delivery never depends on processing order.
pub fn delivery_rng(seed: u64, src: u32, emitted_at: Picos, dst: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed),
        splitmix64(seed ^ u64::from(src).rotate_left(32)),
        splitmix64(emitted_at),
        splitmix64(u64::from(dst) ^ 0xd1b5_4a32_d192_ed03),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

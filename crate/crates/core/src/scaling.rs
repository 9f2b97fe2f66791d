//! System-level sizing: the scaling report and the two figure tables
//! (degree vs. network size, wafer capacity vs. degree).

use serde::{Deserialize, Serialize};

use crate::layout::{
    self, edge_coupler_count, fiber_tract_capacity, max_span, system_volume, vertical_link_count, wafer_capacity,
    wafers_required, ColumnSpec, LayoutError, WaferSpec,
};
use crate::photonics::{power_report, PhotonicsError, PowerModel};
use crate::topology::required_degree;

/// Path lengths tabulated by [`fig2a_rows`].
pub const FIG2A_PATH_LENGTHS: [u32; 4] = [2, 3, 4, 5];
/// Waveguide plane counts tabulated by [`fig2b_rows`].
pub const FIG2B_PLANES: [u32; 5] = [1, 2, 4, 6, 8];

/// 1, 2, 5 steps per decade from `10^lo` to `10^hi` inclusive.
pub fn decade_grid(lo: u32, hi: u32) -> Vec<u64> {
    let mut out = Vec::new();
    for d in lo..=hi {
        let base = 10u64.pow(d);
        out.push(base);
        if d < hi {
            out.push(2 * base);
            out.push(5 * base);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fig2aRow {
    #[serde(rename = "L")]
    pub path_length: u32,
    #[serde(rename = "N_tot")]
    pub n_total: u64,
    pub k: u64,
}

/// Required out-degree for each path length and network size.
pub fn fig2a_rows(n_totals: &[u64]) -> Vec<Fig2aRow> {
    FIG2A_PATH_LENGTHS
        .iter()
        .flat_map(|&l| {
            n_totals.iter().map(move |&n| Fig2aRow {
                path_length: l,
                n_total: n,
                k: required_degree(n, f64::from(l)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fig2bRow {
    pub k: u64,
    pub p: u32,
    #[serde(rename = "N_300")]
    pub n_300: u64,
}

/// Wire-limited wafer capacity for each plane count and degree.
pub fn fig2b_rows(wafer: &WaferSpec, degrees: &[u64]) -> Vec<Fig2bRow> {
    FIG2B_PLANES
        .iter()
        .flat_map(|&p| {
            degrees.iter().map(move |&k| Fig2bRow {
                k,
                p,
                n_300: wafer_capacity(&WaferSpec {
                    planes: p,
                    k_in: k as u32,
                    ..*wafer
                }),
            })
        })
        .collect()
}

/// Size of the system being assessed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSpec {
    pub neurons: u64,
    pub neurons_per_wafer: u64,
    /// Calibrated to the two-meter reference cube when unset.
    pub white_matter_coefficient: Option<f64>,
    /// Oscillation frequency bounding the communication span, Hz.
    pub f_osc: f64,
    /// Signal velocity, m/s.
    pub velocity: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            neurons: 10_000_000_000,
            neurons_per_wafer: 1_000_000,
            white_matter_coefficient: None,
            f_osc: 20e6,
            velocity: 2e8,
        }
    }
}

impl SystemSpec {
    pub fn wafers(&self) -> u64 {
        wafers_required(self.neurons, self.neurons_per_wafer)
    }

    pub fn white_matter_coefficient(&self) -> f64 {
        self.white_matter_coefficient
            .unwrap_or_else(layout::default_white_matter_coefficient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub wafer_capacity: u64,
    pub vertical_links: u64,
    pub edge_couplers_per_side: u64,
    pub fiber_tract_total: u64,
    pub fibers_per_wafer: u64,
    pub grey_m3: f64,
    pub white_m3: f64,
    pub total_m3: f64,
    pub device_w: f64,
    pub wallplug_w: f64,
    pub max_span_m: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScalingError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
}

pub fn scaling_report(
    wafer: &WaferSpec,
    column: &ColumnSpec,
    power: &PowerModel,
    system: &SystemSpec,
) -> Result<ScalingReport, ScalingError> {
    wafer.validate()?;
    column.validate()?;
    power.validate(None)?;
    let tract = fiber_tract_capacity(column, wafer.octagon_side());
    let wafers = system.wafers();
    let volume = system_volume(wafers, wafer, column, system.white_matter_coefficient())?;
    let watts = power_report(wafers, system.neurons_per_wafer, power)?;
    Ok(ScalingReport {
        wafer_capacity: wafer_capacity(wafer),
        vertical_links: vertical_link_count(wafer),
        edge_couplers_per_side: edge_coupler_count(wafer),
        fiber_tract_total: tract.total,
        fibers_per_wafer: tract.per_wafer,
        grey_m3: volume.grey_m3,
        white_m3: volume.white_m3,
        total_m3: volume.total_m3,
        device_w: watts.device_w,
        wallplug_w: watts.wallplug_w,
        max_span_m: max_span(system.f_osc, system.velocity)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid() {
        assert_eq!(decade_grid(1, 2), vec![10, 20, 50, 100]);
    }

    #[test]
    fn fig2a_contains_anchors() {
        let rows = fig2a_rows(&decade_grid(3, 11));
        let find = |l, n| rows.iter().find(|r| r.path_length == l && r.n_total == n).unwrap().k;
        assert_eq!(find(2, 1_000_000), 1000);
        assert_eq!(find(2, 100_000_000), 10_000);
    }

    #[test]
    fn fig2b_contains_anchor() {
        let rows = fig2b_rows(&WaferSpec::default(), &decade_grid(1, 4));
        let r = rows.iter().find(|r| r.k == 1000 && r.p == 6).unwrap();
        assert!((r.n_300 as f64 - 1.02e6).abs() / 1.02e6 < 0.01);
    }

    #[test]
    fn default_report() {
        let r = scaling_report(
            &WaferSpec::default(),
            &ColumnSpec::default(),
            &PowerModel::default(),
            &SystemSpec::default(),
        )
        .unwrap();
        assert_eq!(r.edge_couplers_per_side, 11_480);
        assert_eq!(r.max_span_m, 10.0);
        assert!((r.total_m3 - 8.0).abs() < 1e-9);
        assert_eq!(r.wallplug_w, 1000.0 * r.device_w);
    }
}

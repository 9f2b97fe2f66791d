//! Physical realization of a network: wafer capacity, octagonal tiling,
//! column stacks, fiber tracts, placement, propagation latency and volume.
//!
//! Geometry conventions: a wafer is a regular octagon inscribed in a circle
//! of radius `r`, flat sides facing the four cardinal directions. Columns sit
//! on a square lattice with pitch equal to the flat-to-flat width, which
//! leaves square voids of side `2r sin(pi/8)` at the diagonals; those voids
//! hold the fiber tracts.

use std::f64::consts::{FRAC_PI_8, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::STAGE_LATENCY_S;
use crate::photonics::{LinkPath, Medium, MediumTable, Segment, SPEED_OF_LIGHT};
use crate::topology::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("invalid layout parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("wafer {wafer} is overfull: {placed} neurons exceed capacity {capacity}")]
    CapacityExceeded { wafer: usize, placed: u64, capacity: u64 },
    #[error("{neurons} neurons do not fit on {wafers} wafers at {per_wafer} per wafer")]
    NotEnoughWafers { neurons: usize, wafers: usize, per_wafer: u64 },
    #[error("white-matter overflow on wafer {wafer}: {demand} fibers needed, {available} available")]
    WhiteMatterOverflow { wafer: usize, demand: u64, available: u64 },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> LayoutError {
    LayoutError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), LayoutError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be finite and > 0")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaferSpec {
    /// Circumradius of the octagon, meters.
    pub radius: f64,
    pub waveguide_pitch: f64,
    /// Waveguide planes.
    pub planes: u32,
    /// Waveguides entering each neuron.
    pub k_in: u32,
    pub vertical_pitch: f64,
    pub edge_pitch: f64,
}

impl Default for WaferSpec {
    fn default() -> Self {
        Self {
            radius: 0.15,
            waveguide_pitch: 1.5e-6,
            planes: 6,
            k_in: 1000,
            vertical_pitch: 25e-6,
            edge_pitch: 10e-6,
        }
    }
}

impl WaferSpec {
    pub fn validate(&self) -> Result<(), LayoutError> {
        positive("radius", self.radius)?;
        positive("waveguide_pitch", self.waveguide_pitch)?;
        positive("vertical_pitch", self.vertical_pitch)?;
        positive("edge_pitch", self.edge_pitch)?;
        if self.planes == 0 {
            return Err(invalid("planes", "must be >= 1"));
        }
        if self.k_in == 0 {
            return Err(invalid("k_in", "must be >= 1"));
        }
        Ok(())
    }

    pub fn octagon_area(&self) -> f64 {
        octagon_area(self.radius)
    }

    pub fn octagon_side(&self) -> f64 {
        octagon_side(self.radius)
    }

    /// Center-to-flat-side distance.
    pub fn apothem(&self) -> f64 {
        self.radius * FRAC_PI_8.cos()
    }
}

pub fn octagon_area(radius: f64) -> f64 {
    2.0 * SQRT_2 * radius * radius
}

pub fn octagon_side(radius: f64) -> f64 {
    2.0 * radius * FRAC_PI_8.sin()
}

/// Whether a wafer-local point lies in the octagon with apothem `apothem`.
pub fn inside_octagon(x: f64, y: f64, apothem: f64) -> bool {
    let (x, y) = (x.abs(), y.abs());
    x <= apothem && y <= apothem && (x + y) <= apothem * SQRT_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnSpec {
    pub wafers_per_column: u32,
    /// Meters between stacked wafers.
    pub wafer_spacing: f64,
    pub fiber_diameter: f64,
    /// Overrides the square-packed tract total when set.
    pub nominal_tract_fibers: Option<u64>,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            wafers_per_column: 6,
            wafer_spacing: 0.01,
            fiber_diameter: 125e-6,
            nominal_tract_fibers: None,
        }
    }
}

impl ColumnSpec {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.wafers_per_column == 0 {
            return Err(invalid("wafers_per_column", "must be >= 1"));
        }
        positive("wafer_spacing", self.wafer_spacing)?;
        positive("fiber_diameter", self.fiber_diameter)?;
        Ok(())
    }
}

/// Unfloored Keyes estimate `2√2 r² (p / (w k_in))²`.
pub fn wafer_capacity_real(spec: &WaferSpec) -> f64 {
    let ratio = f64::from(spec.planes) / (spec.waveguide_pitch * f64::from(spec.k_in));
    spec.octagon_area() * ratio * ratio
}

/// Neurons routable on one wafer.
pub fn wafer_capacity(spec: &WaferSpec) -> u64 {
    wafer_capacity_real(spec).floor() as u64
}

/// Free-space links between two stacked wafers.
pub fn vertical_link_count(spec: &WaferSpec) -> u64 {
    (spec.octagon_area() / (spec.vertical_pitch * spec.vertical_pitch)).floor() as u64
}

/// Edge couplers along one cardinal side.
pub fn edge_coupler_count(spec: &WaferSpec) -> u64 {
    (spec.octagon_side() / spec.edge_pitch).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TractCapacity {
    pub total: u64,
    pub per_wafer: u64,
}

/// Fibers in one square tract of side `tract_side` (square packing), and
/// each wafer's share of them. The column's nominal total wins if set.
pub fn fiber_tract_capacity(column: &ColumnSpec, tract_side: f64) -> TractCapacity {
    let packed = ((tract_side * tract_side) / (column.fiber_diameter * column.fiber_diameter)).floor() as u64;
    let total = column.nominal_tract_fibers.unwrap_or(packed);
    TractCapacity {
        total,
        per_wafer: total / u64::from(column.wafers_per_column.max(1)),
    }
}

/// Arrangement of columns on the tiling lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TilingSpec {
    pub columns_x: u32,
    pub columns_y: u32,
    /// Route same-level traffic between cardinal neighbors through edge
    /// couplers; when false all inter-column traffic uses fiber.
    pub edge_couplers: bool,
    /// Neurons per wafer; defaults to an even spread over all wafers.
    pub neurons_per_wafer: Option<u64>,
}

impl Default for TilingSpec {
    fn default() -> Self {
        Self {
            columns_x: 1,
            columns_y: 1,
            edge_couplers: true,
            neurons_per_wafer: None,
        }
    }
}

impl TilingSpec {
    pub fn columns(&self) -> usize {
        self.columns_x as usize * self.columns_y as usize
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.columns_x == 0 || self.columns_y == 0 {
            return Err(invalid("columns_x", "column grid must be at least 1 x 1"));
        }
        if self.neurons_per_wafer == Some(0) {
            return Err(invalid("neurons_per_wafer", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaferSite {
    pub column: u32,
    pub column_x: u32,
    pub column_y: u32,
    pub level: u32,
    /// Global center of the wafer, meters.
    pub center: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLayout {
    pub wafer: WaferSpec,
    pub column: ColumnSpec,
    pub tiling: TilingSpec,
    pub seed: u64,
    pub sites: Vec<WaferSite>,
    /// Global neuron positions, meters.
    pub positions: Vec<[f64; 3]>,
    pub wafer_of: Vec<u32>,
    /// One path per topology edge, indexed like the topology's edges.
    pub paths: Vec<LinkPath>,
    /// Distinct (neuron, remote wafer) fiber runs originating on each wafer.
    pub fiber_demand: Vec<u64>,
    pub fibers_per_wafer: u64,
}

impl PhysicalLayout {
    pub fn local_position(&self, neuron: usize) -> [f64; 3] {
        let p = self.positions[neuron];
        let c = self.sites[self.wafer_of[neuron] as usize].center;
        [p[0] - c[0], p[1] - c[1], p[2] - c[2]]
    }

    pub fn path(&self, edge: usize) -> &LinkPath {
        &self.paths[edge]
    }

    pub fn media_counts(&self) -> [(Medium, usize); 4] {
        Medium::ALL.map(|m| {
            (
                m,
                self.paths
                    .iter()
                    .filter(|p| p.segments.iter().any(|s| s.medium == m))
                    .count(),
            )
        })
    }
}

fn grid_positions(count: usize, apothem: f64) -> impl Iterator<Item = [f64; 2]> {
    let g = (count as f64).sqrt().ceil().max(1.0) as usize;
    // Largest axis-aligned square inside the octagon has half-side a/√2.
    let half = apothem / SQRT_2;
    let cell = 2.0 * half / g as f64;
    (0..count).map(move |i| {
        let (row, col) = (i / g, i % g);
        if count == 1 {
            [0.0, 0.0]
        } else {
            [-half + (col as f64 + 0.5) * cell, -half + (row as f64 + 0.5) * cell]
        }
    })
}

/// Places `topology` onto a tiling of columns. Neurons fill wafers in index
/// order (generators keep co-grouped neurons contiguous), wafers fill columns
/// bottom to top, columns fill the lattice row by row. Edges are mapped to
/// link paths by how far apart their endpoints land:
///
/// * same wafer: waveguide
/// * same column: one vertical free-space hop
/// * cardinal neighbor column, same level: waveguide, edge coupler, waveguide
/// * anything else: waveguide to the nearest fiber tract, fiber, waveguide
pub fn place_system(
    topology: &Topology,
    wafer: &WaferSpec,
    column: &ColumnSpec,
    tiling: &TilingSpec,
    seed: u64,
) -> Result<PhysicalLayout, LayoutError> {
    wafer.validate()?;
    column.validate()?;
    tiling.validate()?;
    let n = topology.n_nodes();
    let wpc = column.wafers_per_column as usize;
    let n_wafers = tiling.columns() * wpc;
    let capacity = wafer_capacity(wafer);
    let per_wafer = tiling
        .neurons_per_wafer
        .unwrap_or_else(|| (n as u64).div_ceil(n_wafers as u64).max(1));
    if per_wafer > capacity {
        return Err(LayoutError::CapacityExceeded {
            wafer: 0,
            placed: per_wafer.min(n as u64),
            capacity,
        });
    }
    if (n as u64) > per_wafer * n_wafers as u64 {
        return Err(LayoutError::NotEnoughWafers {
            neurons: n,
            wafers: n_wafers,
            per_wafer,
        });
    }

    let a = wafer.apothem();
    let pitch = 2.0 * a;
    let sites: Vec<WaferSite> = (0..n_wafers)
        .map(|w| {
            let c = (w / wpc) as u32;
            let (cx, cy) = (c % tiling.columns_x, c / tiling.columns_x);
            let level = (w % wpc) as u32;
            WaferSite {
                column: c,
                column_x: cx,
                column_y: cy,
                level,
                center: [
                    f64::from(cx) * pitch,
                    f64::from(cy) * pitch,
                    f64::from(level) * column.wafer_spacing,
                ],
            }
        })
        .collect();

    let mut positions = Vec::with_capacity(n);
    let mut wafer_of = Vec::with_capacity(n);
    for (w, site) in sites.iter().enumerate() {
        let start = w * per_wafer as usize;
        if start >= n {
            break;
        }
        let count = (n - start).min(per_wafer as usize);
        for p in grid_positions(count, a) {
            positions.push([site.center[0] + p[0], site.center[1] + p[1], site.center[2]]);
            wafer_of.push(w as u32);
        }
    }

    let tract = fiber_tract_capacity(column, wafer.octagon_side());
    let mut fiber_demand = vec![0u64; n_wafers];
    let mut paths = Vec::with_capacity(topology.n_edges());
    let mut remote_wafers: Vec<u32> = Vec::new();
    for src in 0..n {
        remote_wafers.clear();
        let ws = wafer_of[src] as usize;
        for e in topology.out_range(src) {
            let dst = topology.target(e) as usize;
            let wd = wafer_of[dst] as usize;
            let path = route(
                positions[src],
                positions[dst],
                &sites[ws],
                &sites[wd],
                a,
                tiling.edge_couplers,
            );
            if path.segments.iter().any(|s| s.medium == Medium::Fiber) {
                remote_wafers.push(wd as u32);
            }
            paths.push(path);
        }
        remote_wafers.sort_unstable();
        remote_wafers.dedup();
        fiber_demand[ws] += remote_wafers.len() as u64;
    }
    if let Some((wafer, &demand)) = fiber_demand
        .iter()
        .enumerate()
        .find(|&(_, &d)| d > tract.per_wafer)
    {
        return Err(LayoutError::WhiteMatterOverflow {
            wafer,
            demand,
            available: tract.per_wafer,
        });
    }

    Ok(PhysicalLayout {
        wafer: *wafer,
        column: *column,
        tiling: *tiling,
        seed,
        sites,
        positions,
        wafer_of,
        paths,
        fiber_demand,
        fibers_per_wafer: tract.per_wafer,
    })
}

fn route(src: [f64; 3], dst: [f64; 3], ws: &WaferSite, wd: &WaferSite, apothem: f64, edge_couplers: bool) -> LinkPath {
    let dx = (dst[0] - src[0]).abs();
    let dy = (dst[1] - src[1]).abs();
    if std::ptr::eq(ws, wd) || (ws.column == wd.column && ws.level == wd.level) {
        return LinkPath::new(vec![Segment::new(Medium::Waveguide, dx + dy, 1)]);
    }
    if ws.column == wd.column {
        return LinkPath::new(vec![Segment::new(Medium::FreeSpaceVertical, (dst[2] - src[2]).abs(), 0)]);
    }
    let (gx, gy) = (
        i64::from(wd.column_x) - i64::from(ws.column_x),
        i64::from(wd.column_y) - i64::from(ws.column_y),
    );
    if edge_couplers && ws.level == wd.level && gx.abs() + gy.abs() == 1 {
        // Distance from the source to the shared edge along the crossing axis.
        let (axis, sign) = if gx != 0 { (0, gx as f64) } else { (1, gy as f64) };
        let to_edge = apothem - sign * (src[axis] - ws.center[axis]);
        let rest = (dx + dy - to_edge).max(0.0);
        return LinkPath::new(vec![
            Segment::new(Medium::Waveguide, to_edge, 0),
            Segment::new(Medium::EdgeCoupler, 0.0, 0),
            Segment::new(Medium::Waveguide, rest, 1),
        ]);
    }
    let (src_port, src_tract) = tract_access(src, ws, apothem);
    let (dst_port, dst_tract) = tract_access(dst, wd, apothem);
    let fiber = (dst_tract[0] - src_tract[0]).abs() + (dst_tract[1] - src_tract[1]).abs() + (dst[2] - src[2]).abs();
    LinkPath::new(vec![
        Segment::new(Medium::Waveguide, src_port, 0),
        Segment::new(Medium::Fiber, fiber, 0),
        Segment::new(Medium::Waveguide, dst_port, 1),
    ])
}

/// Waveguide run from a neuron to the diagonal side facing its quadrant's
/// tract, and that tract's center.
fn tract_access(p: [f64; 3], site: &WaferSite, apothem: f64) -> (f64, [f64; 2]) {
    let (lx, ly) = (p[0] - site.center[0], p[1] - site.center[1]);
    let (sx, sy) = (if lx < 0.0 { -1.0 } else { 1.0 }, if ly < 0.0 { -1.0 } else { 1.0 });
    let port = apothem / SQRT_2;
    let run = (sx * port - lx).abs() + (sy * port - ly).abs();
    (run, [site.center[0] + sx * apothem, site.center[1] + sy * apothem])
}

/// Fixed device delays along a link, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceLatency {
    pub transmitter: f64,
    pub detector: f64,
    /// Synaptic processing before the soma sees the photon.
    pub processing: f64,
}

impl Default for DeviceLatency {
    fn default() -> Self {
        Self {
            transmitter: 0.0,
            detector: 0.0,
            processing: STAGE_LATENCY_S,
        }
    }
}

impl DeviceLatency {
    pub const ZERO: DeviceLatency = DeviceLatency {
        transmitter: 0.0,
        detector: 0.0,
        processing: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.transmitter + self.detector + self.processing
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        for (field, v) in [
            ("transmitter", self.transmitter),
            ("detector", self.detector),
            ("processing", self.processing),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Time of flight along a path, seconds.
pub fn propagation_delay(path: &LinkPath, table: &MediumTable) -> f64 {
    path.segments
        .iter()
        .map(|s| s.length * table.get(s.medium).group_index / SPEED_OF_LIGHT)
        .sum()
}

/// Emission-to-soma latency of one edge. Depends only on the layout.
pub fn path_latency(layout: &PhysicalLayout, edge: usize, table: &MediumTable, devices: &DeviceLatency) -> f64 {
    propagation_delay(layout.path(edge), table) + devices.total()
}

/// Farthest distance a signal can cover within one oscillation period.
pub fn max_span(f_osc: f64, velocity: f64) -> Result<f64, LayoutError> {
    positive("f_osc", f_osc)?;
    positive("velocity", velocity)?;
    Ok(velocity / f_osc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemVolume {
    pub grey_m3: f64,
    pub white_m3: f64,
    pub total_m3: f64,
}

/// Grey matter is the wafer stacks; white matter scales as grey^(4/3).
pub fn system_volume(wafers: u64, wafer: &WaferSpec, column: &ColumnSpec, white_matter_coefficient: f64) -> Result<SystemVolume, LayoutError> {
    positive("white_matter_coefficient", white_matter_coefficient)?;
    let grey = wafers as f64 * wafer.octagon_area() * column.wafer_spacing;
    let white = white_matter_coefficient * grey.powf(4.0 / 3.0);
    Ok(SystemVolume {
        grey_m3: grey,
        white_m3: white,
        total_m3: grey + white,
    })
}

/// Coefficient that makes `system_volume` total `target_m3` at `wafers`.
pub fn calibrate_white_matter(target_m3: f64, wafers: u64, wafer: &WaferSpec, column: &ColumnSpec) -> Result<f64, LayoutError> {
    let grey = wafers as f64 * wafer.octagon_area() * column.wafer_spacing;
    if !(target_m3 > grey && grey > 0.0) {
        return Err(invalid(
            "white_matter_coefficient",
            format!("target volume {target_m3} m^3 must exceed grey volume {grey} m^3"),
        ));
    }
    Ok((target_m3 - grey) / grey.powf(4.0 / 3.0))
}

/// Reference system used to calibrate the default white-matter coefficient:
/// 10^4 wafers filling a cube two meters on a side.
pub const REFERENCE_WAFERS: u64 = 10_000;
pub const REFERENCE_VOLUME_M3: f64 = 8.0;

pub fn default_white_matter_coefficient() -> f64 {
    calibrate_white_matter(
        REFERENCE_VOLUME_M3,
        REFERENCE_WAFERS,
        &WaferSpec::default(),
        &ColumnSpec::default(),
    )
    .expect("default geometry is calibratable")
}

pub fn wafers_required(neurons: u64, per_wafer: u64) -> u64 {
    neurons.div_ceil(per_wafer.max(1))
}

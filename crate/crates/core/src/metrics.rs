//! Scoring of imaging results against scene ground truth: maximum
//! intensity projections, ghost-to-target ratio, coverage, entropy,
//! peak statistics and transmitter localization.

use crate::combine::CombinedImage;
use crate::error::{Error, Result};
use crate::forward::MeasurementDataCube;
use crate::geom::Vec3;
use crate::grids::{ImagingVolume, VolumeAxis};
use crate::scene::SceneDescription;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Projection axis for [`mip`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

/// 2-D intensity map with enough geometry for display export.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    /// Row-major `[row][col]`, values in [0, 1].
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub row_label: &'static str,
    pub col_label: &'static str,
    pub row_origin: f64,
    pub col_origin: f64,
    pub row_pitch: f64,
    pub col_pitch: f64,
}

impl IntensityMap {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Maximum intensity projection of the normalized intensity volume along
/// one axis. Projecting along y yields the xz display plane (rows = z).
pub fn mip(image: &CombinedImage, axis: Axis) -> IntensityMap {
    let geom = image.geometry();
    let (nx, ny, nz) = (geom.x.count, geom.y.count, geom.z.count);
    let intensity = image.intensity();
    let at = |ix: usize, iy: usize, iz: usize| intensity[geom.voxel_index(ix, iy, iz)];

    let (rows, cols, row_ax, col_ax): (usize, usize, VolumeAxis, VolumeAxis) = match axis {
        Axis::X => (nz, ny, geom.z, geom.y),
        Axis::Y => (nz, nx, geom.z, geom.x),
        Axis::Z => (ny, nx, geom.y, geom.x),
    };
    let mut values = vec![0.0f64; rows * cols];
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let v = at(ix, iy, iz);
                let (r, c) = match axis {
                    Axis::X => (iz, iy),
                    Axis::Y => (iz, ix),
                    Axis::Z => (iy, ix),
                };
                let cell = &mut values[r * cols + c];
                if v > *cell {
                    *cell = v;
                }
            }
        }
    }
    IntensityMap {
        values,
        rows,
        cols,
        row_label: match axis {
            Axis::Z => "y",
            _ => "z",
        },
        col_label: match axis {
            Axis::X => "y",
            _ => "x",
        },
        row_origin: row_ax.min,
        col_origin: col_ax.min,
        row_pitch: row_ax.pitch(),
        col_pitch: col_ax.pitch(),
    }
}

/// Ground-truth voxel masks derived from scene geometry.
///
/// `target` marks voxels within `target_dilation` voxels (Chebyshev) of any
/// geometry point and scores coverage; `ghost_excluded` uses the larger
/// `ghost_exclusion` radius and separates mainlobe spill from genuine
/// ghosts in the ghost-to-target ratio.
#[derive(Debug, Clone)]
pub struct GroundTruthMask {
    geometry: ImagingVolume,
    points: Vec<Vec3>,
    target: Vec<bool>,
    ghost_excluded: Vec<bool>,
}

pub const DEFAULT_TARGET_DILATION: usize = 1;
pub const DEFAULT_GHOST_EXCLUSION: usize = 2;

impl GroundTruthMask {
    pub fn from_points(
        points: &[Vec3],
        geometry: &ImagingVolume,
        target_dilation: usize,
        ghost_exclusion: usize,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("ground truth", "no geometry points"));
        }
        let target = dilate(points, geometry, target_dilation);
        let ghost_excluded = dilate(points, geometry, ghost_exclusion);
        if !target.iter().any(|&b| b) {
            return Err(Error::invalid(
                "ground truth",
                "no geometry point falls inside the imaging volume",
            ));
        }
        Ok(GroundTruthMask {
            geometry: geometry.clone(),
            points: points.to_vec(),
            target,
            ghost_excluded,
        })
    }

    pub fn from_scene(scene: &SceneDescription, geometry: &ImagingVolume) -> Result<Self> {
        Self::from_points(
            &scene.target_geometry(),
            geometry,
            DEFAULT_TARGET_DILATION,
            DEFAULT_GHOST_EXCLUSION,
        )
    }

    pub fn geometry(&self) -> &ImagingVolume {
        &self.geometry
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn target(&self) -> &[bool] {
        &self.target
    }

    pub fn is_target(&self, voxel: usize) -> bool {
        self.target[voxel]
    }

    pub fn is_ghost_region(&self, voxel: usize) -> bool {
        !self.ghost_excluded[voxel]
    }

    pub fn num_target_voxels(&self) -> usize {
        self.target.iter().filter(|&&b| b).count()
    }
}

fn dilate(points: &[Vec3], geometry: &ImagingVolume, radius: usize) -> Vec<bool> {
    let mut mask = vec![false; geometry.num_voxels()];
    let r = radius as i64;
    for p in points {
        if !geometry.contains(*p) {
            continue;
        }
        let cx = geometry.x.nearest(p.x) as i64;
        let cy = geometry.y.nearest(p.y) as i64;
        let cz = geometry.z.nearest(p.z) as i64;
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let (ix, iy, iz) = (cx + dx, cy + dy, cz + dz);
                    if ix >= 0
                        && iy >= 0
                        && iz >= 0
                        && (ix as usize) < geometry.x.count
                        && (iy as usize) < geometry.y.count
                        && (iz as usize) < geometry.z.count
                    {
                        mask[geometry.voxel_index(ix as usize, iy as usize, iz as usize)] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Strongest voxel inside the dilated target region: (flat index, value).
pub fn max_inside(image: &CombinedImage, truth: &GroundTruthMask) -> (usize, f64) {
    peak_where(image, |v| !truth.is_ghost_region(v))
}

/// Strongest voxel outside the dilated target region: (flat index, value).
pub fn max_outside(image: &CombinedImage, truth: &GroundTruthMask) -> (usize, f64) {
    peak_where(image, |v| truth.is_ghost_region(v))
}

fn peak_where(image: &CombinedImage, pred: impl Fn(usize) -> bool) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (v, &val) in image.intensity().iter().enumerate() {
        if pred(v) && val > best.1 {
            best = (v, val);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        best = (0, 0.0);
    }
    best
}

/// Ghost-to-target ratio in dB:
/// `20 log10(max outside the dilated target mask / max inside it)`.
/// Negative values mean the ghosts sit below the target response. Returns
/// -inf when nothing lies outside the mask; reports clamp that to -99 dB.
pub fn ghost_to_target_ratio(image: &CombinedImage, truth: &GroundTruthMask) -> Result<f64> {
    if image.geometry() != truth.geometry() {
        return Err(Error::Inconsistent(
            "image and ground truth have different volumes".into(),
        ));
    }
    if truth.num_target_voxels() == 0 {
        return Err(Error::invalid("ground truth", "empty target mask"));
    }
    let (_, inside) = max_inside(image, truth);
    let (_, outside) = max_outside(image, truth);
    if inside == 0.0 {
        return Ok(f64::INFINITY);
    }
    if outside == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(20.0 * (outside / inside).log10())
}

/// Target-peak-to-strongest-artifact ratio in dB:
/// `20 log10(max inside the dilated target mask / max outside it)`,
/// i.e. the negated ghost-to-target ratio. Positive values mean the true
/// structure outshines every artifact.
pub fn peak_to_artifact_db(image: &CombinedImage, truth: &GroundTruthMask) -> Result<f64> {
    ghost_to_target_ratio(image, truth).map(|g| -g)
}

/// Fraction of target voxels whose normalized intensity exceeds
/// `threshold_db` (relative to the image peak). A zero image covers
/// nothing by convention.
pub fn coverage(image: &CombinedImage, truth: &GroundTruthMask, threshold_db: f64) -> Result<f64> {
    if image.geometry() != truth.geometry() {
        return Err(Error::Inconsistent(
            "image and ground truth have different volumes".into(),
        ));
    }
    if truth.num_target_voxels() == 0 {
        return Err(Error::invalid("ground truth", "empty target mask"));
    }
    if !threshold_db.is_finite() || threshold_db >= 0.0 {
        return Err(Error::invalid("coverage threshold", "must be negative dB"));
    }
    if image.is_empty_image() {
        return Ok(0.0);
    }
    let level = 10f64.powf(threshold_db / 20.0);
    let mut hit = 0usize;
    let mut total = 0usize;
    for (v, &val) in image.intensity().iter().enumerate() {
        if truth.is_target(v) {
            total += 1;
            if val > level {
                hit += 1;
            }
        }
    }
    Ok(hit as f64 / total as f64)
}

/// Shannon entropy of the unit-sum intensity distribution, normalized by
/// `ln(num voxels)`; a scale-free artifact indicator (0 = single voxel,
/// 1 = uniform).
pub fn normalized_entropy(image: &CombinedImage) -> f64 {
    let total: f64 = image.intensity().iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &v in image.intensity() {
        if v > 0.0 {
            let q = v / total;
            h -= q * q.ln();
        }
    }
    h / (image.intensity().len() as f64).ln()
}

/// Peak-to-highest-sidelobe ratio in dB; the sidelobe search excludes a
/// Chebyshev cube of `exclusion_radius` voxels around the peak.
pub fn peak_to_sidelobe_db(image: &CombinedImage, exclusion_radius: usize) -> f64 {
    let geom = image.geometry();
    let peak_idx = image.argmax();
    let peak = image.intensity()[peak_idx];
    if peak <= 0.0 {
        return 0.0;
    }
    let (px, py, pz) = geom.voxel_coords(peak_idx);
    let r = exclusion_radius as i64;
    let mut side = 0.0f64;
    for (v, &val) in image.intensity().iter().enumerate() {
        let (ix, iy, iz) = geom.voxel_coords(v);
        let d = (ix as i64 - px as i64)
            .abs()
            .max((iy as i64 - py as i64).abs())
            .max((iz as i64 - pz as i64).abs());
        if d > r && val > side {
            side = val;
        }
    }
    if side == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (peak / side).log10()
    }
}

/// Chebyshev distance between two flat voxel indices, in voxels.
pub fn voxel_chebyshev(geometry: &ImagingVolume, a: usize, b: usize) -> usize {
    let (ax, ay, az) = geometry.voxel_coords(a);
    let (bx, by, bz) = geometry.voxel_coords(b);
    let d = (ax as i64 - bx as i64)
        .abs()
        .max((ay as i64 - by as i64).abs())
        .max((az as i64 - bz as i64).abs());
    d as usize
}

/// Euclidean distance between two flat voxel indices, in voxel units.
pub fn voxel_distance(geometry: &ImagingVolume, a: usize, b: usize) -> f64 {
    let (ax, ay, az) = geometry.voxel_coords(a);
    let (bx, by, bz) = geometry.voxel_coords(b);
    let dx = ax as f64 - bx as f64;
    let dy = ay as f64 - by as f64;
    let dz = az as f64 - bz as f64;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Candidate lattice for [`tx_localize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub x: VolumeAxis,
    pub y: VolumeAxis,
    pub z: VolumeAxis,
}

impl SearchGrid {
    /// Cube of side `2 half_extent` centered on `center` with `step` pitch.
    pub fn centered(center: Vec3, half_extent: f64, step: f64) -> Self {
        let n = (2.0 * half_extent / step).round() as usize + 1;
        let axis = |c: f64| VolumeAxis {
            min: c - half_extent,
            max: c - half_extent + step * (n - 1) as f64,
            count: n,
        };
        SearchGrid {
            x: axis(center.x),
            y: axis(center.y),
            z: axis(center.z),
        }
    }

    pub fn num_candidates(&self) -> usize {
        self.x.count * self.y.count * self.z.count
    }

    pub fn candidate(&self, idx: usize) -> Vec3 {
        let ix = idx % self.x.count;
        let iy = (idx / self.x.count) % self.y.count;
        let iz = idx / (self.x.count * self.y.count);
        Vec3::new(self.x.coord(ix), self.y.coord(iy), self.z.coord(iz))
    }

    fn on_boundary(&self, idx: usize) -> bool {
        let ix = idx % self.x.count;
        let iy = (idx / self.x.count) % self.y.count;
        let iz = idx / (self.x.count * self.y.count);
        let edge = |i: usize, n: usize| n > 1 && (i == 0 || i == n - 1);
        edge(ix, self.x.count) || edge(iy, self.y.count) || edge(iz, self.z.count)
    }
}

/// Transmitter position estimate from incident-inclusive data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxEstimate {
    pub position: Vec3,
    /// Set when the maximum sits on the search-grid boundary, i.e. the
    /// true position likely lies outside the searched region.
    pub on_boundary: bool,
    pub score: f64,
}

/// Estimates the position of transmitter `n` by exhaustive matched-filter
/// search: each candidate back-phases the cube with `conj(g(r_m, cand))`,
/// sums coherently over frequency and accumulates magnitudes over samples
/// and components. Requires a cube simulated with the incident field.
pub fn tx_localize(cube: &MeasurementDataCube, n: usize, search: &SearchGrid) -> Result<TxEstimate> {
    if !cube.includes_incident() {
        return Err(Error::Inconsistent(
            "tx localization needs a cube with the incident field included".into(),
        ));
    }
    if n >= cube.num_tx() {
        return Err(Error::Inconsistent(format!(
            "tx index {n} outside cube ({} transmitters)",
            cube.num_tx()
        )));
    }
    let samples = cube.plane().sample_positions();
    let wavenumbers: Vec<f64> = (0..cube.num_freqs())
        .map(|f| cube.grid().wavenumber(f))
        .collect();

    let scores: Vec<f64> = (0..search.num_candidates())
        .into_par_iter()
        .map(|c| {
            let cand = search.candidate(c);
            let mut score = 0.0f64;
            for (m, &r_m) in samples.iter().enumerate() {
                let dist = r_m.distance(cand);
                if dist == 0.0 {
                    continue;
                }
                for p in 0..cube.num_components() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (f, &k) in wavenumbers.iter().enumerate() {
                        acc += cube.value(n, f, p, m) * Complex64::from_polar(1.0, k * dist);
                    }
                    score += acc.norm() / (4.0 * PI * dist);
                }
            }
            score
        })
        .collect();

    let best = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(TxEstimate {
        position: search.candidate(best),
        on_boundary: search.on_boundary(best),
        score: scores[best],
    })
}

/// Scalar summary of one scored image.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Provenance of the scored image (preset name, mode, subset, ...).
    pub label: String,
    pub peak_position: Vec3,
    /// Distance from the intensity peak to the nearest truth point, m.
    pub localization_error_m: f64,
    /// Clamped to [-99, 99] dB so reports stay numeric.
    pub ghost_to_target_db: f64,
    pub coverage: f64,
    pub coverage_threshold_db: f64,
    pub entropy: f64,
}

impl MetricsReport {
    pub fn compute(
        label: impl Into<String>,
        image: &CombinedImage,
        truth: &GroundTruthMask,
        coverage_threshold_db: f64,
    ) -> Result<Self> {
        let geom = image.geometry();
        let peak_idx = image.argmax();
        let (ix, iy, iz) = geom.voxel_coords(peak_idx);
        let peak_position = geom.voxel_center(ix, iy, iz);
        let localization_error_m = truth
            .points()
            .iter()
            .map(|p| p.distance(peak_position))
            .fold(f64::INFINITY, f64::min);
        let gtr = ghost_to_target_ratio(image, truth)?.clamp(-99.0, 99.0);
        let cov = coverage(image, truth, coverage_threshold_db)?;
        Ok(MetricsReport {
            label: label.into(),
            peak_position,
            localization_error_m,
            ghost_to_target_db: gtr,
            coverage: cov,
            coverage_threshold_db,
            entropy: normalized_entropy(image),
        })
    }
}

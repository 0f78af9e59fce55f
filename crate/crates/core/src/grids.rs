//! Geometric and spectral domain types: frequency grids, transmitter
//! sources, the planar measurement aperture and the imaging volume.
//!
//! Sign conventions used by every module in this crate: time dependence
//! `e^{+j omega t}`, so an outgoing spherical wave carries `e^{-jkR}` and a
//! plane wave traveling toward +z carries `e^{-j kz z}`.
//!
//! All planar arrays are row-major with y as the outer index and x as the
//! inner index.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform frequency sweep with the derived per-entry wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    f_min: f64,
    f_max: f64,
    count: usize,
    frequencies: Vec<f64>,
    wavenumbers: Vec<f64>,
    delta_k: f64,
}

impl FrequencyGrid {
    /// Builds a uniform grid of `count` frequencies from `f_min` to `f_max`
    /// (inclusive, Hz). For a single-entry grid the spectral weight spacing
    /// degenerates to 1 so weighted sums reduce to plain sums.
    pub fn new(f_min: f64, f_max: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("frequency grid", "count must be >= 1"));
        }
        if f_min <= 0.0 || f_max <= 0.0 {
            return Err(Error::invalid(
                "frequency grid",
                format!("frequencies must be positive, got [{f_min}, {f_max}]"),
            ));
        }
        if f_min > f_max {
            return Err(Error::invalid(
                "frequency grid",
                format!("f_min {f_min} exceeds f_max {f_max}"),
            ));
        }
        if count == 1 && f_min != f_max {
            return Err(Error::invalid(
                "frequency grid",
                "count = 1 requires f_min = f_max",
            ));
        }
        let delta_f = if count > 1 {
            (f_max - f_min) / (count - 1) as f64
        } else {
            0.0
        };
        let frequencies: Vec<f64> = (0..count).map(|i| f_min + delta_f * i as f64).collect();
        let wavenumbers: Vec<f64> = frequencies
            .iter()
            .map(|f| 2.0 * PI * f / SPEED_OF_LIGHT)
            .collect();
        let delta_k = if count > 1 {
            2.0 * PI * delta_f / SPEED_OF_LIGHT
        } else {
            1.0
        };
        Ok(FrequencyGrid {
            f_min,
            f_max,
            count,
            frequencies,
            wavenumbers,
            delta_k,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.frequencies[index]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Wavenumber `2 pi f / c` in rad/m for the entry at `index`.
    pub fn wavenumber(&self, index: usize) -> f64 {
        self.wavenumbers[index]
    }

    /// Wavenumber spacing `2 pi df / c`; 1.0 for a single-entry grid.
    pub fn delta_k(&self) -> f64 {
        self.delta_k
    }

    pub fn delta_f(&self) -> f64 {
        if self.count > 1 {
            (self.f_max - self.f_min) / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    /// Shortest wavelength on the grid, c / f_max.
    pub fn lambda_min(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_max
    }

    /// Index of the entry whose frequency is nearest to `f`.
    pub fn index_of(&self, f: f64) -> usize {
        if self.count == 1 {
            return 0;
        }
        let step = self.delta_f();
        let i = ((f - self.f_min) / step).round();
        (i.max(0.0) as usize).min(self.count - 1)
    }
}

/// Grid index / frequency / wavenumber triple used when iterating sweeps.
pub type FrequencySample = (usize, f64, f64);

/// Ideal Hertzian dipole transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxSource {
    pub position: Vec3,
    /// Unit vector along the dipole axis.
    pub polarization: Vec3,
    /// Complex excitation; field scales linearly with it.
    pub dipole_moment: Complex64,
}

impl TxSource {
    pub fn new(position: Vec3, polarization: Vec3, dipole_moment: Complex64) -> Result<Self> {
        if !position.is_finite() || !polarization.is_finite() {
            return Err(Error::invalid("tx source", "non-finite geometry"));
        }
        if (polarization.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "tx source",
                format!(
                    "polarization must be a unit vector, |p| = {}",
                    polarization.norm()
                ),
            ));
        }
        Ok(TxSource {
            position,
            polarization,
            dipole_moment,
        })
    }

    /// y-polarized unit dipole at `position`.
    pub fn y_dipole(position: Vec3) -> Self {
        TxSource {
            position,
            polarization: Vec3::new(0.0, 1.0, 0.0),
            dipole_moment: Complex64::new(1.0, 0.0),
        }
    }
}

/// Rectangular scan plane at constant z with a uniform sample lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlane {
    z_plane: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
}

impl MeasurementPlane {
    pub fn new(
        z_plane: f64,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("measurement plane", "nx and ny must be >= 2"));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::invalid(
                "measurement plane",
                "extents must satisfy min < max",
            ));
        }
        Ok(MeasurementPlane {
            z_plane,
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    pub fn z_plane(&self) -> f64 {
        self.z_plane
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn num_samples(&self) -> usize {
        self.nx * self.ny
    }

    pub fn x_coord(&self, ix: usize) -> f64 {
        self.x_min + self.dx() * ix as f64
    }

    pub fn y_coord(&self, iy: usize) -> f64 {
        self.y_min + self.dy() * iy as f64
    }

    /// Sample position for flat index `m = iy * nx + ix`.
    pub fn sample_position(&self, m: usize) -> Vec3 {
        let iy = m / self.nx;
        let ix = m % self.nx;
        Vec3::new(self.x_coord(ix), self.y_coord(iy), self.z_plane)
    }

    /// All nx*ny sample positions, row-major in (y, x).
    pub fn sample_positions(&self) -> Vec<Vec3> {
        (0..self.num_samples())
            .map(|m| self.sample_position(m))
            .collect()
    }

    /// Warns when the lattice undersamples the shortest wavelength
    /// (spacing above lambda_min / 2). Undersampling aliases the highest
    /// plane-wave angles but is routinely tolerated at modest standoffs,
    /// so this is advisory rather than an error.
    pub fn undersampling_warning(&self, grid: &FrequencyGrid) -> Option<String> {
        let limit = grid.lambda_min() / 2.0;
        let dx = self.dx();
        let dy = self.dy();
        if dx > limit || dy > limit {
            Some(format!(
                "plane spacing ({:.4} m, {:.4} m) exceeds lambda_min/2 = {:.4} m at {:.3} GHz",
                dx,
                dy,
                limit,
                grid.f_max() / 1e9
            ))
        } else {
            None
        }
    }
}

/// Axis description shared by the imaging volume: `count` uniform voxel
/// centers from `min` to `max` inclusive (a single-count axis sits at `min`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl VolumeAxis {
    pub fn pitch(&self) -> f64 {
        if self.count > 1 {
            (self.max - self.min) / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + self.pitch() * i as f64
    }

    /// Nearest voxel index for a coordinate, clamped to the axis.
    pub fn nearest(&self, v: f64) -> usize {
        if self.count == 1 {
            return 0;
        }
        let i = ((v - self.min) / self.pitch()).round();
        (i.max(0.0) as usize).min(self.count - 1)
    }
}

/// Voxel grid over which images are reconstructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingVolume {
    pub x: VolumeAxis,
    pub y: VolumeAxis,
    pub z: VolumeAxis,
}

impl ImagingVolume {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x_min: f64,
        x_max: f64,
        nx: usize,
        y_min: f64,
        y_max: f64,
        ny: usize,
        z_min: f64,
        z_max: f64,
        nz: usize,
    ) -> Result<Self> {
        for (name, min, max, n) in [
            ("x", x_min, x_max, nx),
            ("y", y_min, y_max, ny),
            ("z", z_min, z_max, nz),
        ] {
            if n == 0 {
                return Err(Error::invalid(
                    "imaging volume",
                    format!("{name} axis needs at least one voxel"),
                ));
            }
            if min > max || (n > 1 && min == max) {
                return Err(Error::invalid(
                    "imaging volume",
                    format!("{name} axis extents invalid: [{min}, {max}] with {n} voxels"),
                ));
            }
        }
        Ok(ImagingVolume {
            x: VolumeAxis {
                min: x_min,
                max: x_max,
                count: nx,
            },
            y: VolumeAxis {
                min: y_min,
                max: y_max,
                count: ny,
            },
            z: VolumeAxis {
                min: z_min,
                max: z_max,
                count: nz,
            },
        })
    }

    pub fn num_voxels(&self) -> usize {
        self.x.count * self.y.count * self.z.count
    }

    /// Voxel center for (ix, iy, iz).
    pub fn voxel_center(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        Vec3::new(self.x.coord(ix), self.y.coord(iy), self.z.coord(iz))
    }

    /// Flat voxel index, x fastest: `(iz * ny + iy) * nx + ix`.
    pub fn voxel_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.y.count + iy) * self.x.count + ix
    }

    /// Inverse of [`voxel_index`](Self::voxel_index).
    pub fn voxel_coords(&self, idx: usize) -> (usize, usize, usize) {
        let ix = idx % self.x.count;
        let iy = (idx / self.x.count) % self.y.count;
        let iz = idx / (self.x.count * self.y.count);
        (ix, iy, iz)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.x.min
            && p.x <= self.x.max
            && p.y >= self.y.min
            && p.y <= self.y.max
            && p.z >= self.z.min
            && p.z <= self.z.max
    }

    /// True when the plane's z level cuts through the volume.
    pub fn intersects_plane(&self, plane: &MeasurementPlane) -> bool {
        plane.z_plane() >= self.z.min && plane.z_plane() <= self.z.max
    }
}

/// Cartesian field component measured by the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldComponent {
    X,
    Y,
    Z,
}

impl FieldComponent {
    pub fn all() -> [FieldComponent; 3] {
        [FieldComponent::X, FieldComponent::Y, FieldComponent::Z]
    }

    pub fn pick(self, v: crate::geom::CVec3) -> Complex64 {
        match self {
            FieldComponent::X => v.x,
            FieldComponent::Y => v.y,
            FieldComponent::Z => v.z,
        }
    }
}

impl std::fmt::Display for FieldComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldComponent::X => write!(f, "x"),
            FieldComponent::Y => write!(f, "y"),
            FieldComponent::Z => write!(f, "z"),
        }
    }
}

/// Validates a measured-component subset: non-empty, no duplicates.
pub fn validate_components(components: &[FieldComponent]) -> Result<()> {
    if components.is_empty() {
        return Err(Error::invalid("component set", "must be non-empty"));
    }
    for (i, c) in components.iter().enumerate() {
        if components[..i].contains(c) {
            return Err(Error::invalid(
                "component set",
                format!("duplicate component {c}"),
            ));
        }
    }
    Ok(())
}

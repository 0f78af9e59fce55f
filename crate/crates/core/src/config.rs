//! Scenario configuration: versioned JSON schema, validation with field
//! paths, and the built-in presets.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grids::{FieldComponent, FrequencyGrid, ImagingVolume, MeasurementPlane, TxSource};
use crate::metrics::Axis;
use crate::scene::{PointScatterer, ReflectivePlate, SceneDescription};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Combination mode(s) a pipeline run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Coherent,
    Incoherent,
    Both,
}

impl RunMode {
    pub fn coherent(self) -> bool {
        matches!(self, RunMode::Coherent | RunMode::Both)
    }

    pub fn incoherent(self) -> bool {
        matches!(self, RunMode::Incoherent | RunMode::Both)
    }
}

/// Pipeline switches; all optional in the file with these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSettings {
    pub mode: RunMode,
    pub components: Vec<FieldComponent>,
    /// Frequency indices to combine (must be uniformly spaced); all when
    /// absent.
    pub freq_subset: Option<Vec<usize>>,
    /// Transmitter indices to combine; all when absent.
    pub tx_subset: Option<Vec<usize>>,
    pub include_incident: bool,
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
    /// Spectral interpolation factor refining the image x/y lattice
    /// relative to the measurement plane lattice.
    pub padding_factor: usize,
    pub db_floor: f64,
    pub coverage_threshold_db: f64,
    pub mip_axes: Vec<Axis>,
    pub threads: Option<usize>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            mode: RunMode::Coherent,
            components: vec![FieldComponent::X, FieldComponent::Y],
            freq_subset: None,
            tx_subset: None,
            include_incident: false,
            noise_snr_db: None,
            seed: 0,
            padding_factor: 1,
            db_floor: -30.0,
            coverage_threshold_db: -10.0,
            mip_axes: vec![Axis::Y],
            threads: None,
        }
    }
}

/// Fully validated scenario ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: Option<String>,
    pub scene: SceneDescription,
    pub tx_list: Vec<TxSource>,
    pub grid: FrequencyGrid,
    pub plane: MeasurementPlane,
    pub volume: ImagingVolume,
    pub pipeline: PipelineSettings,
    pub output_dir: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// JSON schema (DTO layer)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub description: Option<String>,
    pub scene: SceneSpec,
    pub tx_list: Vec<TxSpec>,
    pub frequency_grid: FrequencyGridSpec,
    pub measurement_plane: PlaneSpec,
    pub imaging_volume: VolumeSpec,
    #[serde(default)]
    pub pipeline: PipelineSettings,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub scatterers: Vec<ScattererSpec>,
    pub plates: Vec<PlateSpec>,
    pub parasitic: Vec<ScattererSpec>,
    pub occlusion_enabled: bool,
    pub double_bounce_enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    pub position: [f64; 3],
    pub reflectivity: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateSpec {
    pub corner: [f64; 3],
    pub edge_u: [f64; 3],
    pub edge_v: [f64; 3],
    pub facet_density: f64,
    /// Complex reflection coefficient; -1 (PEC) when absent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reflection_coefficient: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxSpec {
    pub position: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub polarization: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dipole_moment: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGridSpec {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub z_m: f64,
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSpec {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub nx: usize,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub ny: usize,
    pub z_min_m: f64,
    pub z_max_m: f64,
    pub nz: usize,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn cpx(c: (f64, f64)) -> Complex64 {
    Complex64::new(c.0, c.1)
}

fn at(location: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Config {
        location: location.to_string(),
        message: e.to_string(),
    }
}

impl ScenarioFile {
    /// Converts the raw file into a validated [`ScenarioConfig`].
    pub fn into_config(self) -> Result<ScenarioConfig> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config {
                location: "schema_version".into(),
                message: format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            });
        }
        let grid = FrequencyGrid::new(
            self.frequency_grid.f_min_hz,
            self.frequency_grid.f_max_hz,
            self.frequency_grid.count,
        )
        .map_err(at("frequency_grid"))?;
        let plane = MeasurementPlane::new(
            self.measurement_plane.z_m,
            self.measurement_plane.x_min_m,
            self.measurement_plane.x_max_m,
            self.measurement_plane.y_min_m,
            self.measurement_plane.y_max_m,
            self.measurement_plane.nx,
            self.measurement_plane.ny,
        )
        .map_err(at("measurement_plane"))?;
        let volume = ImagingVolume::new(
            self.imaging_volume.x_min_m,
            self.imaging_volume.x_max_m,
            self.imaging_volume.nx,
            self.imaging_volume.y_min_m,
            self.imaging_volume.y_max_m,
            self.imaging_volume.ny,
            self.imaging_volume.z_min_m,
            self.imaging_volume.z_max_m,
            self.imaging_volume.nz,
        )
        .map_err(at("imaging_volume"))?;

        let mut tx_list = Vec::with_capacity(self.tx_list.len());
        for (i, tx) in self.tx_list.iter().enumerate() {
            let pol = tx.polarization.map(vec3).unwrap_or(Vec3::new(0.0, 1.0, 0.0));
            let moment = tx.dipole_moment.map(cpx).unwrap_or(Complex64::new(1.0, 0.0));
            tx_list.push(
                TxSource::new(vec3(tx.position), pol, moment)
                    .map_err(at(&format!("tx_list[{i}]")))?,
            );
        }

        let mut scene = SceneDescription {
            occlusion_enabled: self.scene.occlusion_enabled,
            double_bounce_enabled: self.scene.double_bounce_enabled,
            ..Default::default()
        };
        for (i, s) in self.scene.scatterers.iter().enumerate() {
            scene.scatterers.push(
                PointScatterer::new(vec3(s.position), cpx(s.reflectivity))
                    .map_err(at(&format!("scene.scatterers[{i}]")))?,
            );
        }
        for (i, p) in self.scene.plates.iter().enumerate() {
            scene.plates.push(
                ReflectivePlate::new(
                    vec3(p.corner),
                    vec3(p.edge_u),
                    vec3(p.edge_v),
                    p.facet_density,
                    p.reflection_coefficient.map(cpx).unwrap_or(Complex64::new(-1.0, 0.0)),
                )
                .map_err(at(&format!("scene.plates[{i}]")))?,
            );
        }
        for (i, s) in self.scene.parasitic.iter().enumerate() {
            scene.parasitic.push(
                PointScatterer::new(vec3(s.position), cpx(s.reflectivity))
                    .map_err(at(&format!("scene.parasitic[{i}]")))?,
            );
        }

        let config = ScenarioConfig {
            name: self.name,
            description: self.description,
            scene,
            tx_list,
            grid,
            plane,
            volume,
            pipeline: self.pipeline,
            output_dir: self.output_dir.map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }
}

impl ScenarioConfig {
    /// Cross-object validation; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();

        if self.tx_list.is_empty() {
            return Err(Error::Config {
                location: "tx_list".into(),
                message: "at least one transmitter required".into(),
            });
        }
        for (i, tx) in self.tx_list.iter().enumerate() {
            if (tx.position.z - self.plane.z_plane()).abs() < 1e-9 {
                return Err(Error::Config {
                    location: format!("tx_list[{i}]"),
                    message: "transmitter lies on the measurement plane".into(),
                });
            }
            if self.volume.contains(tx.position) {
                warnings.push(format!(
                    "tx_list[{i}] sits inside the imaging volume; its voxel is suppressed in the combination weights"
                ));
            }
        }
        if self.volume.intersects_plane(&self.plane) {
            return Err(Error::Config {
                location: "imaging_volume".into(),
                message: "volume intersects the measurement plane".into(),
            });
        }
        for (i, s) in self.scene.scatterers.iter().enumerate() {
            if !self.volume.contains(s.position) {
                return Err(Error::Config {
                    location: format!("scene.scatterers[{i}]"),
                    message: "scatterer outside the imaging volume".into(),
                });
            }
        }
        for (i, p) in self.scene.plates.iter().enumerate() {
            let corners = [
                p.corner(),
                p.corner() + p.edge_u(),
                p.corner() + p.edge_v(),
                p.corner() + p.edge_u() + p.edge_v(),
            ];
            if corners.iter().any(|c| !self.volume.contains(*c)) {
                return Err(Error::Config {
                    location: format!("scene.plates[{i}]"),
                    message: "plate extends outside the imaging volume".into(),
                });
            }
        }
        for (i, s) in self.scene.parasitic.iter().enumerate() {
            if (s.position.z - self.plane.z_plane()).abs() < 1e-9 {
                return Err(Error::Config {
                    location: format!("scene.parasitic[{i}]"),
                    message: "parasitic scatterer lies on the measurement plane".into(),
                });
            }
        }
        if self.pipeline.padding_factor == 0 {
            return Err(Error::Config {
                location: "pipeline.padding_factor".into(),
                message: "must be >= 1".into(),
            });
        }
        if !self.pipeline.db_floor.is_finite() || self.pipeline.db_floor >= 0.0 {
            return Err(Error::Config {
                location: "pipeline.db_floor".into(),
                message: "must be negative".into(),
            });
        }
        if !self.pipeline.coverage_threshold_db.is_finite() || self.pipeline.coverage_threshold_db >= 0.0 {
            return Err(Error::Config {
                location: "pipeline.coverage_threshold_db".into(),
                message: "must be negative".into(),
            });
        }
        crate::grids::validate_components(&self.pipeline.components).map_err(|e| {
            Error::Config {
                location: "pipeline.components".into(),
                message: e.to_string(),
            }
        })?;
        if let Some(subset) = &self.pipeline.freq_subset {
            if subset.is_empty() || subset.iter().any(|&f| f >= self.grid.len()) {
                return Err(Error::Config {
                    location: "pipeline.freq_subset".into(),
                    message: format!("indices must be non-empty and < {}", self.grid.len()),
                });
            }
        }
        if let Some(subset) = &self.pipeline.tx_subset {
            if subset.is_empty() || subset.iter().any(|&n| n >= self.tx_list.len()) {
                return Err(Error::Config {
                    location: "pipeline.tx_subset".into(),
                    message: format!("indices must be non-empty and < {}", self.tx_list.len()),
                });
            }
        }
        // the imaging lattice must exist for the requested volume
        crate::pws::ImagingOperator::new(&self.plane, &self.volume, self.pipeline.padding_factor)
            .map_err(|e| Error::Config {
                location: "imaging_volume".into(),
                message: e.to_string(),
            })?;
        if let Some(w) = self.plane.undersampling_warning(&self.grid) {
            warnings.push(w);
        }
        Ok(warnings)
    }

    /// Serializable form of this config.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            description: self.description.clone(),
            scene: SceneSpec {
                scatterers: self
                    .scene
                    .scatterers
                    .iter()
                    .map(|s| ScattererSpec {
                        position: [s.position.x, s.position.y, s.position.z],
                        reflectivity: (s.reflectivity.re, s.reflectivity.im),
                    })
                    .collect(),
                plates: self
                    .scene
                    .plates
                    .iter()
                    .map(|p| PlateSpec {
                        corner: [p.corner().x, p.corner().y, p.corner().z],
                        edge_u: [p.edge_u().x, p.edge_u().y, p.edge_u().z],
                        edge_v: [p.edge_v().x, p.edge_v().y, p.edge_v().z],
                        facet_density: p.facet_density(),
                        reflection_coefficient: Some((
                            p.reflection_coefficient().re,
                            p.reflection_coefficient().im,
                        )),
                    })
                    .collect(),
                parasitic: self
                    .scene
                    .parasitic
                    .iter()
                    .map(|s| ScattererSpec {
                        position: [s.position.x, s.position.y, s.position.z],
                        reflectivity: (s.reflectivity.re, s.reflectivity.im),
                    })
                    .collect(),
                occlusion_enabled: self.scene.occlusion_enabled,
                double_bounce_enabled: self.scene.double_bounce_enabled,
            },
            tx_list: self
                .tx_list
                .iter()
                .map(|t| TxSpec {
                    position: [t.position.x, t.position.y, t.position.z],
                    polarization: Some([t.polarization.x, t.polarization.y, t.polarization.z]),
                    dipole_moment: Some((t.dipole_moment.re, t.dipole_moment.im)),
                })
                .collect(),
            frequency_grid: FrequencyGridSpec {
                f_min_hz: self.grid.f_min(),
                f_max_hz: self.grid.f_max(),
                count: self.grid.len(),
            },
            measurement_plane: PlaneSpec {
                z_m: self.plane.z_plane(),
                x_min_m: self.plane.x_min(),
                x_max_m: self.plane.x_max(),
                y_min_m: self.plane.y_min(),
                y_max_m: self.plane.y_max(),
                nx: self.plane.nx(),
                ny: self.plane.ny(),
            },
            imaging_volume: VolumeSpec {
                x_min_m: self.volume.x.min,
                x_max_m: self.volume.x.max,
                nx: self.volume.x.count,
                y_min_m: self.volume.y.min,
                y_max_m: self.volume.y.max,
                ny: self.volume.y.count,
                z_min_m: self.volume.z.min,
                z_max_m: self.volume.z.max,
                nz: self.volume.z.count,
            },
            pipeline: self.pipeline.clone(),
            output_dir: self
                .output_dir
                .as_ref()
                .map(|p| p.to_string_lossy().into_owned()),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("config serializes")
    }
}

/// Parses and fully validates a scenario file; parse errors carry JSON
/// line/column context and semantic errors carry the field path.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config_str(&text)
}

/// Same as [`parse_config`] on an in-memory string.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        let location = if path == "." || matches!(inner.classify(), serde_json::error::Category::Syntax | serde_json::error::Category::Eof) {
            format!("line {} column {}", inner.line(), inner.column())
        } else {
            path
        };
        Error::Config {
            location,
            message: inner.to_string(),
        }
    })?;
    file.into_config()
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Builds the pyramid shell as stacked thin rectangular plates per
/// triangular face: base edge length `base` centered at the origin, apex at
/// `(0, 0, height)`. Bands approximate each triangle within one facet
/// pitch.
pub fn pyramid_shell(base: f64, height: f64, facet_pitch: f64) -> Vec<ReflectivePlate> {
    let half = base / 2.0;
    let apex = Vec3::new(0.0, 0.0, height);
    let density = 1.0 / facet_pitch;
    let faces: [(Vec3, Vec3); 4] = [
        // (base edge midpoint, along-base unit direction)
        (Vec3::new(half, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
        (Vec3::new(-half, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
        (Vec3::new(0.0, half, 0.0), Vec3::new(1.0, 0.0, 0.0)),
        (Vec3::new(0.0, -half, 0.0), Vec3::new(1.0, 0.0, 0.0)),
    ];
    let mut plates = Vec::new();
    for (mid, along) in faces {
        let slant = apex - mid;
        let slant_len = slant.norm();
        let bands = (slant_len / facet_pitch).ceil().max(1.0) as usize;
        for i in 0..bands {
            let t0 = i as f64 / bands as f64;
            let t_mid = (i as f64 + 0.5) / bands as f64;
            let width = base * (1.0 - t_mid);
            if width < facet_pitch * 0.5 {
                continue; // the tip sliver is below one facet
            }
            let corner = mid + slant * t0 - along * (width / 2.0);
            let plate = ReflectivePlate::pec(
                corner,
                along * width,
                slant * (1.0 / bands as f64),
                density,
            )
            .expect("pyramid band edges are orthogonal");
            plates.push(plate);
        }
    }
    plates
}

/// Two orthogonal plates meeting along the y axis, opening toward +z:
/// a 90 degree corner reflector with `edge` sides.
pub fn dihedral_plates(edge: f64, facet_pitch: f64) -> Vec<ReflectivePlate> {
    let half_y = edge / 2.0;
    let density = 1.0 / facet_pitch;
    let sq = std::f64::consts::FRAC_1_SQRT_2;
    let up_left = Vec3::new(-sq, 0.0, sq);
    let up_right = Vec3::new(sq, 0.0, sq);
    vec![
        ReflectivePlate::pec(
            Vec3::new(0.0, -half_y, 0.0),
            Vec3::new(0.0, edge, 0.0),
            up_left * edge,
            density,
        )
        .expect("dihedral edges are orthogonal"),
        ReflectivePlate::pec(
            Vec3::new(0.0, -half_y, 0.0),
            Vec3::new(0.0, edge, 0.0),
            up_right * edge,
            density,
        )
        .expect("dihedral edges are orthogonal"),
    ]
}

fn reference_plane(fast: bool) -> MeasurementPlane {
    let n = if fast { 51 } else { 101 };
    MeasurementPlane::new(1.0, -0.75, 0.75, -0.75, 0.75, n, n).expect("preset plane is valid")
}

/// Padding factor bringing the plane lattice to the preset 5 mm image pitch.
fn reference_padding(fast: bool) -> usize {
    if fast {
        6 // 30 mm plane pitch -> 5 mm
    } else {
        3 // 15 mm plane pitch -> 5 mm
    }
}

fn volume_5mm(
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    z_min: f64,
    z_max: f64,
) -> ImagingVolume {
    let pitch = 0.005;
    let count = |min: f64, max: f64| ((max - min) / pitch).round() as usize + 1;
    ImagingVolume::new(
        x_min,
        x_max,
        count(x_min, x_max),
        y_min,
        y_max,
        count(y_min, y_max),
        z_min,
        z_max,
        count(z_min, z_max),
    )
    .expect("preset volume is valid")
}

fn tx_pair() -> Vec<TxSource> {
    vec![
        TxSource::y_dipole(Vec3::new(-0.25, 0.0, 0.25)),
        TxSource::y_dipole(Vec3::new(0.25, 0.0, 0.25)),
    ]
}

/// Built-in scenarios. `fast` variants decimate the plane and the
/// frequency grid so the full pipeline stays CI-sized; full variants use
/// the full-fidelity scan geometry.
pub fn preset(name: &str, fast: bool) -> Result<ScenarioConfig> {
    let suffix = if fast { "-fast" } else { "" };
    let config = match name {
        "pyramid" => {
            let grid = if fast {
                FrequencyGrid::new(6e9, 10e9, 11)?
            } else {
                FrequencyGrid::new(6e9, 10e9, 21)?
            };
            // Shell sampling at the imaging resolution (~4 cm at this band)
            // rather than sub-wavelength: each sample then reconstructs as a
            // resolvable glint of comparable brightness, which is what the
            // occlusion-coverage comparison scores. Sub-wavelength sampling
            // would turn the faces into smooth specular surfaces whose
            // tilted returns largely cancel toward the scan plane.
            let pitch = 0.04;
            ScenarioConfig {
                name: format!("pyramid{suffix}"),
                description: Some(
                    "Convex occlusion study: PEC pyramid (0.3 m base, 0.15 m height, assumed \
                     dimensions) under two dipole illuminations. Shell is band-sampled into \
                     rectangular plates carrying resolution-spaced glints; hard-shadow \
                     occlusion on, double bounce off."
                        .into(),
                ),
                scene: SceneDescription {
                    plates: pyramid_shell(0.3, 0.15, pitch),
                    occlusion_enabled: true,
                    double_bounce_enabled: false,
                    ..Default::default()
                },
                tx_list: tx_pair(),
                grid,
                plane: reference_plane(fast),
                volume: volume_5mm(-0.4, 0.4, -0.4, 0.4, -0.1, 0.4),
                pipeline: PipelineSettings {
                    padding_factor: reference_padding(fast),
                    mip_axes: vec![Axis::Y, Axis::Z],
                    ..Default::default()
                },
                output_dir: None,
            }
        }
        "dihedral" => {
            let grid = if fast {
                FrequencyGrid::new(2e9, 12e9, 21)?
            } else {
                FrequencyGrid::new(2e9, 12e9, 41)?
            };
            let pitch = grid.lambda_min() / if fast { 2.0 } else { 4.0 };
            let tx_list: Vec<TxSource> = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3]
                .iter()
                .map(|&x| TxSource::y_dipole(Vec3::new(x, 0.0, 0.4)))
                .collect();
            ScenarioConfig {
                name: format!("dihedral{suffix}"),
                description: Some(
                    "Multipath ghost study: PEC 90 degree dihedral corner reflector (0.3 m \
                     plates, assumed dimensions) opening toward the scan plane, seven dipole \
                     positions along x. Double-bounce returns via mirrored sources."
                        .into(),
                ),
                scene: SceneDescription {
                    plates: dihedral_plates(0.3, pitch),
                    occlusion_enabled: true,
                    double_bounce_enabled: true,
                    ..Default::default()
                },
                tx_list,
                grid,
                plane: reference_plane(fast),
                volume: volume_5mm(-0.4, 0.4, -0.15, 0.15, -0.2, 0.5),
                pipeline: PipelineSettings {
                    padding_factor: reference_padding(fast),
                    mip_axes: vec![Axis::Y],
                    ..Default::default()
                },
                output_dir: None,
            }
        }
        "pointcal" => ScenarioConfig {
            name: format!("pointcal{suffix}"),
            description: Some(
                "Single point scatterer at the origin for localization and phase-stationarity \
                 calibration."
                    .into(),
            ),
            scene: SceneDescription {
                scatterers: vec![PointScatterer::new(Vec3::ZERO, Complex64::new(1.0, 0.0))
                    .expect("pointcal scatterer is valid")],
                ..Default::default()
            },
            tx_list: tx_pair(),
            grid: FrequencyGrid::new(6e9, 10e9, 21)?,
            plane: reference_plane(fast),
            volume: volume_5mm(-0.2, 0.2, -0.2, 0.2, -0.1, 0.1),
            pipeline: PipelineSettings {
                padding_factor: reference_padding(fast),
                mip_axes: vec![Axis::Y, Axis::Z],
                ..Default::default()
            },
            output_dir: None,
        },
        other => {
            return Err(Error::invalid(
                "preset name",
                format!("unknown preset '{other}' (expected pyramid, dihedral or pointcal)"),
            ))
        }
    };
    config.validate()?;
    Ok(config)
}

//! Near-field passive radar imaging toolkit.
//!
//! Synthesizes planar scattered-field measurements of parametric scenes
//! under moving Hertzian-dipole illumination, reconstructs single-frequency
//! volumetric images by plane-wave-spectrum backpropagation, and combines
//! them coherently across frequencies and transmitter positions. Multiple
//! illumination positions fill occlusion shadows and suppress the
//! configuration-dependent multipath ghosts of concave reflectors such as
//! dihedral corners.
//!
//! Conventions, binding for every module:
//! - time dependence `e^{+j omega t}`; outgoing waves carry `e^{-jkR}`
//! - planar arrays are row-major with y outer, x inner
//! - volumes are `[z][y][x]` with x fastest

pub mod combine;
pub mod config;
pub mod error;
pub mod export;
pub mod forward;
pub mod geom;
pub mod grids;
pub mod metrics;
pub mod pipeline;
pub mod pws;
pub mod scene;

pub use combine::{
    coherent_combine, incoherent_combine, magnitude_correction, phase_correction, subset_combine,
    CombineMode, CombineOptions, CombinedImage, CombineWeights, StreamingCombiner,
};
pub use config::{parse_config, parse_config_str, preset, PipelineSettings, RunMode, ScenarioConfig};
pub use error::{Error, Result};
pub use forward::{
    dipole_field, greens, is_occluded, mirror_source, scattered_field_double_bounce,
    scattered_field_single_bounce, simulate, MeasurementDataCube, SimulateOptions,
};
pub use geom::{CVec3, Vec3};
pub use grids::{
    FieldComponent, FrequencyGrid, ImagingVolume, MeasurementPlane, TxSource, VolumeAxis,
    SPEED_OF_LIGHT,
};
pub use metrics::{
    coverage, ghost_to_target_ratio, mip, normalized_entropy, peak_to_artifact_db,
    peak_to_sidelobe_db, tx_localize, Axis, GroundTruthMask, IntensityMap, MetricsReport,
    SearchGrid, TxEstimate,
};
pub use pipeline::{run_pipeline, PipelineReport};
pub use pws::{
    backpropagate, forward_propagate, pws_decompose, pws_recompose, single_frequency_image,
    ImageVolume, ImagingOperator, PlaneWaveSpectrum, Provenance,
};
pub use scene::{PointScatterer, ReflectivePlate, SceneDescription};

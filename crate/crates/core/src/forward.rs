//! Forward synthesis of planar scattered-field measurements: Hertzian
//! dipole illumination, Born single-bounce returns from scatterers and
//! facet-sampled plates, image-method double-bounce returns, hard-shadow
//! occlusion, parasitic clutter and optional complex Gaussian noise.

use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use crate::grids::{
    validate_components, FieldComponent, FrequencyGrid, MeasurementPlane, TxSource,
};
use crate::scene::{PointScatterer, ReflectivePlate, SceneDescription};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Scalar free-space Green's function `e^{-jkR} / (4 pi R)`.
#[inline]
pub fn greens(r: Vec3, r_src: Vec3, k: f64) -> Complex64 {
    let dist = r.distance(r_src);
    Complex64::from_polar(1.0 / (4.0 * PI * dist), -k * dist)
}

/// Full near-field electric field of a Hertzian dipole, including the
/// 1/R, 1/R^2 and 1/R^3 terms:
///
/// `E = e^{-jkR}/(4 pi) * [ k^2 (Rh x p) x Rh / R + (3 Rh (Rh.p) - p)(1/R^3 + jk/R^2) ]`
///
/// with `p = dipole_moment * polarization`. The vacuum impedance factor is
/// absorbed into the dipole moment; the field is linear in it.
pub fn dipole_field(src: &TxSource, r: Vec3, k: f64) -> Result<CVec3> {
    if r == src.position {
        return Err(Error::Degenerate(
            "dipole field evaluated at the source point".into(),
        ));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::invalid("wavenumber", "k must be positive"));
    }
    Ok(dipole_field_unchecked(src, r, k))
}

#[inline]
fn dipole_field_unchecked(src: &TxSource, r: Vec3, k: f64) -> CVec3 {
    let sep = r - src.position;
    let dist = sep.norm();
    let rh = sep * (1.0 / dist);
    let pol = src.polarization;

    let rh_dot_p = rh.dot(pol);
    // (Rh x p) x Rh = p - Rh (Rh.p)
    let transverse = pol - rh * rh_dot_p;
    let longitudinal = rh * (3.0 * rh_dot_p) - pol;

    let phase = Complex64::from_polar(1.0 / (4.0 * PI), -k * dist);
    let rad = Complex64::new(k * k / dist, 0.0);
    let near = Complex64::new(1.0 / (dist * dist * dist), k / (dist * dist));

    let fx = (rad * transverse.x + near * longitudinal.x) * phase;
    let fy = (rad * transverse.y + near * longitudinal.y) * phase;
    let fz = (rad * transverse.z + near * longitudinal.z) * phase;
    CVec3 {
        x: fx,
        y: fy,
        z: fz,
    }
    .scale(src.dipole_moment)
}

/// True when the open segment (a, b) is blocked by any plate.
pub fn is_occluded(a: Vec3, b: Vec3, plates: &[ReflectivePlate]) -> bool {
    plates.iter().any(|p| p.segment_crosses(a, b))
}

/// Image source for a reflection off the plate's infinite plane: position
/// mirrored, polarization tangential part kept and normal part negated,
/// moment scaled by the plate's reflection coefficient.
pub fn mirror_source(src: &TxSource, plate: &ReflectivePlate) -> Result<TxSource> {
    let n = plate.normal();
    let d = plate.signed_distance(src.position);
    if d.abs() < 1e-12 {
        return Err(Error::Degenerate(
            "source lies on the plate plane, cannot mirror".into(),
        ));
    }
    let position = src.position - n * (2.0 * d);
    let polarization = src.polarization - n * (2.0 * src.polarization.dot(n));
    Ok(TxSource {
        position,
        polarization,
        dipole_moment: src.dipole_moment * plate.reflection_coefficient(),
    })
}

/// Born sum over a set of point scatterers: each one reradiates its local
/// incident field through the scalar Green's function, gated by hard-shadow
/// visibility against `occluders` when `occlusion` is set.
fn born_sum(
    scatterers: &[PointScatterer],
    occluders: &[ReflectivePlate],
    src: &TxSource,
    r_m: Vec3,
    k: f64,
    occlusion: bool,
) -> CVec3 {
    let mut acc = CVec3::ZERO;
    for s in scatterers {
        if occlusion
            && (is_occluded(src.position, s.position, occluders)
                || is_occluded(s.position, r_m, occluders))
        {
            continue;
        }
        let e_inc = dipole_field_unchecked(src, s.position, k);
        let g = greens(r_m, s.position, k);
        acc = acc + e_inc.scale(s.reflectivity * g);
    }
    acc
}

/// Single-bounce scattered field of the scene's targets of interest
/// (point scatterers plus plate facets) at probe position `r_m`.
pub fn scattered_field_single_bounce(
    scene: &SceneDescription,
    src: &TxSource,
    r_m: Vec3,
    k: f64,
) -> CVec3 {
    let mut acc = born_sum(
        &scene.scatterers,
        &scene.plates,
        src,
        r_m,
        k,
        scene.occlusion_enabled,
    );
    for plate in &scene.plates {
        acc = acc
            + born_sum(
                &plate.facets(),
                &scene.plates,
                src,
                r_m,
                k,
                scene.occlusion_enabled,
            );
    }
    acc
}

/// Double-bounce scattered field via the image method: for every ordered
/// plate pair (A, B), the facets of B are illuminated by the source
/// mirrored across A. A facet contributes only if the segment from the
/// mirrored source to the facet crosses A's rectangle, i.e. the physical
/// bounce point lies on A. The path phase then equals the true
/// source -> A -> facet specular length by construction.
pub fn scattered_field_double_bounce(
    scene: &SceneDescription,
    src: &TxSource,
    r_m: Vec3,
    k: f64,
) -> CVec3 {
    let mut acc = CVec3::ZERO;
    if !scene.double_bounce_enabled || scene.plates.len() < 2 {
        return acc;
    }
    for (ia, plate_a) in scene.plates.iter().enumerate() {
        let mirrored = match mirror_source(src, plate_a) {
            Ok(m) => m,
            Err(_) => continue,
        };
        for (ib, plate_b) in scene.plates.iter().enumerate() {
            if ia == ib {
                continue;
            }
            for facet in plate_b.facets() {
                if !plate_a.segment_crosses(mirrored.position, facet.position) {
                    continue;
                }
                if scene.occlusion_enabled && is_occluded(facet.position, r_m, &scene.plates) {
                    continue;
                }
                let e_inc = dipole_field_unchecked(&mirrored, facet.position, k);
                let g = greens(r_m, facet.position, k);
                acc = acc + e_inc.scale(facet.reflectivity * g);
            }
        }
    }
    acc
}

/// Switches for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimulateOptions {
    /// Add the direct Tx field to the cube (otherwise scattered-only,
    /// i.e. ideal reference subtraction).
    pub include_incident: bool,
    /// Complex white Gaussian noise at this SNR relative to the mean
    /// scattered power over the whole cube; `None` disables noise.
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

/// Complex sampled fields indexed by (tx, frequency, component, plane sample).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataCube {
    values: Vec<Complex64>,
    grid: FrequencyGrid,
    plane: MeasurementPlane,
    tx_list: Vec<TxSource>,
    components: Vec<FieldComponent>,
    includes_incident: bool,
}

impl MeasurementDataCube {
    pub fn from_values(
        values: Vec<Complex64>,
        grid: FrequencyGrid,
        plane: MeasurementPlane,
        tx_list: Vec<TxSource>,
        components: Vec<FieldComponent>,
        includes_incident: bool,
    ) -> Result<Self> {
        validate_components(&components)?;
        let expect = tx_list.len() * grid.len() * components.len() * plane.num_samples();
        if values.len() != expect {
            return Err(Error::Inconsistent(format!(
                "cube has {} values, generating objects imply {}",
                values.len(),
                expect
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Inconsistent("cube contains non-finite values".into()));
        }
        Ok(MeasurementDataCube {
            values,
            grid,
            plane,
            tx_list,
            components,
            includes_incident,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.tx_list.len()
    }

    pub fn num_freqs(&self) -> usize {
        self.grid.len()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn num_samples(&self) -> usize {
        self.plane.num_samples()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn plane(&self) -> &MeasurementPlane {
        &self.plane
    }

    pub fn tx_list(&self) -> &[TxSource] {
        &self.tx_list
    }

    pub fn components(&self) -> &[FieldComponent] {
        &self.components
    }

    pub fn includes_incident(&self) -> bool {
        self.includes_incident
    }

    pub fn component_index(&self, c: FieldComponent) -> Option<usize> {
        self.components.iter().position(|&x| x == c)
    }

    #[inline]
    fn slice_offset(&self, n: usize, f: usize, p: usize) -> usize {
        ((n * self.grid.len() + f) * self.components.len() + p) * self.plane.num_samples()
    }

    /// Plane samples for (tx n, frequency f, component p), row-major (y, x).
    pub fn slice(&self, n: usize, f: usize, p: usize) -> &[Complex64] {
        let o = self.slice_offset(n, f, p);
        &self.values[o..o + self.plane.num_samples()]
    }

    pub fn value(&self, n: usize, f: usize, p: usize, m: usize) -> Complex64 {
        self.values[self.slice_offset(n, f, p) + m]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mean_power(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    /// Cube with every value multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }
}

/// Flattened scene pieces prepared once per simulation.
struct SceneKernel {
    toi: Vec<PointScatterer>,
    parasitic: Vec<PointScatterer>,
    /// Ordered plate pairs (a, b) for double bounce.
    plate_pairs: Vec<(usize, usize)>,
    /// Facet lists per plate, indexed like `scene.plates`.
    plate_facets: Vec<Vec<PointScatterer>>,
    /// Where each plate's facets start inside `toi`, so probe-visibility
    /// rows can be shared between the single- and double-bounce paths.
    plate_toi_offset: Vec<usize>,
}

impl SceneKernel {
    fn build(scene: &SceneDescription) -> Self {
        let plate_facets: Vec<Vec<PointScatterer>> =
            scene.plates.iter().map(|p| p.facets()).collect();
        let mut toi = scene.scatterers.clone();
        let mut plate_toi_offset = Vec::with_capacity(plate_facets.len());
        for facets in &plate_facets {
            plate_toi_offset.push(toi.len());
            toi.extend_from_slice(facets);
        }
        let mut plate_pairs = Vec::new();
        if scene.double_bounce_enabled {
            for a in 0..scene.plates.len() {
                for b in 0..scene.plates.len() {
                    if a != b {
                        plate_pairs.push((a, b));
                    }
                }
            }
        }
        SceneKernel {
            toi,
            parasitic: scene.parasitic.clone(),
            plate_pairs,
            plate_facets,
            plate_toi_offset,
        }
    }
}

/// Visibility masks shared across transmitters and frequencies.
struct VisibilityMasks {
    /// toi-scatterer -> probe-sample visibility, `[i * num_samples + m]`.
    toi_probe: Vec<bool>,
    parasitic_probe: Vec<bool>,
}

fn probe_visibility(
    scatterers: &[PointScatterer],
    plates: &[ReflectivePlate],
    samples: &[Vec3],
) -> Vec<bool> {
    scatterers
        .par_iter()
        .flat_map_iter(|s| {
            samples
                .iter()
                .map(move |&r_m| !is_occluded(s.position, r_m, plates))
                .collect::<Vec<bool>>()
        })
        .collect()
}

/// Synthesizes the measurement data cube `U[n][f][p][m]`: optional incident
/// field plus single-bounce, double-bounce and parasitic contributions at
/// every plane sample, with optional seeded complex Gaussian noise.
pub fn simulate(
    scene: &SceneDescription,
    tx_list: &[TxSource],
    grid: &FrequencyGrid,
    plane: &MeasurementPlane,
    components: &[FieldComponent],
    options: &SimulateOptions,
) -> Result<MeasurementDataCube> {
    validate_components(components)?;
    if tx_list.is_empty() {
        return Err(Error::invalid("tx list", "at least one transmitter required"));
    }
    for tx in tx_list {
        if (tx.position.z - plane.z_plane()).abs() < 1e-9 {
            return Err(Error::Degenerate(
                "transmitter lies on the measurement plane".into(),
            ));
        }
    }
    let kernel = SceneKernel::build(scene);
    for s in kernel.toi.iter().chain(kernel.parasitic.iter()) {
        if (s.position.z - plane.z_plane()).abs() < 1e-9 {
            return Err(Error::Degenerate(
                "scatterer lies on the measurement plane".into(),
            ));
        }
        for tx in tx_list {
            if s.position == tx.position {
                return Err(Error::Degenerate(
                    "scatterer coincides with a transmitter".into(),
                ));
            }
        }
    }

    let samples = plane.sample_positions();
    let num_samples = samples.len();
    let masks = if scene.occlusion_enabled {
        Some(VisibilityMasks {
            toi_probe: probe_visibility(&kernel.toi, &scene.plates, &samples),
            parasitic_probe: probe_visibility(&kernel.parasitic, &scene.plates, &samples),
        })
    } else {
        None
    };

    // Per-(tx, freq) slices computed independently; gathered in index order.
    let jobs: Vec<(usize, usize)> = (0..tx_list.len())
        .flat_map(|n| (0..grid.len()).map(move |f| (n, f)))
        .collect();

    let slices: Vec<Vec<Complex64>> = jobs
        .par_iter()
        .map(|&(n, f)| {
            simulate_slice(
                scene,
                &kernel,
                masks.as_ref(),
                &tx_list[n],
                grid.wavenumber(f),
                &samples,
                components,
                options.include_incident,
            )
        })
        .collect();

    // Mean scattered power for the noise level: recompute the scattered-only
    // field when the incident part is mixed in.
    let scattered_power: f64 = if options.noise_snr_db.is_some() && options.include_incident {
        let scat: Vec<Vec<Complex64>> = jobs
            .par_iter()
            .map(|&(n, f)| {
                simulate_slice(
                    scene,
                    &kernel,
                    masks.as_ref(),
                    &tx_list[n],
                    grid.wavenumber(f),
                    &samples,
                    components,
                    false,
                )
            })
            .collect();
        mean_power_of(&scat)
    } else {
        mean_power_of(&slices)
    };

    let mut values = Vec::with_capacity(jobs.len() * components.len() * num_samples);
    for slice in slices {
        values.extend_from_slice(&slice);
    }

    if let Some(snr_db) = options.noise_snr_db {
        if snr_db.is_finite() && scattered_power > 0.0 {
            let noise_var = scattered_power / 10f64.powf(snr_db / 10.0);
            let sigma = (noise_var / 2.0).sqrt();
            let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
            for v in &mut values {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *v += Complex64::new(sigma * re, sigma * im);
            }
        }
    }

    MeasurementDataCube::from_values(
        values,
        grid.clone(),
        plane.clone(),
        tx_list.to_vec(),
        components.to_vec(),
        options.include_incident,
    )
}

fn mean_power_of(slices: &[Vec<Complex64>]) -> f64 {
    let total: f64 = slices
        .iter()
        .flat_map(|s| s.iter())
        .map(|v| v.norm_sqr())
        .sum();
    let count: usize = slices.iter().map(|s| s.len()).sum();
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// One (tx, frequency) slice: `[component][sample]` flattened.
#[allow(clippy::too_many_arguments)]
fn simulate_slice(
    scene: &SceneDescription,
    kernel: &SceneKernel,
    masks: Option<&VisibilityMasks>,
    tx: &TxSource,
    k: f64,
    samples: &[Vec3],
    components: &[FieldComponent],
    include_incident: bool,
) -> Vec<Complex64> {
    let num_samples = samples.len();
    let mut field: Vec<CVec3> = vec![CVec3::ZERO; num_samples];

    // Single-bounce: weight each visible scatterer by its illuminated
    // field once, then spread through the Green's function.
    accumulate_born(
        &mut field,
        &kernel.toi,
        masks.map(|m| m.toi_probe.as_slice()),
        scene,
        tx,
        k,
        samples,
    );
    accumulate_born(
        &mut field,
        &kernel.parasitic,
        masks.map(|m| m.parasitic_probe.as_slice()),
        scene,
        tx,
        k,
        samples,
    );

    // Double bounce through mirrored sources, gated on the bounce point
    // lying on the first plate. Probe-side visibility rows are shared with
    // the single-bounce path since the reradiating facets are the same.
    let num_samples_total = samples.len();
    for &(ia, ib) in &kernel.plate_pairs {
        let plate_a = &scene.plates[ia];
        let mirrored = match mirror_source(tx, plate_a) {
            Ok(m) => m,
            Err(_) => continue,
        };
        for (j, facet) in kernel.plate_facets[ib].iter().enumerate() {
            if !plate_a.segment_crosses(mirrored.position, facet.position) {
                continue;
            }
            let weight = dipole_field_unchecked(&mirrored, facet.position, k)
                .scale(facet.reflectivity);
            let toi_idx = kernel.plate_toi_offset[ib] + j;
            let mask_row = masks.map(|m| {
                &m.toi_probe[toi_idx * num_samples_total..(toi_idx + 1) * num_samples_total]
            });
            spread_from(&mut field, facet.position, weight, k, samples, mask_row);
        }
    }

    if include_incident {
        for (m, &r_m) in samples.iter().enumerate() {
            field[m] = field[m] + dipole_field_unchecked(tx, r_m, k);
        }
    }

    let mut out = Vec::with_capacity(components.len() * num_samples);
    for &comp in components {
        out.extend(field.iter().map(|&v| comp.pick(v)));
    }
    out
}

fn accumulate_born(
    field: &mut [CVec3],
    scatterers: &[PointScatterer],
    probe_mask: Option<&[bool]>,
    scene: &SceneDescription,
    tx: &TxSource,
    k: f64,
    samples: &[Vec3],
) {
    let num_samples = samples.len();
    for (i, s) in scatterers.iter().enumerate() {
        if scene.occlusion_enabled && is_occluded(tx.position, s.position, &scene.plates) {
            continue;
        }
        let weight = dipole_field_unchecked(tx, s.position, k).scale(s.reflectivity);
        match probe_mask {
            Some(mask) => {
                let row = &mask[i * num_samples..(i + 1) * num_samples];
                for (m, &r_m) in samples.iter().enumerate() {
                    if row[m] {
                        let g = greens(r_m, s.position, k);
                        field[m] = field[m] + weight.scale(g);
                    }
                }
            }
            None => {
                for (m, &r_m) in samples.iter().enumerate() {
                    let g = greens(r_m, s.position, k);
                    field[m] = field[m] + weight.scale(g);
                }
            }
        }
    }
}

fn spread_from(
    field: &mut [CVec3],
    origin: Vec3,
    weight: CVec3,
    k: f64,
    samples: &[Vec3],
    visibility: Option<&[bool]>,
) {
    for (m, &r_m) in samples.iter().enumerate() {
        if let Some(mask) = visibility {
            if !mask[m] {
                continue;
            }
        }
        let g = greens(r_m, origin, k);
        field[m] = field[m] + weight.scale(g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::FrequencyGrid;

    fn k_at(f_ghz: f64) -> f64 {
        2.0 * PI * f_ghz * 1e9 / crate::grids::SPEED_OF_LIGHT
    }

    #[test]
    fn dipole_on_axis_is_purely_longitudinal() {
        let src = TxSource::y_dipole(Vec3::ZERO);
        let k = k_at(8.0);
        // observation along the dipole axis (y)
        let e = dipole_field(&src, Vec3::new(0.0, 0.3, 0.0), k).unwrap();
        assert!(e.x.norm() < 1e-18);
        assert!(e.z.norm() < 1e-18);
        assert!(e.y.norm() > 0.0);
    }

    #[test]
    fn dipole_far_zone_matches_radiation_term() {
        let src = TxSource::y_dipole(Vec3::ZERO);
        let k = k_at(8.0);
        let dist = 100.0 / k; // kR = 100
        let r = Vec3::new(dist, 0.0, 0.0); // broadside
        let e = dipole_field(&src, r, k).unwrap();
        // radiation-only oracle: k^2 (Rh x p) x Rh e^{-jkR} / (4 pi R)
        let rad = k * k / (4.0 * PI * dist);
        let rel = (e.norm() - rad).abs() / rad;
        assert!(rel < 0.02, "far-zone deviation {rel}");
    }

    #[test]
    fn dipole_is_linear_in_moment() {
        let mut src = TxSource::y_dipole(Vec3::new(0.1, -0.2, 0.3));
        let k = k_at(6.0);
        let r = Vec3::new(0.4, 0.2, 0.9);
        let e1 = dipole_field(&src, r, k).unwrap();
        src.dipole_moment = Complex64::new(2.0, 0.0);
        let e2 = dipole_field(&src, r, k).unwrap();
        assert!((e2.x - e1.x * Complex64::new(2.0, 0.0)).norm() < 1e-20);
        assert!((e2.y - e1.y * Complex64::new(2.0, 0.0)).norm() < 1e-20);
        assert!((e2.z - e1.z * Complex64::new(2.0, 0.0)).norm() < 1e-20);
    }

    #[test]
    fn dipole_rejects_source_point() {
        let src = TxSource::y_dipole(Vec3::ZERO);
        assert!(dipole_field(&src, Vec3::ZERO, 100.0).is_err());
    }

    fn plate_z0() -> ReflectivePlate {
        ReflectivePlate::pec(
            Vec3::new(-0.5, -0.5, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn mirror_across_z0_flips_z() {
        let src = TxSource::y_dipole(Vec3::new(0.0, 0.0, 0.4));
        let img = mirror_source(&src, &plate_z0()).unwrap();
        assert_eq!(img.position, Vec3::new(0.0, 0.0, -0.4));
        // y-polarization is tangent to the plane and survives
        assert_eq!(img.polarization, Vec3::new(0.0, 1.0, 0.0));
        // PEC plate: moment picks up gamma = -1
        assert_eq!(img.dipole_moment, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn mirror_twice_restores_position_with_gamma_squared() {
        let src = TxSource::new(
            Vec3::new(0.2, -0.1, 0.7),
            Vec3::new(0.6, 0.0, 0.8),
            Complex64::new(0.5, 0.5),
        )
        .unwrap();
        let plate = plate_z0();
        let twice = mirror_source(&mirror_source(&src, &plate).unwrap(), &plate).unwrap();
        assert!((twice.position - src.position).norm() < 1e-15);
        assert!((twice.polarization - src.polarization).norm() < 1e-15);
        let gamma2 = plate.reflection_coefficient() * plate.reflection_coefficient();
        assert!((twice.dipole_moment - src.dipole_moment * gamma2).norm() < 1e-15);
    }

    #[test]
    fn mirror_rejects_source_on_plane() {
        let src = TxSource::y_dipole(Vec3::new(0.1, 0.1, 0.0));
        assert!(mirror_source(&src, &plate_z0()).is_err());
    }

    #[test]
    fn empty_scene_scatters_nothing() {
        let scene = SceneDescription::default();
        let src = TxSource::y_dipole(Vec3::new(0.0, 0.0, 0.4));
        let e = scattered_field_single_bounce(&scene, &src, Vec3::new(0.0, 0.0, 1.0), k_at(8.0));
        assert_eq!(e.norm(), 0.0);
    }

    #[test]
    fn single_scatterer_matches_closed_form() {
        let pos = Vec3::new(0.05, -0.02, 0.0);
        let sigma = Complex64::new(0.8, 0.3);
        let scene = SceneDescription {
            scatterers: vec![PointScatterer::new(pos, sigma).unwrap()],
            ..Default::default()
        };
        let src = TxSource::y_dipole(Vec3::new(-0.25, 0.0, 0.25));
        let r_m = Vec3::new(0.1, 0.2, 1.0);
        let k = k_at(8.0);
        let got = scattered_field_single_bounce(&scene, &src, r_m, k);
        let expect = dipole_field(&src, pos, k)
            .unwrap()
            .scale(sigma * greens(r_m, pos, k));
        assert!((got.x - expect.x).norm() < 1e-18);
        assert!((got.y - expect.y).norm() < 1e-18);
        assert!((got.z - expect.z).norm() < 1e-18);
    }

    #[test]
    fn two_scatterers_superpose() {
        let s1 = PointScatterer::new(Vec3::new(0.1, 0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let s2 = PointScatterer::new(Vec3::new(-0.1, 0.05, 0.02), Complex64::new(0.0, 1.0)).unwrap();
        let src = TxSource::y_dipole(Vec3::new(0.0, 0.0, 0.4));
        let r_m = Vec3::new(0.0, -0.3, 1.0);
        let k = k_at(6.0);
        let both = SceneDescription {
            scatterers: vec![s1, s2],
            ..Default::default()
        };
        let only1 = SceneDescription {
            scatterers: vec![s1],
            ..Default::default()
        };
        let only2 = SceneDescription {
            scatterers: vec![s2],
            ..Default::default()
        };
        let e_both = scattered_field_single_bounce(&both, &src, r_m, k);
        let e_sum = scattered_field_single_bounce(&only1, &src, r_m, k)
            + scattered_field_single_bounce(&only2, &src, r_m, k);
        assert!((e_both.x - e_sum.x).norm() < 1e-20);
        assert!((e_both.y - e_sum.y).norm() < 1e-20);
    }

    #[test]
    fn occluded_scatterer_contributes_exactly_zero() {
        let scene = SceneDescription {
            scatterers: vec![
                PointScatterer::new(Vec3::new(0.0, 0.0, -0.2), Complex64::new(1.0, 0.0)).unwrap(),
            ],
            plates: vec![plate_z0()],
            occlusion_enabled: true,
            ..Default::default()
        };
        let src = TxSource::y_dipole(Vec3::new(0.0, 0.0, 0.4));
        // the scatterer sits behind the plate as seen from both the
        // transmitter and the whole upper half-space
        let direct = born_sum(
            &scene.scatterers,
            &scene.plates,
            &src,
            Vec3::new(0.2, 0.1, 1.0),
            k_at(8.0),
            true,
        );
        assert_eq!(direct.norm(), 0.0);
    }

    #[test]
    fn single_plate_has_no_double_bounce() {
        let scene = SceneDescription {
            plates: vec![plate_z0()],
            double_bounce_enabled: true,
            ..Default::default()
        };
        let src = TxSource::y_dipole(Vec3::new(0.0, 0.0, 0.4));
        let e = scattered_field_double_bounce(&scene, &src, Vec3::new(0.0, 0.0, 1.0), k_at(8.0));
        assert_eq!(e.norm(), 0.0);
    }

    fn small_grid() -> FrequencyGrid {
        FrequencyGrid::new(6e9, 10e9, 3).unwrap()
    }

    fn small_plane() -> MeasurementPlane {
        MeasurementPlane::new(1.0, -0.3, 0.3, -0.3, 0.3, 5, 5).unwrap()
    }

    #[test]
    fn simulate_produces_expected_shape() {
        let scene = SceneDescription {
            scatterers: vec![
                PointScatterer::new(Vec3::ZERO, Complex64::new(1.0, 0.0)).unwrap(),
            ],
            ..Default::default()
        };
        let tx = vec![TxSource::y_dipole(Vec3::new(-0.25, 0.0, 0.25))];
        let cube = simulate(
            &scene,
            &tx,
            &small_grid(),
            &small_plane(),
            &[FieldComponent::X, FieldComponent::Y],
            &SimulateOptions::default(),
        )
        .unwrap();
        assert_eq!(cube.num_tx(), 1);
        assert_eq!(cube.num_freqs(), 3);
        assert_eq!(cube.num_components(), 2);
        assert_eq!(cube.num_samples(), 25);
        assert_eq!(cube.values().len(), 150);
    }

    #[test]
    fn simulate_slice_agrees_with_per_sample_ops() {
        let sq = std::f64::consts::FRAC_1_SQRT_2;
        let scene = SceneDescription {
            scatterers: vec![
                PointScatterer::new(Vec3::new(0.05, 0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap(),
            ],
            // small 90 degree corner so the double-bounce path is exercised
            plates: vec![
                ReflectivePlate::pec(
                    Vec3::new(0.0, -0.1, -0.1),
                    Vec3::new(0.0, 0.2, 0.0),
                    Vec3::new(-sq * 0.2, 0.0, sq * 0.2),
                    20.0,
                )
                .unwrap(),
                ReflectivePlate::pec(
                    Vec3::new(0.0, -0.1, -0.1),
                    Vec3::new(0.0, 0.2, 0.0),
                    Vec3::new(sq * 0.2, 0.0, sq * 0.2),
                    20.0,
                )
                .unwrap(),
            ],
            occlusion_enabled: true,
            double_bounce_enabled: true,
            ..Default::default()
        };
        let tx = vec![TxSource::y_dipole(Vec3::new(-0.25, 0.0, 0.25))];
        let grid = small_grid();
        let plane = small_plane();
        let cube = simulate(
            &scene,
            &tx,
            &grid,
            &plane,
            &[FieldComponent::Y],
            &SimulateOptions::default(),
        )
        .unwrap();
        let k = grid.wavenumber(1);
        for (m, &r_m) in plane.sample_positions().iter().enumerate() {
            let expect = scattered_field_single_bounce(&scene, &tx[0], r_m, k).y
                + scattered_field_double_bounce(&scene, &tx[0], r_m, k).y;
            let got = cube.value(0, 1, 0, m);
            assert!(
                (got - expect).norm() <= 1e-12 * expect.norm(),
                "sample {m}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn empty_scene_without_incident_is_zero() {
        let cube = simulate(
            &SceneDescription::default(),
            &[TxSource::y_dipole(Vec3::new(0.0, 0.0, 0.4))],
            &small_grid(),
            &small_plane(),
            &[FieldComponent::X, FieldComponent::Y],
            &SimulateOptions {
                include_incident: false,
                noise_snr_db: None,
                seed: 7,
            },
        )
        .unwrap();
        assert!(cube.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn same_seed_gives_identical_cubes() {
        let scene = SceneDescription {
            scatterers: vec![
                PointScatterer::new(Vec3::ZERO, Complex64::new(1.0, 0.0)).unwrap(),
            ],
            ..Default::default()
        };
        let tx = vec![TxSource::y_dipole(Vec3::new(-0.25, 0.0, 0.25))];
        let opts = SimulateOptions {
            include_incident: false,
            noise_snr_db: Some(20.0),
            seed: 42,
        };
        let a = simulate(
            &scene,
            &tx,
            &small_grid(),
            &small_plane(),
            &[FieldComponent::Y],
            &opts,
        )
        .unwrap();
        let b = simulate(
            &scene,
            &tx,
            &small_grid(),
            &small_plane(),
            &[FieldComponent::Y],
            &opts,
        )
        .unwrap();
        assert_eq!(a.values(), b.values());

        let other = simulate(
            &scene,
            &tx,
            &small_grid(),
            &small_plane(),
            &[FieldComponent::Y],
            &SimulateOptions {
                seed: 43,
                ..opts
            },
        )
        .unwrap();
        assert_ne!(a.values(), other.values());
    }

    #[test]
    fn simulate_rejects_tx_on_plane() {
        let err = simulate(
            &SceneDescription::default(),
            &[TxSource::y_dipole(Vec3::new(0.0, 0.0, 1.0))],
            &small_grid(),
            &small_plane(),
            &[FieldComponent::Y],
            &SimulateOptions::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn noise_snr_is_roughly_honored() {
        let scene = SceneDescription {
            scatterers: vec![
                PointScatterer::new(Vec3::ZERO, Complex64::new(1.0, 0.0)).unwrap(),
            ],
            ..Default::default()
        };
        let tx = vec![TxSource::y_dipole(Vec3::new(-0.25, 0.0, 0.25))];
        let plane = MeasurementPlane::new(1.0, -0.5, 0.5, -0.5, 0.5, 21, 21).unwrap();
        let clean = simulate(
            &scene,
            &tx,
            &small_grid(),
            &plane,
            &[FieldComponent::Y],
            &SimulateOptions::default(),
        )
        .unwrap();
        let noisy = simulate(
            &scene,
            &tx,
            &small_grid(),
            &plane,
            &[FieldComponent::Y],
            &SimulateOptions {
                noise_snr_db: Some(10.0),
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let noise_power: f64 = clean
            .values()
            .iter()
            .zip(noisy.values())
            .map(|(c, n)| (n - c).norm_sqr())
            .sum::<f64>()
            / clean.values().len() as f64;
        let snr = 10.0 * (clean.mean_power() / noise_power).log10();
        assert!((snr - 10.0).abs() < 1.5, "measured snr {snr}");
    }
}

//! Plane-wave-spectrum decomposition and backpropagation.
//!
//! With the `e^{+j omega t}` convention a field sampled on the plane is
//! written as a superposition of plane waves `e^{-j(kx x + ky y + kz z)}`.
//! The analysis transform therefore uses the `e^{+j...}` kernel so that a
//! sampled wave with transverse wavenumber (kx0, ky0) lands in the bin at
//! (kx0, ky0), and backpropagation toward the sources (decreasing z)
//! multiplies each propagating bin by `e^{+j kz (z_ref - z_target)}`.

use crate::error::{Error, Result};
use crate::forward::MeasurementDataCube;
use crate::grids::{FieldComponent, ImagingVolume, MeasurementPlane};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Complex angular spectrum of one planar field sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveSpectrum {
    /// Bin amplitudes, row-major `[ky index][kx index]`.
    values: Vec<Complex64>,
    /// Transverse wavenumber grids in rad/m (standard DFT frequencies
    /// scaled by 2 pi / pitch, symmetric about zero).
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// Medium wavenumber the spectrum is valid for.
    k: f64,
    /// Plane of validity in meters.
    z_ref: f64,
}

impl PlaneWaveSpectrum {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    pub fn nx(&self) -> usize {
        self.kx.len()
    }

    pub fn ny(&self) -> usize {
        self.ky.len()
    }

    /// Longitudinal wavenumber for bin (qx, qy): `sqrt(k^2 - kx^2 - ky^2)`
    /// for propagating bins, `None` for evanescent ones.
    pub fn kz(&self, qx: usize, qy: usize) -> Option<f64> {
        let kt2 = self.kx[qx] * self.kx[qx] + self.ky[qy] * self.ky[qy];
        let kz2 = self.k * self.k - kt2;
        if kz2 >= 0.0 {
            Some(kz2.sqrt())
        } else {
            None
        }
    }

    /// Sum of |amplitude|^2 over propagating bins.
    pub fn propagating_power(&self) -> f64 {
        let mut total = 0.0;
        for qy in 0..self.ny() {
            for qx in 0..self.nx() {
                if self.kz(qx, qy).is_some() {
                    total += self.values[qy * self.nx() + qx].norm_sqr();
                }
            }
        }
        total
    }
}

/// Signed DFT frequency for index q of an n-point transform.
fn dft_freq(q: usize, n: usize) -> i64 {
    if q <= (n - 1) / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

fn k_grid(n: usize, pitch: f64) -> Vec<f64> {
    (0..n)
        .map(|q| 2.0 * PI * dft_freq(q, n) as f64 / (n as f64 * pitch))
        .collect()
}

/// 2-D DFT over a row-major (ny, nx) buffer. `inverse` selects the
/// `e^{+j...}` kernel; no normalization is applied.
fn fft2d(values: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    row_fft.process(values);

    let mut t = transpose(values, nx, ny);
    let col_fft = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    col_fft.process(&mut t);
    let back = transpose(&t, ny, nx);
    values.copy_from_slice(&back);
}

fn transpose(values: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            out[ix * ny + iy] = values[iy * nx + ix];
        }
    }
    out
}

/// Decomposes a sampled planar field (row-major (ny, nx)) into its plane-
/// wave spectrum at the plane's z level.
pub fn pws_decompose(
    plane_field: &[Complex64],
    plane: &MeasurementPlane,
    k: f64,
) -> Result<PlaneWaveSpectrum> {
    if plane_field.len() != plane.num_samples() {
        return Err(Error::Inconsistent(format!(
            "field has {} samples, plane expects {}",
            plane_field.len(),
            plane.num_samples()
        )));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::invalid("wavenumber", "k must be positive"));
    }
    let mut values = plane_field.to_vec();
    fft2d(&mut values, plane.nx(), plane.ny(), true);
    Ok(PlaneWaveSpectrum {
        values,
        kx: k_grid(plane.nx(), plane.dx()),
        ky: k_grid(plane.ny(), plane.dy()),
        k,
        z_ref: plane.z_plane(),
    })
}

/// Inverse of [`pws_decompose`]: synthesizes the sampled field back on the
/// original lattice at the spectrum's current z level.
pub fn pws_recompose(spectrum: &PlaneWaveSpectrum) -> Vec<Complex64> {
    let (nx, ny) = (spectrum.nx(), spectrum.ny());
    let mut values = spectrum.values.clone();
    fft2d(&mut values, nx, ny, false);
    let scale = 1.0 / (nx * ny) as f64;
    for v in &mut values {
        *v *= scale;
    }
    values
}

fn propagate(spectrum: &PlaneWaveSpectrum, z_target: f64) -> PlaneWaveSpectrum {
    let (nx, ny) = (spectrum.nx(), spectrum.ny());
    let dz = spectrum.z_ref - z_target;
    let mut out = spectrum.clone();
    for qy in 0..ny {
        for qx in 0..nx {
            let idx = qy * nx + qx;
            match spectrum.kz(qx, qy) {
                Some(kz) => {
                    out.values[idx] *= Complex64::from_polar(1.0, kz * dz);
                }
                None => {
                    out.values[idx] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    out.z_ref = z_target;
    out
}

/// Propagates the spectrum toward the sources (z_target at or below the
/// current plane). Evanescent bins are zeroed rather than amplified.
pub fn backpropagate(spectrum: &PlaneWaveSpectrum, z_target: f64) -> Result<PlaneWaveSpectrum> {
    if z_target > spectrum.z_ref {
        return Err(Error::invalid(
            "backpropagation target",
            format!(
                "z_target {} lies above the spectrum plane {}",
                z_target, spectrum.z_ref
            ),
        ));
    }
    Ok(propagate(spectrum, z_target))
}

/// Propagates the spectrum away from the sources (z_target at or above the
/// current plane); exact inverse of [`backpropagate`] on propagating bins.
pub fn forward_propagate(spectrum: &PlaneWaveSpectrum, z_target: f64) -> Result<PlaneWaveSpectrum> {
    if z_target < spectrum.z_ref {
        return Err(Error::invalid(
            "forward propagation target",
            format!(
                "z_target {} lies below the spectrum plane {}",
                z_target, spectrum.z_ref
            ),
        ));
    }
    Ok(propagate(spectrum, z_target))
}

/// Where an image came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SingleFrequency { tx: usize, freq: usize },
    Combined,
}

/// Complex voxel grid per Cartesian component. Unmeasured components are
/// zero-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    /// Row-major `[component][z][y][x]` over all three components.
    values: Vec<Complex64>,
    geometry: ImagingVolume,
    provenance: Provenance,
}

impl ImageVolume {
    pub fn zeros(geometry: ImagingVolume, provenance: Provenance) -> Self {
        let n = 3 * geometry.num_voxels();
        ImageVolume {
            values: vec![Complex64::new(0.0, 0.0); n],
            geometry,
            provenance,
        }
    }

    pub fn geometry(&self) -> &ImagingVolume {
        &self.geometry
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn component_offset(&self, comp: FieldComponent) -> usize {
        let p = match comp {
            FieldComponent::X => 0,
            FieldComponent::Y => 1,
            FieldComponent::Z => 2,
        };
        p * self.geometry.num_voxels()
    }

    pub fn value(&self, comp: FieldComponent, ix: usize, iy: usize, iz: usize) -> Complex64 {
        self.values[self.component_offset(comp) + self.geometry.voxel_index(ix, iy, iz)]
    }

    pub fn value_mut(
        &mut self,
        comp: FieldComponent,
        ix: usize,
        iy: usize,
        iz: usize,
    ) -> &mut Complex64 {
        let idx = self.component_offset(comp) + self.geometry.voxel_index(ix, iy, iz);
        &mut self.values[idx]
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    /// Vector magnitude `sqrt(sum_p |J_p|^2)` per voxel, `[z][y][x]`.
    pub fn vector_magnitude(&self) -> Vec<f64> {
        let nvox = self.geometry.num_voxels();
        let mut out = vec![0.0; nvox];
        for p in 0..3 {
            for (i, item) in out.iter_mut().enumerate() {
                *item += self.values[p * nvox + i].norm_sqr();
            }
        }
        for v in &mut out {
            *v = v.sqrt();
        }
        out
    }
}

/// Reconstruction settings tying a measurement plane to an imaging volume.
///
/// The image's x/y lattice is the plane lattice refined by `padding_factor`
/// (spectral zero-padding, i.e. bandlimited interpolation; a factor of 1
/// reproduces the plane lattice) and cropped to the volume window. The
/// volume axes must line up with that lattice.
#[derive(Debug, Clone)]
pub struct ImagingOperator {
    plane: MeasurementPlane,
    volume: ImagingVolume,
    padding_factor: usize,
    crop_x0: usize,
    crop_y0: usize,
}

impl ImagingOperator {
    pub fn new(
        plane: &MeasurementPlane,
        volume: &ImagingVolume,
        padding_factor: usize,
    ) -> Result<Self> {
        if padding_factor == 0 {
            return Err(Error::invalid("padding factor", "must be >= 1"));
        }
        let crop_x0 = align_axis(
            "x",
            plane.x_min(),
            plane.dx(),
            plane.nx() * padding_factor,
            volume.x.min,
            volume.x.pitch(),
            volume.x.count,
            padding_factor,
        )?;
        let crop_y0 = align_axis(
            "y",
            plane.y_min(),
            plane.dy(),
            plane.ny() * padding_factor,
            volume.y.min,
            volume.y.pitch(),
            volume.y.count,
            padding_factor,
        )?;
        for iz in 0..volume.z.count {
            if volume.z.coord(iz) > plane.z_plane() {
                return Err(Error::Inconsistent(format!(
                    "volume slice z = {} lies above the measurement plane z = {}",
                    volume.z.coord(iz),
                    plane.z_plane()
                )));
            }
        }
        Ok(ImagingOperator {
            plane: plane.clone(),
            volume: volume.clone(),
            padding_factor,
            crop_x0,
            crop_y0,
        })
    }

    pub fn volume(&self) -> &ImagingVolume {
        &self.volume
    }

    /// Reconstructs the (tx n, frequency f) single-frequency image: each
    /// measured component is decomposed into its plane-wave spectrum,
    /// backpropagated to every volume z slice, synthesized in space and
    /// cropped to the volume window.
    pub fn image(&self, cube: &MeasurementDataCube, n: usize, f: usize) -> Result<ImageVolume> {
        if n >= cube.num_tx() || f >= cube.num_freqs() {
            return Err(Error::Inconsistent(format!(
                "image index (tx {n}, freq {f}) outside cube dimensions ({}, {})",
                cube.num_tx(),
                cube.num_freqs()
            )));
        }
        if *cube.plane() != self.plane {
            return Err(Error::Inconsistent(
                "cube plane differs from the operator's plane".into(),
            ));
        }
        let k = cube.grid().wavenumber(f);
        let mut out = ImageVolume::zeros(
            self.volume.clone(),
            Provenance::SingleFrequency { tx: n, freq: f },
        );
        let pad = self.padding_factor;
        let (vnx, vny) = (self.volume.x.count, self.volume.y.count);

        for (p, &comp) in cube.components().iter().enumerate() {
            let spectrum = pws_decompose(cube.slice(n, f, p), &self.plane, k)?;
            // z slices are independent; compute cropped planes in parallel
            // and gather them in index order
            let planes: Vec<Vec<Complex64>> = (0..self.volume.z.count)
                .into_par_iter()
                .map(|iz| {
                    let z = self.volume.z.coord(iz);
                    let at_depth = propagate(&spectrum, z);
                    self.crop_synthesized(&at_depth, pad)
                })
                .collect();
            for (iz, plane_vals) in planes.iter().enumerate() {
                for iy in 0..vny {
                    for ix in 0..vnx {
                        *out.value_mut(comp, ix, iy, iz) = plane_vals[iy * vnx + ix];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Synthesizes the spectrum on the padded lattice and crops the
    /// volume's x/y window, row-major (y, x).
    fn crop_synthesized(&self, spectrum: &PlaneWaveSpectrum, pad: usize) -> Vec<Complex64> {
        let (mx, my) = (self.plane.nx() * pad, self.plane.ny() * pad);
        let field = synthesize_padded(spectrum, pad);
        let (vnx, vny) = (self.volume.x.count, self.volume.y.count);
        let mut out = Vec::with_capacity(vnx * vny);
        for iy in 0..vny {
            let src_row = (self.crop_y0 + iy) % my;
            for ix in 0..vnx {
                let src_col = (self.crop_x0 + ix) % mx;
                out.push(field[src_row * mx + src_col]);
            }
        }
        out
    }
}

/// Spatial synthesis with bandlimited interpolation: the spectrum is
/// embedded centered into a grid `pad` times larger per axis, then the
/// synthesis transform is applied with the original 1/(nx ny) scaling so
/// original lattice points keep their values exactly.
fn synthesize_padded(spectrum: &PlaneWaveSpectrum, pad: usize) -> Vec<Complex64> {
    let (nx, ny) = (spectrum.nx(), spectrum.ny());
    if pad == 1 {
        return pws_recompose(spectrum);
    }
    let (mx, my) = (nx * pad, ny * pad);
    let mut padded = vec![Complex64::new(0.0, 0.0); mx * my];
    for qy in 0..ny {
        let fy = dft_freq(qy, ny);
        for qx in 0..nx {
            let fx = dft_freq(qx, nx);
            let v = spectrum.values[qy * nx + qx];
            // Nyquist bins of even-sized axes are split between +- to keep
            // the interpolant symmetric.
            let xs: &[(i64, f64)] = if 2 * qx == nx {
                &[(fx, 0.5), (-fx, 0.5)]
            } else {
                &[(fx, 1.0)]
            };
            let ys: &[(i64, f64)] = if 2 * qy == ny {
                &[(fy, 0.5), (-fy, 0.5)]
            } else {
                &[(fy, 1.0)]
            };
            for &(yq, wy) in ys {
                let row = yq.rem_euclid(my as i64) as usize;
                for &(xq, wx) in xs {
                    let col = xq.rem_euclid(mx as i64) as usize;
                    padded[row * mx + col] += v * (wx * wy);
                }
            }
        }
    }
    fft2d(&mut padded, mx, my, false);
    let scale = 1.0 / (nx * ny) as f64;
    for v in &mut padded {
        *v *= scale;
    }
    padded
}

#[allow(clippy::too_many_arguments)]
fn align_axis(
    name: &str,
    plane_min: f64,
    plane_pitch: f64,
    lattice_len: usize,
    vol_min: f64,
    vol_pitch: f64,
    vol_count: usize,
    padding: usize,
) -> Result<usize> {
    let lattice_pitch = plane_pitch / padding as f64;
    if vol_count > 1 && (vol_pitch - lattice_pitch).abs() > 1e-9 * lattice_pitch {
        return Err(Error::Inconsistent(format!(
            "volume {name} pitch {vol_pitch} does not match the plane lattice pitch {lattice_pitch} (padding {padding})"
        )));
    }
    let offset = (vol_min - plane_min) / lattice_pitch;
    let rounded = offset.round();
    if (offset - rounded).abs() > 1e-6 {
        return Err(Error::Inconsistent(format!(
            "volume {name} origin {vol_min} is not on the plane lattice (offset {offset} samples)"
        )));
    }
    if rounded < 0.0 || rounded as usize + vol_count > lattice_len {
        return Err(Error::Inconsistent(format!(
            "volume {name} window exceeds the plane lattice extent"
        )));
    }
    Ok(rounded as usize)
}

/// Single-frequency inverse-source image for (tx n, frequency f); see
/// [`ImagingOperator::image`].
pub fn single_frequency_image(
    cube: &MeasurementDataCube,
    n: usize,
    f: usize,
    volume: &ImagingVolume,
    padding_factor: usize,
) -> Result<ImageVolume> {
    ImagingOperator::new(cube.plane(), volume, padding_factor)?.image(cube, n, f)
}

//! Coherent and incoherent superposition of single-frequency, single-Tx
//! images across frequencies and transmitter positions.
//!
//! The coherent sum applies, per voxel, a phase correction removing the
//! incident-path propagation phase (the return path is already compensated
//! by backpropagation), a magnitude correction compensating the incident
//! 1/R spreading, and the spectral weight `k_f * delta_k`. A true
//! scatterer's corrected phase is then stationary across frequencies and
//! transmitters, so its contributions add constructively while
//! configuration-dependent artifacts do not.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grids::{FrequencyGrid, ImagingVolume, TxSource};
use crate::pws::{ImageVolume, Provenance};
use num_complex::Complex64;
use rayon::prelude::*;

/// Incident-path phase correction `e^{+j k |r' - r_tx|}`; unit magnitude.
pub fn phase_correction(k: f64, tx: &TxSource, voxel: Vec3) -> Result<Complex64> {
    let d = voxel.distance(tx.position);
    if d == 0.0 {
        return Err(Error::Degenerate(
            "phase correction at the transmitter position".into(),
        ));
    }
    Ok(Complex64::from_polar(1.0, k * d))
}

/// Incident-path spreading compensation `|r' - r_tx|` in meters.
pub fn magnitude_correction(tx: &TxSource, voxel: Vec3) -> Result<f64> {
    let d = voxel.distance(tx.position);
    if d == 0.0 {
        return Err(Error::Degenerate(
            "magnitude correction at the transmitter position".into(),
        ));
    }
    Ok(d)
}

/// Per-(frequency, transmitter, voxel) correction terms and the spectral
/// weight. Corrections are identical for all field components. Values are
/// generated on demand; materializing them per voxel would be wasteful.
#[derive(Debug, Clone, Copy)]
pub struct CombineWeights<'a> {
    grid: &'a FrequencyGrid,
    txs: &'a [TxSource],
    delta_k: f64,
}

impl<'a> CombineWeights<'a> {
    pub fn new(grid: &'a FrequencyGrid, txs: &'a [TxSource]) -> Self {
        CombineWeights {
            grid,
            txs,
            delta_k: grid.delta_k(),
        }
    }

    /// Same weights but with the wavenumber spacing of a frequency subset.
    pub fn with_delta_k(grid: &'a FrequencyGrid, txs: &'a [TxSource], delta_k: f64) -> Self {
        CombineWeights {
            grid,
            txs,
            delta_k,
        }
    }

    pub fn psi(&self, f: usize, n: usize, voxel: Vec3) -> Result<Complex64> {
        phase_correction(self.grid.wavenumber(f), &self.txs[n], voxel)
    }

    pub fn mag(&self, n: usize, voxel: Vec3) -> Result<f64> {
        magnitude_correction(&self.txs[n], voxel)
    }

    /// Spectral weight `k_f * delta_k`.
    pub fn spectral(&self, f: usize) -> f64 {
        self.grid.wavenumber(f) * self.delta_k
    }
}

/// Combination mode selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Coherent,
    Incoherent,
}

/// Options for the coherent sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombineOptions {
    /// Apply the 1/R magnitude compensation (on by default; disabled for
    /// comparisons that require identical weighting).
    pub magnitude_correction: bool,
}

impl Default for CombineOptions {
    fn default() -> Self {
        CombineOptions {
            magnitude_correction: true,
        }
    }
}

/// Multi-frequency, multi-Tx combination result.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedImage {
    /// Complex sum per component, `[p][z][y][x]`; empty for incoherent
    /// combinations where only magnitudes are accumulated.
    values: Vec<Complex64>,
    /// Vector-magnitude intensity normalized to peak 1, `[z][y][x]`.
    intensity: Vec<f64>,
    /// Peak of the intensity before normalization; 0 for an empty image.
    raw_peak: f64,
    geometry: ImagingVolume,
    /// (tx, frequency) pairs included, in accumulation order.
    provenance: Vec<(usize, usize)>,
    empty: bool,
}

impl CombinedImage {
    /// Rebuilds a combined image from a stored intensity volume (complex
    /// values unavailable); the intensity is re-normalized to peak 1.
    pub fn from_intensity(
        intensity: Vec<f64>,
        geometry: ImagingVolume,
        provenance: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if intensity.len() != geometry.num_voxels() {
            return Err(Error::Inconsistent(format!(
                "intensity has {} voxels, geometry implies {}",
                intensity.len(),
                geometry.num_voxels()
            )));
        }
        if intensity.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Inconsistent(
                "intensity must be finite and non-negative".into(),
            ));
        }
        let raw_peak = intensity.iter().cloned().fold(0.0f64, f64::max);
        let empty = raw_peak == 0.0;
        let mut intensity = intensity;
        if !empty {
            for v in &mut intensity {
                *v /= raw_peak;
            }
        }
        Ok(CombinedImage {
            values: Vec::new(),
            intensity,
            raw_peak,
            geometry,
            provenance,
            empty,
        })
    }

    pub fn geometry(&self) -> &ImagingVolume {
        &self.geometry
    }

    /// Drops the complex per-component values, keeping the intensity map;
    /// frees most of the memory when only intensity metrics are needed.
    pub fn into_intensity_only(mut self) -> Self {
        self.values = Vec::new();
        self
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, p: usize, voxel: usize) -> Complex64 {
        self.values[p * self.geometry.num_voxels() + voxel]
    }

    /// Normalized intensity, `[z][y][x]`, peak exactly 1 unless empty.
    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn raw_peak(&self) -> f64 {
        self.raw_peak
    }

    pub fn provenance(&self) -> &[(usize, usize)] {
        &self.provenance
    }

    pub fn is_empty_image(&self) -> bool {
        self.empty
    }

    /// Flat voxel index of the intensity maximum.
    pub fn argmax(&self) -> usize {
        self.intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

fn check_images<'a>(
    images: &'a [ImageVolume],
    grid: &FrequencyGrid,
    num_tx: usize,
) -> Result<Vec<(usize, usize, &'a ImageVolume)>> {
    if images.is_empty() {
        return Err(Error::invalid("image set", "must be non-empty"));
    }
    let geom = images[0].geometry();
    let mut indexed = Vec::with_capacity(images.len());
    for img in images {
        if img.geometry() != geom {
            return Err(Error::Inconsistent(
                "images have mismatching volume geometry".into(),
            ));
        }
        match img.provenance() {
            Provenance::SingleFrequency { tx, freq } => {
                if freq >= grid.len() || tx >= num_tx {
                    return Err(Error::Inconsistent(format!(
                        "image provenance (tx {tx}, freq {freq}) outside grid/tx ranges"
                    )));
                }
                indexed.push((tx, freq, img));
            }
            Provenance::Combined => {
                return Err(Error::Inconsistent(
                    "already-combined image cannot enter a combination".into(),
                ));
            }
        }
    }
    indexed.sort_by_key(|&(n, f, _)| (n, f));
    for w in indexed.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(Error::Inconsistent(format!(
                "duplicate image for (tx {}, freq {})",
                w[0].0, w[0].1
            )));
        }
    }
    Ok(indexed)
}

fn combine_impl(
    indexed: &[(usize, usize, &ImageVolume)],
    weights: &CombineWeights<'_>,
    mode: CombineMode,
    options: &CombineOptions,
) -> Result<CombinedImage> {
    let geometry = indexed[0].2.geometry().clone();
    let nvox = geometry.num_voxels();

    // Tx -> voxel distances are frequency independent; compute once per
    // transmitter present in the set.
    let mut tx_ids: Vec<usize> = indexed.iter().map(|&(n, _, _)| n).collect();
    tx_ids.dedup();
    let distances: Vec<(usize, Vec<f64>)> = tx_ids
        .iter()
        .map(|&n| {
            let tx_pos = weights.txs[n].position;
            let d: Vec<f64> = (0..nvox)
                .map(|v| {
                    let (ix, iy, iz) = geometry.voxel_coords(v);
                    geometry.voxel_center(ix, iy, iz).distance(tx_pos)
                })
                .collect();
            (n, d)
        })
        .collect();
    let dist_of = |n: usize| -> &[f64] {
        &distances.iter().find(|(id, _)| *id == n).unwrap().1
    };

    let terms: Vec<(usize, f64, f64, &ImageVolume)> = indexed
        .iter()
        .map(|&(n, f, img)| (n, weights.grid.wavenumber(f), weights.spectral(f), img))
        .collect();

    let mut values = vec![Complex64::new(0.0, 0.0); 3 * nvox];
    let mut intensity = vec![0.0f64; nvox];

    match mode {
        CombineMode::Coherent => {
            // voxels are independent; per voxel the terms accumulate in
            // fixed (n, f) order so results are bit-reproducible
            let chunk = 4096;
            let acc: Vec<Vec<Complex64>> = (0..nvox)
                .collect::<Vec<_>>()
                .par_chunks(chunk)
                .map(|vox_chunk| {
                    let mut local = vec![Complex64::new(0.0, 0.0); 3 * vox_chunk.len()];
                    for &(n, k, w, img) in &terms {
                        let d = dist_of(n);
                        let img_vals = img.values();
                        for (ci, &v) in vox_chunk.iter().enumerate() {
                            let dist = d[v];
                            if dist == 0.0 {
                                // M -> 0 kills the term; skip to avoid the
                                // singular correction
                                continue;
                            }
                            let m = if options.magnitude_correction { dist } else { 1.0 };
                            let factor = Complex64::from_polar(m * w, k * dist);
                            for p in 0..3 {
                                local[p * vox_chunk.len() + ci] += factor * img_vals[p * nvox + v];
                            }
                        }
                    }
                    local
                })
                .collect();
            let mut base = 0;
            for local in &acc {
                let len = local.len() / 3;
                for p in 0..3 {
                    for ci in 0..len {
                        values[p * nvox + base + ci] = local[p * len + ci];
                    }
                }
                base += len;
            }
            for (v, item) in intensity.iter_mut().enumerate() {
                let s: f64 = (0..3).map(|p| values[p * nvox + v].norm_sqr()).sum();
                *item = s.sqrt();
            }
        }
        CombineMode::Incoherent => {
            for &(_, _, w, img) in &terms {
                let mag = img.vector_magnitude();
                for (item, m) in intensity.iter_mut().zip(mag) {
                    *item += w * m;
                }
            }
            values.clear();
        }
    }

    let raw_peak = intensity.iter().cloned().fold(0.0f64, f64::max);
    let empty = raw_peak == 0.0;
    if !empty {
        for v in &mut intensity {
            *v /= raw_peak;
        }
    }
    Ok(CombinedImage {
        values,
        intensity,
        raw_peak,
        geometry,
        provenance: indexed.iter().map(|&(n, f, _)| (n, f)).collect(),
        empty,
    })
}

/// Incremental combiner accepting one single-frequency image at a time in
/// ascending (tx, frequency) order. Produces results bit-identical to the
/// batch [`coherent_combine`] / [`incoherent_combine`] / [`subset_combine`]
/// calls while holding only the running sums, so full-scale pipelines never
/// keep the whole image stack in memory.
pub struct StreamingCombiner<'a> {
    grid: &'a FrequencyGrid,
    txs: &'a [TxSource],
    delta_k: f64,
    mode: CombineMode,
    options: CombineOptions,
    geometry: Option<ImagingVolume>,
    values: Vec<Complex64>,
    intensity: Vec<f64>,
    provenance: Vec<(usize, usize)>,
    dist_cache: Option<(usize, Vec<f64>)>,
}

impl<'a> StreamingCombiner<'a> {
    pub fn new(
        grid: &'a FrequencyGrid,
        txs: &'a [TxSource],
        mode: CombineMode,
        options: CombineOptions,
    ) -> Self {
        Self::with_delta_k(grid, txs, grid.delta_k(), mode, options)
    }

    /// Combiner using an explicit wavenumber spacing, for frequency
    /// subsets whose own uniform spacing differs from the parent grid's.
    pub fn with_delta_k(
        grid: &'a FrequencyGrid,
        txs: &'a [TxSource],
        delta_k: f64,
        mode: CombineMode,
        options: CombineOptions,
    ) -> Self {
        StreamingCombiner {
            grid,
            txs,
            delta_k,
            mode,
            options,
            geometry: None,
            values: Vec::new(),
            intensity: Vec::new(),
            provenance: Vec::new(),
            dist_cache: None,
        }
    }

    /// Adds one single-frequency image. Pushes must arrive in strictly
    /// ascending (tx, frequency) order so accumulation order is fixed.
    pub fn push(&mut self, image: &ImageVolume) -> Result<()> {
        let (n, f) = match image.provenance() {
            Provenance::SingleFrequency { tx, freq } => (tx, freq),
            Provenance::Combined => {
                return Err(Error::Inconsistent(
                    "already-combined image cannot enter a combination".into(),
                ))
            }
        };
        if f >= self.grid.len() || n >= self.txs.len() {
            return Err(Error::Inconsistent(format!(
                "image provenance (tx {n}, freq {f}) outside grid/tx ranges"
            )));
        }
        if let Some(&last) = self.provenance.last() {
            if (n, f) <= last {
                return Err(Error::Inconsistent(format!(
                    "images must arrive in ascending (tx, freq) order; got ({n}, {f}) after {last:?}"
                )));
            }
        }
        match &self.geometry {
            None => {
                let geometry = image.geometry().clone();
                let nvox = geometry.num_voxels();
                self.values = vec![Complex64::new(0.0, 0.0); 3 * nvox];
                self.intensity = vec![0.0; nvox];
                self.geometry = Some(geometry);
            }
            Some(geom) => {
                if image.geometry() != geom {
                    return Err(Error::Inconsistent(
                        "images have mismatching volume geometry".into(),
                    ));
                }
            }
        }
        let geometry = self.geometry.as_ref().unwrap();
        let nvox = geometry.num_voxels();
        self.provenance.push((n, f));

        match self.mode {
            CombineMode::Coherent => {
                if self.dist_cache.as_ref().map(|(id, _)| *id) != Some(n) {
                    let tx_pos = self.txs[n].position;
                    let d: Vec<f64> = (0..nvox)
                        .map(|v| {
                            let (ix, iy, iz) = geometry.voxel_coords(v);
                            geometry.voxel_center(ix, iy, iz).distance(tx_pos)
                        })
                        .collect();
                    self.dist_cache = Some((n, d));
                }
                let dist = &self.dist_cache.as_ref().unwrap().1;
                let k = self.grid.wavenumber(f);
                let w = k * self.delta_k;
                let use_mag = self.options.magnitude_correction;
                let img_vals = image.values();
                // parallel over disjoint voxel ranges; per voxel this is the
                // same single += as the batch path, so results match bitwise
                let chunk = 4096;
                for p in 0..3 {
                    let acc = &mut self.values[p * nvox..(p + 1) * nvox];
                    let src = &img_vals[p * nvox..(p + 1) * nvox];
                    acc.par_chunks_mut(chunk)
                        .zip(src.par_chunks(chunk))
                        .zip(dist.par_chunks(chunk))
                        .for_each(|((a_chunk, s_chunk), d_chunk)| {
                            for ((a, s), &d) in
                                a_chunk.iter_mut().zip(s_chunk).zip(d_chunk)
                            {
                                if d == 0.0 {
                                    continue;
                                }
                                let m = if use_mag { d } else { 1.0 };
                                *a += Complex64::from_polar(m * w, k * d) * s;
                            }
                        });
                }
            }
            CombineMode::Incoherent => {
                let w = self.grid.wavenumber(f) * self.delta_k;
                let mag = image.vector_magnitude();
                for (item, m) in self.intensity.iter_mut().zip(mag) {
                    *item += w * m;
                }
            }
        }
        Ok(())
    }

    /// Normalizes and returns the combined image.
    pub fn finish(mut self) -> Result<CombinedImage> {
        let geometry = self
            .geometry
            .take()
            .ok_or_else(|| Error::invalid("image set", "must be non-empty"))?;
        let nvox = geometry.num_voxels();
        match self.mode {
            CombineMode::Coherent => {
                for v in 0..nvox {
                    let s: f64 = (0..3).map(|p| self.values[p * nvox + v].norm_sqr()).sum();
                    self.intensity[v] = s.sqrt();
                }
            }
            CombineMode::Incoherent => {
                self.values.clear();
            }
        }
        let raw_peak = self.intensity.iter().cloned().fold(0.0f64, f64::max);
        let empty = raw_peak == 0.0;
        if !empty {
            for v in &mut self.intensity {
                *v /= raw_peak;
            }
        }
        Ok(CombinedImage {
            values: self.values,
            intensity: self.intensity,
            raw_peak,
            geometry,
            provenance: self.provenance,
            empty,
        })
    }
}

/// Coherent superposition over all images in the set:
/// `J_p(r') = sum_n sum_f psi * M * k_f * delta_k * J_p(k_f, n, r')`,
/// followed by one peak normalization of the vector-magnitude intensity.
pub fn coherent_combine(
    images: &[ImageVolume],
    grid: &FrequencyGrid,
    txs: &[TxSource],
    options: &CombineOptions,
) -> Result<CombinedImage> {
    let indexed = check_images(images, grid, txs.len())?;
    let weights = CombineWeights::new(grid, txs);
    combine_impl(&indexed, &weights, CombineMode::Coherent, options)
}

/// Incoherent baseline: magnitudes accumulate with the spectral weight
/// only, `I(r') = sum_n sum_f k_f delta_k sqrt(sum_p |J_p|^2)`.
pub fn incoherent_combine(
    images: &[ImageVolume],
    grid: &FrequencyGrid,
    txs: &[TxSource],
) -> Result<CombinedImage> {
    let indexed = check_images(images, grid, txs.len())?;
    let weights = CombineWeights::new(grid, txs);
    combine_impl(
        &indexed,
        &weights,
        CombineMode::Incoherent,
        &CombineOptions::default(),
    )
}

/// Combination restricted to frequency and transmitter index subsets. The
/// frequency subset must be uniformly spaced; its own spacing defines the
/// spectral weight (a single-frequency subset degenerates to delta_k = 1).
pub fn subset_combine(
    images: &[ImageVolume],
    grid: &FrequencyGrid,
    txs: &[TxSource],
    freq_subset: &[usize],
    tx_subset: &[usize],
    mode: CombineMode,
    options: &CombineOptions,
) -> Result<CombinedImage> {
    if freq_subset.is_empty() || tx_subset.is_empty() {
        return Err(Error::invalid("subset", "subsets must be non-empty"));
    }
    let mut freqs = freq_subset.to_vec();
    freqs.sort_unstable();
    freqs.dedup();
    let mut tx_ids = tx_subset.to_vec();
    tx_ids.sort_unstable();
    tx_ids.dedup();
    for &f in &freqs {
        if f >= grid.len() {
            return Err(Error::invalid("subset", format!("frequency index {f} out of range")));
        }
    }
    for &n in &tx_ids {
        if n >= txs.len() {
            return Err(Error::invalid("subset", format!("tx index {n} out of range")));
        }
    }
    let stride = if freqs.len() > 1 {
        let s = freqs[1] - freqs[0];
        for w in freqs.windows(2) {
            if w[1] - w[0] != s {
                return Err(Error::invalid(
                    "subset",
                    "frequency subset must be uniformly spaced",
                ));
            }
        }
        Some(s)
    } else {
        None
    };
    let delta_k = match stride {
        Some(s) => grid.delta_k() * s as f64,
        None => 1.0,
    };

    let mut picked: Vec<(usize, usize, &ImageVolume)> = Vec::new();
    for img in images {
        if let Provenance::SingleFrequency { tx, freq } = img.provenance() {
            if freqs.contains(&freq) && tx_ids.contains(&tx) {
                picked.push((tx, freq, img));
            }
        }
    }
    let expect = freqs.len() * tx_ids.len();
    if picked.len() != expect {
        return Err(Error::Inconsistent(format!(
            "subset needs {expect} images, found {}",
            picked.len()
        )));
    }
    picked.sort_by_key(|&(n, f, _)| (n, f));
    for w in picked.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(Error::Inconsistent("duplicate image in subset".into()));
        }
    }
    // geometry consistency enforced by the shared kernel path
    for &(_, _, img) in &picked {
        if img.geometry() != picked[0].2.geometry() {
            return Err(Error::Inconsistent(
                "images have mismatching volume geometry".into(),
            ));
        }
    }
    let weights = CombineWeights::with_delta_k(grid, txs, delta_k);
    combine_impl(&picked, &weights, mode, options)
}

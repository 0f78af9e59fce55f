//! File outputs: 16-bit PGM maps, raw float32 intensity volumes with text
//! sidecars, metrics CSV and the artifact manifest. All writers are
//! bit-reproducible for identical inputs.

use crate::combine::CombinedImage;
use crate::error::{Error, Result};
use crate::metrics::{IntensityMap, MetricsReport};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Maps a normalized intensity in [0, 1] to a 16-bit gray level through a
/// linear dB scale: `floor_db` maps to 0 and 0 dB to 65535.
fn db_to_gray(value: f64, floor_db: f64) -> u16 {
    if value <= 0.0 {
        return 0;
    }
    let db = (20.0 * value.log10()).clamp(floor_db, 0.0);
    let t = (db - floor_db) / (-floor_db);
    (t * 65535.0).round() as u16
}

/// Writes the map as binary PGM (P5, maxval 65535, big-endian, row-major)
/// plus a `.txt` sidecar recording the dB floor and the pixel pitch.
pub fn write_pgm(map: &IntensityMap, path: &Path, floor_db: f64) -> Result<()> {
    if !floor_db.is_finite() || floor_db >= 0.0 {
        return Err(Error::invalid("db floor", "must be negative"));
    }
    let mut bytes = Vec::with_capacity(32 + 2 * map.values.len());
    bytes.extend_from_slice(format!("P5\n{} {}\n65535\n", map.cols, map.rows).as_bytes());
    for &v in &map.values {
        bytes.extend_from_slice(&db_to_gray(v, floor_db).to_be_bytes());
    }
    write_bytes(path, &bytes)?;

    let sidecar = path.with_extension("txt");
    let meta = format!(
        "floor_db = {floor_db}\nrows = {}\ncols = {}\nrow_axis = {}\ncol_axis = {}\nrow_origin_m = {}\ncol_origin_m = {}\nrow_pitch_m = {}\ncol_pitch_m = {}\n",
        map.rows,
        map.cols,
        map.row_label,
        map.col_label,
        map.row_origin,
        map.col_origin,
        map.row_pitch,
        map.col_pitch,
    );
    write_bytes(&sidecar, meta.as_bytes())
}

/// Writes the normalized intensity volume as raw little-endian f32,
/// x-fastest, plus a key = value sidecar header (`.hdr`).
pub fn write_volume(image: &CombinedImage, path: &Path, provenance: &str) -> Result<()> {
    let geom = image.geometry();
    let mut bytes = Vec::with_capacity(4 * image.intensity().len());
    for &v in image.intensity() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_bytes(path, &bytes)?;

    let header = path.with_extension("hdr");
    let meta = format!(
        "format = raw_f32_le\norder = x_fastest\nnx = {}\nny = {}\nnz = {}\npitch_x_m = {}\npitch_y_m = {}\npitch_z_m = {}\norigin_x_m = {}\norigin_y_m = {}\norigin_z_m = {}\nprovenance = {}\n",
        geom.x.count,
        geom.y.count,
        geom.z.count,
        geom.x.pitch(),
        geom.y.pitch(),
        geom.z.pitch(),
        geom.x.min,
        geom.y.min,
        geom.z.min,
        provenance,
    );
    write_bytes(&header, meta.as_bytes())
}

/// Reads back a raw volume written by [`write_volume`].
pub fn read_volume(path: &Path) -> Result<(Vec<f32>, BTreeMap<String, String>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Inconsistent(format!(
            "{}: raw volume length {} is not a multiple of 4",
            path.display(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let header_path = path.with_extension("hdr");
    let text = fs::read_to_string(&header_path)
        .map_err(|e| Error::io(header_path.display().to_string(), e))?;
    let mut header = BTreeMap::new();
    for line in text.lines() {
        if let Some((key, value)) = line.split_once('=') {
            header.insert(key.trim().to_string(), value.trim().to_string());
        }
    }
    Ok((values, header))
}

/// Writes metric reports as UTF-8 CSV with a header row and '.' decimals.
pub fn write_metrics_csv(reports: &[MetricsReport], path: &Path) -> Result<()> {
    let mut out = String::from(
        "label,peak_x_m,peak_y_m,peak_z_m,localization_error_m,ghost_to_target_db,coverage,coverage_threshold_db,entropy\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.label,
            r.peak_position.x,
            r.peak_position.y,
            r.peak_position.z,
            r.localization_error_m,
            r.ghost_to_target_db,
            r.coverage,
            r.coverage_threshold_db,
            r.entropy,
        ));
    }
    write_bytes(path, out.as_bytes())
}

/// FNV-1a 64-bit content hash, printed as 16 hex digits.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Writes `manifest.txt` into `dir`: one `<hash>  <relative path>` line per
/// artifact, sorted by path. Returns the manifest path.
pub fn write_manifest(dir: &Path, files: &[PathBuf]) -> Result<PathBuf> {
    let mut entries: Vec<(String, u64)> = Vec::with_capacity(files.len());
    for f in files {
        let bytes = fs::read(f).map_err(|e| Error::io(f.display().to_string(), e))?;
        let rel = f
            .strip_prefix(dir)
            .unwrap_or(f)
            .to_string_lossy()
            .replace('\\', "/");
        entries.push((rel, fnv1a64(&bytes)));
    }
    entries.sort();
    let path = dir.join("manifest.txt");
    let mut file =
        fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for (rel, hash) in entries {
        writeln!(file, "{hash:016x}  {rel}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combine::{coherent_combine, CombineOptions};
    use crate::geom::Vec3;
    use crate::grids::{FieldComponent, FrequencyGrid, ImagingVolume, TxSource};
    use crate::metrics::{mip, Axis};
    use crate::pws::{ImageVolume, Provenance};
    use num_complex::Complex64;

    fn sample_image() -> CombinedImage {
        let vol = ImagingVolume::new(-0.1, 0.1, 2, -0.1, 0.1, 2, 0.0, 0.0, 1).unwrap();
        let grid = FrequencyGrid::new(8e9, 8e9, 1).unwrap();
        let txs = [TxSource::y_dipole(Vec3::new(0.0, 0.0, 10.0))];
        let mut img = ImageVolume::zeros(vol, Provenance::SingleFrequency { tx: 0, freq: 0 });
        for (i, v) in [0.0f64, 1.0, 0.5, 0.25].iter().enumerate() {
            *img.value_mut(FieldComponent::Y, i % 2, i / 2, 0) = Complex64::new(*v, 0.0);
        }
        coherent_combine(
            &[img],
            &grid,
            &txs,
            &CombineOptions {
                magnitude_correction: false,
            },
        )
        .unwrap()
    }

    #[test]
    fn pgm_has_p5_header_and_16bit_payload() {
        let dir = tempfile::tempdir().unwrap();
        let image = sample_image();
        let map = mip(&image, Axis::Z);
        let path = dir.path().join("map.pgm");
        write_pgm(&map, &path, -30.0).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header = b"P5\n2 2\n65535\n";
        assert!(bytes.starts_with(header));
        let payload = &bytes[header.len()..];
        assert_eq!(payload.len(), 8); // 4 pixels x 2 bytes
        // peak pixel (value 1.0 -> 0 dB) maps to max gray, big-endian
        let grays: Vec<u16> = payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(grays[0], 0); // zero intensity clamps to the floor
        assert_eq!(grays[1], 65535);
        assert!(grays[2] > grays[3]); // 0.5 brighter than 0.25
        assert!(path.with_extension("txt").exists());
    }

    #[test]
    fn volume_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let image = sample_image();
        let path = dir.path().join("vol.raw");
        write_volume(&image, &path, "test").unwrap();
        let (values, header) = read_volume(&path).unwrap();
        assert_eq!(values.len(), image.intensity().len());
        for (a, b) in values.iter().zip(image.intensity()) {
            assert_eq!(*a, *b as f32);
        }
        assert_eq!(header["nx"], "2");
        assert_eq!(header["provenance"], "test");
    }

    #[test]
    fn metrics_csv_has_header_and_stable_columns() {
        let dir = tempfile::tempdir().unwrap();
        let report = MetricsReport {
            label: "demo".into(),
            peak_position: Vec3::new(0.1, -0.2, 0.3),
            localization_error_m: 0.005,
            ghost_to_target_db: -12.5,
            coverage: 0.75,
            coverage_threshold_db: -10.0,
            entropy: 0.42,
        };
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&[report], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "label,peak_x_m,peak_y_m,peak_z_m,localization_error_m,ghost_to_target_db,coverage,coverage_threshold_db,entropy"
        );
        assert_eq!(lines.next().unwrap(), "demo,0.1,-0.2,0.3,0.005,-12.5,0.75,-10,0.42");
    }

    #[test]
    fn manifest_is_sorted_and_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("b_file.bin");
        let b = dir.path().join("a_file.bin");
        fs::write(&a, b"hello").unwrap();
        fs::write(&b, b"world").unwrap();
        let m1 = write_manifest(dir.path(), &[a.clone(), b.clone()]).unwrap();
        let text1 = fs::read_to_string(&m1).unwrap();
        let m2 = write_manifest(dir.path(), &[b, a]).unwrap();
        let text2 = fs::read_to_string(&m2).unwrap();
        assert_eq!(text1, text2);
        let lines: Vec<&str> = text1.lines().collect();
        assert!(lines[0].ends_with("a_file.bin"));
        assert!(lines[1].ends_with("b_file.bin"));
    }
}

//! On-disk formats.
//!
//! Array data is stored as a JSON manifest next to a flat little-endian
//! float32 payload, with a CRC32 over the payload bytes. Epoch payloads are
//! ordered `[epoch][channel][time]`, recordings `[channel][sample]`, and
//! plain matrices row-major. Score tables and reports are CSV.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Epoch, EpochSet, EventMarker, Recording};
use crate::stats::ScoreTable;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Payload filename for a manifest at `path`: same stem, `.bin` extension.
fn default_payload_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "payload".into());
    format!("{stem}.bin")
}

fn write_payload(dir: &Path, name: &str, values: impl Iterator<Item = f64>) -> Result<(u64, u32)> {
    let mut bytes: Vec<u8> = Vec::new();
    let mut count = 0u64;
    for v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
        count += 1;
    }
    let crc = crc32fast::hash(&bytes);
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(&bytes)?;
    Ok((count, crc))
}

fn read_payload(path: &Path, expected_count: u64, expected_crc: u32) -> Result<Vec<f32>> {
    let bytes = fs::read(path)?;
    if bytes.len() as u64 != expected_count * 4 {
        return Err(format_err(
            path,
            format!(
                "payload holds {} values, manifest declares {}",
                bytes.len() / 4,
                expected_count
            ),
        ));
    }
    let actual = crc32fast::hash(&bytes);
    if actual != expected_crc {
        return Err(Error::ChecksumMismatch {
            path: path.display().to_string(),
            expected: expected_crc,
            actual,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn resolve_payload(manifest_path: &Path, payload: &str) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(payload)
}

// ---------------------------------------------------------------------------
// EpochSet
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct EpochSetManifest {
    kind: String,
    rate_hz: f64,
    channel_names: Vec<String>,
    window_ms: (f64, f64),
    labels: Vec<String>,
    payload: String,
    element_count: u64,
    payload_crc32: u32,
}

/// Write an epoch set as `<stem>.json` manifest plus `<stem>.bin` payload.
pub fn write_epochset(set: &EpochSet, manifest_path: &Path) -> Result<()> {
    let payload = default_payload_name(manifest_path);
    write_epochset_named(set, manifest_path, &payload)
}

/// [`write_epochset`] with an explicit payload filename.
pub fn write_epochset_named(
    set: &EpochSet,
    manifest_path: &Path,
    payload_name: &str,
) -> Result<()> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let payload = payload_name.to_string();
    let values = set
        .epochs
        .iter()
        .flat_map(|e| (0..e.n_channels()).flat_map(move |c| (0..e.n_samples()).map(move |t| e.data[(c, t)])));
    let (count, crc) = write_payload(dir, &payload, values)?;
    let manifest = EpochSetManifest {
        kind: "epochset".into(),
        rate_hz: set.rate_hz,
        channel_names: set.channel_names.clone(),
        window_ms: set.window_ms,
        labels: set.epochs.iter().map(|e| e.label.clone()).collect(),
        payload,
        element_count: count,
        payload_crc32: crc,
    };
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Read an epoch set written by [`write_epochset`].
pub fn read_epochset(manifest_path: &Path) -> Result<EpochSet> {
    let manifest: EpochSetManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    if manifest.kind != "epochset" {
        return Err(format_err(
            manifest_path,
            format!("expected kind \"epochset\", found \"{}\"", manifest.kind),
        ));
    }
    let n_epochs = manifest.labels.len();
    let n_ch = manifest.channel_names.len();
    if n_epochs == 0 || n_ch == 0 {
        return Err(format_err(manifest_path, "empty epoch set"));
    }
    let per_epoch = manifest.element_count / n_epochs as u64;
    if per_epoch * n_epochs as u64 != manifest.element_count || per_epoch % n_ch as u64 != 0 {
        return Err(format_err(
            manifest_path,
            format!(
                "element count {} does not factor into {} epochs x {} channels",
                manifest.element_count, n_epochs, n_ch
            ),
        ));
    }
    let n_t = (per_epoch / n_ch as u64) as usize;
    let payload_path = resolve_payload(manifest_path, &manifest.payload);
    let raw = read_payload(&payload_path, manifest.element_count, manifest.payload_crc32)?;

    let bad: Vec<usize> = (0..n_epochs)
        .filter(|&i| {
            raw[i * n_ch * n_t..(i + 1) * n_ch * n_t]
                .iter()
                .any(|v| !v.is_finite())
        })
        .collect();
    if !bad.is_empty() {
        return Err(format_err(
            &payload_path,
            format!("non-finite values in epochs {bad:?}"),
        ));
    }

    let epochs = (0..n_epochs)
        .map(|i| {
            let base = i * n_ch * n_t;
            let data =
                DMatrix::from_fn(n_ch, n_t, |c, t| f64::from(raw[base + c * n_t + t]));
            Epoch {
                data,
                label: manifest.labels[i].clone(),
                onset_offset_ms: manifest.window_ms.0,
            }
        })
        .collect();
    EpochSet::new(
        epochs,
        manifest.rate_hz,
        manifest.channel_names,
        manifest.window_ms,
    )
}

// ---------------------------------------------------------------------------
// Recording
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    sample_index: usize,
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordingManifest {
    kind: String,
    rate_hz: f64,
    channel_names: Vec<String>,
    events: Vec<EventRecord>,
    payload: String,
    element_count: u64,
    payload_crc32: u32,
}

pub fn write_recording(rec: &Recording, manifest_path: &Path) -> Result<()> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let payload = default_payload_name(manifest_path);
    let (n_ch, n_s) = (rec.n_channels(), rec.n_samples());
    let values = (0..n_ch).flat_map(|c| (0..n_s).map(move |t| rec.data[(c, t)]));
    let (count, crc) = write_payload(dir, &payload, values)?;
    let manifest = RecordingManifest {
        kind: "recording".into(),
        rate_hz: rec.rate_hz,
        channel_names: rec.channel_names.clone(),
        events: rec
            .events
            .iter()
            .map(|e| EventRecord {
                sample_index: e.sample_index,
                label: e.label.clone(),
            })
            .collect(),
        payload,
        element_count: count,
        payload_crc32: crc,
    };
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_recording(manifest_path: &Path) -> Result<Recording> {
    let manifest: RecordingManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    if manifest.kind != "recording" {
        return Err(format_err(
            manifest_path,
            format!("expected kind \"recording\", found \"{}\"", manifest.kind),
        ));
    }
    let n_ch = manifest.channel_names.len();
    if n_ch == 0 || manifest.element_count % n_ch as u64 != 0 {
        return Err(format_err(
            manifest_path,
            format!(
                "element count {} does not factor into {} channels",
                manifest.element_count, n_ch
            ),
        ));
    }
    let n_s = (manifest.element_count / n_ch as u64) as usize;
    let payload_path = resolve_payload(manifest_path, &manifest.payload);
    let raw = read_payload(&payload_path, manifest.element_count, manifest.payload_crc32)?;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(format_err(&payload_path, "non-finite values in recording"));
    }
    let data = DMatrix::from_fn(n_ch, n_s, |c, t| f64::from(raw[c * n_s + t]));
    Recording::new(
        data,
        manifest.rate_hz,
        manifest.channel_names,
        manifest
            .events
            .into_iter()
            .map(|e| EventMarker {
                sample_index: e.sample_index,
                label: e.label,
            })
            .collect(),
    )
}

/// Peek at a manifest's `kind` field without loading the payload.
pub fn manifest_kind(manifest_path: &Path) -> Result<String> {
    #[derive(Deserialize)]
    struct Kind {
        kind: String,
    }
    let k: Kind = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    Ok(k.kind)
}

// ---------------------------------------------------------------------------
// Plain matrices (metric inputs)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct MatrixManifest {
    kind: String,
    rows: usize,
    cols: usize,
    payload: String,
    element_count: u64,
    payload_crc32: u32,
}

pub fn write_matrix(m: &DMatrix<f64>, manifest_path: &Path) -> Result<()> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let payload = default_payload_name(manifest_path);
    let values = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)]));
    let (count, crc) = write_payload(dir, &payload, values)?;
    let manifest = MatrixManifest {
        kind: "matrix".into(),
        rows: m.nrows(),
        cols: m.ncols(),
        payload,
        element_count: count,
        payload_crc32: crc,
    };
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn read_matrix_manifest(manifest_path: &Path) -> Result<DMatrix<f64>> {
    let manifest: MatrixManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    if manifest.kind != "matrix" {
        return Err(format_err(
            manifest_path,
            format!("expected kind \"matrix\", found \"{}\"", manifest.kind),
        ));
    }
    if manifest.element_count != (manifest.rows * manifest.cols) as u64 {
        return Err(format_err(
            manifest_path,
            "element count does not match rows x cols",
        ));
    }
    let payload_path = resolve_payload(manifest_path, &manifest.payload);
    let raw = read_payload(&payload_path, manifest.element_count, manifest.payload_crc32)?;
    Ok(DMatrix::from_fn(manifest.rows, manifest.cols, |r, c| {
        f64::from(raw[r * manifest.cols + c])
    }))
}

/// Read a numeric matrix from a `.json` manifest or a headerless CSV of
/// float rows, selected by file extension.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_matrix_manifest(path),
        _ => read_matrix_csv(path),
    }
}

fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.parse::<f64>()).collect();
        rows.push(row.map_err(|e| format_err(path, format!("bad float: {e}")))?);
    }
    let n = rows.len();
    if n == 0 {
        return Err(format_err(path, "empty matrix"));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(format_err(path, "ragged rows"));
    }
    Ok(DMatrix::from_fn(n, d, |r, c| rows[r][c]))
}

// ---------------------------------------------------------------------------
// Fitted Gaussians (FID inputs)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GaussianFile {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

pub fn write_gaussian(mean: &DVector<f64>, cov: &DMatrix<f64>, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let g = GaussianFile {
        mean: mean.iter().copied().collect(),
        cov: (0..cov.nrows())
            .map(|r| (0..cov.ncols()).map(|c| cov[(r, c)]).collect())
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&g)?)?;
    Ok(())
}

pub fn read_gaussian(path: &Path) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let g: GaussianFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let d = g.mean.len();
    if g.cov.len() != d || g.cov.iter().any(|r| r.len() != d) {
        return Err(format_err(path, "covariance is not d x d"));
    }
    Ok((
        DVector::from_vec(g.mean),
        DMatrix::from_fn(d, d, |r, c| g.cov[r][c]),
    ))
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

/// Read a `participant,category,value` CSV into a [`ScoreTable`].
pub fn read_score_table(path: &Path) -> Result<ScoreTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut triples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(format_err(path, "expected participant,category,value"));
        }
        let value: f64 = rec[2]
            .parse()
            .map_err(|e| format_err(path, format!("bad value: {e}")))?;
        triples.push((rec[0].to_string(), rec[1].to_string(), value));
    }
    ScoreTable::from_triples(triples)
}

pub fn write_score_table(table: &ScoreTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["participant", "category", "value"])?;
    for (p, c, v) in table.triples() {
        w.write_record([p.as_str(), c.as_str(), &format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `category,retained,rejected` rows.
pub fn write_rejection_report(
    rows: &[(String, usize, usize)],
    path: &Path,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["category", "retained", "rejected"])?;
    for (cat, kept, gone) in rows {
        w.write_record([cat.as_str(), &kept.to_string(), &gone.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `channel,f_value` rows.
pub fn write_fmap(rows: &[(String, f64)], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["channel", "f_value"])?;
    for (ch, f) in rows {
        w.write_record([ch.as_str(), &format!("{f}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `time_ms,<category>...` columns of averaged difference signals.
pub fn write_difference_signals(
    times_ms: &[f64],
    signals: &[(String, Vec<f64>)],
    path: &Path,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time_ms".to_string()];
    header.extend(signals.iter().map(|(c, _)| c.clone()));
    w.write_record(&header)?;
    for (i, t) in times_ms.iter().enumerate() {
        let mut row = vec![format!("{t}")];
        for (_, values) in signals {
            row.push(format!("{}", values[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read `metric,category,score` rows grouped by metric in file order.
pub fn read_metric_scores(path: &Path) -> Result<Vec<(String, Vec<(String, f64)>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out: Vec<(String, Vec<(String, f64)>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(format_err(path, "expected metric,category,score"));
        }
        let score: f64 = rec[2]
            .parse()
            .map_err(|e| format_err(path, format!("bad score: {e}")))?;
        let metric = rec[0].to_string();
        match out.iter_mut().find(|(m, _)| *m == metric) {
            Some((_, rows)) => rows.push((rec[1].to_string(), score)),
            None => out.push((metric, vec![(rec[1].to_string(), score)])),
        }
    }
    Ok(out)
}

/// Write ranked metric scores as `metric,category,score,rank`.
pub fn write_metric_report(report: &crate::metrics::MetricReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "category", "score", "rank"])?;
    for (metric, ranked) in &report.rankings {
        for r in ranked {
            w.write_record([
                metric.as_str(),
                r.category.as_str(),
                &format!("{}", r.score),
                &r.rank.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read rows of `category,correct` (0/1 or true/false) behavioral trials.
pub fn read_behavioral_log(path: &Path) -> Result<Vec<(String, bool)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(format_err(path, "expected category,correct"));
        }
        let correct = matches!(&rec[1].to_ascii_lowercase()[..], "1" | "true" | "yes");
        out.push((rec[0].to_string(), correct));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels;
    use tempfile::tempdir;

    fn small_set() -> EpochSet {
        let mk = |base: f64, label: &str| Epoch {
            data: DMatrix::from_fn(2, 4, |c, t| base + c as f64 * 10.0 + t as f64 * 0.25),
            label: label.into(),
            onset_offset_ms: 0.0,
        };
        EpochSet::new(
            vec![
                mk(1.0, "DCGAN"),
                mk(2.0, labels::STANDARD),
                mk(3.0, "PROGAN"),
            ],
            250.0,
            vec!["Pz".into(), "Oz".into()],
            (0.0, 16.0),
        )
        .unwrap()
    }

    #[test]
    fn epochset_round_trip_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("epochs.json");
        let set = small_set();
        write_epochset(&set, &path).unwrap();
        let back = read_epochset(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.rate_hz, set.rate_hz);
        assert_eq!(back.channel_names, set.channel_names);
        assert_eq!(back.window_ms, set.window_ms);
        for (a, b) in set.epochs.iter().zip(back.epochs.iter()) {
            assert_eq!(a.label, b.label);
            // values chosen exactly representable in f32
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn count_mismatch_is_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("epochs.json");
        write_epochset(&small_set(), &path).unwrap();
        // truncate the payload by one value
        let bin = dir.path().join("epochs.bin");
        let bytes = fs::read(&bin).unwrap();
        fs::write(&bin, &bytes[..bytes.len() - 4]).unwrap();
        match read_epochset(&path) {
            Err(Error::Format { reason, .. }) => assert!(reason.contains("payload holds")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_is_checksum_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("epochs.json");
        write_epochset(&small_set(), &path).unwrap();
        let bin = dir.path().join("epochs.bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes[0] ^= 0xff;
        fs::write(&bin, &bytes).unwrap();
        assert!(matches!(
            read_epochset(&path),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_payload_reports_epoch_indices() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("epochs.json");
        write_epochset(&small_set(), &path).unwrap();
        let bin = dir.path().join("epochs.bin");
        let mut bytes = fs::read(&bin).unwrap();
        // poison epoch 1 (values 8..16); write a NaN at value index 9
        bytes[9 * 4..10 * 4].copy_from_slice(&f32::NAN.to_le_bytes());
        // recompute nothing: checksum check comes first, so patch manifest crc
        let crc = crc32fast::hash(&bytes);
        fs::write(&bin, &bytes).unwrap();
        let manifest = fs::read_to_string(&path).unwrap();
        let mut m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        m["payload_crc32"] = serde_json::json!(crc);
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        match read_epochset(&path) {
            Err(Error::Format { reason, .. }) => assert!(reason.contains("[1]"), "{reason}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn recording_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rec.json");
        let rec = Recording::new(
            DMatrix::from_fn(2, 100, |c, t| (c * 100 + t) as f64),
            1000.0,
            vec!["Fz".into(), "Pz".into()],
            vec![EventMarker {
                sample_index: 10,
                label: "DCGAN".into(),
            }],
        )
        .unwrap();
        write_recording(&rec, &path).unwrap();
        let back = read_recording(&path).unwrap();
        assert_eq!(back.data, rec.data);
        assert_eq!(back.events, rec.events);
        assert_eq!(manifest_kind(&path).unwrap(), "recording");
    }

    #[test]
    fn matrix_csv_and_manifest_agree() {
        let dir = tempdir().unwrap();
        let csv_path = dir.path().join("m.csv");
        fs::write(&csv_path, "1.0,2.0\n3.0,4.0\n").unwrap();
        let from_csv = read_matrix(&csv_path).unwrap();
        let json_path = dir.path().join("m.json");
        write_matrix(&from_csv, &json_path).unwrap();
        let from_json = read_matrix(&json_path).unwrap();
        assert_eq!(from_csv, from_json);
        assert_eq!(from_csv[(1, 0)], 3.0);
    }
}

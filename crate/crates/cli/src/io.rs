//! File formats: IDX (raw or gzip), CSV outputs, JSON and hypernet checkpoints.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use hypertrain_core::algorithms::RunRecord;
use hypertrain_core::baselines::SurrogateComparison;
use hypertrain_core::data::idx::{dataset_from_idx, parse_images, parse_labels};
use hypertrain_core::data::Dataset;
use hypertrain_core::hypernets::{HyperNet, HyperNetFamily, HyperNetParams};
use hypertrain_core::Error as CoreError;

use crate::error::{CliError, CliResult};

/// Reads a file, inflating it first when the name ends in `.gz`.
pub fn read_maybe_gz(path: &Path) -> CliResult<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(|e| CliError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx(images: &Path, labels: &Path) -> CliResult<Dataset> {
    let img = read_maybe_gz(images)?;
    let lab = read_maybe_gz(labels)?;
    let data_err = |path: &Path, e: CoreError| CliError::Data { path: path.to_path_buf(), msg: e.to_string() };
    parse_images(&img).map_err(|e| data_err(images, e))?;
    parse_labels(&lab).map_err(|e| data_err(labels, e))?;
    // Both files parse on their own; what is left is a count mismatch.
    dataset_from_idx(&img, &lab).map_err(|e| data_err(labels, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data { path: path.to_path_buf(), msg: format!("{other:?}") },
    }
}

pub const RUN_CSV_HEADER: [&str; 6] = ["step", "train_loss", "valid_loss", "lambda_norm", "lambda_0", "seconds"];

pub fn write_run_csv(path: &Path, record: &RunRecord) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(RUN_CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for r in record.rows() {
        w.write_record([
            r.step.to_string(),
            r.train_loss.to_string(),
            r.valid_loss.to_string(),
            r.lambda_norm.to_string(),
            r.lambda_0.to_string(),
            r.seconds.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per (method, evaluation point).
pub fn write_errors_csv(path: &Path, cmp: &SurrogateComparison, lambda_dim: usize) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["method".to_string()];
    header.extend((0..lambda_dim).map(|i| format!("lambda_{i}")));
    header.extend(["true_loss", "predicted_loss", "error"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for m in &cmp.methods {
        for (i, lambda) in cmp.eval_lambdas.iter().enumerate() {
            let mut row = vec![m.method.clone()];
            row.extend(lambda.iter().map(|v| v.to_string()));
            row.push(cmp.true_losses[i].to_string());
            row.push(m.predicted[i].to_string());
            row.push(m.errors[i].to_string());
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summary types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Header line of a hypernet checkpoint; the payload that follows is
/// `n_params` little-endian `f64`s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    #[serde(flatten)]
    pub family: HyperNetFamily,
    pub lambda_dim: usize,
    pub theta_dim: usize,
    pub n_params: usize,
    pub seed: u64,
}

pub fn save_checkpoint(path: &Path, net: &HyperNet, phi: &HyperNetParams, seed: u64) -> CliResult<()> {
    let spec = net.spec();
    let header = CheckpointHeader {
        family: spec.family,
        lambda_dim: spec.lambda_dim,
        theta_dim: spec.theta_dim,
        n_params: phi.len(),
        seed,
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    bytes.reserve(phi.len() * 8);
    for v in phi.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| CliError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> CliResult<(CheckpointHeader, HyperNetParams)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: String| CliError::Data { path: path.to_path_buf(), msg };
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(format!("bad header: {e}")))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != header.n_params * 8 {
        return Err(bad(format!("payload has {} bytes, header declares {} values", payload.len(), header.n_params)));
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, HyperNetParams::from_vec(values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use hypertrain_core::data::idx::{encode_images, encode_labels};
    use hypertrain_core::hypernets::HyperNetSpec;

    #[test]
    fn gz_and_raw_idx_load_identically() {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..2 * 9).map(|i| (i * 13) as u8).collect();
        let img = encode_images(3, 3, &pixels);
        let lab = encode_labels(&[4, 7]);
        fs::write(dir.path().join("i.idx"), &img).unwrap();
        fs::write(dir.path().join("l.idx"), &lab).unwrap();
        for (name, data) in [("i.idx.gz", &img), ("l.idx.gz", &lab)] {
            let mut enc = GzEncoder::new(Vec::new(), Compression::default());
            enc.write_all(data).unwrap();
            fs::write(dir.path().join(name), enc.finish().unwrap()).unwrap();
        }
        let raw = load_idx(&dir.path().join("i.idx"), &dir.path().join("l.idx")).unwrap();
        let gz = load_idx(&dir.path().join("i.idx.gz"), &dir.path().join("l.idx.gz")).unwrap();
        assert_eq!(raw, gz);
        assert_eq!(raw.features().get(1, 0), f64::from(pixels[9]) / 255.0);
    }

    #[test]
    fn missing_file_is_io() {
        let err = read_maybe_gz(Path::new("/nonexistent/x.gz")).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_IO);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.ckpt");
        let net =
            HyperNet::new(HyperNetSpec { family: HyperNetFamily::Mlp { hidden: 3 }, lambda_dim: 2, theta_dim: 4 })
                .unwrap();
        let phi = net.init(&[0.5, -1.0, 2.0, 0.0], &[0.1, 0.2], 3).unwrap();
        save_checkpoint(&path, &net, &phi, 3).unwrap();
        let (header, back) = load_checkpoint(&path).unwrap();
        assert_eq!(back, phi);
        assert_eq!(header.family, HyperNetFamily::Mlp { hidden: 3 });
        assert_eq!(header.n_params, net.n_params());
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}

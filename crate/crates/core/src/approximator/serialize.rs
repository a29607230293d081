//! Parameter files: a flat little-endian `f64` blob in layer order (each
//! layer's weights row-major, then its biases) next to a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Activation, DenseNet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetManifest {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// SHA-256 of the parameter blob, hex encoded.
    pub checksum: String,
}

pub(crate) fn f64_blob(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub(crate) fn parse_f64_blob(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::invalid("parameter blob length is not a multiple of 8"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub(crate) fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_net(stem: &Path, net: &DenseNet) -> Result<NetManifest> {
    let blob = f64_blob(net.params());
    let manifest = NetManifest {
        layer_sizes: net.layer_sizes().to_vec(),
        activation: net.activation(),
        checksum: checksum(&blob),
    };
    let bin = with_ext(stem, ".bin");
    fs::write(&bin, &blob).map_err(|e| Error::io(&bin, e))?;
    let json = with_ext(stem, ".json");
    fs::write(&json, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&json, e))?;
    Ok(manifest)
}

pub fn read_net(stem: &Path) -> Result<DenseNet> {
    let json = with_ext(stem, ".json");
    let text = fs::read(&json).map_err(|e| Error::io(&json, e))?;
    let manifest: NetManifest = serde_json::from_slice(&text)?;
    let bin = with_ext(stem, ".bin");
    let blob = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if checksum(&blob) != manifest.checksum {
        return Err(Error::Schema(format!("checksum mismatch for {}", bin.display())));
    }
    DenseNet::from_params(&manifest.layer_sizes, manifest.activation, parse_f64_blob(&blob)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn blob_layout_is_weights_then_biases_per_layer() {
        let mut net = DenseNet::zeros(&[2, 1, 1], Activation::Relu).unwrap();
        net.set_weight(0, 0, 0, 1.0);
        net.set_weight(0, 0, 1, 2.0);
        net.set_bias(0, 0, 3.0);
        net.set_weight(1, 0, 0, 4.0);
        net.set_bias(1, 0, 5.0);
        let values = parse_f64_blob(&f64_blob(net.params())).unwrap();
        assert_eq!(values, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(&f64_blob(&[1.0])[..], &1.0f64.to_le_bytes()[..]);
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let net = DenseNet::new(&[3, 5, 2], Activation::Softplus, &mut rng).unwrap();
        let stem = dir.path().join("policy");
        write_net(&stem, &net).unwrap();
        assert_eq!(read_net(&stem).unwrap(), net);

        let bin = dir.path().join("policy.bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes[0] ^= 1;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(read_net(&stem), Err(Error::Schema(_))));
    }
}

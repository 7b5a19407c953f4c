//! Binary weight container.
//!
//! ```text
//! magic   b"HSCK"
//! version u32 LE (1)
//! count   u32 LE, number of layers
//! table   per layer: kind u8 (0 pool, 1 fixed conv, 2 learned conv), 3 zero bytes,
//!         out, in, kh, kw as u32 LE (zero for pool layers)
//! data    per conv layer in table order: out*in*kh*kw f32 LE, [out][in][ky][kx]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{LayerConfig, Network, NetworkConfig, WeightInit};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"HSCK";
pub const CHECKPOINT_VERSION: u32 = 1;

fn kind_of(layer: &LayerConfig) -> u8 {
    match layer {
        LayerConfig::Pool(_) => 0,
        LayerConfig::Conv(c) if c.weights == WeightInit::Edge => 1,
        LayerConfig::Conv(_) => 2,
    }
}

pub fn write_checkpoint<W: Write>(network: &Network, mut w: W) -> Result<()> {
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(network.config.layers.len() as u32).to_le_bytes())?;
    for (layer, kernel) in network.config.layers.iter().zip(&network.kernels) {
        w.write_all(&[kind_of(layer), 0, 0, 0])?;
        let dims = kernel
            .as_ref()
            .map_or([0; 4], |k| [k.out_features, k.in_features, k.height, k.width]);
        for d in dims {
            w.write_all(&u32::from(d).to_le_bytes())?;
        }
    }
    for k in network.kernels.iter().flatten() {
        let mut bytes = Vec::with_capacity(k.len() * 4);
        for v in &k.weights {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

/// Read weights and check them against the layer table implied by `config`.
pub fn read_checkpoint<R: Read>(config: NetworkConfig, mut r: R) -> Result<Network> {
    config.validate()?;
    let mut magic = [0; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("file too short for magic".into()))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r)? as usize;
    if count != config.layers.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {count} layers, network config has {}",
            config.layers.len()
        )));
    }
    // the expected shapes come from a fresh network of the same config
    let template = Network::new(config.clone(), 0)?;
    for (i, (layer, kernel)) in config.layers.iter().zip(&template.kernels).enumerate() {
        let mut kind = [0; 4];
        r.read_exact(&mut kind)
            .map_err(|_| Error::Checkpoint("truncated layer table".into()))?;
        let dims = [
            read_u32(&mut r)?,
            read_u32(&mut r)?,
            read_u32(&mut r)?,
            read_u32(&mut r)?,
        ];
        let expected = kernel.as_ref().map_or([0; 4], |k| {
            [k.out_features, k.in_features, k.height, k.width].map(u32::from)
        });
        if kind[0] != kind_of(layer) || dims != expected {
            return Err(Error::Checkpoint(format!(
                "layer {i}: checkpoint kind {} shape {dims:?}, network expects kind {} shape {expected:?}",
                kind[0],
                kind_of(layer)
            )));
        }
    }
    let mut kernels = template.kernels;
    for k in kernels.iter_mut().flatten() {
        let mut bytes = vec![0; k.len() * 4];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Checkpoint("truncated weight data".into()))?;
        for (w, b) in k.weights.iter_mut().zip(bytes.chunks_exact(4)) {
            *w = f32::from_le_bytes(b.try_into().expect("4-byte chunk"));
        }
    }
    let mut rest = [0; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after weight data".into()));
    }
    Ok(Network { config, kernels })
}

pub fn save_checkpoint(network: &Network, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::path(path, e))?;
    write_checkpoint(network, BufWriter::new(f))
}

pub fn load_checkpoint(config: NetworkConfig, path: &Path) -> Result<Network> {
    let f = File::open(path).map_err(|e| Error::path(path, e))?;
    read_checkpoint(config, BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Network::face(9);
        let mut bytes = Vec::new();
        write_checkpoint(&net, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"HSCK");
        let header = 4 + 4 + 4 + 5 * 20;
        let weights = (4 * 25 + 36 * 4 * 25 + 36 * 49) * 4;
        assert_eq!(bytes.len(), header + weights);
        assert_eq!(read_checkpoint(NetworkConfig::face(), bytes.as_slice()).unwrap(), net);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut bytes = Vec::new();
        write_checkpoint(&Network::face(0), &mut bytes).unwrap();
        let err = read_checkpoint(NetworkConfig::multi_class(2), bytes.as_slice()).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)), "{err}");
    }

    #[test]
    fn truncation_and_bad_magic_are_rejected() {
        let mut bytes = Vec::new();
        write_checkpoint(&Network::face(0), &mut bytes).unwrap();
        assert!(read_checkpoint(NetworkConfig::face(), &bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(read_checkpoint(NetworkConfig::face(), bytes.as_slice()).is_err());
    }
}

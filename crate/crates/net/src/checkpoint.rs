//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//! `magic[8] | version u32 | config_len u32 | config JSON | digest[32] |
//! hyper_len u32 | hyper JSON | step u64 | param_count u64 | f32 params`.
//! The digest is SHA-256 of the config JSON; parameters follow
//! [`Network::parameters`] order.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::{NetConfig, TrainHyper};
use crate::error::NetError;
use crate::network::Network;

pub const MAGIC: [u8; 8] = *b"SLAPNET\0";
pub const VERSION: u32 = 1;

/// Hex SHA-256 of the canonical JSON form of `config`.
pub fn config_digest(config: &NetConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex(&Sha256::digest(&json))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub net: Network<f32>,
    pub hyper: TrainHyper,
    pub step: u64,
}

pub fn encode(net: &Network<f32>, hyper: &TrainHyper, step: u64) -> Vec<u8> {
    let config = serde_json::to_vec(net.config()).expect("config serializes");
    let hyper = serde_json::to_vec(hyper).expect("hyper serializes");
    let mut out = Vec::with_capacity(64 + config.len() + hyper.len() + 4 * net.parameter_count());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&Sha256::digest(&config));
    out.extend_from_slice(&(hyper.len() as u32).to_le_bytes());
    out.extend_from_slice(&hyper);
    out.extend_from_slice(&step.to_le_bytes());
    out.extend_from_slice(&(net.parameter_count() as u64).to_le_bytes());
    for p in net.parameters() {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NetError> {
        if self.buf.len() < n {
            return Err(NetError::Checkpoint(format!("truncated while reading {what}")));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self, what: &str) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, NetError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8], expected: Option<&NetConfig>) -> Result<Checkpoint, NetError> {
    let mut r = Reader { buf: bytes };
    if r.take(8, "magic")? != MAGIC {
        return Err(NetError::Checkpoint("bad magic bytes".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(NetError::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let len = r.u32("config length")? as usize;
    let config_json = r.take(len, "config")?;
    let digest = r.take(32, "config digest")?;
    if Sha256::digest(config_json).as_slice() != digest {
        return Err(NetError::Checkpoint("config digest does not match".into()));
    }
    let config: NetConfig = serde_json::from_slice(config_json)
        .map_err(|e| NetError::Checkpoint(format!("config: {e}")))?;
    if let Some(want) = expected {
        if *want != config {
            return Err(NetError::ConfigMismatch {
                expected: serde_json::to_string(want).expect("config serializes"),
                found: serde_json::to_string(&config).expect("config serializes"),
            });
        }
    }
    let len = r.u32("hyper length")? as usize;
    let hyper: TrainHyper = serde_json::from_slice(r.take(len, "hyper")?)
        .map_err(|e| NetError::Checkpoint(format!("hyper: {e}")))?;
    let step = r.u64("step")?;
    let count = r.u64("parameter count")? as usize;
    let mut net =
        Network::<f32>::new(config, 0).map_err(|e| NetError::Checkpoint(format!("config: {e}")))?;
    if count != net.parameter_count() {
        return Err(NetError::Checkpoint(format!(
            "{count} parameters stored, architecture has {}",
            net.parameter_count()
        )));
    }
    let data = r.take(4 * count, "parameters")?;
    let mut values = data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    for p in net.parameters_mut() {
        p.iter_mut().for_each(|v| *v = values.next().expect("length checked"));
    }
    if !r.buf.is_empty() {
        return Err(NetError::Checkpoint(format!("{} trailing bytes", r.buf.len())));
    }
    Ok(Checkpoint { net, hyper, step })
}

pub fn save(path: &Path, net: &Network<f32>, hyper: &TrainHyper, step: u64) -> Result<(), NetError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&encode(net, hyper, step))?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint, NetError> {
    decode(&fs::read(path)?, None)
}

/// Like [`load`], failing with [`NetError::ConfigMismatch`] if the stored
/// architecture differs from `expected`.
pub fn load_expecting(path: &Path, expected: &NetConfig) -> Result<Checkpoint, NetError> {
    decode(&fs::read(path)?, Some(expected))
}

//! `*.bclckpt` files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "BCLCKPT1"            8 bytes
//! metadata length       u64
//! metadata              UTF-8 JSON
//! payload length        u64, number of f64 values
//! payload               f64 × n, layer-ordered
//! CRC-32 of payload     u32
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};
use crate::nn::{Network, NetworkSpec, Parameters};
use crate::ppo::PpoModel;

pub const MAGIC: &[u8; 8] = b"BCLCKPT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkRole {
    Q,
    Policy,
    Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub role: NetworkRole,
    pub spec: NetworkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    /// `dqn` or `ppo`.
    pub trainer: String,
    pub networks: Vec<NetworkEntry>,
    #[serde(default)]
    pub eps_history: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub env: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl CheckpointMeta {
    /// Number of payload values the listed networks occupy.
    pub fn expected_len(&self) -> usize {
        self.networks.iter().map(|n| n.spec.parameter_count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub payload: Vec<f64>,
}

/// A trained agent of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Dqn(Network),
    Ppo(PpoModel),
}

impl TrainedModel {
    /// The network whose argmax acts and which evaluation attacks target.
    pub fn scores(&self) -> &Network {
        match self {
            TrainedModel::Dqn(n) => n,
            TrainedModel::Ppo(m) => &m.policy,
        }
    }

    pub fn to_checkpoint(&self, eps_history: Vec<f64>, seeds: Vec<u64>, env: Option<String>) -> Checkpoint {
        let (trainer, nets): (&str, Vec<(NetworkRole, &Network)>) = match self {
            TrainedModel::Dqn(n) => ("dqn", vec![(NetworkRole::Q, n)]),
            TrainedModel::Ppo(m) => (
                "ppo",
                vec![(NetworkRole::Policy, &m.policy), (NetworkRole::Value, &m.value)],
            ),
        };
        let mut payload = Vec::new();
        let mut networks = Vec::new();
        for (role, net) in nets {
            payload.extend(net.params.to_flat());
            networks.push(NetworkEntry {
                role,
                spec: net.spec.clone(),
            });
        }
        Checkpoint {
            meta: CheckpointMeta {
                version: FORMAT_VERSION,
                trainer: trainer.to_string(),
                networks,
                eps_history,
                seeds,
                env,
                note: None,
            },
            payload,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let mut offset = 0;
        let mut nets = Vec::new();
        for entry in &ckpt.meta.networks {
            let n = entry.spec.parameter_count();
            let slice = ckpt
                .payload
                .get(offset..offset + n)
                .ok_or_else(|| BclError::Integrity("payload shorter than metadata".into()))?;
            let params = Parameters::from_flat(&entry.spec, slice)?;
            nets.push((entry.role.clone(), Network::new(entry.spec.clone(), params)?));
            offset += n;
        }
        match (ckpt.meta.trainer.as_str(), nets.as_slice()) {
            ("dqn", [(NetworkRole::Q, q)]) => Ok(TrainedModel::Dqn(q.clone())),
            ("ppo", [(NetworkRole::Policy, p), (NetworkRole::Value, v)]) => Ok(TrainedModel::Ppo(PpoModel {
                policy: p.clone(),
                value: v.clone(),
            })),
            (t, _) => Err(BclError::Integrity(format!(
                "checkpoint networks do not match trainer kind `{t}`"
            ))),
        }
    }
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(&ckpt.meta)?;
    let mut payload = Vec::with_capacity(ckpt.payload.len() * 8);
    for v in &ckpt.payload {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    let mut out = Vec::with_capacity(8 + 8 + meta.len() + 8 + payload.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(ckpt.payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| BclError::Integrity(format!("truncated checkpoint ({what})")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(BclError::Integrity("bad magic".into()));
    }
    let meta_len = r.u64("metadata length")? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len, "metadata")?)
        .map_err(|e| BclError::Integrity(format!("unreadable metadata: {e}")))?;
    let n = r.u64("payload length")? as usize;
    let raw = r.take(n.checked_mul(8).ok_or_else(|| BclError::Integrity("payload length overflow".into()))?, "payload")?;
    let crc = u32::from_le_bytes(r.take(4, "crc")?.try_into().unwrap());
    if r.pos != bytes.len() {
        return Err(BclError::Integrity("trailing bytes after CRC".into()));
    }
    if crc32fast::hash(raw) != crc {
        return Err(BclError::Integrity("payload CRC mismatch".into()));
    }
    if meta.expected_len() != n {
        return Err(BclError::Integrity(format!(
            "metadata describes {} values, payload holds {n}",
            meta.expected_len()
        )));
    }
    let payload = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Checkpoint { meta, payload })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(ckpt)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_corruption() {
        let net = Network::glorot(NetworkSpec::dueling(vec![4, 5, 2]), 3).unwrap();
        let ckpt = TrainedModel::Dqn(net.clone()).to_checkpoint(vec![0.0, 0.1], vec![7], None);
        let bytes = encode_checkpoint(&ckpt).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(TrainedModel::from_checkpoint(&back).unwrap(), TrainedModel::Dqn(net));

        let mut flipped = bytes.clone();
        let at = flipped.len() - 12;
        flipped[at] ^= 1;
        assert!(matches!(decode_checkpoint(&flipped), Err(BclError::Integrity(_))));
        assert!(matches!(
            decode_checkpoint(&bytes[..bytes.len() - 1]),
            Err(BclError::Integrity(_))
        ));
        assert!(matches!(decode_checkpoint(b"NOTACKPT"), Err(BclError::Integrity(_))));
    }
}

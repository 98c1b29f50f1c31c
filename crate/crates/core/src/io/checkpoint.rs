//! Self-describing model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! | bytes  | content                                            |
//! |--------|----------------------------------------------------|
//! | 8      | magic `DYNCFCKP`                                   |
//! | 4      | format version (u32)                               |
//! | 8      | header length `h` (u64)                            |
//! | h      | JSON header: model kind, id maps, attention, array names and shapes, config echo |
//! | 8·n    | every array's f64 values, in header order          |
//! | 32     | SHA-256 of everything above                        |
//!
//! Matrices are stored row-major; tensors first-index-fastest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
pub use crate::eval_harness::ModelState;
use crate::ids::{EntityId, IdMap};
use crate::linalg::{from_row_major, to_row_major, DenseMatrix, DenseTensor3, TuckerFactors};
use crate::psirec::SvdState;
use crate::seq_tensor::AttentionSpec;
use crate::tirec::TuckerState;

pub const MAGIC: &[u8; 8] = b"DYNCFCKP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: ModelState,
    pub config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct ArrayInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    users: Vec<EntityId>,
    items: Vec<EntityId>,
    attention: Option<AttentionSpec>,
    arrays: Vec<ArrayInfo>,
    config: serde_json::Value,
}

fn matrix_array(name: &str, m: &DenseMatrix) -> (ArrayInfo, Vec<f64>) {
    (
        ArrayInfo {
            name: name.into(),
            shape: vec![m.nrows(), m.ncols()],
        },
        to_row_major(m),
    )
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (kind, users, items, attention, arrays) = match &self.state {
            ModelState::Matrix(s) => (
                "matrix",
                &s.user_map,
                &s.item_map,
                None,
                vec![matrix_array("u", &s.u), matrix_array("s", &s.s), matrix_array("v", &s.v)],
            ),
            ModelState::Tensor(t) => {
                let core = &t.factors.core;
                let mut arrays = vec![(
                    ArrayInfo {
                        name: "core".into(),
                        shape: core.shape().to_vec(),
                    },
                    core.data().to_vec(),
                )];
                for (k, u) in t.factors.u.iter().enumerate() {
                    arrays.push(matrix_array(&format!("u{}", k + 1), u));
                }
                ("tensor", &t.user_map, &t.item_map, Some(t.attention), arrays)
            }
        };
        let (infos, values): (Vec<ArrayInfo>, Vec<Vec<f64>>) = arrays.into_iter().unzip();
        let header = Header {
            kind: kind.into(),
            users: users.ids().to_vec(),
            items: items.ids().to_vec(),
            attention,
            arrays: infos,
            config: self.config.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(60 + json.len() + 8 * values.iter().map(Vec::len).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in values.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint {
            path: path.to_path_buf(),
            msg,
        };
        if bytes.len() < 8 + 4 + 8 + 32 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(bad("checksum mismatch, file is truncated or corrupted".into()));
        }
        let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(format!("format version {version}, this build reads version {VERSION}")));
        }
        let h = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
        let json = body.get(20..20 + h).ok_or_else(|| bad("header overruns the file".into()))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| bad(format!("header: {e}")))?;
        let payload = &body[20 + h..];
        let total: usize = header.arrays.iter().map(|a| a.shape.iter().product::<usize>()).sum();
        if payload.len() != 8 * total {
            return Err(bad(format!("payload holds {} bytes, header needs {}", payload.len(), 8 * total)));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |info: &ArrayInfo| -> Vec<f64> {
            values.by_ref().take(info.shape.iter().product()).collect()
        };
        let find = |name: &str| {
            header
                .arrays
                .iter()
                .position(|a| a.name == name)
                .ok_or_else(|| bad(format!("missing array '{name}'")))
        };
        let mut arrays: Vec<Vec<f64>> = header.arrays.iter().map(&mut take).collect();
        let mut matrix = |name: &str| -> Result<DenseMatrix> {
            let k = find(name)?;
            let shape = &header.arrays[k].shape;
            if shape.len() != 2 {
                return Err(bad(format!("array '{name}' is not a matrix")));
            }
            from_row_major(shape[0], shape[1], &std::mem::take(&mut arrays[k]))
        };
        let users = IdMap::from(header.users.clone());
        let items = IdMap::from(header.items.clone());
        let state = match header.kind.as_str() {
            "matrix" => {
                let (u, s, v) = (matrix("u")?, matrix("s")?, matrix("v")?);
                if s.nrows() != s.ncols() || u.ncols() != s.nrows() || v.ncols() != s.ncols() {
                    return Err(bad("inconsistent factor shapes".into()));
                }
                if users.len() != u.nrows() || items.len() != v.nrows() {
                    return Err(bad("id maps disagree with factor shapes".into()));
                }
                ModelState::Matrix(SvdState {
                    rank: s.nrows(),
                    u,
                    s,
                    v,
                    user_map: users,
                    item_map: items,
                })
            }
            "tensor" => {
                let attention = header.attention.ok_or_else(|| bad("tensor checkpoint without attention".into()))?;
                let u = [matrix("u1")?, matrix("u2")?, matrix("u3")?];
                let k = find("core")?;
                let shape: [usize; 3] = header.arrays[k]
                    .shape
                    .clone()
                    .try_into()
                    .map_err(|_| bad("core is not an order-3 tensor".into()))?;
                let core = DenseTensor3::from_vec(shape, std::mem::take(&mut arrays[k]))?;
                let t = TuckerState::from_factors(TuckerFactors { core, u }, attention)?;
                ModelState::Tensor(t.with_maps(users, items)?)
            }
            other => return Err(bad(format!("unknown model kind '{other}'"))),
        };
        Ok(Checkpoint {
            state,
            config: header.config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, path)
    }
}

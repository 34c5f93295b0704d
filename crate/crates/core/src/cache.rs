//! Binary profile cache: JSON metadata, raw little-endian samples and a
//! trailing SHA-256 over everything before it.

use std::fs;
use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::front::{FrontProfile, RelaxMeta, TailFit};
use crate::sis::{DecayMeta, Profile};

const MAGIC: &[u8; 8] = b"EFPROF01";

#[derive(Debug, Clone, PartialEq)]
pub enum CachedProfile {
    Gamma(Profile),
    Front(FrontProfile),
}

#[derive(Serialize, Deserialize)]
struct Meta {
    kind: String,
    t0: f64,
    dt: f64,
    decay: DecayMeta,
    c: Option<f64>,
    lambda1: Option<f64>,
    v1: Option<Vec<f64>>,
    lambda2: Option<f64>,
    fit: Option<TailFit>,
    relax: Option<RelaxMeta>,
}

fn meta_of(p: &CachedProfile) -> (Meta, &Array2<f64>) {
    match p {
        CachedProfile::Gamma(g) => (
            Meta {
                kind: "gamma".into(),
                t0: g.t0,
                dt: g.dt,
                decay: g.decay.clone(),
                c: None,
                lambda1: None,
                v1: None,
                lambda2: None,
                fit: None,
                relax: None,
            },
            &g.values,
        ),
        CachedProfile::Front(f) => (
            Meta {
                kind: "front".into(),
                t0: f.profile.t0,
                dt: f.profile.dt,
                decay: f.profile.decay.clone(),
                c: Some(f.c),
                lambda1: Some(f.lambda1),
                v1: Some(f.v1.clone()),
                lambda2: Some(f.lambda2),
                fit: f.fit.clone(),
                relax: f.relax.clone(),
            },
            &f.profile.values,
        ),
    }
}

pub fn encode(p: &CachedProfile) -> Result<Vec<u8>> {
    let (meta, values) = meta_of(p);
    let json = serde_json::to_vec(&meta).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut buf = Vec::with_capacity(64 + json.len() + 8 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    buf.extend_from_slice(&(values.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(values.ncols() as u64).to_le_bytes());
    for v in values.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

fn corrupt(why: &str) -> Error {
    Error::Serialize(format!("corrupt cache entry: {why}"))
}

pub fn decode(bytes: &[u8]) -> Result<CachedProfile> {
    if bytes.len() < MAGIC.len() + 8 + 16 + 32 {
        return Err(corrupt("truncated"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    if &body[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut pos = 8;
    let read_u64 = |pos: &mut usize| -> Result<u64> {
        let s = body.get(*pos..*pos + 8).ok_or_else(|| corrupt("truncated"))?;
        *pos += 8;
        Ok(u64::from_le_bytes(s.try_into().expect("8 bytes")))
    };
    let meta_len = read_u64(&mut pos)? as usize;
    let json = body.get(pos..pos + meta_len).ok_or_else(|| corrupt("truncated metadata"))?;
    pos += meta_len;
    let meta: Meta = serde_json::from_slice(json).map_err(|e| corrupt(&e.to_string()))?;
    let rows = read_u64(&mut pos)? as usize;
    let cols = read_u64(&mut pos)? as usize;
    let raw = body.get(pos..).ok_or_else(|| corrupt("truncated"))?;
    if raw.len() != 8 * rows * cols {
        return Err(corrupt("sample count"));
    }
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let values = Array2::from_shape_vec((rows, cols), data).map_err(|e| corrupt(&e.to_string()))?;
    let profile = Profile {
        t0: meta.t0,
        dt: meta.dt,
        values,
        decay: meta.decay,
    };
    match meta.kind.as_str() {
        "gamma" => Ok(CachedProfile::Gamma(profile)),
        "front" => Ok(CachedProfile::Front(FrontProfile {
            profile,
            c: meta.c.ok_or_else(|| corrupt("missing c"))?,
            lambda1: meta.lambda1.ok_or_else(|| corrupt("missing lambda1"))?,
            v1: meta.v1.ok_or_else(|| corrupt("missing v1"))?,
            lambda2: meta.lambda2.ok_or_else(|| corrupt("missing lambda2"))?,
            fit: meta.fit,
            relax: meta.relax,
        })),
        k => Err(corrupt(&format!("unknown kind {k}"))),
    }
}

/// Directory-backed cache keyed by hex digests.
#[derive(Debug, Clone)]
pub struct ProfileCache {
    dir: PathBuf,
}

impl ProfileCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ProfileCache { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }

    /// `None` when absent; a corrupt entry is logged and treated as absent.
    pub fn load(&self, key: &str) -> Option<CachedProfile> {
        let path = self.path(key);
        let bytes = fs::read(&path).ok()?;
        match decode(&bytes) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("{}: {e}; recomputing", path.display());
                None
            }
        }
    }

    pub fn store(&self, key: &str, p: &CachedProfile) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(key);
        fs::write(&path, encode(p)?).map_err(|e| Error::io(&path, e))
    }

    /// Loads `key` or computes, stores and returns it; the flag reports a hit.
    pub fn get_or_compute(
        &self,
        key: &str,
        compute: impl FnOnce() -> Result<CachedProfile>,
    ) -> Result<(CachedProfile, bool)> {
        if let Some(p) = self.load(key) {
            return Ok((p, true));
        }
        let p = compute()?;
        self.store(key, &p)?;
        Ok((p, false))
    }
}

/// Hex SHA-256 of the given parts joined by `|`.
pub fn cache_key(parts: &[&str]) -> String {
    hex::encode(Sha256::digest(parts.join("|").as_bytes()))
}

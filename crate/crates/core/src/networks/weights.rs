//! Versioned binary weight files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "FSNW" | u32 version | u32 header length | header (UTF-8 key=value lines)
//! u32 parameter count
//! per parameter: u32 name length | name | u32 rank | u64 dims… | f32 values…
//! ```

use std::path::Path;

use super::{build_stream, Phase, StreamConfig, StreamModel};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const WEIGHT_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"FSNW";

fn header(model: &StreamModel) -> String {
    let c = &model.config;
    format!(
        "kind={}\ninput_side={}\nbase_channels={}\ndepth={}\nmax_channels={}\nchannel_affine={}\ninput_channels={}\nphase={}\n",
        c.kind, c.input_side, c.base_channels, c.depth, c.max_channels, c.channel_affine, c.input_channels, model.phase
    )
}

fn parse_header(text: &str) -> Result<(StreamConfig, Phase)> {
    let mut fields = std::collections::BTreeMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("header line '{line}' is not key=value")))?;
        fields.insert(k, v);
    }
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::Format(format!("header lacks `{key}`")))
    };
    let num = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("header field `{key}` is not an integer")))
    };
    let config = StreamConfig {
        kind: get("kind")?.parse()?,
        input_side: num("input_side")?,
        base_channels: num("base_channels")?,
        depth: num("depth")?,
        max_channels: num("max_channels")?,
        channel_affine: get("channel_affine")?
            .parse()
            .map_err(|_| Error::Format("header field `channel_affine` is not a boolean".into()))?,
        input_channels: num("input_channels")?,
    };
    Ok((config, get("phase")?.parse()?))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("weight file is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<&'a str> {
        let n = self.u32()? as usize;
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::Format("invalid UTF-8 in weight file".into()))
    }
}

impl StreamModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.parameter_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&WEIGHT_FORMAT_VERSION.to_le_bytes());
        let h = header(self);
        out.extend_from_slice(&(h.len() as u32).to_le_bytes());
        out.extend_from_slice(h.as_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.extend_from_slice(&(p.tensor.shape().len() as u32).to_le_bytes());
            for &d in p.tensor.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in p.tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a weight file; the parameter list must match the architecture
    /// described by its header exactly.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a weight file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != WEIGHT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "weight format version {version} is not supported (expected {WEIGHT_FORMAT_VERSION})"
            )));
        }
        let (config, phase) = parse_header(r.string()?)?;
        let mut model = build_stream(config, 0)?;
        let count = r.u32()? as usize;
        if count != model.params.len() {
            return Err(Error::Format(format!(
                "{} architecture has {} parameters, file has {count}",
                config.kind,
                model.params.len()
            )));
        }
        for p in &mut model.params {
            let name = r.string()?;
            if name != p.name {
                return Err(Error::Format(format!("expected parameter `{}`, found `{name}`", p.name)));
            }
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            if shape != p.tensor.shape() {
                return Err(Error::Format(format!(
                    "parameter `{name}` has shape {shape:?}, expected {:?}",
                    p.tensor.shape()
                )));
            }
            let raw = r.take(4 * p.tensor.len())?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            p.tensor = Tensor::new(&shape, data)?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after the last parameter".into()));
        }
        model.phase = phase;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::StreamKind;

    #[test]
    fn round_trip_is_bit_exact() {
        for kind in StreamKind::ALL {
            let config = StreamConfig { input_side: 32, base_channels: 2, depth: 3, ..StreamConfig::desk(kind) };
            let mut m = build_stream(config, 7).unwrap();
            m.phase = Phase::FullyTrained;
            let bytes = m.to_bytes();
            let back = StreamModel::from_bytes(&bytes).unwrap();
            assert_eq!(back.to_bytes(), bytes);
            assert_eq!(back.phase(), Phase::FullyTrained);
            assert_eq!(back.config(), m.config());
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let m = build_stream(StreamConfig { input_side: 32, depth: 2, ..StreamConfig::desk(StreamKind::Disc) }, 1).unwrap();
        let bytes = m.to_bytes();
        assert!(matches!(StreamModel::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(StreamModel::from_bytes(b"nope"), Err(Error::Format(_))));
        let mut wrong_version = bytes.clone();
        wrong_version[4] = 9;
        assert!(matches!(StreamModel::from_bytes(&wrong_version), Err(Error::Format(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(StreamModel::from_bytes(&extra), Err(Error::Format(_))));
    }
}

//! `TCN1` model files.
//!
//! ```text
//! "TCN1"                      4 bytes
//! version        u32 LE       = 1
//! header_len     u32 LE
//! header         header_len bytes of UTF-8 `key=value` lines
//! payload        parameters x f32 LE, in `TcnModel::flat_params` order
//! crc32          u32 LE       CRC-32 (IEEE) of the payload bytes
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{ModelError, ResidualBlock, TcnConfig, TcnModel};
use crate::data::{Feature, FeatureRange, NormalizationParams};
use crate::nn::{ConvParams, LinearHead};

pub const MAGIC: [u8; 4] = *b"TCN1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}: not a TCN1 model file")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {found} (this build reads version {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("truncated model file: {what} needs {needed} bytes, {available} available")]
    Truncated {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("{0} trailing bytes after the checksum")]
    TrailingBytes(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn header_text(model: &TcnModel) -> String {
    let c = &model.config;
    let mut lines = vec![
        format!("stacks={}", c.stacks),
        format!("blocks_per_stack={}", c.blocks_per_stack),
        format!("kernel_size={}", c.kernel_size),
        format!("filters={}", c.filters),
        format!("input_features={}", c.input_features),
        format!("window={}", c.window),
        format!("p_keep={}", c.p_keep),
        format!("dilation_base={}", c.dilation_base),
        format!("seed={}", model.seed),
    ];
    for f in Feature::ALL {
        let r = model.normalization.range(f);
        lines.push(format!("norm.{}.min={}", f.name(), r.min));
        lines.push(format!("norm.{}.max={}", f.name(), r.max));
    }
    lines.push(format!("parameters={}", model.parameter_count()));
    lines.push(format!("creator=tcn-soc {}", env!("CARGO_PKG_VERSION")));
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

/// Encodes a model. Parameters are stored as `f32`.
pub fn to_bytes(model: &TcnModel) -> Vec<u8> {
    let header = header_text(model);
    let params = model.flat_params();
    let mut out = Vec::with_capacity(12 + header.len() + 4 * params.len() + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    let payload_start = out.len();
    for p in params {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    let crc = crc32fast::hash(&out[payload_start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn serialize<W: Write>(model: &TcnModel, mut dest: W) -> Result<(), FormatError> {
    dest.write_all(&to_bytes(model))?;
    Ok(())
}

pub fn save_model(model: &TcnModel, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn deserialize<R: Read>(mut source: R) -> Result<TcnModel, ModelError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(FormatError::from)?;
    from_bytes(&bytes)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TcnModel, ModelError> {
    let bytes = fs::read(path).map_err(FormatError::from)?;
    from_bytes(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(FormatError::Truncated {
                what,
                needed: n,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

struct Header<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Header<'a> {
    fn parse(text: &'a str) -> Result<Self, FormatError> {
        let mut pairs = Vec::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FormatError::Header(format!("line `{line}` is not key=value")))?;
            pairs.push((k, v));
        }
        Ok(Self { pairs })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, FormatError> {
        let raw = self
            .pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| FormatError::Header(format!("missing key `{key}`")))?;
        raw.parse()
            .map_err(|_| FormatError::Header(format!("cannot parse `{key}={raw}`")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<TcnModel, ModelError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic([magic[0], magic[1], magic[2], magic[3]]).into());
    }
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(FormatError::VersionMismatch { found: version }.into());
    }
    let header_len = cur.u32("header length")? as usize;
    let header_bytes = cur.take(header_len, "header")?;
    let text = std::str::from_utf8(header_bytes).map_err(|e| FormatError::Header(format!("not UTF-8: {e}")))?;
    let header = Header::parse(text)?;

    let config = TcnConfig {
        stacks: header.get("stacks")?,
        blocks_per_stack: header.get("blocks_per_stack")?,
        kernel_size: header.get("kernel_size")?,
        filters: header.get("filters")?,
        input_features: header.get("input_features")?,
        window: header.get("window")?,
        p_keep: header.get("p_keep")?,
        dilation_base: header.get("dilation_base")?,
    };
    config.validate()?;
    let seed: u64 = header.get("seed")?;
    let mut ranges = [FeatureRange { min: 0.0, max: 1.0 }; 4];
    for (f, r) in Feature::ALL.iter().zip(ranges.iter_mut()) {
        r.min = header.get(&format!("norm.{}.min", f.name()))?;
        r.max = header.get(&format!("norm.{}.max", f.name()))?;
    }
    let count: usize = header.get("parameters")?;
    let expected = super::parameter_count(&config);
    if count != expected {
        return Err(FormatError::Header(format!("parameters={count} but the config implies {expected}")).into());
    }

    let payload = cur.take(4 * count, "payload")?;
    let stored = cur.u32("checksum")?;
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed }.into());
    }
    if cur.pos != bytes.len() {
        return Err(FormatError::TrailingBytes(bytes.len() - cur.pos).into());
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();

    let mut model = skeleton(config, seed)?;
    model.normalization = NormalizationParams { ranges };
    model.set_flat_params(&values)?;
    model.check_structure()?;
    Ok(model)
}

/// Zero-weight model with the layer layout implied by `config`.
fn skeleton(config: TcnConfig, seed: u64) -> Result<TcnModel, ModelError> {
    let f = config.filters;
    let k = config.kernel_size;
    let blocks = (0..config.block_count())
        .map(|b| {
            let cin = config.block_in_channels(b);
            let d = config.dilation(b);
            Ok(ResidualBlock {
                conv1: ConvParams::zeros(f, cin, k, d)?,
                conv2: ConvParams::zeros(f, f, k, d)?,
                downsample: if cin != f { Some(ConvParams::zeros(f, cin, 1, 1)?) } else { None },
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(TcnModel {
        config,
        blocks,
        head: LinearHead::zeros(f),
        normalization: NormalizationParams::identity(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor3;
    use crate::rng::SeededRng;
    use crate::tcn::build_model;

    fn model() -> TcnModel {
        let cfg = TcnConfig {
            stacks: 2,
            kernel_size: 3,
            filters: 5,
            window: 24,
            ..TcnConfig::default()
        };
        let mut m = build_model(cfg, 31).unwrap();
        m.normalization.ranges[0] = FeatureRange { min: 2.5, max: 4.2 };
        m.normalization.ranges[1] = FeatureRange { min: -2.5, max: 5.8 };
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = to_bytes(&m);
        assert_eq!(&bytes[..4], b"TCN1");
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        let x = Tensor3::from_fn(1, 4, 24, |_, c, t| ((c * 31 + t) as f64 * 0.17).sin());
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn size_covers_all_parameters() {
        let m = model();
        assert!(to_bytes(&m).len() >= 4 * m.parameter_count());
    }

    #[test]
    fn each_failure_is_named() {
        let bytes = to_bytes(&model());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(ModelError::Format(FormatError::BadMagic(_)))));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            from_bytes(&bad),
            Err(ModelError::Format(FormatError::VersionMismatch { found: 2 }))
        ));

        let short = &bytes[..bytes.len() - 9];
        assert!(matches!(from_bytes(short), Err(ModelError::Format(FormatError::Truncated { .. }))));

        let mut bad = bytes.clone();
        let last_payload = bad.len() - 5;
        bad[last_payload] ^= 0x40;
        assert!(matches!(
            from_bytes(&bad),
            Err(ModelError::Format(FormatError::ChecksumMismatch { .. }))
        ));
    }

    #[test]
    fn every_payload_byte_is_protected() {
        let bytes = to_bytes(&model());
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let start = 12 + header_len;
        let mut rng = SeededRng::new(1);
        for i in start..bytes.len() - 4 {
            let mut bad = bytes.clone();
            bad[i] ^= 1 << rng.below(8);
            assert!(matches!(
                from_bytes(&bad),
                Err(ModelError::Format(FormatError::ChecksumMismatch { .. }))
            ));
        }
    }

    #[test]
    fn header_parameter_count_must_match() {
        let m = model();
        let text = header_text(&m).replace(&format!("parameters={}", m.parameter_count()), "parameters=3");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&(text.len() as u32).to_le_bytes());
        bytes.extend_from_slice(text.as_bytes());
        assert!(matches!(from_bytes(&bytes), Err(ModelError::Format(FormatError::Header(_)))));
    }
}

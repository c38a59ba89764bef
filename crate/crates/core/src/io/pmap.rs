//! `PMAP` container: magic, then little-endian `u32` version, height, width,
//! channels and dtype (0 = f32, 1 = f64), the row-major payload, and an
//! optional validity bitmap (one bit per pixel, least significant bit first,
//! padded to a whole byte).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::IoError;
use crate::geometry::{ConfidenceMap, Pointmap};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"PMAP";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmapDtype {
    F32 = 0,
    F64 = 1,
}

impl PmapDtype {
    fn size(self) -> usize {
        match self {
            PmapDtype::F32 => 4,
            PmapDtype::F64 => 8,
        }
    }

    fn of<T: Real>() -> Self {
        if std::mem::size_of::<T>() == 4 {
            PmapDtype::F32
        } else {
            PmapDtype::F64
        }
    }
}

/// Raw container contents. Values are widened to f64 in memory; f32 files
/// round-trip exactly since every f32 is representable.
#[derive(Clone, Debug, PartialEq)]
pub struct PmapData {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub dtype: PmapDtype,
    pub values: Vec<f64>,
    pub valid: Option<Vec<bool>>,
}

impl PmapData {
    fn pixels(&self) -> usize {
        self.height * self.width
    }
}

pub fn write_pmap<W: Write>(w: &mut W, data: &PmapData) -> Result<(), IoError> {
    if data.values.len() != data.pixels() * data.channels {
        return Err(IoError::Format(format!(
            "{} values for a {}x{}x{} map",
            data.values.len(),
            data.height,
            data.width,
            data.channels
        )));
    }
    if data.valid.as_ref().is_some_and(|v| v.len() != data.pixels()) {
        return Err(IoError::Format("validity mask does not match the map".into()));
    }
    let mut buf = Vec::with_capacity(24 + data.values.len() * data.dtype.size());
    buf.extend_from_slice(MAGIC);
    for v in [VERSION, data.height as u32, data.width as u32, data.channels as u32, data.dtype as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    match data.dtype {
        PmapDtype::F32 => data.values.iter().for_each(|v| buf.extend_from_slice(&(*v as f32).to_le_bytes())),
        PmapDtype::F64 => data.values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
    }
    if let Some(valid) = &data.valid {
        let mut bits = vec![0u8; data.pixels().div_ceil(8)];
        for (i, _) in valid.iter().enumerate().filter(|(_, v)| **v) {
            bits[i / 8] |= 1 << (i % 8);
        }
        buf.extend_from_slice(&bits);
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_pmap<R: Read>(r: &mut R) -> Result<PmapData, IoError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 4 {
        return Err(IoError::TruncatedFile);
    }
    if &bytes[..4] != MAGIC {
        return Err(IoError::BadMagic);
    }
    if bytes.len() < 24 {
        return Err(IoError::TruncatedFile);
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().expect("4 bytes"));
    let version = word(0);
    if version != VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let (height, width, channels) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let dtype = match word(4) {
        0 => PmapDtype::F32,
        1 => PmapDtype::F64,
        other => return Err(IoError::Format(format!("unsupported dtype {other}"))),
    };
    let count = height
        .checked_mul(width)
        .and_then(|p| p.checked_mul(channels))
        .ok_or_else(|| IoError::Format("map dimensions overflow".into()))?;
    let payload_end = count
        .checked_mul(dtype.size())
        .and_then(|n| n.checked_add(24))
        .ok_or_else(|| IoError::Format("map dimensions overflow".into()))?;
    if bytes.len() < payload_end {
        return Err(IoError::TruncatedFile);
    }
    let payload = &bytes[24..payload_end];
    let values: Vec<f64> = match dtype {
        PmapDtype::F32 => payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4")) as f64).collect(),
        PmapDtype::F64 => payload.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8"))).collect(),
    };
    let pixels = height * width;
    let tail = &bytes[payload_end..];
    let valid = if tail.is_empty() {
        None
    } else if tail.len() == pixels.div_ceil(8) {
        Some((0..pixels).map(|i| tail[i / 8] >> (i % 8) & 1 == 1).collect())
    } else if tail.len() < pixels.div_ceil(8) {
        return Err(IoError::TruncatedFile);
    } else {
        return Err(IoError::Format(format!("{} unexpected trailing bytes", tail.len())));
    };
    Ok(PmapData { height, width, channels, dtype, values, valid })
}

/// Pointmap with an optional confidence channel; invalid pixels are stored
/// as NaN and flagged in the bitmap.
pub fn pointmap_to_pmap<T: Real>(pm: &Pointmap<T>, conf: Option<&ConfidenceMap<T>>) -> Result<PmapData, IoError> {
    if conf.is_some_and(|c| !c.matches(pm)) {
        return Err(IoError::Format("confidence map does not match the pointmap".into()));
    }
    let channels = if conf.is_some() { 4 } else { 3 };
    let mut values = Vec::with_capacity(pm.len() * channels);
    for i in 0..pm.len() {
        match pm.point(i) {
            Some(p) => values.extend(p.iter().map(|v| v.as_f64())),
            None => values.extend([f64::NAN; 3]),
        }
        if let Some(c) = conf {
            values.push(c.values()[i].as_f64());
        }
    }
    Ok(PmapData {
        height: pm.height(),
        width: pm.width(),
        channels,
        dtype: PmapDtype::of::<T>(),
        values,
        valid: Some(pm.valid().to_vec()),
    })
}

pub fn pmap_to_pointmap<T: Real>(data: &PmapData) -> Result<(Pointmap<T>, Option<ConfidenceMap<T>>), IoError> {
    if data.channels != 3 && data.channels != 4 {
        return Err(IoError::Format(format!("pointmap needs 3 or 4 channels, found {}", data.channels)));
    }
    let c = data.channels;
    let mut xyz = Vec::with_capacity(data.pixels());
    let mut valid = Vec::with_capacity(data.pixels());
    for i in 0..data.pixels() {
        let v = &data.values[c * i..c * i + 3];
        let ok = data.valid.as_ref().map_or(v.iter().all(|x| x.is_finite()), |m| m[i]);
        valid.push(ok);
        xyz.push(if ok { Vector3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2])) } else { Vector3::zeros() });
    }
    let pm = Pointmap::new(data.width, data.height, xyz, valid)?;
    let conf = (c == 4)
        .then(|| ConfidenceMap::new(data.width, data.height, (0..data.pixels()).map(|i| T::lit(data.values[4 * i + 3])).collect()))
        .transpose()?;
    Ok((pm, conf))
}

pub fn save_pointmap<T: Real>(path: &Path, pm: &Pointmap<T>, conf: Option<&ConfidenceMap<T>>) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pmap(&mut w, &pointmap_to_pmap(pm, conf)?)?;
    w.flush()?;
    Ok(())
}

pub fn load_pointmap<T: Real>(path: &Path) -> Result<(Pointmap<T>, Option<ConfidenceMap<T>>), IoError> {
    pmap_to_pointmap(&read_pmap(&mut BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(d: &PmapData) -> Vec<u8> {
        let mut buf = Vec::new();
        write_pmap(&mut buf, d).unwrap();
        buf
    }

    fn arb_pointmap() -> impl Strategy<Value = (Pointmap<f32>, ConfidenceMap<f32>)> {
        (1usize..9, 1usize..9).prop_flat_map(|(w, h)| {
            let n = w * h;
            (
                proptest::collection::vec((any::<f32>(), any::<f32>(), any::<f32>(), any::<bool>()), n),
                proptest::collection::vec(1e-6f32..1e6, n),
            )
                .prop_map(move |(pts, conf)| {
                    let xyz = pts.iter().map(|(x, y, z, _)| Vector3::new(*x, *y, *z)).collect::<Vec<_>>();
                    let valid = pts.iter().map(|(x, y, z, v)| *v && x.is_finite() && y.is_finite() && z.is_finite()).collect::<Vec<_>>();
                    let xyz = xyz.into_iter().zip(&valid).map(|(p, v)| if *v { p } else { Vector3::zeros() }).collect();
                    (Pointmap::new(w, h, xyz, valid).unwrap(), ConfidenceMap::new(w, h, conf).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn pointmap_round_trip_is_bit_exact((pm, conf) in arb_pointmap()) {
            let bytes = encode(&pointmap_to_pmap(&pm, Some(&conf)).unwrap());
            let (back, back_conf) = pmap_to_pointmap::<f32>(&read_pmap(&mut bytes.as_slice()).unwrap()).unwrap();
            prop_assert_eq!(back.valid(), pm.valid());
            for i in 0..pm.len() {
                let (a, b) = (back.xyz()[i], pm.xyz()[i]);
                prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            let back_conf = back_conf.unwrap();
            prop_assert!(back_conf.values().iter().zip(conf.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn raw_f64_round_trip(vals in proptest::collection::vec(any::<f64>(), 12)) {
            let d = PmapData { height: 2, width: 3, channels: 2, dtype: PmapDtype::F64, values: vals, valid: None };
            let back = read_pmap(&mut encode(&d).as_slice()).unwrap();
            prop_assert!(back.values.iter().zip(&d.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn reader_rejects_garbage(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = read_pmap(&mut bytes.as_slice());
        }
    }

    #[test]
    fn header_layout() {
        let d = PmapData { height: 1, width: 2, channels: 1, dtype: PmapDtype::F32, values: vec![1.0, 2.0], valid: Some(vec![false, true]) };
        let b = encode(&d);
        assert_eq!(&b[..4], b"PMAP");
        assert_eq!(b[4..24], [1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&b[24..28], &1f32.to_le_bytes());
        assert_eq!(b.len(), 33);
        assert_eq!(b[32], 0b10);
    }

    #[test]
    fn typed_errors() {
        let d = PmapData { height: 2, width: 2, channels: 3, dtype: PmapDtype::F32, values: vec![0.5; 12], valid: Some(vec![true; 4]) };
        let b = encode(&d);
        assert!(matches!(read_pmap(&mut &b[..30]), Err(IoError::TruncatedFile)));
        assert!(matches!(read_pmap(&mut &b[..10]), Err(IoError::TruncatedFile)));
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(read_pmap(&mut bad.as_slice()), Err(IoError::BadMagic)));
        let mut v2 = b.clone();
        v2[4] = 2;
        assert!(matches!(read_pmap(&mut v2.as_slice()), Err(IoError::UnsupportedVersion(2))));
        let mut extra = b.clone();
        extra.extend([0, 0]);
        assert!(matches!(read_pmap(&mut extra.as_slice()), Err(IoError::Format(_))));
        let mut no_mask = d.clone();
        no_mask.valid = None;
        assert_eq!(read_pmap(&mut encode(&no_mask).as_slice()).unwrap(), no_mask);
    }

    #[test]
    fn nan_marks_invalid_without_bitmap() {
        let d = PmapData {
            height: 1,
            width: 2,
            channels: 3,
            dtype: PmapDtype::F32,
            values: vec![1.0, 2.0, 3.0, f64::NAN, 0.0, 0.0],
            valid: None,
        };
        let (pm, conf) = pmap_to_pointmap::<f64>(&d).unwrap();
        assert_eq!(pm.valid(), &[true, false]);
        assert!(conf.is_none());
    }

    #[test]
    fn f64_pointmap_files() {
        let dir = tempfile::tempdir().unwrap();
        let pm = Pointmap::from_fn(3, 2, |c, r| (c != 1).then(|| Vector3::new(0.1 * c as f64, 1.0 / 3.0, r as f64)));
        let path = dir.path().join("a.pmap");
        save_pointmap(&path, &pm, None).unwrap();
        let (back, _) = load_pointmap::<f64>(&path).unwrap();
        assert_eq!(back, pm);
    }
}

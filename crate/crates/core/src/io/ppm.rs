use std::io::{Read, Write};
use std::path::Path;

use super::IoError;
use crate::image::RgbImage;

/// Binary `P6` with maxval 255.
pub fn write_ppm<W: Write>(w: &mut W, image: &RgbImage) -> Result<(), IoError> {
    write!(w, "P6\n{} {}\n255\n", image.width(), image.height())?;
    w.write_all(image.data())?;
    Ok(())
}

pub fn read_ppm<R: Read>(r: &mut R) -> Result<RgbImage, IoError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if !bytes.starts_with(b"P6") {
        return Err(IoError::BadMagic);
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(IoError::TruncatedFile),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| IoError::Format("bad ppm header".into()))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(IoError::Format("bad ppm header".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(IoError::Format(format!("unsupported maxval {maxval}")));
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| IoError::Format("image dimensions overflow".into()))?;
    let body = &bytes[pos..];
    if body.len() < len {
        return Err(IoError::TruncatedFile);
    }
    if body.len() > len {
        return Err(IoError::Format(format!("{} unexpected trailing bytes", body.len() - len)));
    }
    Ok(RgbImage::new(width, height, body.to_vec())?)
}

pub fn save_ppm(path: &Path, image: &RgbImage) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_ppm(&mut buf, image)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_ppm(path: &Path) -> Result<RgbImage, IoError> {
    read_ppm(&mut std::fs::File::open(path)?)
}

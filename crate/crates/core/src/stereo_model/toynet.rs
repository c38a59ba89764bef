use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{ConfidenceMap, GeometryError, Pointmap};
use crate::image::RgbImage;
use crate::scalar::Real;

pub const REF_CHANNELS: usize = 7;
pub const TGT_CHANNELS: usize = 3;

/// Raw log-confidence is clamped to this range before `exp`.
const LOG_CONF_LIMIT: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyNetConfig {
    pub patch: usize,
    pub dim: usize,
    pub blocks: usize,
    pub heads: usize,
}

impl Default for ToyNetConfig {
    fn default() -> Self {
        Self { patch: 8, dim: 32, blocks: 2, heads: 4 }
    }
}

impl ToyNetConfig {
    pub fn validate(&self, width: usize, height: usize) -> Result<(), GeometryError> {
        if self.patch == 0 || !width.is_multiple_of(self.patch) || !height.is_multiple_of(self.patch) {
            return Err(GeometryError::ShapeMismatch(format!(
                "{width}x{height} image is not divisible into {p}x{p} patches",
                p = self.patch
            )));
        }
        if self.heads == 0 || !self.dim.is_multiple_of(self.heads) || !self.dim.is_multiple_of(4) {
            return Err(GeometryError::ShapeMismatch(format!(
                "token width {} must be divisible by 4 and by {} heads",
                self.dim, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Attention<T: Real> {
    wq: DMatrix<T>,
    wk: DMatrix<T>,
    wv: DMatrix<T>,
    wo: DMatrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
struct Block<T: Real> {
    ref_self: Attention<T>,
    tgt_cross: Attention<T>,
    tgt_self: Attention<T>,
}

/// Randomly initialised weights; rows of every matrix index input features.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyNetWeights<T: Real> {
    cfg: ToyNetConfig,
    ref_embed: DMatrix<T>,
    tgt_embed: DMatrix<T>,
    blocks: Vec<Block<T>>,
    head: DMatrix<T>,
}

impl<T: Real> ToyNetWeights<T> {
    /// Gaussian init with std `1/√fan_in`.
    pub fn random(cfg: ToyNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = |rows: usize, cols: usize| {
            let normal = Normal::new(0.0, 1.0 / (rows as f64).sqrt()).expect("positive std");
            DMatrix::from_fn(rows, cols, |_, _| T::lit(normal.sample(&mut rng)))
        };
        let p2 = cfg.patch * cfg.patch;
        let d = cfg.dim;
        let ref_embed = mat(REF_CHANNELS * p2, d);
        let tgt_embed = mat(TGT_CHANNELS * p2, d);
        let mut attn = || Attention { wq: mat(d, d), wk: mat(d, d), wv: mat(d, d), wo: mat(d, d) };
        let blocks = (0..cfg.blocks).map(|_| Block { ref_self: attn(), tgt_cross: attn(), tgt_self: attn() }).collect();
        let head = mat(d, 4 * p2);
        Self { cfg, ref_embed, tgt_embed, blocks, head }
    }

    pub fn config(&self) -> &ToyNetConfig {
        &self.cfg
    }
}

/// Inputs of one forward pass.
pub struct ToyInputs<'a, T: Real> {
    pub ref_image: &'a RgbImage,
    pub ref_pointmap: &'a Pointmap<T>,
    pub ref_conf_squashed: &'a [T],
    pub tgt_image: &'a RgbImage,
}

/// Token grids of both streams after embedding (index 0) and after every
/// decoder block.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyTrace<T: Real> {
    pub ref_tokens: Vec<DMatrix<T>>,
    pub tgt_tokens: Vec<DMatrix<T>>,
}

pub fn toy_forward<T: Real>(
    weights: &ToyNetWeights<T>,
    inputs: &ToyInputs<T>,
) -> Result<(Pointmap<T>, ConfidenceMap<T>), GeometryError> {
    toy_forward_traced(weights, inputs).map(|(pm, c, _)| (pm, c))
}

pub fn toy_forward_traced<T: Real>(
    weights: &ToyNetWeights<T>,
    inputs: &ToyInputs<T>,
) -> Result<(Pointmap<T>, ConfidenceMap<T>, ToyTrace<T>), GeometryError> {
    let cfg = &weights.cfg;
    let (w, h) = (inputs.tgt_image.width(), inputs.tgt_image.height());
    cfg.validate(w, h)?;
    if inputs.ref_image.width() != w
        || inputs.ref_image.height() != h
        || inputs.ref_pointmap.width() != w
        || inputs.ref_pointmap.height() != h
        || inputs.ref_conf_squashed.len() != w * h
    {
        return Err(GeometryError::ShapeMismatch("reference and target inputs differ in size".into()));
    }

    let pos = positional_encoding::<T>(w / cfg.patch, h / cfg.patch, cfg.dim);
    let ref_feat = patchify(w, h, cfg.patch, REF_CHANNELS, |idx, ch| match ch {
        0..=2 => T::lit(inputs.ref_image.unit(idx, ch)),
        3..=5 => inputs.ref_pointmap.point(idx).map_or(T::zero(), |p| p[ch - 3]),
        _ => inputs.ref_conf_squashed[idx],
    });
    let tgt_feat = patchify(w, h, cfg.patch, TGT_CHANNELS, |idx, ch| T::lit(inputs.tgt_image.unit(idx, ch)));

    let mut r = ref_feat * &weights.ref_embed + &pos;
    let mut t = tgt_feat * &weights.tgt_embed + &pos;
    let mut trace = ToyTrace { ref_tokens: vec![r.clone()], tgt_tokens: vec![t.clone()] };
    for block in &weights.blocks {
        let r_prev = r.clone();
        r = &r_prev + attention(&block.ref_self, &layer_norm(&r_prev), &layer_norm(&r_prev), cfg.heads);
        let crossed = &t + attention(&block.tgt_cross, &layer_norm(&t), &layer_norm(&r_prev), cfg.heads);
        let normed = layer_norm(&crossed);
        t = &crossed + attention(&block.tgt_self, &normed, &normed, cfg.heads);
        trace.ref_tokens.push(r.clone());
        trace.tgt_tokens.push(t.clone());
    }

    let raw = layer_norm(&t) * &weights.head;
    let (pm, conf) = unpatchify(&raw, w, h, cfg.patch);
    Ok((pm, conf, trace))
}

/// `(patches × channels·p²)` feature matrix; features of one patch are laid
/// out pixel by pixel (row-major inside the patch), channels interleaved.
fn patchify<T: Real>(
    w: usize,
    h: usize,
    p: usize,
    channels: usize,
    value: impl Fn(usize, usize) -> T,
) -> DMatrix<T> {
    let (pw, ph) = (w / p, h / p);
    DMatrix::from_fn(pw * ph, channels * p * p, |patch, feat| {
        let (py, px) = (patch / pw, patch % pw);
        let (pix, ch) = (feat / channels, feat % channels);
        let (dy, dx) = (pix / p, pix % p);
        value((py * p + dy) * w + px * p + dx, ch)
    })
}

fn unpatchify<T: Real>(raw: &DMatrix<T>, w: usize, h: usize, p: usize) -> (Pointmap<T>, ConfidenceMap<T>) {
    let pw = w / p;
    let locate = |col: usize, row: usize| ((row / p) * pw + col / p, (row % p) * p + col % p);
    let pm = Pointmap::from_fn(w, h, |col, row| {
        let (patch, pix) = locate(col, row);
        Some(Vector3::new(raw[(patch, 4 * pix)], raw[(patch, 4 * pix + 1)], raw[(patch, 4 * pix + 2)]))
    });
    let limit = T::lit(LOG_CONF_LIMIT);
    let conf = (0..w * h)
        .map(|idx| {
            let (patch, pix) = locate(idx % w, idx / w);
            let v = raw[(patch, 4 * pix + 3)];
            v.max(-limit).min(limit).exp()
        })
        .collect();
    (pm, ConfidenceMap::new(w, h, conf).expect("exp is positive"))
}

/// Fixed 2D sinusoidal encoding: first half of the width encodes the patch
/// row, second half the column.
fn positional_encoding<T: Real>(pw: usize, ph: usize, dim: usize) -> DMatrix<T> {
    let half = dim / 2;
    DMatrix::from_fn(pw * ph, dim, |patch, d| {
        let (coord, k) = if d < half { ((patch / pw) as f64, d) } else { ((patch % pw) as f64, d - half) };
        let freq = 1.0 / 10000f64.powf((2 * (k / 2)) as f64 / half as f64);
        T::lit(if k % 2 == 0 { (coord * freq).sin() } else { (coord * freq).cos() })
    })
}

fn layer_norm<T: Real>(x: &DMatrix<T>) -> DMatrix<T> {
    let mut out = x.clone();
    let n = T::lit(x.ncols() as f64);
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / n;
        let var = row.iter().fold(T::zero(), |a, v| a + (*v - mean) * (*v - mean)) / n;
        let inv = T::one() / (var + T::lit(1e-6)).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
    out
}

/// Multi-head attention of `queries` over `context`.
fn attention<T: Real>(a: &Attention<T>, queries: &DMatrix<T>, context: &DMatrix<T>, heads: usize) -> DMatrix<T> {
    let q = queries * &a.wq;
    let k = context * &a.wk;
    let v = context * &a.wv;
    let dh = q.ncols() / heads;
    let scale = T::one() / T::lit(dh as f64).sqrt();
    let mut merged = DMatrix::zeros(q.nrows(), q.ncols());
    for head in 0..heads {
        let cols = head * dh..(head + 1) * dh;
        let qh = q.columns(cols.start, dh);
        let kh = k.columns(cols.start, dh);
        let vh = v.columns(cols.start, dh);
        let mut scores = qh * kh.transpose() * scale;
        for mut row in scores.row_iter_mut() {
            let m = row.max();
            row.apply(|s| *s = (*s - m).exp());
            let total = row.sum();
            row /= total;
        }
        merged.columns_mut(cols.start, dh).copy_from(&(scores * vh));
    }
    merged * &a.wo
}

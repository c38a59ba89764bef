//! Length-prefixed frame protocol used to talk to an out-of-process predictor.
//!
//! A frame is a little-endian `u32` payload length followed by the payload:
//! a UTF-8 JSON header immediately followed by the raw little-endian tensor
//! blobs listed in the header, in order. Invalid pointmap pixels travel as NaN.

use std::io::{self, Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{PairPrediction, PredictorError, PredictorRequest, PredictorResponse, StereoPredictor, ViewInput};
use crate::geometry::{ConfidenceMap, Pointmap};
use crate::image::RgbImage;

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_FRAME_BYTES: usize = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    U8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    fn bytes(&self) -> Option<usize> {
        self.shape.iter().try_fold(self.dtype.size(), |acc, d| acc.checked_mul(*d))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub msg: String,
    #[serde(default)]
    pub tensors: Vec<TensorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn image(name: &str, img: &RgbImage) -> Self {
        Tensor { name: name.into(), shape: vec![img.height(), img.width(), 3], data: TensorData::U8(img.data().to_vec()) }
    }

    pub fn pointmap(name: &str, pm: &Pointmap<f64>) -> Self {
        let mut v = Vec::with_capacity(pm.len() * 3);
        for i in 0..pm.len() {
            match pm.point(i) {
                Some(p) => v.extend(p.iter().map(|x| *x as f32)),
                None => v.extend([f32::NAN; 3]),
            }
        }
        Tensor { name: name.into(), shape: vec![pm.height(), pm.width(), 3], data: TensorData::F32(v) }
    }

    pub fn scalars(name: &str, width: usize, height: usize, values: &[f64]) -> Self {
        Tensor {
            name: name.into(),
            shape: vec![height, width],
            data: TensorData::F32(values.iter().map(|x| *x as f32).collect()),
        }
    }

    fn spec(&self) -> TensorSpec {
        let dtype = match self.data {
            TensorData::F32(_) => Dtype::F32,
            TensorData::U8(_) => Dtype::U8,
        };
        TensorSpec { name: self.name.clone(), dtype, shape: self.shape.clone() }
    }

    fn f32s(&self) -> Result<&[f32], PredictorError> {
        match &self.data {
            TensorData::F32(v) => Ok(v),
            TensorData::U8(_) => Err(PredictorError::Protocol(format!("tensor {} must be f32", self.name))),
        }
    }

    fn expect_shape(&self, shape: &[usize]) -> Result<(), PredictorError> {
        if self.shape != shape {
            return Err(PredictorError::Protocol(format!(
                "tensor {} has shape {:?}, expected {:?}",
                self.name, self.shape, shape
            )));
        }
        Ok(())
    }

    pub fn to_image(&self) -> Result<RgbImage, PredictorError> {
        let (TensorData::U8(v), [h, w, 3]) = (&self.data, self.shape.as_slice()) else {
            return Err(PredictorError::Protocol(format!("tensor {} is not a u8 HxWx3 image", self.name)));
        };
        RgbImage::new(*w, *h, v.clone()).map_err(|e| PredictorError::Protocol(e.to_string()))
    }

    pub fn to_pointmap(&self, width: usize, height: usize) -> Result<Pointmap<f64>, PredictorError> {
        self.expect_shape(&[height, width, 3])?;
        let v = self.f32s()?;
        let mut xyz = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for c in v.chunks_exact(3) {
            let ok = c.iter().all(|x| x.is_finite());
            valid.push(ok);
            xyz.push(if ok { Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64) } else { Vector3::zeros() });
        }
        Pointmap::new(width, height, xyz, valid).map_err(|e| PredictorError::Protocol(e.to_string()))
    }

    pub fn to_scalars(&self, width: usize, height: usize) -> Result<Vec<f64>, PredictorError> {
        self.expect_shape(&[height, width])?;
        Ok(self.f32s()?.iter().map(|x| *x as f64).collect())
    }

    pub fn to_confidence(&self, width: usize, height: usize) -> Result<ConfidenceMap<f64>, PredictorError> {
        ConfidenceMap::new(width, height, self.to_scalars(width, height)?)
            .map_err(|e| PredictorError::Protocol(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub header: Header,
    pub tensors: Vec<Tensor>,
}

impl Message {
    pub fn new(msg: &str) -> Self {
        Message { header: Header { msg: msg.into(), ..Header::default() }, tensors: Vec::new() }
    }

    pub fn hello() -> Self {
        let mut m = Message::new("hello");
        m.header.version = Some(PROTOCOL_VERSION);
        m
    }

    pub fn error(detail: impl Into<String>) -> Self {
        let mut m = Message::new("error");
        m.header.detail = Some(detail.into());
        m
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor, PredictorError> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| PredictorError::Protocol(format!("missing tensor {name}")))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut header = self.header.clone();
        header.tensors = self.tensors.iter().map(Tensor::spec).collect();
        let mut payload = serde_json::to_vec(&header).expect("header serializes");
        for t in &self.tensors {
            match &t.data {
                TensorData::F32(v) => v.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
                TensorData::U8(v) => payload.extend_from_slice(v),
            }
        }
        payload
    }

    pub fn decode(payload: &[u8]) -> Result<Self, PredictorError> {
        let mut stream = serde_json::Deserializer::from_slice(payload).into_iter::<Header>();
        let header = match stream.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(PredictorError::Protocol(format!("bad header: {e}"))),
            None => return Err(PredictorError::Protocol("empty payload".into())),
        };
        let mut rest = &payload[stream.byte_offset()..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for spec in &header.tensors {
            let n = spec
                .bytes()
                .filter(|n| *n <= rest.len())
                .ok_or_else(|| PredictorError::Protocol(format!("blob {} exceeds the payload", spec.name)))?;
            let (blob, tail) = rest.split_at(n);
            rest = tail;
            let data = match spec.dtype {
                Dtype::U8 => TensorData::U8(blob.to_vec()),
                Dtype::F32 => TensorData::F32(
                    blob.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect(),
                ),
            };
            tensors.push(Tensor { name: spec.name.clone(), shape: spec.shape.clone(), data });
        }
        if !rest.is_empty() {
            return Err(PredictorError::Protocol(format!("{} trailing payload bytes", rest.len())));
        }
        Ok(Message { header, tensors })
    }
}

/// Outcome of reading one frame.
#[derive(Debug)]
pub enum Incoming {
    Message(Message),
    /// Frame was read in full but its payload is malformed.
    Malformed(PredictorError),
    /// Declared length exceeds [`MAX_FRAME_BYTES`]; the payload was skipped.
    Oversized(usize),
    /// Stream ended cleanly between frames.
    Closed,
}

pub fn write_message<W: Write>(w: &mut W, m: &Message) -> io::Result<()> {
    let payload = m.encode();
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|n| *n as usize <= MAX_FRAME_BYTES)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()
}

pub fn read_message<R: Read>(r: &mut R) -> io::Result<Incoming> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(Incoming::Closed),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        let skipped = io::copy(&mut r.take(len as u64), &mut io::sink())?;
        if (skipped as usize) < len {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        return Ok(Incoming::Oversized(len));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(match Message::decode(&payload) {
        Ok(m) => Incoming::Message(m),
        Err(e) => Incoming::Malformed(e),
    })
}

fn io_err(e: io::Error) -> PredictorError {
    PredictorError::Protocol(format!("transport: {e}"))
}

/// Client end of one connection. Requests are strictly sequential.
pub struct WireClient<R, W> {
    reader: R,
    writer: W,
}

impl<R: Read, W: Write> WireClient<R, W> {
    /// Performs the version handshake.
    pub fn connect(reader: R, writer: W) -> Result<Self, PredictorError> {
        let mut c = WireClient { reader, writer };
        let reply = c.round_trip(&Message::hello())?;
        if reply.header.msg != "hello" || reply.header.version != Some(PROTOCOL_VERSION) {
            return Err(PredictorError::Protocol(format!(
                "handshake answered with {:?} version {:?}",
                reply.header.msg, reply.header.version
            )));
        }
        Ok(c)
    }

    fn round_trip(&mut self, m: &Message) -> Result<Message, PredictorError> {
        write_message(&mut self.writer, m).map_err(io_err)?;
        match read_message(&mut self.reader).map_err(io_err)? {
            Incoming::Message(reply) if reply.header.msg == "error" => {
                Err(PredictorError::Remote(reply.header.detail.unwrap_or_default()))
            }
            Incoming::Message(reply) => Ok(reply),
            Incoming::Malformed(e) => Err(e),
            Incoming::Oversized(n) => Err(PredictorError::Protocol(format!("{n}-byte reply exceeds the frame limit"))),
            Incoming::Closed => Err(PredictorError::Protocol("connection closed".into())),
        }
    }

    fn response(&mut self, m: &Message) -> Result<Message, PredictorError> {
        let reply = self.round_trip(m)?;
        if reply.header.msg != "response" {
            return Err(PredictorError::Protocol(format!("unexpected {:?} reply", reply.header.msg)));
        }
        Ok(reply)
    }

    pub fn init_pair(&mut self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        let m = init_pair_message(a, b);
        let reply = self.response(&m)?;
        let (w, h) = (a.image.width(), a.image.height());
        let (bw, bh) = (b.image.width(), b.image.height());
        Ok(PairPrediction {
            a_pointmap: reply.tensor("pointmap_a")?.to_pointmap(w, h)?,
            a_conf: reply.tensor("conf_a")?.to_confidence(w, h)?,
            b_pointmap: reply.tensor("pointmap_b")?.to_pointmap(bw, bh)?,
            b_conf: reply.tensor("conf_b")?.to_confidence(bw, bh)?,
        })
    }

    pub fn predict(&mut self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        let reply = self.response(&predict_message(req))?;
        let (w, h) = (req.tgt_image.width(), req.tgt_image.height());
        Ok(PredictorResponse {
            tgt_pointmap: reply.tensor("pointmap")?.to_pointmap(w, h)?,
            tgt_conf: reply.tensor("conf")?.to_confidence(w, h)?,
        })
    }
}

pub fn init_pair_message(a: ViewInput<'_>, b: ViewInput<'_>) -> Message {
    let mut m = Message::new("init_pair");
    m.header.ref_id = Some(a.id);
    m.header.tgt_id = Some(b.id);
    m.tensors = vec![Tensor::image("image_a", a.image), Tensor::image("image_b", b.image)];
    m
}

pub fn predict_message(req: &PredictorRequest<'_>) -> Message {
    let (w, h) = (req.ref_pointmap.width(), req.ref_pointmap.height());
    let mut m = Message::new("predict");
    m.header.ref_id = Some(req.ref_view_id);
    m.header.tgt_id = Some(req.tgt_view_id);
    m.tensors = vec![
        Tensor::image("ref_image", req.ref_image),
        Tensor::pointmap("ref_pointmap", req.ref_pointmap),
        Tensor::scalars("ref_conf", w, h, req.ref_conf_squashed),
        Tensor::image("tgt_image", req.tgt_image),
    ];
    m
}

fn ids(m: &Message) -> Result<(usize, usize), PredictorError> {
    match (m.header.ref_id, m.header.tgt_id) {
        (Some(r), Some(t)) => Ok((r, t)),
        _ => Err(PredictorError::Protocol("request lacks ref_id/tgt_id".into())),
    }
}

fn answer<P: StereoPredictor + ?Sized>(predictor: &P, m: &Message) -> Result<Message, PredictorError> {
    match m.header.msg.as_str() {
        "hello" => {
            if m.header.version != Some(PROTOCOL_VERSION) {
                return Err(PredictorError::Protocol(format!("unsupported version {:?}", m.header.version)));
            }
            Ok(Message::hello())
        }
        "init_pair" => {
            let (a, b) = ids(m)?;
            let ia = m.tensor("image_a")?.to_image()?;
            let ib = m.tensor("image_b")?.to_image()?;
            let pair = predictor.init_pair(ViewInput { id: a, image: &ia }, ViewInput { id: b, image: &ib })?;
            let mut reply = Message::new("response");
            reply.tensors = vec![
                Tensor::pointmap("pointmap_a", &pair.a_pointmap),
                Tensor::scalars("conf_a", pair.a_conf.width(), pair.a_conf.height(), pair.a_conf.values()),
                Tensor::pointmap("pointmap_b", &pair.b_pointmap),
                Tensor::scalars("conf_b", pair.b_conf.width(), pair.b_conf.height(), pair.b_conf.values()),
            ];
            Ok(reply)
        }
        "predict" => {
            let (r, t) = ids(m)?;
            let ref_image = m.tensor("ref_image")?.to_image()?;
            let (w, h) = (ref_image.width(), ref_image.height());
            let ref_pointmap = m.tensor("ref_pointmap")?.to_pointmap(w, h)?;
            let ref_conf = m.tensor("ref_conf")?.to_scalars(w, h)?;
            let tgt_image = m.tensor("tgt_image")?.to_image()?;
            let resp = predictor.predict(&PredictorRequest {
                ref_view_id: r,
                tgt_view_id: t,
                ref_image: &ref_image,
                ref_pointmap: &ref_pointmap,
                ref_conf_squashed: &ref_conf,
                tgt_image: &tgt_image,
            })?;
            let mut reply = Message::new("response");
            reply.tensors = vec![
                Tensor::pointmap("pointmap", &resp.tgt_pointmap),
                Tensor::scalars("conf", resp.tgt_conf.width(), resp.tgt_conf.height(), resp.tgt_conf.values()),
            ];
            Ok(reply)
        }
        other => Err(PredictorError::Protocol(format!("unknown message {other:?}"))),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub requests: usize,
    pub errors: usize,
}

/// Serves `predictor` until the peer closes the stream. Every complete frame
/// receives exactly one reply; a frame cut short by end of stream ends the
/// session without a reply.
pub fn serve<P, R, W>(mut reader: R, mut writer: W, predictor: &P) -> io::Result<ServeStats>
where
    P: StereoPredictor + ?Sized,
    R: Read,
    W: Write,
{
    let mut stats = ServeStats::default();
    loop {
        let reply = match read_message(&mut reader) {
            Ok(Incoming::Closed) => return Ok(stats),
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(stats),
            Err(e) => return Err(e),
            Ok(Incoming::Oversized(n)) => Message::error(format!("{n}-byte frame exceeds the limit")),
            Ok(Incoming::Malformed(e)) => Message::error(e.to_string()),
            Ok(Incoming::Message(m)) => answer(predictor, &m).unwrap_or_else(|e| Message::error(e.to_string())),
        };
        stats.requests += 1;
        if reply.header.msg == "error" {
            stats.errors += 1;
        }
        write_message(&mut writer, &reply)?;
    }
}

//! Binary checkpoint format.
//!
//! ```text
//! magic   8 bytes  "DIFCOPLT"
//! version u32 LE   = 1
//! metalen u32 LE   length of the JSON meta blob
//! meta    UTF-8 JSON (CheckpointMeta)
//! params  f64 LE   W1 b1 W2 b2 W3 b3 W4 b4 emb, each row-major
//! [opt]   present iff meta.has_optimizer:
//!         u64 LE step, then first moments, then second moments (same order)
//! ```

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{DenoiserParams, OptState};
use crate::diffusion::NoiseSchedule;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DIFCOPLT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub state_dim: usize,
    pub action_dim: usize,
    pub h_dim: usize,
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub seed: u64,
    pub train_step: u64,
    /// Environment the model was trained for (`None` for synthetic data).
    #[serde(default)]
    pub env: Option<String>,
    /// Observation standardization applied before the network.
    #[serde(default)]
    pub obs_mean: Vec<f64>,
    #[serde(default)]
    pub obs_std: Vec<f64>,
    #[serde(default)]
    pub has_optimizer: bool,
}

impl CheckpointMeta {
    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::sigmoid(self.steps, self.beta_min, self.beta_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: DenoiserParams,
    pub opt: Option<OptState>,
}

pub fn save_checkpoint(params: &DenoiserParams, opt: Option<&OptState>, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    if (meta.state_dim, meta.action_dim, meta.h_dim, meta.steps)
        != (params.state_dim(), params.action_dim(), params.hidden(), params.steps())
    {
        return Err(Error::Format("meta dimensions disagree with parameters".into()));
    }
    let mut meta = meta.clone();
    meta.has_optimizer = opt.is_some();
    let json = serde_json::to_vec(&meta).map_err(|e| Error::Format(e.to_string()))?;
    let copies = if opt.is_some() { 3 } else { 1 };
    let mut out = Vec::with_capacity(24 + json.len() + 8 * params.num_params() * copies);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    write_tensors(&mut out, params);
    if let Some(opt) = opt {
        out.extend_from_slice(&opt.step.to_le_bytes());
        write_tensors(&mut out, &opt.m);
        write_tensors(&mut out, &opt.v);
    }
    Ok(out)
}

fn write_tensors(out: &mut Vec<u8>, p: &DenoiserParams) {
    for t in p.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("truncated checkpoint while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(8 * n, "tensor data")?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn read_params(r: &mut Reader<'_>, m: &CheckpointMeta) -> Result<DenoiserParams> {
    let shapes = DenoiserParams::tensor_shapes(m.state_dim, m.action_dim, m.h_dim, m.steps);
    let mut mats = Vec::new();
    let mut vecs = Vec::new();
    for (i, shape) in shapes.iter().enumerate() {
        let data = r.f64s(shape.iter().product())?;
        if shape.len() == 2 {
            let a = Array2::from_shape_vec((shape[0], shape[1]), data)
                .map_err(|e| Error::Format(format!("tensor {i}: {e}")))?;
            mats.push(a);
        } else {
            vecs.push(Array1::from_vec(data));
        }
    }
    let emb = mats.pop().expect("embedding tensor");
    let weights: [Array2<f64>; 4] = mats.try_into().map_err(|_| Error::Format("weight count".into()))?;
    let biases: [Array1<f64>; 4] = vecs.try_into().map_err(|_| Error::Format("bias count".into()))?;
    Ok(DenoiserParams::from_parts(m.state_dim, m.action_dim, m.h_dim, m.steps, weights, biases, emb))
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic").ok() != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = r.u32("meta length")? as usize;
    let meta: CheckpointMeta =
        serde_json::from_slice(r.take(len, "meta")?).map_err(|e| Error::Format(format!("meta: {e}")))?;
    if meta.action_dim == 0 || meta.h_dim == 0 || meta.steps < 2 {
        return Err(Error::Format("meta has degenerate dimensions".into()));
    }
    if !meta.obs_mean.is_empty() && (meta.obs_mean.len() != meta.state_dim || meta.obs_std.len() != meta.state_dim) {
        return Err(Error::Format("normalization stats do not match state_dim".into()));
    }
    let params = read_params(&mut r, &meta)?;
    let opt = if meta.has_optimizer {
        let step = r.u64("optimizer step")?;
        let m = read_params(&mut r, &meta)?;
        let v = read_params(&mut r, &meta)?;
        Some(OptState { m, v, step })
    } else {
        None
    };
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after tensors", bytes.len() - r.pos)));
    }
    Ok(Checkpoint { meta, params, opt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{adam_step, AdamConfig};

    fn meta_for(p: &DenoiserParams) -> CheckpointMeta {
        CheckpointMeta {
            state_dim: p.state_dim(),
            action_dim: p.action_dim(),
            h_dim: p.hidden(),
            steps: p.steps(),
            beta_min: 1e-4,
            beta_max: 0.26,
            seed: 5,
            train_step: 0,
            env: Some("point_mass_2d".into()),
            obs_mean: vec![0.25; p.state_dim()],
            obs_std: vec![1.5; p.state_dim()],
            has_optimizer: false,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = DenoiserParams::init(4, 2, 16, 50, 3);
        let mut opt = OptState::new(&p);
        let mut g = p.zeros_like();
        g.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|x| *x = 0.37));
        adam_step(&mut p, &g, &mut opt, &AdamConfig::default());
        let meta = meta_for(&p);
        let bytes = save_checkpoint(&p, Some(&opt), &meta).unwrap();
        let ck = load_checkpoint(&bytes).unwrap();
        assert_eq!(ck.params, p);
        assert_eq!(ck.opt.as_ref(), Some(&opt));
        assert!(ck.meta.has_optimizer);
        assert_eq!(save_checkpoint(&ck.params, ck.opt.as_ref(), &ck.meta).unwrap(), bytes);

        let plain = save_checkpoint(&p, None, &meta).unwrap();
        let ck = load_checkpoint(&plain).unwrap();
        assert!(ck.opt.is_none());
        assert_eq!(ck.meta, meta);
    }

    #[test]
    fn meta_rebuilds_schedule() {
        let p = DenoiserParams::init(4, 2, 8, 50, 3);
        let ck = load_checkpoint(&save_checkpoint(&p, None, &meta_for(&p)).unwrap()).unwrap();
        assert_eq!(ck.meta.schedule().unwrap(), NoiseSchedule::default());
    }

    #[test]
    fn corrupted_inputs_are_rejected() {
        let p = DenoiserParams::init(4, 2, 8, 50, 3);
        let bytes = save_checkpoint(&p, None, &meta_for(&p)).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = load_checkpoint(&bad).unwrap_err().to_string();
        assert!(err.contains("bad magic"), "{err}");

        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(load_checkpoint(&v2).unwrap_err().to_string().contains("version"));

        let err = load_checkpoint(&bytes[..bytes.len() - 3]).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");

        let mut long = bytes.clone();
        long.push(0);
        assert!(load_checkpoint(&long).is_err());

        let mut wrong = meta_for(&p);
        wrong.h_dim = 9;
        assert!(save_checkpoint(&p, None, &wrong).is_err());
    }
}

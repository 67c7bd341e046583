//! Binary agent checkpoints: a little-endian format holding the networks,
//! optimizer moments, and step counter. The decoder validates every length
//! before allocating and never panics on malformed input.

use std::path::Path;

use thiserror::Error;

use super::adam::AdamState;
use super::mlp::{Layer, Mlp};

pub const MAGIC: [u8; 8] = *b"CWCKPT01";

/// Upper bounds the decoder enforces before trusting any length field.
pub const MAX_DIM: u32 = 65_536;
pub const MAX_LAYERS: u32 = 64;
pub const MAX_NETS: u8 = 8;
pub const MAX_TOTAL_PARAMS: u64 = 64_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    Dqn,
    Ppo,
}

impl CheckpointKind {
    fn code(self) -> u8 {
        match self {
            CheckpointKind::Dqn => 0,
            CheckpointKind::Ppo => 1,
        }
    }

    fn from_code(c: u8) -> Option<CheckpointKind> {
        match c {
            0 => Some(CheckpointKind::Dqn),
            1 => Some(CheckpointKind::Ppo),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic; not a checkpoint file")]
    BadMagic,
    #[error("unknown checkpoint kind {0}")]
    UnknownKind(u8),
    #[error("truncated: needed {need} more bytes at offset {at}")]
    Truncated { at: usize, need: usize },
    #[error("layer dimension {0} exceeds the {MAX_DIM} limit")]
    DimTooLarge(u32),
    #[error("layer count {0} exceeds the {MAX_LAYERS} limit")]
    TooManyLayers(u32),
    #[error("network count {0} exceeds the {MAX_NETS} limit")]
    TooManyNets(u8),
    #[error("parameter count {0} exceeds the {MAX_TOTAL_PARAMS} limit")]
    TooManyParams(u64),
    #[error("zero-sized layer dimension")]
    ZeroDim,
    #[error("non-finite parameter value")]
    NonFinite,
    #[error("layer output width {0} feeds a layer expecting {1} inputs")]
    BrokenChain(u32, u32),
    #[error("{0} trailing bytes after checkpoint payload")]
    TrailingBytes(usize),
    #[error("checkpoint shapes do not match the configured agent")]
    ShapeMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub global_step: u64,
    pub nets: Vec<Mlp>,
    pub opts: Vec<AdamState>,
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let have = self.data.len() - self.pos;
        if have < n {
            return Err(CheckpointError::Truncated { at: self.pos, need: n - have });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, count: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(count.checked_mul(8).ok_or(CheckpointError::TooManyParams(u64::MAX))?)?;
        let mut out = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(8) {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(CheckpointError::NonFinite);
            }
            out.push(v);
        }
        Ok(out)
    }
}

fn push_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC);
        buf.push(self.kind.code());
        buf.extend_from_slice(&self.global_step.to_le_bytes());
        buf.push(self.nets.len() as u8);
        for net in &self.nets {
            buf.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
            for l in &net.layers {
                buf.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
                buf.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
            }
            for l in &net.layers {
                push_f64s(&mut buf, &l.w);
                push_f64s(&mut buf, &l.b);
            }
        }
        buf.push(self.opts.len() as u8);
        for opt in &self.opts {
            buf.extend_from_slice(&opt.t.to_le_bytes());
            buf.extend_from_slice(&(opt.m.len() as u64).to_le_bytes());
            push_f64s(&mut buf, &opt.m);
            push_f64s(&mut buf, &opt.v);
        }
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let mut r = Reader { data: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let kind_code = r.u8()?;
        let kind = CheckpointKind::from_code(kind_code).ok_or(CheckpointError::UnknownKind(kind_code))?;
        let global_step = r.u64()?;

        let net_count = r.u8()?;
        if net_count > MAX_NETS {
            return Err(CheckpointError::TooManyNets(net_count));
        }
        let mut budget = MAX_TOTAL_PARAMS;
        let mut nets = Vec::with_capacity(net_count as usize);
        for _ in 0..net_count {
            let layer_count = r.u32()?;
            if layer_count > MAX_LAYERS {
                return Err(CheckpointError::TooManyLayers(layer_count));
            }
            let mut shapes = Vec::with_capacity(layer_count as usize);
            for _ in 0..layer_count {
                let in_dim = r.u32()?;
                let out_dim = r.u32()?;
                if in_dim == 0 || out_dim == 0 {
                    return Err(CheckpointError::ZeroDim);
                }
                if in_dim > MAX_DIM || out_dim > MAX_DIM {
                    return Err(CheckpointError::DimTooLarge(in_dim.max(out_dim)));
                }
                let params = u64::from(in_dim) * u64::from(out_dim) + u64::from(out_dim);
                if params > budget {
                    return Err(CheckpointError::TooManyParams(params));
                }
                budget -= params;
                if let Some(&(_, prev_out)) = shapes.last() {
                    if prev_out != in_dim as usize {
                        return Err(CheckpointError::BrokenChain(prev_out as u32, in_dim));
                    }
                }
                shapes.push((in_dim as usize, out_dim as usize));
            }
            let mut layers = Vec::with_capacity(shapes.len());
            for (in_dim, out_dim) in shapes {
                let w = r.f64_vec(in_dim * out_dim)?;
                let b = r.f64_vec(out_dim)?;
                layers.push(Layer { in_dim, out_dim, w, b });
            }
            nets.push(Mlp { layers });
        }

        let opt_count = r.u8()?;
        if opt_count > MAX_NETS {
            return Err(CheckpointError::TooManyNets(opt_count));
        }
        let mut opts = Vec::with_capacity(opt_count as usize);
        for _ in 0..opt_count {
            let t = r.u64()?;
            let len = r.u64()?;
            if len > MAX_TOTAL_PARAMS {
                return Err(CheckpointError::TooManyParams(len));
            }
            let m = r.f64_vec(len as usize)?;
            let v = r.f64_vec(len as usize)?;
            opts.push(AdamState { m, v, t });
        }

        if r.pos != bytes.len() {
            return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(Checkpoint { kind, global_step, nets, opts })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        Ok(std::fs::write(path, self.encode())?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::decode(&std::fs::read(path)?)
    }

    pub fn from_dqn(agent: &super::dqn::DqnAgent) -> Checkpoint {
        Checkpoint {
            kind: CheckpointKind::Dqn,
            global_step: agent.global_step,
            nets: vec![agent.online.clone(), agent.target.clone()],
            opts: vec![agent.opt.clone()],
        }
    }

    pub fn apply_to_dqn(&self, agent: &mut super::dqn::DqnAgent) -> Result<(), CheckpointError> {
        if self.kind != CheckpointKind::Dqn || self.nets.len() != 2 || self.opts.len() != 1 {
            return Err(CheckpointError::ShapeMismatch);
        }
        if self.nets[0].dims() != agent.online.dims() || self.nets[1].dims() != agent.target.dims() {
            return Err(CheckpointError::ShapeMismatch);
        }
        if self.opts[0].m.len() != agent.online.param_count() {
            return Err(CheckpointError::ShapeMismatch);
        }
        agent.online = self.nets[0].clone();
        agent.target = self.nets[1].clone();
        agent.opt = self.opts[0].clone();
        agent.global_step = self.global_step;
        Ok(())
    }

    pub fn from_ppo(agent: &super::ppo::PpoAgent) -> Checkpoint {
        Checkpoint {
            kind: CheckpointKind::Ppo,
            global_step: agent.global_step,
            nets: vec![agent.actor.clone(), agent.critic.clone()],
            opts: vec![agent.opt_actor.clone(), agent.opt_critic.clone()],
        }
    }

    pub fn apply_to_ppo(&self, agent: &mut super::ppo::PpoAgent) -> Result<(), CheckpointError> {
        if self.kind != CheckpointKind::Ppo || self.nets.len() != 2 || self.opts.len() != 2 {
            return Err(CheckpointError::ShapeMismatch);
        }
        if self.nets[0].dims() != agent.actor.dims() || self.nets[1].dims() != agent.critic.dims() {
            return Err(CheckpointError::ShapeMismatch);
        }
        if self.opts[0].m.len() != agent.actor.param_count()
            || self.opts[1].m.len() != agent.critic.param_count()
        {
            return Err(CheckpointError::ShapeMismatch);
        }
        agent.actor = self.nets[0].clone();
        agent.critic = self.nets[1].clone();
        agent.opt_actor = self.opts[0].clone();
        agent.opt_critic = self.opts[1].clone();
        agent.global_step = self.global_step;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::dqn::{DqnAgent, DqnConfig};
    use crate::rl::ppo::{PpoAgent, PpoConfig};
    use crate::rl::replay::Sample;

    fn trained_dqn() -> DqnAgent {
        let cfg = DqnConfig { hidden: vec![8], warmup: 4, batch_size: 4, train_every: 1, ..DqnConfig::default() };
        let mut agent = DqnAgent::new(3, 2, cfg, 5);
        for k in 0..50u64 {
            agent.observe(Sample {
                state: vec![k as f64 / 50.0, 0.5, 1.0],
                action: (k % 2) as usize,
                reward: 0.1,
                next_state: vec![(k + 1) as f64 / 50.0, 0.5, 1.0],
                done: false,
            });
        }
        agent
    }

    #[test]
    fn dqn_round_trip_restores_everything() {
        let agent = trained_dqn();
        let ck = Checkpoint::from_dqn(&agent);
        let bytes = ck.encode();
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, ck);

        let cfg = DqnConfig { hidden: vec![8], ..DqnConfig::default() };
        let mut fresh = DqnAgent::new(3, 2, cfg, 999);
        back.apply_to_dqn(&mut fresh).unwrap();
        assert_eq!(fresh.online.flat_params(), agent.online.flat_params());
        assert_eq!(fresh.target.flat_params(), agent.target.flat_params());
        assert_eq!(fresh.global_step, 50);
        assert_eq!(fresh.opt.t, agent.opt.t);
    }

    #[test]
    fn ppo_round_trip_restores_everything() {
        let cfg = PpoConfig { hidden: vec![8], horizon: 16, minibatch: 8, epochs: 1, ..PpoConfig::default() };
        let mut agent = PpoAgent::new(4, 3, cfg.clone(), 2);
        for _ in 0..16 {
            let obs = vec![0.1, 0.2, 0.3, 0.4];
            let (a, logp, v) = agent.act(&obs);
            agent.store(obs, a, logp, v, 1.0, false);
        }
        agent.update(0.0);
        let ck = Checkpoint::from_ppo(&agent);
        let back = Checkpoint::decode(&ck.encode()).unwrap();
        let mut fresh = PpoAgent::new(4, 3, cfg, 77);
        back.apply_to_ppo(&mut fresh).unwrap();
        assert_eq!(fresh.actor.flat_params(), agent.actor.flat_params());
        assert_eq!(fresh.critic.flat_params(), agent.critic.flat_params());
        assert_eq!(fresh.opt_actor, agent.opt_actor);
    }

    #[test]
    fn every_truncation_is_rejected_without_panic() {
        let bytes = Checkpoint::from_dqn(&trained_dqn()).encode();
        for k in 0..bytes.len() {
            assert!(Checkpoint::decode(&bytes[..k]).is_err(), "prefix {k} decoded");
        }
    }

    #[test]
    fn bad_magic_and_unknown_kind_are_rejected() {
        let mut bytes = Checkpoint::from_dqn(&trained_dqn()).encode();
        let mut flipped = bytes.clone();
        flipped[0] ^= 0xFF;
        assert!(matches!(Checkpoint::decode(&flipped), Err(CheckpointError::BadMagic)));
        bytes[8] = 42;
        assert!(matches!(Checkpoint::decode(&bytes), Err(CheckpointError::UnknownKind(42))));
    }

    #[test]
    fn absurd_dimensions_fail_fast() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.push(0);
        bytes.extend_from_slice(&0u64.to_le_bytes());
        bytes.push(1); // one net
        bytes.extend_from_slice(&1u32.to_le_bytes()); // one layer
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(
            Checkpoint::decode(&bytes),
            Err(CheckpointError::DimTooLarge(_))
        ));

        // Dims inside the per-dim limit but combined over the budget.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.push(0);
        bytes.extend_from_slice(&0u64.to_le_bytes());
        bytes.push(1);
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&65_536u32.to_le_bytes());
        bytes.extend_from_slice(&65_536u32.to_le_bytes());
        assert!(matches!(
            Checkpoint::decode(&bytes),
            Err(CheckpointError::TooManyParams(_))
        ));
    }

    #[test]
    fn nan_weights_and_trailing_bytes_are_rejected() {
        let ck = Checkpoint::from_dqn(&trained_dqn());
        let mut bytes = ck.encode();
        let tail = bytes.len();
        bytes.extend_from_slice(&[0, 1, 2]);
        assert!(matches!(
            Checkpoint::decode(&bytes),
            Err(CheckpointError::TrailingBytes(3))
        ));
        bytes.truncate(tail);

        // Overwrite the first weight with NaN. The weight block of the
        // first net starts after magic(8) + kind(1) + step(8) + count(1)
        // + layer_count(4) + 2 shape u32s per layer.
        let offset = 8 + 1 + 8 + 1 + 4 + 8 * ck.nets[0].layers.len();
        bytes[offset..offset + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(Checkpoint::decode(&bytes), Err(CheckpointError::NonFinite)));
    }

    #[test]
    fn mismatched_layer_chain_is_rejected() {
        let ck = Checkpoint::from_dqn(&trained_dqn());
        let mut bytes = ck.encode();
        // Second layer of the online net claims 9 inputs while the first
        // produces 8. Its shape header sits after the first layer's pair.
        let offset = 8 + 1 + 8 + 1 + 4 + 8;
        bytes[offset..offset + 4].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            Checkpoint::decode(&bytes),
            Err(CheckpointError::BrokenChain(8, 9))
        ));
    }
}

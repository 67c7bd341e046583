//! Learning machinery built from scratch on `f64` vectors: a dense network
//! with manual backprop, Adam, categorical distributions, replay, GAE, and
//! the two agents (DQN and PPO) the evaluation compares.

pub mod adam;
pub mod checkpoint;
pub mod dist;
pub mod dqn;
pub mod gae;
pub mod mlp;
pub mod ppo;
pub mod replay;

//! Deterministic desk-scale simulator of a small cloud deployment's security
//! posture, plus DQN and PPO agents that learn to adapt firewall, IAM,
//! isolation, and monitoring policy against scripted attack scenarios.
//!
//! The crate is organized around five layers:
//!
//! * [`world`] — the discrete-time simulation: instances, principals,
//!   scripted attack/benign scenarios, the security event stream, compliance
//!   evaluation, and trace replay.
//! * [`policy`] — the versioned security configuration the agent mutates:
//!   firewall rules, principal restrictions, monitoring, guardrails,
//!   consistency checks, and rollback.
//! * [`env`] — the MDP facade: feature extraction, the flattened discrete
//!   action space with candidate slot tables, reward accounting, and the
//!   reset/step protocol.
//! * [`rl`] — a from-scratch f64 MLP with backprop and Adam, the DQN agent
//!   (replay buffer, target network, ε-greedy) and the PPO agent
//!   (actor-critic, GAE, clipped surrogate), plus binary checkpoints.
//! * [`harness`] — curriculum training, baseline agents, evaluation suites,
//!   metric computation, and comparison reports.
//!
//! Everything is seeded and deterministic: identical seeds and action
//! sequences produce bit-identical event streams, features, and training
//! curves.

pub mod config;
pub mod env;
pub mod harness;
pub mod policy;
pub mod rl;
pub mod rules;
pub mod world;

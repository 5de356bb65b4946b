//! Evolutionary optimization of variational quantum circuit policies for the
//! cooperative two-agent Coin Game.
//!
//! * [`quantum`]: dense statevector simulation, amplitude embedding, ⟨Z⟩.
//! * [`genome`]: Fixed, Layer-Based, Gate-Based and Prototype-Based circuits.
//! * [`coin_game`]: the 3x3 environment, observation encoding and metrics.
//! * [`policy`]: circuit, neural-network and random action selection.
//! * [`evolution`]: fitness evaluation, selection, mutation, recombination.
//! * [`harness`]: seeded campaigns, CSV output, aggregation, plots, replay.

pub mod coin_game;
pub mod evolution;
pub mod genome;
pub mod harness;
pub mod policy;
pub mod quantum;

use std::fmt;
use std::path::Path;

use super::{Checkpoint, HarnessError};
use crate::coin_game::CoinGameState;
use crate::evolution::{derive_seed, play_episode, Evaluation, StepEvent};

/// Tab-separated header of a replay trace.
pub const TRACE_HEADER: &str = "step\tagent\taction\treward_red\treward_blue\tred\tblue\tcoin\tcoin_color";

/// One step of a replayed episode, with the state after the move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceLine {
    pub step: usize,
    pub agent: usize,
    pub action: Option<crate::coin_game::Action>,
    pub rewards: [i64; 2],
    pub state: CoinGameState,
}

impl From<&StepEvent> for TraceLine {
    fn from(e: &StepEvent) -> Self {
        Self {
            step: e.step,
            agent: e.agent,
            action: e.action,
            rewards: e.rewards,
            state: e.after,
        }
    }
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let action = self.action.map_or_else(|| "pass".to_string(), |a| a.to_string());
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.step,
            self.agent,
            action,
            self.rewards[0],
            self.rewards[1],
            self.state.agents[0],
            self.state.agents[1],
            self.state.coin,
            self.state.coin_color
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub lines: Vec<TraceLine>,
    pub evaluation: Evaluation,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{TRACE_HEADER}")?;
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Load a checkpoint and play one episode with its elite on `seed`.
pub fn replay_best(checkpoint: &Path, seed: u64) -> Result<Trace, HarnessError> {
    let checkpoint = Checkpoint::load(checkpoint)?;
    let policy = checkpoint.elite().genome.policy();
    let mut lines = Vec::new();
    let evaluation = play_episode(
        &policy,
        checkpoint.config.evo.steps,
        seed,
        derive_seed(&[seed, 0xACE]),
        |e| lines.push(TraceLine::from(e)),
    )?;
    Ok(Trace { lines, evaluation })
}

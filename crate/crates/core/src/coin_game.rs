//! Two-agent, turn-based Coin Game on a 3x3 grid in its cooperative mode.
//!
//! Agent 0 is red, agent 1 is blue. The collector of a coin gets +1; when the
//! coin has the other agent's color, the other agent gets -2. Agents move one
//! cell per turn and may not leave the grid or step onto the other agent.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRID_SIZE: usize = 3;
pub const NUM_CELLS: usize = GRID_SIZE * GRID_SIZE;
pub const NUM_ACTIONS: usize = 4;
/// Length of the encoded observation: four one-hot planes over the grid.
pub const OBSERVATION_LEN: usize = 4 * NUM_CELLS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoinGameError {
    #[error("action {action} is illegal for agent {agent}")]
    IllegalAction { agent: usize, action: Action },
    #[error("agent {0} has a legal move and cannot pass")]
    CannotPass(usize),
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        debug_assert!(row < GRID_SIZE && col < GRID_SIZE);
        Self { row, col }
    }

    pub fn from_index(index: usize) -> Self {
        Self::new(index / GRID_SIZE, index % GRID_SIZE)
    }

    /// Row-major index in `0..9`.
    pub fn index(self) -> usize {
        self.row * GRID_SIZE + self.col
    }

    /// The neighbouring cell in direction `action`, if it is on the grid.
    pub fn moved(self, action: Action) -> Option<Cell> {
        let (row, col) = (self.row as isize, self.col as isize);
        let (r, c) = match action {
            Action::North => (row - 1, col),
            Action::South => (row + 1, col),
            Action::West => (row, col - 1),
            Action::East => (row, col + 1),
        };
        let size = GRID_SIZE as isize;
        ((0..size).contains(&r) && (0..size).contains(&c)).then(|| Cell::new(r as usize, c as usize))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    North = 0,
    South = 1,
    West = 2,
    East = 3,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [Action::North, Action::South, Action::West, Action::East];

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::North => "north",
            Action::South => "south",
            Action::West => "west",
            Action::East => "east",
        };
        f.write_str(s)
    }
}

/// Coin color; `Red` belongs to agent 0 and `Blue` to agent 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn of_agent(agent: usize) -> Self {
        if agent == 0 {
            Color::Red
        } else {
            Color::Blue
        }
    }

    pub fn owner(self) -> usize {
        match self {
            Color::Red => 0,
            Color::Blue => 1,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Red => "red",
            Color::Blue => "blue",
        })
    }
}

/// Legal-action mask indexed by [`Action::index`].
pub type ActionMask = [bool; NUM_ACTIONS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoinGameState {
    pub agents: [Cell; 2],
    pub coin: Cell,
    pub coin_color: Color,
    /// Agent whose turn it is.
    pub turn: usize,
    pub step: usize,
}

impl CoinGameState {
    /// Two distinct uniform agent cells, a coin on a uniform free cell with a
    /// uniform color, agent 0 to move.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let first = rng.random_range(0..NUM_CELLS);
        let mut second = rng.random_range(0..NUM_CELLS - 1);
        if second >= first {
            second += 1;
        }
        let agents = [Cell::from_index(first), Cell::from_index(second)];
        let (coin, coin_color) = spawn_coin(&agents, rng);
        Self {
            agents,
            coin,
            coin_color,
            turn: 0,
            step: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CoinGameError> {
        if self.agents[0] == self.agents[1] {
            return Err(CoinGameError::InvalidState("agents share a cell"));
        }
        if self.agents.contains(&self.coin) {
            return Err(CoinGameError::InvalidState("coin lies under an agent"));
        }
        if self.turn > 1 {
            return Err(CoinGameError::InvalidState("turn must be 0 or 1"));
        }
        let on_grid = |c: Cell| c.row < GRID_SIZE && c.col < GRID_SIZE;
        if !self.agents.iter().copied().all(on_grid) || !on_grid(self.coin) {
            return Err(CoinGameError::InvalidState("cell off the grid"));
        }
        Ok(())
    }
}

fn spawn_coin<R: Rng + ?Sized>(agents: &[Cell; 2], rng: &mut R) -> (Cell, Color) {
    let free: Vec<Cell> = (0..NUM_CELLS)
        .map(Cell::from_index)
        .filter(|c| !agents.contains(c))
        .collect();
    let coin = free[rng.random_range(0..free.len())];
    let color = if rng.random_bool(0.5) { Color::Red } else { Color::Blue };
    (coin, color)
}

/// Moves that keep `agent` on the grid and off the other agent's cell.
pub fn legal_actions(state: &CoinGameState, agent: usize) -> ActionMask {
    let other = state.agents[1 - agent];
    Action::ALL.map(|a| matches!(state.agents[agent].moved(a), Some(dest) if dest != other))
}

/// Egocentric observation for `acting`: one-hot planes, row-major, in the
/// order [own position, other agent, own-color coin, other-color coin].
pub fn encode_observation(state: &CoinGameState, acting: usize) -> [f64; OBSERVATION_LEN] {
    let mut obs = [0.0; OBSERVATION_LEN];
    obs[state.agents[acting].index()] = 1.0;
    obs[NUM_CELLS + state.agents[1 - acting].index()] = 1.0;
    let plane = if state.coin_color.owner() == acting { 2 } else { 3 };
    obs[plane * NUM_CELLS + state.coin.index()] = 1.0;
    obs
}

/// Running per-agent totals of one episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub rewards: [i64; 2],
    pub coins: [u32; 2],
    pub own_coins: [u32; 2],
}

/// Aggregate episode metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Sum of both agents' rewards.
    pub score: i64,
    pub total_coins: u32,
    pub own_coins: u32,
    /// `own_coins / total_coins`, or 0 when nothing was collected.
    pub own_coin_rate: f64,
}

impl EpisodeStats {
    pub fn metrics(&self) -> EpisodeMetrics {
        let total_coins = self.coins[0] + self.coins[1];
        let own_coins = self.own_coins[0] + self.own_coins[1];
        EpisodeMetrics {
            score: self.rewards[0] + self.rewards[1],
            total_coins,
            own_coins,
            own_coin_rate: if total_coins == 0 {
                0.0
            } else {
                f64::from(own_coins) / f64::from(total_coins)
            },
        }
    }
}

/// A running game with its own random stream for coin spawns.
#[derive(Debug, Clone)]
pub struct CoinGame {
    state: CoinGameState,
    stats: EpisodeStats,
    rng: ChaCha8Rng,
}

impl CoinGame {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = CoinGameState::random(&mut rng);
        Self {
            state,
            stats: EpisodeStats::default(),
            rng,
        }
    }

    /// Start from a given state; `seed` drives later coin spawns.
    pub fn from_state(state: CoinGameState, seed: u64) -> Result<Self, CoinGameError> {
        state.validate()?;
        Ok(Self {
            state,
            stats: EpisodeStats::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn reset(&mut self) {
        self.state = CoinGameState::random(&mut self.rng);
        self.stats = EpisodeStats::default();
    }

    pub fn state(&self) -> &CoinGameState {
        &self.state
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.stats
    }

    pub fn turn(&self) -> usize {
        self.state.turn
    }

    pub fn legal_actions(&self) -> ActionMask {
        legal_actions(&self.state, self.state.turn)
    }

    pub fn observation(&self) -> [f64; OBSERVATION_LEN] {
        encode_observation(&self.state, self.state.turn)
    }

    /// Move the agent whose turn it is and return both agents' rewards.
    pub fn step(&mut self, action: Action) -> Result<[i64; 2], CoinGameError> {
        let agent = self.state.turn;
        if !self.legal_actions()[action.index()] {
            return Err(CoinGameError::IllegalAction { agent, action });
        }
        let dest = self.state.agents[agent].moved(action).expect("legal move stays on grid");
        self.state.agents[agent] = dest;

        let mut rewards = [0i64; 2];
        if dest == self.state.coin {
            rewards[agent] += 1;
            self.stats.coins[agent] += 1;
            let owner = self.state.coin_color.owner();
            if owner == agent {
                self.stats.own_coins[agent] += 1;
            } else {
                rewards[owner] -= 2;
            }
            let (coin, color) = spawn_coin(&self.state.agents, &mut self.rng);
            self.state.coin = coin;
            self.state.coin_color = color;
        }
        self.finish_turn(rewards);
        Ok(rewards)
    }

    /// Skip the turn of an agent that has no legal move.
    pub fn pass(&mut self) -> Result<[i64; 2], CoinGameError> {
        if self.legal_actions().iter().any(|&legal| legal) {
            return Err(CoinGameError::CannotPass(self.state.turn));
        }
        self.finish_turn([0, 0]);
        Ok([0, 0])
    }

    fn finish_turn(&mut self, rewards: [i64; 2]) {
        self.stats.rewards[0] += rewards[0];
        self.stats.rewards[1] += rewards[1];
        self.state.turn = 1 - self.state.turn;
        self.state.step += 1;
    }
}

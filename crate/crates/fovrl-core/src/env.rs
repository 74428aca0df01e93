//! Deterministic Breakout-like toy environment.
//!
//! An 80x80 playfield with a 6x10 brick wall near the top, a paddle at the
//! bottom and a 2x2 ball with unit integer velocity and elastic
//! reflections. The environment is wrapped in the usual Atari
//! preprocessing contract: frame skip with two-frame max-pooling, reward
//! clipping to {-1, 0, +1}, random initial no-ops, life-loss terminals and
//! fire-on-reset. Identical seeds and action sequences yield bit-identical
//! trajectories.

use alloc::format;
use alloc::string::String;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fovea::{FocalPoint, Frame, SCREEN_HEIGHT, SCREEN_WIDTH};

/// Index of the no-op natural action.
pub const NAT_NOOP: usize = 0;
/// Index of the fire (serve) natural action.
pub const NAT_FIRE: usize = 1;
/// Index of the move-left natural action.
pub const NAT_LEFT: usize = 2;
/// Index of the move-right natural action.
pub const NAT_RIGHT: usize = 3;

/// Number of natural actions for toy Breakout: {NOOP, FIRE, LEFT, RIGHT}.
pub fn natural_action_count() -> usize {
    4
}

pub const BRICK_ROWS: usize = 6;
pub const BRICK_COLS: usize = 10;
const BRICK_W: usize = 8;
const BRICK_H: usize = 3;
const BRICK_TOP: usize = 10;
const PADDLE_W: i32 = 12;
const PADDLE_H: usize = 2;
const PADDLE_TOP: usize = 76;
const PADDLE_SPEED: i32 = 3;
const BALL_SIZE: i32 = 2;

// Brick rows at distinct gray levels, standing in for Breakout's colored
// rows after grayscale conversion.
const ROW_INTENSITY: [f64; BRICK_ROWS] = [0.80, 0.72, 0.64, 0.56, 0.48, 0.40];
const PADDLE_INTENSITY: f64 = 0.92;
const BALL_INTENSITY: f64 = 1.0;

/// Errors from environment stepping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvError {
    /// `step` was called on a terminal environment without a reset.
    Terminal,
    /// The action index is outside the environment's action set.
    InvalidAction(usize),
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::Terminal => write!(f, "step on a terminal environment"),
            EnvError::InvalidAction(a) => write!(f, "invalid action index {a}"),
        }
    }
}

impl core::error::Error for EnvError {}

/// Preprocessing and determinism knobs; defaults mirror the standard Atari
/// contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvConfig {
    pub frame_skip: u32,
    pub max_pool_screens: bool,
    pub noop_min: u32,
    pub noop_max: u32,
    pub clip_rewards: bool,
    pub life_loss_terminal: bool,
    pub fire_on_reset: bool,
    /// Hard cap on agent steps per episode, guaranteeing termination.
    pub step_cap: u32,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> EnvConfig {
        EnvConfig {
            frame_skip: 4,
            max_pool_screens: true,
            noop_min: 0,
            noop_max: 30,
            clip_rewards: true,
            life_loss_terminal: true,
            fire_on_reset: true,
            step_cap: 10_000,
            seed: 0,
        }
    }
}

/// One agent-step result: the preprocessed frame, the (possibly clipped)
/// reward, the terminal flag and raw bookkeeping.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub frame: Frame,
    pub reward: f64,
    pub terminal: bool,
    pub lives: u32,
    pub raw_score: i64,
}

/// Anything the training loop can interact with. Each worker owns a
/// private instance; implementations need no internal synchronization.
pub trait Environment {
    /// Re-initializes the episode and returns the first observation.
    fn reset(&mut self) -> Frame;

    /// Advances one agent step with a natural action.
    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;

    /// Size of the natural action set.
    fn action_count(&self) -> usize;

    /// Called by the rollout loop with the focal point used for the
    /// current observation, before `step`. Game environments ignore it:
    /// gaze never affects game state. Synthetic environments use it to
    /// pay gaze-dependent rewards when exercising the vision head.
    fn note_focal_point(&mut self, _fp: FocalPoint) {}
}

/// Full simulator state, exposed for rendering and for crafting exact
/// situations in tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    /// Left edge of the paddle.
    pub paddle_x: i32,
    /// Top-left corner of the 2x2 ball.
    pub ball: (i32, i32),
    /// Ball velocity in pixels per tick.
    pub ball_vel: (i32, i32),
    pub bricks: [[bool; BRICK_COLS]; BRICK_ROWS],
    pub lives: u32,
    pub score: i64,
    /// Ball is waiting on a serve; FIRE launches it.
    pub awaiting_fire: bool,
}

impl GameState {
    pub fn initial() -> GameState {
        GameState {
            paddle_x: (SCREEN_WIDTH as i32 - PADDLE_W) / 2,
            ball: (0, 0),
            ball_vel: (0, 0),
            bricks: [[true; BRICK_COLS]; BRICK_ROWS],
            lives: 3,
            score: 0,
            awaiting_fire: true,
        }
    }

    pub fn bricks_remaining(&self) -> usize {
        self.bricks
            .iter()
            .map(|row| row.iter().filter(|b| **b).count())
            .sum()
    }
}

/// Deterministic rasterization of a game state into a normalized
/// grayscale frame. The toy environment renders directly at 80x80, so the
/// crop pass of the preprocessing contract is the identity.
pub fn render_frame(state: &GameState) -> Frame {
    let mut frame = Frame::standard_zeros();
    for (r, row) in state.bricks.iter().enumerate() {
        for (c, alive) in row.iter().enumerate() {
            if *alive {
                fill_rect(
                    &mut frame,
                    (c * BRICK_W) as i32,
                    (BRICK_TOP + r * BRICK_H) as i32,
                    BRICK_W as i32,
                    BRICK_H as i32,
                    ROW_INTENSITY[r],
                );
            }
        }
    }
    fill_rect(
        &mut frame,
        state.paddle_x,
        PADDLE_TOP as i32,
        PADDLE_W,
        PADDLE_H as i32,
        PADDLE_INTENSITY,
    );
    if !state.awaiting_fire {
        fill_rect(
            &mut frame,
            state.ball.0,
            state.ball.1,
            BALL_SIZE,
            BALL_SIZE,
            BALL_INTENSITY,
        );
    }
    frame
}

fn fill_rect(frame: &mut Frame, x0: i32, y0: i32, w: i32, h: i32, v: f64) {
    let x_lo = x0.max(0);
    let x_hi = (x0 + w).min(frame.width() as i32);
    let y_lo = y0.max(0);
    let y_hi = (y0 + h).min(frame.height() as i32);
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            frame.set(x as usize, y as usize, v);
        }
    }
}

fn pixel_max(a: &Frame, b: &Frame) -> Frame {
    debug_assert_eq!(a.width(), b.width());
    debug_assert_eq!(a.height(), b.height());
    let mut out = a.clone();
    for y in 0..a.height() {
        for x in 0..a.width() {
            out.set(x, y, a.get(x, y).max(b.get(x, y)));
        }
    }
    out
}

/// The toy Breakout environment.
#[derive(Clone, Debug)]
pub struct ToyBreakout {
    cfg: EnvConfig,
    pub state: GameState,
    rng: ChaCha8Rng,
    prev_raw: Frame,
    terminal: bool,
    agent_steps: u32,
}

impl ToyBreakout {
    /// Builds the environment in a terminal state; call `reset` first.
    pub fn new(cfg: EnvConfig) -> ToyBreakout {
        let state = GameState::initial();
        let prev_raw = render_frame(&state);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        ToyBreakout {
            cfg,
            state,
            rng,
            prev_raw,
            terminal: true,
            agent_steps: 0,
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    /// Serves the ball: it appears mid-screen moving diagonally downward,
    /// with a randomized column and horizontal direction.
    fn serve(&mut self) {
        let x: i32 = self.rng.gen_range(6..=72);
        let dx = if self.rng.gen::<bool>() { 1 } else { -1 };
        self.state.ball = (x, 40);
        self.state.ball_vel = (dx, 1);
        self.state.awaiting_fire = false;
    }

    /// One internal simulator tick. Returns (raw reward, life lost).
    fn tick(&mut self, action: usize) -> (i64, bool) {
        match action {
            NAT_LEFT => self.state.paddle_x -= PADDLE_SPEED,
            NAT_RIGHT => self.state.paddle_x += PADDLE_SPEED,
            _ => {}
        }
        self.state.paddle_x = self.state.paddle_x.clamp(0, SCREEN_WIDTH as i32 - PADDLE_W);

        if self.state.awaiting_fire {
            if action == NAT_FIRE && self.state.lives > 0 {
                self.serve();
            }
            return (0, false);
        }

        let (mut dx, mut dy) = self.state.ball_vel;
        let mut x = self.state.ball.0 + dx;
        let mut y = self.state.ball.1 + dy;
        let mut reward = 0i64;

        // Side and top walls.
        if x < 0 {
            x = 0;
            dx = 1;
        } else if x > SCREEN_WIDTH as i32 - BALL_SIZE {
            x = SCREEN_WIDTH as i32 - BALL_SIZE;
            dx = -1;
        }
        if y < 0 {
            y = 0;
            dy = 1;
        }

        // Bricks: kill at most one per tick, reflect vertically.
        if let Some((r, c)) = first_brick_overlap(&self.state, x, y) {
            self.state.bricks[r][c] = false;
            self.state.score += 1;
            reward += 1;
            dy = -dy;
        }

        // Paddle: only catches a descending ball.
        if dy > 0 {
            let bottom = y + BALL_SIZE;
            let vertical = bottom > PADDLE_TOP as i32 && y < (PADDLE_TOP + PADDLE_H) as i32;
            let horizontal =
                x + BALL_SIZE > self.state.paddle_x && x < self.state.paddle_x + PADDLE_W;
            if vertical && horizontal {
                dy = -1;
                y = PADDLE_TOP as i32 - BALL_SIZE;
                // The hit zone steers the ball: outer thirds deflect outward.
                let off = x + 1 - self.state.paddle_x;
                if off < PADDLE_W / 3 {
                    dx = -1;
                } else if off >= 2 * PADDLE_W / 3 {
                    dx = 1;
                }
            }
        }

        let mut life_lost = false;
        if y > SCREEN_HEIGHT as i32 - BALL_SIZE {
            self.state.lives = self.state.lives.saturating_sub(1);
            self.state.awaiting_fire = true;
            self.state.ball = (0, 0);
            self.state.ball_vel = (0, 0);
            life_lost = true;
        } else {
            self.state.ball = (x, y);
            self.state.ball_vel = (dx, dy);
        }
        (reward, life_lost)
    }
}

fn first_brick_overlap(state: &GameState, x: i32, y: i32) -> Option<(usize, usize)> {
    let zone_top = BRICK_TOP as i32;
    let zone_bottom = (BRICK_TOP + BRICK_ROWS * BRICK_H) as i32;
    if y + BALL_SIZE <= zone_top || y >= zone_bottom {
        return None;
    }
    for r in 0..BRICK_ROWS {
        let ry0 = (BRICK_TOP + r * BRICK_H) as i32;
        if y + BALL_SIZE <= ry0 || y >= ry0 + BRICK_H as i32 {
            continue;
        }
        for c in 0..BRICK_COLS {
            if !state.bricks[r][c] {
                continue;
            }
            let cx0 = (c * BRICK_W) as i32;
            if x + BALL_SIZE > cx0 && x < cx0 + BRICK_W as i32 {
                return Some((r, c));
            }
        }
    }
    None
}

impl Environment for ToyBreakout {
    fn reset(&mut self) -> Frame {
        self.state = GameState::initial();
        self.terminal = false;
        self.agent_steps = 0;
        let noops = if self.cfg.noop_max > self.cfg.noop_min {
            self.rng.gen_range(self.cfg.noop_min..=self.cfg.noop_max)
        } else {
            self.cfg.noop_min
        };
        for _ in 0..noops {
            self.tick(NAT_NOOP);
        }
        if self.cfg.fire_on_reset {
            self.tick(NAT_FIRE);
        }
        self.prev_raw = render_frame(&self.state);
        self.prev_raw.clone()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.terminal {
            return Err(EnvError::Terminal);
        }
        if action >= natural_action_count() {
            return Err(EnvError::InvalidAction(action));
        }
        let mut raw_sum = 0i64;
        let mut life_lost = false;
        let mut pooled = self.prev_raw.clone();
        for _ in 0..self.cfg.frame_skip.max(1) {
            let (r, ll) = self.tick(action);
            raw_sum += r;
            life_lost |= ll;
            let raw = render_frame(&self.state);
            pooled = if self.cfg.max_pool_screens {
                pixel_max(&raw, &self.prev_raw)
            } else {
                raw.clone()
            };
            self.prev_raw = raw;
            let stop = (life_lost && self.cfg.life_loss_terminal)
                || self.state.lives == 0
                || self.state.bricks_remaining() == 0;
            if stop {
                break;
            }
        }
        self.agent_steps += 1;
        self.terminal = (life_lost && self.cfg.life_loss_terminal)
            || self.state.lives == 0
            || self.state.bricks_remaining() == 0
            || self.agent_steps >= self.cfg.step_cap;
        let reward = if self.cfg.clip_rewards {
            (raw_sum.signum()) as f64
        } else {
            raw_sum as f64
        };
        Ok(StepResult {
            frame: pooled,
            reward,
            terminal: self.terminal,
            lives: self.state.lives,
            raw_score: self.state.score,
        })
    }

    fn action_count(&self) -> usize {
        natural_action_count()
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "paddle@{} ball@({}, {}) lives={} score={} bricks={}{}",
            self.paddle_x,
            self.ball.0,
            self.ball.1,
            self.lives,
            self.score,
            self.bricks_remaining(),
            if self.awaiting_fire { " [serve]" } else { "" }
        )
    }
}

/// Human-readable identifier for config dumps.
pub fn describe_actions() -> String {
    format!("NOOP={NAT_NOOP} FIRE={NAT_FIRE} LEFT={NAT_LEFT} RIGHT={NAT_RIGHT}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn env_with_seed(seed: u64) -> ToyBreakout {
        ToyBreakout::new(EnvConfig {
            seed,
            ..EnvConfig::default()
        })
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let mut a = env_with_seed(99);
        let mut b = env_with_seed(99);
        assert_eq!(a.reset(), b.reset());
        let actions = [NAT_LEFT, NAT_RIGHT, NAT_NOOP, NAT_RIGHT, NAT_LEFT, NAT_NOOP];
        for &act in actions.iter().cycle().take(120) {
            if a.is_terminal() {
                assert!(b.is_terminal());
                assert_eq!(a.reset(), b.reset());
            }
            let ra = a.step(act).unwrap();
            let rb = b.step(act).unwrap();
            assert_eq!(ra.frame, rb.frame);
            assert_eq!(ra.reward, rb.reward);
            assert_eq!(ra.terminal, rb.terminal);
        }
    }

    #[test]
    fn fire_on_reset_launches_the_ball() {
        let mut env = env_with_seed(3);
        env.reset();
        assert!(!env.state.awaiting_fire);
        assert_eq!(env.state.ball_vel.1, 1);
    }

    #[test]
    fn zero_noop_range_applies_no_noops() {
        let cfg = EnvConfig {
            noop_min: 0,
            noop_max: 0,
            fire_on_reset: false,
            seed: 5,
            ..EnvConfig::default()
        };
        let mut env = ToyBreakout::new(cfg);
        env.reset();
        // Without fire the state is exactly the initial one.
        assert_eq!(env.state, GameState::initial());
    }

    #[test]
    fn paddle_clamps_at_walls() {
        let mut env = env_with_seed(1);
        env.reset();
        for _ in 0..60 {
            if env.is_terminal() {
                env.reset();
            }
            env.step(NAT_LEFT).unwrap();
        }
        assert_eq!(env.state.paddle_x, 0);
        env.state.paddle_x = SCREEN_WIDTH as i32 - PADDLE_W;
        if env.is_terminal() {
            env.reset();
            env.state.paddle_x = SCREEN_WIDTH as i32 - PADDLE_W;
        }
        env.step(NAT_RIGHT).unwrap();
        assert_eq!(env.state.paddle_x, SCREEN_WIDTH as i32 - PADDLE_W);
    }

    #[test]
    fn ball_below_paddle_costs_a_life_and_terminates() {
        let mut env = env_with_seed(2);
        env.reset();
        // Park the ball just above the floor, descending, far from the paddle.
        env.state.paddle_x = 0;
        env.state.ball = (60, 74);
        env.state.ball_vel = (1, 1);
        let lives_before = env.state.lives;
        let mut result = None;
        for _ in 0..4 {
            let r = env.step(NAT_NOOP).unwrap();
            let done = r.terminal;
            result = Some(r);
            if done {
                break;
            }
        }
        let r = result.unwrap();
        assert!(r.terminal);
        assert_eq!(r.lives, lives_before - 1);
        assert!(env.step(NAT_NOOP).is_err());
    }

    #[test]
    fn two_brick_hits_in_one_window_clip_to_one() {
        let mut env = env_with_seed(4);
        env.reset();
        // Ball straddling two brick columns, rising into the lowest row:
        // tick 1 kills the first brick and flips dy; tick 2 overlaps the
        // second column while still inside the row and kills it too.
        env.state.ball = (7, 28); // columns 0 and 1, just below the wall
        env.state.ball_vel = (0, -1);
        env.state.paddle_x = 34;
        let before = env.state.score;
        let r = env.step(NAT_NOOP).unwrap();
        assert_eq!(env.state.score - before, 2, "wanted two kills in the window");
        assert_eq!(r.reward, 1.0, "clipped to +1");
        assert_eq!(r.raw_score, env.state.score);
    }

    #[test]
    fn unclipped_rewards_report_raw_sums() {
        let cfg = EnvConfig {
            clip_rewards: false,
            seed: 4,
            ..EnvConfig::default()
        };
        let mut env = ToyBreakout::new(cfg);
        env.reset();
        env.state.ball = (7, 28);
        env.state.ball_vel = (0, -1);
        let r = env.step(NAT_NOOP).unwrap();
        assert_eq!(r.reward, 2.0);
    }

    #[test]
    fn render_empty_offscreen_scene_is_all_zero() {
        let state = GameState {
            paddle_x: -100,
            ball: (-50, -50),
            ball_vel: (1, 1),
            bricks: [[false; BRICK_COLS]; BRICK_ROWS],
            lives: 3,
            score: 0,
            awaiting_fire: false,
        };
        let frame = render_frame(&state);
        assert!(frame.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn render_is_a_pure_function_of_state() {
        let mut env = env_with_seed(8);
        env.reset();
        assert_eq!(render_frame(&env.state), render_frame(&env.state.clone()));
    }

    #[test]
    fn initial_scene_nonzero_fraction_matches_geometry() {
        // Full wall: 60 bricks of 8x3, paddle 12x2, ball 2x2, no overlap
        // right after the serve.
        let mut env = env_with_seed(21);
        let frame = env.reset();
        let nonzero = frame.data().iter().filter(|v| **v > 0.0).count();
        let expect = BRICK_ROWS * BRICK_COLS * BRICK_W * BRICK_H
            + (PADDLE_W as usize) * PADDLE_H
            + (BALL_SIZE as usize) * (BALL_SIZE as usize);
        assert_eq!(nonzero, expect);
        assert_eq!(expect, 1468);
    }

    #[test]
    fn step_pools_the_last_two_tick_frames() {
        let mut env = env_with_seed(17);
        env.reset();
        for _ in 0..25 {
            if env.is_terminal() {
                env.reset();
            }
            let mut shadow = env.clone();
            let result = env.step(NAT_RIGHT).unwrap();
            // Reconstruct the tick frames on the shadow copy.
            let mut frames = Vec::new();
            for _ in 0..shadow.cfg.frame_skip {
                let (_, ll) = shadow.tick(NAT_RIGHT);
                frames.push(render_frame(&shadow.state));
                if (ll && shadow.cfg.life_loss_terminal)
                    || shadow.state.lives == 0
                    || shadow.state.bricks_remaining() == 0
                {
                    break;
                }
            }
            let last = frames.last().unwrap();
            let prev = if frames.len() >= 2 {
                frames[frames.len() - 2].clone()
            } else {
                // Single tick: pooled against the pre-step frame.
                render_frame(&env_replay_prev(&frames))
            };
            let expect = pixel_max(last, &prev);
            for (a, b) in result.frame.data().iter().zip(expect.data()) {
                assert!(result.frame.data().len() == 6400 && (a - b).abs() < 1e-15);
                // Returned frame dominates both tick frames.
            }
            for (a, b) in result.frame.data().iter().zip(last.data()) {
                assert!(a >= b);
            }
            if result.terminal {
                env.reset();
            }
        }
    }

    // Helper for the rare one-tick window in the pooling test: the pre-step
    // render is what prev_raw held, which for a fresh step equals the state
    // before any tick. Reconstructing it exactly would need another clone
    // taken before stepping, so the test only takes this branch when the
    // window is cut short at the first tick, which the seeds above never
    // produce; keep a deterministic fallback to fail loudly if they do.
    fn env_replay_prev(_frames: &[Frame]) -> GameState {
        panic!("single-tick window not expected with these seeds");
    }

    #[test]
    fn brick_count_is_monotone_within_a_life() {
        let mut env = env_with_seed(33);
        env.reset();
        let mut last = env.state.bricks_remaining();
        for i in 0..400 {
            if env.is_terminal() {
                env.reset();
                last = env.state.bricks_remaining();
            }
            let act = [NAT_LEFT, NAT_RIGHT, NAT_NOOP][i % 3];
            env.step(act).unwrap();
            let now = env.state.bricks_remaining();
            assert!(now <= last);
            last = now;
        }
    }

    #[test]
    fn hard_cap_terminates_long_episodes() {
        let cfg = EnvConfig {
            step_cap: 3,
            fire_on_reset: false,
            life_loss_terminal: false,
            seed: 0,
            ..EnvConfig::default()
        };
        let mut env = ToyBreakout::new(cfg);
        env.reset();
        // Never firing: nothing can end the episode except the cap.
        assert!(!env.step(NAT_NOOP).unwrap().terminal);
        assert!(!env.step(NAT_NOOP).unwrap().terminal);
        assert!(env.step(NAT_NOOP).unwrap().terminal);
    }

    #[test]
    fn clipped_rewards_stay_in_support_over_random_play() {
        let mut env = env_with_seed(55);
        env.reset();
        for i in 0..600 {
            if env.is_terminal() {
                env.reset();
            }
            let r = env.step(i % 4).unwrap();
            assert!(r.reward == -1.0 || r.reward == 0.0 || r.reward == 1.0);
        }
    }
}

//! Deterministic gridworlds: a single room with a dynamic goal, and the
//! four-room layouts with a key and a car or a lock.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, origin in
//! the top-left corner. `North` decreases `y`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, HrlError, Result};

/// A location in the unit square, used for network inputs and clustering.
pub type Point = [f64; 2];

pub const LAYOUT_FORMAT_VERSION: u32 = 1;

pub const KEY_REWARD: f64 = 10.0;
pub const LOCK_REWARD: f64 = 40.0;
pub const CAR_REWARD: f64 = 100.0;
pub const WALL_PENALTY: f64 = -2.0;
pub const GOAL_REWARD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub x: i32,
    pub y: i32,
}

impl GridPos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, action: Action) -> Self {
        let (dx, dy) = action.delta();
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: GridPos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    North,
    South,
    East,
    West,
}

impl Action {
    pub const COUNT: usize = 4;
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::North => (0, -1),
            Action::South => (0, 1),
            Action::East => (1, 0),
            Action::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Action {
        match self {
            Action::North => Action::South,
            Action::South => Action::North,
            Action::East => Action::West,
            Action::West => Action::East,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SingleRoomDynamicGoal,
    FourRoomKeyCar,
    FourRoomKeyLock,
}

impl Variant {
    pub fn is_four_room(self) -> bool {
        !matches!(self, Variant::SingleRoomDynamicGoal)
    }

    /// Reward for entering the car/lock cell while holding the key.
    pub fn completion_reward(self) -> f64 {
        match self {
            Variant::FourRoomKeyLock => LOCK_REWARD,
            Variant::FourRoomKeyCar | Variant::SingleRoomDynamicGoal => CAR_REWARD,
        }
    }

    pub fn default_size(self) -> (i32, i32) {
        match self {
            Variant::SingleRoomDynamicGoal => (10, 10),
            _ => (20, 20),
        }
    }
}

/// Hard placement draws objects uniformly; easy placement pins the key and
/// the car/lock to opposite corners (and, for the dynamic-goal task, puts the
/// goal next to the start cell).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    Hard,
    Easy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutOptions {
    pub width: i32,
    pub height: i32,
    pub placement: Placement,
}

impl LayoutOptions {
    pub fn for_variant(variant: Variant) -> Self {
        let (width, height) = variant.default_size();
        Self { width, height, placement: Placement::Hard }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct Layout {
    pub width: i32,
    pub height: i32,
    pub walls: BTreeSet<GridPos>,
    pub doorways: Vec<GridPos>,
    pub key_pos: GridPos,
    pub reward_pos: GridPos,
    pub variant: Variant,
    open: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutRepr {
    format_version: u32,
    width: i32,
    height: i32,
    walls: Vec<GridPos>,
    doorways: Vec<GridPos>,
    key_pos: GridPos,
    reward_pos: GridPos,
    variant: Variant,
}

impl From<Layout> for LayoutRepr {
    fn from(l: Layout) -> Self {
        LayoutRepr {
            format_version: LAYOUT_FORMAT_VERSION,
            width: l.width,
            height: l.height,
            walls: l.walls.into_iter().collect(),
            doorways: l.doorways,
            key_pos: l.key_pos,
            reward_pos: l.reward_pos,
            variant: l.variant,
        }
    }
}

impl TryFrom<LayoutRepr> for Layout {
    type Error = HrlError;

    fn try_from(r: LayoutRepr) -> Result<Self> {
        if r.format_version != LAYOUT_FORMAT_VERSION {
            return Err(HrlError::Format(format!(
                "layout format_version {} (expected {LAYOUT_FORMAT_VERSION})",
                r.format_version
            )));
        }
        let layout = Layout::from_parts(
            r.width,
            r.height,
            r.walls.into_iter().collect(),
            r.doorways,
            r.key_pos,
            r.reward_pos,
            r.variant,
        );
        layout.validate()?;
        Ok(layout)
    }
}

impl Layout {
    pub fn from_parts(
        width: i32,
        height: i32,
        walls: BTreeSet<GridPos>,
        doorways: Vec<GridPos>,
        key_pos: GridPos,
        reward_pos: GridPos,
        variant: Variant,
    ) -> Self {
        let mut open = vec![true; (width.max(0) * height.max(0)) as usize];
        for w in &walls {
            if w.x >= 0 && w.x < width && w.y >= 0 && w.y < height {
                open[(w.y * width + w.x) as usize] = false;
            }
        }
        Layout { width, height, walls, doorways, key_pos, reward_pos, variant, open }
    }

    pub fn in_bounds(&self, p: GridPos) -> bool {
        p.x >= 0 && p.x < self.width && p.y >= 0 && p.y < self.height
    }

    /// In bounds and not a wall.
    pub fn is_open(&self, p: GridPos) -> bool {
        self.in_bounds(p) && self.open[(p.y * self.width + p.x) as usize]
    }

    pub fn cell_index(&self, p: GridPos) -> usize {
        (p.y * self.width + p.x) as usize
    }

    pub fn open_cells(&self) -> Vec<GridPos> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| GridPos::new(x, y)))
            .filter(|&p| self.is_open(p))
            .collect()
    }

    /// Cells eligible for the key and the car/lock: open and not a doorway.
    pub fn object_cells(&self) -> Vec<GridPos> {
        self.open_cells().into_iter().filter(|p| !self.doorways.contains(p)).collect()
    }

    /// Maps a cell to `[0,1]²`.
    pub fn normalize(&self, p: GridPos) -> Point {
        normalize_in((self.width, self.height), p)
    }

    pub fn grid(&self) -> (i32, i32) {
        (self.width, self.height)
    }

    /// Distance between horizontally adjacent cells in normalized units.
    pub fn cell_width(&self) -> f64 {
        1.0 / (self.width - 1).max(1) as f64
    }

    fn divider(&self) -> (i32, i32) {
        (self.width / 2, self.height / 2)
    }

    /// Room index of a cell: 0 top-left, 1 top-right, 2 bottom-left,
    /// 3 bottom-right. Walls and doorways belong to no room; the single-room
    /// variant has one room, index 0.
    pub fn room_of(&self, p: GridPos) -> Option<usize> {
        if !self.is_open(p) || self.doorways.contains(&p) {
            return None;
        }
        if !self.variant.is_four_room() {
            return Some(0);
        }
        let (wx, wy) = self.divider();
        let col = usize::from(p.x > wx);
        let row = usize::from(p.y > wy);
        Some(row * 2 + col)
    }

    pub fn room_count(&self) -> usize {
        if self.variant.is_four_room() {
            4
        } else {
            1
        }
    }

    pub fn room_cells(&self, room: usize) -> Vec<GridPos> {
        self.open_cells().into_iter().filter(|&p| self.room_of(p) == Some(room)).collect()
    }

    /// Geometric center of a room in normalized coordinates.
    pub fn room_center(&self, room: usize) -> Point {
        let cells = self.room_cells(room);
        let n = cells.len().max(1) as f64;
        let (sx, sy) = cells.iter().map(|&c| self.normalize(c)).fold((0.0, 0.0), |acc, p| (acc.0 + p[0], acc.1 + p[1]));
        [sx / n, sy / n]
    }

    /// Diagonal of the room's bounding box (cell extents) in normalized units.
    pub fn room_diagonal(&self, room: usize) -> f64 {
        let cells = self.room_cells(room);
        let (min_x, max_x) = cells.iter().fold((i32::MAX, i32::MIN), |a, c| (a.0.min(c.x), a.1.max(c.x)));
        let (min_y, max_y) = cells.iter().fold((i32::MAX, i32::MIN), |a, c| (a.0.min(c.y), a.1.max(c.y)));
        let w = (max_x - min_x + 1) as f64 / (self.width - 1).max(1) as f64;
        let h = (max_y - min_y + 1) as f64 / (self.height - 1).max(1) as f64;
        (w * w + h * h).sqrt()
    }

    /// Checks the structural invariants of the layout.
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return contract(format!("layout {}x{} too small", self.width, self.height));
        }
        if self.key_pos == self.reward_pos {
            return contract("key and reward share a cell");
        }
        for (name, p) in [("key", self.key_pos), ("reward", self.reward_pos)] {
            if !self.is_open(p) {
                return contract(format!("{name} at {p} is not an open cell"));
            }
        }
        for d in &self.doorways {
            if !self.is_open(*d) {
                return contract(format!("doorway {d} is not an open cell"));
            }
        }
        if self.variant.is_four_room() && self.doorways.len() != 4 {
            return contract(format!("four-room layout has {} doorways", self.doorways.len()));
        }
        Ok(())
    }
}

/// Maps a cell of a `width x height` grid to `[0,1]²`.
pub fn normalize_in(grid: (i32, i32), p: GridPos) -> Point {
    let sx = (grid.0 - 1).max(1) as f64;
    let sy = (grid.1 - 1).max(1) as f64;
    [p.x as f64 / sx, p.y as f64 / sy]
}

/// Builds a layout for `variant` at its default size.
pub fn generate_layout(variant: Variant, seed: u64) -> Layout {
    generate_layout_with(variant, &LayoutOptions::for_variant(variant), seed)
}

pub fn generate_layout_with(variant: Variant, opts: &LayoutOptions, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (opts.width, opts.height);
    let mut walls = BTreeSet::new();
    let mut doorways = Vec::new();

    if variant.is_four_room() {
        let (wx, wy) = (w / 2, h / 2);
        for y in 0..h {
            walls.insert(GridPos::new(wx, y));
        }
        for x in 0..w {
            walls.insert(GridPos::new(x, wy));
        }
        // One gap in each of the four wall segments.
        doorways.push(GridPos::new(wx, rng.gen_range(0..wy)));
        doorways.push(GridPos::new(wx, rng.gen_range(wy + 1..h)));
        doorways.push(GridPos::new(rng.gen_range(0..wx), wy));
        doorways.push(GridPos::new(rng.gen_range(wx + 1..w), wy));
        for d in &doorways {
            walls.remove(d);
        }
    }

    let mut layout = Layout::from_parts(w, h, walls, doorways, GridPos::new(0, 0), GridPos::new(w - 1, h - 1), variant);
    if opts.placement == Placement::Hard {
        let cells = layout.object_cells();
        let picked: Vec<GridPos> = cells.choose_multiple(&mut rng, 2).copied().collect();
        layout.key_pos = picked[0];
        layout.reward_pos = picked[1];
    }
    debug_assert!(layout.validate().is_ok());
    layout
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent: GridPos,
    pub has_key: bool,
    pub step_count: u32,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next_obs: GridPos,
    pub reward: f64,
    /// Episode over: task completed or step limit reached.
    pub terminal: bool,
    /// Task completed (as opposed to cut off by the step limit).
    pub success: bool,
}

/// A layout plus a step limit. Cheap to clone; holds no episode state.
#[derive(Debug, Clone)]
pub struct GridEnv {
    pub layout: Layout,
    pub max_steps: u32,
    cells: Vec<GridPos>,
}

pub const DEFAULT_MAX_STEPS: u32 = 200;

impl GridEnv {
    pub fn new(layout: Layout, max_steps: u32) -> Self {
        let cells = layout.open_cells();
        Self { layout, max_steps, cells }
    }

    pub fn open_cells(&self) -> &[GridPos] {
        &self.cells
    }

    /// Fresh episode with the agent on a uniformly drawn open cell.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvState {
        let agent = self.cells[rng.gen_range(0..self.cells.len())];
        self.reset_at(agent)
    }

    pub fn reset_seeded(&self, seed: u64) -> EnvState {
        self.reset(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn reset_at(&self, agent: GridPos) -> EnvState {
        EnvState { agent, has_key: false, step_count: 0, done: false }
    }

    pub fn step(&self, state: &EnvState, action: Action) -> Result<(EnvState, StepOutcome)> {
        if state.done {
            return contract(format!("step on a finished episode at {}", state.agent));
        }
        let layout = &self.layout;
        let mut next = state.clone();
        next.step_count += 1;
        let target = state.agent.offset(action);
        let mut reward = 0.0;
        let mut success = false;
        if !layout.is_open(target) {
            reward = WALL_PENALTY;
        } else {
            next.agent = target;
            if target == layout.key_pos && !state.has_key {
                reward = KEY_REWARD;
                next.has_key = true;
            } else if target == layout.reward_pos && state.has_key {
                reward = layout.variant.completion_reward();
                success = true;
            }
        }
        let terminal = success || next.step_count >= self.max_steps;
        next.done = terminal;
        let outcome = StepOutcome { next_obs: next.agent, reward, terminal, success };
        Ok((next, outcome))
    }
}

/// What the agent sees: its cell. Key possession stays hidden.
pub fn observation(state: &EnvState) -> GridPos {
    state.agent
}

/// Single room where a fresh goal cell is drawn every episode. Reaching the
/// goal pays +1 and ends the episode; bumping a wall pays -2.
#[derive(Debug, Clone)]
pub struct DynamicGoalEnv {
    pub env: GridEnv,
    pub placement: Placement,
}

impl DynamicGoalEnv {
    pub fn new(layout: Layout, max_steps: u32, placement: Placement) -> Self {
        Self { env: GridEnv::new(layout, max_steps), placement }
    }

    /// Start state and goal for a new episode. A goal drawn on the start
    /// cell yields an already-finished, successful episode.
    pub fn episode<R: Rng + ?Sized>(&self, rng: &mut R) -> (EnvState, GridPos) {
        let mut state = self.env.reset(rng);
        let goal = match self.placement {
            Placement::Hard => {
                let cells = self.env.open_cells();
                cells[rng.gen_range(0..cells.len())]
            }
            Placement::Easy => {
                let near: Vec<GridPos> = Action::ALL
                    .iter()
                    .map(|&a| state.agent.offset(a))
                    .filter(|&p| self.env.layout.is_open(p))
                    .collect();
                near[rng.gen_range(0..near.len())]
            }
        };
        state.done = state.agent == goal;
        (state, goal)
    }

    pub fn step(&self, state: &EnvState, goal: GridPos, action: Action) -> Result<(EnvState, StepOutcome)> {
        if state.done {
            return contract(format!("step on a finished episode at {}", state.agent));
        }
        let mut next = state.clone();
        next.step_count += 1;
        let target = state.agent.offset(action);
        let mut reward = 0.0;
        if self.env.layout.is_open(target) {
            next.agent = target;
        } else {
            reward = WALL_PENALTY;
        }
        let success = next.agent == goal;
        if success {
            reward = GOAL_REWARD;
        }
        let terminal = success || next.step_count >= self.env.max_steps;
        next.done = terminal;
        let outcome = StepOutcome { next_obs: next.agent, reward, terminal, success };
        Ok((next, outcome))
    }
}

/// Single-room layout and a uniformly drawn goal cell.
pub fn dynamic_goal_env(seed: u64) -> (Layout, GridPos) {
    let layout = generate_layout(Variant::SingleRoomDynamicGoal, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let cells = layout.open_cells();
    let goal = cells[rng.gen_range(0..cells.len())];
    (layout, goal)
}

/// Breadth-first shortest path lengths from `from` to every cell
/// (`u32::MAX` where unreachable).
pub fn bfs_distances(layout: &Layout, from: GridPos) -> Vec<u32> {
    let mut dist = vec![u32::MAX; (layout.width * layout.height) as usize];
    if !layout.is_open(from) {
        return dist;
    }
    let mut queue = std::collections::VecDeque::new();
    dist[layout.cell_index(from)] = 0;
    queue.push_back(from);
    while let Some(p) = queue.pop_front() {
        let d = dist[layout.cell_index(p)];
        for a in Action::ALL {
            let q = p.offset(a);
            if layout.is_open(q) && dist[layout.cell_index(q)] == u32::MAX {
                dist[layout.cell_index(q)] = d + 1;
                queue.push_back(q);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_lock() -> Layout {
        generate_layout(Variant::FourRoomKeyLock, 7)
    }

    #[test]
    fn layout_is_deterministic_per_seed() {
        assert_eq!(key_lock(), key_lock());
        assert_ne!(key_lock(), generate_layout(Variant::FourRoomKeyLock, 8));
    }

    #[test]
    fn four_room_structure() {
        for seed in 0..50 {
            let l = generate_layout(Variant::FourRoomKeyLock, seed);
            l.validate().unwrap();
            assert_eq!(l.doorways.len(), 4);
            assert_ne!(l.key_pos, l.reward_pos);
            assert!(!l.doorways.contains(&l.key_pos));
            // every room is reachable from every other through the doorways
            let dist = bfs_distances(&l, l.key_pos);
            assert!(l.open_cells().iter().all(|&c| dist[l.cell_index(c)] != u32::MAX));
            let sizes: Vec<usize> = (0..4).map(|r| l.room_cells(r).len()).collect();
            assert_eq!(sizes.iter().sum::<usize>() + 4, l.open_cells().len());
        }
    }

    #[test]
    fn easy_placement_pins_corners() {
        let opts = LayoutOptions { placement: Placement::Easy, ..LayoutOptions::for_variant(Variant::FourRoomKeyCar) };
        let l = generate_layout_with(Variant::FourRoomKeyCar, &opts, 3);
        assert_eq!(l.key_pos, GridPos::new(0, 0));
        assert_eq!(l.reward_pos, GridPos::new(19, 19));
    }

    fn next_to(l: &Layout, target: GridPos) -> (GridPos, Action) {
        for a in Action::ALL {
            let from = target.offset(a.opposite());
            if l.is_open(from) && from != l.key_pos && from != l.reward_pos {
                return (from, a);
            }
        }
        panic!("no open neighbour");
    }

    #[test]
    fn key_pickup_pays_once() {
        let l = key_lock();
        let env = GridEnv::new(l.clone(), 200);
        let (from, a) = next_to(&l, l.key_pos);
        let s = env.reset_at(from);
        let (s1, out) = env.step(&s, a).unwrap();
        assert_eq!(out.reward, KEY_REWARD);
        assert!(s1.has_key && !out.terminal);
        let (s2, _) = env.step(&s1, a.opposite()).unwrap();
        let (s3, out) = env.step(&s2, a).unwrap();
        assert_eq!(out.reward, 0.0);
        assert!(s3.has_key);
    }

    #[test]
    fn wall_bump_keeps_position() {
        let l = key_lock();
        let env = GridEnv::new(l, 200);
        let s = env.reset_at(GridPos::new(0, 0));
        let (s1, out) = env.step(&s, Action::North).unwrap();
        assert_eq!(s1.agent, s.agent);
        assert_eq!(out.reward, WALL_PENALTY);
        assert_eq!(s1.step_count, 1);
    }

    #[test]
    fn lock_needs_key() {
        let l = key_lock();
        let env = GridEnv::new(l.clone(), 200);
        let (from, a) = next_to(&l, l.reward_pos);
        let (s1, out) = env.step(&env.reset_at(from), a).unwrap();
        assert_eq!(out.reward, 0.0);
        assert!(!out.terminal && !s1.done);

        let mut with_key = env.reset_at(from);
        with_key.has_key = true;
        let (_, out) = env.step(&with_key, a).unwrap();
        assert_eq!(out.reward, LOCK_REWARD);
        assert!(out.terminal && out.success);
    }

    #[test]
    fn key_car_pays_hundred() {
        let l = generate_layout(Variant::FourRoomKeyCar, 1);
        let env = GridEnv::new(l.clone(), 200);
        let (from, a) = next_to(&l, l.reward_pos);
        let mut s = env.reset_at(from);
        s.has_key = true;
        assert_eq!(env.step(&s, a).unwrap().1.reward, CAR_REWARD);
    }

    #[test]
    fn stepping_finished_episode_is_rejected() {
        let env = GridEnv::new(key_lock(), 1);
        let (s1, out) = env.step(&env.reset_at(GridPos::new(0, 0)), Action::East).unwrap();
        assert!(out.terminal && !out.success);
        assert!(matches!(env.step(&s1, Action::East), Err(HrlError::Contract(_))));
    }

    #[test]
    fn observation_hides_key() {
        let mut s = EnvState { agent: GridPos::new(3, 4), has_key: true, step_count: 0, done: false };
        assert_eq!(observation(&s), GridPos::new(3, 4));
        s.has_key = false;
        assert_eq!(observation(&s), GridPos::new(3, 4));
    }

    #[test]
    fn reset_is_deterministic_and_keyless() {
        let env = GridEnv::new(key_lock(), 200);
        assert_eq!(env.reset_seeded(11), env.reset_seeded(11));
        assert!(!env.reset_seeded(11).has_key);
        assert_eq!(env.reset_seeded(11).step_count, 0);
    }

    #[test]
    fn dynamic_goal_degenerate_and_adjacent() {
        let layout = generate_layout(Variant::SingleRoomDynamicGoal, 0);
        let env = DynamicGoalEnv::new(layout, 50, Placement::Easy);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (s, goal) = env.episode(&mut rng);
        assert_eq!(s.agent.manhattan(goal), 1);
        let a = Action::ALL.into_iter().find(|&a| s.agent.offset(a) == goal).unwrap();
        let (_, out) = env.step(&s, goal, a).unwrap();
        assert!(out.success && out.terminal);
        assert_eq!(out.reward, GOAL_REWARD);

        // goal on the start cell: finished before any step
        let hard = DynamicGoalEnv::new(env.env.layout.clone(), 50, Placement::Hard);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let found = (0..5000).map(|_| hard.episode(&mut rng)).find(|(s, g)| s.agent == *g);
        let (s, _) = found.expect("start == goal within 5000 draws");
        assert!(s.done && s.step_count == 0);
    }

    #[test]
    fn layout_json_round_trip() {
        let l = key_lock();
        let json = serde_json::to_string(&l).unwrap();
        assert!(json.contains("\"format_version\":1"));
        let back: Layout = serde_json::from_str(&json).unwrap();
        assert_eq!(back, l);
    }
}

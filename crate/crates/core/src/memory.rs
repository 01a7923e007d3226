//! Bounded FIFO experience memories for the agent, the controller and the
//! meta-controller.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::env::{Action, GridPos, Point};
use crate::error::{HrlError, Result};

pub const MEMORY_FORMAT_VERSION: u32 = 1;

/// One environment step `(s, a, r, s')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: GridPos,
    pub a: Action,
    pub r: f64,
    pub s_next: GridPos,
    pub terminal: bool,
}

/// A controller step `(s, g, a, r̃, s')`.
///
/// `goal` is the point the controller was conditioned on when acting, so the
/// experience stays replayable after centroid subgoals move. `g` is the
/// subgoal index, absent for pretraining goals drawn outside the subgoal set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicTransition {
    pub s: GridPos,
    pub g: Option<usize>,
    pub goal: Point,
    pub a: Action,
    pub r_tilde: f64,
    pub s_next: GridPos,
    pub attained: bool,
    /// The environment episode ended with task completion at `s_next`.
    pub terminal: bool,
}

/// A meta-controller experience spanning one controller episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaTransition {
    pub s0: GridPos,
    pub g: usize,
    /// Discounted external return accumulated over the segment.
    #[serde(rename = "G")]
    pub ret: f64,
    pub s_end: GridPos,
    pub end_terminal: bool,
    /// Number of primitive steps in the segment.
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer<E> {
    capacity: usize,
    entries: VecDeque<E>,
}

impl<E> ReplayBuffer<E> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, entries: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends `entry`, evicting the oldest one when full.
    pub fn push(&mut self, entry: E) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn get(&self, i: usize) -> Option<&E> {
        self.entries.get(i)
    }

    /// Oldest first.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = &E> + '_ {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Removes every entry matching `pred`, keeping survivors in order.
    pub fn remove_if<F: FnMut(&E) -> bool>(&mut self, mut pred: F) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| !pred(e));
        before - self.entries.len()
    }

    /// `size` indices drawn uniformly with replacement; empty when the
    /// buffer is empty.
    pub fn sample_indices<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<usize> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..size).map(|_| rng.gen_range(0..self.entries.len())).collect()
    }
}

impl<E: Clone> ReplayBuffer<E> {
    /// Uniform minibatch with replacement. An empty buffer yields an empty
    /// batch, which callers treat as "skip this update".
    pub fn sample_minibatch<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<E> {
        self.sample_indices(size, rng).into_iter().map(|i| self.entries[i].clone()).collect()
    }
}

/// First line of a JSON Lines memory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub format_version: u32,
    pub kind: String,
    pub capacity: usize,
    pub len: usize,
    /// Grid dimensions, so points can be normalized without the layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(i32, i32)>,
}

impl<E: Serialize> ReplayBuffer<E> {
    pub fn dump_jsonl<W: Write>(&self, mut out: W, kind: &str, grid: Option<(i32, i32)>) -> Result<()> {
        let header = DumpHeader {
            format_version: MEMORY_FORMAT_VERSION,
            kind: kind.to_string(),
            capacity: self.capacity,
            len: self.len(),
            grid,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

impl<E: DeserializeOwned> ReplayBuffer<E> {
    pub fn load_jsonl<R: BufRead>(input: R) -> Result<(Self, DumpHeader)> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| HrlError::Format("empty memory dump".into()))??;
        let header: DumpHeader = serde_json::from_str(&first)?;
        if header.format_version != MEMORY_FORMAT_VERSION {
            return Err(HrlError::Format(format!(
                "memory dump format_version {} (expected {MEMORY_FORMAT_VERSION})",
                header.format_version
            )));
        }
        if header.capacity == 0 {
            return Err(HrlError::Format("memory dump with zero capacity".into()));
        }
        let mut buffer = ReplayBuffer::new(header.capacity);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| HrlError::Format(format!("line {}: {e}", n + 2)))?;
            buffer.push(entry);
        }
        if buffer.len() != header.len {
            return Err(HrlError::Format(format!(
                "memory dump header says {} entries, found {}",
                header.len,
                buffer.len()
            )));
        }
        Ok((buffer, header))
    }
}

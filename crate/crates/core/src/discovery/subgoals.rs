use serde::{Deserialize, Serialize};

use crate::env::{normalize_in, GridPos, Point};
use crate::error::{contract, HrlError, Result};

use super::kmeans::{assign_cluster, dist2, KMeansState};

pub const SUBGOALS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgoalKind {
    Anomaly,
    Centroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgoal {
    pub id: usize,
    pub kind: SubgoalKind,
    pub point: Point,
    /// The visited cell, for anomalies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<GridPos>,
    /// Cluster index, for centroids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

/// The candidate subgoals. A subgoal's id is its position in the list and
/// never changes: anomalies are only appended, centroids are moved in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub struct SubgoalSet {
    grid: (i32, i32),
    merge_radius: f64,
    subgoals: Vec<Subgoal>,
    /// Subgoal id of each cluster index.
    centroid_ids: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetRepr {
    format_version: u32,
    grid: (i32, i32),
    merge_radius: f64,
    subgoals: Vec<Subgoal>,
}

impl From<SubgoalSet> for SetRepr {
    fn from(s: SubgoalSet) -> Self {
        SetRepr {
            format_version: SUBGOALS_FORMAT_VERSION,
            grid: s.grid,
            merge_radius: s.merge_radius,
            subgoals: s.subgoals,
        }
    }
}

impl TryFrom<SetRepr> for SubgoalSet {
    type Error = HrlError;

    fn try_from(r: SetRepr) -> Result<Self> {
        if r.format_version != SUBGOALS_FORMAT_VERSION {
            return Err(HrlError::Format(format!("subgoals format_version {}", r.format_version)));
        }
        let mut centroid_ids = Vec::new();
        for (i, g) in r.subgoals.iter().enumerate() {
            if g.id != i {
                return Err(HrlError::Format(format!("subgoal at position {i} has id {}", g.id)));
            }
            match g.kind {
                SubgoalKind::Anomaly if g.cell.is_none() => {
                    return Err(HrlError::Format(format!("anomaly subgoal {i} without a cell")));
                }
                SubgoalKind::Centroid => {
                    let c = g.cluster.ok_or_else(|| HrlError::Format(format!("centroid {i} without cluster")))?;
                    if c >= centroid_ids.len() {
                        centroid_ids.resize(c + 1, usize::MAX);
                    }
                    centroid_ids[c] = i;
                }
                _ => {}
            }
        }
        if centroid_ids.contains(&usize::MAX) {
            return Err(HrlError::Format("centroid cluster indices are not contiguous".into()));
        }
        Ok(SubgoalSet { grid: r.grid, merge_radius: r.merge_radius, subgoals: r.subgoals, centroid_ids })
    }
}

impl SubgoalSet {
    pub fn new(grid: (i32, i32), merge_radius: f64) -> Self {
        Self { grid, merge_radius, subgoals: Vec::new(), centroid_ids: Vec::new() }
    }

    pub fn grid(&self) -> (i32, i32) {
        self.grid
    }

    pub fn merge_radius(&self) -> f64 {
        self.merge_radius
    }

    pub fn len(&self) -> usize {
        self.subgoals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgoals.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Subgoal> {
        self.subgoals.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Subgoal> + '_ {
        self.subgoals.iter()
    }

    pub fn anomalies(&self) -> impl Iterator<Item = &Subgoal> + '_ {
        self.subgoals.iter().filter(|g| g.kind == SubgoalKind::Anomaly)
    }

    pub fn centroids(&self) -> impl Iterator<Item = &Subgoal> + '_ {
        self.centroid_ids.iter().map(|&i| &self.subgoals[i])
    }

    pub fn normalize(&self, cell: GridPos) -> Point {
        normalize_in(self.grid, cell)
    }

    pub fn point(&self, id: usize) -> Point {
        self.subgoals[id].point
    }

    /// Appends an anomaly subgoal unless an existing one lies within the
    /// merge radius. Returns the new id.
    pub fn add_anomaly(&mut self, cell: GridPos) -> Option<usize> {
        let point = self.normalize(cell);
        let clash = self.anomalies().any(|g| dist2(g.point, point).sqrt() < self.merge_radius);
        if clash {
            return None;
        }
        let id = self.subgoals.len();
        self.subgoals.push(Subgoal { id, kind: SubgoalKind::Anomaly, point, cell: Some(cell), cluster: None });
        Some(id)
    }

    /// Installs fitted centroids: appended on first use, moved in place after.
    pub fn set_centroids(&mut self, centroids: &[Point]) -> Result<()> {
        if self.centroid_ids.is_empty() {
            for (c, &point) in centroids.iter().enumerate() {
                let id = self.subgoals.len();
                self.subgoals.push(Subgoal { id, kind: SubgoalKind::Centroid, point, cell: None, cluster: Some(c) });
                self.centroid_ids.push(id);
            }
            return Ok(());
        }
        if centroids.len() != self.centroid_ids.len() {
            return contract(format!(
                "{} centroids for {} centroid subgoals",
                centroids.len(),
                self.centroid_ids.len()
            ));
        }
        for (&id, &point) in self.centroid_ids.iter().zip(centroids) {
            self.subgoals[id].point = point;
        }
        Ok(())
    }

    pub fn centroid_subgoal(&self, cluster: usize) -> Option<usize> {
        self.centroid_ids.get(cluster).copied()
    }

    pub fn anomaly_at(&self, cell: GridPos) -> Option<usize> {
        self.anomalies().find(|g| g.cell == Some(cell)).map(|g| g.id)
    }

    /// Meta-controller state index of a cell: the anomaly on that cell if
    /// any, else the centroid subgoal of its cluster. Before any clustering,
    /// the nearest subgoal.
    pub fn state_index(&self, cell: GridPos, kstate: &KMeansState) -> Result<usize> {
        if let Some(id) = self.anomaly_at(cell) {
            return Ok(id);
        }
        let p = self.normalize(cell);
        if !self.centroid_ids.is_empty() && kstate.is_initialized() {
            let c = assign_cluster(kstate, p)?;
            return Ok(self.centroid_ids[c]);
        }
        self.subgoals
            .iter()
            .min_by(|a, b| dist2(a.point, p).total_cmp(&dist2(b.point, p)))
            .map(|g| g.id)
            .ok_or_else(|| HrlError::Contract("state index with an empty subgoal set".into()))
    }

    /// Anomalies need the exact cell; centroids need `s'` in their cluster.
    pub fn attained(&self, id: usize, s_next: GridPos, kstate: &KMeansState) -> Result<bool> {
        let Some(g) = self.subgoals.get(id) else {
            return contract(format!("subgoal {id} out of range ({})", self.len()));
        };
        match g.kind {
            SubgoalKind::Anomaly => Ok(g.cell == Some(s_next)),
            SubgoalKind::Centroid => {
                let c = g.cluster.expect("centroid has a cluster");
                Ok(assign_cluster(kstate, self.normalize(s_next))? == c)
            }
        }
    }
}

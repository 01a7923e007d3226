use serde::{Deserialize, Serialize};

use crate::env::Point;

/// Activations below this are stored as exactly zero.
pub const ACTIVATION_FLOOR: f64 = 1e-12;

#[inline]
fn bump(d2: f64, denom: f64) -> f64 {
    let v = (-d2 / denom).exp();
    if v < ACTIVATION_FLOOR {
        0.0
    } else {
        v
    }
}

/// Radial basis code over a regular `rows x cols` grid of centers spanning
/// the unit square.
///
/// A separable coder instead has one pool of `cols` centers along x and one
/// of `rows` centers along y, giving `cols + rows` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoder {
    rows: usize,
    cols: usize,
    sigma: f64,
    centers: Vec<Point>,
    #[serde(default)]
    separable: bool,
}

impl GaussianCoder {
    /// Center `(i, j)` (row `i`, column `j`) sits at `(j/(cols-1), i/(rows-1))`
    /// and has index `i * cols + j`.
    pub fn new(rows: usize, cols: usize, sigma: f64) -> Self {
        assert!(rows > 0 && cols > 0, "coder grid must be non-empty");
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        let step = |n: usize, i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let centers = (0..rows).flat_map(|i| (0..cols).map(move |j| [step(cols, j), step(rows, i)])).collect();
        Self { rows, cols, sigma, centers, separable: false }
    }

    /// Pools along x (indices `0..cols`) then y (`cols..cols + rows`).
    /// The coordinate on a pool's unused axis is 0 and ignored.
    pub fn separable(rows: usize, cols: usize, sigma: f64) -> Self {
        assert!(rows > 0 && cols > 0, "coder grid must be non-empty");
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        let step = |n: usize, i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let centers = (0..cols).map(|j| [step(cols, j), 0.0]).chain((0..rows).map(|i| [0.0, step(rows, i)])).collect();
        Self { rows, cols, sigma, centers, separable: true }
    }

    pub fn is_separable(&self) -> bool {
        self.separable
    }

    /// Bandwidth of half the spacing between adjacent centers.
    pub fn with_half_spacing(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, Self::half_spacing(rows, cols))
    }

    pub fn half_spacing(rows: usize, cols: usize) -> f64 {
        let n = rows.max(cols).max(2);
        0.5 / (n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn encode(&self, p: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.encode_into(p, &mut out);
        out
    }

    pub fn encode_into(&self, p: Point, out: &mut [f64]) {
        let denom = 2.0 * self.sigma * self.sigma;
        if self.separable {
            let (xs, ys) = out.split_at_mut(self.cols);
            for (o, c) in xs.iter_mut().zip(&self.centers) {
                *o = bump((p[0] - c[0]).powi(2), denom);
            }
            for (o, c) in ys.iter_mut().zip(&self.centers[self.cols..]) {
                *o = bump((p[1] - c[1]).powi(2), denom);
            }
            return;
        }
        for (o, c) in out.iter_mut().zip(&self.centers) {
            let dx = p[0] - c[0];
            let dy = p[1] - c[1];
            *o = bump(dx * dx + dy * dy, denom);
        }
    }
}

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::norm::NormChoice;

pub const MAX_GRID_DIM: usize = 3;
pub const MAX_GRID_CELLS: u64 = 50_000_000;

/// Dense occupancy grid on the lattice of cubes `[k*eps, (k+1)*eps)`.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    dim: usize,
    cell: f64,
    /// Lattice index of the first cell along each axis.
    lo: Vec<i64>,
    shape: Vec<usize>,
    covered: Vec<bool>,
}

impl OccupancyGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Axis-aligned bounds `(min, max)` of the grid box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let min = self.lo.iter().map(|&l| l as f64 * self.cell).collect();
        let max = self
            .lo
            .iter()
            .zip(&self.shape)
            .map(|(&l, &s)| (l + s as i64) as f64 * self.cell)
            .collect();
        (min, max)
    }

    pub fn len(&self) -> usize {
        self.covered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covered.is_empty()
    }

    pub fn is_covered(&self, idx: &[usize]) -> bool {
        self.covered[self.linear(idx)]
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    fn linear(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &s)| acc * s + i)
    }

    fn unravel(&self, mut lin: usize, out: &mut [usize]) {
        for k in (0..self.dim).rev() {
            out[k] = lin % self.shape[k];
            lin /= self.shape[k];
        }
    }

    /// Empty grid covering `[min, max]` padded by two cells on every side.
    fn spanning(dim: usize, cell: f64, min: &[f64], max: &[f64]) -> Result<Self> {
        let lo: Vec<i64> = min
            .iter()
            .map(|&v| (v / cell).floor() as i64 - 2)
            .collect();
        let hi: Vec<i64> = max
            .iter()
            .map(|&v| (v / cell).floor() as i64 + 2)
            .collect();
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let total = shape
            .iter()
            .try_fold(1u64, |acc, &s| acc.checked_mul(s as u64))
            .unwrap_or(u64::MAX);
        if total > MAX_GRID_CELLS {
            return Err(Error::Resource(format!(
                "occupancy grid would need {total} cells (limit {MAX_GRID_CELLS}); use a larger cell size"
            )));
        }
        Ok(OccupancyGrid {
            dim,
            cell,
            lo,
            shape,
            covered: vec![false; total as usize],
        })
    }

    /// Rasterizes the union of closed `dilation`-balls about the cloud points:
    /// every cell whose box meets one of the balls is marked covered.
    pub fn rasterize(
        cloud: &PointCloud,
        extra: &[f64],
        dilation: f64,
        cell: f64,
        norm: NormChoice,
    ) -> Result<Self> {
        let dim = cloud.dim();
        if dim == 0 || dim > MAX_GRID_DIM {
            return Err(Error::UnsupportedDimension {
                dim,
                max: MAX_GRID_DIM,
                what: "occupancy grid",
            });
        }
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::input(format!("cell size must be positive, got {cell}")));
        }
        if !(dilation >= 0.0) || !dilation.is_finite() {
            return Err(Error::input(format!("dilation must be nonnegative, got {dilation}")));
        }
        let (mut min, mut max) = cloud.bounding_box();
        for k in 0..dim {
            min[k] = min[k].min(extra[k]) - dilation;
            max[k] = max[k].max(extra[k]) + dilation;
        }
        let mut grid = Self::spanning(dim, cell, &min, &max)?;

        // Group the points by cell and dilate each group's bounding box:
        // the work scales with occupied cells rather than points, and the
        // cover stays a superset of the union of the point balls.
        let mut keyed: Vec<(usize, usize)> = cloud
            .flat()
            .par_chunks_exact(dim)
            .enumerate()
            .map(|(i, y)| (grid.cell_of(y), i))
            .collect();
        keyed.par_sort_unstable();
        let groups: Vec<&[(usize, usize)]> = keyed.chunk_by(|a, b| a.0 == b.0).collect();

        let marks: Vec<AtomicBool> = (0..grid.covered.len()).map(|_| AtomicBool::new(false)).collect();
        let g = &grid;
        let flat = cloud.flat();
        groups.par_iter().for_each(|group| {
            let mut lo = [f64::INFINITY; MAX_GRID_DIM];
            let mut hi = [f64::NEG_INFINITY; MAX_GRID_DIM];
            for &(_, i) in group.iter() {
                for k in 0..dim {
                    let v = flat[i * dim + k];
                    lo[k] = lo[k].min(v);
                    hi[k] = hi[k].max(v);
                }
            }
            g.mark_box(&lo[..dim], &hi[..dim], dilation, norm, &marks);
        });
        grid.covered = marks.into_iter().map(AtomicBool::into_inner).collect();
        Ok(grid)
    }

    fn cell_of(&self, y: &[f64]) -> usize {
        let mut lin = 0usize;
        for k in 0..self.dim {
            let i = ((y[k] / self.cell).floor() as i64 - self.lo[k]).clamp(0, self.shape[k] as i64 - 1);
            lin = lin * self.shape[k] + i as usize;
        }
        lin
    }

    /// Marks every cell whose box meets the closed `a`-neighborhood of the
    /// box `[y0, y1]`.
    fn mark_box(&self, y0: &[f64], y1: &[f64], a: f64, norm: NormChoice, marks: &[AtomicBool]) {
        let mut lo = [0usize; MAX_GRID_DIM];
        let mut hi = [0usize; MAX_GRID_DIM];
        for k in 0..self.dim {
            let l = ((y0[k] - a) / self.cell).floor() as i64 - self.lo[k];
            let h = ((y1[k] + a) / self.cell).floor() as i64 - self.lo[k];
            lo[k] = l.max(0) as usize;
            hi[k] = (h.max(0) as usize).min(self.shape[k] - 1);
        }
        let mut idx = lo;
        loop {
            let inside = match norm {
                // Every cell in the index range meets the max-norm neighborhood.
                NormChoice::EllInf => true,
                NormChoice::Ell2 => {
                    let d2: f64 = (0..self.dim)
                        .map(|k| {
                            let b0 = (self.lo[k] + idx[k] as i64) as f64 * self.cell;
                            let b1 = b0 + self.cell;
                            let g = (b0 - y1[k]).max(y0[k] - b1).max(0.0);
                            g * g
                        })
                        .sum();
                    d2 <= a * a
                }
            };
            if inside {
                marks[self.linear(&idx[..self.dim])].store(true, Ordering::Relaxed);
            }
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if idx[k] < hi[k] {
                    idx[k] += 1;
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }

    /// Uncovered cells reachable from the outer layer through face-adjacent
    /// uncovered cells.
    pub fn exterior(&self) -> Vec<bool> {
        let mut seen = vec![false; self.covered.len()];
        let mut queue = VecDeque::new();
        let mut idx = vec![0usize; self.dim];
        for lin in 0..self.covered.len() {
            self.unravel(lin, &mut idx);
            let on_boundary = idx
                .iter()
                .zip(&self.shape)
                .any(|(&i, &s)| i == 0 || i + 1 == s);
            if on_boundary && !self.covered[lin] {
                seen[lin] = true;
                queue.push_back(lin);
            }
        }
        while let Some(lin) = queue.pop_front() {
            self.unravel(lin, &mut idx);
            let mut stride = 1usize;
            for k in (0..self.dim).rev() {
                if idx[k] > 0 {
                    let n = lin - stride;
                    if !seen[n] && !self.covered[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
                if idx[k] + 1 < self.shape[k] {
                    let n = lin + stride;
                    if !seen[n] && !self.covered[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
                stride *= self.shape[k];
            }
        }
        seen
    }

    /// Distance from `point` to the nearest closed cell box flagged in `mask`.
    pub(crate) fn nearest_flagged(&self, point: &[f64], mask: &[bool], norm: NormChoice) -> Option<f64> {
        let mut idx = vec![0usize; self.dim];
        let mut best: Option<f64> = None;
        for (lin, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            self.unravel(lin, &mut idx);
            let d = norm.combine_axes((0..self.dim).map(|k| {
                let b0 = (self.lo[k] + idx[k] as i64) as f64 * self.cell;
                let b1 = b0 + self.cell;
                (b0 - point[k]).max(point[k] - b1).max(0.0)
            }));
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
        best
    }

    pub(crate) fn contains_point(&self, p: &[f64]) -> bool {
        let (min, max) = self.bounds();
        p.iter()
            .zip(min.iter().zip(&max))
            .all(|(&x, (&a, &b))| x >= a && x <= b)
    }

    /// Portable graymap (plain `P2`) image of a 2-D grid, covered cells
    /// white; rows run from high to low second coordinate.
    pub fn to_pgm(&self) -> Result<String> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension {
                dim: self.dim,
                max: 2,
                what: "graymap dump",
            });
        }
        let (w, h) = (self.shape[0], self.shape[1]);
        let mut s = format!("P2\n{w} {h}\n255\n");
        for j in (0..h).rev() {
            let row: Vec<&str> = (0..w)
                .map(|i| if self.is_covered(&[i, j]) { "255" } else { "0" })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        Ok(s)
    }
}

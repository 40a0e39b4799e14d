//! Ball nets, image point clouds, occupancy grids, and inradius estimates.
//!
//! The inradius of a compact set `K` at a point `c` is the largest `rho`
//! with `B_rho(c) ⊆ K`. For the image of a ball under a map that is
//! `lambda`-Lipschitz, sampled on a `delta`-net, the image is contained in
//! the union of `lambda*delta`-balls about the sampled image points; that
//! union is what the rigorous upper bound is computed from.

mod grid;
mod net;

pub use grid::{OccupancyGrid, MAX_GRID_CELLS, MAX_GRID_DIM};
pub use net::{make_ball_net, make_ball_net_with_budget, BallNet, MAX_NET_POINTS};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::NormChoice;
use crate::systems::ControlSystem;

/// Points in `R^dim`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "point cloud of dimension {dim} cannot hold {} coordinates",
                data.len()
            )));
        }
        Ok(PointCloud { dim, data })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, pts: impl IntoIterator<Item = P>) -> Result<Self> {
        let mut data = Vec::new();
        for p in pts {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::input(format!(
                    "point of dimension {} in a cloud of dimension {dim}",
                    p.len()
                )));
            }
            data.extend_from_slice(p);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut min = vec![f64::INFINITY; self.dim];
        let mut max = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        (min, max)
    }

    /// Largest norm over the cloud.
    pub fn max_norm(&self, norm: NormChoice) -> f64 {
        self.data
            .par_chunks_exact(self.dim)
            .map(|p| norm.norm(p))
            .reduce(|| 0.0, f64::max)
    }
}

/// Images of the net points, in net order.
pub fn image_cloud<S: ControlSystem + ?Sized>(sys: &S, net: &BallNet) -> Result<PointCloud> {
    if net.dim() != sys.input_dim() {
        return Err(Error::input(format!(
            "net dimension {} does not match system input dimension {}",
            net.dim(),
            sys.input_dim()
        )));
    }
    let n = sys.state_dim();
    let mut data = vec![0.0; net.len() * n];
    data.par_chunks_exact_mut(n)
        .zip(net.flat().par_chunks_exact(net.dim()))
        .for_each(|(out, z)| sys.eval_into(z, out));
    if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Range(format!(
            "non-finite image value at net point {}",
            bad / n
        )));
    }
    PointCloud::new(n, data)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InradiusProvenance {
    /// Radius of the balls the cloud was dilated by (`lambda * delta`).
    pub dilation: f64,
    /// Occupancy cell size; zero when no grid was built.
    pub cell: f64,
    /// Cell size of the raw-cloud raster behind the heuristic lower bound.
    pub lower_cell: f64,
    pub lower_rigorous: bool,
    pub upper_rigorous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InradiusEstimate {
    pub lower: f64,
    pub upper: f64,
    pub center: Vec<f64>,
    pub provenance: InradiusProvenance,
}

/// Estimates the inradius at `center` of a compact connected set sampled by
/// `cloud`, given that the set lies within `dilation` of the cloud.
///
/// In one dimension the set is an interval and both bounds are rigorous.
/// Otherwise `upper` is rigorous (distance to the nearest point of a closed
/// cell outside the dilated cover that is reachable from the grid
/// boundary), while `lower` is read off the raw cloud raster and is only a
/// heuristic.
pub fn inradius(
    cloud: &PointCloud,
    center: &[f64],
    dilation: f64,
    cell: f64,
    norm: NormChoice,
) -> Result<InradiusEstimate> {
    inradius_with_lower_cell(cloud, center, dilation, cell, cell, norm)
}

/// [`inradius`] with a separate, typically coarser, cell size for the raw
/// raster behind the lower bound. A raw raster finer than the spacing of the
/// image samples is full of holes the flood fill leaks through.
pub fn inradius_with_lower_cell(
    cloud: &PointCloud,
    center: &[f64],
    dilation: f64,
    cell: f64,
    lower_cell: f64,
    norm: NormChoice,
) -> Result<InradiusEstimate> {
    let dim = cloud.dim();
    if cloud.is_empty() {
        return Err(Error::input("inradius of an empty cloud"));
    }
    if center.len() != dim {
        return Err(Error::input(format!(
            "center has dimension {}, cloud has {dim}",
            center.len()
        )));
    }
    if dim > MAX_GRID_DIM {
        return Err(Error::UnsupportedDimension {
            dim,
            max: MAX_GRID_DIM,
            what: "inradius estimation",
        });
    }
    if !(dilation >= 0.0) || !dilation.is_finite() {
        return Err(Error::input(format!("dilation must be nonnegative, got {dilation}")));
    }
    for c in [cell, lower_cell] {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::input(format!("cell size must be positive, got {c}")));
        }
    }

    if dim == 1 {
        let (min, max) = cloud.bounding_box();
        let reach = (max[0] - center[0]).min(center[0] - min[0]);
        return Ok(InradiusEstimate {
            lower: reach.max(0.0),
            upper: (reach + dilation).max(0.0),
            center: center.to_vec(),
            provenance: InradiusProvenance {
                dilation,
                cell: 0.0,
                lower_cell: 0.0,
                lower_rigorous: true,
                upper_rigorous: true,
            },
        });
    }

    let dilated = OccupancyGrid::rasterize(cloud, center, dilation, cell, norm)?;
    if !dilated.contains_point(center) {
        return Err(Error::Internal("inradius center fell outside the occupancy grid".into()));
    }
    let outside = dilated.exterior();
    let d_upper = dilated
        .nearest_flagged(center, &outside, norm)
        .ok_or_else(|| Error::Internal("occupancy grid has no exterior cell".into()))?;
    // Exterior boxes are closed and disjoint from the cover, hence from the
    // image, so the distance to the nearest one is already an upper bound.
    let upper = d_upper;

    let raw = OccupancyGrid::rasterize(cloud, center, 0.0, lower_cell, norm)?;
    let outside_raw = raw.exterior();
    let d_lower = raw
        .nearest_flagged(center, &outside_raw, norm)
        .ok_or_else(|| Error::Internal("occupancy grid has no exterior cell".into()))?;
    let lower = (d_lower - lower_cell * (dim as f64).sqrt()).max(0.0).min(upper);

    Ok(InradiusEstimate {
        lower,
        upper,
        center: center.to_vec(),
        provenance: InradiusProvenance {
            dilation,
            cell,
            lower_cell,
            lower_rigorous: false,
            upper_rigorous: true,
        },
    })
}

/// Exact inradius of the box `[lo, hi]` at `center` (the same in every
/// norm): the smallest distance from `center` to a face. Zero when the
/// center is outside the box.
pub fn inradius_box_oracle(lo: &[f64], hi: &[f64], center: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for ((&a, &b), &c) in lo.iter().zip(hi).zip(center) {
        if c < a || c > b {
            return 0.0;
        }
        best = best.min(c - a).min(b - c);
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

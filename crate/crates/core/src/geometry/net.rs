use crate::error::{Error, Result};
use crate::norm::NormChoice;

/// Upper limit on the number of grid nodes a net may enumerate.
pub const MAX_NET_POINTS: u128 = 100_000_000;

/// A finite `spacing`-net of a closed ball: every point of the ball lies
/// within `spacing` (in the ball's norm) of some net point, and every net
/// point lies in the ball.
#[derive(Debug, Clone)]
pub struct BallNet {
    dim: usize,
    radius: f64,
    norm: NormChoice,
    center: Vec<f64>,
    pitch: f64,
    spacing: f64,
    points: Vec<f64>,
}

impl BallNet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn norm(&self) -> NormChoice {
        self.norm
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Axis pitch of the underlying grid.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Covering radius: `pitch/2` for the max norm, `pitch*sqrt(dim)/2` for
    /// the Euclidean norm.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.points
    }

    /// The same net moved to be centered at `center`.
    pub fn translated(mut self, center: &[f64]) -> Result<Self> {
        if center.len() != self.dim {
            return Err(Error::input(format!(
                "center has dimension {}, net has {}",
                center.len(),
                self.dim
            )));
        }
        let shift: Vec<f64> = center.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        for p in self.points.chunks_exact_mut(self.dim) {
            for (x, s) in p.iter_mut().zip(&shift) {
                *x += s;
            }
        }
        self.center = center.to_vec();
        Ok(self)
    }
}

fn check_args(dim: usize, radius: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::input("ball net dimension must be at least 1"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::input(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    Ok(())
}

/// Builds a net of the closed ball about the origin whose axis pitch and
/// covering radius are both at most `target_spacing`.
pub fn make_ball_net(
    dim: usize,
    radius: f64,
    norm: NormChoice,
    target_spacing: f64,
) -> Result<BallNet> {
    check_args(dim, radius)?;
    if !(target_spacing > 0.0) || !target_spacing.is_finite() {
        return Err(Error::input(format!(
            "net spacing must be positive and finite, got {target_spacing}"
        )));
    }
    let pitch = match norm {
        NormChoice::EllInf => target_spacing,
        NormChoice::Ell2 => target_spacing.min(2.0 * target_spacing / (dim as f64).sqrt()),
    };
    let divisions = (2.0 * radius / pitch).ceil().max(1.0);
    if divisions > 1e9 {
        return Err(Error::Resource(format!(
            "net spacing {target_spacing} is too fine for radius {radius}; use a coarser spacing"
        )));
    }
    from_divisions(dim, radius, norm, divisions as u64)
}

/// Builds the finest axis grid whose node count stays within `max_points`.
pub fn make_ball_net_with_budget(
    dim: usize,
    radius: f64,
    norm: NormChoice,
    max_points: usize,
) -> Result<BallNet> {
    check_args(dim, radius)?;
    let per_axis = (max_points as f64).powf(1.0 / dim as f64).floor() as u64;
    // Guard against powf rounding just below an exact integer root.
    let per_axis = if (per_axis + 1).checked_pow(dim as u32).is_some_and(|c| c <= max_points as u64) {
        per_axis + 1
    } else {
        per_axis
    };
    from_divisions(dim, radius, norm, per_axis.saturating_sub(1).max(1))
}

fn from_divisions(dim: usize, radius: f64, norm: NormChoice, divisions: u64) -> Result<BallNet> {
    let nodes = divisions + 1;
    let projected = (nodes as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if projected > MAX_NET_POINTS {
        return Err(Error::Resource(format!(
            "ball net would enumerate {projected} grid nodes (limit {MAX_NET_POINTS}); use a coarser spacing"
        )));
    }
    let pitch = 2.0 * radius / divisions as f64;
    let spacing = match norm {
        NormChoice::EllInf => pitch / 2.0,
        NormChoice::Ell2 => pitch * (dim as f64).sqrt() / 2.0,
    };
    // Symmetric coordinates so that 0 and +-radius are hit exactly.
    let axis: Vec<f64> = (0..nodes)
        .map(|i| radius * (2.0 * i as f64 - divisions as f64) / divisions as f64)
        .collect();

    let total = projected as usize;
    let mut points = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    let mut q = vec![0.0; dim];
    for _ in 0..total {
        for (qk, &ik) in q.iter_mut().zip(&idx) {
            *qk = axis[ik];
        }
        match norm {
            NormChoice::EllInf => points.extend_from_slice(&q),
            NormChoice::Ell2 => {
                let n = NormChoice::Ell2.norm(&q);
                if n <= radius {
                    points.extend_from_slice(&q);
                } else if n <= radius + spacing {
                    // Projection onto the ball is 1-Lipschitz and fixes ball
                    // points, so it keeps the covering radius.
                    let s = radius / n;
                    points.extend(q.iter().map(|x| x * s));
                }
            }
        }
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < nodes as usize {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(BallNet {
        dim,
        radius,
        norm,
        center: vec![0.0; dim],
        pitch,
        spacing,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_dimensional_grid() {
        let net = make_ball_net(1, 1.0, NormChoice::EllInf, 0.5).unwrap();
        let pts: Vec<f64> = net.points().map(|p| p[0]).collect();
        for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert!(pts.contains(&v), "{v} missing from {pts:?}");
        }
    }

    #[test]
    fn max_norm_containment() {
        let net = make_ball_net(3, 0.5, NormChoice::EllInf, 0.1).unwrap();
        assert!(net.points().all(|p| NormChoice::EllInf.norm(p) <= 0.5));
    }

    #[test]
    fn euclidean_disk_coverage_monte_carlo() {
        let net = make_ball_net(2, 1.0, NormChoice::Ell2, 0.1).unwrap();
        assert!(net.spacing() <= 0.1);
        assert!(net.points().all(|p| NormChoice::Ell2.norm(p) <= 1.0 + 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let (x, y) = loop {
                let x: f64 = rng.gen_range(-1.0..=1.0);
                let y: f64 = rng.gen_range(-1.0..=1.0);
                if x * x + y * y <= 1.0 {
                    break (x, y);
                }
            };
            let best = net
                .points()
                .map(|p| NormChoice::Ell2.dist(p, &[x, y]))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 0.1, "({x},{y}) is {best} from the net");
        }
    }

    #[test]
    fn budget_is_respected() {
        let net = make_ball_net_with_budget(5, 0.3, NormChoice::EllInf, 1_000_000).unwrap();
        assert!(net.len() <= 1_000_000);
        assert_eq!(net.len(), 15usize.pow(5));
        let net = make_ball_net_with_budget(2, 1.0, NormChoice::EllInf, 1_000_000).unwrap();
        assert_eq!(net.len(), 1_000_000);
    }

    #[test]
    fn oversized_net_is_resource_error() {
        let err = make_ball_net(6, 1.0, NormChoice::EllInf, 1e-3).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn translation_moves_points() {
        let net = make_ball_net(1, 1.0, NormChoice::EllInf, 1.0)
            .unwrap()
            .translated(&[1.0])
            .unwrap();
        let pts: Vec<f64> = net.points().map(|p| p[0]).collect();
        assert_eq!(pts, vec![0.0, 1.0, 2.0]);
    }
}

//! Two-dimensional loss landscapes on the plane through three trained models.
//!
//! The plane is anchored at `m0`. Its first axis points at `m1`, its second
//! is the Gram-Schmidt residual of `m2 - m0` against the first, so the three
//! reference models sit at `(0, 0)`, `(|m1 - m0|, 0)` and `(x2, y2)` with
//! `y2 > 0`. Directions are plain parameter differences; there is no filter
//! normalization.

use crate::data::Dataset;
use crate::nn::{evaluate, ArchSpec, ModelState};
use crate::pruning::SparsityMask;
use crate::{Error, Result};

/// Residual norm below which `m2` counts as lying on the line through `m0` and `m1`.
pub const COLINEAR_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_RESOLUTION: (usize, usize) = (100, 100);
/// Fraction of the reference bounding box added on each side by [`Plane::default_ranges`].
pub const DEFAULT_PADDING: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub origin: ModelState,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `|m1 - m0|`.
    pub scale_u: f64,
    pub ref_coords: [(f64, f64); 3],
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn diff(a: &ModelState, b: &ModelState) -> Vec<f64> {
    a.params.iter().zip(&b.params).map(|(x, y)| x - y).collect()
}

pub fn plane_from_models(m0: &ModelState, m1: &ModelState, m2: &ModelState) -> Result<Plane> {
    m0.check_same_arch(m1)?;
    m0.check_same_arch(m2)?;
    let d1 = diff(m1, m0);
    let scale_u = norm(&d1);
    if scale_u == 0.0 {
        return Err(Error::Degenerate("m0 and m1 are identical; the plane has no first axis".into()));
    }
    let u: Vec<f64> = d1.iter().map(|x| x / scale_u).collect();

    let d2 = diff(m2, m0);
    let x2 = dot(&d2, &u);
    let mut residual: Vec<f64> = d2.iter().zip(&u).map(|(d, u)| d - x2 * u).collect();
    // A second pass removes what rounding left of the u component.
    let again = dot(&residual, &u);
    residual.iter_mut().zip(&u).for_each(|(r, u)| *r -= again * u);
    let y2 = norm(&residual);
    if y2 < COLINEAR_TOLERANCE {
        return Err(Error::Degenerate(format!(
            "m2 is colinear with m0 and m1 (residual norm {y2:.3e})"
        )));
    }
    let v = residual.iter().map(|r| r / y2).collect();
    Ok(Plane {
        origin: m0.clone(),
        u,
        v,
        scale_u,
        ref_coords: [(0.0, 0.0), (scale_u, 0.0), (x2 + again, y2)],
    })
}

/// In-plane coordinates of `model` and the norm of its off-plane remainder.
pub fn project(model: &ModelState, plane: &Plane) -> Result<(f64, f64, f64)> {
    plane.origin.check_same_arch(model)?;
    let d = diff(model, &plane.origin);
    let x = dot(&d, &plane.u);
    let y = dot(&d, &plane.v);
    let residual: Vec<f64> = d
        .iter()
        .zip(plane.u.iter().zip(&plane.v))
        .map(|(d, (u, v))| d - x * u - y * v)
        .collect();
    Ok((x, y, norm(&residual)))
}

impl Plane {
    pub fn arch(&self) -> &ArchSpec {
        &self.origin.arch
    }

    /// Parameters at `origin + x u + y v`, masked when a mask is given.
    pub fn materialize(&self, x: f64, y: f64, mask: Option<&SparsityMask>) -> Result<ModelState> {
        let params = self
            .origin
            .params
            .iter()
            .zip(self.u.iter().zip(&self.v))
            .map(|(o, (u, v))| o + x * u + y * v)
            .collect();
        let model = ModelState::new(self.origin.arch.clone(), params, self.origin.seed)?;
        match mask {
            Some(mask) => mask.apply(&model),
            None => Ok(model),
        }
    }

    /// Bounding box of the reference coordinates widened by `padding` times
    /// its extent on each side (a zero extent is widened by `padding`).
    pub fn default_ranges(&self, padding: f64) -> ((f64, f64), (f64, f64)) {
        let pad = |lo: f64, hi: f64| {
            let extent = if hi > lo { hi - lo } else { 1.0 };
            (lo - padding * extent, hi + padding * extent)
        };
        let xs = self.ref_coords.map(|c| c.0);
        let ys = self.ref_coords.map(|c| c.1);
        let min = |a: [f64; 3]| a.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |a: [f64; 3]| a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (pad(min(xs), max(xs)), pad(min(ys), max(ys)))
    }
}

/// Loss at one plane point on the whole of `data`.
pub fn loss_at(plane: &Plane, x: f64, y: f64, data: &Dataset, mask: Option<&SparsityMask>) -> Result<f64> {
    Ok(evaluate(&plane.materialize(x, y, mask)?, data)?.loss)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeGrid {
    pub plane: Plane,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: (usize, usize),
    /// Row-major by y: cell `(i, j)` is at index `j * nx + i`. Flagged cells hold NaN.
    pub losses: Vec<f64>,
    /// Indices of cells whose loss was not finite.
    pub flagged: Vec<usize>,
    pub evaluations: usize,
    /// Reference models that fall outside the requested ranges.
    pub warnings: Vec<String>,
}

/// `lo + (hi - lo) * i / (n - 1)`; `hi` exactly at the last index.
fn axis(range: (f64, f64), n: usize, i: usize) -> f64 {
    if i + 1 == n {
        return range.1;
    }
    range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
}

impl LandscapeGrid {
    pub fn x(&self, i: usize) -> f64 {
        axis(self.x_range, self.resolution.0, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        axis(self.y_range, self.resolution.1, j)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.losses[j * self.resolution.0 + i]
    }

    /// `(x, y, loss)` for every cell in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nx = self.resolution.0;
        self.losses
            .iter()
            .enumerate()
            .map(move |(k, &l)| (self.x(k % nx), self.y(k / nx), l))
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let finite = self.losses.iter().copied().filter(|l| l.is_finite());
        finite.fold(None, |acc, l| match acc {
            None => Some((l, l)),
            Some((lo, hi)) => Some((lo.min(l), hi.max(l))),
        })
    }
}

/// Evaluates the loss on an `nx x ny` lattice over the given ranges.
pub fn grid_eval(
    plane: &Plane,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: (usize, usize),
    data: &Dataset,
    mask: Option<&SparsityMask>,
) -> Result<LandscapeGrid> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidConfig(format!("grid resolution must be at least 2x2, got {nx}x{ny}")));
    }
    for (name, (lo, hi)) in [("x", x_range), ("y", y_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!("{name} range ({lo}, {hi}) must be finite and increasing")));
        }
    }
    let warnings = plane
        .ref_coords
        .iter()
        .enumerate()
        .filter(|(_, (x, y))| !(x_range.0..=x_range.1).contains(x) || !(y_range.0..=y_range.1).contains(y))
        .map(|(k, (x, y))| format!("reference model {k} at ({x:.4}, {y:.4}) lies outside the grid"))
        .collect();

    let mut grid = LandscapeGrid {
        plane: plane.clone(),
        x_range,
        y_range,
        resolution,
        losses: Vec::with_capacity(nx * ny),
        flagged: Vec::new(),
        evaluations: 0,
        warnings,
    };
    for j in 0..ny {
        let y = grid.y(j);
        for i in 0..nx {
            let x = grid.x(i);
            grid.evaluations += 1;
            let loss = match loss_at(plane, x, y, data, mask) {
                Ok(l) if l.is_finite() => l,
                Ok(_) | Err(Error::NonFiniteLoss { .. }) => {
                    grid.flagged.push(j * nx + i);
                    f64::NAN
                }
                Err(e) => return Err(e),
            };
            grid.losses.push(loss);
        }
    }
    Ok(grid)
}

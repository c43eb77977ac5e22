//! Periodic scalar fields on a uniform circle grid, the Lebesgue and
//! total-variation norms, the quotient sup-metric on potentials, and the
//! circle-diameter functional for finite point sets.
//!
//! A [`GridProfile`] samples a 1-periodic function at `x_i = i/n`. Potentials
//! φ are defined modulo an additive constant; velocities u = φ_x carry
//! zero-mean data. Integrals use the rectangle rule, so every norm here is
//! first-order accurate in 1/n.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Smallest admissible grid.
pub const MIN_GRID: usize = 8;

/// Relative tolerance for the zero-mean invariant of velocity profiles.
pub const VELOCITY_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size {0} is below the minimum {MIN_GRID}")]
    GridTooSmall(usize),
    #[error("non-finite sample at node {0}")]
    NonFinite(usize),
    #[error("velocity profile has mean {mean:.3e} exceeding tolerance {tol:.3e}")]
    NonZeroMean { mean: f64, tol: f64 },
    #[error("grid size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("L_p exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),
    #[error("circle subset must be nonempty")]
    EmptySubset,
    #[error("circle subset positions must be strictly increasing within [0,1)")]
    BadSubset,
}

/// Whether a profile represents a potential φ or a velocity u = φ_x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Potential,
    Velocity,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::Potential => write!(f, "potential"),
            ProfileKind::Velocity => write!(f, "velocity"),
        }
    }
}

/// A periodic scalar field sampled on the uniform n-point circle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    n: usize,
    kind: ProfileKind,
    values: Vec<f64>,
}

impl GridProfile {
    pub fn new(kind: ProfileKind, values: Vec<f64>) -> Result<Self, FieldError> {
        let n = values.len();
        if n < MIN_GRID {
            return Err(FieldError::GridTooSmall(n));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        if kind == ProfileKind::Velocity {
            let mean = values.iter().sum::<f64>() / n as f64;
            let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let tol = VELOCITY_MEAN_TOL * scale.max(1e-300);
            if mean.abs() > tol && scale > 0.0 {
                return Err(FieldError::NonZeroMean { mean, tol });
            }
        }
        Ok(GridProfile { n, kind, values })
    }

    pub fn potential(values: Vec<f64>) -> Result<Self, FieldError> {
        Self::new(ProfileKind::Potential, values)
    }

    pub fn velocity(values: Vec<f64>) -> Result<Self, FieldError> {
        Self::new(ProfileKind::Velocity, values)
    }

    /// Sample `f` at the grid nodes `x_i = i/n`.
    pub fn from_fn(n: usize, kind: ProfileKind, f: impl Fn(f64) -> f64) -> Result<Self, FieldError> {
        let values = (0..n).map(|i| f(i as f64 / n as f64)).collect();
        Self::new(kind, values)
    }

    pub fn zeros(n: usize, kind: ProfileKind) -> Result<Self, FieldError> {
        Self::new(kind, vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Node position `x_i = i/n`.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Rectangle-rule L_p norm, `(1/n Σ |v_i|^p)^{1/p}`; `p = ∞` gives `max |v_i|`.
    pub fn lp_norm(&self, p: f64) -> Result<f64, FieldError> {
        if !(p >= 1.0) {
            return Err(FieldError::BadExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.sup_abs());
        }
        if p == 1.0 {
            return Ok(self.values.iter().map(|v| v.abs()).sum::<f64>() / self.n as f64);
        }
        if p == 2.0 {
            return Ok((self.values.iter().map(|v| v * v).sum::<f64>() / self.n as f64).sqrt());
        }
        let s = self
            .values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            / self.n as f64;
        Ok(s.powf(1.0 / p))
    }

    /// Discrete homogeneous W^{1,1} seminorm: `Σ_i |v_{i+1} − v_i|` with the
    /// periodic wrap, which counts jump contributions of piecewise-smooth data.
    pub fn total_variation(&self) -> f64 {
        let n = self.n;
        let mut tv = 0.0;
        for i in 0..n {
            let next = self.values[(i + 1) % n];
            tv += (next - self.values[i]).abs();
        }
        tv
    }

    /// Subtracts the discrete mean. Idempotent: once the residual mean is at
    /// rounding level (relative to the sample scale) the profile is returned
    /// unchanged, so a second application is the identity.
    pub fn mean_normalize(&self) -> GridProfile {
        let mean = self.mean();
        let scale = self.sup_abs();
        if mean.abs() <= 8.0 * f64::EPSILON * scale || mean == 0.0 {
            return self.clone();
        }
        let values = self.values.iter().map(|v| v - mean).collect();
        GridProfile {
            n: self.n,
            kind: self.kind,
            values,
        }
    }

    /// Write profile rows `x_i,value` to CSV.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x,value")?;
        for i in 0..self.n {
            writeln!(w, "{},{}", self.x(i), self.values[i])?;
        }
        Ok(())
    }
}

/// Difference of two velocity fields as a velocity profile. The difference
/// of zero-mean data is zero-mean analytically; the rounding-level residual
/// is removed so the invariant holds even for near-identical fields.
pub fn velocity_difference(a: &GridProfile, b: &GridProfile) -> Result<GridProfile, FieldError> {
    if a.n() != b.n() {
        return Err(FieldError::SizeMismatch(a.n(), b.n()));
    }
    let mut values: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean != 0.0 {
        for v in values.iter_mut() {
            *v -= mean;
        }
    }
    GridProfile::new(ProfileKind::Velocity, values)
}

/// Quotient sup-distance on potentials: `inf_K max_i |φ_i − ψ_i − K|`, which
/// equals `(max w − min w)/2` for `w = φ − ψ` exactly.
pub fn quotient_sup_distance(phi: &GridProfile, psi: &GridProfile) -> Result<f64, FieldError> {
    if phi.n != psi.n {
        return Err(FieldError::SizeMismatch(phi.n, psi.n));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (a, b) in phi.values.iter().zip(&psi.values) {
        let w = a - b;
        lo = lo.min(w);
        hi = hi.max(w);
    }
    Ok((hi - lo) / 2.0)
}

/// A finite subset of the circle, stored as strictly increasing positions in [0,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSubset {
    points: Vec<f64>,
}

impl CircleSubset {
    pub fn new(points: Vec<f64>) -> Result<Self, FieldError> {
        if points.is_empty() {
            return Err(FieldError::EmptySubset);
        }
        for w in points.windows(2) {
            if !(w[0] < w[1]) {
                return Err(FieldError::BadSubset);
            }
        }
        if points[0] < 0.0 || *points.last().unwrap() >= 1.0 {
            return Err(FieldError::BadSubset);
        }
        Ok(CircleSubset { points })
    }

    /// Sorts and deduplicates arbitrary positions (mod 1) into a subset.
    pub fn from_unsorted(mut points: Vec<f64>) -> Result<Self, FieldError> {
        for p in points.iter_mut() {
            *p = p.rem_euclid(1.0);
            if *p >= 1.0 {
                *p = 0.0; // rem_euclid can return 1.0 for tiny negatives
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rotates every point by `c` mod 1.
    pub fn rotated(&self, c: f64) -> CircleSubset {
        let pts = self.points.iter().map(|p| (p + c).rem_euclid(1.0)).collect();
        CircleSubset::from_unsorted(pts).expect("rotation preserves nonemptiness")
    }
}

/// Circle diameter `d(Z) = 1 − a(Z)`, with `a(Z)` the largest gap between
/// cyclically consecutive points; equivalently the minimal length of a closed
/// arc containing `Z`. A singleton has diameter 0.
pub fn circle_diameter(z: &CircleSubset) -> f64 {
    let pts = z.points();
    let m = pts.len();
    if m == 1 {
        return 0.0;
    }
    let mut largest_gap = 1.0 - pts[m - 1] + pts[0];
    for w in pts.windows(2) {
        let gap = w[1] - w[0];
        if gap > largest_gap {
            largest_gap = gap;
        }
    }
    1.0 - largest_gap
}

/// Circle distance `min(|a−b|, 1−|a−b|)` for positions taken mod 1.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

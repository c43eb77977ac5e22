//! Min-plus convolution with the quadratic free-flight kernel.
//!
//! One flight of duration Δ maps a potential to
//! `φ'(x_i) = min_{j,m} [ φ(y_j) + (x_i − y_j − m)² / (2Δ) ]`
//! over source nodes `y_j = j/n` and windings `|m| ≤ W`. The matrix
//! `M[i, l] = φ(y_{l mod n}) + ((i−l)/n)²/(2Δ)` over unrolled sources
//! `l = m·n + j` is totally monotone (the kernel is Monge), so row minima
//! can be computed far faster than the O(n²·W) scan.
//!
//! Each algorithm sits behind [`MinPlusKernel`] and is registered by name:
//!
//! * `monotone` — divide-and-conquer on the monotone argmin (default),
//! * `envelope` — lower envelope of parabolas, Felzenszwalb–Huttenlocher style,
//! * `brute-force` — the exhaustive oracle from [`crate::oracles`].
//!
//! All kernels evaluate candidates with the same expression and resolve ties
//! to the leftmost unrolled source, so winner indices are comparable across
//! strategies.

use serde::{Deserialize, Serialize};

/// Winning source of one endpoint node: grid node plus winding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub node: u32,
    pub winding: i32,
}

impl SourceRef {
    /// Unrolled column index `m·n + j`.
    pub fn unrolled(&self, n: usize) -> i64 {
        self.winding as i64 * n as i64 + self.node as i64
    }

    pub fn from_unrolled(l: i64, n: usize) -> SourceRef {
        let n = n as i64;
        SourceRef {
            node: l.rem_euclid(n) as u32,
            winding: l.div_euclid(n) as i32,
        }
    }
}

/// Row minima of the flight matrix: new values and their winning sources.
#[derive(Debug, Clone)]
pub struct MinPlusResult {
    pub values: Vec<f64>,
    pub winners: Vec<SourceRef>,
}

/// A min-plus convolution strategy for the quadratic kernel.
pub trait MinPlusKernel: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Compute `min_l φ[l mod n] + ((i−l)/n)²/(2Δ)` for every endpoint i,
    /// with `l` ranging over windings `|m| ≤ w_max`, leftmost winner on ties.
    fn min_plus(&self, phi: &[f64], delta: f64, w_max: i32) -> MinPlusResult;
}

#[inline]
fn candidate(phi: &[f64], inv_n: f64, two_delta: f64, i: i64, l: i64) -> f64 {
    let n = phi.len() as i64;
    let d = (i - l) as f64 * inv_n;
    phi[l.rem_euclid(n) as usize] + d * d / two_delta
}

/// Divide-and-conquer over the monotone argmin: the leftmost winner column is
/// non-decreasing in the endpoint row, so the midpoint row's scan splits the
/// column range for both halves. O((n + n·W) log n) per flight.
pub struct MonotoneKernel;

impl MonotoneKernel {
    fn solve(
        phi: &[f64],
        inv_n: f64,
        two_delta: f64,
        rows: std::ops::Range<i64>,
        col_lo: i64,
        col_hi: i64,
        values: &mut [f64],
        winners: &mut [SourceRef],
    ) {
        if rows.is_empty() {
            return;
        }
        let mid = rows.start + (rows.end - rows.start) / 2;
        let mut best_l = col_lo;
        let mut best = candidate(phi, inv_n, two_delta, mid, col_lo);
        for l in (col_lo + 1)..=col_hi {
            let v = candidate(phi, inv_n, two_delta, mid, l);
            if v < best {
                best = v;
                best_l = l;
            }
        }
        values[mid as usize] = best;
        winners[mid as usize] = SourceRef::from_unrolled(best_l, phi.len());
        Self::solve(
            phi,
            inv_n,
            two_delta,
            rows.start..mid,
            col_lo,
            best_l,
            values,
            winners,
        );
        Self::solve(
            phi,
            inv_n,
            two_delta,
            (mid + 1)..rows.end,
            best_l,
            col_hi,
            values,
            winners,
        );
    }
}

impl MinPlusKernel for MonotoneKernel {
    fn name(&self) -> &'static str {
        "monotone"
    }

    fn description(&self) -> &'static str {
        "divide-and-conquer monotone argmin row minima"
    }

    fn min_plus(&self, phi: &[f64], delta: f64, w_max: i32) -> MinPlusResult {
        let n = phi.len();
        let inv_n = 1.0 / n as f64;
        let two_delta = 2.0 * delta;
        let col_lo = -(w_max as i64) * n as i64;
        let col_hi = (w_max as i64 + 1) * n as i64 - 1;
        let mut values = vec![0.0; n];
        let mut winners = vec![SourceRef { node: 0, winding: 0 }; n];
        Self::solve(
            phi,
            inv_n,
            two_delta,
            0..n as i64,
            col_lo,
            col_hi,
            &mut values,
            &mut winners,
        );
        MinPlusResult { values, winners }
    }
}

/// Lower envelope of the source parabolas, evaluated left to right:
/// O(n·W) per flight. Winner values are recomputed from the candidate
/// expression so they agree bitwise with the other kernels.
pub struct EnvelopeKernel;

impl MinPlusKernel for EnvelopeKernel {
    fn name(&self) -> &'static str {
        "envelope"
    }

    fn description(&self) -> &'static str {
        "lower envelope of parabolas (distance-transform style)"
    }

    fn min_plus(&self, phi: &[f64], delta: f64, w_max: i32) -> MinPlusResult {
        let n = phi.len() as i64;
        let nf = phi.len() as f64;
        let inv_n = 1.0 / nf;
        let two_delta = 2.0 * delta;
        let col_lo = -(w_max as i64) * n;
        let col_hi = (w_max as i64 + 1) * n - 1;
        let cols = (col_hi - col_lo + 1) as usize;

        // Hulls: vertex column per interval, z = interval start abscissas.
        let mut verts: Vec<i64> = Vec::with_capacity(cols);
        let mut z: Vec<f64> = Vec::with_capacity(cols + 1);
        verts.push(col_lo);
        z.push(f64::NEG_INFINITY);
        z.push(f64::INFINITY);

        let intersect = |l1: i64, l2: i64| -> f64 {
            let q1 = l1 as f64 * inv_n;
            let q2 = l2 as f64 * inv_n;
            let f1 = phi[l1.rem_euclid(n) as usize];
            let f2 = phi[l2.rem_euclid(n) as usize];
            (two_delta * (f2 - f1) + q2 * q2 - q1 * q1) / (2.0 * (q2 - q1))
        };

        for l in (col_lo + 1)..=col_hi {
            let mut s = intersect(*verts.last().unwrap(), l);
            while verts.len() > 1 && s <= z[verts.len() - 1] {
                verts.pop();
                z.pop();
                s = intersect(*verts.last().unwrap(), l);
            }
            verts.push(l);
            *z.last_mut().unwrap() = s;
            z.push(f64::INFINITY);
        }

        let mut values = vec![0.0; phi.len()];
        let mut winners = vec![SourceRef { node: 0, winding: 0 }; phi.len()];
        let mut k = 0usize;
        for i in 0..n {
            let x = i as f64 * inv_n;
            // Stay left on exact boundary hits: leftmost tie-breaking.
            while z[k + 1] < x {
                k += 1;
            }
            let l = verts[k];
            values[i as usize] = candidate(phi, inv_n, two_delta, i, l);
            winners[i as usize] = SourceRef::from_unrolled(l, phi.len());
        }
        MinPlusResult { values, winners }
    }
}

/// All registered kernels; `monotone` is the default fast path and
/// `brute-force` the validation oracle.
pub fn registry() -> &'static [&'static dyn MinPlusKernel] {
    static KERNELS: [&dyn MinPlusKernel; 3] = [
        &MonotoneKernel,
        &EnvelopeKernel,
        &crate::oracles::brute::BruteForceKernel,
    ];
    &KERNELS
}

pub fn by_name(name: &str) -> Option<&'static dyn MinPlusKernel> {
    registry().iter().copied().find(|k| k.name() == name)
}

pub fn default_kernel() -> &'static dyn MinPlusKernel {
    &MonotoneKernel
}

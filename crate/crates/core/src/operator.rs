//! Lower transition rate operators given by independent per-row rate intervals.
//!
//! For an operator with off-diagonal rate bounds `l(x, y) <= q(x, y) <= u(x, y)`,
//! the lower rate operator is
//!
//! ```text
//! [Q f](x) = min { sum_{y != x} q(x, y) (f(y) - f(x)) : l <= q <= u }
//! ```
//!
//! Since each row is chosen independently, the minimum is attained term by
//! term: the lower rate when `f(y) >= f(x)` and the upper rate otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamble::{Gamble, StateSpace};

/// Absolute slack on `delta * ||Q|| <= 2`.
pub const STEP_SLACK: f64 = 1e-12;

/// Largest state space accepted by [`IntervalRateOperator::corner_envelope_apply`].
pub const CORNER_ENUMERATION_CAP: usize = 5;

/// Tolerance factor on row sums of a [`RateMatrix`], relative to the row magnitude.
const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A precise transition rate matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl RateMatrix {
    /// Builds a rate matrix from its rows, checking that off-diagonal entries
    /// are non-negative and rows sum to zero.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidOperator("empty rate matrix".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    actual: row.len(),
                });
            }
            let mut sum = 0.0;
            let mut magnitude = 0.0;
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidOperator(format!("entry ({x}, {y}) is not finite")));
                }
                if x != y && v < 0.0 {
                    return Err(Error::InvalidOperator(format!(
                        "off-diagonal entry ({x}, {y}) = {v} is negative"
                    )));
                }
                sum += v;
                magnitude += v.abs();
            }
            if sum.abs() > ROW_SUM_TOLERANCE * magnitude {
                return Err(Error::InvalidOperator(format!("row {x} sums to {sum}, not 0")));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { size, entries })
    }

    /// Builds the matrix with the given off-diagonal entries and the diagonal
    /// set to minus the off-diagonal row sum.
    pub(crate) fn from_off_diagonal(size: usize, mut entries: Vec<f64>) -> Self {
        for x in 0..size {
            entries[x * size + x] = 0.0;
            let s: f64 = entries[x * size..(x + 1) * size].iter().sum();
            entries[x * size + x] = -s;
        }
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.size + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    /// `Q f`, evaluated as `sum_{y != x} Q(x, y) (f(y) - f(x))`.
    pub fn apply(&self, f: &Gamble) -> Result<Gamble> {
        f.check_len(self.size)?;
        let v = f.values();
        let out = (0..self.size)
            .map(|x| {
                let mut acc = 0.0;
                for y in 0..self.size {
                    if y != x {
                        acc += self.get(x, y) * (v[y] - v[x]);
                    }
                }
                acc
            })
            .collect();
        Ok(Gamble::from_vec_unchecked(out))
    }
}

/// Lower transition rate operator with independent off-diagonal rate intervals.
///
/// Exact rate matrices are the degenerate case `l = u`. Diagonal entries of
/// the bound matrices are ignored and stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRateOperator {
    space: StateSpace,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalRateOperator {
    pub fn new(space: StateSpace, lower: Vec<Vec<f64>>, upper: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.size();
        let flatten = |rows: Vec<Vec<f64>>, which: &str| -> Result<Vec<f64>> {
            if rows.len() != n {
                return Err(Error::InvalidOperator(format!(
                    "{which} bounds have {} rows for {n} states",
                    rows.len()
                )));
            }
            let mut out = Vec::with_capacity(n * n);
            for row in rows {
                if row.len() != n {
                    return Err(Error::InvalidOperator(format!(
                        "{which} bound row has {} entries for {n} states",
                        row.len()
                    )));
                }
                out.extend(row);
            }
            Ok(out)
        };
        let lower = flatten(lower, "lower")?;
        let upper = flatten(upper, "upper")?;
        Self::from_flat(space, lower, upper)
    }

    pub(crate) fn from_flat(space: StateSpace, mut lower: Vec<f64>, mut upper: Vec<f64>) -> Result<Self> {
        let n = space.size();
        for x in 0..n {
            lower[x * n + x] = 0.0;
            upper[x * n + x] = 0.0;
            for y in (0..n).filter(|&y| y != x) {
                let (l, u) = (lower[x * n + y], upper[x * n + y]);
                if !l.is_finite() || !u.is_finite() {
                    return Err(Error::InvalidOperator(format!(
                        "rate bounds for ({x}, {y}) are not finite"
                    )));
                }
                if l < 0.0 {
                    return Err(Error::InvalidOperator(format!(
                        "lower rate for ({x}, {y}) is negative ({l})"
                    )));
                }
                if l > u {
                    return Err(Error::InvalidOperator(format!(
                        "inverted interval for ({x}, {y}): [{l}, {u}]"
                    )));
                }
            }
        }
        Ok(Self { space, lower, upper })
    }

    /// The degenerate operator equal to the rate matrix `m`.
    pub fn from_rate_matrix(m: &RateMatrix) -> Self {
        let n = m.size();
        let mut entries = m.entries.clone();
        for x in 0..n {
            entries[x * n + x] = 0.0;
        }
        Self {
            space: StateSpace::new(n).expect("rate matrices are non-empty"),
            lower: entries.clone(),
            upper: entries,
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn lower(&self, x: usize, y: usize) -> f64 {
        self.lower[x * self.size() + y]
    }

    pub fn upper(&self, x: usize, y: usize) -> f64 {
        self.upper[x * self.size() + y]
    }

    /// True when every interval is a single point, i.e. the operator is linear.
    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    /// The rate matrix of a degenerate operator.
    pub fn as_rate_matrix(&self) -> Option<RateMatrix> {
        self.is_degenerate()
            .then(|| RateMatrix::from_off_diagonal(self.size(), self.lower.clone()))
    }

    /// Greedy rate choice for the pair `(x, y)` given the increment `f(y) - f(x)`.
    #[inline]
    fn greedy_rate(&self, x: usize, y: usize, diff: f64) -> f64 {
        let i = x * self.size() + y;
        if diff >= 0.0 {
            self.lower[i]
        } else {
            self.upper[i]
        }
    }

    #[inline]
    fn lower_component(&self, x: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (y, &fy) in v.iter().enumerate() {
            if y != x {
                let diff = fy - v[x];
                acc += self.greedy_rate(x, y, diff) * diff;
            }
        }
        acc
    }

    /// `[Q f](x)` for every `x`.
    pub fn apply_lower(&self, f: &Gamble) -> Result<Gamble> {
        f.check_len(self.size())?;
        let v = f.values();
        Ok(Gamble::from_vec_unchecked(
            (0..v.len()).map(|x| self.lower_component(x, v)).collect(),
        ))
    }

    /// The conjugate upper operator, `-Q(-f)`.
    pub fn apply_upper(&self, f: &Gamble) -> Result<Gamble> {
        Ok(self.apply_lower(&f.neg())?.neg())
    }

    /// Operator norm induced by the maximum norm: `2 max_x |[Q I_x](x)|`.
    pub fn norm(&self) -> f64 {
        let n = self.size();
        (0..n)
            .map(|x| {
                let mut s = 0.0;
                for y in (0..n).filter(|&y| y != x) {
                    s += self.upper(x, y);
                }
                2.0 * s
            })
            .fold(0.0, f64::max)
    }

    /// Checks `delta >= 0` and `delta * ||Q|| <= 2`.
    pub fn check_step(&self, delta: f64) -> Result<()> {
        let norm = self.norm();
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "step size must be finite and non-negative, got {delta}"
            )));
        }
        if delta * norm > 2.0 + STEP_SLACK {
            return Err(Error::StepTooLarge {
                delta,
                norm,
                bound: 2.0 / norm,
            });
        }
        Ok(())
    }

    /// One Euler step `f + delta Q f`.
    pub fn euler_step(&self, delta: f64, f: &Gamble) -> Result<Gamble> {
        self.check_step(delta)?;
        f.check_len(self.size())?;
        let mut out = vec![0.0; f.len()];
        self.step_into(delta, f.values(), &mut out);
        Ok(Gamble::from_vec_unchecked(out))
    }

    /// Unchecked Euler step into a caller-provided buffer.
    #[inline]
    pub(crate) fn step_into(&self, delta: f64, g: &[f64], out: &mut [f64]) {
        for x in 0..g.len() {
            out[x] = g[x] + delta * self.lower_component(x, g);
        }
    }

    /// Componentwise minimum of `Q' f` over every corner matrix `Q'`, whose
    /// off-diagonal entries each sit at a lower or an upper bound.
    pub fn corner_envelope_apply(&self, f: &Gamble) -> Result<Gamble> {
        let n = self.size();
        if n > CORNER_ENUMERATION_CAP {
            return Err(Error::SizeLimit {
                size: n,
                cap: CORNER_ENUMERATION_CAP,
            });
        }
        f.check_len(n)?;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
            .collect();
        let mut best = vec![f64::INFINITY; n];
        let mut entries = vec![0.0; n * n];
        for mask in 0u64..(1u64 << pairs.len()) {
            for (bit, &(x, y)) in pairs.iter().enumerate() {
                entries[x * n + y] = if mask >> bit & 1 == 1 {
                    self.upper(x, y)
                } else {
                    self.lower(x, y)
                };
            }
            let corner = RateMatrix::from_off_diagonal(n, entries.clone());
            let image = corner.apply(f)?;
            for (b, v) in best.iter_mut().zip(image.values()) {
                *b = b.min(*v);
            }
        }
        Ok(Gamble::from_vec_unchecked(best))
    }

    /// The corner rate matrix selected by the greedy minimisation for `f`.
    /// Ties (`f(y) = f(x)`) select the lower rate.
    pub fn dominating_matrix_for(&self, f: &Gamble) -> Result<RateMatrix> {
        let n = self.size();
        f.check_len(n)?;
        let v = f.values();
        let mut entries = vec![0.0; n * n];
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                entries[x * n + y] = self.greedy_rate(x, y, v[y] - v[x]);
            }
        }
        Ok(RateMatrix::from_off_diagonal(n, entries))
    }
}

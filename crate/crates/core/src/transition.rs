//! Lower transition operators: the discrete-time objects whose contraction
//! coefficients drive the ergodic error bounds.

use crate::binary::{binary_coefficient, BinaryModel};
use crate::error::{Error, Result};
use crate::gamble::Gamble;
use crate::operator::IntervalRateOperator;

/// Row sums of a stochastic matrix must be within this of one.
const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// A (possibly non-linear) lower transition operator on gambles.
pub trait LowerTransition {
    fn size(&self) -> usize;

    fn apply_lower(&self, f: &Gamble) -> Result<Gamble>;

    fn apply_upper(&self, f: &Gamble) -> Result<Gamble> {
        Ok(self.apply_lower(&f.neg())?.neg())
    }

    /// The exact coefficient of ergodicity, when it is cheaply known.
    fn exact_coefficient(&self) -> Option<f64> {
        None
    }
}

/// `(I + delta Q)^power` for an interval rate operator.
#[derive(Debug, Clone)]
pub struct EulerPower<'a> {
    q: &'a IntervalRateOperator,
    delta: f64,
    power: u64,
}

impl<'a> EulerPower<'a> {
    pub fn new(q: &'a IntervalRateOperator, delta: f64, power: u64) -> Result<Self> {
        q.check_step(delta)?;
        if power == 0 {
            return Err(Error::InvalidArgument("power must be at least 1".into()));
        }
        Ok(Self { q, delta, power })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn power(&self) -> u64 {
        self.power
    }

    /// Column-wise matrix of a linear (degenerate) operator power.
    fn linear_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut rows = vec![vec![0.0; n]; n];
        for y in 0..n {
            let col = self
                .apply_lower(&Gamble::indicator(n, &[y]).expect("in range"))
                .expect("sizes match");
            for (row, value) in rows.iter_mut().zip(col.values()) {
                row[y] = *value;
            }
        }
        rows
    }
}

impl LowerTransition for EulerPower<'_> {
    fn size(&self) -> usize {
        self.q.size()
    }

    fn apply_lower(&self, f: &Gamble) -> Result<Gamble> {
        f.check_len(self.size())?;
        let mut g = f.values().to_vec();
        let mut next = vec![0.0; g.len()];
        for _ in 0..self.power {
            self.q.step_into(self.delta, &g, &mut next);
            std::mem::swap(&mut g, &mut next);
        }
        Gamble::new(g)
    }

    /// Two-state operators: the closed form for one step, otherwise the
    /// maximal variation over the two indicators (the only [0, 1]-valued
    /// gambles with unit variation). Linear operators: the delta coefficient.
    fn exact_coefficient(&self) -> Option<f64> {
        if let Some(model) = BinaryModel::from_operator(self.q) {
            if self.power == 1 {
                return binary_coefficient(&model, self.delta).ok();
            }
            return (0..2)
                .map(|x| {
                    self.apply_lower(&Gamble::indicator(2, &[x]).expect("in range"))
                        .map(|g| g.variation())
                })
                .collect::<Result<Vec<_>>>()
                .ok()
                .map(|v| v[0].max(v[1]));
        }
        if self.q.is_degenerate() {
            return Some(delta_of_rows(&self.linear_matrix()));
        }
        None
    }
}

/// `(I + delta_k Q) ... (I + delta_1 Q)`.
#[derive(Debug, Clone)]
pub struct StepComposition<'a> {
    q: &'a IntervalRateOperator,
    steps: Vec<f64>,
}

impl<'a> StepComposition<'a> {
    pub fn new(q: &'a IntervalRateOperator, steps: Vec<f64>) -> Result<Self> {
        for &d in &steps {
            q.check_step(d)?;
        }
        Ok(Self { q, steps })
    }
}

impl LowerTransition for StepComposition<'_> {
    fn size(&self) -> usize {
        self.q.size()
    }

    fn apply_lower(&self, f: &Gamble) -> Result<Gamble> {
        crate::approximation::compose_steps(self.q, f, &self.steps)
    }

    fn exact_coefficient(&self) -> Option<f64> {
        if self.q.size() == 2 {
            let mut best: f64 = 0.0;
            for x in 0..2 {
                best = best.max(self.apply_lower(&Gamble::indicator(2, &[x]).ok()?).ok()?.variation());
            }
            return Some(best);
        }
        None
    }
}

/// A row-stochastic matrix acting linearly on gambles.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NonStochastic("empty matrix".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonStochastic(format!("row {x} has {} entries, expected {n}", row.len())));
            }
            if let Some(y) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::NonStochastic(format!("entry ({x}, {y}) = {} is not a probability", row[y])));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::NonStochastic(format!("row {x} sums to {s}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn product(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        let n = self.rows.len();
        if other.rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: other.rows.len(),
            });
        }
        let rows = (0..n)
            .map(|x| {
                (0..n)
                    .map(|z| (0..n).map(|y| self.rows[x][y] * other.rows[y][z]).sum())
                    .collect()
            })
            .collect();
        Ok(Self { rows })
    }
}

impl LowerTransition for StochasticMatrix {
    fn size(&self) -> usize {
        self.rows.len()
    }

    fn apply_lower(&self, f: &Gamble) -> Result<Gamble> {
        f.check_len(self.size())?;
        let v = f.values();
        Gamble::new(
            self.rows
                .iter()
                .map(|row| row.iter().zip(v).map(|(p, fx)| p * fx).sum())
                .collect(),
        )
    }

    fn exact_coefficient(&self) -> Option<f64> {
        Some(delta_of_rows(&self.rows))
    }
}

/// `max_{x,y} 1/2 sum_z |T(x,z) - T(y,z)|`, without validation.
pub(crate) fn delta_of_rows(rows: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for (x, rx) in rows.iter().enumerate() {
        for ry in &rows[x + 1..] {
            let d: f64 = rx.iter().zip(ry).map(|(a, b)| (a - b).abs()).sum();
            best = best.max(d / 2.0);
        }
    }
    best
}

/// Delta coefficient of a row-stochastic matrix given by its rows.
pub fn delta_coefficient(rows: &[Vec<f64>]) -> Result<f64> {
    let m = StochasticMatrix::new(rows.to_vec())?;
    Ok(delta_of_rows(m.rows()))
}

#![allow(dead_code)]

use ictmc_core::{BinaryModel, Gamble, IntervalRateOperator, StateSpace};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Interval operator with some zero and some degenerate intervals.
pub fn operator<R: Rng>(rng: &mut R, size: usize, max_rate: f64) -> IntervalRateOperator {
    let mut lower = vec![vec![0.0; size]; size];
    let mut upper = vec![vec![0.0; size]; size];
    for x in 0..size {
        for y in (0..size).filter(|&y| y != x) {
            let shape = rng.gen_range(0..6);
            let a = rng.gen_range(0.0..max_rate);
            let b = rng.gen_range(0.0..max_rate);
            let (l, u) = match shape {
                0 => (0.0, 0.0),
                1 => (a, a),
                2 => (0.0, a),
                _ => (a.min(b), a.max(b)),
            };
            lower[x][y] = l;
            upper[x][y] = u;
        }
    }
    IntervalRateOperator::new(StateSpace::new(size).unwrap(), lower, upper).unwrap()
}

/// Operator whose lower rates are all positive, hence ergodic.
pub fn positive_operator<R: Rng>(rng: &mut R, size: usize, max_rate: f64) -> IntervalRateOperator {
    let mut lower = vec![vec![0.0; size]; size];
    let mut upper = vec![vec![0.0; size]; size];
    for x in 0..size {
        for y in (0..size).filter(|&y| y != x) {
            let a = rng.gen_range(0.05 * max_rate..max_rate);
            let b = rng.gen_range(0.05 * max_rate..max_rate);
            lower[x][y] = a.min(b);
            upper[x][y] = a.max(b);
        }
    }
    IntervalRateOperator::new(StateSpace::new(size).unwrap(), lower, upper).unwrap()
}

pub fn gamble<R: Rng>(rng: &mut R, size: usize) -> Gamble {
    Gamble::new((0..size).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Binary model with every rate in `[min_rate, max_rate)`.
pub fn binary<R: Rng>(rng: &mut R, min_rate: f64, max_rate: f64) -> BinaryModel {
    let mut interval = || {
        let a = rng.gen_range(min_rate..max_rate);
        let b = rng.gen_range(min_rate..max_rate);
        (a.min(b), a.max(b))
    };
    let (q0l, q0h) = interval();
    let (q1l, q1h) = interval();
    BinaryModel::new(q0l, q0h, q1l, q1h).unwrap()
}

pub fn stochastic<R: Rng>(rng: &mut R, size: usize) -> Vec<Vec<f64>> {
    (0..size)
        .map(|_| {
            let raw: Vec<f64> = (0..size)
                .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) })
                .collect();
            let total: f64 = raw.iter().sum();
            if total == 0.0 {
                let mut row = vec![0.0; size];
                row[rng.gen_range(0..size)] = 1.0;
                return row;
            }
            let mut row: Vec<f64> = raw.iter().map(|v| v / total).collect();
            // absorb rounding so the row sums to one within the validation tolerance
            let drift: f64 = 1.0 - row.iter().sum::<f64>();
            let last = row.iter().rposition(|v| *v > 0.0).unwrap();
            row[last] += drift;
            row
        })
        .collect()
}

pub fn product(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|x| (0..n).map(|z| (0..n).map(|y| a[x][y] * b[y][z]).sum()).collect())
        .collect()
}

pub fn add(f: &Gamble, g: &Gamble) -> Gamble {
    Gamble::new(f.values().iter().zip(g.values()).map(|(a, b)| a + b).collect()).unwrap()
}

pub fn scale(f: &Gamble, mu: f64) -> Gamble {
    Gamble::new(f.values().iter().map(|a| mu * a).collect()).unwrap()
}

pub fn shift(f: &Gamble, c: f64) -> Gamble {
    Gamble::new(f.values().iter().map(|a| a + c).collect()).unwrap()
}

/// Largest step the operator admits, or a unit step for the zero operator.
pub fn max_step(q: &IntervalRateOperator) -> f64 {
    let norm = q.norm();
    if norm == 0.0 {
        1.0
    } else {
        2.0 / norm
    }
}

//! Shared optimization utilities: probability vectors, simplex projection,
//! a monotone projected ascent for concave objectives, and seed derivation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Probability vector: nonnegative entries summing to 1 within 1e-10.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexWeights {
    weights: Vec<f64>,
}

impl SimplexWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadWeights("weight vector must be non-empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::BadWeights("weights must be finite".into()));
        }
        if let Some(&w) = weights.iter().find(|&&w| w < -WEIGHT_SUM_TOL) {
            return Err(Error::BadWeights(format!("negative weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::BadWeights(format!("weights sum to {sum}, expected 1")));
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(SimplexWeights { weights })
    }

    pub fn uniform(n: usize) -> Self {
        SimplexWeights {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on index k.
    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        SimplexWeights { weights: w }
    }

    /// Projects an arbitrary vector onto the simplex.
    pub fn projected(v: &[f64]) -> Self {
        SimplexWeights {
            weights: project_to_simplex(v),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Product distribution over the l-fold cartesian power, first index slowest.
    pub fn tensor_power(&self, l: usize) -> Self {
        let mut out = vec![1.0];
        for _ in 0..l {
            let mut next = Vec::with_capacity(out.len() * self.weights.len());
            for &a in &out {
                for &b in &self.weights {
                    next.push(a * b);
                }
            }
            out = next;
        }
        SimplexWeights { weights: out }
    }
}

impl Serialize for SimplexWeights {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.weights.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SimplexWeights {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let w: Vec<f64> = Vec::deserialize(deserializer)?;
        SimplexWeights::new(w).map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-based threshold rule; ties are broken lexicographically by index so
/// the result is deterministic bit for bit.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[j].partial_cmp(&v[i]).unwrap().then(i.cmp(&j)));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    let mut support = 0;
    for (rank, &idx) in order.iter().enumerate() {
        cumulative += v[idx];
        let candidate = (cumulative - 1.0) / (rank + 1) as f64;
        if v[idx] - candidate > 0.0 {
            theta = candidate;
            support = rank + 1;
        } else {
            break;
        }
    }
    if support == 0 {
        // all mass collapses to the largest coordinate
        let mut out = vec![0.0; n];
        out[order[0]] = 1.0;
        return out;
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Outcome of a projected ascent run.
#[derive(Clone, Debug)]
pub struct AscentOutcome {
    pub value: f64,
    pub point: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Monotone projected gradient ascent for a concave objective on the simplex.
///
/// `eval` returns the value and Euclidean gradient. The step adapts by
/// backtracking; iteration stops when improvements stay below `tol`.
pub fn maximize_concave_on_simplex(
    eval: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    max_iters: usize,
    tol: f64,
) -> AscentOutcome {
    let mut x = project_to_simplex(x0);
    let (mut fx, mut grad) = eval(&x);
    let mut step = 1.0;
    let mut stalled = 0;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let trial: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &g)| xi + step * g).collect();
        let cand = project_to_simplex(&trial);
        let (fc, gc) = eval(&cand);
        if fc > fx + 1e-15 {
            let gain = fc - fx;
            x = cand;
            fx = fc;
            grad = gc;
            step = (step * 1.5).min(1e6);
            stalled = if gain < tol { stalled + 1 } else { 0 };
        } else {
            step *= 0.5;
            if step < 1e-14 {
                stalled = 3;
            }
        }
        if stalled >= 3 {
            break;
        }
    }
    AscentOutcome {
        value: fx,
        point: x,
        converged: stalled >= 3,
        iterations,
    }
}

/// SplitMix64 step, used to derive independent per-task seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic seed for subtask `stream` of a run seeded with `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

/// Seeded, platform-independent RNG.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn projection_basic_cases() {
        // already on the simplex
        let p = project_to_simplex(&[0.25, 0.75]);
        assert_relative_eq!(p[0], 0.25, epsilon = 1e-14);
        // symmetric point projects to uniform
        let p = project_to_simplex(&[5.0, 5.0, 5.0]);
        for &x in &p {
            assert_relative_eq!(x, 1.0 / 3.0, epsilon = 1e-14);
        }
        // dominated coordinates clip to zero
        let p = project_to_simplex(&[10.0, 0.0, 0.0]);
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-14);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn projection_properties() {
        let mut rng = seeded_rng(11);
        use rand::Rng;
        for _ in 0..200 {
            let n = rng.gen_range(1..7);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p = project_to_simplex(&v);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn concave_ascent_finds_maximum() {
        // f(x) = -sum (x_i - c_i)^2 with c inside the simplex
        let c = [0.2, 0.5, 0.3];
        let eval = |x: &[f64]| {
            let value: f64 = -x.iter().zip(&c).map(|(&a, &b)| (a - b) * (a - b)).sum::<f64>();
            let grad: Vec<f64> = x.iter().zip(&c).map(|(&a, &b)| -2.0 * (a - b)).collect();
            (value, grad)
        };
        let out = maximize_concave_on_simplex(&eval, &[1.0, 0.0, 0.0], 500, 1e-12);
        assert!(out.converged);
        for (a, b) in out.point.iter().zip(&c) {
            assert_relative_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn weights_validation() {
        assert!(SimplexWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexWeights::new(vec![0.6, 0.6]).is_err());
        assert!(SimplexWeights::new(vec![1.5, -0.5]).is_err());
        let p = SimplexWeights::uniform(4);
        assert_relative_eq!(p.as_slice().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tensor_power_ordering_is_first_index_slowest() {
        let p = SimplexWeights::new(vec![0.75, 0.25]).unwrap();
        let sq = p.tensor_power(2);
        // order: (0,0), (0,1), (1,0), (1,1)
        assert_relative_eq!(sq.get(0), 0.5625, epsilon = 1e-15);
        assert_relative_eq!(sq.get(1), 0.1875, epsilon = 1e-15);
        assert_relative_eq!(sq.get(2), 0.1875, epsilon = 1e-15);
        assert_relative_eq!(sq.get(3), 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
    }
}

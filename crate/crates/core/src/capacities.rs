//! Entropic quantities: Holevo information of classical-quantum ensembles,
//! minimax lower bounds over the convex hull of a family, and coherent
//! information.
//!
//! The minimax routines exploit that the Holevo information is concave in the
//! input distribution and convex in the channel, so the inner maximization is
//! a projected concave ascent and the outer hull minimization is a convex
//! problem handled by a grid plus pattern refinement.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::avqc::Avqc;
use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    jacobi_hermitian, ComplexMatrix, DensityMatrix, PureStateVector,
};
use crate::optim::{
    derive_seed, maximize_concave_on_simplex, project_to_simplex, seeded_rng, SimplexWeights,
};
use crate::sampling::random_density_matrix;

const INV_LN2: f64 = std::f64::consts::LOG2_E;
/// Spectral floor inside matrix logarithms; keeps gradients finite when the
/// average state is rank-deficient while leaving values untouched.
const LOG_FLOOR: f64 = 1e-18;

/// Weighted family of states on a common Hilbert space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ensemble {
    weights: SimplexWeights,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(weights: SimplexWeights, states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                actual: states.len(),
                context: "ensemble weights versus states",
            });
        }
        let dim = states
            .first()
            .ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?
            .dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
                context: "ensemble state dimension",
            });
        }
        Ok(Ensemble { weights, states })
    }

    pub fn weights(&self) -> &SimplexWeights {
        &self.weights
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn average(&self) -> ComplexMatrix {
        average_state(self.states.as_slice(), self.weights.as_slice())
    }

    pub fn chi(&self) -> f64 {
        chi_of(self.states.as_slice(), self.weights.as_slice())
    }
}

/// h(t) = -t log2 t - (1-t) log2 (1-t).
pub fn binary_entropy(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("binary entropy argument {t} outside [0, 1]")));
    }
    let mut h = 0.0;
    if t > 0.0 {
        h -= t * t.log2();
    }
    if t < 1.0 {
        h -= (1.0 - t) * (1.0 - t).log2();
    }
    Ok(h.max(0.0))
}

/// chi(p, W) = S(sum_x p_x W_x) - sum_x p_x S(W_x).
pub fn holevo_chi(outputs: &[DensityMatrix], weights: &SimplexWeights) -> Result<f64> {
    if outputs.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            actual: outputs.len(),
            context: "cq outputs versus weights",
        });
    }
    if outputs.is_empty() {
        return Err(Error::InvalidInput("empty cq channel".into()));
    }
    let dim = outputs[0].dim();
    if let Some(bad) = outputs.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
            context: "cq output dimension",
        });
    }
    Ok(chi_of(outputs, weights.as_slice()))
}

fn average_state(outputs: &[DensityMatrix], p: &[f64]) -> ComplexMatrix {
    let dim = outputs[0].dim();
    let mut avg = ComplexMatrix::zeros(dim, dim);
    for (state, &w) in outputs.iter().zip(p) {
        if w != 0.0 {
            avg.add_scaled(state.matrix(), w);
        }
    }
    avg
}

fn chi_of(outputs: &[DensityMatrix], p: &[f64]) -> f64 {
    let avg = average_state(outputs, p);
    let mut chi = entropy_of_matrix(&avg);
    for (state, &w) in outputs.iter().zip(p) {
        if w != 0.0 {
            chi -= w * entropy_of_matrix(state.matrix());
        }
    }
    chi.max(0.0)
}

fn entropy_of_matrix(m: &ComplexMatrix) -> f64 {
    let (vals, _) = jacobi_hermitian(&m.hermitize());
    let mut s = 0.0;
    for lam in vals {
        if lam > 0.0 {
            s -= lam * lam.log2();
        }
    }
    s.max(0.0)
}

/// U log2(Lambda) U^dag with eigenvalues clamped away from zero.
fn log2_matrix(m: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = jacobi_hermitian(&m.hermitize());
    let dim = vals.len();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (i, &lam) in vals.iter().enumerate() {
        let col = vecs.column(i);
        let scale = lam.max(LOG_FLOOR).log2();
        for r in 0..dim {
            for c in 0..dim {
                let add = col[r] * col[c].conj() * scale;
                out.set(r, c, out.get(r, c) + add);
            }
        }
    }
    out
}

/// Maximizes chi over the input distribution for fixed outputs.
fn max_chi(outputs: &[DensityMatrix], warm: Option<&[f64]>) -> (f64, Vec<f64>) {
    let n = outputs.len();
    let entropies: Vec<f64> = outputs
        .iter()
        .map(|s| entropy_of_matrix(s.matrix()))
        .collect();
    let eval = |p: &[f64]| -> (f64, Vec<f64>) {
        let avg = average_state(outputs, p);
        let log_avg = log2_matrix(&avg);
        let mut value = entropy_of_matrix(&avg);
        let mut grad = Vec::with_capacity(n);
        for (x, state) in outputs.iter().enumerate() {
            value -= p[x] * entropies[x];
            let overlap = state.matrix().inner_product_re(&log_avg);
            grad.push(-overlap - INV_LN2 - entropies[x]);
        }
        (value, grad)
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = warm {
        starts.push(w.to_vec());
    }
    starts.push(vec![1.0 / n as f64; n]);
    let mut best_value = f64::NEG_INFINITY;
    let mut best_p = vec![1.0 / n as f64; n];
    for start in starts {
        let outcome = maximize_concave_on_simplex(&eval, &start, 600, 1e-12);
        if outcome.value > best_value {
            best_value = outcome.value;
            best_p = outcome.point;
        }
    }
    (best_value.max(0.0), best_p)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiMinimax {
    /// min over the hull of max over inputs of chi.
    pub value: f64,
    /// Hull weights attaining the minimum.
    pub worst_q: SimplexWeights,
    /// Input distribution attaining the inner maximum there.
    pub best_p: SimplexWeights,
}

/// Minimax Holevo bound over the hull of the family with fixed pure inputs:
/// min over mixtures q of max over input distributions p of
/// chi(p, s -> mix_q(I)(input_s)).
///
/// The outer problem is convex in q (chi is convex in the channel), so the
/// grid minimum is polished by a pattern descent on the simplex.
pub fn chi_minimax_lower_bound(
    family: &Avqc,
    inputs: &[PureStateVector],
    grid: usize,
) -> Result<ChiMinimax> {
    let n = family.num_channels();
    if n > 3 {
        return Err(Error::UnsupportedSize(format!(
            "hull minimization supports at most 3 members, got {n}"
        )));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidInput("no input states".into()));
    }
    for v in inputs {
        if v.dim() != family.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: family.dim_in(),
                actual: v.dim(),
                context: "minimax input state",
            });
        }
    }

    let input_states: Vec<DensityMatrix> =
        inputs.iter().map(DensityMatrix::from_pure).collect();

    let mut warm_p: Option<Vec<f64>> = None;
    let objective = |q: &[f64], warm: Option<&[f64]>| -> Result<(f64, Vec<f64>)> {
        let mixed = family.hull_member(&SimplexWeights::projected(q))?;
        let outputs: Vec<DensityMatrix> = input_states
            .iter()
            .map(|s| mixed.apply(s))
            .collect::<Result<_>>()?;
        Ok(max_chi(&outputs, warm))
    };

    let mut best_value = f64::INFINITY;
    let mut best_q = vec![1.0];
    let mut best_p = vec![1.0 / inputs.len() as f64; inputs.len()];
    let mut spacing = 1.0;
    for q in hull_grid(n, grid) {
        if n == 2 {
            spacing = 1.0 / (grid.max(2) - 1) as f64;
        } else if n == 3 {
            spacing = 1.0 / simplex_steps(grid) as f64;
        }
        let (value, p) = objective(&q, warm_p.as_deref())?;
        warm_p = Some(p.clone());
        if value < best_value {
            best_value = value;
            best_q = q;
            best_p = p;
        }
    }

    // Pattern descent from the grid argmin; chi is convex in q, so this
    // converges to the hull minimum regardless of the grid resolution.
    if n > 1 {
        let mut h = spacing;
        while h > 1e-7 {
            let mut moved = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let mut cand = best_q.clone();
                    cand[a] += h;
                    cand[b] -= h;
                    let cand = project_to_simplex(&cand);
                    let (value, p) = objective(&cand, Some(&best_p))?;
                    if value < best_value - 1e-12 {
                        best_value = value;
                        best_q = cand;
                        best_p = p;
                        moved = true;
                    }
                }
            }
            if !moved {
                h /= 2.0;
            }
        }
    }

    Ok(ChiMinimax {
        value: best_value,
        worst_q: SimplexWeights::projected(&best_q),
        best_p: SimplexWeights::projected(&best_p),
    })
}

fn simplex_steps(grid: usize) -> usize {
    // Largest s with (s+1)(s+2)/2 <= max(grid, 6) grid points.
    let target = grid.max(6);
    let mut s = 2;
    while (s + 2) * (s + 3) / 2 <= target {
        s += 1;
    }
    s
}

pub(crate) fn hull_grid(n: usize, grid: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0]],
        2 => {
            let g = grid.max(2);
            (0..g)
                .map(|k| {
                    let t = k as f64 / (g - 1) as f64;
                    vec![1.0 - t, t]
                })
                .collect()
        }
        3 => {
            let steps = simplex_steps(grid);
            let mut pts = Vec::new();
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = i as f64 / steps as f64;
                    let b = j as f64 / steps as f64;
                    pts.push(vec![a, b, 1.0 - a - b]);
                }
            }
            pts
        }
        _ => unreachable!("guarded by caller"),
    }
}

/// I_c(rho, N) = S(N(rho)) - S((N (x) id)(psi_rho)) for a purification
/// psi_rho of rho.
pub fn coherent_information(rho: &DensityMatrix, channel: &QuantumChannel) -> Result<f64> {
    if rho.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch {
            expected: channel.dim_in(),
            actual: rho.dim(),
            context: "coherent information input",
        });
    }
    let out = channel.apply(rho)?;
    let s_out = entropy_of_matrix(out.matrix());

    let psi = crate::linalg::purify(rho)?;
    let proj = psi.projector();
    let d_ref = rho.dim();
    let eye = ComplexMatrix::identity(d_ref);
    let joint_dim = channel.dim_out() * d_ref;
    let mut joint = ComplexMatrix::zeros(joint_dim, joint_dim);
    for k in channel.kraus() {
        let lifted = k.kron(&eye);
        joint = joint.add(&lifted.mul(&proj).mul(&lifted.adjoint()));
    }
    let s_joint = entropy_of_matrix(&joint);
    Ok(s_out - s_joint)
}

/// Heuristic single-letter minimax: max over input states rho of the minimum
/// of I_c(rho, .) over a grid on the hull, polished by a derivative-free
/// hill climb on the state factor.
pub fn ic_minimax_single_letter(family: &Avqc, grid: usize, starts: usize) -> Result<f64> {
    let n = family.num_channels();
    if n > 3 {
        return Err(Error::UnsupportedSize(format!(
            "hull minimization supports at most 3 members, got {n}"
        )));
    }
    let d = family.dim_in();
    let hull: Vec<QuantumChannel> = hull_grid(n, grid.max(3))
        .into_iter()
        .map(|q| family.hull_member(&SimplexWeights::projected(&q)))
        .collect::<Result<_>>()?;

    let score = |rho: &DensityMatrix| -> Result<f64> {
        let mut worst = f64::INFINITY;
        for ch in &hull {
            worst = worst.min(coherent_information(rho, ch)?);
        }
        Ok(worst)
    };

    let mut best_rho = DensityMatrix::maximally_mixed(d);
    let mut best = score(&best_rho)?;
    for i in 0..d {
        let cand = DensityMatrix::basis_projector(d, i);
        let v = score(&cand)?;
        if v > best {
            best = v;
            best_rho = cand;
        }
    }
    for k in 0..starts {
        let cand = random_density_matrix(d, d, derive_seed(29, k as u64))?;
        let v = score(&cand)?;
        if v > best {
            best = v;
            best_rho = cand;
        }
    }

    // Hill climb on a square factor A with rho = A A^dag / tr.
    let mut factor = factor_of(&best_rho);
    let mut rng = seeded_rng(derive_seed(29, 0xc1_1a6));
    let mut step = 0.2;
    let mut stalls = 0;
    while step > 1e-6 && stalls < 60 {
        let mut bump = ComplexMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                bump.set(
                    r,
                    c,
                    Complex64::new(
                        crate::sampling::standard_normal(&mut rng),
                        crate::sampling::standard_normal(&mut rng),
                    ),
                );
            }
        }
        let mut cand_factor = factor.clone();
        cand_factor.add_scaled(&bump, step);
        let cand = state_of_factor(&cand_factor)?;
        let v = score(&cand)?;
        if v > best + 1e-12 {
            best = v;
            factor = cand_factor;
            step = (step * 1.5).min(0.5);
            stalls = 0;
        } else {
            step /= 1.5;
            stalls += 1;
        }
    }
    Ok(best)
}

fn factor_of(rho: &DensityMatrix) -> ComplexMatrix {
    let (vals, vecs) = jacobi_hermitian(rho.matrix());
    let d = rho.dim();
    let mut a = ComplexMatrix::zeros(d, d);
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let col = vecs.column(i);
        let w = lam.sqrt();
        for r in 0..d {
            a.set(r, i, col[r] * w);
        }
    }
    a
}

fn state_of_factor(a: &ComplexMatrix) -> Result<DensityMatrix> {
    let gram = a.mul(&a.adjoint());
    let tr = gram.trace().re;
    if tr <= 1e-12 {
        return Err(Error::InvalidInput("degenerate state factor".into()));
    }
    DensityMatrix::new(gram.scale(1.0 / tr).hermitize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avqc::{interpolated_family, overlap_example};
    use approx::assert_abs_diff_eq;

    fn example_outputs(t: f64) -> Vec<DensityMatrix> {
        let family = overlap_example();
        let mixed = family
            .hull_member(&SimplexWeights::new(vec![1.0 - t, t]).unwrap())
            .unwrap();
        (0..2)
            .map(|x| mixed.apply(&DensityMatrix::basis_projector(2, x)).unwrap())
            .collect()
    }

    #[test]
    fn binary_entropy_pinned_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            binary_entropy(0.25).unwrap(),
            0.811_278_124_459_132_8,
            epsilon = 1e-12
        );
        assert!(matches!(binary_entropy(-0.1), Err(Error::OutOfRange(_))));
        assert!(matches!(binary_entropy(1.1), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn chi_degenerate_and_orthogonal_cases() {
        let pi = DensityMatrix::maximally_mixed(2);
        let same = holevo_chi(
            &[pi.clone(), pi.clone()],
            &SimplexWeights::uniform(2),
        )
        .unwrap();
        assert_abs_diff_eq!(same, 0.0, epsilon = 1e-12);

        let outputs = vec![
            DensityMatrix::basis_projector(2, 0),
            DensityMatrix::basis_projector(2, 1),
        ];
        let chi = holevo_chi(&outputs, &SimplexWeights::uniform(2)).unwrap();
        assert_abs_diff_eq!(chi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mixing_curve_matches_closed_form() {
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let chi =
                holevo_chi(&example_outputs(t), &SimplexWeights::uniform(2)).unwrap();
            let closed = 1.0 - binary_entropy(t).unwrap() / 2.0;
            assert!(
                (chi - closed).abs() <= 1e-9,
                "t={t}: chi={chi}, closed={closed}"
            );
        }
    }

    #[test]
    fn chi_is_concave_in_the_distribution() {
        let outputs = example_outputs(0.3);
        let mut rng = seeded_rng(41);
        for _ in 0..40 {
            let a: f64 = rand::Rng::gen(&mut rng);
            let b: f64 = rand::Rng::gen(&mut rng);
            let alpha: f64 = rand::Rng::gen(&mut rng);
            let p1 = [a, 1.0 - a];
            let p2 = [b, 1.0 - b];
            let mid = [
                alpha * a + (1.0 - alpha) * b,
                1.0 - alpha * a - (1.0 - alpha) * b,
            ];
            let chi = |p: &[f64]| chi_of(&outputs, p);
            assert!(chi(&mid) >= alpha * chi(&p1) + (1.0 - alpha) * chi(&p2) - 1e-9);
        }
    }

    #[test]
    fn chi_is_convex_under_channel_mixing() {
        let p = SimplexWeights::uniform(2);
        let mut rng = seeded_rng(43);
        for _ in 0..20 {
            let a: f64 = rand::Rng::gen(&mut rng);
            let b: f64 = rand::Rng::gen(&mut rng);
            let alpha: f64 = rand::Rng::gen(&mut rng);
            let chi_at = |t: f64| holevo_chi(&example_outputs(t), &p).unwrap();
            let mixed = chi_at(alpha * a + (1.0 - alpha) * b);
            assert!(mixed <= alpha * chi_at(a) + (1.0 - alpha) * chi_at(b) + 1e-9);
        }
    }

    #[test]
    fn minimax_on_the_example_is_one_half() {
        let family = overlap_example();
        let inputs = vec![PureStateVector::basis(2, 0), PureStateVector::basis(2, 1)];
        let report = chi_minimax_lower_bound(&family, &inputs, 1001).unwrap();
        assert_abs_diff_eq!(report.value, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(report.worst_q.as_slice()[0], 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(report.best_p.as_slice()[0], 0.5, epsilon = 1e-3);
    }

    #[test]
    fn minimax_degenerate_hulls() {
        let family = overlap_example();
        let single =
            Avqc::new("first", vec![family.channels()[0].clone()]).unwrap();
        let inputs = vec![PureStateVector::basis(2, 0), PureStateVector::basis(2, 1)];
        let report = chi_minimax_lower_bound(&single, &inputs, 11).unwrap();
        // Orthogonal pure outputs: the maximum is one bit.
        assert_abs_diff_eq!(report.value, 1.0, epsilon = 1e-6);

        let tau = DensityMatrix::maximally_mixed(3);
        let constant = QuantumChannel::constant(&tau, 2).unwrap();
        let flat = Avqc::new("flat", vec![constant.clone(), constant]).unwrap();
        let report = chi_minimax_lower_bound(&flat, &inputs, 11).unwrap();
        assert_abs_diff_eq!(report.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn minimax_shrinks_when_the_hull_grows() {
        let family = overlap_example();
        let inputs = vec![PureStateVector::basis(2, 0), PureStateVector::basis(2, 1)];
        let two = chi_minimax_lower_bound(&family, &inputs, 201).unwrap();
        let tau = DensityMatrix::maximally_mixed(3);
        let mut members = family.channels().to_vec();
        members.push(QuantumChannel::constant(&tau, 2).unwrap());
        let bigger = Avqc::new("with-constant", members).unwrap();
        let three = chi_minimax_lower_bound(&bigger, &inputs, 201).unwrap();
        assert!(three.value <= two.value + 1e-6);
    }

    #[test]
    fn coherent_information_pinned_values() {
        let pi2 = DensityMatrix::maximally_mixed(2);
        let id2 = QuantumChannel::identity(2);
        assert_abs_diff_eq!(
            coherent_information(&pi2, &id2).unwrap(),
            1.0,
            epsilon = 1e-9
        );

        let pure = DensityMatrix::basis_projector(2, 0);
        let family = overlap_example();
        assert_abs_diff_eq!(
            coherent_information(&pure, &family.channels()[0]).unwrap(),
            0.0,
            epsilon = 1e-9
        );

        let depol = QuantumChannel::depolarizing_embed(2, 2, 1.0).unwrap();
        assert_abs_diff_eq!(
            coherent_information(&pi2, &depol).unwrap(),
            -1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn identity_dominates_other_channels() {
        let id2 = QuantumChannel::identity(2);
        for k in 0..5 {
            let rho = random_density_matrix(2, 2, 100 + k).unwrap();
            let noisy = QuantumChannel::depolarizing_embed(2, 2, 0.3).unwrap();
            let a = coherent_information(&rho, &id2).unwrap();
            let b = coherent_information(&rho, &noisy).unwrap();
            assert!(a >= b - 1e-9);
        }
    }

    #[test]
    fn ic_minimax_known_families() {
        let id_family = Avqc::new("id", vec![QuantumChannel::identity(2)]).unwrap();
        let v = ic_minimax_single_letter(&id_family, 3, 8).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);

        // Every hull point of the overlap example is entanglement breaking,
        // so the minimax value cannot be positive.
        let family = overlap_example();
        let v = ic_minimax_single_letter(&family, 21, 8).unwrap();
        assert!(v <= 1e-6, "got {v}");

        let mixed = interpolated_family(1.0, 0.0).unwrap();
        let v = ic_minimax_single_letter(&mixed, 21, 8).unwrap();
        assert!(v <= 1e-6, "got {v}");
    }
}

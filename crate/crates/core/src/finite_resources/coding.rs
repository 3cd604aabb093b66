//! Block codes for channels drawn from a finite family, permutation
//! robustification, and the sampled-derandomization experiment.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tail_bound, tail_r_choice, FiniteResourceParams};
use crate::avqc::Avqc;
use crate::capacities::hull_grid;
use crate::channels::{Povm, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, DensityMatrix};
use crate::optim::{derive_seed, seeded_rng, SimplexWeights};

/// Hard cap on the number of candidate codebooks the exhaustive search will
/// score.
const CODEBOOK_SEARCH_CAP: usize = 20_000;
/// Caps for the exact worst-case enumeration inside the simulator.
const SEQ_ENUM_CAP: u64 = 4096;
const EVAL_BUDGET_CAP: u128 = 100_000_000;

/// A block code for channels drawn from a fixed uncertainty set: one
/// codeword state per message on the l-fold input space and a decoding POVM
/// with one effect per message on the l-fold output space.
#[derive(Debug, Clone)]
pub struct CompoundCode {
    codewords: Vec<DensityMatrix>,
    decoder: Povm,
    l: usize,
}

impl CompoundCode {
    pub fn new(codewords: Vec<DensityMatrix>, decoder: Povm, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidInput("blocklength must be at least 1".into()));
        }
        if codewords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a code needs at least two codewords, got {}",
                codewords.len()
            )));
        }
        if decoder.len() != codewords.len() {
            return Err(Error::DimensionMismatch {
                expected: codewords.len(),
                actual: decoder.len(),
                context: "decoder effect count",
            });
        }
        let dim = codewords[0].dim();
        if codewords.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidInput(
                "codewords live on different spaces".into(),
            ));
        }
        Ok(CompoundCode {
            codewords,
            decoder,
            l,
        })
    }

    pub fn codewords(&self) -> &[DensityMatrix] {
        &self.codewords
    }

    pub fn decoder(&self) -> &Povm {
        &self.decoder
    }

    pub fn num_messages(&self) -> usize {
        self.codewords.len()
    }

    pub fn blocklength(&self) -> usize {
        self.l
    }
}

/// Average decoding error of a code when the state sequence `seq` picks the
/// per-site channels from the family.
pub fn code_average_error(code: &CompoundCode, family: &Avqc, seq: &[usize]) -> Result<f64> {
    if seq.len() != code.blocklength() {
        return Err(Error::InvalidInput(format!(
            "sequence length {} does not match the blocklength {}",
            seq.len(),
            code.blocklength()
        )));
    }
    let block = block_channel(family, seq)?;
    code_error_under(code, &block)
}

fn block_channel(family: &Avqc, seq: &[usize]) -> Result<QuantumChannel> {
    let members = family.channels();
    let pick = |s: usize| -> Result<&QuantumChannel> {
        members
            .get(s)
            .ok_or_else(|| Error::InvalidInput(format!("state symbol {s} out of range")))
    };
    let mut iter = seq.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidInput("empty state sequence".into()))?;
    let mut block = pick(*first)?.clone();
    for s in iter {
        block = block.tensor(pick(*s)?)?;
    }
    Ok(block)
}

fn code_error_under(code: &CompoundCode, block: &QuantumChannel) -> Result<f64> {
    let mut err = 0.0;
    for (cw, effect) in code.codewords.iter().zip(code.decoder.effects()) {
        let out = block.apply(cw)?;
        err += 1.0 - out.matrix().inner_product_re(effect);
    }
    Ok((err / code.num_messages() as f64).clamp(0.0, 1.0))
}

/// Uniform ensemble of site-permuted copies of a base code. Members are
/// materialized on demand; only the base code and the permutation list are
/// stored.
#[derive(Debug, Clone)]
pub struct RandomCodeEnsemble {
    base: CompoundCode,
    permutations: Vec<Vec<usize>>,
    weights: SimplexWeights,
    in_site: usize,
    out_site: usize,
}

impl RandomCodeEnsemble {
    pub fn len(&self) -> usize {
        self.permutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutations.is_empty()
    }

    pub fn base(&self) -> &CompoundCode {
        &self.base
    }

    pub fn weights(&self) -> &SimplexWeights {
        &self.weights
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    /// The j-th member: the base code with site k of every codeword and
    /// decoder effect relocated to site perm[k].
    pub fn member(&self, j: usize) -> Result<CompoundCode> {
        let perm = self.permutations.get(j).ok_or_else(|| {
            Error::InvalidInput(format!(
                "ensemble has {} members, asked for {j}",
                self.permutations.len()
            ))
        })?;
        let l = self.base.blocklength();
        let codewords = self
            .base
            .codewords()
            .iter()
            .map(|c| DensityMatrix::new(permute_sites(c.matrix(), self.in_site, l, perm)))
            .collect::<Result<Vec<_>>>()?;
        let effects = self
            .base
            .decoder()
            .effects()
            .iter()
            .map(|e| permute_sites(e, self.out_site, l, perm))
            .collect();
        CompoundCode::new(codewords, Povm::new(effects)?, l)
    }
}

/// Wrap a base code into the uniform ensemble of all site permutations of
/// its codewords and decoder effects; the enumeration is exhaustive, so the
/// blocklength is capped at 6 (720 permutations).
pub fn robustify(base: &CompoundCode, l: usize) -> Result<RandomCodeEnsemble> {
    if l != base.blocklength() {
        return Err(Error::InvalidInput(format!(
            "requested blocklength {l} but the code has {}",
            base.blocklength()
        )));
    }
    if l > 6 {
        return Err(Error::TooLarge(format!(
            "permutation enumeration needs blocklength <= 6, got {l}"
        )));
    }
    if base.num_messages() > 8 {
        return Err(Error::TooLarge(format!(
            "permutation ensembles support at most 8 messages, got {}",
            base.num_messages()
        )));
    }
    let in_site = site_dim(base.codewords()[0].dim(), l)?;
    let out_site = site_dim(base.decoder().dim(), l)?;
    let permutations = all_permutations(l);
    let weights = SimplexWeights::uniform(permutations.len());
    Ok(RandomCodeEnsemble {
        base: base.clone(),
        permutations,
        weights,
        in_site,
        out_site,
    })
}

/// Mean decoding error of the ensemble against a fixed state sequence.
/// Permuting a member and relabeling the sequence cancel, so this equals
/// the weighted mean of the base-code error over relabeled sequences.
pub fn ensemble_average_error(
    ens: &RandomCodeEnsemble,
    family: &Avqc,
    seq: &[usize],
) -> Result<f64> {
    let mut acc = 0.0;
    for (perm, w) in ens.permutations().iter().zip(ens.weights().as_slice()) {
        let relabeled: Vec<usize> = (0..seq.len()).map(|k| seq[perm[k]]).collect();
        acc += w * code_average_error(ens.base(), family, &relabeled)?;
    }
    Ok(acc)
}

/// Exhaustively search codebooks of basis product states for the one whose
/// square-root-measurement decoder has the smallest worst-case average
/// error over a grid of hull channels.
pub fn build_toy_base_code(family: &Avqc, l: usize, m: usize) -> Result<CompoundCode> {
    if l == 0 {
        return Err(Error::InvalidInput("blocklength must be at least 1".into()));
    }
    if l > 4 {
        return Err(Error::TooLarge(format!(
            "codebook search supports blocklength <= 4, got {l}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "a code needs at least two messages, got {m}"
        )));
    }
    if m > 4 {
        return Err(Error::TooLarge(format!(
            "codebook search supports at most 4 messages, got {m}"
        )));
    }
    let n = family.num_channels();
    if n > 3 {
        return Err(Error::UnsupportedSize(format!(
            "hull grids cover at most three channels, got {n}"
        )));
    }
    let d_in_l = family
        .dim_in()
        .checked_pow(l as u32)
        .filter(|&d| d <= 81)
        .ok_or_else(|| Error::TooLarge("block input dimension exceeds 81".into()))?;
    if m > d_in_l {
        return Err(Error::InvalidInput(format!(
            "{m} messages do not fit into {d_in_l} basis codewords"
        )));
    }
    let combo_count = binomial(d_in_l, m);
    if combo_count > CODEBOOK_SEARCH_CAP {
        return Err(Error::TooLarge(format!(
            "codebook search would score {combo_count} candidate sets"
        )));
    }

    // Hull grid; for a two-channel family it contains every mixture k/l a
    // length-l state sequence can average to.
    let grid_size = if n == 2 { (l + 1).max(5) } else { 15 };
    let blocks: Vec<QuantumChannel> = hull_grid(n, grid_size)
        .iter()
        .map(|q| {
            family
                .hull_member(&SimplexWeights::projected(q))?
                .tensor_power(l)
        })
        .collect::<Result<_>>()?;

    // Outputs of every basis product input under every grid channel.
    let outputs: Vec<Vec<DensityMatrix>> = blocks
        .par_iter()
        .map(|ch| {
            (0..d_in_l)
                .map(|b| ch.apply(&DensityMatrix::basis_projector(d_in_l, b)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, CompoundCode)> = None;
    for combo in combinations(d_in_l, m) {
        let averaged: Vec<ComplexMatrix> = combo
            .iter()
            .map(|&b| {
                let mut acc = ComplexMatrix::zeros(outputs[0][b].dim(), outputs[0][b].dim());
                for row in &outputs {
                    acc = acc.add(row[b].matrix());
                }
                acc.scale(1.0 / outputs.len() as f64)
            })
            .collect();
        let decoder = square_root_measurement(&averaged, m)?;
        let mut worst = 0.0f64;
        for row in &outputs {
            let mut err = 0.0;
            for (i, &b) in combo.iter().enumerate() {
                err += 1.0 - row[b].matrix().inner_product_re(&decoder.effects()[i]);
            }
            worst = worst.max((err / m as f64).clamp(0.0, 1.0));
        }
        if best.as_ref().map_or(true, |(w, _)| worst < *w - 1e-12) {
            let codewords = combo
                .iter()
                .map(|&b| DensityMatrix::basis_projector(d_in_l, b))
                .collect();
            best = Some((worst, CompoundCode::new(codewords, decoder, l)?));
        }
    }
    best.map(|(_, code)| code)
        .ok_or_else(|| Error::InvalidInput("empty codebook search".into()))
}

/// Worst average decoding error of a code over a grid of hull channels.
pub fn worst_case_hull_error(
    code: &CompoundCode,
    family: &Avqc,
    grid_size: usize,
) -> Result<f64> {
    let n = family.num_channels();
    if n > 3 {
        return Err(Error::UnsupportedSize(format!(
            "hull grids cover at most three channels, got {n}"
        )));
    }
    let mut worst = 0.0f64;
    for q in hull_grid(n, grid_size) {
        let block = family
            .hull_member(&SimplexWeights::projected(&q))?
            .tensor_power(code.blocklength())?;
        worst = worst.max(code_error_under(code, &block)?);
    }
    Ok(worst)
}

/// Outcome of the sampled-derandomization experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DerandomizationResult {
    pub k: u64,
    pub worst_case_error: f64,
    pub theoretical_bound: f64,
    pub trials: usize,
    pub failure_fraction: f64,
    pub lambda: f64,
    pub seed: u64,
}

/// Sample K permutation codes from the robustified toy ensemble, compute
/// the exact worst-case error of their uniform mixture over every state
/// sequence, and repeat `trials` times with derived seeds. A trial fails
/// when its worst-case error exceeds `lambda`; the failure fraction is
/// reported next to the closed-form tail bound evaluated at the ensemble's
/// exact per-sequence mean error. When K equals the ensemble size the draw
/// is replaced by the full enumeration, so every trial reproduces the
/// ensemble itself. The message count is 2^{rate * l}, at least 2.
pub fn derandomize_simulate(
    family: &Avqc,
    params: &FiniteResourceParams,
    k: u64,
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<DerandomizationResult> {
    params.validate()?;
    if k == 0 || trials == 0 {
        return Err(Error::InvalidInput(
            "need at least one sampled code and one trial".into(),
        ));
    }
    let n = family.num_channels();
    let seq_count = (n as u64).checked_pow(l as u32).unwrap_or(u64::MAX);
    if seq_count > SEQ_ENUM_CAP {
        return Err(Error::BudgetExceeded(format!(
            "cannot enumerate {seq_count} state sequences (cap {SEQ_ENUM_CAP})"
        )));
    }
    let m = messages_for_rate(params.rate, l);
    if k as u128 * m as u128 * seq_count as u128 > EVAL_BUDGET_CAP {
        return Err(Error::BudgetExceeded(format!(
            "K * messages * sequences = {} exceeds the evaluation budget",
            k as u128 * m as u128 * seq_count as u128
        )));
    }

    let base = build_toy_base_code(family, l, m)?;
    let ensemble = robustify(&base, l)?;
    let members = ensemble.len();

    // Exact base-code error on every sequence, plus the index action of
    // each permutation: member p's error on s is the base error on the
    // relabeled sequence k -> s[perm[k]].
    let seqs = all_sequences(n, l);
    let base_err: Vec<f64> = seqs
        .par_iter()
        .map(|s| code_average_error(&base, family, s))
        .collect::<Result<_>>()?;
    let action: Vec<Vec<usize>> = ensemble
        .permutations()
        .iter()
        .map(|perm| {
            seqs.iter()
                .map(|s| {
                    let relabeled: Vec<usize> = (0..l).map(|k| s[perm[k]]).collect();
                    seq_index(&relabeled, n)
                })
                .collect()
        })
        .collect();

    let mut eps_hat = 0.0f64;
    for si in 0..seqs.len() {
        let mean = action.iter().map(|row| base_err[row[si]]).sum::<f64>() / members as f64;
        eps_hat = eps_hat.max(mean);
    }
    let theoretical_bound = if eps_hat <= 0.0 {
        0.0
    } else {
        tail_bound(
            k,
            tail_r_choice(params.lambda, eps_hat),
            params.lambda,
            eps_hat,
            n,
            l,
        )
    };

    let exhaustive = k as usize == members;
    let outcomes: Vec<(bool, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let draw: Vec<usize> = if exhaustive {
                (0..members).collect()
            } else {
                let mut rng = seeded_rng(derive_seed(seed, 0xde7a_0000 + t as u64));
                (0..k).map(|_| rng.gen_range(0..members)).collect()
            };
            let mut worst = 0.0f64;
            for si in 0..seqs.len() {
                let mean = draw.iter().map(|&p| base_err[action[p][si]]).sum::<f64>() / k as f64;
                worst = worst.max(mean);
            }
            (worst > params.lambda, worst)
        })
        .collect();

    let failures = outcomes.iter().filter(|(failed, _)| *failed).count();
    let worst_case_error = outcomes.iter().fold(0.0f64, |acc, &(_, w)| acc.max(w));
    Ok(DerandomizationResult {
        k,
        worst_case_error,
        theoretical_bound,
        trials,
        failure_fraction: failures as f64 / trials as f64,
        lambda: params.lambda,
        seed,
    })
}

fn messages_for_rate(rate: f64, l: usize) -> usize {
    let m = (rate * l as f64).exp2().floor();
    if m.is_finite() && m >= 2.0 {
        m as usize
    } else {
        2
    }
}

/// Square-root measurement for the given (already averaged) output states:
/// D_i = S^{-1/2} A_i S^{-1/2} with S = sum_i A_i, plus the kernel projector
/// of S spread uniformly so the effects sum to the identity exactly.
fn square_root_measurement(averaged: &[ComplexMatrix], m: usize) -> Result<Povm> {
    let dim = averaged[0].rows();
    let mut total = ComplexMatrix::zeros(dim, dim);
    for a in averaged {
        total = total.add(a);
    }
    let (vals, vecs) = hermitian_eig(&total.hermitize())?;
    let tol = 1e-9 * vals.first().copied().unwrap_or(0.0).max(1e-12);
    let mut inv_sqrt = ComplexMatrix::zeros(dim, dim);
    let mut kernel = ComplexMatrix::zeros(dim, dim);
    for (j, &v) in vals.iter().enumerate() {
        let col = vecs.column(j);
        let proj = ComplexMatrix::outer(&col, &col);
        if v > tol {
            inv_sqrt = inv_sqrt.add(&proj.scale(1.0 / v.sqrt()));
        } else {
            kernel = kernel.add(&proj);
        }
    }
    let effects = averaged
        .iter()
        .map(|a| {
            inv_sqrt
                .mul(a)
                .mul(&inv_sqrt)
                .add(&kernel.scale(1.0 / m as f64))
                .hermitize()
        })
        .collect();
    Povm::new(effects)
}

/// Conjugate a matrix on an l-fold tensor product of d-dimensional sites by
/// the unitary that relocates site k to site perm[k].
fn permute_sites(m: &ComplexMatrix, d: usize, l: usize, perm: &[usize]) -> ComplexMatrix {
    let dim = m.rows();
    // Stride of site k in the row-major multi-index (site 0 most
    // significant).
    let mut stride = vec![1usize; l];
    for k in (0..l.saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * d;
    }
    let map: Vec<usize> = (0..dim)
        .map(|i| {
            let mut target = 0usize;
            for k in 0..l {
                let digit = (i / stride[k]) % d;
                target += digit * stride[perm[k]];
            }
            target
        })
        .collect();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out.set(map[i], map[j], m.get(i, j));
        }
    }
    out
}

fn site_dim(total: usize, l: usize) -> Result<usize> {
    for d in 1..=total {
        let mut p = 1usize;
        let mut overflow = false;
        for _ in 0..l {
            match p.checked_mul(d) {
                Some(v) => p = v,
                None => {
                    overflow = true;
                    break;
                }
            }
        }
        if !overflow && p == total {
            return Ok(d);
        }
        if overflow || p > total {
            break;
        }
    }
    Err(Error::InvalidInput(format!(
        "dimension {total} is not a product of {l} equal site dimensions"
    )))
}

fn all_permutations(l: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if i < k - 1 {
                if k % 2 == 0 {
                    items.swap(i, k - 1);
                } else {
                    items.swap(0, k - 1);
                }
            }
        }
    }
    let mut items: Vec<usize> = (0..l).collect();
    let mut out = Vec::with_capacity((1..=l).product());
    heap(l, &mut items, &mut out);
    out
}

fn all_sequences(n: usize, l: usize) -> Vec<Vec<usize>> {
    let count = n.pow(l as u32);
    (0..count)
        .map(|mut idx| {
            let mut s = vec![0usize; l];
            for k in (0..l).rev() {
                s[k] = idx % n;
                idx /= n;
            }
            s
        })
        .collect()
}

fn seq_index(s: &[usize], n: usize) -> usize {
    s.iter().fold(0, |acc, &d| acc * n + d)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut out = 1usize;
    for i in 0..k {
        out = out.saturating_mul(n - i) / (i + 1);
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

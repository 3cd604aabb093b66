//! Finite-randomness trade-offs for coding over a channel that varies
//! adversarially from use to use: closed-form bounds on how many shared
//! random codes and how large a blocklength suffice for a target error, the
//! Markov/union-bound tail estimate behind those counts, a Monte Carlo
//! derandomization simulator over permutation-robustified codes, and
//! conversions between error criteria.

mod coding;

pub use coding::{
    build_toy_base_code, code_average_error, derandomize_simulate, ensemble_average_error,
    robustify, worst_case_hull_error, CompoundCode, DerandomizationResult, RandomCodeEnsemble,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest blocklength the minimal-L scan will certify before giving up.
const BLOCKLENGTH_CAP: u64 = 1_000_000_000;

/// Parameter bundle for the finite-randomness bounds: target error
/// `lambda`, transmission rate in bits per use, slack `eps`, reliability
/// exponent in bits per use, and the size of the channel-state alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FiniteResourceParams {
    pub lambda: f64,
    pub rate: f64,
    pub eps: f64,
    pub exponent: f64,
    pub s_size: usize,
}

impl FiniteResourceParams {
    pub fn new(lambda: f64, rate: f64, eps: f64, exponent: f64, s_size: usize) -> Result<Self> {
        let p = FiniteResourceParams {
            lambda,
            rate,
            eps,
            exponent,
            s_size,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 || self.lambda >= 1.0 {
            return Err(Error::BadParams(format!(
                "target error {} outside (0, 1)",
                self.lambda
            )));
        }
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::BadParams(format!(
                "rate {} must be nonnegative",
                self.rate
            )));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::BadParams(format!(
                "slack {} must be positive",
                self.eps
            )));
        }
        if !self.exponent.is_finite() || self.exponent <= self.eps {
            return Err(Error::BadParams(format!(
                "exponent {} must exceed the slack {}",
                self.exponent, self.eps
            )));
        }
        if self.s_size < 2 {
            return Err(Error::BadParams(format!(
                "state alphabet needs at least two symbols, got {}",
                self.s_size
            )));
        }
        Ok(())
    }

    /// Effective exponent E - eps that drives both counting bounds.
    fn gap(&self) -> f64 {
        self.exponent - self.eps
    }
}

/// Number of shared random codes that suffices for target error `lambda`:
/// ceil((1/lambda) * 8 log2|S| / (E - eps)).
pub fn randomness_bound_k(p: &FiniteResourceParams) -> Result<u64> {
    p.validate()?;
    Ok(randomness_bound_raw(p).ceil() as u64)
}

fn randomness_bound_raw(p: &FiniteResourceParams) -> f64 {
    (1.0 / p.lambda) * 8.0 * (p.s_size as f64).log2() / p.gap()
}

/// Minimal blocklength L with
///   L - (2|S|/(E-eps)) log2 L  >=  (2/(E-eps)) log2((1/lambda) * 4/(E-eps)).
///
/// The left-hand side equals 1 at L = 1, dips while L is below the log
/// coefficient over ln 2, then grows without bound. Whenever the right-hand
/// side exceeds 1 the satisfying set is therefore upward closed, which makes
/// the doubling-plus-bisection search below exact; minimality (L - 1 fails)
/// is still re-checked explicitly before returning.
pub fn blocklength_bound_l(p: &FiniteResourceParams) -> Result<u64> {
    p.validate()?;
    let coeff = 2.0 * p.s_size as f64 / p.gap();
    let rhs = 2.0 / p.gap() * ((1.0 / p.lambda) * 4.0 / p.gap()).log2();
    let holds = |l: u64| -> bool {
        let lf = l as f64;
        lf - coeff * lf.log2() >= rhs
    };
    if holds(1) {
        return Ok(1);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    loop {
        if holds(hi) {
            break;
        }
        if hi >= BLOCKLENGTH_CAP {
            return Err(Error::NoSolutionBelowCap);
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(BLOCKLENGTH_CAP);
    }
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if !holds(hi) || holds(hi - 1) {
        return Err(Error::Validation(
            "blocklength scan lost the minimality certificate".into(),
        ));
    }
    Ok(hi)
}

/// First-order blocklength estimate: the right-hand side of the defining
/// inequality with the log L correction dropped. Desk-scale parameters keep
/// the exact scan within a factor of four of this.
pub fn blocklength_rough(p: &FiniteResourceParams) -> Result<f64> {
    p.validate()?;
    Ok(2.0 / p.gap() * ((1.0 / p.lambda) * 4.0 / p.gap()).log2())
}

/// Probability that a K-sample mixture of random codes still exceeds error
/// lambda somewhere on the length-l state-sequence alphabet:
///   min(1, |S|^l * 2^{-K (r lambda - eps_l 2^r)}).
/// The bound is vacuous (returns 1) unless r lambda > eps_l 2^r.
pub fn tail_bound(k: u64, r: f64, lambda: f64, eps_l: f64, s_size: usize, l: usize) -> f64 {
    let margin = r * lambda - eps_l * r.exp2();
    if !(margin > 0.0) {
        return 1.0;
    }
    let log2_bound = l as f64 * (s_size as f64).log2() - k as f64 * margin;
    if log2_bound >= 0.0 {
        1.0
    } else {
        log2_bound.exp2()
    }
}

/// Union-bound overhead times decay for a code family whose compound error
/// falls like 2^{-l delta}: eps_l = (l+1)^{|S|} * 2^{-l delta}.
pub fn eps_l(l: usize, delta: f64, s_size: usize) -> f64 {
    ((l + 1) as f64).powi(s_size as i32) * (-(l as f64) * delta).exp2()
}

/// The exponent choice r = l delta / 2 that balances decay against the
/// robustification overhead inside the tail bound.
pub fn balanced_r(l: usize, delta: f64) -> f64 {
    l as f64 * delta / 2.0
}

/// Largest r for which 1 + e(2^r - 1) <= 2^{e 2^r} holds for every
/// e in [0, 1], i.e. 2^r (1 - ln 2) <= 1. Within this range the closed-form
/// tail bound is a true bound for bounded error variables of mean e.
pub(crate) const TAIL_R_MAX: f64 = 1.704;

/// Maximizer of r lambda - e 2^r, clamped to the range where the
/// closed-form tail bound stays valid for arbitrary mean e.
pub(crate) fn tail_r_choice(lambda: f64, e: f64) -> f64 {
    if e <= 0.0 {
        return TAIL_R_MAX;
    }
    let unconstrained = (lambda / (e * std::f64::consts::LN_2)).log2();
    unconstrained.clamp(0.05, TAIL_R_MAX)
}

/// Turn an entanglement-fidelity error guarantee on a k-dimensional space
/// into a strong subspace-transmission guarantee:
///   lambda_s = lambda_e + c / sqrt(k - 1) + eps
/// on a subspace of dimension floor(eps^2 / (256 log2(32/eps)) * k).
pub fn convert_ent_to_strong(lambda_e: f64, k: u64, eps: f64, c: f64) -> Result<(f64, u64)> {
    if k < 2 {
        return Err(Error::BadParams(format!(
            "conversion needs dimension k >= 2, got {k}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParams(format!("eps {eps} outside (0, 1)")));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::BadParams(format!(
            "constant c must be nonnegative, got {c}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda_e) {
        return Err(Error::BadParams(format!(
            "error rate {lambda_e} outside [0, 1]"
        )));
    }
    let lambda_s = lambda_e + c / ((k - 1) as f64).sqrt() + eps;
    let k_hat = (eps * eps / (256.0 * (32.0 / eps).log2()) * k as f64).floor() as u64;
    Ok((lambda_s, k_hat))
}

/// Turn a strong subspace guarantee on a k-dimensional space into an
/// entanglement-style one:
///   lambda_e = 1 - ((k+1)/k) (1 - lambda_s - 1/(k+1)),
/// clamped to [0, 1].
pub fn convert_strong_to_ent(lambda_s: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::BadParams("conversion needs dimension k >= 1".into()));
    }
    if !(0.0..=1.0).contains(&lambda_s) {
        return Err(Error::BadParams(format!(
            "error rate {lambda_s} outside [0, 1]"
        )));
    }
    let kf = k as f64;
    let raw = 1.0 - (kf + 1.0) / kf * (1.0 - lambda_s - 1.0 / (kf + 1.0));
    Ok(raw.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    // exponent - eps comes out as exactly `gap` (the operands are within a
    // factor of two, so the subtraction is exact).
    fn params(lambda: f64, gap: f64, s: usize) -> FiniteResourceParams {
        FiniteResourceParams::new(lambda, 0.5, gap, 2.0 * gap, s).unwrap()
    }

    #[test]
    fn randomness_count_pinned_values() {
        assert_eq!(randomness_bound_k(&params(0.05, 0.2, 2)).unwrap(), 800);
        assert_eq!(randomness_bound_k(&params(0.01, 0.1, 2)).unwrap(), 8000);
    }

    #[test]
    fn randomness_count_scales_inversely() {
        for i in 1..=10u64 {
            let p = params(0.05 / i as f64, 0.2, 2);
            assert_eq!(randomness_bound_k(&p).unwrap(), 800 * i);
        }
        // Ratios are exact before the ceiling, in the error and in the gap.
        let a = randomness_bound_raw(&params(0.037, 0.2, 2));
        let b = randomness_bound_raw(&params(0.074, 0.2, 2));
        assert!((a - 2.0 * b).abs() < 1e-9 * a.abs());
        let c = randomness_bound_raw(&params(0.05, 0.1, 2));
        let d = randomness_bound_raw(&params(0.05, 0.2, 2));
        assert!((c - 2.0 * d).abs() < 1e-9 * c.abs());
    }

    #[test]
    fn blocklength_pinned_value_with_minimality() {
        let p = params(0.05, 0.2, 2);
        assert_eq!(blocklength_bound_l(&p).unwrap(), 246);
        // The defining inequality flips between 245 and 246.
        let coeff = 2.0 * 2.0 / 0.2;
        let rhs = (2.0 / 0.2) * 400.0_f64.log2();
        assert!(246.0 - coeff * 246.0_f64.log2() >= rhs);
        assert!(245.0 - coeff * 245.0_f64.log2() < rhs);
    }

    #[test]
    fn blocklength_tracks_the_rough_scaling_law() {
        let p = params(0.05, 0.2, 2);
        let l = blocklength_bound_l(&p).unwrap() as f64;
        let rough = (2.0 / 0.2) * 400.0_f64.log2();
        assert!((blocklength_rough(&p).unwrap() - rough).abs() < 1e-12);
        assert!(l >= rough / 4.0 && l <= rough * 4.0);
    }

    #[test]
    fn blocklength_monotone_in_lambda_and_capped() {
        let looser = blocklength_bound_l(&params(0.1, 0.2, 2)).unwrap();
        assert!(looser <= 246);
        let tiny_gap = FiniteResourceParams::new(0.5, 0.5, 1e-8, 2e-8, 2).unwrap();
        assert!(matches!(
            blocklength_bound_l(&tiny_gap),
            Err(Error::NoSolutionBelowCap)
        ));
    }

    #[test]
    fn tail_bound_vacuous_and_balanced_choices() {
        // Nonpositive exponent margin degenerates to the trivial bound.
        assert_eq!(tail_bound(1000, 0.5, 0.1, 0.2, 2, 4), 1.0);

        let (l, delta, s, k, lambda) = (4usize, 4.0, 2usize, 100u64, 0.3);
        let r = balanced_r(l, delta);
        assert!((r - 8.0).abs() < 1e-15);
        let e = eps_l(l, delta, s);
        assert!((e - 25.0 / 65536.0).abs() < 1e-15);
        // With r = l delta / 2 the exponent margin becomes
        // l delta lambda / 2 - (l+1)^{|S|} 2^{-l delta / 2}.
        let margin = l as f64 * delta * lambda / 2.0
            - ((l + 1) as f64).powi(s as i32) * (-(l as f64) * delta / 2.0).exp2();
        let direct = (s as f64).powi(l as i32) * (-(k as f64) * margin).exp2();
        let bound = tail_bound(k, r, lambda, e, s, l);
        assert!((bound - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn tail_bound_drops_below_one_past_the_count_threshold() {
        let (l, s, lambda, e, r) = (3usize, 2usize, 0.2, 1e-3, 1.0);
        let margin = r * lambda - e * 2.0;
        let threshold = (l as f64) / margin; // log2|S| = 1
        assert!(tail_bound(threshold.ceil() as u64 + 1, r, lambda, e, s, l) < 1.0);
        assert_eq!(tail_bound(threshold.floor() as u64 - 1, r, lambda, e, s, l), 1.0);
    }

    #[test]
    fn error_conversions_match_hand_computations() {
        let (ls, khat) = convert_ent_to_strong(0.01, 1_000_000, 0.1, 1.0).unwrap();
        let expect = 0.01 + 1.0 / 999_999.0_f64.sqrt() + 0.1;
        assert!((ls - expect).abs() < 1e-12);
        assert!(ls > 0.110 && ls < 0.112);
        assert_eq!(khat, 4);

        let le = convert_strong_to_ent(0.1, 3).unwrap();
        assert!((le - 2.0 / 15.0).abs() < 1e-12);
        assert_eq!(convert_strong_to_ent(1.0, 3).unwrap(), 1.0);
        // Vanishing strong error maps to vanishing error at every dimension.
        for k in [1u64, 2, 7, 1000] {
            assert!(convert_strong_to_ent(0.0, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn subspace_fraction_approaches_the_density_limit() {
        let k = 1_000_000_000u64;
        let (_, khat) = convert_ent_to_strong(0.0, k, 0.01, 0.0).unwrap();
        let density = 0.01f64.powi(2) / (256.0 * (32.0f64 / 0.01).log2());
        assert!((khat as f64 / k as f64 - density).abs() <= 1.0 / k as f64 + 1e-15);
    }

    #[test]
    fn converters_are_monotone_in_the_input_error() {
        let a = convert_ent_to_strong(0.05, 50, 0.05, 1.0).unwrap().0;
        let b = convert_ent_to_strong(0.10, 50, 0.05, 1.0).unwrap().0;
        assert!(b >= a);
        let c = convert_strong_to_ent(0.2, 9).unwrap();
        let d = convert_strong_to_ent(0.3, 9).unwrap();
        assert!(d >= c);
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        assert!(FiniteResourceParams::new(0.0, 0.5, 0.01, 0.2, 2).is_err());
        assert!(FiniteResourceParams::new(1.0, 0.5, 0.01, 0.2, 2).is_err());
        assert!(FiniteResourceParams::new(0.5, -0.1, 0.01, 0.2, 2).is_err());
        assert!(FiniteResourceParams::new(0.5, 0.5, 0.3, 0.2, 2).is_err());
        assert!(FiniteResourceParams::new(0.5, 0.5, 0.01, 0.2, 1).is_err());
        assert!(matches!(
            convert_ent_to_strong(0.0, 1, 0.1, 1.0),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            convert_ent_to_strong(0.0, 10, 1.0, 1.0),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            convert_ent_to_strong(0.0, 10, 0.1, -1.0),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            convert_strong_to_ent(0.1, 0),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            convert_strong_to_ent(1.5, 3),
            Err(Error::BadParams(_))
        ));
    }
}

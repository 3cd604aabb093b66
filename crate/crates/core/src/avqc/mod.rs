//! Arbitrarily varying quantum channels: a finite set of CPTP maps with a
//! jammer choosing one per use.
//!
//! Wire format: `{"label": ..., "channels": [...], "measurePrepare": ...?}`.
//! The optional measure-prepare block carries a shared POVM and per-channel
//! prepared states; when present it must reproduce every member exactly and
//! unlocks the structured (exact) symmetrizer certificates.

mod hull;
mod perturb;
mod structured;
mod symmetrize;

pub use hull::{search_eb_in_hull, HullSearchReport, HullVerdict};
pub use perturb::{perturbation_experiment, PerturbationRow, PerturbationTable};
pub use structured::{
    find_structured_symmetrizer, lift_structured_symmetrizer, StructuredSymmetrizer,
};
pub use symmetrize::{
    inner_min, symmetrizability, InnerOptions, InnerSolution, SymmetrizabilityOptions,
    SymmetrizabilityReport, ValueCertificate,
};

use serde::{Deserialize, Serialize};

use crate::channels::{MeasurePrepareSpec, Povm, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::optim::SimplexWeights;

/// Finite family of equal-dimension channels indexed by the jammer alphabet.
#[derive(Clone, Debug)]
pub struct Avqc {
    label: String,
    channels: Vec<QuantumChannel>,
    measure_prepare: Option<MeasurePrepareSpec>,
}

impl Avqc {
    pub fn new(label: impl Into<String>, channels: Vec<QuantumChannel>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidSpec("channel family must be nonempty".into()))?;
        let (din, dout) = (first.dim_in(), first.dim_out());
        for ch in &channels {
            if ch.dim_in() != din || ch.dim_out() != dout {
                return Err(Error::DimensionMismatch {
                    expected: din,
                    actual: ch.dim_in(),
                    context: "family member dimensions",
                });
            }
        }
        Ok(Avqc {
            label: label.into(),
            channels,
            measure_prepare: None,
        })
    }

    /// Attaches a measure-prepare realization after checking that it
    /// reproduces every member (Choi distance <= 1e-9 entrywise).
    pub fn with_measure_prepare(mut self, spec: MeasurePrepareSpec) -> Result<Self> {
        if spec.num_channels() != self.channels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.channels.len(),
                actual: spec.num_channels(),
                context: "measure-prepare channel count",
            });
        }
        for (s, ch) in self.channels.iter().enumerate() {
            let rebuilt = spec.channel(s)?;
            let gap = rebuilt.choi().sub(ch.choi()).max_abs_entry();
            if gap > 1e-9 {
                return Err(Error::Validation(format!(
                    "measure-prepare block deviates from member {s} by {gap:.3e}"
                )));
            }
        }
        self.measure_prepare = Some(spec);
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn channels(&self) -> &[QuantumChannel] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn dim_in(&self) -> usize {
        self.channels[0].dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.channels[0].dim_out()
    }

    pub fn measure_prepare(&self) -> Option<&MeasurePrepareSpec> {
        self.measure_prepare.as_ref()
    }

    /// Convex-hull member sum_s q(s) N_s.
    pub fn hull_member(&self, q: &SimplexWeights) -> Result<QuantumChannel> {
        QuantumChannel::mix(&self.channels, q)
    }

    /// Blocklength-l family {N_{s_1} (x) ... (x) N_{s_l}} with the first
    /// symbol slowest. Carries the measure-prepare block along when present.
    pub fn expanded(&self, l: usize) -> Result<Avqc> {
        if l == 0 {
            return Err(Error::BadParams("blocklength must be >= 1".into()));
        }
        if l == 1 {
            return Ok(self.clone());
        }
        let count = self.channels.len().checked_pow(l as u32);
        if count.map(|c| c > 64).unwrap_or(true) {
            return Err(Error::DimensionOverflow(format!(
                "{}^{l} channel strings exceed 64",
                self.channels.len()
            )));
        }
        let strings = crate::channels::index_strings(self.channels.len(), l);
        let mut members = Vec::with_capacity(strings.len());
        for s in &strings {
            let mut ch = self.channels[s[0]].clone();
            for &sym in &s[1..] {
                ch = ch.tensor(&self.channels[sym])?;
            }
            members.push(ch);
        }
        let mut out = Avqc::new(format!("{}^{l}", self.label), members)?;
        if let Some(mp) = &self.measure_prepare {
            if let Ok(big) = mp.tensor_power(l) {
                out = out.with_measure_prepare(big)?;
            }
        }
        Ok(out)
    }
}

/// The two-channel family on which everything is exercised: measure in the
/// standard qubit basis, prepare qutrit basis states with a shared output
/// (channel 0 sends e2 and channel 1 sends e1 to the same state e3).
pub fn overlap_example() -> Avqc {
    let povm = Povm::computational(2);
    let prepared = vec![
        vec![
            DensityMatrix::basis_projector(3, 0),
            DensityMatrix::basis_projector(3, 2),
        ],
        vec![
            DensityMatrix::basis_projector(3, 2),
            DensityMatrix::basis_projector(3, 1),
        ],
    ];
    let spec = MeasurePrepareSpec::new(povm, prepared).expect("static family is valid");
    let channels = (0..2)
        .map(|s| spec.channel(s).expect("static family is CPTP"))
        .collect();
    Avqc::new("example", channels)
        .and_then(|a| a.with_measure_prepare(spec))
        .expect("static family is consistent")
}

/// Two-parameter interpolation (1-lambda) D_eta + lambda N_s between the
/// partially depolarizing embedding D_eta and the members of the example
/// family. Symmetrizable exactly on the lambda = 1 row and eta = 1 column.
pub fn interpolated_family(lambda: f64, eta: f64) -> Result<Avqc> {
    if !(0.0..=1.0).contains(&lambda) || !(0.0..=1.0).contains(&eta) {
        return Err(Error::BadParams(format!(
            "(lambda, eta) = ({lambda}, {eta}) outside the unit square"
        )));
    }
    let base = overlap_example();
    let depol = QuantumChannel::depolarizing_embed(2, 3, eta)?;
    let weights = SimplexWeights::new(vec![1.0 - lambda, lambda])?;
    let mut members = Vec::with_capacity(base.num_channels());
    for ch in base.channels() {
        members.push(QuantumChannel::mix(
            &[depol.clone(), ch.clone()],
            &weights,
        )?);
    }
    let mut family = Avqc::new(format!("family(lambda={lambda},eta={eta})"), members)?;
    // Both degenerate edges stay measure-and-prepare: at lambda = 1 the
    // mixture collapses to the base family, and at eta = 1 the depolarizing
    // part is itself constant, so the prepared states just shift toward the
    // maximally mixed state.
    if (lambda - 1.0).abs() < f64::EPSILON {
        family = family.with_measure_prepare(
            base.measure_prepare().expect("example carries its realization").clone(),
        )?;
    } else if (eta - 1.0).abs() < f64::EPSILON {
        let base_mp = base.measure_prepare().expect("example carries its realization");
        let pi = DensityMatrix::maximally_mixed(3);
        let prepared = base_mp
            .prepared()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|st| pi.mix_with(st, 1.0 - lambda))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = MeasurePrepareSpec::new(base_mp.povm().clone(), prepared)?;
        family = family.with_measure_prepare(spec)?;
    }
    Ok(family)
}

// ---- wire format ----

#[derive(Serialize, Deserialize)]
struct AvqcWire {
    label: String,
    channels: Vec<QuantumChannel>,
    #[serde(rename = "measurePrepare", default, skip_serializing_if = "Option::is_none")]
    measure_prepare: Option<MeasurePrepareSpec>,
}

impl Serialize for Avqc {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        AvqcWire {
            label: self.label.clone(),
            channels: self.channels.clone(),
            measure_prepare: self.measure_prepare.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Avqc {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = AvqcWire::deserialize(deserializer)?;
        let mut avqc = Avqc::new(wire.label, wire.channels)
            .map_err(|e| serde::de::Error::custom(e.to_string()))?;
        if let Some(mp) = wire.measure_prepare {
            avqc = avqc
                .with_measure_prepare(mp)
                .map_err(|e| serde::de::Error::custom(e.to_string()))?;
        }
        Ok(avqc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::EbVerdict;

    #[test]
    fn example_members_share_an_output_and_are_eb() {
        let fam = overlap_example();
        assert_eq!(fam.num_channels(), 2);
        assert_eq!((fam.dim_in(), fam.dim_out()), (2, 3));
        let e2 = DensityMatrix::basis_projector(2, 1);
        let e1 = DensityMatrix::basis_projector(2, 0);
        let a = fam.channels()[0].apply(&e2).unwrap();
        let b = fam.channels()[1].apply(&e1).unwrap();
        let e3 = DensityMatrix::basis_projector(3, 2);
        assert!(a.matrix().sub(e3.matrix()).max_abs_entry() < 1e-12);
        assert!(b.matrix().sub(e3.matrix()).max_abs_entry() < 1e-12);
        for ch in fam.channels() {
            assert_eq!(ch.is_entanglement_breaking(), EbVerdict::Eb);
        }
    }

    #[test]
    fn family_edges_degenerate_as_expected() {
        let at_one = interpolated_family(1.0, 0.3).unwrap();
        let base = overlap_example();
        for (a, b) in at_one.channels().iter().zip(base.channels()) {
            assert!(a.choi().sub(b.choi()).max_abs_entry() < 1e-12);
        }
        let at_zero = interpolated_family(0.0, 0.0).unwrap();
        let embed = QuantumChannel::embedding(2, 3).unwrap();
        for ch in at_zero.channels() {
            assert!(ch.choi().sub(embed.choi()).max_abs_entry() < 1e-12);
        }
        // eta = 1 column carries an exact measure-prepare realization
        let col = interpolated_family(0.4, 1.0).unwrap();
        assert!(col.measure_prepare().is_some());
    }

    #[test]
    fn expansion_orders_first_symbol_slowest() {
        let fam = overlap_example();
        let sq = fam.expanded(2).unwrap();
        assert_eq!(sq.num_channels(), 4);
        // member 1 = N_0 (x) N_1
        let direct = fam.channels()[0].tensor(&fam.channels()[1]).unwrap();
        assert!(sq.channels()[1].choi().sub(direct.choi()).max_abs_entry() < 1e-12);
        assert!(sq.measure_prepare().is_some());
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let fam = overlap_example();
        let text = serde_json::to_string(&fam).unwrap();
        let back: Avqc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.label(), "example");
        assert!(back.measure_prepare().is_some());
        for (a, b) in back.channels().iter().zip(fam.channels()) {
            assert!(a.choi().sub(b.choi()).max_abs_entry() < 1e-12);
        }
    }
}

//! Quasiprobability decompositions of the single-qubit identity wire.
//!
//! Two decompositions are provided. [`harada_wire_cut`] uses no entanglement
//! and has `kappa = 3`. [`nme_wire_cut`] replaces its two measure-and-prepare
//! branches by teleportation with a resource state `K(|00> + k|11>)`,
//! reaching `kappa = 4(k^2+1)/(k+1)^2 - 1`.

use std::fmt;

use crate::channels::{
    measure_prepare_channel, measure_prepare_flip_channel, teleportation_channel, QuantumChannel,
};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::linalg::{hadamard, phase_s, ComplexMatrix};
use crate::states::{nme_state, NmeParameter};

/// Tolerance on `sum c_i = 1`.
pub const COEFFICIENT_SUM_TOLERANCE: f64 = 1e-12;

/// Maximum Choi deviation from the identity accepted as an exact cut.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;

/// One signed branch of a decomposition.
#[derive(Clone, Debug)]
pub struct QpdTerm {
    pub coefficient: f64,
    pub channel: QuantumChannel,
    /// True when sampling this branch consumes one copy of the resource state.
    pub consumes_resource: bool,
}

/// An ordered list of signed channel terms whose coefficients sum to one.
#[derive(Clone, Debug)]
pub struct QuasiProbDecomposition {
    terms: Vec<QpdTerm>,
}

impl QuasiProbDecomposition {
    pub fn new(terms: Vec<QpdTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidDecomposition("no terms".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if !t.coefficient.is_finite() || t.coefficient == 0.0 {
                return Err(Error::InvalidDecomposition(format!(
                    "term {i} has coefficient {}; coefficients must be finite and nonzero",
                    t.coefficient
                )));
            }
        }
        let (in_dim, out_dim) = (terms[0].channel.in_dim(), terms[0].channel.out_dim());
        if terms
            .iter()
            .any(|t| t.channel.in_dim() != in_dim || t.channel.out_dim() != out_dim)
        {
            return Err(Error::InvalidDecomposition(
                "all branch channels must have the same shape".into(),
            ));
        }
        let sum: f64 = terms.iter().map(|t| t.coefficient).sum();
        if (sum - 1.0).abs() > COEFFICIENT_SUM_TOLERANCE {
            return Err(Error::InvalidDecomposition(format!(
                "coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(QuasiProbDecomposition { terms })
    }

    /// The trivial decomposition `1 x channel`.
    pub fn single(channel: QuantumChannel) -> Self {
        QuasiProbDecomposition {
            terms: vec![QpdTerm {
                coefficient: 1.0,
                channel,
                consumes_resource: false,
            }],
        }
    }

    pub fn terms(&self) -> &[QpdTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coefficient).collect()
    }

    /// `sum |c_i|`.
    pub fn kappa(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Sampling distribution `|c_i| / kappa`.
    pub fn probabilities(&self) -> Vec<f64> {
        let kappa = self.kappa();
        self.terms
            .iter()
            .map(|t| t.coefficient.abs() / kappa)
            .collect()
    }

    pub fn signs(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coefficient.signum()).collect()
    }

    /// Largest entrywise deviation of the reconstructed Choi matrix from the
    /// identity channel's.
    pub fn identity_deviation(&self) -> f64 {
        let dim = self.terms[0].channel.in_dim();
        reconstruct_channel(self).max_abs_diff(QuantumChannel::identity(dim).choi())
    }
}

impl fmt::Display for QuasiProbDecomposition {
    /// One line per term: index, coefficient, channel, resource flag; then
    /// the kappa line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            writeln!(
                f,
                "{i}\t{}\t{}\t{}",
                sig12(t.coefficient),
                t.channel.name(),
                if t.consumes_resource { "resource" } else { "-" }
            )?;
        }
        write!(f, "kappa\t{}", sig12(self.kappa()))
    }
}

/// `U_1 = H` and `U_2 = SH`.
fn cut_bases() -> [(ComplexMatrix, &'static str); 2] {
    [(hadamard(), "H"), (&phase_s() * &hadamard(), "SH")]
}

/// The entanglement-free optimal wire cut:
/// `I = sum_{i=1,2} MP_{U_i} - Flip` with `kappa = 3`.
pub fn harada_wire_cut() -> QuasiProbDecomposition {
    let mut terms: Vec<QpdTerm> = cut_bases()
        .iter()
        .map(|(u, label)| QpdTerm {
            coefficient: 1.0,
            channel: measure_prepare_channel(u, format!("measure-prepare[{label}]"))
                .expect("basis change is unitary"),
            consumes_resource: false,
        })
        .collect();
    terms.push(QpdTerm {
        coefficient: -1.0,
        channel: measure_prepare_flip_channel(),
        consumes_resource: false,
    });
    QuasiProbDecomposition::new(terms).expect("harada coefficients sum to one")
}

/// Teleportation-branch weight `a = (k^2+1)/(k+1)^2`.
pub fn teleport_coefficient(k: NmeParameter) -> f64 {
    let k = k.k();
    (k * k + 1.0) / ((k + 1.0) * (k + 1.0))
}

/// Weight `b = (k-1)^2/(k+1)^2` of the subtracted flip branch.
pub fn flip_coefficient(k: NmeParameter) -> f64 {
    let k = k.k();
    let r = (k - 1.0) / (k + 1.0);
    r * r
}

/// Wire cut using teleportation with `Phi^k`:
/// `I = a sum_{i=1,2} U_i E_tel(U_i^dagger . U_i) U_i^dagger - b Flip`.
///
/// At `k = 1` the flip branch has zero weight and is omitted.
pub fn nme_wire_cut(k: NmeParameter) -> QuasiProbDecomposition {
    let a = teleport_coefficient(k);
    let b = flip_coefficient(k);
    let teleport = teleportation_channel(&nme_state(k).density()).expect("two-qubit resource");

    let mut terms: Vec<QpdTerm> = cut_bases()
        .iter()
        .map(|(u, label)| QpdTerm {
            coefficient: a,
            channel: teleport
                .conjugated_by(u, format!("teleport[{label}]"))
                .expect("basis change is unitary"),
            consumes_resource: true,
        })
        .collect();
    if b != 0.0 {
        terms.push(QpdTerm {
            coefficient: -b,
            channel: measure_prepare_flip_channel(),
            consumes_resource: false,
        });
    }
    QuasiProbDecomposition::new(terms).expect("nme coefficients sum to one")
}

/// Optimal overhead `2/f - 1` of a wire cut given a resource with overlap `f`.
pub fn optimal_overhead(f: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&f) {
        return Err(Error::OutOfRange {
            name: "f",
            value: f,
            min: 0.5,
            max: 1.0,
        });
    }
    Ok(2.0 / f - 1.0)
}

/// Optimal overhead `4(k^2+1)/(k+1)^2 - 1` with the pure resource `Phi^k`.
pub fn optimal_overhead_pure(k: NmeParameter) -> f64 {
    4.0 * teleport_coefficient(k) - 1.0
}

/// Expected resource pairs consumed per sampled shot, `2a`.
pub fn resource_consumption_rate(k: NmeParameter) -> Result<f64> {
    if k.k() <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k.k(),
            reason: "consumption rate needs an entangled resource (k > 0)",
        });
    }
    Ok(2.0 * teleport_coefficient(k))
}

/// `sum_i c_i Choi(F_i)`, the Choi matrix of the signed combination.
pub fn reconstruct_channel(qpd: &QuasiProbDecomposition) -> ComplexMatrix {
    let first = qpd.terms[0].channel.choi();
    qpd.terms.iter().fold(
        ComplexMatrix::zeros(first.rows(), first.cols()),
        |acc, t| &acc + &t.channel.choi().scale_real(t.coefficient),
    )
}

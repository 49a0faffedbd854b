//! Trace-preserving channels in Kraus form, Choi matrices, Bell-basis
//! overlaps and the teleportation channel for arbitrary resource states.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hadamard, kron, kron_all, partial_trace_matrix, projector, validate_density,
    ComplexMatrix, DensityOperator, Pauli,
};
use crate::states::bell_state;

/// Tolerance on `sum K^dagger K = I`.
pub const TRACE_PRESERVING_TOLERANCE: f64 = 1e-10;

/// A completely positive trace-preserving map stored as Kraus operators.
#[derive(Clone)]
pub struct QuantumChannel {
    name: String,
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
    choi: OnceLock<ComplexMatrix>,
}

impl QuantumChannel {
    pub fn from_kraus(name: impl Into<String>, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| {
            Error::DimensionMismatch("a channel needs at least one Kraus operator".into())
        })?;
        let (out_dim, in_dim) = (first.rows(), first.cols());
        if kraus
            .iter()
            .any(|k| k.rows() != out_dim || k.cols() != in_dim)
        {
            return Err(Error::DimensionMismatch(
                "Kraus operators must share one shape".into(),
            ));
        }
        let channel = QuantumChannel {
            name: name.into(),
            in_dim,
            out_dim,
            kraus,
            choi: OnceLock::new(),
        };
        let residual = channel.trace_preservation_residual();
        if residual > TRACE_PRESERVING_TOLERANCE {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(channel)
    }

    /// Recovers a Kraus form from a Choi matrix laid out as
    /// `sum_ij |i><j| (x) E(|i><j|)`.
    pub fn from_choi(
        name: impl Into<String>,
        choi: &ComplexMatrix,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        if choi.rows() != in_dim * out_dim || !choi.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of a {in_dim}->{out_dim} channel must be {0}x{0}",
                in_dim * out_dim
            )));
        }
        choi.ensure_hermitian(TRACE_PRESERVING_TOLERANCE)?;
        let mut kraus = Vec::new();
        for (lambda, v) in linalg::hermitian_eigen(choi) {
            if lambda < -TRACE_PRESERVING_TOLERANCE {
                return Err(Error::NotPositive {
                    min_eigenvalue: lambda,
                });
            }
            if lambda <= 1e-14 {
                continue;
            }
            // v = sum_i |i> (x) K|i> / sqrt(lambda)
            let s = lambda.sqrt();
            let mut k = ComplexMatrix::zeros(out_dim, in_dim);
            for i in 0..in_dim {
                for o in 0..out_dim {
                    k[(o, i)] = v[i * out_dim + o] * s;
                }
            }
            kraus.push(k);
        }
        if kraus.is_empty() {
            return Err(Error::DimensionMismatch("Choi matrix is zero".into()));
        }
        QuantumChannel::from_kraus(name, kraus)
    }

    pub fn identity(dim: usize) -> Self {
        QuantumChannel::from_kraus("identity", vec![ComplexMatrix::identity(dim)])
            .expect("identity is trace preserving")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn trace_preservation_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.in_dim))
    }

    /// Linear action on an arbitrary operator, not only density operators.
    pub fn apply_operator(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.rows() != self.in_dim || m.cols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel expects {0}x{0} input, got {1}x{2}",
                self.in_dim,
                m.rows(),
                m.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out = &out + &k.conjugate(m);
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.apply_operator(rho.matrix())
            .map(DensityOperator::from_trusted)
    }

    /// `sum_ij |i><j| (x) E(|i><j|)`, computed once per instance.
    pub fn choi(&self) -> &ComplexMatrix {
        self.choi.get_or_init(|| {
            choi_from_action(self.in_dim, self.out_dim, |m| {
                self.apply_operator(m)
                    .expect("basis operator has channel shape")
            })
        })
    }

    /// `u . E . u^dagger`: apply `u^dagger` first, then this channel, then `u`.
    pub fn conjugated_by(&self, u: &ComplexMatrix, name: impl Into<String>) -> Result<Self> {
        u.ensure_unitary(TRACE_PRESERVING_TOLERANCE)?;
        let u_dag = u.adjoint();
        let kraus = self.kraus.iter().map(|k| &(u * k) * &u_dag).collect();
        QuantumChannel::from_kraus(name, kraus)
    }

    /// `other` after `self`.
    pub fn then(&self, other: &QuantumChannel, name: impl Into<String>) -> Result<Self> {
        if other.in_dim != self.out_dim {
            return Err(Error::DimensionMismatch(
                "channel composition dimension mismatch".into(),
            ));
        }
        let kraus = other
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        QuantumChannel::from_kraus(name, kraus)
    }
}

impl fmt::Debug for QuantumChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumChannel")
            .field("name", &self.name)
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("kraus", &self.kraus.len())
            .finish()
    }
}

/// Assembles a Choi matrix from any linear map given on basis operators.
pub fn choi_from_action(
    in_dim: usize,
    out_dim: usize,
    mut action: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
) -> ComplexMatrix {
    let mut choi = ComplexMatrix::zeros(in_dim * out_dim, in_dim * out_dim);
    for i in 0..in_dim {
        for j in 0..in_dim {
            let block = action(&ComplexMatrix::basis_op(in_dim, i, j));
            for a in 0..out_dim {
                for b in 0..out_dim {
                    choi[(i * out_dim + a, j * out_dim + b)] = block[(a, b)];
                }
            }
        }
    }
    choi
}

/// Single-Kraus channel `rho -> u rho u^dagger`.
pub fn unitary_channel(u: &ComplexMatrix) -> Result<QuantumChannel> {
    u.ensure_unitary(TRACE_PRESERVING_TOLERANCE)?;
    QuantumChannel::from_kraus("unitary", vec![u.clone()])
}

/// `<Phi^sigma| rho |Phi^sigma>` for the four Bell states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellOverlaps {
    values: [f64; 4],
}

impl BellOverlaps {
    pub fn get(&self, sigma: Pauli) -> f64 {
        self.values[sigma.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pauli, f64)> + '_ {
        Pauli::ALL.iter().map(move |&p| (p, self.get(p)))
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn bell_overlaps(rho: &DensityOperator) -> Result<BellOverlaps> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "Bell overlaps need a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let mut values = [0.0; 4];
    for sigma in Pauli::ALL {
        values[sigma.index()] = rho.expectation_in(&bell_state(sigma));
    }
    Ok(BellOverlaps { values })
}

/// Teleportation with resource `rho`:
/// `phi -> sum_sigma <Phi^sigma|rho|Phi^sigma> sigma phi sigma`.
///
/// Paulis with zero overlap are left out of the Kraus set.
pub fn teleportation_channel(resource: &DensityOperator) -> Result<QuantumChannel> {
    let overlaps = bell_overlaps(resource)?;
    let kraus = overlaps
        .iter()
        .filter_map(|(sigma, w)| {
            let w = w.max(0.0);
            (w > 0.0).then(|| sigma.matrix().scale_real(w.sqrt()))
        })
        .collect();
    QuantumChannel::from_kraus("teleport", kraus)
}

/// Unnormalized output on the receiver qubit for one measurement branch of
/// the teleportation circuit.
#[derive(Clone, Debug)]
pub struct TeleportationBranch {
    /// Outcomes of the sender's measurements on qubits A and B.
    pub outcome: (usize, usize),
    /// Receiver operator after the corrections; its trace is the branch
    /// probability when the input is a state.
    pub output: ComplexMatrix,
}

impl TeleportationBranch {
    pub fn probability(&self) -> f64 {
        self.output.trace().re
    }
}

/// Runs the three-qubit teleportation circuit on `input (x) resource`:
/// CNOT from A to B, H on A, measure A and B, then X^b and Z^a on C.
/// Each of the four branches is kept separately. `input` may be any 2x2
/// operator; the map is linear in it.
pub fn teleportation_branches(
    input: &ComplexMatrix,
    resource: &DensityOperator,
) -> Result<[TeleportationBranch; 4]> {
    if input.rows() != 2 || input.cols() != 2 || resource.dim() != 4 {
        return Err(Error::DimensionMismatch(
            "teleportation takes a one-qubit input and a two-qubit resource".into(),
        ));
    }
    let id = ComplexMatrix::identity(2);
    let x = Pauli::X.matrix();
    let z = Pauli::Z.matrix();

    let cnot_ab = &kron_all([&projector(0), &id, &id]) + &kron_all([&projector(1), &x, &id]);
    let h_a = kron_all([&hadamard(), &id, &id]);
    let sender = &h_a * &cnot_ab;

    let joint = kron(input, resource.matrix());
    let evolved = sender.conjugate(&joint);

    let branch = |a: usize, b: usize| -> Result<TeleportationBranch> {
        let project = kron_all([&projector(a), &projector(b), &id]);
        let mut correction = ComplexMatrix::identity(2);
        if b == 1 {
            correction = &x * &correction;
        }
        if a == 1 {
            correction = &z * &correction;
        }
        let fix = kron_all([&id, &id, &correction]);
        let post = (&fix * &project).conjugate(&evolved);
        let output = partial_trace_matrix(&post, &[2, 2, 2], &[0, 1])?;
        Ok(TeleportationBranch {
            outcome: (a, b),
            output,
        })
    };
    Ok([branch(0, 0)?, branch(0, 1)?, branch(1, 0)?, branch(1, 1)?])
}

/// The teleportation channel obtained by simulating the circuit branch by
/// branch and summing the receiver's outputs.
pub fn teleportation_circuit_channel(resource: &DensityOperator) -> Result<QuantumChannel> {
    let mut failure = None;
    let choi = choi_from_action(2, 2, |basis| {
        match teleportation_branches(basis, resource) {
            Ok(branches) => branches
                .iter()
                .fold(ComplexMatrix::zeros(2, 2), |acc, b| &acc + &b.output),
            Err(e) => {
                failure.get_or_insert(e);
                ComplexMatrix::zeros(2, 2)
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    QuantumChannel::from_choi("teleport-circuit", &choi, 2, 2)
}

/// Computational-basis measurement followed by preparing the flipped outcome.
pub fn measure_prepare_flip_channel() -> QuantumChannel {
    QuantumChannel::from_kraus(
        "measure-prepare-flip",
        vec![
            ComplexMatrix::basis_op(2, 1, 0),
            ComplexMatrix::basis_op(2, 0, 1),
        ],
    )
    .expect("flip channel is trace preserving")
}

/// Measurement in the basis `{u|j>}` followed by preparing the measured
/// basis state: `rho -> sum_j tr[u|j><j|u^dagger rho] u|j><j|u^dagger`.
pub fn measure_prepare_channel(
    u: &ComplexMatrix,
    name: impl Into<String>,
) -> Result<QuantumChannel> {
    u.ensure_unitary(TRACE_PRESERVING_TOLERANCE)?;
    let kraus = (0..2).map(|j| u.conjugate(&projector(j))).collect();
    QuantumChannel::from_kraus(name, kraus)
}

/// Builds a two-qubit density operator from a complex 4x4 Gram matrix.
pub fn density_from_gram(a: &ComplexMatrix) -> Result<DensityOperator> {
    let m = a * &a.adjoint();
    let t = m.trace().re;
    validate_density(m.scale_real(1.0 / t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, phase_s, PureState, ONE, ZERO};
    use crate::states::{nme_state, NmeParameter};

    fn nme_density(k: f64) -> DensityOperator {
        nme_state(NmeParameter::new(k).unwrap()).density()
    }

    fn plus() -> DensityOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![c(h, 0.0), c(h, 0.0)])
            .unwrap()
            .density()
    }

    #[test]
    fn unitary_channel_examples() {
        let id = unitary_channel(&ComplexMatrix::identity(2)).unwrap();
        let rho = plus();
        assert_eq!(id.apply(&rho).unwrap(), rho);

        let h = unitary_channel(&hadamard()).unwrap();
        let out = h.apply(&PureState::basis(2, 0).density()).unwrap();
        assert!(out.matrix().max_abs_diff(plus().matrix()) < 1e-15);

        let sh = &phase_s() * &hadamard();
        let y = sh.conjugate(&Pauli::Z.matrix());
        assert!(y.max_abs_diff(&Pauli::Y.matrix()) < 1e-15);
        let x = hadamard().conjugate(&Pauli::Z.matrix());
        assert!(x.max_abs_diff(&Pauli::X.matrix()) < 1e-15);

        let not_unitary = ComplexMatrix::from_real([[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(
            unitary_channel(&not_unitary),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn dephasing_erases_coherences() {
        let dephase =
            QuantumChannel::from_kraus("dephase", vec![projector(0), projector(1)]).unwrap();
        let out = dephase.apply(&plus()).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5))
                < 1e-15
        );
    }

    #[test]
    fn from_kraus_rejects_bad_sets() {
        assert!(QuantumChannel::from_kraus("empty", vec![]).is_err());
        assert!(matches!(
            QuantumChannel::from_kraus("half", vec![projector(0)]),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(QuantumChannel::from_kraus(
            "ragged",
            vec![ComplexMatrix::identity(2), ComplexMatrix::identity(4)]
        )
        .is_err());
    }

    #[test]
    fn choi_examples() {
        let id = QuantumChannel::identity(2);
        let mut expected = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expected[(i * 2 + i, j * 2 + j)] = ONE;
            }
        }
        assert_eq!(id.choi(), &expected);
        assert!((id.choi().trace().re - 2.0).abs() < 1e-15);

        let depolarize = QuantumChannel::from_kraus(
            "depolarize",
            Pauli::ALL
                .iter()
                .map(|p| p.matrix().scale_real(0.5))
                .collect(),
        )
        .unwrap();
        assert!(
            depolarize
                .choi()
                .max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.5))
                < 1e-15
        );
    }

    #[test]
    fn from_choi_round_trip() {
        let ch = teleportation_channel(&nme_density(0.3)).unwrap();
        let back = QuantumChannel::from_choi("back", ch.choi(), 2, 2).unwrap();
        assert!(back.choi().max_abs_diff(ch.choi()) < 1e-12);
    }

    #[test]
    fn bell_overlap_examples() {
        // Explicit inner products of K(|00> + k|11>) with the Bell states.
        let k = 0.5f64;
        let big_k = 1.0 / (1.0 + k * k).sqrt();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let overlap_i = (h * big_k + h * k * big_k).powi(2);
        let overlap_z = (h * big_k - h * k * big_k).powi(2);
        let o = bell_overlaps(&nme_density(k)).unwrap();
        assert!((o.get(Pauli::I) - overlap_i).abs() < 1e-15);
        assert!((o.get(Pauli::I) - 0.9).abs() < 1e-12);
        assert!((o.get(Pauli::Z) - overlap_z).abs() < 1e-15);
        assert!((o.get(Pauli::Z) - 0.1).abs() < 1e-12);
        assert_eq!(o.get(Pauli::X), 0.0);
        assert_eq!(o.get(Pauli::Y), 0.0);

        let phi = bell_overlaps(&nme_density(1.0)).unwrap();
        assert!((phi.get(Pauli::I) - 1.0).abs() < 1e-15);
        let mixed = bell_overlaps(&DensityOperator::maximally_mixed(4)).unwrap();
        for (_, v) in mixed.iter() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        assert!(bell_overlaps(&DensityOperator::maximally_mixed(2)).is_err());
    }

    #[test]
    fn teleportation_with_bell_resource_is_identity() {
        let ch = teleportation_channel(&nme_density(1.0)).unwrap();
        assert!(ch.choi().max_abs_diff(QuantumChannel::identity(2).choi()) <= 1e-12);
    }

    #[test]
    fn teleportation_with_product_resource_dephases() {
        let ch = teleportation_channel(&nme_density(0.0)).unwrap();
        // Overlaps at k = 0 are 1/2 on I and Z.
        let z = Pauli::Z.matrix();
        let oracle = choi_from_action(2, 2, |m| {
            &m.scale_real(0.5) + &z.conjugate(m).scale_real(0.5)
        });
        assert!(ch.choi().max_abs_diff(&oracle) < 1e-15);
        assert_eq!(ch.kraus().len(), 2);
    }

    #[test]
    fn teleportation_with_nme_only_has_z_errors() {
        for k in [0.0, 0.2, 0.5, 0.9, 1.0, 2.5] {
            let ch = teleportation_channel(&nme_density(k)).unwrap();
            for kr in ch.kraus() {
                // diagonal Kraus operators are combinations of I and Z
                assert_eq!(kr[(0, 1)], ZERO);
                assert_eq!(kr[(1, 0)], ZERO);
            }
        }
    }

    #[test]
    fn circuit_teleports_plus_exactly() {
        let branches = teleportation_branches(plus().matrix(), &nme_density(1.0)).unwrap();
        let total = branches
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, b| &acc + &b.output);
        assert!(total.max_abs_diff(plus().matrix()) <= 1e-12);
    }

    #[test]
    fn circuit_branches_are_uniform_on_mixed_input() {
        let input = ComplexMatrix::identity(2).scale_real(0.5);
        let branches = teleportation_branches(&input, &nme_density(1.0)).unwrap();
        for b in &branches {
            assert!((b.probability() - 0.25).abs() < 1e-15, "{:?}", b.outcome);
        }
    }

    #[test]
    fn circuit_matches_analytic_form() {
        let resource = nme_density(0.5);
        let circuit = teleportation_circuit_channel(&resource).unwrap();
        let analytic = teleportation_channel(&resource).unwrap();
        assert!(circuit.choi().max_abs_diff(analytic.choi()) <= 1e-10);

        let gram = ComplexMatrix::new(
            4,
            4,
            (0..16)
                .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()))
                .collect(),
        )
        .unwrap();
        let resource = density_from_gram(&gram).unwrap();
        let circuit = teleportation_circuit_channel(&resource).unwrap();
        let analytic = teleportation_channel(&resource).unwrap();
        assert!(circuit.choi().max_abs_diff(analytic.choi()) <= 1e-10);
    }

    #[test]
    fn flip_channel_examples() {
        let flip = measure_prepare_flip_channel();
        let zero = PureState::basis(2, 0).density();
        let one = PureState::basis(2, 1).density();
        assert_eq!(flip.apply(&zero).unwrap(), one);
        assert_eq!(flip.apply(&one).unwrap(), zero);
        // 1/2 X|0><0|X + 1/2 X|1><1|X
        let x = Pauli::X.matrix();
        let oracle = &x.conjugate(&projector(0)).scale_real(0.5)
            + &x.conjugate(&projector(1)).scale_real(0.5);
        let out = flip.apply(&plus()).unwrap();
        assert!(out.matrix().max_abs_diff(&oracle) < 1e-15);
        assert!(
            out.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5))
                < 1e-15
        );
    }

    #[test]
    fn flip_equals_half_x_plus_half_y() {
        let xy = QuantumChannel::from_kraus(
            "xy",
            vec![
                Pauli::X.matrix().scale_real(0.5f64.sqrt()),
                Pauli::Y.matrix().scale_real(0.5f64.sqrt()),
            ],
        )
        .unwrap();
        assert!(
            xy.choi()
                .max_abs_diff(measure_prepare_flip_channel().choi())
                <= 1e-12
        );
    }

    #[test]
    fn conjugation_and_composition() {
        let tel = teleportation_channel(&nme_density(0.4)).unwrap();
        let conj = tel.conjugated_by(&hadamard(), "h").unwrap();
        let u = unitary_channel(&hadamard()).unwrap();
        let composed = u.then(&tel, "a").unwrap().then(&u, "b").unwrap();
        assert!(conj.choi().max_abs_diff(composed.choi()) < 1e-14);
    }

    #[test]
    fn choi_cache_is_stable_across_threads() {
        let ch = teleportation_channel(&nme_density(0.7)).unwrap();
        let values: Vec<ComplexMatrix> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4).map(|_| s.spawn(|| ch.choi().clone())).collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for v in &values {
            assert_eq!(v, ch.choi());
        }
    }
}

//! Bell states, the non-maximally entangled family `K(|00> + k|11>)`,
//! Schmidt decompositions and the overlap monotone `f` for pure states.

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, Pauli, PureState, ZERO};

/// Ratio `k = p1 / p0` of the Schmidt coefficients of a two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct NmeParameter(f64);

impl NmeParameter {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "must be finite",
            });
        }
        if k < 0.0 {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "must be nonnegative",
            });
        }
        Ok(NmeParameter(k))
    }

    pub const MAXIMAL: NmeParameter = NmeParameter(1.0);
    pub const SEPARABLE: NmeParameter = NmeParameter(0.0);

    pub fn k(self) -> f64 {
        self.0
    }

    /// `K = 1 / sqrt(1 + k^2)`.
    pub fn normalizer(self) -> f64 {
        1.0 / (1.0 + self.0 * self.0).sqrt()
    }
}

/// `K(|00> + k|11>)`.
pub fn nme_state(k: NmeParameter) -> PureState {
    let norm = k.normalizer();
    PureState::new(vec![c(norm, 0.0), ZERO, ZERO, c(k.k() * norm, 0.0)])
        .expect("nme state is normalized")
}

/// `(sigma (x) I)|Phi>` with `|Phi> = (|00> + |11>)/sqrt(2)`.
pub fn bell_state(sigma: Pauli) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = sigma.matrix();
    // (sigma (x) I)|Phi> has amplitude sigma[a][b]/sqrt(2) on |a b>.
    let amplitudes = (0..4).map(|idx| s[(idx >> 1, idx & 1)] * h).collect();
    PureState::new(amplitudes).expect("bell state is normalized")
}

/// `p0 |xi0>|zeta0> + p1 |xi1>|zeta1>` with `p0 >= p1 >= 0`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    pub coefficients: [f64; 2],
    pub left_basis: [PureState; 2],
    pub right_basis: [PureState; 2],
}

impl SchmidtForm {
    pub fn k(&self) -> f64 {
        if self.coefficients[0] == 0.0 {
            0.0
        } else {
            self.coefficients[1] / self.coefficients[0]
        }
    }

    pub fn nme_parameter(&self) -> NmeParameter {
        NmeParameter(self.k())
    }

    pub fn reconstruct(&self) -> PureState {
        let mut amps = vec![ZERO; 4];
        for t in 0..2 {
            let term = self.left_basis[t].tensor(&self.right_basis[t]);
            for (a, b) in amps.iter_mut().zip(term.amplitudes()) {
                *a += b * self.coefficients[t];
            }
        }
        PureState::normalized(amps).expect("schmidt reconstruction")
    }
}

/// Schmidt decomposition of a two-qubit pure state via the singular values
/// of its 2x2 amplitude matrix `M[a][b] = <ab|psi>`.
pub fn schmidt_decompose(psi: &PureState) -> Result<SchmidtForm> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "schmidt decomposition needs a two-qubit state, got dimension {}",
            psi.dim()
        )));
    }
    let m = ComplexMatrix::new(2, 2, psi.amplitudes().to_vec())?.to_nalgebra();
    let svd = SVD::new(m, true, true);
    let u = svd.u.expect("left singular vectors");
    let v_t = svd.v_t.expect("right singular vectors");
    let mut order = [0usize, 1];
    if svd.singular_values[1] > svd.singular_values[0] {
        order.swap(0, 1);
    }

    // M = U S V^dagger so psi = sum_t s_t (U e_t) (x) conj(V e_t), and the
    // right factor is row t of V^dagger.
    let left = |t: usize| PureState::normalized(u.column(t).iter().copied().collect());
    let right = |t: usize| PureState::normalized(v_t.row(t).iter().copied().collect());
    let mut p0 = svd.singular_values[order[0]];
    let mut p1 = svd.singular_values[order[1]];
    let norm = (p0 * p0 + p1 * p1).sqrt();
    p0 /= norm;
    p1 /= norm;
    Ok(SchmidtForm {
        coefficients: [p0, p1],
        left_basis: [left(order[0])?, left(order[1])?],
        right_basis: [right(order[0])?, right(order[1])?],
    })
}

/// m-distillation norm of a descending vector of Schmidt coefficients:
/// `|z_{1:j}|_1 + sqrt(j) |z_{j+1:d}|_2` at the `j` in `1..=m` minimizing
/// `|z_{m-j+1:d}|_2^2 / j`. Ties go to the smaller `j`.
pub fn m_distillation_norm(coeffs: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if let Some(&bad) = coeffs.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidParameter {
            name: "schmidt coefficient",
            value: bad,
            reason: "must be finite and nonnegative",
        });
    }
    if let Some(w) = coeffs.windows(2).find(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter {
            name: "schmidt coefficient",
            value: w[1],
            reason: "coefficients must be sorted in descending order",
        });
    }
    let squared: f64 = coeffs.iter().map(|x| x * x).sum();
    if squared > 1.0 + 1e-10 {
        return Err(Error::InvalidParameter {
            name: "sum of squared coefficients",
            value: squared,
            reason: "must not exceed 1",
        });
    }

    // 1-based slice z_{a:b}; empty when a > b or a exceeds the length.
    let slice = |a: usize, b: usize| -> &[f64] {
        let b = b.min(coeffs.len());
        if a > b || a == 0 {
            &[]
        } else {
            &coeffs[a - 1..b]
        }
    };
    let d = coeffs.len();
    let sq = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>();

    let mut best_j = 1;
    let mut best = f64::INFINITY;
    for j in 1..=m {
        let start = (m + 1).saturating_sub(j);
        let score = sq(slice(start, d)) / j as f64;
        if score < best {
            best = score;
            best_j = j;
        }
    }
    let head: f64 = slice(1, best_j).iter().sum();
    let tail = sq(slice(best_j + 1, d)).sqrt();
    Ok(head + (best_j as f64).sqrt() * tail)
}

/// Maximal LOCC overlap with `|Phi>` for a pure two-qubit state, computed as
/// half the squared 2-distillation norm of its Schmidt coefficients.
pub fn overlap_f_pure(psi: &PureState) -> Result<f64> {
    let schmidt = schmidt_decompose(psi)?;
    let norm = m_distillation_norm(&schmidt.coefficients, 2)?;
    Ok(0.5 * norm * norm)
}

/// Inverts `f(k) = (k+1)^2 / (2(k^2+1))` on `k in [0, 1]`.
pub fn k_from_f(f: f64) -> Result<NmeParameter> {
    if !(0.5..=1.0).contains(&f) {
        return Err(Error::OutOfRange {
            name: "f",
            value: f,
            min: 0.5,
            max: 1.0,
        });
    }
    // (1-2f) k^2 + 2k + (1-2f) = 0; the root in [0,1] is -a / (1 + sqrt(1 - a^2)).
    let a = 1.0 - 2.0 * f;
    let disc = (1.0 - a * a).max(0.0);
    let k = -a / (1.0 + disc.sqrt());
    NmeParameter::new(k.clamp(0.0, 1.0))
}

/// Local basis change taking `|Phi^k>` to `psi`, as `(U_A, U_B)` with columns
/// given by the Schmidt bases.
pub fn schmidt_unitaries(form: &SchmidtForm) -> (ComplexMatrix, ComplexMatrix) {
    let cols = |basis: &[PureState; 2]| {
        let mut m = ComplexMatrix::zeros(2, 2);
        for (col, state) in basis.iter().enumerate() {
            for (row, &a) in state.amplitudes().iter().enumerate() {
                m[(row, col)] = a;
            }
        }
        m
    };
    (cols(&form.left_basis), cols(&form.right_basis))
}

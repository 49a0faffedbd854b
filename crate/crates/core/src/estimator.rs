//! Finite-shot estimation of expectation values through a wire cut.
//!
//! Branch outcomes are drawn from their exact outcome distributions. Two
//! recombination schemes are supported: stratified (a fixed shot budget split
//! across branches in proportion to `|c_i|`) and multinomial (each shot draws
//! its branch index with probability `|c_i| / kappa`).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator, PureState};
use crate::qpd::QuasiProbDecomposition;

const OBSERVABLE_TOLERANCE: f64 = 1e-10;
const PROBABILITY_TOLERANCE: f64 = 1e-10;

/// Deterministic random stream keyed by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the seed expanded into the key and `stream_id`
/// selecting the ChaCha stream, so distinct stream ids never overlap.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomSource {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh source whose key is derived from this one's seed and `label`.
    pub fn derive(seed: u64, label: u64, stream_id: u64) -> Self {
        RandomSource::new(splitmix64(seed ^ splitmix64(label)), stream_id)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimationMode {
    /// Shots split across branches in proportion to `|c_i|`.
    #[default]
    Stratified,
    /// Branch index drawn independently for every shot.
    Multinomial,
}

impl fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimationMode::Stratified => "stratified",
            EstimationMode::Multinomial => "multinomial",
        })
    }
}

impl FromStr for EstimationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stratified" => Ok(EstimationMode::Stratified),
            "multinomial" => Ok(EstimationMode::Multinomial),
            other => Err(format!(
                "unknown mode '{other}', expected 'stratified' or 'multinomial'"
            )),
        }
    }
}

/// `W|0><0|W^dagger` for a single-qubit unitary `W`.
pub fn prepared_state(prep: &ComplexMatrix) -> Result<DensityOperator> {
    if prep.rows() != 2 || prep.cols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "state preparation must be 2x2, got {}x{}",
            prep.rows(),
            prep.cols()
        )));
    }
    prep.ensure_unitary(OBSERVABLE_TOLERANCE)?;
    Ok(PureState::basis(2, 0).evolve(prep)?.density())
}

/// `<0|W^dagger O W|0>`.
pub fn exact_expectation(prep: &ComplexMatrix, observable: &ComplexMatrix) -> Result<f64> {
    observable.ensure_hermitian(OBSERVABLE_TOLERANCE)?;
    let rho = prepared_state(prep)?;
    if observable.rows() != rho.dim() || !observable.is_square() {
        return Err(Error::DimensionMismatch("observable must be 2x2".into()));
    }
    Ok(rho.expectation(observable))
}

fn ensure_pm_one_observable(observable: &ComplexMatrix) -> Result<()> {
    if !observable.is_square() {
        return Err(Error::InvalidObservable {
            residual: f64::INFINITY,
        });
    }
    let hermitian = observable.hermitian_residual();
    if hermitian > OBSERVABLE_TOLERANCE {
        return Err(Error::InvalidObservable {
            residual: hermitian,
        });
    }
    // Hermitian with O^2 = I exactly when every eigenvalue is +1 or -1.
    let residual =
        (observable * observable).max_abs_diff(&ComplexMatrix::identity(observable.rows()));
    if residual > OBSERVABLE_TOLERANCE {
        return Err(Error::InvalidObservable { residual });
    }
    Ok(())
}

/// Probability of the +1 outcome of `observable` on `ch(input)`.
fn plus_probability(
    ch: &QuantumChannel,
    input: &DensityOperator,
    observable: &ComplexMatrix,
) -> Result<f64> {
    let out = ch.apply(input)?;
    if observable.rows() != out.dim() {
        return Err(Error::DimensionMismatch(
            "observable does not match the channel output".into(),
        ));
    }
    let p = 0.5 * (1.0 + out.expectation(observable));
    if !(-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn binomial_mean(p_plus: f64, shots: u64, rng: &mut RandomSource) -> f64 {
    let plus = Binomial::new(shots, p_plus)
        .expect("probability is clamped to [0, 1]")
        .sample(rng);
    (2.0 * plus as f64 - shots as f64) / shots as f64
}

/// Estimates `tr[O ch(input)]` from `shots` samples of a +/-1 observable.
pub fn sample_branch_expectation(
    ch: &QuantumChannel,
    input: &DensityOperator,
    observable: &ComplexMatrix,
    shots: u64,
    rng: &mut RandomSource,
) -> Result<f64> {
    ensure_pm_one_observable(observable)?;
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p = plus_probability(ch, input, observable)?;
    Ok(binomial_mean(p, shots, rng))
}

/// Shots assigned to each term of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotAllocation {
    pub total: u64,
    pub per_term: Vec<u64>,
}

/// Largest-remainder split of `total` shots by the sampling probabilities.
/// Ties go to the lower term index. When `total` is at least the number of
/// terms with positive probability, every such term receives a shot.
pub fn allocate_shots(qpd: &QuasiProbDecomposition, total: u64) -> ShotAllocation {
    let probabilities = qpd.probabilities();
    let exact: Vec<f64> = probabilities.iter().map(|p| p * total as f64).collect();
    let mut per_term: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = per_term.iter().sum();
    let mut remaining = total.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..per_term.len()).collect();
    // Stable sort keeps lower indices first among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - per_term[a] as f64;
        let rb = exact[b] - per_term[b] as f64;
        rb.total_cmp(&ra)
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        per_term[i] += 1;
        remaining -= 1;
    }

    let positive = probabilities.iter().filter(|&&p| p > 0.0).count() as u64;
    if total >= positive {
        for i in 0..per_term.len() {
            if probabilities[i] > 0.0 && per_term[i] == 0 {
                let donor = (0..per_term.len())
                    .max_by(|&a, &b| per_term[a].cmp(&per_term[b]).then(b.cmp(&a)))
                    .expect("nonempty");
                per_term[donor] -= 1;
                per_term[i] += 1;
            }
        }
    }
    ShotAllocation { total, per_term }
}

/// Draws term indices with probability `|c_i| / kappa`.
#[derive(Clone, Debug)]
pub struct TermSampler {
    cumulative: Vec<f64>,
}

impl TermSampler {
    pub fn new(qpd: &QuasiProbDecomposition) -> Self {
        let mut acc = 0.0;
        let cumulative = qpd
            .probabilities()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        TermSampler { cumulative }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

/// A decomposition bound to one input state and observable, with the exact
/// +1 probability of every branch precomputed.
#[derive(Clone, Debug)]
pub struct CutEstimator<'a> {
    qpd: &'a QuasiProbDecomposition,
    plus: Vec<f64>,
    sampler: TermSampler,
}

impl<'a> CutEstimator<'a> {
    pub fn new(
        qpd: &'a QuasiProbDecomposition,
        prep: &ComplexMatrix,
        observable: &ComplexMatrix,
    ) -> Result<Self> {
        ensure_pm_one_observable(observable)?;
        let input = prepared_state(prep)?;
        let plus = qpd
            .terms()
            .iter()
            .map(|t| plus_probability(&t.channel, &input, observable))
            .collect::<Result<_>>()?;
        Ok(CutEstimator {
            qpd,
            plus,
            sampler: TermSampler::new(qpd),
        })
    }

    /// `sum_i c_i tr[O F_i(rho)]`, the quantity every estimate targets.
    pub fn exact_value(&self) -> f64 {
        self.qpd
            .terms()
            .iter()
            .zip(&self.plus)
            .map(|(t, p)| t.coefficient * (2.0 * p - 1.0))
            .sum()
    }

    pub fn estimate(
        &self,
        total_shots: u64,
        rng: &mut RandomSource,
        mode: EstimationMode,
    ) -> Result<f64> {
        if total_shots == 0 {
            return Err(Error::ZeroShots);
        }
        match mode {
            EstimationMode::Stratified => {
                let alloc = allocate_shots(self.qpd, total_shots);
                let mut sum = 0.0;
                for ((term, &p), &n) in self.qpd.terms().iter().zip(&self.plus).zip(&alloc.per_term)
                {
                    if n > 0 {
                        sum += term.coefficient * binomial_mean(p, n, rng);
                    }
                }
                Ok(sum)
            }
            EstimationMode::Multinomial => {
                let kappa = self.qpd.kappa();
                let signs = self.qpd.signs();
                let mut acc = 0.0;
                for _ in 0..total_shots {
                    let i = self.sampler.draw(rng);
                    let outcome = if rng.random_bool(self.plus[i]) {
                        1.0
                    } else {
                        -1.0
                    };
                    acc += signs[i] * kappa * outcome;
                }
                Ok(acc / total_shots as f64)
            }
        }
    }
}

/// Estimates `<0|W^dagger O W|0>` through the cut described by `qpd`.
pub fn estimate_cut_expectation(
    qpd: &QuasiProbDecomposition,
    prep: &ComplexMatrix,
    observable: &ComplexMatrix,
    total_shots: u64,
    rng: &mut RandomSource,
    mode: EstimationMode,
) -> Result<f64> {
    if total_shots == 0 {
        return Err(Error::ZeroShots);
    }
    CutEstimator::new(qpd, prep, observable)?.estimate(total_shots, rng, mode)
}

//! Shot-budget sweep: Haar-random inputs `W|0>` are sent through the NME wire
//! cut at several entanglement levels, and the mean absolute error of the
//! sampled `<Z>` is recorded per `(f, shots)` cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{exact_expectation, CutEstimator, EstimationMode, RandomSource};
use crate::linalg::{c, ComplexMatrix, Pauli, C64};
use crate::qpd::{nme_wire_cut, QuasiProbDecomposition};
use crate::states::{k_from_f, NmeParameter};

const HAAR_LABEL: u64 = 0x4841_4152;
const CELL_LABEL: u64 = 1 << 63;

fn default_f_values() -> Vec<f64> {
    vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
}

fn default_shot_grid() -> Vec<u64> {
    (1..=20).map(|i| i * 250).collect()
}

fn default_n_states() -> usize {
    1000
}

fn default_paired() -> bool {
    true
}

/// Parameters of a sweep. The observable is always Pauli Z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_f_values")]
    pub f_values: Vec<f64>,
    #[serde(default = "default_shot_grid")]
    pub shot_grid: Vec<u64>,
    #[serde(default = "default_n_states")]
    pub n_states: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: EstimationMode,
    /// Reuse the same input states for every `f` value.
    #[serde(default = "default_paired")]
    pub paired: bool,
    /// Replace the random preparation by the identity (test hook).
    #[serde(default)]
    pub force_identity_prep: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            f_values: default_f_values(),
            shot_grid: default_shot_grid(),
            n_states: default_n_states(),
            seed: 0,
            mode: EstimationMode::Stratified,
            paired: true,
            force_identity_prep: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.f_values.is_empty() {
            return Err(Error::InvalidConfig("f_values is empty".into()));
        }
        if let Some(f) = self.f_values.iter().find(|f| !(0.5..=1.0).contains(*f)) {
            return Err(Error::InvalidConfig(format!(
                "f value {f} is outside [0.5, 1]"
            )));
        }
        if self.shot_grid.is_empty() {
            return Err(Error::InvalidConfig("shot_grid is empty".into()));
        }
        if self.shot_grid[0] == 0 {
            return Err(Error::InvalidConfig("shot counts must be positive".into()));
        }
        if self.shot_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "shot_grid must be strictly increasing".into(),
            ));
        }
        if self.n_states == 0 {
            return Err(Error::InvalidConfig("n_states must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Aggregated error for one `(f, shots)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub f: f64,
    pub k: f64,
    pub shots: u64,
    pub avg_error: f64,
    /// Standard deviation of the per-state errors divided by `sqrt(n_states)`.
    pub std_error: f64,
    pub n_states: usize,
}

/// Haar-distributed unitary of any dimension: QR of a complex Ginibre matrix
/// with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_random_unitary_dim(dim: usize, rng: &mut RandomSource) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut gaussian = || -> f64 { StandardNormal.sample(&mut *rng) };
    let z = DMatrix::<C64>::from_fn(dim, dim, |_, _| c(gaussian() * scale, gaussian() * scale));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 {
            c(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

pub fn haar_random_unitary(rng: &mut RandomSource) -> ComplexMatrix {
    haar_random_unitary_dim(2, rng)
}

/// Absolute error of one cut estimate of `<0|W^dagger Z W|0>`.
pub fn run_trial(
    k: NmeParameter,
    prep: &ComplexMatrix,
    shots: u64,
    rng: &mut RandomSource,
    mode: EstimationMode,
) -> Result<f64> {
    let qpd = nme_wire_cut(k);
    trial_error(&qpd, prep, shots, rng, mode)
}

fn trial_error(
    qpd: &QuasiProbDecomposition,
    prep: &ComplexMatrix,
    shots: u64,
    rng: &mut RandomSource,
    mode: EstimationMode,
) -> Result<f64> {
    let z = Pauli::Z.matrix();
    let exact = exact_expectation(prep, &z)?;
    let estimate = CutEstimator::new(qpd, prep, &z)?.estimate(shots, rng, mode)?;
    Ok((estimate - exact).abs())
}

/// The preparation unitary used for state `index` of the sweep.
pub fn sweep_preparation(config: &ExperimentConfig, f_index: usize, index: usize) -> ComplexMatrix {
    if config.force_identity_prep {
        return ComplexMatrix::identity(2);
    }
    let label = if config.paired {
        HAAR_LABEL
    } else {
        HAAR_LABEL ^ ((f_index as u64 + 1) << 40)
    };
    haar_random_unitary(&mut RandomSource::derive(config.seed, label, index as u64))
}

/// Runs every `(f, shots)` cell over `n_states` inputs. Records are ordered by
/// `f` then `shots`, following the config's order. Results do not depend on
/// the number of worker threads.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let cuts: Vec<(f64, NmeParameter, QuasiProbDecomposition)> = config
        .f_values
        .iter()
        .map(|&f| {
            let k = k_from_f(f)?;
            Ok((f, k, nme_wire_cut(k)))
        })
        .collect::<Result<_>>()?;
    let n_shots = config.shot_grid.len();

    // errors[state][f_index * n_shots + shot_index]
    let errors: Vec<Vec<f64>> = (0..config.n_states)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(cuts.len() * n_shots);
            let shared = config.paired.then(|| sweep_preparation(config, 0, i));
            for (fi, (_, _, qpd)) in cuts.iter().enumerate() {
                let prep = match &shared {
                    Some(w) => w.clone(),
                    None => sweep_preparation(config, fi, i),
                };
                for (si, &shots) in config.shot_grid.iter().enumerate() {
                    let label = CELL_LABEL | ((fi as u64) << 32) | si as u64;
                    let mut rng = RandomSource::derive(config.seed, label, i as u64);
                    row.push(trial_error(qpd, &prep, shots, &mut rng, config.mode)?);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let n = config.n_states as f64;
    let mut records = Vec::with_capacity(cuts.len() * n_shots);
    for (fi, (f, k, _)) in cuts.iter().enumerate() {
        for (si, &shots) in config.shot_grid.iter().enumerate() {
            let col = fi * n_shots + si;
            let mean = errors.iter().map(|row| row[col]).sum::<f64>() / n;
            let std_error = if config.n_states > 1 {
                let var = errors
                    .iter()
                    .map(|row| (row[col] - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            records.push(ExperimentRecord {
                f: *f,
                k: k.k(),
                shots,
                avg_error: mean,
                std_error,
                n_states: config.n_states,
            });
        }
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "f,k,shots,avg_error,std_error,n_states";

pub fn write_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let bytes = csv_bytes(records).map_err(|e| Error::csv(path, e))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// CSV text for `records`; the header is written even when there are none.
pub fn csv_bytes(records: &[ExperimentRecord]) -> std::result::Result<Vec<u8>, csv::Error> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    writer.write_record(CSV_HEADER.split(','))?;
    for r in records {
        writer.serialize(r)?;
    }
    writer
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))
}

pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found.join(",") != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "{}: expected header '{CSV_HEADER}', found '{}'",
            path.display(),
            found.join(",")
        )));
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<ExperimentRecord>, _>>()
        .map_err(|e| Error::csv(path, e))
}

/// Records grouped by `f`, ascending, each series sorted by shots.
pub fn series_by_f(records: &[ExperimentRecord]) -> Vec<(f64, Vec<&ExperimentRecord>)> {
    let mut groups: BTreeMap<u64, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        // f values are nonnegative, so the bit pattern orders like the value.
        groups.entry(r.f.to_bits()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(bits, mut rs)| {
            rs.sort_by_key(|r| r.shots);
            (f64::from_bits(bits), rs)
        })
        .collect()
}

/// Least-squares slope of `ln(avg_error)` against `ln(shots)`, skipping
/// zero-error points. `None` with fewer than two usable points.
pub fn loglog_slope(series: &[&ExperimentRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|r| r.avg_error > 0.0 && r.shots > 0)
        .map(|r| ((r.shots as f64).ln(), r.avg_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One named pass/fail check over a sweep.
#[derive(Clone, Debug)]
pub struct SweepCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub const SLOPE_RANGE: (f64, f64) = (-0.65, -0.35);
pub const ORDERING_MIN_SHOTS: u64 = 1000;

/// Shape checks on a sweep: every series decays like `shots^(-1/2)`, and the
/// least entangled series lies above the most entangled one at every budget
/// of at least 1000 shots, by 4 combined standard errors at the largest one.
/// With three or more series, errors at the largest budget must not rise
/// with `f`.
pub fn check_sweep(records: &[ExperimentRecord]) -> Vec<SweepCheck> {
    let series = series_by_f(records);
    let mut checks = Vec::new();
    for (f, rs) in &series {
        if rs.len() < 2 {
            continue;
        }
        let slope = loglog_slope(rs);
        let passed = slope.is_some_and(|s| (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s));
        checks.push(SweepCheck {
            name: format!("slope f={f}"),
            passed,
            detail: match slope {
                Some(s) => format!(
                    "log-log slope {s:.4}, expected [{}, {}]",
                    SLOPE_RANGE.0, SLOPE_RANGE.1
                ),
                None => "not enough nonzero points".into(),
            },
        });
    }

    if let (Some((f_lo, lo)), Some((f_hi, hi))) = (series.first(), series.last()) {
        if series.len() >= 2 {
            let by_shots: BTreeMap<u64, &ExperimentRecord> =
                hi.iter().map(|r| (r.shots, *r)).collect();
            let pairs: Vec<(&ExperimentRecord, &ExperimentRecord)> = lo
                .iter()
                .filter(|r| r.shots >= ORDERING_MIN_SHOTS)
                .filter_map(|r| by_shots.get(&r.shots).map(|h| (*r, *h)))
                .collect();
            let violations: Vec<u64> = pairs
                .iter()
                .filter(|(a, b)| a.avg_error <= b.avg_error)
                .map(|(a, _)| a.shots)
                .collect();
            checks.push(SweepCheck {
                name: format!("ordering f={f_lo} > f={f_hi}"),
                passed: !pairs.is_empty() && violations.is_empty(),
                detail: if pairs.is_empty() {
                    format!("no shared shot counts >= {ORDERING_MIN_SHOTS}")
                } else if violations.is_empty() {
                    format!("ordered at {} shot budgets", pairs.len())
                } else {
                    format!("violated at shots {violations:?}")
                },
            });
            if let Some((a, b)) = pairs.last() {
                let gap = a.avg_error - b.avg_error;
                let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
                checks.push(SweepCheck {
                    name: format!("separation at {} shots", a.shots),
                    passed: gap > 4.0 * sigma,
                    detail: format!("gap {gap:.3e}, 4 sigma {:.3e}", 4.0 * sigma),
                });
            }
        }
    }

    if series.len() >= 3 {
        let max_shots = records.iter().map(|r| r.shots).max().unwrap_or(0);
        let at_max: Vec<(f64, f64)> = series
            .iter()
            .filter_map(|(f, rs)| {
                rs.iter()
                    .find(|r| r.shots == max_shots)
                    .map(|r| (*f, r.avg_error))
            })
            .collect();
        let inversions: Vec<String> = at_max
            .windows(2)
            .filter(|w| w[1].1 > w[0].1)
            .map(|w| format!("f={} < f={}", w[0].0, w[1].0))
            .collect();
        checks.push(SweepCheck {
            name: format!("monotone in f at {max_shots} shots"),
            passed: inversions.is_empty(),
            detail: if inversions.is_empty() {
                format!("{} series non-increasing", at_max.len())
            } else {
                format!("error rises between {}", inversions.join(", "))
            },
        });
    }
    checks
}

const PALETTE: [&str; 8] = [
    "#d62728", "#ff7f0e", "#bcbd22", "#2ca02c", "#17becf", "#1f77b4", "#9467bd", "#7f7f7f",
];

/// Log-y line chart of average error against shots, one series per `f`.
pub fn svg_string(records: &[ExperimentRecord]) -> Result<String> {
    let plotted: Vec<&ExperimentRecord> = records.iter().filter(|r| r.avg_error > 0.0).collect();
    if plotted.is_empty() {
        return Err(Error::InvalidConfig(
            "nothing to plot: no records with positive error".into(),
        ));
    }
    let (width, height) = (760.0, 480.0);
    let (left, right, top, bottom) = (80.0, 150.0, 30.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let x_min = plotted.iter().map(|r| r.shots).min().unwrap_or(0) as f64;
    let x_max = plotted.iter().map(|r| r.shots).max().unwrap_or(1) as f64;
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let lo = plotted
        .iter()
        .map(|r| r.avg_error)
        .fold(f64::INFINITY, f64::min);
    let hi = plotted.iter().map(|r| r.avg_error).fold(0.0, f64::max);
    let y_lo = lo.log10().floor();
    let mut y_hi = hi.log10().ceil();
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let px = |shots: f64| left + (shots - x_min) / x_span * plot_w;
    let py = |err: f64| top + (y_hi - err.log10()) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for decade in (y_lo as i32)..=(y_hi as i32) {
        let y = py(10f64.powi(decade));
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            left + plot_w,
            left - 6.0,
            y + 4.0
        );
    }
    let ticks = 5;
    for t in 0..=ticks {
        let shots = x_min + x_span * t as f64 / ticks as f64;
        let x = px(shots);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + plot_h,
            top + plot_h + 5.0,
            top + plot_h + 20.0,
            shots.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">total shots</text>"#,
        left + plot_w / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">average error</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    let series = series_by_f(records);
    for (idx, (f, rs)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .filter(|r| r.avg_error > 0.0)
            .map(|r| (px(r.shots as f64), py(r.avg_error)))
            .collect();
        match pts.len() {
            0 => {}
            1 => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    pts[0].0, pts[0].1
                );
            }
            _ => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
        }
        let ly = top + 10.0 + 18.0 * idx as f64;
        let lx = left + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">f = {f}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_svg(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let svg = svg_string(records)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(f: f64, shots: u64, avg: f64) -> ExperimentRecord {
        ExperimentRecord {
            f,
            k: k_from_f(f).unwrap().k(),
            shots,
            avg_error: avg,
            std_error: avg / 20.0,
            n_states: 200,
        }
    }

    #[test]
    fn haar_unitaries_are_unitary_and_reproducible() {
        let mut rng = RandomSource::new(42, 0);
        for _ in 0..1000 {
            let w = haar_random_unitary(&mut rng);
            assert!(w.unitary_residual() <= 1e-12);
        }
        let a = haar_random_unitary(&mut RandomSource::new(9, 4));
        let b = haar_random_unitary(&mut RandomSource::new(9, 4));
        assert_eq!(a, b);
        let u4 = haar_random_unitary_dim(4, &mut rng);
        assert!(u4.unitary_residual() <= 1e-12);
    }

    #[test]
    fn trial_with_identity_prep_at_maximal_entanglement_is_exact() {
        let mut rng = RandomSource::new(1, 1);
        for mode in [EstimationMode::Stratified, EstimationMode::Multinomial] {
            let e = run_trial(
                NmeParameter::MAXIMAL,
                &ComplexMatrix::identity(2),
                100,
                &mut rng,
                mode,
            )
            .unwrap();
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn trial_error_is_bounded() {
        let mut rng = RandomSource::new(2, 0);
        for _ in 0..200 {
            let w = haar_random_unitary(&mut rng);
            let e = run_trial(
                NmeParameter::SEPARABLE,
                &w,
                3,
                &mut rng,
                EstimationMode::Multinomial,
            )
            .unwrap();
            // multinomial with kappa = 3 can overshoot [-1, 1]; stratified cannot
            assert!(e.is_finite());
            let e = run_trial(
                NmeParameter::new(0.4).unwrap(),
                &w,
                3,
                &mut rng,
                EstimationMode::Stratified,
            )
            .unwrap();
            assert!((0.0..=2.0 + 1e-12).contains(&e), "{e}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = [
            ExperimentConfig {
                f_values: vec![0.4],
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                shot_grid: vec![500, 250],
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                shot_grid: vec![0, 250],
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                n_states: 0,
                ..ExperimentConfig::default()
            },
        ];
        for config in bad {
            assert!(config.validate().is_err(), "{config:?}");
        }
    }

    #[test]
    fn config_from_toml() {
        let cfg: ExperimentConfig = toml::from_str(
            "f_values = [0.5, 1.0]\nshot_grid = [100, 200]\nn_states = 3\nseed = 9\nmode = \"multinomial\"\n",
        )
        .unwrap();
        assert_eq!(cfg.f_values, vec![0.5, 1.0]);
        assert_eq!(cfg.mode, EstimationMode::Multinomial);
        assert!(cfg.paired);
        let defaults: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(defaults, ExperimentConfig::default());
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }

    #[test]
    fn sweep_with_forced_identity() {
        let cfg = ExperimentConfig {
            f_values: vec![1.0],
            shot_grid: vec![100],
            n_states: 1,
            force_identity_prep: true,
            ..ExperimentConfig::default()
        };
        let records = run_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].avg_error, 0.0);
        assert_eq!(records[0].std_error, 0.0);
        assert_eq!(records[0].k, 1.0);
    }

    #[test]
    fn sweep_schema_and_determinism() {
        let cfg = ExperimentConfig {
            shot_grid: vec![250, 500, 1000],
            n_states: 5,
            seed: 3,
            ..ExperimentConfig::default()
        };
        let a = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 6 * 3);
        assert!(a
            .iter()
            .all(|r| r.avg_error.is_finite() && r.avg_error >= 0.0));
        assert!(a.iter().all(|r| r.avg_error <= 2.0));
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(csv_bytes(&a).unwrap(), csv_bytes(&b).unwrap());

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| run_sweep(&cfg)).unwrap();
        assert_eq!(serial, a);
    }

    #[test]
    fn csv_schema() {
        assert_eq!(
            String::from_utf8(csv_bytes(&[]).unwrap()).unwrap(),
            "f,k,shots,avg_error,std_error,n_states\n"
        );
        let r = ExperimentRecord {
            f: 1.0,
            k: 1.0,
            shots: 500,
            avg_error: 0.012,
            std_error: 0.001,
            n_states: 200,
        };
        let text = String::from_utf8(csv_bytes(&[r]).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 6);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let records = vec![
            record(0.5, 250, 0.1 / 3.0),
            record(0.9, 5000, 1.234567890123e-3),
        ];
        write_csv(&records, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            assert!((a.avg_error - b.avg_error).abs() <= 1e-12);
            assert!((a.k - b.k).abs() <= 1e-12);
            assert_eq!(a.shots, b.shots);
        }
    }

    #[test]
    fn read_csv_rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_csv(&path).is_err());
        fs::write(
            &path,
            "f,k,shots,avg_error,std_error,n_states\n0.5,0,x,1,1,1\n",
        )
        .unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Csv { .. })));
        assert!(matches!(
            read_csv(&dir.path().join("missing.csv")),
            Err(Error::Csv { .. })
        ));
    }

    #[test]
    fn write_csv_reports_path() {
        let err = write_csv(&[], Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn slope_of_inverse_sqrt() {
        let rs: Vec<ExperimentRecord> = (1..=20)
            .map(|i| record(0.5, i * 250, 1.0 / ((i * 250) as f64).sqrt()))
            .collect();
        let refs: Vec<&ExperimentRecord> = rs.iter().collect();
        assert!((loglog_slope(&refs).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&refs[..1]).is_none());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let mut records = Vec::new();
        for f in [1.0, 0.5, 0.7, 0.6, 0.9, 0.8] {
            for shots in [250, 500, 1000] {
                records.push(record(f, shots, (1.5 - f) / (shots as f64).sqrt()));
            }
        }
        let svg = svg_string(&records).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 6);
        let legend: Vec<usize> = [
            "f = 0.5", "f = 0.6", "f = 0.7", "f = 0.8", "f = 0.9", "f = 1<",
        ]
        .iter()
        .map(|l| svg.find(l).unwrap())
        .collect();
        assert!(legend.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn svg_single_point_series_is_a_marker() {
        let svg = svg_string(&[record(0.5, 100, 0.1)]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg_string(&[]).is_err());
    }

    #[test]
    fn separable_resource_has_larger_errors() {
        // Mann-Whitney U over 200 paired states at 5000 shots.
        let n = 200;
        let mut errors = [Vec::new(), Vec::new()];
        for i in 0..n {
            let w = haar_random_unitary(&mut RandomSource::derive(5, HAAR_LABEL, i));
            for (slot, k) in [NmeParameter::SEPARABLE, NmeParameter::MAXIMAL]
                .into_iter()
                .enumerate()
            {
                let mut rng = RandomSource::derive(5, CELL_LABEL, i);
                errors[slot]
                    .push(run_trial(k, &w, 5000, &mut rng, EstimationMode::Stratified).unwrap());
            }
        }
        let mut u = 0.0;
        for a in &errors[0] {
            for b in &errors[1] {
                u += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let nf = n as f64;
        let mean = nf * nf / 2.0;
        let sd = (nf * nf * (2.0 * nf + 1.0) / 12.0).sqrt();
        assert!((u - mean) / sd > 3.0, "U = {u}");
    }

    #[test]
    fn sweep_checks() {
        let mut records = Vec::new();
        for (f, scale) in [(0.5, 3.0), (1.0, 1.0)] {
            for i in 1..=20u64 {
                records.push(record(f, i * 250, scale / ((i * 250) as f64).sqrt()));
            }
        }
        assert!(check_sweep(&records).iter().all(|c| c.passed));
        // Swap the roles so the ordering fails.
        for r in &mut records {
            r.f = if r.f == 0.5 { 1.0 } else { 0.5 };
        }
        let checks = check_sweep(&records);
        assert!(checks
            .iter()
            .any(|c| !c.passed && c.name.starts_with("ordering")));
    }

    #[test]
    fn monotone_check_flags_inversions() {
        let mut records: Vec<ExperimentRecord> = [(0.5, 0.03), (0.8, 0.02), (1.0, 0.01)]
            .iter()
            .map(|&(f, e)| record(f, 5000, e))
            .collect();
        let find = |checks: &[SweepCheck]| {
            checks
                .iter()
                .find(|c| c.name.starts_with("monotone"))
                .map(|c| c.passed)
        };
        assert_eq!(find(&check_sweep(&records)), Some(true));
        records[1].avg_error = 0.05;
        assert_eq!(find(&check_sweep(&records)), Some(false));
    }
}

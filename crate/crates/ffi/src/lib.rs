//! C interface to the `wirecut` library.
//!
//! Every function returns a [`WirecutStatus`]; results are written through
//! out-pointers. Decompositions and sweep results are opaque handles owned by
//! the caller and released with the matching `_free` function. After a
//! non-OK status, `wirecut_last_error()` describes the failure on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wirecut::estimator::{estimate_cut_expectation, EstimationMode, RandomSource};
use wirecut::experiment::{run_sweep, write_csv, ExperimentConfig, ExperimentRecord};
use wirecut::linalg::{c, ComplexMatrix, Pauli};
use wirecut::qpd::{
    harada_wire_cut, nme_wire_cut, optimal_overhead, optimal_overhead_pure, QuasiProbDecomposition,
};
use wirecut::states::{k_from_f, NmeParameter};
use wirecut::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WirecutStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    IoError = 4,
    Panic = 5,
}

pub const WIRECUT_MODE_STRATIFIED: u32 = 0;
pub const WIRECUT_MODE_MULTINOMIAL: u32 = 1;

/// Opaque quasiprobability decomposition.
pub struct WirecutQpd(QuasiProbDecomposition);

/// Opaque list of sweep records.
pub struct WirecutSweep(Vec<ExperimentRecord>);

/// One `(f, shots)` cell of a sweep.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WirecutRecord {
    pub f: f64,
    pub k: f64,
    pub shots: u64,
    pub avg_error: f64,
    pub std_error: f64,
    pub n_states: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn wirecut_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

struct Failure(WirecutStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::OutOfRange { .. } => WirecutStatus::OutOfRange,
            Error::Io { .. } | Error::Csv { .. } => WirecutStatus::IoError,
            _ => WirecutStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(WirecutStatus::NullPointer, format!("{name} is NULL"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> WirecutStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WirecutStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {message}"));
            WirecutStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn qpd_ref<'a>(qpd: *const WirecutQpd) -> Result<&'a QuasiProbDecomposition, Failure> {
    qpd.as_ref().map(|q| &q.0).ok_or_else(|| null("qpd"))
}

unsafe fn slice<'a, T>(data: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn mode(value: u32) -> Result<EstimationMode, Failure> {
    match value {
        WIRECUT_MODE_STRATIFIED => Ok(EstimationMode::Stratified),
        WIRECUT_MODE_MULTINOMIAL => Ok(EstimationMode::Multinomial),
        other => Err(Failure(
            WirecutStatus::InvalidArgument,
            format!("unknown estimation mode {other}"),
        )),
    }
}

/// Optimal overhead `4(k^2+1)/(k+1)^2 - 1` for the resource parameter `k`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_overhead_from_k(k: f64, out: *mut f64) -> WirecutStatus {
    guard(|| {
        let gamma = optimal_overhead_pure(NmeParameter::new(k)?);
        write_out(out, "out", gamma)
    })
}

/// Optimal overhead `2/f - 1` for a resource with Bell overlap `f`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_overhead_from_f(f: f64, out: *mut f64) -> WirecutStatus {
    guard(|| write_out(out, "out", optimal_overhead(f)?))
}

/// The `k` in `[0, 1]` whose resource state has Bell overlap `f`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_k_from_f(f: f64, out: *mut f64) -> WirecutStatus {
    guard(|| write_out(out, "out", k_from_f(f)?.k()))
}

/// Creates the teleportation-based wire cut for resource parameter `k`.
///
/// # Safety
/// `out` must be NULL or valid for writes. The handle must be released with
/// `wirecut_qpd_free`.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_new_nme(k: f64, out: *mut *mut WirecutQpd) -> WirecutStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let qpd = nme_wire_cut(NmeParameter::new(k)?);
        out.write(Box::into_raw(Box::new(WirecutQpd(qpd))));
        Ok(())
    })
}

/// Creates the entanglement-free measure-and-prepare wire cut.
///
/// # Safety
/// Same contract as `wirecut_qpd_new_nme`.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_new_measure_prepare(
    out: *mut *mut WirecutQpd,
) -> WirecutStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(Box::into_raw(Box::new(WirecutQpd(harada_wire_cut()))));
        Ok(())
    })
}

/// Releases a decomposition. NULL is ignored.
///
/// # Safety
/// `qpd` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_free(qpd: *mut WirecutQpd) {
    if !qpd.is_null() {
        drop(Box::from_raw(qpd));
    }
}

/// Number of terms.
///
/// # Safety
/// `qpd` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_len(qpd: *const WirecutQpd, out: *mut usize) -> WirecutStatus {
    guard(|| write_out(out, "out", qpd_ref(qpd)?.len()))
}

/// Sum of absolute coefficients.
///
/// # Safety
/// `qpd` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_kappa(qpd: *const WirecutQpd, out: *mut f64) -> WirecutStatus {
    guard(|| write_out(out, "out", qpd_ref(qpd)?.kappa()))
}

/// Coefficient of term `index` and whether it consumes a resource pair.
/// Either out-pointer may be NULL.
///
/// # Safety
/// `qpd` must be a live handle; non-NULL out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_term(
    qpd: *const WirecutQpd,
    index: usize,
    coefficient: *mut f64,
    consumes_resource: *mut bool,
) -> WirecutStatus {
    guard(|| {
        let terms = qpd_ref(qpd)?.terms();
        let term = terms.get(index).ok_or_else(|| {
            Failure(
                WirecutStatus::OutOfRange,
                format!("term index {index} out of range for {} terms", terms.len()),
            )
        })?;
        if !coefficient.is_null() {
            coefficient.write(term.coefficient);
        }
        if !consumes_resource.is_null() {
            consumes_resource.write(term.consumes_resource);
        }
        Ok(())
    })
}

/// Max-norm distance between the reconstructed and identity Choi matrices.
///
/// # Safety
/// `qpd` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_qpd_identity_deviation(
    qpd: *const WirecutQpd,
    out: *mut f64,
) -> WirecutStatus {
    guard(|| write_out(out, "out", qpd_ref(qpd)?.identity_deviation()))
}

/// Estimates `<0|W^dagger Z W|0>` through the cut with `shots` total shots.
/// `prep` holds the 2x2 unitary `W` row-major as interleaved real and
/// imaginary parts (8 doubles).
///
/// # Safety
/// `qpd` must be a live handle, `prep` must point to 8 readable doubles and
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_estimate_z(
    qpd: *const WirecutQpd,
    prep: *const f64,
    shots: u64,
    seed: u64,
    stream: u64,
    estimation_mode: u32,
    out: *mut f64,
) -> WirecutStatus {
    guard(|| {
        let qpd = qpd_ref(qpd)?;
        let raw = slice(prep, 8, "prep")?;
        let entries = raw.chunks(2).map(|p| c(p[0], p[1])).collect();
        let w = ComplexMatrix::new(2, 2, entries)?;
        let mut rng = RandomSource::new(seed, stream);
        let value = estimate_cut_expectation(
            qpd,
            &w,
            &Pauli::Z.matrix(),
            shots,
            &mut rng,
            mode(estimation_mode)?,
        )?;
        write_out(out, "out", value)
    })
}

/// Runs a paired sweep over `f_values` x `shot_grid` with `n_states` random
/// inputs.
///
/// # Safety
/// The arrays must hold the stated number of elements; `out` must be valid
/// for writes. The handle must be released with `wirecut_sweep_free`.
#[no_mangle]
pub unsafe extern "C" fn wirecut_sweep_run(
    f_values: *const f64,
    f_len: usize,
    shot_grid: *const u64,
    shots_len: usize,
    n_states: usize,
    seed: u64,
    estimation_mode: u32,
    out: *mut *mut WirecutSweep,
) -> WirecutStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ExperimentConfig {
            f_values: slice(f_values, f_len, "f_values")?.to_vec(),
            shot_grid: slice(shot_grid, shots_len, "shot_grid")?.to_vec(),
            n_states,
            seed,
            mode: mode(estimation_mode)?,
            ..ExperimentConfig::default()
        };
        let records = run_sweep(&config)?;
        out.write(Box::into_raw(Box::new(WirecutSweep(records))));
        Ok(())
    })
}

/// Number of records, ordered by f then shots.
///
/// # Safety
/// `sweep` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_sweep_len(
    sweep: *const WirecutSweep,
    out: *mut usize,
) -> WirecutStatus {
    guard(|| {
        let sweep = sweep.as_ref().ok_or_else(|| null("sweep"))?;
        write_out(out, "out", sweep.0.len())
    })
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `sweep` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wirecut_sweep_record(
    sweep: *const WirecutSweep,
    index: usize,
    out: *mut WirecutRecord,
) -> WirecutStatus {
    guard(|| {
        let records = &sweep.as_ref().ok_or_else(|| null("sweep"))?.0;
        let r = records.get(index).ok_or_else(|| {
            Failure(
                WirecutStatus::OutOfRange,
                format!(
                    "record index {index} out of range for {} records",
                    records.len()
                ),
            )
        })?;
        write_out(
            out,
            "out",
            WirecutRecord {
                f: r.f,
                k: r.k,
                shots: r.shots,
                avg_error: r.avg_error,
                std_error: r.std_error,
                n_states: r.n_states as u64,
            },
        )
    })
}

/// Writes the sweep as CSV to the UTF-8 path `path`.
///
/// # Safety
/// `sweep` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wirecut_sweep_write_csv(
    sweep: *const WirecutSweep,
    path: *const c_char,
) -> WirecutStatus {
    guard(|| {
        let sweep = sweep.as_ref().ok_or_else(|| null("sweep"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| {
            Failure(
                WirecutStatus::InvalidArgument,
                "path is not valid UTF-8".into(),
            )
        })?;
        write_csv(&sweep.0, Path::new(path))?;
        Ok(())
    })
}

/// Releases a sweep. NULL is ignored.
///
/// # Safety
/// `sweep` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wirecut_sweep_free(sweep: *mut WirecutSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

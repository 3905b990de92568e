//! C ABI over the `cdasim` simulator.
//!
//! Every fallible call returns a [`CdaStatus`]; on failure the message is
//! available from [`cda_last_error`] on the same thread. Objects are opaque
//! handles released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cdasim::community::{modularity, partition_anticommunities};
use cdasim::engine::simulate;
use cdasim::experiment::{preset, run_experiment, ExperimentSpec};
use cdasim::netgraph::build_network;
use cdasim::persist::{read_log_dir, write_log_dir};
use cdasim::{Error, MarketConfig, Model, TradeLog};

/// Result of every fallible call. Values 1 to 3 match the command-line
/// exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdaStatus {
    Ok = 0,
    ConfigError = 1,
    RuntimeError = 2,
    IoError = 3,
    NullPointer = 4,
    OutOfRange = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdaModel {
    Zi = 0,
    Zip = 1,
    Gd = 2,
}

impl From<CdaModel> for Model {
    fn from(m: CdaModel) -> Self {
        match m {
            CdaModel::Zi => Model::Zi,
            CdaModel::Zip => Model::Zip,
            CdaModel::Gd => Model::Gd,
        }
    }
}

/// One executed trade.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdaTrade {
    pub step: u64,
    pub day: u64,
    pub buyer_id: u64,
    pub seller_id: u64,
    pub bid: f64,
    pub ask: f64,
    pub price: f64,
}

/// Market configuration handle.
pub struct CdaConfig(MarketConfig);

/// Finished simulation handle.
pub struct CdaLog(TradeLog);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CdaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            1 => CdaStatus::ConfigError,
            3 => CdaStatus::IoError,
            _ => CdaStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CdaStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CdaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CdaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            CdaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CdaStatus::ConfigError, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cda_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cda_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a configuration holding the default market.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_config_default(out: *mut *mut CdaConfig) -> CdaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(CdaConfig(MarketConfig::default())));
        Ok(())
    })
}

/// Parses a JSON configuration; omitted fields take their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_config_from_json(
    json: *const c_char,
    out: *mut *mut CdaConfig,
) -> CdaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let config: MarketConfig = serde_json::from_str(text)
            .map_err(|e| Failure(CdaStatus::ConfigError, e.to_string()))?;
        config.validate()?;
        *out = Box::into_raw(Box::new(CdaConfig(config)));
        Ok(())
    })
}

/// Serializes the configuration with every field expanded. Free the result
/// with [`cda_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_config_to_json(
    config: *const CdaConfig,
    out: *mut *mut c_char,
) -> CdaStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let out = out_arg(out, "out")?;
        let text = serde_json::to_string(&config.0).expect("serializable config");
        *out = CString::new(text).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cda_config_set_model(
    config: *mut CdaConfig,
    model: CdaModel,
) -> CdaStatus {
    guard(|| {
        out_arg(config, "config")?.0.model = model.into();
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cda_config_set_seed(config: *mut CdaConfig, seed: u64) -> CdaStatus {
    guard(|| {
        out_arg(config, "config")?.0.seed = seed;
        Ok(())
    })
}

/// Sets the trader count, rounds per day and number of days.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cda_config_set_size(
    config: *mut CdaConfig,
    n_traders: u64,
    rounds_per_day: u64,
    n_days: u64,
) -> CdaStatus {
    guard(|| {
        let c = &mut out_arg(config, "config")?.0;
        c.n_traders = usize::try_from(n_traders).map_err(|_| {
            Failure(
                CdaStatus::OutOfRange,
                format!("n_traders {n_traders} too large"),
            )
        })?;
        c.rounds_per_day = rounds_per_day;
        c.n_days = n_days;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cda_config_set_gd_forced_trade(
    config: *mut CdaConfig,
    forced: bool,
) -> CdaStatus {
    guard(|| {
        out_arg(config, "config")?.0.gd_forced_trade = forced;
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cda_config_free(config: *mut CdaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one market.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_simulate(
    config: *const CdaConfig,
    out: *mut *mut CdaLog,
) -> CdaStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let out = out_arg(out, "out")?;
        let log = simulate(&config.0)?;
        *out = Box::into_raw(Box::new(CdaLog(log)));
        Ok(())
    })
}

/// Loads a run directory written by [`cda_log_write_dir`].
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_log_read_dir(dir: *const c_char, out: *mut *mut CdaLog) -> CdaStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let out = out_arg(out, "out")?;
        let log = read_log_dir(dir)?;
        *out = Box::into_raw(Box::new(CdaLog(log)));
        Ok(())
    })
}

/// Writes `config.json`, `trades.csv`, `market.csv` and, if requested,
/// `shouts.csv` into `dir`.
///
/// # Safety
/// `log` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cda_log_write_dir(
    log: *const CdaLog,
    dir: *const c_char,
    with_shouts: bool,
) -> CdaStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        let dir = str_arg(dir, "dir")?;
        write_log_dir(dir, &log.0, with_shouts)?;
        Ok(())
    })
}

/// Number of trades, or 0 for NULL.
///
/// # Safety
/// `log` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cda_log_trade_count(log: *const CdaLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.trades.len())
}

/// Equilibrium price of the market, or NaN for NULL.
///
/// # Safety
/// `log` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cda_log_equilibrium_price(log: *const CdaLog) -> f64 {
    log.as_ref()
        .map_or(f64::NAN, |l| l.0.market.equilibrium_price)
}

/// Copies trade `index` into `out`.
///
/// # Safety
/// `log` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_log_trade(
    log: *const CdaLog,
    index: usize,
    out: *mut CdaTrade,
) -> CdaStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        let out = out_arg(out, "out")?;
        let t = log.0.trades.get(index).ok_or_else(|| {
            Failure(
                CdaStatus::OutOfRange,
                format!("trade {index} of {}", log.0.trades.len()),
            )
        })?;
        *out = CdaTrade {
            step: t.step,
            day: t.day,
            buyer_id: t.buyer_id as u64,
            seller_id: t.seller_id as u64,
            bid: t.bid,
            ask: t.ask,
            price: t.price,
        };
        Ok(())
    })
}

/// Writes `(trader_id, degree)` pairs of the transaction network into
/// `ids` and `degrees`. `len` receives the node count; if it exceeds
/// `capacity` nothing is copied and `BufferTooSmall` is returned, so a call
/// with capacity 0 queries the size.
///
/// # Safety
/// `log` must be a live handle, `len` valid for writes and, when
/// `capacity > 0`, `ids` and `degrees` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cda_log_degrees(
    log: *const CdaLog,
    ids: *mut u64,
    degrees: *mut u64,
    capacity: usize,
    len: *mut usize,
) -> CdaStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        let len = out_arg(len, "len")?;
        let net = build_network(&log.0);
        *len = net.n_nodes();
        if net.n_nodes() > capacity {
            return Err(Failure(
                CdaStatus::BufferTooSmall,
                format!("need {} entries, capacity {capacity}", net.n_nodes()),
            ));
        }
        if net.n_nodes() == 0 {
            return Ok(());
        }
        if ids.is_null() || degrees.is_null() {
            return Err(null("ids or degrees"));
        }
        for (node, &id) in net.ids().iter().enumerate() {
            *ids.add(node) = id as u64;
            *degrees.add(node) = net.degree(node) as u64;
        }
        Ok(())
    })
}

/// Anti-community detection on the transaction network. Community ids are
/// written per node in the order of [`cda_log_degrees`]; sizing works the
/// same way. `modularity_out` may be NULL.
///
/// # Safety
/// Same contract as [`cda_log_degrees`] for `assignment`; `modularity_out`
/// must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cda_log_anticommunities(
    log: *const CdaLog,
    assignment: *mut u64,
    capacity: usize,
    len: *mut usize,
    modularity_out: *mut f64,
) -> CdaStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        let len = out_arg(len, "len")?;
        let net = build_network(&log.0);
        *len = net.n_nodes();
        if net.n_nodes() > capacity {
            return Err(Failure(
                CdaStatus::BufferTooSmall,
                format!("need {} entries, capacity {capacity}", net.n_nodes()),
            ));
        }
        let partition = partition_anticommunities(&net)?;
        if let Some(q) = modularity_out.as_mut() {
            *q = modularity(&net, &partition)?;
        }
        if net.n_nodes() == 0 {
            return Ok(());
        }
        if assignment.is_null() {
            return Err(null("assignment"));
        }
        for (node, &c) in partition.assignment.iter().enumerate() {
            *assignment.add(node) = c as u64;
        }
        Ok(())
    })
}

/// Runs an experiment from a preset name or a JSON spec (exactly one must
/// be non-NULL) and writes its artifacts under `out_dir`, or under the
/// spec's own directory when `out_dir` is NULL.
///
/// # Safety
/// Non-NULL string arguments must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cda_experiment_run(
    preset_name: *const c_char,
    spec_json: *const c_char,
    out_dir: *const c_char,
    threads: usize,
) -> CdaStatus {
    guard(|| {
        let mut spec: ExperimentSpec = match (preset_name.is_null(), spec_json.is_null()) {
            (false, true) => preset(str_arg(preset_name, "preset_name")?)?,
            (true, false) => serde_json::from_str(str_arg(spec_json, "spec_json")?)
                .map_err(|e| Failure(CdaStatus::ConfigError, e.to_string()))?,
            _ => {
                return Err(Failure(
                    CdaStatus::ConfigError,
                    "exactly one of preset_name and spec_json must be given".into(),
                ))
            }
        };
        if !out_dir.is_null() {
            spec.output_dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        }
        run_experiment(&spec, threads)?;
        Ok(())
    })
}

/// # Safety
/// `log` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cda_log_free(log: *mut CdaLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

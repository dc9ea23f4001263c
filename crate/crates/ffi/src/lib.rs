//! C ABI for the causebound engine.
//!
//! Handles are opaque pointers owned by Rust; every constructor has a
//! matching `_free`, strings returned to C are freed with
//! `cb_string_free`. Functions return 0 on success or a nonzero error code
//! (2 parse, 3 graph/data mismatch, 4 infeasible, 5 solver failure) and
//! leave a message readable through `cb_last_error`.

use causebound::bounds::Query;
use causebound::cli::CliError;
use causebound::decompose::{explore, ExploreConfig, GammaSpec, MoveKind, SolverPath};
use causebound::dist::Dataset;
use causebound::graph::Admg;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

pub const CB_OK: i32 = 0;
pub const CB_ERR_PARSE: i32 = 2;
pub const CB_ERR_MISMATCH: i32 = 3;
pub const CB_ERR_INFEASIBLE: i32 = 4;
pub const CB_ERR_SOLVER: i32 = 5;
/// Null handle or argument.
pub const CB_ERR_NULL: i32 = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn code_of(e: &CliError) -> i32 {
    e.exit_code()
}

/// Opaque graph handle.
pub struct CbGraph {
    inner: Admg,
}

/// Opaque dataset handle.
pub struct CbDataset {
    inner: Dataset,
}

/// Message for the most recent error on this thread. Valid until the next
/// failing call; do not free.
#[no_mangle]
pub extern "C" fn cb_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Engine version as a static string; do not free.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        set_error(&format!("{} is null", what));
        return Err(CB_ERR_NULL);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{} is not valid UTF-8", what));
        CB_ERR_PARSE
    })
}

/// Parses a graph from its JSON form into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_graph_parse(json: *const c_char, out: *mut *mut CbGraph) -> i32 {
    if out.is_null() {
        set_error("out pointer is null");
        return CB_ERR_NULL;
    }
    let text = match str_arg(json, "graph json") {
        Ok(t) => t,
        Err(code) => return code,
    };
    match Admg::from_json(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CbGraph { inner }));
            CB_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            CB_ERR_PARSE
        }
    }
}

/// # Safety
/// `g` must come from `cb_graph_parse` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cb_graph_free(g: *mut CbGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Parses a CSV dataset (header row of variable names, integer-coded rows)
/// against a graph's declared cardinalities.
///
/// # Safety
/// `csv` must be NUL-terminated, `g` a live graph handle, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_parse_csv(
    csv: *const c_char,
    g: *const CbGraph,
    out: *mut *mut CbDataset,
) -> i32 {
    if g.is_null() || out.is_null() {
        set_error("null handle");
        return CB_ERR_NULL;
    }
    let text = match str_arg(csv, "dataset csv") {
        Ok(t) => t,
        Err(code) => return code,
    };
    let d = match Dataset::from_csv(text) {
        Ok(d) => d,
        Err(e) => {
            set_error(&e.to_string());
            return CB_ERR_PARSE;
        }
    };
    let graph = &(*g).inner;
    let mut vars = Vec::new();
    for v in d.variables() {
        match graph.index_of(&v.name) {
            Ok(i) if v.cardinality <= graph.cardinality(i) => vars.push(causebound::graph::Node {
                name: v.name.clone(),
                cardinality: graph.cardinality(i),
            }),
            Ok(_) => {
                set_error(&format!("column `{}` exceeds its declared cardinality", v.name));
                return CB_ERR_MISMATCH;
            }
            Err(_) => {
                set_error(&format!("column `{}` is not a graph node", v.name));
                return CB_ERR_MISMATCH;
            }
        }
    }
    match Dataset::new(vars, d.rows().to_vec()) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CbDataset { inner }));
            CB_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            CB_ERR_MISMATCH
        }
    }
}

/// # Safety
/// `d` must come from `cb_dataset_parse_csv` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_free(d: *mut CbDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a `cb_*` function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn build_query(
    treatment: *const c_char,
    outcome: *const c_char,
    treatment_value: i32,
    outcome_value: i32,
    ate: bool,
) -> Result<Query, i32> {
    let treatment = str_arg(treatment, "treatment")?.to_string();
    let outcome = str_arg(outcome, "outcome")?.to_string();
    if ate {
        Ok(Query::Ate { treatment, outcome })
    } else {
        if treatment_value < 0 || outcome_value < 0 {
            set_error("value codes must be nonnegative");
            return Err(CB_ERR_PARSE);
        }
        Ok(Query::Do {
            treatment,
            t_value: treatment_value as usize,
            outcome,
            y_value: outcome_value as usize,
        })
    }
}

/// Exact LP bounds on the empirical joint of the dataset (no candidate
/// search). Writes the interval into `lower`/`upper`.
///
/// # Safety
/// Handles must be live; name pointers NUL-terminated; out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn cb_bounds_lp(
    g: *const CbGraph,
    d: *const CbDataset,
    treatment: *const c_char,
    outcome: *const c_char,
    treatment_value: i32,
    outcome_value: i32,
    ate: bool,
    lower: *mut f64,
    upper: *mut f64,
) -> i32 {
    if g.is_null() || d.is_null() || lower.is_null() || upper.is_null() {
        set_error("null handle");
        return CB_ERR_NULL;
    }
    let query = match build_query(treatment, outcome, treatment_value, outcome_value, ate) {
        Ok(q) => q,
        Err(code) => return code,
    };
    let joint = match (*d).inner.empirical_joint() {
        Ok(p) => p,
        Err(e) => {
            set_error(&e.to_string());
            return CB_ERR_PARSE;
        }
    };
    match causebound::bounds::lp_bounds(&joint, &(*g).inner, &query) {
        Ok(pair) => {
            *lower = pair.lower;
            *upper = pair.upper;
            CB_OK
        }
        Err(e) => {
            let cli: CliError = e.into();
            set_error(&cli.to_string());
            code_of(&cli)
        }
    }
}

/// Full pipeline: confidence box, candidate net, per-candidate bounds,
/// decomposition, decision. On success writes the report JSON into
/// `report_json` (free with `cb_string_free`) and the verdict into
/// `decision`: 10 return, 11 observe, 12 collect.
///
/// `gamma` below 0 means "use the empirical outcome rate"; `solver` is
/// 0 = lp, 1 = gradient, 2 = both.
///
/// # Safety
/// Handles must be live; name pointers NUL-terminated; out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn cb_decompose(
    g: *const CbGraph,
    d: *const CbDataset,
    treatment: *const c_char,
    outcome: *const c_char,
    treatment_value: i32,
    outcome_value: i32,
    ate: bool,
    alpha: f64,
    eps_s: f64,
    net_samples: usize,
    seed: u64,
    solver: i32,
    gamma: f64,
    report_json: *mut *mut c_char,
    decision: *mut i32,
) -> i32 {
    if g.is_null() || d.is_null() || report_json.is_null() || decision.is_null() {
        set_error("null handle");
        return CB_ERR_NULL;
    }
    let query = match build_query(treatment, outcome, treatment_value, outcome_value, ate) {
        Ok(q) => q,
        Err(code) => return code,
    };
    let config = ExploreConfig {
        alpha,
        eps_s,
        net_samples,
        seed,
        solver: match solver {
            1 => SolverPath::Gradient,
            2 => SolverPath::Both,
            _ => SolverPath::Lp,
        },
        gamma: if gamma < 0.0 { GammaSpec::Empirical } else { GammaSpec::Fixed(gamma) },
        ..ExploreConfig::default()
    };
    match explore(&(*d).inner, &(*g).inner, &query, &config) {
        Ok(outcome) => {
            let json = serde_json::to_string_pretty(&outcome.report)
                .expect("report serialization cannot fail");
            *report_json = CString::new(json).map_or(ptr::null_mut(), CString::into_raw);
            *decision = match outcome.decision.kind {
                MoveKind::Return { .. } => 10,
                MoveKind::Observe => 11,
                MoveKind::Collect => 12,
            };
            CB_OK
        }
        Err(e) => {
            let cli: CliError = e.into();
            set_error(&cli.to_string());
            code_of(&cli)
        }
    }
}

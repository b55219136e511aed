// SPDX-License-Identifier: Apache-2.0

//! C ABI for the diffopts toolkit.
//!
//! Every function returns a status code; results come back through out
//! pointers. Handles are opaque and must be released with their matching
//! `_free` function. On any non-zero status the calling thread can fetch a
//! human-readable message with [`diffopts_last_error`]; the pointer stays
//! valid until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};

use diffopts::env::{load_domain, Domain};
use diffopts::graph::{build_state_graph, walk_matrices, StateGraph};
use diffopts::metrics::domain_difficulty;
use diffopts::options::{discover_diffusion_options, score_field, OptionSet};
use diffopts::spectral::{decompose, WalkSpectrum};

/// Operation succeeded.
pub const DIFFOPTS_OK: c_int = 0;
/// A required pointer argument was null.
pub const DIFFOPTS_ERR_NULL_ARGUMENT: c_int = 1;
/// A string argument was not valid UTF-8.
pub const DIFFOPTS_ERR_INVALID_UTF8: c_int = 2;
/// The operation failed; details via `diffopts_last_error`.
pub const DIFFOPTS_ERR_RUNTIME: c_int = 3;

/// Opaque handle to a loaded domain with its graph and walk spectrum.
pub struct DiffoptsDomain {
    domain: Domain,
    graph: StateGraph,
    spectrum: WalkSpectrum,
}

/// Opaque handle to a discovered option set.
pub struct DiffoptsOptionSet {
    set: OptionSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(code: c_int, msg: &str) -> c_int {
    let bytes: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(bytes).unwrap_or_default());
    code
}

/// Message for the most recent failure on this thread.
///
/// The pointer is owned by the library and stays valid until the next
/// failing call on the same thread. Never null; empty before any failure.
#[no_mangle]
pub extern "C" fn diffopts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Load a domain from ASCII map text and precompute its graph and walk
/// spectrum.
///
/// On success writes a handle to `out`; release it with
/// `diffopts_domain_free`.
///
/// # Safety
///
/// `map_text` must point to a NUL-terminated string and `out` to writable
/// pointer storage.
#[no_mangle]
pub unsafe extern "C" fn diffopts_domain_load(
    map_text: *const c_char,
    out: *mut *mut DiffoptsDomain,
) -> c_int {
    if map_text.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    let text = match CStr::from_ptr(map_text).to_str() {
        Ok(t) => t,
        Err(_) => return fail(DIFFOPTS_ERR_INVALID_UTF8, "map text is not valid UTF-8"),
    };
    let built = load_domain(text, None).and_then(|domain| {
        let graph = build_state_graph(&domain)?;
        let wm = walk_matrices(&graph)?;
        let spectrum = decompose(&graph, &wm)?;
        Ok(DiffoptsDomain {
            domain,
            graph,
            spectrum,
        })
    });
    match built {
        Ok(handle) => {
            *out = Box::into_raw(Box::new(handle));
            DIFFOPTS_OK
        }
        Err(e) => fail(DIFFOPTS_ERR_RUNTIME, &e.to_string()),
    }
}

/// Release a domain handle. Null is ignored.
///
/// # Safety
///
/// `domain` must be null or a pointer produced by `diffopts_domain_load`
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn diffopts_domain_free(domain: *mut DiffoptsDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Number of free cells (states) in the domain.
///
/// # Safety
///
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diffopts_domain_num_states(
    domain: *const DiffoptsDomain,
    out: *mut usize,
) -> c_int {
    if domain.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    *out = (*domain).domain.num_states();
    DIFFOPTS_OK
}

/// Discover diffusion options at scale `t`.
///
/// On success writes a handle to `out`; release it with
/// `diffopts_options_free`.
///
/// # Safety
///
/// `domain` must be a live handle and `out` writable pointer storage.
#[no_mangle]
pub unsafe extern "C" fn diffopts_discover(
    domain: *const DiffoptsDomain,
    t: u32,
    out: *mut *mut DiffoptsOptionSet,
) -> c_int {
    if domain.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    match discover_diffusion_options(&(*domain).graph, t) {
        Ok(set) => {
            *out = Box::into_raw(Box::new(DiffoptsOptionSet { set }));
            DIFFOPTS_OK
        }
        Err(e) => fail(DIFFOPTS_ERR_RUNTIME, &e.to_string()),
    }
}

/// Release an option-set handle. Null is ignored.
///
/// # Safety
///
/// `set` must be null or a pointer produced by `diffopts_discover` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn diffopts_options_free(set: *mut DiffoptsOptionSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of options in the set.
///
/// # Safety
///
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diffopts_options_count(
    set: *const DiffoptsOptionSet,
    out: *mut usize,
) -> c_int {
    if set.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    *out = (*set).set.len();
    DIFFOPTS_OK
}

/// Goal state index of option `index`.
///
/// # Safety
///
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diffopts_option_goal(
    set: *const DiffoptsOptionSet,
    index: usize,
    out: *mut usize,
) -> c_int {
    if set.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    let set = &(*set).set;
    match set.options.get(index) {
        Some(opt) => {
            *out = opt.goal;
            DIFFOPTS_OK
        }
        None => fail(
            DIFFOPTS_ERR_RUNTIME,
            &format!("option index {index} out of range (set has {})", set.len()),
        ),
    }
}

/// Evaluate the scale-`t` score field into `out`, one value per state.
///
/// `len` must equal the domain's state count.
///
/// # Safety
///
/// `domain` must be a live handle and `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn diffopts_score_field(
    domain: *const DiffoptsDomain,
    t: u32,
    out: *mut f64,
    len: usize,
) -> c_int {
    if domain.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    let handle = &*domain;
    let n = handle.domain.num_states();
    if len != n {
        return fail(
            DIFFOPTS_ERR_RUNTIME,
            &format!("buffer holds {len} values, domain has {n} states"),
        );
    }
    let field = score_field(&handle.spectrum, t);
    for (i, &v) in field.values.iter().enumerate() {
        *out.add(i) = v;
    }
    DIFFOPTS_OK
}

/// Compute the domain-difficulty index.
///
/// # Safety
///
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diffopts_difficulty(
    domain: *const DiffoptsDomain,
    out: *mut f64,
) -> c_int {
    if domain.is_null() || out.is_null() {
        return fail(DIFFOPTS_ERR_NULL_ARGUMENT, "null argument");
    }
    let handle = &*domain;
    *out = domain_difficulty(&handle.spectrum, &handle.graph);
    DIFFOPTS_OK
}

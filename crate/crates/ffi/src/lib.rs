//! C ABI over `ged-core`.
//!
//! A design is built from `.ged` source into an opaque [`GedDesign`] handle.
//! Every fallible call returns a [`GedStatus`]; on failure the message is
//! available from [`ged_last_error`] on the same thread. Text output comes back
//! as a [`GedBuffer`] owned by the caller and released with
//! [`ged_buffer_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ged_core::model::Design;
use ged_core::{dsl, serve};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GedStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// The source text was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The source did not parse; the message starts with `LINE:COL:`.
    ParseError = 3,
    /// The program parsed but the design could not be built.
    BuildError = 4,
    /// The design is invalid or cannot be turned into a table.
    ServeError = 5,
    /// An internal error was caught at the boundary.
    Panic = 6,
}

/// Opaque handle to a built design.
pub struct GedDesign {
    design: Design,
}

/// Bytes owned by the caller. `data[len]` is always a NUL byte, so text
/// output can be used as a C string when it has no interior NUL.
#[repr(C)]
pub struct GedBuffer {
    pub data: *mut u8,
    pub len: usize,
}

impl GedBuffer {
    fn empty() -> Self {
        GedBuffer {
            data: ptr::null_mut(),
            len: 0,
        }
    }

    fn from_vec(mut bytes: Vec<u8>) -> Self {
        let len = bytes.len();
        bytes.push(0);
        let data = Box::into_raw(bytes.into_boxed_slice()) as *mut u8;
        GedBuffer { data, len }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', "\\0");
    let c = CString::new(text).expect("NUL bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> GedStatus) -> GedStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {what}"));
            GedStatus::Panic
        }
    }
}

/// Parses and builds a design. When `has_seed` is non-zero, `seed` replaces
/// the seed given in the source (it has no effect without an `assign`
/// block). On success `*out` receives a handle to free with
/// [`ged_design_free`].
///
/// # Safety
/// `source` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ged_design_from_source(
    source: *const c_char,
    has_seed: i32,
    seed: u64,
    out: *mut *mut GedDesign,
) -> GedStatus {
    guard(|| {
        if source.is_null() || out.is_null() {
            set_error("null argument");
            return GedStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(source).to_str() {
            Ok(t) => t,
            Err(e) => {
                set_error(format!("source is not valid UTF-8: {e}"));
                return GedStatus::InvalidUtf8;
            }
        };
        let mut spec = match dsl::parse(text) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return GedStatus::ParseError;
            }
        };
        if has_seed != 0 {
            if let Some(assign) = spec.assign_decl.as_mut() {
                assign.seed = Some(seed);
            }
        }
        match dsl::build(&spec) {
            Ok(design) => {
                *out = Box::into_raw(Box::new(GedDesign { design }));
                GedStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                GedStatus::BuildError
            }
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `design` must be null or a handle from [`ged_design_from_source`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ged_design_free(design: *mut GedDesign) {
    if !design.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(design))));
    }
}

unsafe fn with_design(
    design: *const GedDesign,
    out: *mut GedBuffer,
    f: impl FnOnce(&Design) -> Result<Vec<u8>, String>,
) -> GedStatus {
    guard(|| {
        if design.is_null() || out.is_null() {
            set_error("null argument");
            return GedStatus::NullArgument;
        }
        *out = GedBuffer::empty();
        match f(&(*design).design) {
            Ok(bytes) => {
                *out = GedBuffer::from_vec(bytes);
                GedStatus::Ok
            }
            Err(e) => {
                set_error(e);
                GedStatus::ServeError
            }
        }
    })
}

/// Writes the design table as CSV into `*out`.
///
/// # Safety
/// `design` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ged_design_serve_csv(
    design: *const GedDesign,
    out: *mut GedBuffer,
) -> GedStatus {
    with_design(design, out, |d| {
        serve::serve_table(d)
            .map(|t| serve::to_csv(&t))
            .map_err(|e| e.to_string())
    })
}

/// Writes the factor graph in DOT format into `*out`.
///
/// # Safety
/// `design` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ged_design_factor_dot(
    design: *const GedDesign,
    out: *mut GedBuffer,
) -> GedStatus {
    with_design(design, out, |d| Ok(serve::factor_graph_dot(d).into_bytes()))
}

/// Writes the level graph in DOT format into `*out`.
///
/// # Safety
/// `design` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ged_design_level_dot(
    design: *const GedDesign,
    out: *mut GedBuffer,
) -> GedStatus {
    with_design(design, out, |d| Ok(serve::level_graph_dot(d).into_bytes()))
}

/// Stores the number of structural violations in `*count`; zero means the
/// design is valid.
///
/// # Safety
/// `design` must be a live handle and `count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ged_design_violation_count(
    design: *const GedDesign,
    count: *mut usize,
) -> GedStatus {
    guard(|| {
        if design.is_null() || count.is_null() {
            set_error("null argument");
            return GedStatus::NullArgument;
        }
        *count = (*design).design.validate().len();
        GedStatus::Ok
    })
}

/// Message for the last failed call on this thread, or null if the last
/// call succeeded. The pointer stays valid until the next call into this
/// library on the same thread.
#[no_mangle]
pub extern "C" fn ged_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a buffer returned by this library. Empty buffers are ignored.
///
/// # Safety
/// `buffer` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ged_buffer_free(buffer: GedBuffer) {
    if !buffer.data.is_null() {
        let slice = ptr::slice_from_raw_parts_mut(buffer.data, buffer.len + 1);
        drop(Box::from_raw(slice));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ged_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

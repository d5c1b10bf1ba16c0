//! C ABI over the `partmotion` crate.
//!
//! Every fallible call returns a [`PmStatus`]; on failure a message is kept
//! per thread and read with [`pm_last_error_message`]. Objects are opaque
//! handles released with their `_free` function. Strings handed out by the
//! library are released with [`pm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use partmotion::metrics::to_joint_positions;
use partmotion::motion::{MotionSequence, PoseLayout};
use partmotion::pipeline::{FallbackExtractor, GenerationRequest, GenerationTrace, ModelBundle};
use partmotion::semantics::fallback_rule_extractor;
use partmotion::synth::DEFAULT_FPS;
use partmotion::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Shape = 4,
    Data = 5,
    Config = 6,
    Transport = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A trained model bundle loaded from a checkpoint directory.
pub struct PmBundle {
    bundle: ModelBundle,
}

/// One generated motion with the parts it was conditioned on.
pub struct PmMotion {
    trace: GenerationTrace,
    parts: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> PmStatus {
    match e {
        Error::Shape { .. } => PmStatus::Shape,
        Error::InvalidArgument(_) | Error::UnknownPart(_) | Error::InvalidJoint(_) | Error::StepOutOfRange { .. } => {
            PmStatus::InvalidArgument
        }
        Error::NonFinite(_) | Error::EmptyDataset(_) | Error::Data { .. } => PmStatus::Data,
        Error::Config(_) => PmStatus::Config,
        Error::Transport(_) => PmStatus::Transport,
        Error::Io { .. } => PmStatus::Io,
    }
}

struct Fail(PmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PmStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PmStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PmStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(PmStatus::NullPointer, format!("{name} is null")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn pm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn pm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Keyword-based interaction extraction. Writes a newly allocated
/// `part: phrase` listing (or `none`) to `out`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_extract_fallback(text: *const c_char, out: *mut *mut c_char) -> PmStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        *out = to_c_string(fallback_rule_extractor(text).to_response());
        Ok(())
    })
}

/// # Safety
/// `dir` must be a NUL-terminated path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_bundle_load(dir: *const c_char, out: *mut *mut PmBundle) -> PmStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let out = out_arg(out, "out")?;
        let bundle = ModelBundle::load(Path::new(dir))?;
        *out = Box::into_raw(Box::new(PmBundle { bundle }));
        Ok(())
    })
}

/// # Safety
/// `bundle` must be null or a handle from [`pm_bundle_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pm_bundle_free(bundle: *mut PmBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Generates a motion from `text`, extracting parts with the keyword
/// extractor. `frames` of 0 uses the bundle default; a negative
/// `guidance_scale` uses the bundle default.
///
/// # Safety
/// `bundle` must be a live handle, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_generate(
    bundle: *const PmBundle,
    text: *const c_char,
    seed: u64,
    frames: usize,
    guidance_scale: f64,
    deterministic: bool,
    out: *mut *mut PmMotion,
) -> PmStatus {
    guard(|| {
        let b = &bundle.as_ref().ok_or_else(|| Fail(PmStatus::NullPointer, "bundle is null".into()))?.bundle;
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let frames = if frames == 0 { b.config.sample.frames } else { frames };
        let guidance = if guidance_scale < 0.0 { b.config.sample.guidance_scale } else { guidance_scale };
        let mut request = GenerationRequest::new(text, seed, frames).with_guidance(guidance);
        request.stochastic = b.config.sample.stochastic;
        if deterministic {
            request = request.deterministic();
        }
        let trace = b.generate(&request, &FallbackExtractor)?;
        let names: Vec<&str> = trace.mask.parts().iter().map(|p| p.name()).collect();
        let parts = CString::new(names.join(",")).expect("part names have no nul");
        *out = Box::into_raw(Box::new(PmMotion { trace, parts }));
        Ok(())
    })
}

/// # Safety
/// `motion` must be null or a handle from [`pm_generate`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_free(motion: *mut PmMotion) {
    if !motion.is_null() {
        drop(Box::from_raw(motion));
    }
}

/// Number of frames, or 0 for a null handle.
///
/// # Safety
/// `motion` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_frames(motion: *const PmMotion) -> usize {
    motion.as_ref().map_or(0, |m| m.trace.motion.nrows())
}

/// Feature width of one frame, or 0 for a null handle.
///
/// # Safety
/// `motion` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_dim(motion: *const PmMotion) -> usize {
    motion.as_ref().map_or(0, |m| m.trace.motion.ncols())
}

/// Comma-separated interacting part names, empty when none. Owned by the
/// handle.
///
/// # Safety
/// `motion` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_parts(motion: *const PmMotion) -> *const c_char {
    motion.as_ref().map_or(ptr::null(), |m| m.parts.as_ptr())
}

/// Copies the frames row-major into `buf` (frames × dim values).
///
/// # Safety
/// `motion` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_copy(motion: *const PmMotion, buf: *mut f64, len: usize) -> PmStatus {
    guard(|| {
        let m = motion.as_ref().ok_or_else(|| Fail(PmStatus::NullPointer, "motion is null".into()))?;
        let x = &m.trace.motion;
        copy_out(x.iter().copied(), x.len(), buf, len)
    })
}

/// Copies joint positions into `buf` as frames × joints × 3 values.
///
/// # Safety
/// `motion` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_joint_positions(motion: *const PmMotion, buf: *mut f64, len: usize) -> PmStatus {
    guard(|| {
        let m = motion.as_ref().ok_or_else(|| Fail(PmStatus::NullPointer, "motion is null".into()))?;
        let seq = MotionSequence::new(m.trace.motion.clone(), PoseLayout::canonical(), DEFAULT_FPS)?;
        let joints = to_joint_positions(&seq)?;
        let view = joints.view();
        copy_out(view.iter().copied(), view.len(), buf, len)
    })
}

/// The generation trace as JSON, newly allocated.
///
/// # Safety
/// `motion` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_trace_json(motion: *const PmMotion, out: *mut *mut c_char) -> PmStatus {
    guard(|| {
        let m = motion.as_ref().ok_or_else(|| Fail(PmStatus::NullPointer, "motion is null".into()))?;
        let out = out_arg(out, "out")?;
        *out = to_c_string(m.trace.to_json());
        Ok(())
    })
}

unsafe fn copy_out(values: impl Iterator<Item = f64>, n: usize, buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(Fail(PmStatus::NullPointer, "buf is null".into()));
    }
    if len < n {
        return Err(Fail(PmStatus::BufferTooSmall, format!("buffer holds {len} values, need {n}")));
    }
    let dst = std::slice::from_raw_parts_mut(buf, n);
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    Ok(())
}

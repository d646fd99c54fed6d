//! C ABI over the `brickwork` library.
//!
//! Conventions:
//! - Every fallible function returns a [`BwStatus`]; results go through out
//!   pointers that are written only on success.
//! - After a non-`Ok` status, [`bw_last_error_message`] describes the error
//!   on the calling thread.
//! - Objects are opaque handles released with their `_free` function.
//!   Strings returned by the library are released with [`bw_string_free`].
//! - Units are meters, radians and seconds. Poses are unit quaternions
//!   `(w, x, y, z)` plus a translation.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use brickwork::calibration::calibrate;
use brickwork::coverage::{analyze, read_pgm, Mask};
use brickwork::geometry::Pose;
use brickwork::io::{parse_json, to_json, CalibrationOutput, SessionFile};
use brickwork::projector::{project_point, tcp_pose_for_projection, unproject, ProjectorModel};
use brickwork::simulator::{
    run_build, Mode, NoiseModel, Outcome, SimError, TimingModel, WallDesign,
};
use nalgebra::{Vector2, Vector3};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    SolverError = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Rigid transform: unit quaternion `(w, x, y, z)` and translation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwPose {
    pub rotation_wxyz: [f64; 4],
    pub translation: BwVec3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwImagePoint {
    pub u: f64,
    pub v: f64,
    pub in_frame: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwCoverageReport {
    pub region_coverage: f64,
    pub exposed_adhesive: f64,
    pub largest_missed_patch: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwMode {
    OpenLoop = 0,
    Adaptive = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwOutcome {
    Completed = 0,
    CollisionFailure = 1,
    BondGapFailure = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BwBuildSummary {
    pub placed: usize,
    pub unplaced: usize,
    pub outcome: BwOutcome,
}

/// Opaque projector model.
pub struct BwProjector(ProjectorModel);

/// Opaque binary mask.
pub struct BwMask(Mask);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last error message.
fn guard(f: impl FnOnce() -> Result<(), (BwStatus, String)>) -> BwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BwStatus::Panic
        }
    }
}

type Res<T> = Result<T, (BwStatus, String)>;

fn null(what: &str) -> (BwStatus, String) {
    (BwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, what: &str, value: T) -> Res<()> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Boxes `value` into a handle only once `out` is known to be writable.
unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Res<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BwStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Res<T> {
    parse_json(text, Path::new(what))
        .map(|(v, _)| v)
        .map_err(|e| (BwStatus::ParseError, e.to_string()))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

fn vec3(v: &BwVec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

fn bw_vec3(v: &Vector3<f64>) -> BwVec3 {
    BwVec3 {
        x: v.x,
        y: v.y,
        z: v.z,
    }
}

fn to_pose(p: &BwPose) -> Res<Pose> {
    Pose::from_quaternion_wxyz(p.rotation_wxyz, vec3(&p.translation)).ok_or_else(|| {
        (
            BwStatus::InvalidArgument,
            "rotation quaternion has zero or non-finite norm".to_string(),
        )
    })
}

fn from_pose(p: &Pose) -> BwPose {
    BwPose {
        rotation_wxyz: p.quaternion_wxyz(),
        translation: bw_vec3(&p.translation),
    }
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn bw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `out = a * b`.
///
/// # Safety
/// Pointers must be null or valid for reads (`a`, `b`) and writes (`out`).
#[no_mangle]
pub unsafe extern "C" fn bw_pose_compose(
    a: *const BwPose,
    b: *const BwPose,
    out: *mut BwPose,
) -> BwStatus {
    guard(|| {
        let a = to_pose(deref(a, "a")?)?;
        let b = to_pose(deref(b, "b")?)?;
        write(out, "out", from_pose(&a.compose(&b)))
    })
}

/// `out = pose^-1`.
///
/// # Safety
/// Pointers must be null or valid for reads (`pose`) and writes (`out`).
#[no_mangle]
pub unsafe extern "C" fn bw_pose_inverse(pose: *const BwPose, out: *mut BwPose) -> BwStatus {
    guard(|| {
        let p = to_pose(deref(pose, "pose")?)?;
        write(out, "out", from_pose(&p.inverse()))
    })
}

/// Creates a projector model from its TCP-to-projector extrinsic and field
/// of view angles, each in (0, pi).
///
/// # Safety
/// `extrinsic` must be null or readable; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bw_projector_new(
    extrinsic: *const BwPose,
    fov_x: f64,
    fov_y: f64,
    out: *mut *mut BwProjector,
) -> BwStatus {
    guard(|| {
        let e = to_pose(deref(extrinsic, "extrinsic")?)?;
        let m = ProjectorModel::new(e, fov_x, fov_y)
            .map_err(|e| (BwStatus::InvalidArgument, e.to_string()))?;
        put_handle(out, BwProjector(m))
    })
}

/// The reference mount used by the shipped scenarios.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bw_projector_reference(out: *mut *mut BwProjector) -> BwStatus {
    guard(|| put_handle(out, BwProjector(ProjectorModel::reference())))
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bw_projector_free(p: *mut BwProjector) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Reads back a projector model. Any out pointer may be null.
///
/// # Safety
/// `p` must be a live handle; out pointers null or writable.
#[no_mangle]
pub unsafe extern "C" fn bw_projector_get(
    p: *const BwProjector,
    extrinsic: *mut BwPose,
    fov_x: *mut f64,
    fov_y: *mut f64,
) -> BwStatus {
    guard(|| {
        let m = &deref(p, "projector")?.0;
        if !extrinsic.is_null() {
            extrinsic.write(from_pose(&m.extrinsic));
        }
        if !fov_x.is_null() {
            fov_x.write(m.fov_x);
        }
        if !fov_y.is_null() {
            fov_y.write(m.fov_y);
        }
        Ok(())
    })
}

/// Normalized image coordinates of a projector-frame point. Points at or
/// behind the projector plane fail with `InvalidArgument`.
///
/// # Safety
/// `p` must be a live handle; `point` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bw_project_point(
    p: *const BwProjector,
    point: *const BwVec3,
    out: *mut BwImagePoint,
) -> BwStatus {
    guard(|| {
        let m = &deref(p, "projector")?.0;
        let q = project_point(m, &vec3(deref(point, "point")?))
            .map_err(|e| (BwStatus::InvalidArgument, e.to_string()))?;
        write(
            out,
            "out",
            BwImagePoint {
                u: q.u,
                v: q.v,
                in_frame: q.in_frame,
            },
        )
    })
}

/// Projector-frame point at depth `z` that projects to `(u, v)`.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bw_unproject(
    p: *const BwProjector,
    u: f64,
    v: f64,
    z: f64,
    out: *mut BwVec3,
) -> BwStatus {
    guard(|| {
        let m = &deref(p, "projector")?.0;
        write(out, "out", bw_vec3(&unproject(m, u, v, z)))
    })
}

/// TCP pose that places the projector at `projector_pose`.
///
/// # Safety
/// `p` must be a live handle; `projector_pose` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bw_tcp_pose_for_projection(
    p: *const BwProjector,
    projector_pose: *const BwPose,
    out: *mut BwPose,
) -> BwStatus {
    guard(|| {
        let m = &deref(p, "projector")?.0;
        let pose = to_pose(deref(projector_pose, "projector_pose")?)?;
        write(out, "out", from_pose(&tcp_pose_for_projection(m, &pose)))
    })
}

/// Calibrates from a session JSON document. On success `out_model`
/// receives a new projector handle and, when `out_result_json` is not null,
/// the full result document.
///
/// # Safety
/// `session_json` must be a NUL-terminated string; out pointers writable
/// (`out_result_json` may be null).
#[no_mangle]
pub unsafe extern "C" fn bw_calibrate_json(
    session_json: *const c_char,
    out_model: *mut *mut BwProjector,
    out_result_json: *mut *mut c_char,
) -> BwStatus {
    guard(|| {
        let file: SessionFile = parse(c_str(session_json, "session_json")?, "session")?;
        if out_model.is_null() {
            return Err(null("out_model"));
        }
        let r = calibrate(&file.session())
            .map_err(|e| (BwStatus::SolverError, format!("{e:?}: {e}")))?;
        if !out_result_json.is_null() {
            let doc = CalibrationOutput::new(&r, file.ground_truth.as_ref());
            out_result_json.write(to_c_string(to_json(&doc)));
        }
        out_model.write(Box::into_raw(Box::new(BwProjector(r.model))));
        Ok(())
    })
}

/// Runs one build from JSON design, noise and timing documents with the
/// default adaptive configuration. `out_build_json` may be null.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_summary` writable;
/// `out_build_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bw_simulate_json(
    design_json: *const c_char,
    noise_json: *const c_char,
    timing_json: *const c_char,
    mode: BwMode,
    out_summary: *mut BwBuildSummary,
    out_build_json: *mut *mut c_char,
) -> BwStatus {
    guard(|| {
        let design: WallDesign = parse(c_str(design_json, "design_json")?, "design")?;
        let noise: NoiseModel = parse(c_str(noise_json, "noise_json")?, "noise")?;
        let timing: TimingModel = parse(c_str(timing_json, "timing_json")?, "timing")?;
        if out_summary.is_null() {
            return Err(null("out_summary"));
        }
        let mode = match mode {
            BwMode::OpenLoop => Mode::OpenLoop,
            BwMode::Adaptive => Mode::Adaptive,
        };
        let state = run_build(&design, &noise, mode, &timing, &Default::default()).map_err(
            |e| match e {
                SimError::Config(_) => (BwStatus::InvalidArgument, e.to_string()),
                SimError::Model(_) => (BwStatus::SolverError, e.to_string()),
            },
        )?;
        out_summary.write(BwBuildSummary {
            placed: state.placed.len(),
            unplaced: state.unplaced.len(),
            outcome: match state.outcome {
                Outcome::Completed => BwOutcome::Completed,
                Outcome::CollisionFailure { .. } => BwOutcome::CollisionFailure,
                Outcome::BondGapFailure { .. } => BwOutcome::BondGapFailure,
            },
        });
        if !out_build_json.is_null() {
            out_build_json.write(to_c_string(to_json(&state)));
        }
        Ok(())
    })
}

/// Creates an empty mask; `scale` is meters per pixel.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_mask_new(
    width: usize,
    height: usize,
    scale: f64,
    out: *mut *mut BwMask,
) -> BwStatus {
    guard(|| {
        let m = Mask::new(width, height, scale)
            .map_err(|e| (BwStatus::InvalidArgument, e.to_string()))?;
        put_handle(out, BwMask(m))
    })
}

/// Decodes a binary PGM (P5) image; pixels of 128 or more are adhesive.
///
/// # Safety
/// `data` must be readable for `len` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bw_mask_from_pgm(
    data: *const u8,
    len: usize,
    out: *mut *mut BwMask,
) -> BwStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let m = read_pgm(bytes, 1.0).map_err(|e| (BwStatus::ParseError, e.to_string()))?;
        put_handle(out, BwMask(m))
    })
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bw_mask_set(m: *mut BwMask, x: usize, y: usize, value: bool) -> BwStatus {
    guard(|| {
        let m = &mut m.as_mut().ok_or_else(|| null("mask"))?.0;
        if x >= m.width() || y >= m.height() {
            return Err((
                BwStatus::InvalidArgument,
                format!("pixel ({x}, {y}) outside mask"),
            ));
        }
        m.set(x, y, value);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bw_mask_free(m: *mut BwMask) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Scores `mask` against a polygon given as `vertex_count` (x, y) pairs in
/// pixel coordinates.
///
/// # Safety
/// `xy` must be readable for `2 * vertex_count` doubles; `mask` live;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bw_coverage_analyze(
    xy: *const f64,
    vertex_count: usize,
    mask: *const BwMask,
    out: *mut BwCoverageReport,
) -> BwStatus {
    guard(|| {
        if xy.is_null() {
            return Err(null("xy"));
        }
        let flat = std::slice::from_raw_parts(xy, 2 * vertex_count);
        let poly: Vec<Vector2<f64>> = flat.chunks(2).map(|c| Vector2::new(c[0], c[1])).collect();
        let m = &deref(mask, "mask")?.0;
        let r = analyze(&poly, m).map_err(|e| (BwStatus::InvalidArgument, e.to_string()))?;
        write(
            out,
            "out",
            BwCoverageReport {
                region_coverage: r.region_coverage,
                exposed_adhesive: r.exposed_adhesive,
                largest_missed_patch: r.largest_missed_patch,
            },
        )
    })
}

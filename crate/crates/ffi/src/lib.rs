//! C ABI over the `proprio` library.
//!
//! Objects are opaque handles created by `*_new`, `*_load` or `*_train`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`ProprioStatus`]; on failure [`proprio_last_error`] holds a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use proprio::babble::{generate_babble, BabbleConfig};
use proprio::codec::{build_codec, CodecSpec, Family, PopulationCodec};
use proprio::dataset::{load_dataset, load_dataset_with, save_dataset, Dataset};
use proprio::decode::{decode_vector, Bandwidth, KdeConfig};
use proprio::experiment::demo_inconsistency;
use proprio::kinematics::{default_joints, JointSpec};
use proprio::metrics::evaluate;
use proprio::som::{init_consistent, train, SomMap, TrainConfig};
use proprio::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProprioStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input outside a joint range or function domain.
    Domain = 3,
    Undecodable = 4,
    WidthMismatch = 5,
    Io = 6,
    Format = 7,
    /// Output buffer shorter than required.
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProprioFamily {
    Normalized = 0,
    Linear = 1,
    Sigmoid = 2,
    Gaussian = 3,
}

impl From<ProprioFamily> for Family {
    fn from(f: ProprioFamily) -> Family {
        match f {
            ProprioFamily::Normalized => Family::Normalized,
            ProprioFamily::Linear => Family::Linear,
            ProprioFamily::Sigmoid => Family::Sigmoid,
            ProprioFamily::Gaussian => Family::Gaussian,
        }
    }
}

/// Decoder settings. A bandwidth of zero or less selects Silverman's rule.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProprioKdeParams {
    pub bandwidth: f64,
    pub grid_resolution: f64,
    pub activation_floor: f64,
}

impl From<ProprioKdeParams> for KdeConfig {
    fn from(p: ProprioKdeParams) -> KdeConfig {
        KdeConfig {
            bandwidth: if p.bandwidth > 0.0 {
                Bandwidth::Fixed(p.bandwidth)
            } else {
                Bandwidth::Auto
            },
            grid_resolution: p.grid_resolution,
            activation_floor: p.activation_floor,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProprioMetrics {
    pub qe_encoded: f64,
    pub qe_angle: f64,
    pub topographic_error: f64,
    /// NaN when undefined.
    pub neighbor_coherence_ratio: f64,
    pub undecodable_units: usize,
    pub excluded_samples: usize,
}

/// Joint-angle dataset.
pub struct ProprioDataset(Dataset);

/// Tuning-curve codec bound to a joint set.
pub struct ProprioCodec(PopulationCodec);

/// Trained or initialized map.
pub struct ProprioMap(SomMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ProprioStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn status_of(e: &Error) -> ProprioStatus {
    match e {
        Error::InvalidArgument(_) | Error::Degenerate(_) | Error::EmptyDataset => ProprioStatus::InvalidArgument,
        Error::Domain { .. } | Error::Saturated(_) | Error::Unreliable { .. } | Error::OutOfRange { .. } => {
            ProprioStatus::Domain
        }
        Error::Undecodable { .. } => ProprioStatus::Undecodable,
        Error::WidthMismatch { .. } => ProprioStatus::WidthMismatch,
        Error::Io { .. } => ProprioStatus::Io,
        Error::Format { .. } | Error::Json(_) | Error::Csv(_) => ProprioStatus::Format,
        Error::Dof { source, .. } | Error::Row { source, .. } => status_of(source),
        _ => ProprioStatus::Other,
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ProprioStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ProprioStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            ProprioStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ProprioStatus::NullPointer, format!("{what} is null"))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(ProprioStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Failure(
            ProprioStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn proprio_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn proprio_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn proprio_kde_params_default() -> ProprioKdeParams {
    let d = KdeConfig::default();
    ProprioKdeParams {
        bandwidth: match d.bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Auto => 0.0,
        },
        grid_resolution: d.grid_resolution,
        activation_floor: d.activation_floor,
    }
}

/// Generates `duration_s` seconds of babbling with the shipped arm and head.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_babble(seed: u64, duration_s: f64, out: *mut *mut ProprioDataset) -> ProprioStatus {
    guard(|| {
        let ds = generate_babble(&BabbleConfig::with_seed(seed, duration_s))?;
        put(out, ProprioDataset(ds))
    })
}

/// Loads a dataset CSV. `joints_path` may be NULL for the shipped joint set.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_dataset_load(
    path: *const c_char,
    joints_path: *const c_char,
    out: *mut *mut ProprioDataset,
) -> ProprioStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let ds = if joints_path.is_null() {
            load_dataset_with(&path, default_joints())?
        } else {
            load_dataset(&path, path_arg(joints_path, "joints_path")?)?
        };
        put(out, ProprioDataset(ds))
    })
}

/// # Safety
/// `ds` must be a live dataset handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn proprio_dataset_save(ds: *const ProprioDataset, path: *const c_char) -> ProprioStatus {
    guard(|| {
        let ds = obj(ds, "dataset")?;
        save_dataset(&ds.0, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of samples, 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn proprio_dataset_len(ds: *const ProprioDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Joints per sample, 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn proprio_dataset_dim(ds: *const ProprioDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// Copies sample `t` into `out`, which holds `len` values.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn proprio_dataset_row(
    ds: *const ProprioDataset,
    t: usize,
    out: *mut f64,
    len: usize,
) -> ProprioStatus {
    guard(|| {
        let ds = &obj(ds, "dataset")?.0;
        if t >= ds.len() {
            return Err(Failure(
                ProprioStatus::InvalidArgument,
                format!("row {t} out of range for {} samples", ds.len()),
            ));
        }
        slice_out(out, len, ds.dim(), "out")?.copy_from_slice(ds.row(t));
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn proprio_dataset_free(ds: *mut ProprioDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn codec_spec(family: ProprioFamily, curves: usize) -> CodecSpec {
    match family {
        ProprioFamily::Normalized => CodecSpec::normalized(),
        f => CodecSpec::fixed_count(f.into(), curves),
    }
}

/// Codec for the joints of `ds`; `curves` is ignored for the normalized family.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_for_dataset(
    ds: *const ProprioDataset,
    family: ProprioFamily,
    curves: usize,
    out: *mut *mut ProprioCodec,
) -> ProprioStatus {
    guard(|| {
        let ds = obj(ds, "dataset")?;
        put(out, ProprioCodec(build_codec(codec_spec(family, curves), ds.0.joints())?))
    })
}

/// Codec for a single joint spanning `[min_deg, max_deg]`.
///
/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_single(
    family: ProprioFamily,
    curves: usize,
    min_deg: f64,
    max_deg: f64,
    out: *mut *mut ProprioCodec,
) -> ProprioStatus {
    guard(|| {
        let joint = JointSpec::new("joint", min_deg, max_deg)?;
        put(out, ProprioCodec(build_codec(codec_spec(family, curves), &[joint])?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_load(path: *const c_char, out: *mut *mut ProprioCodec) -> ProprioStatus {
    guard(|| put(out, ProprioCodec(PopulationCodec::load(path_arg(path, "path")?)?)))
}

/// # Safety
/// `codec` must be a live codec handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_save(codec: *const ProprioCodec, path: *const c_char) -> ProprioStatus {
    guard(|| {
        obj(codec, "codec")?.0.save(path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Encoded vector length, 0 for NULL.
///
/// # Safety
/// `codec` must be NULL or a live codec handle.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_width(codec: *const ProprioCodec) -> usize {
    codec.as_ref().map_or(0, |c| c.0.width())
}

/// Joints covered, 0 for NULL.
///
/// # Safety
/// `codec` must be NULL or a live codec handle.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_dof(codec: *const ProprioCodec) -> usize {
    codec.as_ref().map_or(0, |c| c.0.dof())
}

/// Encodes one posture of `dof` angles into `out` of capacity `len`.
///
/// # Safety
/// `posture` must be valid for `dof` reads and `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_encode(
    codec: *const ProprioCodec,
    posture: *const f64,
    dof: usize,
    out: *mut f64,
    len: usize,
) -> ProprioStatus {
    guard(|| {
        let codec = &obj(codec, "codec")?.0;
        let v = codec.encode_sample(slice_in(posture, dof, "posture")?)?;
        slice_out(out, len, codec.width(), "out")?.copy_from_slice(&v.values);
        Ok(())
    })
}

/// Decodes an encoded vector of `width` values into `out` of capacity `len`.
///
/// # Safety
/// `code` must be valid for `width` reads and `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_decode(
    codec: *const ProprioCodec,
    code: *const f64,
    width: usize,
    params: ProprioKdeParams,
    out: *mut f64,
    len: usize,
) -> ProprioStatus {
    guard(|| {
        let codec = &obj(codec, "codec")?.0;
        let angles = decode_vector(codec, slice_in(code, width, "code")?, &params.into())?;
        slice_out(out, len, codec.dof(), "out")?.copy_from_slice(&angles);
        Ok(())
    })
}

/// # Safety
/// `codec` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn proprio_codec_free(codec: *mut ProprioCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Consistent initialization followed by training with default rates.
///
/// # Safety
/// `codec` and `ds` must be live handles and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_train(
    codec: *const ProprioCodec,
    ds: *const ProprioDataset,
    rows: usize,
    cols: usize,
    cycles: usize,
    shuffle: bool,
    seed: u64,
    out: *mut *mut ProprioMap,
) -> ProprioStatus {
    guard(|| {
        let codec = &obj(codec, "codec")?.0;
        let ds = &obj(ds, "dataset")?.0;
        let encoded = codec.encode_dataset(ds)?;
        let cfg = TrainConfig {
            cycles,
            shuffle,
            seed,
            ..TrainConfig::default()
        };
        let map = train(init_consistent(rows, cols, codec, seed)?, &encoded, &cfg)?;
        put(out, ProprioMap(map))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_load(path: *const c_char, out: *mut *mut ProprioMap) -> ProprioStatus {
    guard(|| put(out, ProprioMap(SomMap::load(path_arg(path, "path")?)?)))
}

/// # Safety
/// `map` must be a live map handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_save(map: *const ProprioMap, path: *const c_char) -> ProprioStatus {
    guard(|| {
        obj(map, "map")?.0.save(path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of units, 0 for NULL.
///
/// # Safety
/// `map` must be NULL or a live map handle.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_units(map: *const ProprioMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.units())
}

/// Weight vector length, 0 for NULL.
///
/// # Safety
/// `map` must be NULL or a live map handle.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_width(map: *const ProprioMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.width())
}

/// Copies the weights of unit `k` into `out` of capacity `len`.
///
/// # Safety
/// `map` must be a live map handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_unit(map: *const ProprioMap, k: usize, out: *mut f64, len: usize) -> ProprioStatus {
    guard(|| {
        let map = &obj(map, "map")?.0;
        if k >= map.units() {
            return Err(Failure(
                ProprioStatus::InvalidArgument,
                format!("unit {k} out of range for {} units", map.units()),
            ));
        }
        slice_out(out, len, map.width(), "out")?.copy_from_slice(map.unit(k));
        Ok(())
    })
}

/// Scores a map on a dataset using the codec stored in the map.
///
/// # Safety
/// `map` and `ds` must be live handles and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_evaluate(
    map: *const ProprioMap,
    ds: *const ProprioDataset,
    params: ProprioKdeParams,
    out: *mut ProprioMetrics,
) -> ProprioStatus {
    guard(|| {
        let map = &obj(map, "map")?.0;
        let ds = &obj(ds, "dataset")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let codec = map
            .codec
            .as_ref()
            .ok_or_else(|| Failure(ProprioStatus::InvalidArgument, "map stores no codec".into()))?;
        let encoded = codec.encode_dataset(ds)?;
        let seed = map.train_config.map_or(0, |c| c.seed);
        let m = evaluate(map, codec, ds, &encoded, &params.into(), seed)?;
        *out = ProprioMetrics {
            qe_encoded: m.qe_encoded,
            qe_angle: m.qe_angle,
            topographic_error: m.topographic_error,
            neighbor_coherence_ratio: m.neighbor_coherence_ratio.unwrap_or(f64::NAN),
            undecodable_units: m.undecodable_units.len(),
            excluded_samples: m.excluded_samples,
        };
        Ok(())
    })
}

/// # Safety
/// `map` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn proprio_map_free(map: *mut ProprioMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Distance to the nearest valid code after moving the code of `from_deg`
/// toward the code of `to_deg` by `alpha`, on one joint.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn proprio_inconsistency_drift(
    family: ProprioFamily,
    curves: usize,
    min_deg: f64,
    max_deg: f64,
    from_deg: f64,
    to_deg: f64,
    alpha: f64,
    out: *mut f64,
) -> ProprioStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let joint = JointSpec::new("joint", min_deg, max_deg)?;
        let report = demo_inconsistency(codec_spec(family, curves), joint, from_deg, to_deg, alpha)?;
        *out = report.drift;
        Ok(())
    })
}

//! C ABI for neuromorph.
//!
//! Objects cross the boundary as opaque handles created by `nm_*_new`,
//! `nm_*_parse` or a pipeline call, and released with the matching
//! `nm_*_free`. Every fallible call returns an [`NmStatus`]; on failure
//! [`nm_last_error`] describes the problem. Output parameters are written
//! only on success, except where a function documents otherwise.
//!
//! Handles are not synchronized. A handle may move between threads but must
//! not be used from two threads at once. The last-error message is per
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use neuromorph::embed::graph_spectrum;
use neuromorph::geometry::{
    chamfer_distance, estimate_normals, hausdorff_distance, parse_point_cloud, synth_shape, CdMode, CloudFormat,
    ShapeKind, SynthShapeSpec,
};
use neuromorph::links::{build_mesh, GaeConfig, LinkConfig, SkeletonMesh};
use neuromorph::skeleton::{skeletonize, SkeletonBall, SkeletonOptConfig};
use neuromorph::skelgraph::{branches, default_min_branch_len, from_mesh, neuron_length, parse_swc, SkeletonGraph};
use neuromorph::{Error, ErrorClass, Point3, PointCloud};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    /// Null pointer, short buffer or malformed string argument.
    InvalidArgument = 1,
    /// Invalid parameter value.
    Config = 2,
    /// Unreadable, malformed or unsuitable input data.
    Input = 3,
    /// Training diverged or produced non-finite values.
    Numeric = 4,
    /// Path search ran out of budget.
    Budget = 5,
    /// Internal panic caught at the boundary.
    Panic = 6,
}

/// Text formats accepted by [`nm_cloud_parse`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmCloudFormat {
    Xyz = 0,
    PlyAscii = 1,
    Off = 2,
}

/// Surface samples with optional unit normals.
pub struct NmPointCloud(PointCloud);

/// Skeleton balls without connectivity.
pub struct NmSkeleton(Vec<SkeletonBall>);

/// Weighted skeleton graph.
pub struct NmGraph(SkeletonGraph);

/// Skeleton optimization settings. Start from
/// [`nm_skeleton_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NmSkeletonConfig {
    pub n_skeleton_points: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub lambda_r: f64,
    pub lambda_n: f64,
    pub sphere_samples: usize,
    pub input_samples: usize,
    pub init_bandwidth: f64,
    pub init_noise: f64,
    pub seed: u64,
}

/// Link prediction settings. Start from [`nm_link_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NmLinkConfig {
    pub k: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub threshold: f64,
    pub ensure_connected: bool,
}

impl From<SkeletonOptConfig> for NmSkeletonConfig {
    fn from(c: SkeletonOptConfig) -> Self {
        NmSkeletonConfig {
            n_skeleton_points: c.n_skeleton_points,
            iterations: c.iterations,
            learning_rate: c.learning_rate,
            lambda_r: c.lambda_r,
            lambda_n: c.lambda_n,
            sphere_samples: c.sphere_samples,
            input_samples: c.input_samples,
            init_bandwidth: c.init_bandwidth,
            init_noise: c.init_noise,
            seed: c.seed,
        }
    }
}

impl From<NmSkeletonConfig> for SkeletonOptConfig {
    fn from(c: NmSkeletonConfig) -> Self {
        SkeletonOptConfig {
            n_skeleton_points: c.n_skeleton_points,
            iterations: c.iterations,
            learning_rate: c.learning_rate,
            lambda_r: c.lambda_r,
            lambda_n: c.lambda_n,
            sphere_samples: c.sphere_samples,
            input_samples: c.input_samples,
            init_bandwidth: c.init_bandwidth,
            init_noise: c.init_noise,
            seed: c.seed,
        }
    }
}

impl From<LinkConfig> for NmLinkConfig {
    fn from(c: LinkConfig) -> Self {
        NmLinkConfig {
            k: c.k,
            hidden1: c.gae.hidden.0,
            hidden2: c.gae.hidden.1,
            epochs: c.gae.epochs,
            learning_rate: c.gae.learning_rate,
            seed: c.gae.seed,
            threshold: c.threshold,
            ensure_connected: c.ensure_connected,
        }
    }
}

impl From<NmLinkConfig> for LinkConfig {
    fn from(c: NmLinkConfig) -> Self {
        LinkConfig {
            k: c.k,
            gae: GaeConfig {
                hidden: (c.hidden1, c.hidden2),
                epochs: c.epochs,
                learning_rate: c.learning_rate,
                seed: c.seed,
            },
            threshold: c.threshold,
            ensure_connected: c.ensure_connected,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Argument(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(class: ErrorClass) -> NmStatus {
    match class {
        ErrorClass::Config => NmStatus::Config,
        ErrorClass::Input => NmStatus::Input,
        ErrorClass::Numeric => NmStatus::Numeric,
        ErrorClass::Budget => NmStatus::Budget,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmStatus::Ok,
        Ok(Err(Failure::Argument(m))) => {
            set_last_error(m);
            NmStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(e.class())
        }
        Err(payload) => {
            let m = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {m}"));
            NmStatus::Panic
        }
    }
}

fn arg(what: &str) -> Failure {
    Failure::Argument(format!("{what} must not be null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| arg(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(arg(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Argument(format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(arg(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn fill(out: *mut f64, cap: usize, values: &[f64]) -> Result<(), Failure> {
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(arg("output buffer"));
    }
    if cap < values.len() {
        return Err(Failure::Argument(format!(
            "output buffer holds {cap} values, {} needed",
            values.len()
        )));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(arg("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(arg("output handle"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

fn triples(flat: &[f64]) -> Vec<Point3> {
    flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect()
}

fn centers(balls: &[SkeletonBall]) -> Vec<Point3> {
    balls.iter().map(|b| b.center).collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failure on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a cloud from `n` xyz triples. `normals` may be null.
///
/// # Safety
/// `points` (and `normals` when non-null) must point to `3 * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_new(
    points: *const f64,
    normals: *const f64,
    n: usize,
    out: *mut *mut NmPointCloud,
) -> NmStatus {
    guard(|| {
        let pts = triples(slice(points, 3 * n, "points")?);
        let cloud = if normals.is_null() {
            PointCloud::new(pts)?
        } else {
            PointCloud::with_normals(pts, triples(slice(normals, 3 * n, "normals")?))?
        };
        put_handle(out, NmPointCloud(cloud))
    })
}

/// Parses xyz, ASCII PLY or OFF text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_parse(
    text: *const c_char,
    format: NmCloudFormat,
    out: *mut *mut NmPointCloud,
) -> NmStatus {
    guard(|| {
        let format = match format {
            NmCloudFormat::Xyz => CloudFormat::Xyz,
            NmCloudFormat::PlyAscii => CloudFormat::PlyAscii,
            NmCloudFormat::Off => CloudFormat::Off,
        };
        let cloud = parse_point_cloud(c_str(text, "text")?, format)?;
        put_handle(out, NmPointCloud(cloud))
    })
}

/// Samples `count` points with normals from a synthetic shape at its
/// default dimensions: sphere, capsule, ellipsoid, torus, ybranch or
/// crescent.
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_synth(
    kind: *const c_char,
    count: usize,
    seed: u64,
    out: *mut *mut NmPointCloud,
) -> NmStatus {
    guard(|| {
        let kind: ShapeKind = c_str(kind, "kind")?.parse()?;
        let cloud = synth_shape(&SynthShapeSpec::new(kind, count), seed)?;
        put_handle(out, NmPointCloud(cloud))
    })
}

/// Number of points, 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_len(cloud: *const NmPointCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Whether the cloud carries normals.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_has_normals(cloud: *const NmPointCloud) -> bool {
    cloud.as_ref().is_some_and(|c| c.0.normals().is_some())
}

/// Copies `3 * len` coordinates into `out`, which holds `cap` doubles.
///
/// # Safety
/// `cloud` must be a live handle and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_points(cloud: *const NmPointCloud, out: *mut f64, cap: usize) -> NmStatus {
    guard(|| {
        let c = handle(cloud, "cloud")?;
        let flat: Vec<f64> = c.0.points().iter().flat_map(|p| p.to_array()).collect();
        fill(out, cap, &flat)
    })
}

/// New cloud with normals estimated from `k` nearest neighbors.
///
/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_estimate_normals(
    cloud: *const NmPointCloud,
    k: usize,
    out: *mut *mut NmPointCloud,
) -> NmStatus {
    guard(|| {
        let c = handle(cloud, "cloud")?;
        put_handle(out, NmPointCloud(estimate_normals(&c.0, k)?))
    })
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nm_cloud_free(cloud: *mut NmPointCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

#[no_mangle]
pub extern "C" fn nm_skeleton_config_default() -> NmSkeletonConfig {
    SkeletonOptConfig::default().into()
}

/// Fits skeleton balls to a cloud with normals. Balls are returned in the
/// cloud's coordinate frame.
///
/// # Safety
/// `cloud` must be a live handle, `config` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_skeletonize(
    cloud: *const NmPointCloud,
    config: *const NmSkeletonConfig,
    out: *mut *mut NmSkeleton,
) -> NmStatus {
    guard(|| {
        let c = handle(cloud, "cloud")?;
        let cfg: SkeletonOptConfig = config.as_ref().map_or_else(SkeletonOptConfig::default, |&c| c.into());
        let res = skeletonize(&c.0, &cfg)?;
        put_handle(out, NmSkeleton(res.balls))
    })
}

/// Builds a skeleton from `n` `x y z r` quadruples.
///
/// # Safety
/// `balls` must point to `4 * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_skeleton_new(balls: *const f64, n: usize, out: *mut *mut NmSkeleton) -> NmStatus {
    guard(|| {
        let flat = slice(balls, 4 * n, "balls")?;
        let mut v = Vec::with_capacity(n);
        for q in flat.chunks_exact(4) {
            if !q.iter().all(|x| x.is_finite()) || q[3] < 0.0 {
                return Err(Failure::Core(Error::Parameter(format!(
                    "ball {} needs finite coordinates and a non-negative radius",
                    v.len()
                ))));
            }
            v.push(SkeletonBall::new(Point3::new(q[0], q[1], q[2]), q[3]));
        }
        put_handle(out, NmSkeleton(v))
    })
}

/// Number of balls, 0 for a null handle.
///
/// # Safety
/// `skeleton` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_skeleton_len(skeleton: *const NmSkeleton) -> usize {
    skeleton.as_ref().map_or(0, |s| s.0.len())
}

/// Copies `4 * len` values (`x y z r` per ball) into `out`.
///
/// # Safety
/// `skeleton` must be a live handle and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_skeleton_balls(skeleton: *const NmSkeleton, out: *mut f64, cap: usize) -> NmStatus {
    guard(|| {
        let s = handle(skeleton, "skeleton")?;
        let flat: Vec<f64> =
            s.0.iter()
                .flat_map(|b| [b.center.x, b.center.y, b.center.z, b.radius])
                .collect();
        fill(out, cap, &flat)
    })
}

/// Mean Chamfer distance between the ball centers of two skeletons.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_skeleton_chamfer(a: *const NmSkeleton, b: *const NmSkeleton, out: *mut f64) -> NmStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        put(out, chamfer_distance(&centers(&a.0), &centers(&b.0), CdMode::Mean)?)
    })
}

/// Hausdorff distance between the ball centers of two skeletons.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_skeleton_hausdorff(a: *const NmSkeleton, b: *const NmSkeleton, out: *mut f64) -> NmStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        put(out, hausdorff_distance(&centers(&a.0), &centers(&b.0))?)
    })
}

/// # Safety
/// `skeleton` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nm_skeleton_free(skeleton: *mut NmSkeleton) {
    if !skeleton.is_null() {
        drop(Box::from_raw(skeleton));
    }
}

#[no_mangle]
pub extern "C" fn nm_link_config_default() -> NmLinkConfig {
    LinkConfig::default().into()
}

/// Connects skeleton balls into a graph. `surface` may be null.
///
/// # Safety
/// `skeleton` must be a live handle, `surface` and `config` null or valid,
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_link(
    skeleton: *const NmSkeleton,
    surface: *const NmPointCloud,
    config: *const NmLinkConfig,
    out: *mut *mut NmGraph,
) -> NmStatus {
    guard(|| {
        let s = handle(skeleton, "skeleton")?;
        let cfg: LinkConfig = config.as_ref().map_or_else(LinkConfig::default, |&c| c.into());
        let surface = surface.as_ref().map(|c| &c.0);
        let mesh = build_mesh(&s.0, surface, None, &cfg)?;
        put_handle(out, NmGraph(from_mesh(&mesh.balls, &mesh.adjacency)?))
    })
}

/// Parses SWC text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_parse_swc(text: *const c_char, out: *mut *mut NmGraph) -> NmStatus {
    guard(|| put_handle(out, NmGraph(parse_swc(c_str(text, "text")?)?)))
}

/// Parses skeleton-mesh text: `n m`, then `x y z r` per ball, then `i j`
/// per edge.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_parse_mesh(text: *const c_char, out: *mut *mut NmGraph) -> NmStatus {
    guard(|| {
        let mesh = SkeletonMesh::parse(c_str(text, "text")?)?;
        put_handle(out, NmGraph(from_mesh(&mesh.balls, &mesh.adjacency)?))
    })
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_node_count(graph: *const NmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_nodes())
}

/// Number of edges, 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_edge_count(graph: *const NmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_edges())
}

/// Longest simple path length. When the search budget runs out the call
/// returns [`NmStatus::Budget`] and still writes the best length found.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_neuron_length(graph: *const NmGraph, budget: u64, out: *mut f64) -> NmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        if out.is_null() {
            return Err(arg("output pointer"));
        }
        match neuron_length(&g.0, budget) {
            Ok((len, _)) => put(out, len),
            Err(Error::BudgetExceeded { budget, best }) => {
                out.write(best.length);
                Err(Failure::Core(Error::BudgetExceeded { budget, best }))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Number of branches off the trunk. A negative `min_branch_len` selects
/// twice the median edge weight.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_branch_count(
    graph: *const NmGraph,
    min_branch_len: f64,
    budget: u64,
    out: *mut usize,
) -> NmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        let min = if min_branch_len < 0.0 {
            default_min_branch_len(&g.0)
        } else {
            min_branch_len
        };
        put(out, branches(&g.0, min, budget)?.count)
    })
}

/// Writes the `d` largest weighted-adjacency eigenvalues in descending
/// order, zero padded.
///
/// # Safety
/// `graph` must be a live handle; `out` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_spectrum(graph: *const NmGraph, d: usize, out: *mut f64) -> NmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        fill(out, d, &graph_spectrum(&g.0, d)?)
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nm_graph_free(graph: *mut NmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

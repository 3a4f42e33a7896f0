//! C ABI for the planfolio toolkit: opaque handles, status codes, and a
//! thread-local last-error message. The header is generated into
//! `include/planfolio.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use planfolio::env_gen::{generate_arm_problem, generate_nav_problem};
use planfolio::gnn::{checkpoint, Model, Task};
use planfolio::planners::{measure, plan, PlannerId, PlannerParams};
use planfolio::predict::{predict_runtime, select_planners};
use planfolio::problem::Problem;

pub const PF_ABI_VERSION: u32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(msg).ok();
    });
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    InvalidArgument = 1,
    MissingArtifact = 2,
    RuntimeError = 3,
    NullPointer = 4,
}

fn status_of(err: &planfolio::Error) -> PfStatus {
    use planfolio::Error;
    match err {
        Error::InvalidArgument(_) | Error::InvalidConfiguration(_) => PfStatus::InvalidArgument,
        Error::MissingArtifact(_) | Error::MissingRecord { .. } => PfStatus::MissingArtifact,
        _ => PfStatus::RuntimeError,
    }
}

/// Planner identifiers (stable ABI values).
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum PfPlanner {
    Rrt = 0,
    RrtConnect = 1,
    Trrt = 2,
    LazyRrt = 3,
}

impl From<PfPlanner> for PlannerId {
    fn from(p: PfPlanner) -> PlannerId {
        match p {
            PfPlanner::Rrt => PlannerId::Rrt,
            PfPlanner::RrtConnect => PlannerId::RrtConnect,
            PfPlanner::Trrt => PlannerId::Trrt,
            PfPlanner::LazyRrt => PlannerId::LazyRrt,
        }
    }
}

impl From<PlannerId> for PfPlanner {
    fn from(p: PlannerId) -> PfPlanner {
        match p {
            PlannerId::Rrt => PfPlanner::Rrt,
            PlannerId::RrtConnect => PfPlanner::RrtConnect,
            PlannerId::Trrt => PfPlanner::Trrt,
            PlannerId::LazyRrt => PfPlanner::LazyRrt,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum PfOutcome {
    Solved = 0,
    Timeout = 1,
}

/// Planner parameters; obtain defaults from `pf_planner_params_default`.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct PfPlannerParams {
    pub step_size: f64,
    pub goal_bias: f64,
    pub timeout_s: f64,
    pub resolution: f64,
    pub trrt_temp_init: f64,
    pub trrt_temp_rate: f64,
    pub rng_seed: u64,
}

impl From<&PfPlannerParams> for PlannerParams {
    fn from(p: &PfPlannerParams) -> PlannerParams {
        PlannerParams {
            step_size: p.step_size,
            goal_bias: p.goal_bias,
            timeout_s: p.timeout_s,
            resolution: p.resolution,
            trrt_temp_init: p.trrt_temp_init,
            trrt_temp_rate: p.trrt_temp_rate,
            rng_seed: p.rng_seed,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy)]
pub struct PfPlanResult {
    pub outcome: PfOutcome,
    pub wall_time_s: f64,
    pub iterations: u64,
    /// Deterministic work measure (box-pair collision tests).
    pub checks: u64,
}

#[repr(C)]
#[derive(Clone, Copy)]
pub struct PfRuntimeSummary {
    /// Mean completion time; timeouts contribute the timeout value.
    pub expected_time_s: f64,
    pub timeout_count: u64,
    pub trials: u64,
}

/// Opaque motion-planning problem handle.
pub struct PfProblem {
    inner: Problem,
}

/// Opaque predictor handle (a loaded checkpoint).
pub struct PfModel {
    inner: Model,
}

#[no_mangle]
pub extern "C" fn pf_abi_version() -> u32 {
    PF_ABI_VERSION
}

/// Message for the most recent error on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

#[no_mangle]
pub extern "C" fn pf_planner_params_default() -> PfPlannerParams {
    let p = PlannerParams::default();
    PfPlannerParams {
        step_size: p.step_size,
        goal_bias: p.goal_bias,
        timeout_s: p.timeout_s,
        resolution: p.resolution,
        trrt_temp_init: p.trrt_temp_init,
        trrt_temp_rate: p.trrt_temp_rate,
        rng_seed: p.rng_seed,
    }
}

/// Generates a seeded narrow-gap navigation problem.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle that must
/// be released with `pf_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn pf_problem_generate_nav(seed: u64, out: *mut *mut PfProblem) -> PfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return PfStatus::NullPointer;
    }
    let problem = generate_nav_problem(seed);
    *out = Box::into_raw(Box::new(PfProblem { inner: problem }));
    PfStatus::Ok
}

/// Generates a seeded planar-arm problem.
///
/// # Safety
/// As `pf_problem_generate_nav`; `n_links` must be at least 2.
#[no_mangle]
pub unsafe extern "C" fn pf_problem_generate_arm(
    seed: u64,
    n_links: usize,
    out: *mut *mut PfProblem,
) -> PfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return PfStatus::NullPointer;
    }
    if n_links < 2 {
        set_error("n_links must be at least 2");
        return PfStatus::InvalidArgument;
    }
    match generate_arm_problem(seed, n_links) {
        Ok(problem) => {
            *out = Box::into_raw(Box::new(PfProblem { inner: problem }));
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Parses a problem from its JSON form (one `problems.jsonl` line).
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn pf_problem_from_json(
    json: *const c_char,
    out: *mut *mut PfProblem,
) -> PfStatus {
    if json.is_null() || out.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    let Ok(text) = CStr::from_ptr(json).to_str() else {
        set_error("json is not valid UTF-8");
        return PfStatus::InvalidArgument;
    };
    match serde_json::from_str::<Problem>(text) {
        Ok(problem) => {
            *out = Box::into_raw(Box::new(PfProblem { inner: problem }));
            PfStatus::Ok
        }
        Err(e) => {
            set_error(format!("problem json: {e}"));
            PfStatus::InvalidArgument
        }
    }
}

/// Serializes a problem to JSON; free the string with `pf_string_free`.
///
/// # Safety
/// `problem` must be a live handle from this library; `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn pf_problem_to_json(
    problem: *const PfProblem,
    out_json: *mut *mut c_char,
) -> PfStatus {
    if problem.is_null() || out_json.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    match serde_json::to_string(&(*problem).inner) {
        Ok(json) => {
            *out_json = CString::new(json).expect("no interior NULs").into_raw();
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            PfStatus::RuntimeError
        }
    }
}

/// # Safety
/// `problem` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn pf_problem_free(problem: *mut PfProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs one planner once. Deterministic given `params->rng_seed`
/// (`wall_time_s` is measured).
///
/// # Safety
/// All pointers must be valid; `problem` a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_plan(
    problem: *const PfProblem,
    planner: PfPlanner,
    params: *const PfPlannerParams,
    out: *mut PfPlanResult,
) -> PfStatus {
    if problem.is_null() || params.is_null() || out.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    match plan(&(*problem).inner, planner.into(), &(&*params).into()) {
        Ok(r) => {
            *out = PfPlanResult {
                outcome: match r.outcome {
                    planfolio::planners::Outcome::Solved => PfOutcome::Solved,
                    planfolio::planners::Outcome::Timeout => PfOutcome::Timeout,
                },
                wall_time_s: r.wall_time_s,
                iterations: r.iterations,
                checks: r.checks,
            };
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Runs seeded repeated trials and aggregates the expected completion time.
///
/// # Safety
/// As `pf_plan`; `trials` must be at least 1.
#[no_mangle]
pub unsafe extern "C" fn pf_measure(
    problem: *const PfProblem,
    planner: PfPlanner,
    trials: usize,
    params: *const PfPlannerParams,
    out: *mut PfRuntimeSummary,
) -> PfStatus {
    if problem.is_null() || params.is_null() || out.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    if trials == 0 {
        set_error("trials must be at least 1");
        return PfStatus::InvalidArgument;
    }
    match measure(&(*problem).inner, planner.into(), trials, &(&*params).into()) {
        Ok(r) => {
            *out = PfRuntimeSummary {
                expected_time_s: r.expected_time_s,
                timeout_count: r.timeout_count as u64,
                trials: r.trials.len() as u64,
            };
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Encodes a problem's workspace graph as JSON (nodes, features, edges);
/// free with `pf_string_free`.
///
/// # Safety
/// `problem` a live handle; `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn pf_encode_graph_json(
    problem: *const PfProblem,
    out_json: *mut *mut c_char,
) -> PfStatus {
    if problem.is_null() || out_json.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    let graph = match planfolio::graph_encode::encode(&(*problem).inner) {
        Ok(g) => g,
        Err(e) => {
            set_error(e.to_string());
            return status_of(&e);
        }
    };
    match planfolio::graph_encode::graph_to_json(&graph) {
        Ok(json) => {
            *out_json = CString::new(json).expect("no interior NULs").into_raw();
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            PfStatus::RuntimeError
        }
    }
}

/// Loads a model checkpoint written by `planfolio train`.
///
/// # Safety
/// `path` a valid NUL-terminated string; `out` receives a handle to free
/// with `pf_model_free`.
#[no_mangle]
pub unsafe extern "C" fn pf_model_load(path: *const c_char, out: *mut *mut PfModel) -> PfStatus {
    if path.is_null() || out.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8");
        return PfStatus::InvalidArgument;
    };
    match checkpoint::load(Path::new(path)) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(PfModel { inner: model }));
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Predicted runtime in seconds (nonnegative); needs a regressor checkpoint.
///
/// # Safety
/// All pointers must be live handles/valid destinations.
#[no_mangle]
pub unsafe extern "C" fn pf_model_predict_runtime(
    model: *const PfModel,
    problem: *const PfProblem,
    out_seconds: *mut f64,
) -> PfStatus {
    if model.is_null() || problem.is_null() || out_seconds.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    match predict_runtime(&(*model).inner, &(*problem).inner) {
        Ok(v) => {
            *out_seconds = v;
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Portfolio selection: classifier argmax; needs a classifier checkpoint.
///
/// # Safety
/// All pointers must be live handles/valid destinations.
#[no_mangle]
pub unsafe extern "C" fn pf_model_select_planner(
    model: *const PfModel,
    problem: *const PfProblem,
    out_planner: *mut PfPlanner,
) -> PfStatus {
    if model.is_null() || problem.is_null() || out_planner.is_null() {
        set_error("null pointer argument");
        return PfStatus::NullPointer;
    }
    match select_planners(&(*model).inner, &[&(*problem).inner]) {
        Ok(picks) => {
            *out_planner = picks[0].into();
            PfStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Model task: 0 = classify4 (portfolio), 1 = regress1 (runtime), -1 on null.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_model_task(model: *const PfModel) -> i32 {
    if model.is_null() {
        return -1;
    }
    match (*model).inner.task() {
        Task::Classify4 => 0,
        Task::Regress1 => 1,
    }
}

/// # Safety
/// `model` must come from `pf_model_load` and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn pf_model_free(model: *mut PfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

//! C ABI for liftree.
//!
//! Datasets and trees are opaque handles created and freed by this library.
//! Every fallible function returns a [`LiftreeStatus`]; on failure,
//! [`liftree_last_error`] returns a thread-local message describing what
//! went wrong. Strings are NUL-terminated UTF-8. Handles are not thread-safe
//! to mutate, but any number of threads may read the same dataset or tree
//! concurrently.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use liftree::data::{self, Dataset, SchemaConfig};
use liftree::eval;
use liftree::learn::{self, LearnConfig, Mode};
use liftree::policy::{self, Action, CostBenefit};
use liftree::scoring::ScoreParams;
use liftree::tree::Tree;
use liftree::Error;

/// Result of a liftree call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum LiftreeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Domain = 5,
    Utf8 = 6,
    Internal = 7,
}

/// Opaque record table.
pub struct LiftreeDataset {
    inner: Dataset,
}

/// Opaque decision tree.
pub struct LiftreeTree {
    inner: Tree,
}

/// One mailing decision.
#[repr(C)]
pub struct LiftreeDecision {
    /// 1 to mail, 0 not to.
    pub mail: i32,
    /// Expected lift in profit.
    pub elp: f64,
    /// Subscription probability when mailed.
    pub p1: f64,
    /// Subscription probability when not mailed.
    pub p0: f64,
}

/// Matched-record evaluation of a policy on a test set.
#[repr(C)]
pub struct LiftreeEvaluation {
    pub matched_mail: u64,
    pub matched_nomail: u64,
    pub skipped: u64,
    pub total_revenue: f64,
    pub per_person_revenue: f64,
    pub baseline_per_person: f64,
    pub improvement: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> LiftreeStatus {
    match err {
        Error::Io { .. } => LiftreeStatus::Io,
        Error::Json(_) | Error::MalformedModel(_) | Error::UnsupportedFormatVersion(_) => {
            LiftreeStatus::Parse
        }
        Error::Config(_)
        | Error::InvalidSchema(_)
        | Error::InvalidScoreParams(_)
        | Error::InvalidCostBenefit(_)
        | Error::InvalidGeneratorConfig(_)
        | Error::InvalidTrainFraction(_)
        | Error::AssignmentLength { .. }
        | Error::ValueOutOfRange { .. } => LiftreeStatus::InvalidArgument,
        _ => LiftreeStatus::Domain,
    }
}

fn fail(err: &Error) -> LiftreeStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guard(body: impl FnOnce() -> LiftreeStatus) -> LiftreeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LiftreeStatus::Internal
        }
    }
}

/// Reads a NUL-terminated UTF-8 string; `None` on NULL or invalid UTF-8.
unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

unsafe fn read_str_or(ptr: *const c_char, default: &str) -> Result<&str, LiftreeStatus> {
    if ptr.is_null() {
        return Ok(default);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error("string argument is not valid UTF-8");
            Err(LiftreeStatus::Utf8)
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn liftree_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the calling thread's most recent failure. The pointer
/// stays valid until the next failing liftree call on this thread.
#[no_mangle]
pub extern "C" fn liftree_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads a header-first CSV into a new dataset handle.
///
/// `treatment_column` / `outcome_column` default to "M" / "S" when NULL;
/// the four value labels default to "0" and "1". On success writes the new
/// handle to `out`.
///
/// # Safety
/// String arguments must be NUL-terminated or NULL; `out` must be a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn liftree_dataset_load_csv(
    path: *const c_char,
    treatment_column: *const c_char,
    outcome_column: *const c_char,
    not_mailed_label: *const c_char,
    mailed_label: *const c_char,
    not_subscribed_label: *const c_char,
    subscribed_label: *const c_char,
    out: *mut *mut LiftreeDataset,
) -> LiftreeStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is NULL");
            return LiftreeStatus::NullPointer;
        }
        let Some(path) = read_str(path) else {
            set_error("path is NULL or not UTF-8");
            return LiftreeStatus::NullPointer;
        };
        let config = match (|| -> Result<SchemaConfig, LiftreeStatus> {
            Ok(SchemaConfig {
                treatment_column: read_str_or(treatment_column, "M")?.to_string(),
                outcome_column: read_str_or(outcome_column, "S")?.to_string(),
                treatment_labels: (
                    read_str_or(not_mailed_label, "0")?.to_string(),
                    read_str_or(mailed_label, "1")?.to_string(),
                ),
                outcome_labels: (
                    read_str_or(not_subscribed_label, "0")?.to_string(),
                    read_str_or(subscribed_label, "1")?.to_string(),
                ),
            })
        })() {
            Ok(c) => c,
            Err(status) => return status,
        };
        let file = match fs::File::open(Path::new(path)) {
            Ok(f) => f,
            Err(e) => {
                set_error(&format!("{path}: {e}"));
                return LiftreeStatus::Io;
            }
        };
        match data::load_csv(BufReader::new(file), &config) {
            Ok(dataset) => {
                *out = Box::into_raw(Box::new(LiftreeDataset { inner: dataset }));
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Draws a synthetic population from a generator spec given as JSON text.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn liftree_dataset_generate(
    config_json: *const c_char,
    out: *mut *mut LiftreeDataset,
) -> LiftreeStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is NULL");
            return LiftreeStatus::NullPointer;
        }
        let Some(text) = read_str(config_json) else {
            set_error("config_json is NULL or not UTF-8");
            return LiftreeStatus::NullPointer;
        };
        let spec: data::GeneratorConfig = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => {
                set_error(&format!("generator config: {e}"));
                return LiftreeStatus::Parse;
            }
        };
        match data::generate(&spec) {
            Ok((dataset, _truths)) => {
                *out = Box::into_raw(Box::new(LiftreeDataset { inner: dataset }));
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of records in the dataset; 0 on NULL.
///
/// # Safety
/// `dataset` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn liftree_dataset_len(dataset: *const LiftreeDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    (*dataset).inner.len()
}

/// Splits a dataset into train and test handles, deterministic in `seed`.
///
/// # Safety
/// `dataset` must be a live handle; both out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn liftree_dataset_split(
    dataset: *const LiftreeDataset,
    train_fraction: f64,
    seed: u64,
    train_out: *mut *mut LiftreeDataset,
    test_out: *mut *mut LiftreeDataset,
) -> LiftreeStatus {
    guard(|| {
        if dataset.is_null() || train_out.is_null() || test_out.is_null() {
            set_error("NULL pointer argument");
            return LiftreeStatus::NullPointer;
        }
        match (*dataset).inner.split_train_test(train_fraction, seed) {
            Ok((train, test)) => {
                *train_out = Box::into_raw(Box::new(LiftreeDataset { inner: train }));
                *test_out = Box::into_raw(Box::new(LiftreeDataset { inner: test }));
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a dataset handle. NULL is a no-op.
///
/// # Safety
/// `dataset` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn liftree_dataset_free(dataset: *mut LiftreeDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Learns a tree from `train`. `mode` is "normal", "force", or
/// "split_first" (NULL means "force"); `kappa` is the structure-prior base.
///
/// # Safety
/// `train` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn liftree_train(
    train: *const LiftreeDataset,
    mode: *const c_char,
    kappa: f64,
    out: *mut *mut LiftreeTree,
) -> LiftreeStatus {
    guard(|| {
        if train.is_null() || out.is_null() {
            set_error("NULL pointer argument");
            return LiftreeStatus::NullPointer;
        }
        let mode: Mode = match read_str_or(mode, "force") {
            Ok(text) => match text.parse() {
                Ok(m) => m,
                Err(e) => return fail(&e),
            },
            Err(status) => return status,
        };
        let params = match ScoreParams::new(kappa) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match learn::grow(&(*train).inner, &LearnConfig::new(mode, params)) {
            Ok(tree) => {
                *out = Box::into_raw(Box::new(LiftreeTree { inner: tree }));
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Saves a tree to its JSON model format.
///
/// # Safety
/// `tree` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn liftree_tree_save(
    tree: *const LiftreeTree,
    path: *const c_char,
) -> LiftreeStatus {
    guard(|| {
        if tree.is_null() {
            set_error("tree is NULL");
            return LiftreeStatus::NullPointer;
        }
        let Some(path) = read_str(path) else {
            set_error("path is NULL or not UTF-8");
            return LiftreeStatus::NullPointer;
        };
        let json = (*tree).inner.to_json(None);
        match fs::write(Path::new(path), json) {
            Ok(()) => LiftreeStatus::Ok,
            Err(e) => {
                set_error(&format!("{path}: {e}"));
                LiftreeStatus::Io
            }
        }
    })
}

/// Loads a tree from a JSON model file. `schema_source` supplies the schema
/// the model must match (typically the dataset it will be applied to).
///
/// # Safety
/// `schema_source` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn liftree_tree_load(
    path: *const c_char,
    schema_source: *const LiftreeDataset,
    out: *mut *mut LiftreeTree,
) -> LiftreeStatus {
    guard(|| {
        if schema_source.is_null() || out.is_null() {
            set_error("NULL pointer argument");
            return LiftreeStatus::NullPointer;
        }
        let Some(path) = read_str(path) else {
            set_error("path is NULL or not UTF-8");
            return LiftreeStatus::NullPointer;
        };
        let bytes = match fs::read(Path::new(path)) {
            Ok(b) => b,
            Err(e) => {
                set_error(&format!("{path}: {e}"));
                return LiftreeStatus::Io;
            }
        };
        let schema = Arc::clone((*schema_source).inner.schema());
        match Tree::from_json(&bytes, schema) {
            Ok(tree) => {
                *out = Box::into_raw(Box::new(LiftreeTree { inner: tree }));
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of leaves in the tree; 0 on NULL.
///
/// # Safety
/// `tree` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn liftree_tree_leaf_count(tree: *const LiftreeTree) -> usize {
    if tree.is_null() {
        return 0;
    }
    (*tree).inner.leaf_count()
}

/// Decides whether to mail a person with covariate value indexes `x`
/// (length `x_len`, one entry per predictor in schema order), under mailing
/// cost `c` and revenues `rs`/`ru`.
///
/// # Safety
/// `tree` must be a live handle; `x` must point to `x_len` readable values;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn liftree_decide(
    tree: *const LiftreeTree,
    x: *const u16,
    x_len: usize,
    c: f64,
    rs: f64,
    ru: f64,
    out: *mut LiftreeDecision,
) -> LiftreeStatus {
    guard(|| {
        if tree.is_null() || out.is_null() || (x.is_null() && x_len > 0) {
            set_error("NULL pointer argument");
            return LiftreeStatus::NullPointer;
        }
        let cb = match CostBenefit::new(c, rs, ru) {
            Ok(cb) => cb,
            Err(e) => return fail(&e),
        };
        let xs = std::slice::from_raw_parts(x, x_len);
        match policy::decide(&(*tree).inner, xs, &cb) {
            Ok(decision) => {
                *out = LiftreeDecision {
                    mail: i32::from(decision.action == Action::Mail),
                    elp: decision.elp,
                    p1: decision.p1,
                    p0: decision.p0,
                };
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Replays the tree's policy against a test set using the matched-record
/// protocol and fills `out` with the revenue report.
///
/// # Safety
/// `tree` and `test` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn liftree_evaluate(
    tree: *const LiftreeTree,
    test: *const LiftreeDataset,
    c: f64,
    rs: f64,
    ru: f64,
    out: *mut LiftreeEvaluation,
) -> LiftreeStatus {
    guard(|| {
        if tree.is_null() || test.is_null() || out.is_null() {
            set_error("NULL pointer argument");
            return LiftreeStatus::NullPointer;
        }
        let cb = match CostBenefit::new(c, rs, ru) {
            Ok(cb) => cb,
            Err(e) => return fail(&e),
        };
        match eval::evaluate_policy(&(*tree).inner, &(*test).inner, &cb) {
            Ok(report) => {
                *out = LiftreeEvaluation {
                    matched_mail: report.matched_mail,
                    matched_nomail: report.matched_nomail,
                    skipped: report.skipped,
                    total_revenue: report.total_revenue,
                    per_person_revenue: report.per_person_revenue,
                    baseline_per_person: report.baseline_per_person,
                    improvement: report.improvement,
                };
                LiftreeStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a tree handle. NULL is a no-op.
///
/// # Safety
/// `tree` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn liftree_tree_free(tree: *mut LiftreeTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn write_sample_csv(dir: &Path) -> std::path::PathBuf {
        let mut csv = String::from("region,M,S\n");
        // region a: persuadable-ish; region b: dead.
        for _ in 0..40 {
            csv.push_str("a,1,1\n");
        }
        for _ in 0..10 {
            csv.push_str("a,1,0\n");
        }
        for _ in 0..10 {
            csv.push_str("a,0,1\n");
        }
        for _ in 0..40 {
            csv.push_str("a,0,0\n");
        }
        for _ in 0..50 {
            csv.push_str("b,1,0\n");
        }
        for _ in 0..50 {
            csv.push_str("b,0,0\n");
        }
        let path = dir.join("sample.csv");
        fs::write(&path, csv).unwrap();
        path
    }

    #[test]
    fn csv_train_decide_evaluate_round_trip() {
        let dir = std::env::temp_dir().join("liftree_ffi_test");
        fs::create_dir_all(&dir).unwrap();
        let csv_path = write_sample_csv(&dir);
        let c_path = c(csv_path.to_str().unwrap());

        unsafe {
            let mut dataset: *mut LiftreeDataset = ptr::null_mut();
            let status = liftree_dataset_load_csv(
                c_path.as_ptr(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                &mut dataset,
            );
            assert!(status == LiftreeStatus::Ok);
            assert_eq!(liftree_dataset_len(dataset), 200);

            let mode = c("force");
            let mut tree: *mut LiftreeTree = ptr::null_mut();
            let status = liftree_train(dataset, mode.as_ptr(), 0.001, &mut tree);
            assert!(status == LiftreeStatus::Ok);
            assert!(liftree_tree_leaf_count(tree) >= 2);

            let mut decision = LiftreeDecision {
                mail: -1,
                elp: 0.0,
                p1: 0.0,
                p0: 0.0,
            };
            let x = [0u16]; // region a
            let status = liftree_decide(tree, x.as_ptr(), 1, 0.42, 10.0, 10.0, &mut decision);
            assert!(status == LiftreeStatus::Ok);
            assert_eq!(decision.mail, 1);
            assert!(decision.elp > 0.0);

            let x = [1u16]; // region b
            let status = liftree_decide(tree, x.as_ptr(), 1, 0.42, 10.0, 10.0, &mut decision);
            assert!(status == LiftreeStatus::Ok);
            assert_eq!(decision.mail, 0);

            let mut eval_out = LiftreeEvaluation {
                matched_mail: 0,
                matched_nomail: 0,
                skipped: 0,
                total_revenue: 0.0,
                per_person_revenue: 0.0,
                baseline_per_person: 0.0,
                improvement: 0.0,
            };
            let status = liftree_evaluate(tree, dataset, 0.42, 10.0, 10.0, &mut eval_out);
            assert!(status == LiftreeStatus::Ok);
            assert_eq!(
                eval_out.matched_mail + eval_out.matched_nomail + eval_out.skipped,
                200
            );

            // Save, reload against the same schema, and compare a prediction.
            let model_path = dir.join("model.json");
            let c_model = c(model_path.to_str().unwrap());
            assert!(liftree_tree_save(tree, c_model.as_ptr()) == LiftreeStatus::Ok);
            let mut reloaded: *mut LiftreeTree = ptr::null_mut();
            let status = liftree_tree_load(c_model.as_ptr(), dataset, &mut reloaded);
            assert!(status == LiftreeStatus::Ok);
            assert_eq!(
                liftree_tree_leaf_count(reloaded),
                liftree_tree_leaf_count(tree)
            );

            liftree_tree_free(reloaded);
            liftree_tree_free(tree);
            liftree_dataset_free(dataset);
        }
    }

    #[test]
    fn split_is_deterministic_across_handles() {
        let dir = std::env::temp_dir().join("liftree_ffi_split");
        fs::create_dir_all(&dir).unwrap();
        let csv_path = write_sample_csv(&dir);
        let c_path = c(csv_path.to_str().unwrap());
        unsafe {
            let mut dataset: *mut LiftreeDataset = ptr::null_mut();
            assert!(
                liftree_dataset_load_csv(
                    c_path.as_ptr(),
                    ptr::null(),
                    ptr::null(),
                    ptr::null(),
                    ptr::null(),
                    ptr::null(),
                    ptr::null(),
                    &mut dataset,
                ) == LiftreeStatus::Ok
            );
            let mut t1: *mut LiftreeDataset = ptr::null_mut();
            let mut e1: *mut LiftreeDataset = ptr::null_mut();
            let mut t2: *mut LiftreeDataset = ptr::null_mut();
            let mut e2: *mut LiftreeDataset = ptr::null_mut();
            assert!(liftree_dataset_split(dataset, 0.7, 9, &mut t1, &mut e1) == LiftreeStatus::Ok);
            assert!(liftree_dataset_split(dataset, 0.7, 9, &mut t2, &mut e2) == LiftreeStatus::Ok);
            assert_eq!(liftree_dataset_len(t1), 140);
            assert_eq!(liftree_dataset_len(e1), 60);
            assert_eq!(liftree_dataset_len(t1), liftree_dataset_len(t2));
            for d in [t1, e1, t2, e2, dataset] {
                liftree_dataset_free(d);
            }
        }
    }

    #[test]
    fn errors_set_message_and_code() {
        unsafe {
            let missing = c("/nonexistent/nowhere.csv");
            let mut dataset: *mut LiftreeDataset = ptr::null_mut();
            let status = liftree_dataset_load_csv(
                missing.as_ptr(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                &mut dataset,
            );
            assert!(status == LiftreeStatus::Io);
            let msg = CStr::from_ptr(liftree_last_error()).to_str().unwrap();
            assert!(msg.contains("nowhere.csv"), "{msg}");

            let status = liftree_dataset_generate(ptr::null(), &mut dataset);
            assert!(status == LiftreeStatus::NullPointer);

            let bad_json = c("{");
            let status = liftree_dataset_generate(bad_json.as_ptr(), &mut dataset);
            assert!(status == LiftreeStatus::Parse);
        }
    }

    #[test]
    fn version_is_nul_terminated() {
        unsafe {
            let v = CStr::from_ptr(liftree_version()).to_str().unwrap();
            assert_eq!(v, env!("CARGO_PKG_VERSION"));
        }
    }
}

//! C ABI over the `sgat` crate.
//!
//! Conventions:
//! - Every fallible function returns an [`SgatStatus`]; results go through
//!   out-pointers that are written only on success.
//! - On failure a message is kept per thread; read it with
//!   [`sgat_last_error_message`].
//! - Objects are opaque handles created by `*_new`/`*_fit` and released by
//!   the matching `*_free`. Freeing `NULL` is a no-op.
//! - Strings returned to the caller are released with [`sgat_string_free`].
//! - Panics never cross the boundary; they surface as [`SgatStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sgat::dynamics::TabularForwardModel;
use sgat::envs::{CartPole, CartPoleParams, CliffWorld, CliffWorldParams};
use sgat::harness::{run_experiment, write_csv, ExperimentConfig};
use sgat::mdp::{ActionVec, Env, StateVec};
use sgat::neural::{gaussian_nll, GaussianHeadOutput};
use sgat::rng::{self, SimRng};
use sgat::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NoData = 4,
    NonFinite = 5,
    NotEpisodic = 6,
    Io = 7,
    Panic = 8,
    Internal = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SgatStatus {
    match e {
        Error::Config { .. } | Error::Parse { .. } => SgatStatus::Config,
        Error::NoData(_) => SgatStatus::NoData,
        Error::NonFiniteState { .. } => SgatStatus::NonFinite,
        Error::NonEpisodic(_) | Error::EvaluationDiverged(_) | Error::TooManyImprovements(_) => {
            SgatStatus::NotEpisodic
        }
        Error::Io(_) | Error::Csv(_) => SgatStatus::Io,
        Error::Contract(_) | Error::Shape { .. } | Error::Unsupported(_) => {
            SgatStatus::InvalidArgument
        }
        Error::AllCandidatesFailed(_) => SgatStatus::Internal,
    }
}

struct Failure(SgatStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SgatStatus::NullPointer, format!("`{name}` is NULL"))
}

fn invalid(reason: impl Into<String>) -> Failure {
    Failure(SgatStatus::InvalidArgument, reason.into())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SgatStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SgatStatus::Ok,
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
            set_error(format!("panic: {message}"));
            SgatStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

/// Message of the last failed call on this thread, or `NULL` if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sgat_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sgat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be `NULL` or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn sgat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Negative log-likelihood of `target` under a diagonal Gaussian with means
/// `mu` and log standard deviations `log_sigma`, each of length `dim`.
///
/// # Safety
/// The three input arrays must hold `dim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_gaussian_nll(
    mu: *const f64,
    log_sigma: *const f64,
    target: *const f64,
    dim: usize,
    out: *mut f64,
) -> SgatStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be at least 1"));
        }
        let head = GaussianHeadOutput {
            mu: slice(mu, dim, "mu")?.to_vec(),
            log_sigma: slice(log_sigma, dim, "log_sigma")?.to_vec(),
        };
        let target = slice(target, dim, "target")?;
        write_out(out, gaussian_nll(&head, target), "out")
    })
}

/// Cliff Walking world plus its own random stream.
pub struct SgatCliff {
    world: CliffWorld,
    rng: SimRng,
}

/// Creates a 4x12 Cliff Walking world with the given slip probability.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_cliff_new(
    slip_prob: f64,
    seed: u64,
    out: *mut *mut SgatCliff,
) -> SgatStatus {
    guard(|| {
        let world = CliffWorld::new(CliffWorldParams::with_slip(slip_prob))?;
        let handle = Box::new(SgatCliff {
            world,
            rng: rng::stream(seed, 0),
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// # Safety
/// `handle` must be `NULL` or a live handle from [`sgat_cliff_new`].
#[no_mangle]
pub unsafe extern "C" fn sgat_cliff_free(handle: *mut SgatCliff) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of grid cells, i.e. states.
///
/// # Safety
/// `handle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_cliff_num_states(
    handle: *const SgatCliff,
    out: *mut usize,
) -> SgatStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        write_out(out, sgat::mdp::DiscreteEnv::num_states(&h.world), "out")
    })
}

/// Writes the start state.
///
/// # Safety
/// `handle` must be a live handle; `state` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_cliff_reset(handle: *mut SgatCliff, state: *mut usize) -> SgatStatus {
    guard(|| {
        let h = deref_mut(handle, "handle")?;
        let s = h.world.reset(&mut h.rng);
        write_out(state, s, "state")
    })
}

/// One step. Actions: 0 up, 1 down, 2 left, 3 right.
///
/// # Safety
/// `handle` must be a live handle; the three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_cliff_step(
    handle: *mut SgatCliff,
    state: usize,
    action: usize,
    next: *mut usize,
    reward: *mut f64,
    terminal: *mut bool,
) -> SgatStatus {
    guard(|| {
        let h = deref_mut(handle, "handle")?;
        if next.is_null() || reward.is_null() || terminal.is_null() {
            return Err(null("next/reward/terminal"));
        }
        let n = sgat::mdp::DiscreteEnv::num_states(&h.world);
        if state >= n {
            return Err(invalid(format!("state {state} out of range 0..{n}")));
        }
        let step = h.world.step(&state, &action, &mut h.rng)?;
        write_out(next, step.next, "next")?;
        write_out(reward, step.reward, "reward")?;
        write_out(terminal, step.terminal, "terminal")
    })
}

/// Cart-pole plus its own random stream.
pub struct SgatCartPole {
    env: CartPole,
    rng: SimRng,
}

/// Dimension of the cart-pole state `(x, ẋ, θ, θ̇)`.
pub const SGAT_CARTPOLE_STATE_DIM: usize = 4;

/// Creates a cart-pole. `pole_mass_factor = 1` and `action_noise_std = 0`
/// give the nominal simulator.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_cartpole_new(
    pole_mass_factor: f64,
    action_noise_std: f64,
    seed: u64,
    out: *mut *mut SgatCartPole,
) -> SgatStatus {
    guard(|| {
        let env = CartPole::new(CartPoleParams::real(pole_mass_factor, action_noise_std))?;
        let handle = Box::new(SgatCartPole {
            env,
            rng: rng::stream(seed, 0),
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// # Safety
/// `handle` must be `NULL` or a live handle from [`sgat_cartpole_new`].
#[no_mangle]
pub unsafe extern "C" fn sgat_cartpole_free(handle: *mut SgatCartPole) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Writes a random initial state into `state[0..4]`.
///
/// # Safety
/// `handle` must be a live handle; `state` must hold 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sgat_cartpole_reset(
    handle: *mut SgatCartPole,
    state: *mut f64,
) -> SgatStatus {
    guard(|| {
        let h = deref_mut(handle, "handle")?;
        let s = h.env.reset(&mut h.rng);
        slice_mut(state, SGAT_CARTPOLE_STATE_DIM, "state")?.copy_from_slice(&s.0);
        Ok(())
    })
}

/// One step with a force command in `[-1, 1]`.
///
/// # Safety
/// `handle` must be a live handle; `state` must hold 4 doubles, `next` 4
/// writable doubles; `reward` and `terminal` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_cartpole_step(
    handle: *mut SgatCartPole,
    state: *const f64,
    action: f64,
    next: *mut f64,
    reward: *mut f64,
    terminal: *mut bool,
) -> SgatStatus {
    guard(|| {
        let h = deref_mut(handle, "handle")?;
        let s = StateVec(slice(state, SGAT_CARTPOLE_STATE_DIM, "state")?.to_vec());
        if reward.is_null() || terminal.is_null() {
            return Err(null("reward/terminal"));
        }
        let out = slice_mut(next, SGAT_CARTPOLE_STATE_DIM, "next")?;
        let step = h.env.step(&s, &ActionVec(vec![action]), &mut h.rng)?;
        out.copy_from_slice(&step.next.0);
        write_out(reward, step.reward, "reward")?;
        write_out(terminal, step.terminal, "terminal")
    })
}

/// Count-based forward model `P̂(s'|s,a)` over a finite MDP.
pub struct SgatTabularForward {
    model: TabularForwardModel,
}

/// Fits a tabular forward model from `n` observed transitions given as three
/// parallel arrays.
///
/// # Safety
/// `states`, `actions` and `next_states` must each hold `n` values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_tabular_forward_fit(
    num_states: usize,
    num_actions: usize,
    states: *const usize,
    actions: *const usize,
    next_states: *const usize,
    n: usize,
    out: *mut *mut SgatTabularForward,
) -> SgatStatus {
    guard(|| {
        if num_states == 0 || num_actions == 0 {
            return Err(invalid("num_states and num_actions must be positive"));
        }
        let (s, a, ns) = (
            slice(states, n, "states")?,
            slice(actions, n, "actions")?,
            slice(next_states, n, "next_states")?,
        );
        let mut model = TabularForwardModel::empty(num_states, num_actions);
        for i in 0..n {
            model.observe(s[i], a[i], ns[i])?;
        }
        write_out(
            out,
            Box::into_raw(Box::new(SgatTabularForward { model })),
            "out",
        )
    })
}

/// # Safety
/// `handle` must be `NULL` or a live handle from [`sgat_tabular_forward_fit`].
#[no_mangle]
pub unsafe extern "C" fn sgat_tabular_forward_free(handle: *mut SgatTabularForward) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn check_pair(model: &TabularForwardModel, s: usize, a: usize) -> Result<(), Failure> {
    if s >= model.num_states() || a >= model.num_actions() {
        return Err(invalid(format!("pair ({s}, {a}) out of range")));
    }
    Ok(())
}

/// Estimated `P̂(next | state, action)`; 0 for unseen pairs.
///
/// # Safety
/// `handle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_tabular_forward_probability(
    handle: *const SgatTabularForward,
    state: usize,
    action: usize,
    next: usize,
    out: *mut f64,
) -> SgatStatus {
    guard(|| {
        let m = &deref(handle, "handle")?.model;
        check_pair(m, state, action)?;
        let p = m
            .probabilities(state, action)
            .and_then(|ps| ps.into_iter().find(|&(n, _)| n == next).map(|(_, p)| p))
            .unwrap_or(0.0);
        write_out(out, p, "out")
    })
}

/// Most frequent next state (ties to the lowest index). Fails with
/// `NoData` when the pair was never observed.
///
/// # Safety
/// `handle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_tabular_forward_mode(
    handle: *const SgatTabularForward,
    state: usize,
    action: usize,
    out: *mut usize,
) -> SgatStatus {
    guard(|| {
        let m = &deref(handle, "handle")?.model;
        check_pair(m, state, action)?;
        let mode = m.mode(state, action).ok_or_else(|| {
            Failure(
                SgatStatus::NoData,
                format!("pair ({state}, {action}) was never observed"),
            )
        })?;
        write_out(out, mode, "out")
    })
}

/// Runs an experiment from a TOML config and returns the result rows as CSV
/// in `*csv_out` (free with [`sgat_string_free`]). Nothing is written to disk.
///
/// # Safety
/// `config_toml` must be a NUL-terminated UTF-8 string; `csv_out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sgat_run_experiment(
    config_toml: *const c_char,
    csv_out: *mut *mut c_char,
) -> SgatStatus {
    guard(|| {
        if config_toml.is_null() {
            return Err(null("config_toml"));
        }
        if csv_out.is_null() {
            return Err(null("csv_out"));
        }
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|e| invalid(format!("config is not UTF-8: {e}")))?;
        let config = ExperimentConfig::from_toml(text, &[])?;
        let output = run_experiment(&config)?;
        let mut buf = Vec::new();
        write_csv(&mut buf, &output.rows)?;
        let csv = CString::new(buf)
            .map_err(|_| Failure(SgatStatus::Internal, "CSV contains NUL".into()))?;
        write_out(csv_out, csv.into_raw(), "csv_out")
    })
}

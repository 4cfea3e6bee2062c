use std::ffi::{CStr, CString};
use std::ptr;

use sgat_ffi::*;

fn last_error() -> String {
    let p = sgat_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn nll_at_the_origin() {
    let mut out = 0.0;
    let status = unsafe { sgat_gaussian_nll(&0.0, &0.0, &0.0, 1, &mut out) };
    assert_eq!(status, SgatStatus::Ok);
    assert!((out - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
}

#[test]
fn null_pointers_are_reported() {
    let status = unsafe { sgat_gaussian_nll(ptr::null(), &0.0, &0.0, 1, ptr::null_mut()) };
    assert_eq!(status, SgatStatus::NullPointer);
    assert!(last_error().contains("mu"));
    let mut n = 0;
    assert_eq!(
        unsafe { sgat_cliff_num_states(ptr::null(), &mut n) },
        SgatStatus::NullPointer
    );
}

#[test]
fn cliff_handle_walks_to_the_goal() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { sgat_cliff_new(0.0, 1, &mut h) }, SgatStatus::Ok);
    let (mut state, mut n) = (0usize, 0usize);
    unsafe {
        assert_eq!(sgat_cliff_num_states(h, &mut n), SgatStatus::Ok);
        assert_eq!(sgat_cliff_reset(h, &mut state), SgatStatus::Ok);
    }
    assert_eq!(n, 48);
    // Up, eleven times right, down.
    let plan = std::iter::once(0)
        .chain(std::iter::repeat_n(3, 11))
        .chain(std::iter::once(1));
    let (mut total, mut terminal) = (0.0, false);
    for action in plan {
        let (mut next, mut reward) = (0usize, 0.0);
        assert_eq!(
            unsafe { sgat_cliff_step(h, state, action, &mut next, &mut reward, &mut terminal) },
            SgatStatus::Ok
        );
        state = next;
        total += reward;
    }
    assert!(terminal);
    assert!((total - 98.7).abs() < 1e-9);
    let (mut next, mut reward) = (0usize, 0.0);
    assert_eq!(
        unsafe { sgat_cliff_step(h, 99, 0, &mut next, &mut reward, &mut terminal) },
        SgatStatus::InvalidArgument
    );
    unsafe { sgat_cliff_free(h) };
}

#[test]
fn invalid_slip_is_a_config_error() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { sgat_cliff_new(1.5, 0, &mut h) },
        SgatStatus::Config
    );
    assert!(h.is_null());
    assert!(last_error().contains("slip"));
}

#[test]
fn cartpole_handle_steps() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { sgat_cartpole_new(1.0, 0.0, 3, &mut h) },
        SgatStatus::Ok
    );
    let mut s = [0.0; SGAT_CARTPOLE_STATE_DIM];
    let mut next = [0.0; SGAT_CARTPOLE_STATE_DIM];
    let (mut reward, mut terminal) = (0.0, false);
    unsafe {
        assert_eq!(sgat_cartpole_reset(h, s.as_mut_ptr()), SgatStatus::Ok);
        assert!(s.iter().all(|v| v.abs() <= 0.05));
        assert_eq!(
            sgat_cartpole_step(
                h,
                s.as_ptr(),
                1.0,
                next.as_mut_ptr(),
                &mut reward,
                &mut terminal
            ),
            SgatStatus::Ok
        );
    }
    // A full push to the right accelerates the cart to the right.
    assert!(next[1] > s[1]);
    assert_eq!(reward, 1.0);
    assert!(!terminal);
    s[0] = f64::NAN;
    let status = unsafe {
        sgat_cartpole_step(
            h,
            s.as_ptr(),
            0.0,
            next.as_mut_ptr(),
            &mut reward,
            &mut terminal,
        )
    };
    assert_ne!(status, SgatStatus::Ok);
    unsafe { sgat_cartpole_free(h) };
}

#[test]
fn tabular_forward_model_counts() {
    let states = [0usize, 0, 0, 0, 1];
    let actions = [1usize, 1, 1, 1, 0];
    let next = [2usize, 2, 2, 1, 0];
    let mut h = ptr::null_mut();
    let status = unsafe {
        sgat_tabular_forward_fit(
            3,
            2,
            states.as_ptr(),
            actions.as_ptr(),
            next.as_ptr(),
            states.len(),
            &mut h,
        )
    };
    assert_eq!(status, SgatStatus::Ok);
    let (mut p, mut mode) = (0.0, 0usize);
    unsafe {
        assert_eq!(
            sgat_tabular_forward_probability(h, 0, 1, 2, &mut p),
            SgatStatus::Ok
        );
        assert_eq!(p, 0.75);
        assert_eq!(
            sgat_tabular_forward_probability(h, 0, 1, 0, &mut p),
            SgatStatus::Ok
        );
        assert_eq!(p, 0.0);
        assert_eq!(
            sgat_tabular_forward_mode(h, 0, 1, &mut mode),
            SgatStatus::Ok
        );
        assert_eq!(mode, 2);
        assert_eq!(
            sgat_tabular_forward_mode(h, 2, 0, &mut mode),
            SgatStatus::NoData
        );
        assert_eq!(
            sgat_tabular_forward_mode(h, 5, 0, &mut mode),
            SgatStatus::InvalidArgument
        );
        sgat_tabular_forward_free(h);
    }
    let bad = [7usize];
    let status = unsafe {
        sgat_tabular_forward_fit(3, 2, bad.as_ptr(), bad.as_ptr(), bad.as_ptr(), 1, &mut h)
    };
    assert_eq!(status, SgatStatus::InvalidArgument);
}

#[test]
fn experiment_returns_csv() {
    let config = CString::new("experiment = \"toy\"\neval_episodes = 500\n").unwrap();
    let mut csv = ptr::null_mut();
    assert_eq!(
        unsafe { sgat_run_experiment(config.as_ptr(), &mut csv) },
        SgatStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
    unsafe { sgat_string_free(csv) };
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("experiment,algorithm,noise"));
    assert_eq!(lines.count(), 3);

    let bad = CString::new("experiment = \"toy\"\ntrials = 0\n").unwrap();
    assert_eq!(
        unsafe { sgat_run_experiment(bad.as_ptr(), &mut csv) },
        SgatStatus::Config
    );
    assert!(last_error().contains("trials"));
}

#[test]
fn errors_are_per_thread() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { sgat_cliff_new(-1.0, 0, &mut h) },
        SgatStatus::Config
    );
    std::thread::spawn(|| assert!(sgat_last_error_message().is_null()))
        .join()
        .unwrap();
    assert!(!sgat_last_error_message().is_null());
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(sgat_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

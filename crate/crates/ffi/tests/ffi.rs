use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::ptr;

use simlab_ffi::*;

fn last_error() -> String {
    let p = simlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Standard {
    p: *mut SimlabParams,
    g: *mut SimlabPolicy,
}

impl Standard {
    fn new() -> Self {
        let mut p = ptr::null_mut();
        let mut g = ptr::null_mut();
        unsafe {
            assert_eq!(simlab_params_new_b_equal_a(2.5, 1.0, 2.0, 1, 16, &mut p), SimlabStatus::Ok);
            assert_eq!(simlab_policy_linear(1.0, &mut g), SimlabStatus::Ok);
        }
        Standard { p, g }
    }
}

impl Drop for Standard {
    fn drop(&mut self) {
        unsafe {
            simlab_params_free(self.p);
            simlab_policy_free(self.g);
        }
    }
}

#[test]
fn validation_errors_carry_codes_and_messages() {
    let mut p = ptr::null_mut();
    let s = unsafe { simlab_params_new(3.5, 1.0, 2.0, 1.0, 1, 16, &mut p) };
    assert_eq!(s, SimlabStatus::Validation);
    assert!(p.is_null());
    assert!(last_error().contains("beta"));
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { simlab_policy_linear(-1.0, &mut g) }, SimlabStatus::Validation);
    assert_eq!(
        unsafe { simlab_params_new(2.5, 1.0, 2.0, 1.0, 1, 16, ptr::null_mut()) },
        SimlabStatus::NullPointer
    );
    assert!(unsafe { simlab_params_a(ptr::null()) }.is_nan());
}

#[test]
fn constants_through_the_interface() {
    let m = Standard::new();
    assert_eq!(unsafe { simlab_params_a(m.p) }, 2.0);
    let mut c = SimlabFouConstants::default();
    assert_eq!(unsafe { simlab_fou_constants(m.p, m.g, &mut c) }, SimlabStatus::Ok);
    assert_eq!(c.hurst, 0.75);
    assert!((c.sigma * c.sigma - 16.0 / 3.0).abs() < 1e-12);
    assert!((c.sigma0sq_closed - 1.2533141373155).abs() < 1e-12);

    let mut f = ptr::null_mut();
    assert_eq!(unsafe { simlab_fluid_solve(m.p, m.g, 4.0, 1.0 / 256.0, &mut f) }, SimlabStatus::Ok);
    let (mut big_u, mut u, mut v, mut cov, mut bound) = (0.0, 0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(simlab_fluid_eval(f, 1.0, &mut big_u, &mut u, &mut v), SimlabStatus::Ok);
        assert_eq!(simlab_cov_r(f, 1.0, 1.0, &mut cov), SimlabStatus::Ok);
        assert_eq!(simlab_moment_bound(f, &mut bound), SimlabStatus::Ok);
        assert_eq!(simlab_fluid_eval(f, 9.0, &mut big_u, &mut u, &mut v), SimlabStatus::Domain);
        simlab_fluid_free(f);
    }
    assert!((big_u - 2.0).abs() < 1e-9 && u.abs() < 1e-9);
    assert!(v < 0.0);
    assert!((cov - 8.0 / 3.0).abs() < 1e-10);
    assert!((bound - 2.50663).abs() < 1e-5);
}

#[test]
fn unsupported_long_run_off_balance() {
    let mut p = ptr::null_mut();
    let mut g = ptr::null_mut();
    let mut c = SimlabFouConstants::default();
    unsafe {
        assert_eq!(simlab_params_new(2.5, 1.0, 2.0, 1.0, 1, 16, &mut p), SimlabStatus::Ok);
        assert_eq!(simlab_policy_linear(1.0, &mut g), SimlabStatus::Ok);
        assert_eq!(simlab_fou_constants(p, g, &mut c), SimlabStatus::Unsupported);
        simlab_params_free(p);
        simlab_policy_free(g);
    }
}

#[test]
fn simulation_is_seed_deterministic() {
    let m = Standard::new();
    let run = |seed: u64, inversion: bool| {
        let mut path = ptr::null_mut();
        let mut y = 0.0;
        unsafe {
            assert_eq!(simlab_simulate(m.p, m.g, 2.0, seed, inversion, &mut path), SimlabStatus::Ok);
            assert_eq!(simlab_path_ybar(path, 2.0, &mut y), SimlabStatus::Ok);
            let count = simlab_path_session_count(path);
            assert_eq!(simlab_path_ybar(path, 3.0, &mut y), SimlabStatus::Domain);
            simlab_path_free(path);
            count
        }
    };
    assert_eq!(run(5, false), run(5, false));
    assert!(run(5, true) > 0);
    assert_eq!(unsafe { simlab_path_session_count(ptr::null()) }, 0);
    unsafe { simlab_path_free(ptr::null_mut()) };
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/simlab.h")
}

#[test]
fn header_declares_the_interface() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "simlab_last_error",
        "simlab_params_new",
        "simlab_fluid_solve",
        "simlab_simulate",
        "simlab_fou_constants",
        "SIMLAB_STATUS_NULL_POINTER = 10",
        "typedef struct SimlabFouConstants",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

/// Compile and run a C client against the static library when a C
/// compiler is on the path.
#[test]
fn c_client_links_and_runs() {
    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsimlab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("client.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "simlab.h"
int main(void) {
    SimlabParams *p = NULL;
    SimlabPolicy *g = NULL;
    SimlabFouConstants c;
    if (simlab_params_new_b_equal_a(2.5, 1.0, 2.0, 1, 16, &p) != SIMLAB_STATUS_OK) return 1;
    if (simlab_policy_linear(1.0, &g) != SIMLAB_STATUS_OK) return 2;
    if (simlab_fou_constants(p, g, &c) != SIMLAB_STATUS_OK) return 3;
    if (simlab_params_new(9.0, 1.0, 2.0, 1.0, 1, 16, &p) != SIMLAB_STATUS_VALIDATION) return 4;
    printf("%.6f %s\n", c.sigma0sq, simlab_last_error() != NULL ? "err" : "none");
    simlab_params_free(p);
    simlab_policy_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("client");
    let status = std::process::Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), "1.253314 err\n");
}

fn which(cmd: &str) -> Result<PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| std::env::split_paths(&paths).map(|d| d.join(cmd)).find(|p| p.is_file()))
        .ok_or(())
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("simlab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

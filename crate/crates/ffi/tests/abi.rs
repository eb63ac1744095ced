use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cohproj_ffi::*;

fn last_error() -> Option<String> {
    let p = cp_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn overlap_at_equal_labels_is_one() {
    let mut z = CpComplex::default();
    assert_eq!(unsafe { cp_overlap_closed(0.4, -1.0, 0.4, -1.0, &mut z) }, CpStatus::Ok);
    assert_eq!(z, CpComplex { re: 1.0, im: 0.0 });
    assert!(last_error().is_none());
}

#[test]
fn null_output_is_reported() {
    assert_eq!(unsafe { cp_overlap_closed(0.0, 0.0, 0.0, 0.0, ptr::null_mut()) }, CpStatus::NullPointer);
    assert!(last_error().unwrap().contains("result"));
}

#[test]
fn su2_kernel_and_domain_error() {
    let z = [CpComplex { re: 0.3, im: 0.1 }, CpComplex { re: -0.2, im: 0.4 }];
    let mut v = CpComplex::default();
    assert_eq!(unsafe { cp_su2_projected_kernel(z.as_ptr(), z.as_ptr(), 0.0, &mut v) }, CpStatus::Ok);
    let n2: f64 = z.iter().map(|c| c.re * c.re + c.im * c.im).sum();
    assert!((v.re - (-n2).exp()).abs() < 1e-15 && v.im.abs() < 1e-15);
    assert_eq!(unsafe { cp_su2_projected_kernel(z.as_ptr(), z.as_ptr(), 1.3, &mut v) }, CpStatus::InvalidArgument);
}

#[test]
fn projector_handle_lifecycle() {
    let phi = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let mut e: *mut CpProjector = ptr::null_mut();
    assert_eq!(unsafe { cp_projector_spectral(phi.as_ptr(), ptr::null(), 3, 0.5, &mut e) }, CpStatus::Ok);
    let mut rank = 0usize;
    assert_eq!(unsafe { cp_projector_rank(e, &mut rank) }, CpStatus::Ok);
    assert_eq!(rank, 2);
    let mut c = CpComplex::default();
    assert_eq!(unsafe { cp_projector_entry(e, 1, 1, &mut c) }, CpStatus::Ok);
    assert!(c.re.abs() < 1e-14);
    assert_eq!(unsafe { cp_projector_entry(e, 3, 0, &mut c) }, CpStatus::InvalidArgument);
    unsafe { cp_projector_free(e) };
    assert_eq!(unsafe { cp_projector_rank(ptr::null(), &mut rank) }, CpStatus::NullPointer);

    let skew = [0.0, 1.0, -1.0, 0.0];
    assert_eq!(unsafe { cp_projector_spectral(skew.as_ptr(), ptr::null(), 2, 0.5, &mut e) }, CpStatus::InvalidArgument);
}

#[test]
fn experiments_through_handles() {
    assert!(cp_experiment_count() >= 12);
    assert!(cp_experiment_name(cp_experiment_count()).is_null());
    let first = unsafe { CStr::from_ptr(cp_experiment_name(0)) }.to_str().unwrap().to_owned();
    let name = CString::new(first).unwrap();
    let mut r: *mut CpReport = ptr::null_mut();
    assert_eq!(unsafe { cp_experiment_run(name.as_ptr(), 0, &mut r) }, CpStatus::Ok);
    let (mut passed, mut count) = (false, 0usize);
    assert_eq!(unsafe { cp_report_passed(r, &mut passed) }, CpStatus::Ok);
    assert_eq!(unsafe { cp_report_row_count(r, &mut count) }, CpStatus::Ok);
    assert!(passed && count > 0);
    let mut row = CpRow { quantity: ptr::null(), value: CpComplex::default(), tolerance: 0.0, residual: 0.0, pass: false };
    assert_eq!(unsafe { cp_report_row(r, 0, &mut row) }, CpStatus::Ok);
    assert!(!unsafe { CStr::from_ptr(row.quantity) }.to_bytes().is_empty());
    assert_eq!(unsafe { cp_report_row(r, count, &mut row) }, CpStatus::InvalidArgument);
    unsafe { cp_report_free(r) };

    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { cp_experiment_run(bad.as_ptr(), 0, &mut r) }, CpStatus::Usage);
    assert!(last_error().unwrap().contains("nope"));
}

fn target_dir() -> PathBuf {
    // tests live in <target>/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libcohproj_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cohproj_smoke");
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "rank 2");
}

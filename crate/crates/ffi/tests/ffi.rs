use std::ffi::CStr;
use std::ptr;

use covariants_ffi::*;

fn last_error() -> String {
    let p = cov_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dimensions() {
    let mut v = 0u64;
    assert_eq!(unsafe { cov_springer_dim(9, 64, 18, &mut v) }, CovStatus::Ok);
    assert_eq!(v, 1_576_149);
    assert!(cov_last_error().is_null());
    let degrees = [4usize, 4, 8];
    let mut q = 0i64;
    assert_eq!(unsafe { cov_quotient_dim(9, 60, 14, degrees.as_ptr(), 3, &mut q) }, CovStatus::Ok);
    assert_eq!(q, 33_360);
    assert_eq!(unsafe { cov_quotient_dim(9, 60, 14, ptr::null(), 3, &mut q) }, CovStatus::NullPointer);
    assert_eq!(unsafe { cov_springer_dim(9, 1, 9, ptr::null_mut()) }, CovStatus::NullPointer);
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { cov_springer_dim(20, 400, 0, &mut v) }, CovStatus::Overflow);
}

#[test]
fn bounds() {
    let mut v = 0usize;
    assert_eq!(unsafe { cov_lambda_bound(10, &mut v) }, CovStatus::Ok);
    assert_eq!(v, 26);
    assert_eq!(unsafe { cov_bound_max_degree(9, 0, &mut v) }, CovStatus::Ok);
    assert_eq!(v, 66);
    assert_eq!(unsafe { cov_bound_max_degree(9, 23, &mut v) }, CovStatus::InvalidArgument);
    assert_eq!(unsafe { cov_bound_max_degree(11, 0, &mut v) }, CovStatus::Unsupported);
}

#[test]
fn catalog_handle() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cov_catalog_load(9, &mut h) }, CovStatus::Ok);
    let mut len = 0;
    assert_eq!(unsafe { cov_catalog_len(h, &mut len) }, CovStatus::Ok);
    assert_eq!(len, 476);
    let (mut d, mut m) = (0, 0);
    assert_eq!(unsafe { cov_catalog_bidegree(h, 475, &mut d, &mut m) }, CovStatus::Ok);
    assert_eq!((d, m), (22, 0));
    assert_eq!(unsafe { cov_catalog_bidegree(h, 476, &mut d, &mut m) }, CovStatus::InvalidArgument);

    let mut buf = [0 as std::ffi::c_char; 3];
    let mut needed = 0;
    assert_eq!(unsafe { cov_catalog_label(h, 475, buf.as_mut_ptr(), 3, &mut needed) }, CovStatus::BufferTooSmall);
    assert_eq!(needed, 5);
    let mut buf = [0 as std::ffi::c_char; 5];
    assert_eq!(unsafe { cov_catalog_label(h, 475, buf.as_mut_ptr(), 5, &mut needed) }, CovStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "c476");

    // (f,f)_8 of x^9 + y^9: normalized value 2 x y (times a nonzero constant).
    let mut coeffs = [0u32; 10];
    coeffs[0] = 1;
    coeffs[9] = 1;
    let mut outv = [0u32; 3];
    let mut written = 0;
    let st = unsafe { cov_catalog_evaluate(h, 1, 65521, coeffs.as_ptr(), 10, outv.as_mut_ptr(), 3, &mut written) };
    assert_eq!(st, CovStatus::Ok);
    assert_eq!(written, 3);
    assert!(outv[0] == 0 && outv[1] != 0 && outv[2] == 0);
    let st = unsafe { cov_catalog_evaluate(h, 0, 65521, coeffs.as_ptr(), 10, outv.as_mut_ptr(), 3, &mut written) };
    assert_eq!((st, written), (CovStatus::BufferTooSmall, 10));
    let st = unsafe { cov_catalog_evaluate(h, 1, 7, coeffs.as_ptr(), 10, outv.as_mut_ptr(), 3, &mut written) };
    assert_eq!(st, CovStatus::InvalidArgument);
    unsafe { cov_catalog_free(h) };
    unsafe { cov_catalog_free(ptr::null_mut()) };
}

#[test]
fn diophantine_handle() {
    let lhs2: Vec<u64> = [(2u64, 6usize), (4, 5), (6, 5), (8, 3), (10, 1), (12, 1)]
        .iter()
        .flat_map(|&(c, k)| std::iter::repeat_n(c, k))
        .collect();
    let lhs1 = [9u64, 10, 14, 15, 17, 21, 22];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cov_dioph_solve(lhs1.as_ptr(), 7, lhs2.as_ptr(), lhs2.len(), &mut h) }, CovStatus::Ok);
    let (mut count, mut expanded) = (0usize, 0u64);
    assert_eq!(unsafe { cov_dioph_count(h, &mut count) }, CovStatus::Ok);
    assert_eq!(unsafe { cov_dioph_expanded(h, &mut expanded) }, CovStatus::Ok);
    assert_eq!((count, expanded), (7338, 58_525_823));
    unsafe { cov_dioph_free(h) };
    let zero = [0u64];
    assert_eq!(unsafe { cov_dioph_solve(zero.as_ptr(), 1, lhs1.as_ptr(), 1, &mut h) }, CovStatus::InvalidArgument);
    assert_eq!(unsafe { cov_dioph_count(ptr::null(), &mut count) }, CovStatus::NullPointer);
}

#[test]
fn version() {
    let v = unsafe { CStr::from_ptr(cov_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/covariants.h")).unwrap();
    for name in ["cov_springer_dim", "cov_catalog_load", "cov_catalog_evaluate", "cov_dioph_solve", "COV_STATUS_OK"] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compile and run a C program against the header and the static library.
#[test]
fn c_smoke_program() {
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().unwrap().parent().unwrap();
    let lib = target.join("libcovariants_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = env!("CARGO_MANIFEST_DIR");
    let bin = target.join("covariants_c_smoke");
    let status = std::process::Command::new("cc")
        .args([&format!("{dir}/tests/c/smoke.c"), "-I", &format!("{dir}/include")])
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tessvote_ffi::*;

fn last_error() -> String {
    let p = tv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn build(p: u32, q: u32, g: u32) -> *mut TvTessellation {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tv_tessellation_build(p, q, g, 0, &mut t) }, TvStatus::Ok);
    assert!(!t.is_null());
    t
}

#[test]
fn tessellation_handle_round_trip() {
    let t = build(4, 5, 3);
    unsafe {
        assert_eq!(tv_tessellation_vertex_count(t), 1 + 5 + 15 + 40);
        let mut buf = [0u32; 5];
        let mut len = 0;
        assert_eq!(tv_tessellation_neighbors(t, 0, buf.as_mut_ptr(), 5, &mut len), TvStatus::Ok);
        assert_eq!(len, 5);
        for &v in &buf {
            let mut g = 99;
            assert_eq!(tv_tessellation_generation(t, v, &mut g), TvStatus::Ok);
            assert_eq!(g, 1);
        }
        assert_eq!(tv_tessellation_neighbors(t, 0, buf.as_mut_ptr(), 2, &mut len), TvStatus::BufferTooSmall);
        assert_eq!(len, 5);

        let mut pass = false;
        let mut report = ptr::null_mut();
        assert_eq!(tv_tessellation_audit(t, &mut pass, &mut report), TvStatus::Ok);
        assert!(pass);
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(json["pass"], true);
        tv_string_free(report);

        let mut js = ptr::null_mut();
        assert_eq!(tv_tessellation_to_json(t, &mut js), TvStatus::Ok);
        assert!(CStr::from_ptr(js).to_bytes().starts_with(b"{"));
        tv_string_free(js);
        tv_tessellation_free(t);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(tv_tessellation_build(3, 4, 3, 0, &mut t), TvStatus::SphericalUnsupported);
        assert!(t.is_null());
        assert!(last_error().contains("spherical"));
        assert_eq!(tv_tessellation_build(4, 5, 3, 0, ptr::null_mut()), TvStatus::NullPointer);
        let mut g = 0;
        assert_eq!(tv_tessellation_generation(ptr::null(), 0, &mut g), TvStatus::NullPointer);
        assert_eq!(tv_tessellation_vertex_count(ptr::null()), 0);

        let t = build(4, 5, 3);
        assert_eq!(tv_tessellation_generation(t, 1_000_000, &mut g), TvStatus::InvalidArgument);
        let mut a = ptr::null_mut();
        assert_eq!(tv_automaton_build(t, true, 1, &mut a), TvStatus::OutsidePositiveRegion);
        tv_tessellation_free(t);

        let mut b = 0.0;
        assert_eq!(tv_error_bound(7, 4.0, 0.5, &mut b), TvStatus::DomainError);
        assert_eq!(tv_error_bound(5, 2.0, 0.0, &mut b), TvStatus::Ok);
        assert_eq!(b, 0.0);
        assert!(tv_last_error_message().is_null());

        let mut p = 7;
        let s = CString::new("inf").unwrap();
        assert_eq!(tv_parse_face_degree(s.as_ptr(), &mut p), TvStatus::Ok);
        assert_eq!(p, TV_P_INFINITE);
        let s = CString::new("x").unwrap();
        assert_eq!(tv_parse_face_degree(s.as_ptr(), &mut p), TvStatus::InvalidArgument);
        tv_string_free(ptr::null_mut());
        tv_tessellation_free(ptr::null_mut());
        tv_automaton_free(ptr::null_mut());
    }
}

#[test]
fn automaton_and_simulation() {
    let t = build(5, 5, 4);
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(tv_automaton_build(t, true, 1, &mut a), TvStatus::Ok);
        // the automaton holds its own reference
        tv_tessellation_free(t);
        let (mut thr, mut red) = (0, 0);
        assert_eq!(tv_automaton_threshold(a, 1, &mut thr, &mut red), TvStatus::Ok);
        assert_eq!((thr, red), (3, 2));

        let mut r1 = [f64::NAN; 21];
        let mut r2 = [f64::NAN; 21];
        let mut zero = [f64::NAN; 21];
        assert_eq!(tv_monte_carlo(a, 0.01, 0.01, 9, 20, 16, TvBoundary::FrozenZero, 1, r1.as_mut_ptr()), TvStatus::Ok);
        assert_eq!(tv_monte_carlo(a, 0.01, 0.01, 9, 20, 16, TvBoundary::FrozenZero, 2, r2.as_mut_ptr()), TvStatus::Ok);
        assert_eq!(r1, r2);
        assert_eq!(tv_monte_carlo(a, 0.0, 0.0, 9, 20, 16, TvBoundary::FrozenZero, 0, zero.as_mut_ptr()), TvStatus::Ok);
        assert!(zero.iter().all(|&r| r == 0.0));
        assert_eq!(tv_monte_carlo(a, 1.5, 0.0, 9, 20, 16, TvBoundary::FrozenZero, 0, r1.as_mut_ptr()), TvStatus::InvalidArgument);
        tv_automaton_free(a);
    }
}

#[test]
fn classification_and_flows() {
    let mut c = TvClass::None;
    unsafe {
        assert_eq!(tv_classify(4, 7, &mut c), TvStatus::Ok);
        assert_eq!(c, TvClass::Combined);
        assert_eq!(tv_classify(TV_P_INFINITE, 3, &mut c), TvStatus::Ok);
        assert_eq!(c, TvClass::TransientOnly);
        assert_eq!(tv_classify(2, 5, &mut c), TvStatus::InvalidArgument);
        let mut pass = false;
        assert_eq!(tv_verify_flows(6, 5, 4, &mut pass, ptr::null_mut()), TvStatus::Ok);
        assert!(pass);
        assert_eq!(tv_verify_flows(4, 5, 4, &mut pass, ptr::null_mut()), TvStatus::OutsidePositiveRegion);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(tv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_is_generated_and_c_program_links() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(root.join("include/tessvote.h")).unwrap();
    for name in ["tv_tessellation_build", "tv_last_error_message", "tv_string_free", "TV_STATUS_OK", "typedef struct TvTessellation TvTessellation"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let lib = target_dir().join("libtessvote_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout} {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        stdout.trim(),
        "vertices=166 degree=5 audit=1 threshold=3 rate=0.0 class=2 spherical=3 msg=yes"
    );
}

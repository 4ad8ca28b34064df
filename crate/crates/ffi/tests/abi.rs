use std::ffi::CStr;
use std::ptr;

use heisenberg_laser_ffi::*;

fn model(kind: HlFamily, param: f64, dim: usize, p: f64) -> *mut HlModel {
    let mut m = ptr::null_mut();
    let s = unsafe { hl_model_new(kind, param, dim, p, 1.0, 0, &mut m) };
    assert_eq!(s, HlStatus::Ok, "{}", last_error());
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        hl_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn three_level_steady_state() {
    let m = model(HlFamily::Pfamily, 0.0, 3, 2.0);
    let mut d = 0usize;
    let mut w = [0.0f64; 3];
    unsafe {
        assert_eq!(hl_model_dim(m, &mut d), HlStatus::Ok);
        assert_eq!(hl_steady_state(m, w.as_mut_ptr(), 3), HlStatus::Ok);
        let mut r = 0.0;
        assert_eq!(hl_normalization_r(m, &mut r), HlStatus::Ok);
        assert!((r - 4.0 / 3.0).abs() < 1e-14);
        hl_model_free(m);
    }
    assert_eq!(d, 3);
    for (a, b) in w.iter().zip([0.25, 0.5, 0.25]) {
        assert!((a - b).abs() < 1e-14);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn observables_match_the_library() {
    use heisenberg_laser::{correlations, Family, LaserModel, Liouvillian, Variant};
    let m = model(HlFamily::Pq, -1.0, 41, 8.0);
    let liou = Liouvillian::new(
        LaserModel::new(Family::PQ { q: -1.0 }, 41, 8.0, 1.0).unwrap(),
        Variant::Exact,
    )
    .unwrap();
    let grid = [0.0, 1.0, 10.0, 100.0];
    let mut out = [0.0f64; 4];
    unsafe {
        assert_eq!(hl_g2(m, grid.as_ptr(), 4, out.as_mut_ptr()), HlStatus::Ok);
        assert_eq!(out.to_vec(), correlations::g2(&liou, &grid).unwrap().values);
        assert_eq!(hl_g1(m, grid.as_ptr(), 4, out.as_mut_ptr()), HlStatus::Ok);
        assert_eq!(out.to_vec(), correlations::g1(&liou, &grid).unwrap().values);
        assert_eq!(
            hl_intensity_spectrum(m, grid.as_ptr(), 4, out.as_mut_ptr()),
            HlStatus::Ok
        );
        assert_eq!(
            out.to_vec(),
            correlations::intensity_spectrum(&liou, &grid).unwrap().values
        );

        let mut c = 0.0;
        assert_eq!(hl_coherence(m, &mut c), HlStatus::Ok);
        assert_eq!(c, correlations::coherence(&liou).unwrap());
        let mut q = 0.0;
        assert_eq!(hl_mandel_q(m, 50.0, &mut q), HlStatus::Ok);
        assert_eq!(q, correlations::mandel_q(&liou, 50.0).unwrap());
        let mut neg = 0.0;
        assert_eq!(hl_negativity(m, &mut neg), HlStatus::Ok);
        assert!(neg >= 0.0);
        hl_model_free(m);
    }
}

#[test]
fn domain_errors_carry_messages() {
    let mut m = ptr::null_mut();
    let s = unsafe { hl_model_new(HlFamily::Pq, -3.0, 11, 2.0, 1.0, 0, &mut m) };
    assert_eq!(s, HlStatus::Domain);
    assert!(m.is_null());
    assert!(last_error().contains("q must be"), "{}", last_error());

    let s = unsafe { hl_model_new(HlFamily::Pfamily, 0.0, 2, 2.0, 1.0, 0, &mut m) };
    assert_eq!(s, HlStatus::Domain);

    let m = model(HlFamily::Pfamily, 0.0, 11, 2.0);
    let mut q = 0.0;
    unsafe {
        assert_eq!(hl_mandel_q(m, -1.0, &mut q), HlStatus::Domain);
        let bad = [1.0, 0.5];
        let mut out = [0.0; 2];
        assert_eq!(hl_g2(m, bad.as_ptr(), 2, out.as_mut_ptr()), HlStatus::Domain);
        hl_model_free(m);
    }
}

#[test]
fn null_and_short_buffers() {
    let m = model(HlFamily::Plambda, 0.5, 11, 4.0);
    let mut w = [0.0f64; 4];
    unsafe {
        assert_eq!(hl_steady_state(m, w.as_mut_ptr(), 4), HlStatus::BufferTooSmall);
        assert!(last_error().contains("11 needed"));
        assert_eq!(hl_steady_state(ptr::null(), w.as_mut_ptr(), 4), HlStatus::NullPointer);
        assert_eq!(hl_coherence(m, ptr::null_mut()), HlStatus::NullPointer);
        assert_eq!(hl_g1(m, ptr::null(), 3, w.as_mut_ptr()), HlStatus::NullPointer);
        assert_eq!(
            hl_model_new(HlFamily::Pfamily, 0.0, 5, 1.0, 1.0, 0, ptr::null_mut()),
            HlStatus::NullPointer
        );
        hl_model_free(m);
        hl_model_free(ptr::null_mut());
    }
}

#[test]
fn error_text_is_truncated_safely() {
    let mut m = ptr::null_mut();
    unsafe { hl_model_new(HlFamily::Pfamily, 0.0, 5, -1.0, 1.0, 0, &mut m) };
    let full = unsafe { hl_last_error(ptr::null_mut(), 0) };
    assert!(full > 8);
    let mut buf = [1 as std::ffi::c_char; 8];
    let n = unsafe { hl_last_error(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, full);
    assert_eq!(buf[7], 0);
}

#[test]
fn errors_are_per_thread() {
    let mut m = ptr::null_mut();
    unsafe { hl_model_new(HlFamily::Pfamily, 0.0, 5, -1.0, 1.0, 0, &mut m) };
    assert!(!last_error().is_empty());
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
}

#[test]
fn linearized_variant_and_analytics() {
    let mut m = ptr::null_mut();
    let s = unsafe { hl_model_new(HlFamily::Plambda, 0.5, 101, 10.0, 1.0, 1, &mut m) };
    assert_eq!(s, HlStatus::Ok);
    unsafe { hl_model_free(m) };

    let c0 = hl_coherence_lin(HlFamily::Pfamily, 0.0, 50.0, 250.0);
    assert!((hl_coherence_lin(HlFamily::Pq, -1.0, 50.0, 250.0) / c0 - 4.0).abs() < 1e-12);
    let l0 = hl_diffusion_rate(HlFamily::Plambda, 0.0, 50.0, 250.0, 1.0);
    assert!((l0 / 9.744e-7 - 1.0).abs() < 1e-3);
    assert!((hl_heisenberg_bound(1.0) - 1.1156).abs() < 1e-4);
    let v = unsafe { CStr::from_ptr(hl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn filter_ensemble() {
    let (mut mean, mut se) = (0.0, 0.0);
    let s = unsafe { hl_filter_mse(1e4, 1.0, 200.0, 3, 6, &mut mean, &mut se) };
    assert_eq!(s, HlStatus::Ok);
    assert!((mean - 0.01).abs() < 4.0 * se, "{mean} ± {se}");
    let s = unsafe { hl_filter_mse(1e4, 1.0, 200.0, 3, 1, &mut mean, &mut se) };
    assert_eq!(s, HlStatus::Domain);
}

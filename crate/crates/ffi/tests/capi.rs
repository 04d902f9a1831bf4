use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dfkit_ffi::*;

struct Nl(*mut DfkNonlinearity);

impl Drop for Nl {
    fn drop(&mut self) {
        unsafe { dfk_nonlinearity_free(self.0) }
    }
}

struct Plant(*mut DfkPlant);

impl Drop for Plant {
    fn drop(&mut self) {
        unsafe { dfk_plant_free(self.0) }
    }
}

fn nl(x: &[f64], y: &[f64]) -> Nl {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { dfk_nonlinearity_new(x.as_ptr(), y.as_ptr(), x.len(), &mut h) },
        DfkStatus::Ok
    );
    Nl(h)
}

fn nl_a() -> Nl {
    nl(&[2.0, 7.0, 20.0, 20.0, 25.0], &[0.0, 4.5, 7.21, 4.21, 5.25])
}

fn plant(num: &[f64], den: &[f64], k: f64) -> Plant {
    let mut h = ptr::null_mut();
    let s = unsafe { dfk_plant_new(num.as_ptr(), num.len(), den.as_ptr(), den.len(), k, &mut h) };
    assert_eq!(s, DfkStatus::Ok);
    Plant(h)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dfk_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn nonlinearity_handles() {
    let h = nl_a();
    let mut y = 0.0;
    assert_eq!(
        unsafe { dfk_nonlinearity_eval(h.0, 20.0, &mut y) },
        DfkStatus::Ok
    );
    assert_eq!(y, 4.21);
    assert_eq!(
        unsafe { dfk_nonlinearity_eval(h.0, -4.5, &mut y) },
        DfkStatus::Ok
    );
    assert!((y + 2.25).abs() < 1e-15);

    let json = CString::new(r#"{"x": [3, 6, 10, 19], "y": [3, 3, 10, 10]}"#).unwrap();
    let mut j = ptr::null_mut();
    assert_eq!(
        unsafe { dfk_nonlinearity_from_json(json.as_ptr(), &mut j) },
        DfkStatus::Ok
    );
    let j = Nl(j);
    assert_eq!(
        unsafe { dfk_nonlinearity_eval(j.0, 8.0, &mut y) },
        DfkStatus::Ok
    );
    assert_eq!(y, 6.5);

    let bad = CString::new(r#"{"x": [1, 2], "y": [1]}"#).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(
        unsafe { dfk_nonlinearity_from_json(bad.as_ptr(), &mut b) },
        DfkStatus::InvalidNonlinearity
    );
    assert!(b.is_null());
    assert!(last_error().contains("y has 1"), "{}", last_error());
    let mut c = ptr::null_mut();
    let s = unsafe {
        dfk_nonlinearity_new(
            [1.0, 1.0, 1.0].as_ptr(),
            [0.0, 1.0, 2.0].as_ptr(),
            3,
            &mut c,
        )
    };
    assert_eq!(s, DfkStatus::InvalidNonlinearity);
}

#[test]
fn null_pointers_are_reported() {
    let mut y = 0.0;
    assert_eq!(
        unsafe { dfk_nonlinearity_eval(ptr::null(), 1.0, &mut y) },
        DfkStatus::NullPointer
    );
    assert!(last_error().contains("nonlinearity"));
    let h = nl_a();
    assert_eq!(
        unsafe { dfk_nonlinearity_eval(h.0, 1.0, ptr::null_mut()) },
        DfkStatus::NullPointer
    );
    assert_eq!(
        unsafe { dfk_nonlinearity_from_json(ptr::null(), &mut ptr::null_mut()) },
        DfkStatus::NullPointer
    );
    unsafe {
        dfk_nonlinearity_free(ptr::null_mut());
        dfk_plant_free(ptr::null_mut());
        dfk_string_free(ptr::null_mut());
    }
}

#[test]
fn describing_function_curves() {
    let h = nl_a();
    let grid: Vec<f64> = (1..=64).map(|i| 0.43 * i as f64).collect();
    let (mut e, mut q, mut o) = (vec![0.0; 64], vec![0.0; 64], vec![0.0; 64]);
    unsafe {
        assert_eq!(
            dfk_df_exact(h.0, grid.as_ptr(), 64, e.as_mut_ptr()),
            DfkStatus::Ok
        );
        assert_eq!(
            dfk_df_qualitative(h.0, grid.as_ptr(), 64, q.as_mut_ptr()),
            DfkStatus::Ok
        );
        assert_eq!(
            dfk_df_oracle(h.0, grid.as_ptr(), 64, o.as_mut_ptr()),
            DfkStatus::Ok
        );
    }
    for i in 0..64 {
        assert!((e[i] - o[i]).abs() <= (1e-6 * e[i].abs()).max(1e-9));
        if grid[i] <= 2.0 {
            assert_eq!((e[i], q[i]), (0.0, 0.0));
        }
    }
    let unsorted = [2.0, 1.0];
    let s = unsafe { dfk_df_exact(h.0, unsorted.as_ptr(), 2, e.as_mut_ptr()) };
    assert_eq!(s, DfkStatus::InvalidArgument);
}

#[test]
fn plant_and_crossovers() {
    let p = plant(&[1.0], &[1.0, 4.0, 3.0, 0.0], 15.0);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(
        unsafe { dfk_plant_freq_response(p.0, 3f64.sqrt(), &mut re, &mut im) },
        DfkStatus::Ok
    );
    assert!((re + 1.25).abs() < 1e-12 && im.abs() < 1e-12);

    let mut count = 0;
    let s = unsafe { dfk_phase_crossovers(p.0, 1e-3, 1e3, ptr::null_mut(), 0, &mut count) };
    assert_eq!((s, count), (DfkStatus::BufferTooSmall, 1));
    let mut buf = [DfkCrossover {
        omega: 0.0,
        gain_margin: 0.0,
    }; 2];
    assert_eq!(
        unsafe { dfk_phase_crossovers(p.0, 1e-3, 1e3, buf.as_mut_ptr(), 2, &mut count) },
        DfkStatus::Ok
    );
    assert_eq!(count, 1);
    assert!((buf[0].omega - 3f64.sqrt()).abs() < 1e-9 && (buf[0].gain_margin - 0.8).abs() < 1e-9);

    let mut bad = ptr::null_mut();
    let s = unsafe {
        dfk_plant_new(
            [1.0, 0.0, 0.0].as_ptr(),
            3,
            [1.0, 1.0].as_ptr(),
            2,
            1.0,
            &mut bad,
        )
    };
    assert_eq!(s, DfkStatus::InvalidPlant);
    let osc = plant(&[1.0], &[1.0, 0.0, 4.0], 1.0);
    assert_eq!(
        unsafe { dfk_plant_freq_response(osc.0, 2.0, &mut re, &mut im) },
        DfkStatus::Domain
    );
}

#[test]
fn intersections_and_classification() {
    let h = nl_a();
    let p = plant(&[-1.0, 2.0], &[1.0, 1.0, 0.0], 2.5);
    let mut roots = [0.0; 4];
    let mut count = 0;
    for qualitative in [0, 1] {
        let s = unsafe {
            dfk_find_intersections(h.0, qualitative, 0.4, roots.as_mut_ptr(), 4, &mut count)
        };
        assert_eq!((s, count), (DfkStatus::Ok, 2));
    }
    unsafe { dfk_find_intersections(h.0, 0, 0.4, roots.as_mut_ptr(), 4, &mut count) };
    let mut labels = [DfkStability::Stable; 2];
    for i in 0..2 {
        let s = unsafe {
            dfk_classify(
                p.0,
                h.0,
                0,
                roots[i],
                std::f64::consts::SQRT_2,
                &mut labels[i],
            )
        };
        assert_eq!(s, DfkStatus::Ok);
    }
    assert_eq!(labels, [DfkStability::Unstable, DfkStability::Stable]);
    let mid = 0.5 * (roots[0] + roots[1]);
    let mut l = DfkStability::Stable;
    assert_eq!(
        unsafe { dfk_classify(p.0, h.0, 0, mid, std::f64::consts::SQRT_2, &mut l) },
        DfkStatus::Ambiguous
    );
    assert_eq!(
        unsafe { dfk_find_intersections(h.0, 0, -1.0, roots.as_mut_ptr(), 4, &mut count) },
        DfkStatus::Domain
    );
}

#[test]
fn analysis_report() {
    let h = nl_a();
    let p = plant(&[-1.0, 2.0], &[1.0, 1.0, 0.0], 2.5);
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { dfk_analyze_json(h.0, p.0, DFK_ANALYZE_UNSTABLE_ELLIPSES, &mut out) },
        DfkStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { dfk_string_free(out) };
    let r: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["schema"], 1);
    assert_eq!(r["cycles"].as_array().unwrap().len(), 2);
    assert!(r["cycles"][0]["ellipse"].is_object());
}

#[test]
fn errors_are_per_thread() {
    let mut y = 0.0;
    assert_eq!(
        unsafe { dfk_nonlinearity_eval(ptr::null(), 1.0, &mut y) },
        DfkStatus::NullPointer
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_empty());
    assert!(!last_error().is_empty());
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/dfkit.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "dfk_nonlinearity_new",
        "dfk_nonlinearity_from_json",
        "dfk_nonlinearity_free",
        "dfk_nonlinearity_eval",
        "dfk_df_exact",
        "dfk_df_qualitative",
        "dfk_df_oracle",
        "dfk_plant_new",
        "dfk_plant_free",
        "dfk_plant_freq_response",
        "dfk_phase_crossovers",
        "dfk_find_intersections",
        "dfk_classify",
        "dfk_analyze_json",
        "dfk_string_free",
        "dfk_last_error",
        "typedef struct DfkNonlinearity DfkNonlinearity;",
        "typedef struct DfkPlant DfkPlant;",
        "DFK_STATUS_BUFFER_TOO_SMALL = 8",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "dfkit.h"
int main(void) {
    const double x[] = {2, 7, 20, 20, 25}, y[] = {0, 4.5, 7.21, 4.21, 5.25};
    DfkNonlinearity *nl = NULL;
    DfkPlant *plant = NULL;
    const double num[] = {-1, 2}, den[] = {1, 1, 0};
    double roots[4];
    size_t n = 0;
    char *json = NULL;
    DfkStability s;
    if (dfk_nonlinearity_new(x, y, 5, &nl) != DFK_STATUS_OK) return 1;
    if (dfk_plant_new(num, 2, den, 3, 2.5, &plant) != DFK_STATUS_OK) return 1;
    if (dfk_find_intersections(nl, 0, 0.4, roots, 4, &n) != DFK_STATUS_OK || n != 2) return 2;
    if (dfk_classify(plant, nl, 0, roots[1], 1.4142135623730951, &s) != DFK_STATUS_OK) return 3;
    if (dfk_analyze_json(nl, plant, DFK_ANALYZE_QUALITATIVE, &json) != DFK_STATUS_OK) return 4;
    dfk_string_free(json);
    dfk_plant_free(plant);
    dfk_nonlinearity_free(nl);
    return s == DFK_STABILITY_STABLE ? 0 : 5;
}
"#,
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    // target/<profile>/deps/capi-* -> target/<profile>/libdfkit_ffi.a
    let archive = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("libdfkit_ffi.a");
    let mut cmd = Command::new(&compiler);
    cmd.args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src);
    let exe = dir.path().join("use");
    if archive.exists() {
        cmd.arg(&archive)
            .args(["-lpthread", "-ldl", "-lm", "-o"])
            .arg(&exe);
    } else {
        cmd.arg("-fsyntax-only");
    }
    match cmd.status() {
        Ok(s) => assert!(s.success(), "C program does not build"),
        Err(e) => {
            eprintln!("skipping C build check, {compiler} unavailable: {e}");
            return;
        }
    }
    if archive.exists() {
        let code = Command::new(&exe).status().unwrap().code();
        assert_eq!(code, Some(0), "C program failed");
    }
}

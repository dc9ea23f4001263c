//! Drives the C surface the way a foreign binding would: everything goes
//! through the extern functions, raw pointers, and error codes.

use causebound_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

const GRAPH_JSON: &str = r#"{
  "nodes": [{"name": "X", "card": 2}, {"name": "Y", "card": 2}],
  "edges": [["X", "Y"]],
  "bidirected": [["X", "Y"]]
}"#;

fn csv_fixture() -> String {
    // Deterministic bow data with visible confounding.
    let mut rows = String::from("X,Y\n");
    for i in 0..400 {
        let x = (i % 5 < 3) as usize;
        let y = if x == 1 { (i % 4 != 0) as usize } else { (i % 10 == 0) as usize };
        rows.push_str(&format!("{},{}\n", x, y));
    }
    rows
}

#[test]
fn version_is_exposed() {
    let v = unsafe { CStr::from_ptr(cb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn graph_parse_round_trip_and_errors() {
    let good = CString::new(GRAPH_JSON).unwrap();
    let mut graph: *mut CbGraph = ptr::null_mut();
    assert_eq!(unsafe { cb_graph_parse(good.as_ptr(), &mut graph) }, CB_OK);
    assert!(!graph.is_null());
    unsafe { cb_graph_free(graph) };

    let bad = CString::new("{not json").unwrap();
    let mut out: *mut CbGraph = ptr::null_mut();
    assert_eq!(unsafe { cb_graph_parse(bad.as_ptr(), &mut out) }, CB_ERR_PARSE);
    let msg = unsafe { CStr::from_ptr(cb_last_error()) };
    assert!(!msg.to_str().unwrap().is_empty());

    assert_eq!(unsafe { cb_graph_parse(ptr::null(), &mut out) }, CB_ERR_NULL);
}

#[test]
fn dataset_mismatch_is_code_three() {
    let good = CString::new(GRAPH_JSON).unwrap();
    let mut graph: *mut CbGraph = ptr::null_mut();
    assert_eq!(unsafe { cb_graph_parse(good.as_ptr(), &mut graph) }, CB_OK);

    let csv = CString::new("X,Q\n0,1\n").unwrap();
    let mut data: *mut CbDataset = ptr::null_mut();
    assert_eq!(
        unsafe { cb_dataset_parse_csv(csv.as_ptr(), graph, &mut data) },
        CB_ERR_MISMATCH
    );
    unsafe { cb_graph_free(graph) };
}

#[test]
fn bounds_and_decompose_through_the_c_surface() {
    let good = CString::new(GRAPH_JSON).unwrap();
    let mut graph: *mut CbGraph = ptr::null_mut();
    assert_eq!(unsafe { cb_graph_parse(good.as_ptr(), &mut graph) }, CB_OK);

    let csv = CString::new(csv_fixture()).unwrap();
    let mut data: *mut CbDataset = ptr::null_mut();
    assert_eq!(unsafe { cb_dataset_parse_csv(csv.as_ptr(), graph, &mut data) }, CB_OK);

    let treatment = CString::new("X").unwrap();
    let outcome = CString::new("Y").unwrap();
    let (mut lower, mut upper) = (f64::NAN, f64::NAN);
    let code = unsafe {
        cb_bounds_lp(
            graph,
            data,
            treatment.as_ptr(),
            outcome.as_ptr(),
            1,
            1,
            false,
            &mut lower,
            &mut upper,
        )
    };
    assert_eq!(code, CB_OK);
    assert!(lower <= upper);
    assert!((0.0..=1.0).contains(&lower) && (0.0..=1.0).contains(&upper));

    let mut report: *mut std::ffi::c_char = ptr::null_mut();
    let mut decision: i32 = 0;
    let code = unsafe {
        cb_decompose(
            graph,
            data,
            treatment.as_ptr(),
            outcome.as_ptr(),
            1,
            1,
            false,
            0.05,
            0.01,
            40,
            7,
            0,
            -1.0,
            &mut report,
            &mut decision,
        )
    };
    assert_eq!(code, CB_OK);
    assert!((10..=12).contains(&decision));
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_string();
    assert!(text.contains("\"query\""));
    assert!(text.contains("\"decision\""));
    unsafe { cb_string_free(report) };

    unsafe {
        cb_dataset_free(data);
        cb_graph_free(graph);
    }
}

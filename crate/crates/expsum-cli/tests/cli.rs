//! End-to-end checks of the binary: exit codes, determinism of reports,
//! and the wire formats.

use std::process::Command;

fn expsum(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_expsum"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn composite_p_exits_2() {
    let (code, _, err) = expsum(&["np", "--d", "3", "--p", "6", "--coeffs", "0,0,0"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn p_dividing_d_exits_2() {
    let (code, _, _) = expsum(&["np", "--d", "3", "--p", "3", "--coeffs", "0,0,0"]);
    assert_eq!(code, 2);
}

#[test]
fn enumeration_guard_exits_3() {
    let (code, _, err) = expsum(&[
        "np", "--d", "4", "--p", "13", "--a", "3", "--coeffs", "0,1,0,0",
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("resource guard"));
}

#[test]
fn wrong_residue_counterexample_exits_2() {
    let (code, _, _) = expsum(&["counterexample", "--d", "3", "--p", "7"]);
    assert_eq!(code, 2);
}

#[test]
fn counterexample_demonstrates_the_gap() {
    let (code, out, _) = expsum(&["counterexample", "--d", "3", "--p", "5"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["all_slopes_half"], true);
    assert_eq!(v["zero_vector_in_w"], false);
    let (code, out, _) = expsum(&["counterexample", "--d", "4", "--p", "7"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["all_slopes_half"], true);
}

#[test]
fn np_report_is_deterministic_apart_from_timings() {
    let args = ["np", "--d", "3", "--p", "5", "--coeffs", "1,2,3"];
    let (c1, out1, _) = expsum(&args);
    let (c2, out2, _) = expsum(&args);
    assert_eq!(c1, 0);
    assert_eq!(c2, 0);
    let strip = |s: &str| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    assert_eq!(strip(&out1), strip(&out2));
    // the constant term is discarded with a notice
    let v = strip(&out1);
    assert!(v["notice"].as_str().unwrap().contains("constant term"));
}

#[test]
fn scan_csv_is_deterministic_apart_from_runtime() {
    let args = [
        "scan", "--d", "3", "--p", "5,7", "--mode", "sample:20", "--seed", "42", "--out", "csv",
    ];
    let strip = |s: &str| -> String {
        s.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (c1, out1, _) = expsum(&args);
    let (c2, out2, _) = expsum(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(strip(&out1), strip(&out2));
    assert!(out1.starts_with(
        "p,r,obs_slopes,gnp_slopes,hp_slopes,eq_obs_gnp,eq_obs_hp,n_attaining,runtime_ms"
    ));
}

#[test]
fn exhaustive_scan_guard_exits_3() {
    let (code, _, err) = expsum(&["scan", "--d", "3", "--p", "1031", "--mode", "exhaustive"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn scan_at_hodge_prime_attains_the_bound() {
    let (code, out, _) = expsum(&["scan", "--d", "3", "--p", "7", "--out", "csv"]);
    assert_eq!(code, 0);
    let row = out.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[6], "true", "observed infimum must equal the Hodge bound at p = 7");
    // every cubic attains it there
    assert_eq!(cols[7], "49");
}

#[test]
fn higher_precision_does_not_move_results() {
    let run = |prec: &str| -> serde_json::Value {
        let (code, out, err) = expsum(&[
            "np", "--d", "3", "--p", "5", "--a", "2", "--coeffs", "0,y,0", "--prec", prec,
        ]);
        assert_eq!(code, 0, "{err}");
        let mut v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("timings_ms");
        obj.remove("precision");
        v
    };
    assert_eq!(run("8"), run("12"));
}

#[test]
fn hodge_and_curve_round_trip() {
    let (code, out, _) = expsum(&["hodge", "--d", "3"]);
    assert_eq!(code, 0);
    let dir = std::env::temp_dir().join("expsum-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h3.json");
    std::fs::write(&path, &out).unwrap();
    let (code, out, _) = expsum(&["curve", "--polygon", path.to_str().unwrap(), "--p", "5"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["vertices"].as_array().unwrap().last().unwrap()[0], 8);
    // identity dilation at p = 2 is rejected
    let (code, _, _) = expsum(&["curve", "--polygon", path.to_str().unwrap(), "--p", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn gnp_vertex_finding_exits_5() {
    // p = 5 sits below the threshold where every support point is a
    // vertex; the report is printed and the exit code says finding
    let (code, out, _) = expsum(&["gnp", "--d", "3", "--p", "5"]);
    assert_eq!(code, 5);
    assert!(out.contains("support points"));
    let (code, _, _) = expsum(&["gnp", "--d", "3", "--p", "11"]);
    assert_eq!(code, 0);
}

#[test]
fn membership_command() {
    let (code, out, _) = expsum(&["membership", "--d", "3", "--r", "2", "--coeffs", "1,1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["in_w"], true);
    let (code, out, _) = expsum(&["membership", "--d", "3", "--r", "2", "--coeffs", "0,0"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["in_x"], false);
}

#[test]
fn dump_feeds_triangularize() {
    let dir = std::env::temp_dir().join("expsum-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let dump = dir.join("frob.json");
    let (code, _, err) = expsum(&[
        "np",
        "--d",
        "3",
        "--p",
        "7",
        "--coeffs",
        "0,1,1",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let aux = dir.join("aux.json");
    std::fs::write(&aux, serde_json::to_string(&v["auxiliary"]).unwrap()).unwrap();
    let (code, out, err) = expsum(&["triangularize", "--matrix", aux.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let rep: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(rep["polygons_equal"], true);
}

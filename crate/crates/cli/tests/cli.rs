use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mgcpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgcpp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate_day(out: &Path, seed: &str) -> Output {
    mgcpp(&[
        "simulate",
        "--asset",
        "SYN",
        "--lambda",
        "0.5",
        "--p-uu",
        "0.52",
        "--p-dd",
        "0.56",
        "--s0",
        "25",
        "--lobster",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ])
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn missing_file_exits_2_and_names_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope_message.csv");
    let o = mgcpp(&[
        "calibrate",
        "--message",
        &format!("X={}", missing.display()),
        "--orderbook",
        &format!("X={}", tmp.path().join("nope_orderbook.csv").display()),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("nope_message.csv"));
}

#[test]
fn simulate_and_validate_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&simulate_day(&a, "9")), 0);
    assert_eq!(code(&simulate_day(&b, "9")), 0);
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        // the manifest records the output directory, which differs
        if na != "manifest.json" {
            assert!(ca == cb, "{na} differs between identical runs");
        }
    }
    let c = tmp.path().join("c");
    assert_eq!(code(&simulate_day(&c, "10")), 0);
    assert_ne!(
        fs::read(a.join("events.csv")).unwrap(),
        fs::read(c.join("events.csv")).unwrap()
    );

    let validate = |out: &str| {
        mgcpp(&[
            "validate",
            "--asset",
            "SYN",
            "--data-dir",
            a.to_str().unwrap(),
            "--windows",
            "coarse",
            "--mode",
            "deterministic",
            "--out",
            tmp.path().join(out).to_str().unwrap(),
        ])
    };
    let (v1, v2) = (validate("v1"), validate("v2"));
    assert_eq!(code(&v1), 0, "{}", stderr(&v1));
    assert_eq!(code(&v2), 0);
    let strip = |d: &str| {
        files(&tmp.path().join(d))
            .into_iter()
            .filter(|(n, _)| n != "manifest.json")
            .collect::<Vec<_>>()
    };
    assert!(strip("v1") == strip("v2"), "validate outputs differ");
    let names: Vec<String> = files(&tmp.path().join("v1"))
        .into_iter()
        .map(|f| f.0)
        .collect();
    for expected in [
        "curves.csv",
        "table2.csv",
        "table3.csv",
        "table4.csv",
        "table7.csv",
        "validation.json",
    ] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
    let curves = fs::read_to_string(tmp.path().join("v1/curves.csv")).unwrap();
    assert!(curves.starts_with("asset,window_s,empirical,fclt1,fclt2\n"));
}

#[test]
fn poisson_day_count_in_band() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = mgcpp(&[
        "simulate",
        "--lambda",
        "0.1366",
        "--horizon",
        "23400",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let n = fs::read_to_string(out.join("events.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    // mean 3196.4, sd 56.5
    assert!((n as f64 - 3196.4).abs() < 4.0 * 56.5, "{n} events");
}

#[test]
fn unstable_hawkes_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mgcpp(&[
        "simulate",
        "--process",
        "hawkes",
        "--lambda",
        "1,1",
        "--alpha",
        "0.6,0.6;0.6,0.6",
        "--beta",
        "1,1;1,1",
        "--out",
        tmp.path().join("h").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("spectral radius 1.2"), "{}", stderr(&o));
}

#[test]
fn parameter_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mgcpp(&[
        "calibrate",
        "--states",
        "3",
        "--asset",
        "X",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    let o = mgcpp(&[
        "calibrate",
        "--windows",
        "5,1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn flat_book_is_a_validation_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let mut msg = String::new();
    let mut book = String::new();
    for k in 0..100 {
        msg.push_str(&format!("{},1,{},100,200100,-1\n", 34_200 + k * 10, k + 1));
        book.push_str("200100,100,199900,100\n");
    }
    fs::write(tmp.path().join("F_message.csv"), msg).unwrap();
    fs::write(tmp.path().join("F_orderbook.csv"), book).unwrap();
    let o = mgcpp(&[
        "calibrate",
        "--asset",
        "F",
        "--data-dir",
        tmp.path().to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn config_is_echoed_and_lock_respected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    let text = "seed = 4\nout = \"res\"\nsimulate.lambda = [0.2]\nsimulate.horizon = 1000\n";
    fs::write(&cfg, text).unwrap();
    let o = mgcpp(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let res = tmp.path().join("res");
    assert_eq!(fs::read_to_string(res.join("config.toml")).unwrap(), text);
    let manifest = fs::read_to_string(res.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 4"));

    fs::write(res.join(".mgcpp.lock"), "").unwrap();
    let o = mgcpp(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("locked"));
}

#[test]
fn crossval_writes_fold_table() {
    let tmp = tempfile::tempdir().unwrap();
    let day = tmp.path().join("day");
    assert_eq!(code(&simulate_day(&day, "3")), 0);
    let out = tmp.path().join("cv");
    let o = mgcpp(&[
        "crossval",
        "--asset",
        "SYN",
        "--data-dir",
        day.to_str().unwrap(),
        "--folds",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cv = fs::read_to_string(out.join("cv.csv")).unwrap();
    assert_eq!(cv.lines().count(), 2);
    assert!(cv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("SYN,1,34200,51000,51000,51600,"));
    let summary = fs::read_to_string(out.join("cv_summary.csv")).unwrap();
    assert!(summary.lines().last().unwrap().starts_with("ALL,"));
}

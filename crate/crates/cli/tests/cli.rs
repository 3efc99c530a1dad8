use std::process::{Command, Output};

fn kpairs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpairs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|r| r.starts_with(' ')))
        .unwrap_or_else(|| panic!("no {key} line in {text}"))
        .split_whitespace()
        .next()
        .unwrap()
}

#[test]
fn naive_count_of_small_case() {
    let o = kpairs(&["count", "--k", "3", "--h", "10", "--algorithm", "naive"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "value"), "8");
}

#[test]
fn algorithms_agree_through_cli() {
    for alg in ["naive", "kernel", "radical"] {
        let o = kpairs(&[
            "count",
            "--k",
            "2",
            "--h",
            "10",
            "--algorithm",
            alg,
            "--threads",
            "2",
        ]);
        assert_eq!(field(&stdout(&o), "value"), "18", "{alg}");
    }
}

#[test]
fn constants_for_k2() {
    let o = kpairs(&["constants", "--k", "2", "--precision", "1e-9"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let ck: f64 = field(&text, "c_k").parse().unwrap();
    assert!((ck - 0.607927102).abs() < 1e-9);
    assert_eq!(field(&text, "F_k"), "1/1");
}

#[test]
fn exit_codes() {
    assert_eq!(
        kpairs(&["count", "--k", "2", "--h", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        kpairs(&["count", "--k", "1", "--h", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(kpairs(&["count", "--k", "2"]).status.code(), Some(2));
    assert_eq!(
        kpairs(&["table", "--k", "2", "--grid", "10,5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kpairs(&["constants", "--k", "2", "--precision", "0"])
            .status
            .code(),
        Some(2)
    );
    // naive guard
    let o = kpairs(&["count", "--k", "2", "--h", "20000", "--algorithm", "naive"]);
    assert_eq!(o.status.code(), Some(3));
    let o = kpairs(&[
        "count",
        "--k",
        "2",
        "--h",
        "20",
        "--algorithm",
        "naive",
        "--naive-guard",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3));
    // sieve memory cap
    let o = Command::new(env!("CARGO_BIN_EXE_kpairs"))
        .args([
            "count",
            "--k",
            "3",
            "--h",
            "1000000",
            "--algorithm",
            "kernel",
        ])
        .env("KPAIRS_SIEVE_MEM_BYTES", "1024")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    // unreachable precision
    assert_eq!(
        kpairs(&["constants", "--k", "2", "--precision", "1e-18"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn json_carries_provenance() {
    let o = kpairs(&[
        "count",
        "--k",
        "3",
        "--h",
        "1000000",
        "--format",
        "json",
        "--threads",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"], 152844);
    assert_eq!(v["kind"], "S_k");
    assert_eq!(v["provenance"]["algorithm"], "radical");
    assert_eq!(v["provenance"]["workers"], 1);
    assert_eq!(v["provenance"]["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(v["provenance"]["elapsed_secs"].as_f64().unwrap() >= 0.0);

    let o = kpairs(&["constants", "--k", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["factor"], "2/3");
    assert!((v["ck"]["value"].as_f64().unwrap() - 0.0477912380724).abs() < 1e-12);
}

#[test]
fn output_is_deterministic_across_threads() {
    let strip = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("provenance");
        for key in ["elapsed_secs", "workers"] {
            v.as_object_mut().unwrap().remove(key);
        }
        v
    };
    let a = strip(kpairs(&[
        "weights",
        "--k",
        "3",
        "--h",
        "1000000",
        "--format",
        "json",
        "--threads",
        "1",
    ]));
    let b = strip(kpairs(&[
        "weights",
        "--k",
        "3",
        "--h",
        "1000000",
        "--format",
        "json",
        "--threads",
        "3",
    ]));
    assert_eq!(a, b);
}

#[derive(serde::Deserialize)]
struct Row {
    k: u32,
    #[serde(rename = "H")]
    h: u64,
    exact: u128,
    main_term: f64,
    ratio: f64,
    scaled_residual: f64,
}

#[test]
fn table_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = kpairs(&[
        "table",
        "--k",
        "3",
        "--grid",
        "1e3:1e6:geometric:5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("k,H,exact,main_term,ratio,scaled_residual")
    );

    let o = kpairs(&[
        "table",
        "--k",
        "3",
        "--grid",
        "1e3:1e6:geometric:5",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows: Vec<Row> = csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows.len(), 5);
    for (r, j) in rows.iter().zip(v["rows"].as_array().unwrap()) {
        assert_eq!(r.k, 3);
        assert_eq!(r.h, j["h"].as_u64().unwrap());
        assert_eq!(r.exact, u128::from(j["exact"].as_u64().unwrap()));
        assert_eq!(
            r.main_term.to_bits(),
            j["main_term"].as_f64().unwrap().to_bits()
        );
        assert_eq!(r.ratio.to_bits(), j["ratio"].as_f64().unwrap().to_bits());
        assert_eq!(
            r.scaled_residual.to_bits(),
            j["scaled_residual"].as_f64().unwrap().to_bits()
        );
        // re-emitting gives the same text
        assert_eq!(
            format!("{:.16e}", r.main_term)
                .parse::<f64>()
                .unwrap()
                .to_bits(),
            r.main_term.to_bits()
        );
    }
}

#[test]
fn fit_and_verify_and_selftest() {
    let o = kpairs(&[
        "fit",
        "--k",
        "3",
        "--grid",
        "1e3:1e6:geometric:7",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["relative_deviation"].as_f64().unwrap() < 0.3);
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 3);

    let o = kpairs(&["fit", "--k", "3", "--grid", "10,20"]);
    assert_eq!(o.status.code(), Some(1));

    let o = kpairs(&["verify", "--h-max", "300", "--identity-h", "500"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let o = kpairs(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));
}

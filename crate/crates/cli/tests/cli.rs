use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stratalloc_cli::io::{canonical_allocation, read_allocation, AllocationOutput};
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stratalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratalloc"))
        .args(args)
        .env_remove("STRATALLOC_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn allocate(dir: &TempDir, input: &Path, n: &str, algorithm: &str) -> PathBuf {
    let out = dir.path().join(format!("{algorithm}-{n}.json"));
    let res = stratalloc(&[
        "allocate",
        "--input",
        path_str(input),
        "--n",
        n,
        "--algorithm",
        algorithm,
        "--output",
        path_str(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    out
}

fn verify(input: &Path, n: &str, allocation: &Path) -> Output {
    stratalloc(&[
        "verify",
        "--input",
        path_str(input),
        "--n",
        n,
        "--allocation",
        path_str(allocation),
    ])
}

#[test]
fn genpop_table1_matches_golden_csv() {
    let out = stratalloc(&["genpop", "--kind", "table1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        std::fs::read_to_string(data("table1.csv")).unwrap()
    );
}

#[test]
fn allocate_table1_matches_golden_json() {
    let out = stratalloc(&["allocate", "--input", path_str(&data("table1.csv")), "--n", "8000"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let golden = std::fs::read_to_string(data("table1_rna.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
    let parsed: AllocationOutput = serde_json::from_str(&golden).unwrap();
    assert_eq!(parsed.take_all, ["2", "6", "15", "17"]);
    assert_eq!(parsed.iterations, 4);
    assert!(parsed.note.is_none());
}

#[test]
fn solvers_give_identical_canonical_allocations() {
    let dir = TempDir::new().unwrap();
    let input = data("table1.csv");
    let canon: Vec<String> = ["rna", "sga", "coma"]
        .iter()
        .map(|alg| canonical_allocation(&read_allocation(&allocate(&dir, &input, "8000", alg)).unwrap()))
        .collect();
    assert_eq!(canon[0], canon[1]);
    assert_eq!(canon[0], canon[2]);

    let bisect = read_allocation(&allocate(&dir, &input, "8000", "bisection")).unwrap();
    let rna = read_allocation(&dir.path().join("rna-8000.json")).unwrap();
    for (p, q) in bisect.allocation.iter().zip(&rna.allocation) {
        assert_eq!(p.label, q.label);
        assert!((p.x - q.x).abs() <= 1e-9 * q.x);
    }
}

#[test]
fn verify_accepts_solver_output() {
    let dir = TempDir::new().unwrap();
    let input = data("table1.csv");
    for alg in ["rna", "sga", "coma", "bisection"] {
        let out = verify(&input, "8000", &allocate(&dir, &input, "8000", alg));
        assert_eq!(code(&out), 0, "{alg}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn verify_rejects_a_perturbed_allocation() {
    let dir = TempDir::new().unwrap();
    let mut claimed = read_allocation(&data("table1_rna.json")).unwrap();
    // strata 1 and 3 are not take-all
    claimed.allocation[0].x += 1.0;
    claimed.allocation[2].x -= 1.0;
    let path = dir.path().join("perturbed.json");
    std::fs::write(&path, claimed.to_json().unwrap()).unwrap();
    let out = verify(&data("table1.csv"), "8000", &path);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("stationarity"), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], false);
    assert_eq!(report["fixed_point"], true);
}

#[test]
fn verify_rejects_a_wrong_take_all_set() {
    let dir = TempDir::new().unwrap();
    let mut claimed = read_allocation(&data("table1_rna.json")).unwrap();
    claimed.take_all.retain(|l| l != "2");
    let path = dir.path().join("wrong_v.json");
    std::fs::write(&path, claimed.to_json().unwrap()).unwrap();
    let out = verify(&data("table1.csv"), "8000", &path);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("fixed point"), "{}", stderr(&out));
}

#[test]
fn census_is_allocated_and_verified() {
    let dir = TempDir::new().unwrap();
    let input = data("table1.csv");
    let path = allocate(&dir, &input, "20000", "rna");
    let out = read_allocation(&path).unwrap();
    assert!(out.note.as_deref().unwrap_or("").contains("census"));
    assert!(out.allocation.iter().all(|e| e.x == 1000.0));
    assert_eq!(out.take_all.len(), 20);
    assert_eq!(code(&verify(&input, "20000", &path)), 0);
}

#[test]
fn infeasible_and_malformed_inputs() {
    let input = data("table1.csv");
    let out = stratalloc(&["allocate", "--input", path_str(&input), "--n", "20001"]);
    assert_eq!(code(&out), 3);

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "label,a,b\nx,1,10\ny,2,abc\n").unwrap();
    let out = stratalloc(&["allocate", "--input", path_str(&bad), "--n", "5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = stratalloc(&["allocate", "--input", path_str(&input), "--n", "-4"]);
    assert_eq!(code(&out), 2);
    let out = stratalloc(&[
        "allocate",
        "--input",
        path_str(&input),
        "--n",
        "100",
        "--algorithm",
        "magic",
    ]);
    assert_eq!(code(&out), 2);
    let out = stratalloc(&["allocate", "--input", "/nonexistent/strata.csv", "--n", "100"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sizes_header_is_converted() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("sizes.csv");
    std::fs::write(&input, "label,N,S\nu,100,2\nv,50,40\nw,200,1\n").unwrap();
    let path = allocate(&dir, &input, "60", "coma");
    let out = read_allocation(&path).unwrap();
    assert_eq!(out.take_all, ["v"]);
    assert_eq!(code(&verify(&input, "60", &path)), 0);
}

#[test]
fn genpop_is_deterministic_under_seed() {
    let small = ["genpop", "--kind", "lognormal", "--blocks", "3", "--block-size", "2000"];
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_stratalloc"));
        cmd.args(small).args(extra).env_remove("STRATALLOC_SEED");
        if let Some(seed) = env {
            cmd.env("STRATALLOC_SEED", seed);
        }
        let out = cmd.output().unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out.stdout
    };
    let first = run(&["--seed", "42"], None);
    assert_eq!(first, run(&["--seed", "42"], None));
    assert_eq!(first, run(&[], Some("42")));
    assert_ne!(first, run(&["--seed", "43"], None));
    assert!(String::from_utf8(first).unwrap().starts_with("label,N,S\n"));
}

#[test]
fn genpop_power_rows() {
    let out = stratalloc(&["genpop", "--kind", "power"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert_eq!(lines[1], "1,10000,1000");
    let last: Vec<f64> = lines[20].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(last, [1e23, 1000.0]);
}

#[test]
fn genpop_allocate_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let kinds: [(&str, &[&str]); 3] = [
        ("table1", &[]),
        ("power", &[]),
        ("lognormal", &["--blocks", "4", "--block-size", "3000", "--seed", "9"]),
    ];
    for (kind, extra) in kinds {
        let csv = dir.path().join(format!("{kind}.csv"));
        let mut args = vec!["genpop", "--kind", kind, "--output", path_str(&csv)];
        args.extend_from_slice(extra);
        assert_eq!(code(&stratalloc(&args)), 0);
        let total: f64 = std::fs::read_to_string(&csv)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
            .sum();
        let total = if kind == "lognormal" { total } else { 1000.0 * 20.0 };
        for f in [0.05, 0.3, 0.7] {
            let n = (f * total).round().to_string();
            for alg in ["rna", "sga", "coma", "bisection"] {
                let path = allocate(&dir, &csv, &n, alg);
                let out = verify(&csv, &n, &path);
                assert_eq!(
                    code(&out),
                    0,
                    "{kind} {alg} n={n}: {}",
                    String::from_utf8_lossy(&out.stdout)
                );
            }
        }
    }
}

#[test]
fn roundcmp_report() {
    let out = stratalloc(&[
        "roundcmp",
        "--input",
        path_str(&data("table1.csv")),
        "--fraction",
        "0.4",
        "--fraction",
        "1.0",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "fraction,n,d2_cont,d2_rounded,d2_int,ratio_ci,ratio_ri");
    assert!(lines[1].starts_with("0.4,8000,"));
    assert_eq!(lines[2], "1,20000,0,0,0,1,1");

    let out = stratalloc(&["roundcmp", "--kind", "table1", "--fraction", "0.0005"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("below the number of strata"));
}

#[test]
fn bench_with_a_single_repetition() {
    let out = stratalloc(&[
        "bench",
        "--input",
        path_str(&data("table1.csv")),
        "--repetitions",
        "1",
        "--fraction",
        "0.4",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(
        rows[0],
        "algorithm,problem_id,K,n,fraction,median_ns,repetitions,iterations,take_all_count"
    );
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("rna,table1,20,8000,0.4,"));
    assert!(rows[1].ends_with(",1,4,4"));
    assert!(rows[2].ends_with(",1,5,4"));

    let out = stratalloc(&["bench", "--repetitions", "1"]);
    assert_eq!(code(&out), 2);
}

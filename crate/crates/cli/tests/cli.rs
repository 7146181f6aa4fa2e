use std::process::{Command, Output};

fn hpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpp"))
        .args(args)
        .env_remove("HPP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eta_csv_rows() {
    let o = hpp(&["eta", "--field", "3", "--n", "2", "--x", "1,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,w,eta"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.contains(&"1;1,1;1,2"));
    let total: u32 = rows
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse::<u32>().unwrap())
        .sum();
    assert_eq!(total, 9);
}

#[test]
fn field_modulus() {
    let o = hpp(&["field", "--field", "2^3", "--format", "csv"]);
    assert_eq!(stdout(&o), "field,order,modulus\n2^3,8,t^3+t+1\n");
}

#[test]
fn exit_codes() {
    assert_eq!(hpp(&["field", "--field", "6"]).status.code(), Some(2));
    assert_eq!(hpp(&["nonsense"]).status.code(), Some(2));
    let guard = hpp(&["eta", "--field", "101", "--n", "5", "--x", "1,1,1,1,1"]);
    assert_eq!(guard.status.code(), Some(3));
    let dens = hpp(&["densmat", "--field", "37", "--q", "1"]);
    assert_eq!(dens.status.code(), Some(3));
    let analysis = hpp(&["success", "--field", "4", "--n", "2", "--analysis", "first"]);
    assert_eq!(analysis.status.code(), Some(2));
    let few = hpp(&["baseline", "--ds", "101,401", "--trials", "5"]);
    assert_eq!(few.status.code(), Some(2));
}

#[test]
fn e2e_is_deterministic_across_thread_counts() {
    let args = ["e2e", "--field", "7", "--m", "2", "--n", "2", "--seed", "11"];
    let one = hpp(&[&["--jobs", "1"][..], &args[..]].concat());
    let four = hpp(&[&["--jobs", "4"][..], &args[..]].concat());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    let v: serde_json::Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(v["correct"], true);
    assert_eq!(v["kappa"], 3);
    assert!(v["instance"].get("q").is_none());
}

#[test]
fn seed_from_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_hpp"))
            .args(["e2e", "--field", "5", "--m", "1", "--n", "2", "--reveal"])
            .env("HPP_SEED", seed)
            .output()
            .unwrap()
    };
    let a = run("4");
    let b = hpp(&["e2e", "--field", "5", "--m", "1", "--n", "2", "--reveal", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["instance"]["seed"], 4);
    assert!(v["instance"]["pi"].is_array());
}

#[test]
fn e2e_with_baseline_and_plan() {
    let o = hpp(&[
        "e2e", "--field", "101", "--m", "1", "--n", "1", "--seed", "2", "--baseline", "--explain-plan",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["baseline"]["collision_queries"].as_u64().unwrap() >= 2);
    assert_eq!(v["plan"]["vars"], 1);
    let bad = hpp(&["e2e", "--field", "7", "--m", "2", "--n", "2", "--baseline"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn success_report_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = hpp(&[
        "success",
        "--field",
        "7",
        "--n",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let (ideal, approx, lemma) = (
        v["ideal"].as_f64().unwrap(),
        v["approx"].as_f64().unwrap(),
        v["lemma2_bound"].as_f64().unwrap(),
    );
    assert!(lemma <= approx && approx <= ideal && ideal <= 1.0);
    assert_eq!(v["D"], 2);
    assert_eq!(v["x_good_count"], 36);
}

#[test]
fn dumped_distribution_sums_to_success() {
    let o = hpp(&["success", "--field", "5", "--n", "2", "--dump-dist", "--q", "1,3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 625);
    let hit: f64 = rows
        .iter()
        .filter(|r| r[1] == "1;3")
        .map(|r| r[2].parse::<f64>().unwrap())
        .sum();
    let report = hpp(&["success", "--field", "5", "--n", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&report.stdout).unwrap();
    assert!((hit / 25.0 - v["approx"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn plan_and_densmat() {
    let o = hpp(&["plan", "--field", "11", "--m", "3", "--n", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kappa"], 7);
    let o = hpp(&["densmat", "--field", "5", "--q", "2,1", "--x", "1,3"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["off_block_mass"].as_f64().unwrap() < 1e-10);
    assert!(v["pipeline_max_deviation"].as_f64().unwrap() < 1e-9);
    let o = hpp(&["densmat", "--field", "2", "--q", "1", "--dump-matrix"]);
    assert_eq!(stdout(&o).lines().count(), 4);
}

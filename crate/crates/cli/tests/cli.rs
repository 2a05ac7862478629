use gconv::formulas::kendall_pmf;
use std::process::{Command, Output};

fn gconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gconv"))
        .args(args)
        .env_remove("GCONV_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_all_passes_and_enumerates_checks() {
    let o = gconv(&["verify", "all", "--algebra", "stable:alpha=1", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let checks = text.lines().find_map(|l| l.strip_prefix("# checks: ")).unwrap();
    for name in ["axiom_scaling", "exp_gcf_mc", "lom_factorization", "type1_marginal_gcf", "type2_pmf_cell", "type2_stationarity"] {
        assert!(checks.split(';').any(|c| c == name), "{name} missing from {checks}");
    }
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "check,algebra,params,empirical,predicted,sigma,z,pass");
}

#[test]
fn identical_config_gives_identical_bytes() {
    let args = ["verify", "type2", "--algebra", "kendall:alpha=1", "--seed", "3", "--budget", "20000"];
    let a = gconv(&args);
    let b = gconv(&[&args[..], &["--workers", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let via_env = Command::new(env!("CARGO_BIN_EXE_gconv"))
        .args(["verify", "type2", "--algebra", "kendall:alpha=1", "--budget", "20000"])
        .env("GCONV_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, via_env.stdout);
}

#[test]
fn kendall_pmf_table() {
    let o = gconv(&["table", "kendall-pmf", "--alpha", "1", "--t", "0.5,2", "--nmax", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,n,pmf"));
    let rows: Vec<(f64, u64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 18);
    for (t, n, p) in rows {
        assert_eq!(p, kendall_pmf(n, t, 1.0));
    }
}

#[test]
fn unknown_algebra_is_a_usage_error() {
    let o = gconv(&["verify", "all", "--algebra", "foo"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tag[:key=value,...]") && err.contains("kendall"), "{err}");
}

#[test]
fn unsupported_capability_is_a_usage_error() {
    let o = gconv(&["sample-kernel", "--algebra", "volkovich", "--x", "1", "--y", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gconv(&["verify", "type2", "--algebra", "kingman3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn argument_errors_and_help() {
    assert_eq!(gconv(&["verify", "nothing"]).status.code(), Some(1));
    assert_eq!(gconv(&["table", "kendall-pmf", "--alpha", "1", "--t", "1", "--budget", "10"]).status.code(), Some(1));
    assert_eq!(gconv(&["--help"]).status.code(), Some(0));
    assert_eq!(gconv(&["--version"]).status.code(), Some(0));
}

#[test]
fn json_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.json");
    let o = gconv(&[
        "simulate", "walk", "--algebra", "kendall:alpha=1", "--paths", "3", "--steps", "4", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 12);
    for path_id in 0..3 {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r["path"] == path_id)
            .map(|r| r["value"].as_f64().unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn simulations_and_listing() {
    let o = gconv(&["simulate", "type2", "--algebra", "stable:alpha=2", "--paths", "5", "--times", "0.5,1"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("path,t,count,truncated"));
    assert_eq!(text.lines().count(), 11);
    let o = gconv(&["simulate", "type1", "--algebra", "max", "--paths", "4"]);
    for line in stdout(&o).lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if f[1] == 0.0 {
            assert_eq!(f[2], 0.0);
        }
        assert!(f[2] == 0.0 || f[2] == 1.0);
    }
    let o = gconv(&["list-algebras"]);
    assert_eq!(stdout(&o).lines().count(), 12);
    let o = gconv(&["gcf", "--algebra", "kendall:alpha=1", "--law", "kendall:1", "--grid", "0:2:3"]);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("2.0000000000000000e0,"), "{text}");
    let o = gconv(&["gcf", "--algebra", "stable:alpha=1", "--law", "exp:1", "--grid", "0.5,1", "--budget", "5000"]);
    assert_eq!(o.status.code(), Some(0));
}

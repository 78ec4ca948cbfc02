use std::path::Path;
use std::process::{Command, Output};

use llwave::{Field, Grid};

fn llwave(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llwave"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn curve1d_rows_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = llwave(
        &[
            "curve1d",
            "--cmin",
            "0.05",
            "--cmax",
            "0.95",
            "--steps",
            "50",
            "--out",
            "curve.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let (header, rows) = csv_rows(&dir.path().join("curve.csv"));
    assert_eq!(header, ["c", "p", "E", "E_pred", "quad_E", "quad_p", "err_E", "err_p"]);
    assert_eq!(rows.len(), 50);
    let err_e = header.iter().position(|h| h == "err_E").unwrap();
    assert!(rows.iter().all(|r| r[err_e].abs() <= 1e-8));
    for r in &rows {
        assert!((r[2] - 2.0 * (1.0 - r[0] * r[0]).sqrt()).abs() <= 1e-12);
        assert!((r[2] - r[3]).abs() <= 1e-12);
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        assert!(llwave(&["curve1d", "--steps", "17", "--out", out], dir.path())
            .status
            .success());
    }
    for out in ["pa.csv", "pb.csv"] {
        assert!(
            llwave(&["profile1d", "--c", "0.4", "--n", "101", "--out", out], dir.path())
                .status
                .success()
        );
    }
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("pa.csv"), read("pb.csv"));
    let (header, rows) = csv_rows(&dir.path().join("pa.csv"));
    assert_eq!(header, ["x", "u1", "u2", "u3", "theta"]);
    assert_eq!(rows.len(), 101);
}

#[test]
fn symbol_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = llwave(&["symbol", "--kind", "Lc", "--c", "1", "--xi", "1,0"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 1.0);
    let o = llwave(&["symbol", "--kind", "Lc", "--c", "0.5", "--xi", "-1,2"], dir.path());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    // |ξ|² / (|ξ|⁴ + |ξ|² − c²ξ₁²) at ξ = (−1, 2)
    assert!((v - 5.0 / (25.0 + 5.0 - 0.25)).abs() <= 1e-15);
}

#[test]
fn kernel_norm_passes_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = llwave(&["kernel-norm", "--c", "1"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn diagnose_trivial_field() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::plane([32, 32], [20.0, 20.0]).unwrap();
    llwave::io::write_field(&Field::trivial(&g, 0.5), &dir.path().join("trivial.llfw")).unwrap();
    let o = llwave(
        &["diagnose", "--in", "trivial.llfw", "--out", "report.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let report = &json["report"];
    for key in [
        "energy",
        "momentum_lifted",
        "momentum_density",
        "residual_pde",
        "u3_linf",
    ] {
        assert_eq!(report[key].as_f64(), Some(0.0), "{key}");
    }
    assert_eq!(report["pohozaev"]["poh2"].as_f64(), Some(0.0));
    assert_eq!(report["pohozaev"]["poh3"].as_f64(), Some(0.0));
    for id in ["i1", "i2", "i2b", "i3"] {
        assert_eq!(report["identities"][id]["residual"].as_f64(), Some(0.0), "{id}");
    }
    assert_eq!(json["metadata"]["grid"]["n"][0].as_u64(), Some(32));
}

#[test]
fn solve_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let o = llwave(
        &[
            "solve2d",
            "--c",
            "0.95",
            "--nx",
            "128",
            "--ny",
            "128",
            "--lx",
            "60",
            "--ly",
            "240",
            "--tol",
            "1e-3",
            "--out",
            "wave.llfw",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("converged true"));
    let (header, rows) = csv_rows(&dir.path().join("wave.log.csv"));
    assert_eq!(header, ["step", "residual"]);
    assert!(rows.len() > 1);

    let field = llwave::io::read_field(&dir.path().join("wave.llfw")).unwrap();
    assert_eq!(field.c(), 0.95);

    let o = llwave(&["diagnose", "--in", "wave.llfw", "--out", "report.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let o = llwave(
        &["farfield", "--in", "wave.llfw", "--out", "ff.csv", "--ndir", "8"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    assert!(dir.path().join("ff.csv").exists());
    assert!(dir.path().join("ff.json").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = llwave(&["curve1d", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = llwave(&["symbol", "--kind", "Lc", "--c", "abc", "--xi", "1,0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--c"));
    let o = llwave(&["symbol", "--kind", "Nope", "--xi", "1,0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = llwave(&["diagnose", "--in", "missing.llfw"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn vortex_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::plane([32, 32], [20.0, 20.0]).unwrap();
    let trivial = Field::trivial(&g, 0.5);
    let [u1, u2, u3] = trivial.components();
    let pole = u3.map(|_| 1.0);
    let f = Field::new(0.5, u1.map(|_| 0.0), u2.map(|_| 0.0), pole).unwrap();
    llwave::io::write_field(&f, &dir.path().join("pole.llfw")).unwrap();
    let o = llwave(&["diagnose", "--in", "pole.llfw"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{o:?}");
}

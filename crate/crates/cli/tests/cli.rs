use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gsw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsw")).args(args).output().expect("spawn gsw")
}

fn scenario(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    p.to_str().unwrap().to_owned()
}

fn artifacts(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "meta.json" {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn default_scenario_passes_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let file = scenario("default.toml");
    let r1 = gsw(&["run", &file, "--out", a.path().to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(r1.status.code(), Some(0), "{}", String::from_utf8_lossy(&r1.stderr));
    let r2 = gsw(&["run", &file, "--out", b.path().to_str().unwrap()]);
    assert_eq!(r2.status.code(), Some(0));

    let csv = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    let passing = csv.lines().skip(1).filter(|l| l.contains(",true,")).count();
    assert!(passing >= 20, "{passing} passing jobs");

    let listed = gsw(&["run", &file, "--list"]);
    assert_eq!(listed.status.code(), Some(0));
    let stdout = String::from_utf8(listed.stdout).unwrap();
    let count = stdout.lines().filter(|l| l.contains('\t')).count();
    assert_eq!(count, csv.lines().count() - 1);
    assert!(stdout.ends_with(&format!("{count} jobs\n")));

    let (x, y) = (artifacts(a.path()), artifacts(b.path()));
    assert!(!x.is_empty());
    assert_eq!(x.len(), y.len());
    for ((pa, da), (pb, db)) in x.iter().zip(&y) {
        assert_eq!(pa, pb);
        assert!(da == db, "{} differs between runs", pa.display());
    }
}

#[test]
fn failing_condition_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let r = gsw(&["run", &scenario("linear_i1.toml"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("FAIL"));
}

#[test]
fn malformed_config_exits_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(
        &file,
        "schema_version = 1\n\n[[functions]]\nid = \"f\"\nn = 1\nterms = [{ alpha = [0], re = 1.0, im = 0.0 }]\n",
    )
    .unwrap();
    let r = gsw(&["run", file.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("functions[0]") && err.contains("decay"), "{err}");
}

#[test]
fn hex_seed_is_accepted() {
    let r = gsw(&["run", &scenario("linear_i1.toml"), "--list", "--seed", "0x5eed"]);
    assert_eq!(r.status.code(), Some(0));
    let r = gsw(&["run", &scenario("linear_i1.toml"), "--seed", "zz"]);
    assert_eq!(r.status.code(), Some(2));
}

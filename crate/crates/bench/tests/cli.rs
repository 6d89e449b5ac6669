use std::path::Path;
use std::process::{Command, Output};

fn hemilearn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hemilearn")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_then_run_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let gen = hemilearn(
        &["gen", "--kind", "clustered", "--n", "10", "--k", "5", "--r", "1", "--r-in", "0.1", "--seed", "7", "--out", "inst.csv"],
        dir.path(),
    );
    assert!(gen.status.success());
    assert!(dir.path().join("inst.csv").exists());
    let run = hemilearn(&["run", "--algo", "indgreedy", "--instance", "inst.csv", "--eps", "0.01"], dir.path());
    assert_eq!(run.status.code(), Some(0));
    let text = stdout(&run);
    assert_eq!(text.lines().count(), 1);
    let fields: Vec<&str> = text.trim().split(',').collect();
    assert_eq!(fields.len(), 17);
    assert_eq!(fields[0], "indgreedy");
    assert_eq!(fields[14], "630");
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = hemilearn(&["verify", "--n", "4", "--trials", "200"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("200 of 200"));
    let broken = hemilearn(&["verify", "--n", "4", "--trials", "60", "--seed", "11", "--skip-pivot", "0"], dir.path());
    assert_eq!(broken.status.code(), Some(2));
    assert!(stdout(&broken).contains("FAIL seed"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["frobnicate"][..], &["run", "--bogus"], &["verify", "--n", "x"]] {
        let o = hemilearn(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(hemilearn(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(hemilearn(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("grid.conf"),
        "# small grid\ninstance = restaurants-cuisine\nalgorithms = learnhm, indgreedy\naxis = eps\nvalues = 0.1, 0.05\nn = 12\nseeds = 2\n",
    )
    .unwrap();
    let a = hemilearn(&["sweep", "--config", "grid.conf", "--out", "a.csv", "--quiet"], dir.path());
    let b = hemilearn(&["sweep", "--config", "grid.conf", "--out", "b.csv", "--quiet"], dir.path());
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 4 * 2 + 4);
}

#[test]
fn bad_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "instance = clustered\nk = 2\nn = 6\nseeds = many\n").unwrap();
    let o = hemilearn(&["sweep", "--config", "bad.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.conf:4"));
}

#[test]
fn bounds_and_items() {
    let dir = tempfile::tempdir().unwrap();
    let o = hemilearn(&["bounds", "--n", "100", "--k", "5", "--r-in", "0.1", "--eps", "0.01"], dir.path());
    assert_eq!(stdout(&o).trim(), "57000");
    let o = hemilearn(&["gen", "--kind", "items", "--out", "items.csv"], dir.path());
    assert!(o.status.success());
    let items = hemilearn::instances::load_items_csv(dir.path().join("items.csv")).unwrap();
    assert_eq!(items.len(), 290);
}

use std::path::Path;
use std::process::{Command, Output};

fn gossipsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gossipsim"))
        .args(args)
        .output()
        .expect("spawn gossipsim")
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

fn column(rows: &[String], name: &str) -> Vec<String> {
    let header: Vec<&str> = rows[0].split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    rows[1..]
        .iter()
        .map(|r| r.split(',').nth(k).unwrap().to_string())
        .collect()
}

#[test]
fn bounds_from_flags_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gossipsim(&[
        "bounds",
        "--n",
        "2,100",
        "--scaling",
        "linear",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&dir.path().join("bounds.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(column(&rows, "n"), ["2", "100"]);
    assert_eq!(column(&rows, "lambda"), ["2.0", "100.0"]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "# small sweep\n[network]\nn = 3, 4\nscaling = log\nmu = 2\n\n[run]\nhorizon = 200\nseeds = 0..2\n",
    )
    .unwrap();
    let out = dir.path().join("res");
    let o = gossipsim(&[
        "staleness",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "5",
        "--seeds",
        "7",
        "--scheme",
        "opportunistic",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wrote 1 rows"));
    let rows = lines(&out.join("staleness.csv"));
    assert_eq!(column(&rows, "n"), ["5"]);
    assert_eq!(column(&rows, "seed"), ["7"]);
    assert_eq!(column(&rows, "scheme"), ["opportunistic"]);
    assert_eq!(column(&rows, "scaling"), ["log"]);
    assert_eq!(column(&rows, "mu"), ["2.0"]);
}

#[test]
fn train_writes_loss_and_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gossipsim(&[
        "train",
        "--n",
        "4",
        "--seeds",
        "1",
        "--dim",
        "3",
        "--samples-per-user",
        "10",
        "--epochs",
        "3",
        "--alpha",
        "0.05",
        "--batch",
        "full",
        "--dump-data",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&dir.path().join("loss.csv"));
    assert_eq!(column(&rows, "epoch"), ["0", "1", "2", "3"]);
    let data = lines(&dir.path().join("data_n4_seed1.csv"));
    assert_eq!(data[0], "dist_id,x_1,x_2,x_3,y");
    assert_eq!(data.len(), 41);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gossipsim(&["staleness", "--scaling", "cubic", "--out", out]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--scaling"));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[network]\nhorizon = 10\n").unwrap();
    let o = gossipsim(&["staleness", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = gossipsim(&[
        "staleness",
        "--horizon",
        "10",
        "--burn-in",
        "20",
        "--out",
        out,
    ]);
    assert!(!o.status.success());
    assert!(!dir.path().join("staleness.csv").exists());
}

#[test]
fn reruns_match_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = gossipsim(&[
            "staleness",
            "--n",
            "3,6",
            "--scaling",
            "const,loglog",
            "--horizon",
            "300",
            "--seeds",
            "0..3",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("staleness.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let mode = if path.to_str().unwrap().contains("train") {
            "train"
        } else {
            "staleness"
        };
        let dir = tempfile::tempdir().unwrap();
        // Shrink the run so the check is quick; the file itself must still parse.
        let o = gossipsim(&[
            mode,
            "--config",
            path.to_str().unwrap(),
            "--n",
            "3",
            "--seeds",
            "0",
            "--horizon",
            "50",
            "--burn-in",
            "10",
            "--epochs",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stderr)
        );
        seen += 1;
    }
    assert_eq!(seen, 4);
}

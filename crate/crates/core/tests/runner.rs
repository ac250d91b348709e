//! End-to-end sweeps through the experiment runner.

use gossipsim_core::experiment::{run, run_staleness, run_training, ExperimentConfig, Mode};

fn small(mode: Mode, out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(mode);
    cfg.apply_text(
        "[network]\nn = 3, 6\nscaling = const, log\n\
         [run]\nhorizon = 400\nseeds = 0..3\n\
         [dataset]\ndim = 4\nsamples_per_user = 20\n\
         [train]\nepochs = 5\nalpha = 0.05\n",
    )
    .unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

fn header(path: &std::path::Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn each_mode_writes_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            Mode::Staleness,
            "staleness.csv",
            12,
            "mode,scheme,n,scaling",
        ),
        (
            Mode::Bounds,
            "bounds.csv",
            4,
            "mode,n,scaling,lambda0,lambda",
        ),
        (
            Mode::Train,
            "loss.csv",
            12 * 6,
            "mode,scheme,n,scaling,lambda0,seed",
        ),
    ];
    for (mode, file, rows, prefix) in cases {
        let (path, count) = run(&small(mode, dir.path())).unwrap();
        assert_eq!(path, dir.path().join(file));
        assert_eq!(count, rows, "{mode}");
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), rows + 1);
        assert!(header(&path).starts_with(prefix), "{}", header(&path));
    }
}

#[test]
fn dataset_dump_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Mode::Train, dir.path());
    cfg.n = Some(vec![3]);
    cfg.seeds = vec![4];
    run(&cfg).unwrap();
    assert!(!dir.path().join("data_n3_seed4.csv").exists());
    cfg.dump_data = true;
    run(&cfg).unwrap();
    let dump = dir.path().join("data_n3_seed4.csv");
    assert_eq!(header(&dump), "dist_id,x_1,x_2,x_3,x_4,y");
    assert_eq!(
        std::fs::read_to_string(dump).unwrap().lines().count(),
        3 * 20 + 1
    );
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for mode in [Mode::Staleness, Mode::Train] {
        let (pa, _) = run(&small(mode, a.path())).unwrap();
        let (pb, _) = run(&small(mode, b.path())).unwrap();
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut one = small(Mode::Staleness, dir.path());
    one.threads = Some(1);
    let mut four = one.clone();
    four.threads = Some(4);
    assert_eq!(run_staleness(&one).unwrap(), run_staleness(&four).unwrap());

    one.mode = Mode::Train;
    four.mode = Mode::Train;
    assert_eq!(run_training(&one).unwrap(), run_training(&four).unwrap());
}

#[test]
fn invalid_sweeps_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Mode::Staleness, dir.path());
    cfg.burn_in = Some(500.0);
    assert!(run(&cfg).is_err());
    let mut cfg = small(Mode::Staleness, dir.path());
    cfg.n = Some(vec![1]);
    assert!(run(&cfg).is_err());
    assert!(!dir.path().join("staleness.csv").exists());
}

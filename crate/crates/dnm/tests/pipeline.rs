mod common;

use dnm::decompose::DimChoice;
use dnm::io::KernelFormat;
use dnm::report::RunReport;
use dnm::{json, run_pipeline, write_dataset, DnmError, Mode, Preprocess, RunConfig, Stage, SynthSpec};

fn config(dir: &std::path::Path, k: usize, mode: Mode) -> RunConfig {
    RunConfig {
        restarts: 10,
        timings: false,
        ..RunConfig::new(dir, k, mode)
    }
}

fn block_dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let sizes = [6, 9];
    let k = common::block_kernel(&sizes);
    common::write_views(dir.path(), &[k.clone(), k], Some(&common::block_labels(&sizes)));
    dir
}

#[test]
fn identical_block_kernels() {
    let dir = block_dataset();
    let mut cfg = config(dir.path(), 2, Mode::Dnm);
    cfg.preprocess = Some(Preprocess::None);
    let report = run_pipeline(&cfg).unwrap();
    let RunReport::Dnm(r) = &report else { panic!("{report:?}") };
    assert_eq!(r.optimizer.as_ref().unwrap().dims, [2, 2]);
    assert_eq!(r.metrics.as_ref().unwrap().best.acc, 1.0);
    assert_eq!(r.labels.len(), 15);

    cfg.mode = Mode::Akkm;
    let report = run_pipeline(&cfg).unwrap();
    let r = report.clustering().unwrap();
    assert_eq!(r.metrics.as_ref().unwrap().best.acc, 1.0);
    assert!(r.kernel_objective.unwrap().abs() < 1e-9);
}

#[test]
fn centering_a_two_block_kernel_leaves_one_direction() {
    // After double centering, two all-ones blocks collapse to a rank-one
    // kernel, which cannot carry two clusters.
    let dir = block_dataset();
    let err = run_pipeline(&config(dir.path(), 2, Mode::Dnm)).unwrap_err();
    assert!(
        matches!(err, DnmError::Stage { stage: Stage::Optimize, source: dnm_core::Error::Rank { max_feasible: 1, .. }, .. }),
        "{err}"
    );
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn disjoint_views_are_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let views = [common::axis_projector(12, 0..3), common::axis_projector(12, 3..6)];
    common::write_views(dir.path(), &views, None);
    let mut cfg = config(dir.path(), 2, Mode::Dnm);
    cfg.preprocess = Some(Preprocess::None);
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
}

#[test]
fn zero_noise_synthetic_is_solved_by_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::zero_noise(40, 3, 3, 7), dir.path(), KernelFormat::Mkck).unwrap();
    for mode in [Mode::Dnm, Mode::Akkm, Mode::KkmPerView] {
        let report = run_pipeline(&config(dir.path(), 3, mode)).unwrap();
        let r = report.clustering().unwrap();
        assert_eq!(r.config.preprocess, Preprocess::None, "taken from the manifest");
        assert_eq!(r.metrics.as_ref().unwrap().best.acc, 1.0, "{mode:?}");
        if mode == Mode::Dnm {
            assert_eq!(r.optimizer.as_ref().unwrap().dims, [3, 3, 3]);
        }
    }
}

#[test]
fn dnm_beats_the_average_kernel_on_noisy_blobs() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::noisy_blobs(5), dir.path(), KernelFormat::Mkck).unwrap();
    let acc = |mode| {
        let report = run_pipeline(&config(dir.path(), 4, mode)).unwrap();
        report.clustering().unwrap().metrics.as_ref().unwrap().best.acc
    };
    let (dnm, akkm) = (acc(Mode::Dnm), acc(Mode::Akkm));
    assert!(dnm > akkm + 0.1, "dnm {dnm} akkm {akkm}");
}

#[test]
fn reports_are_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::noisy_blobs(2), dir.path(), KernelFormat::Mkck).unwrap();
    let mut cfg = config(dir.path(), 4, Mode::Dnm);
    cfg.threads = Some(1);
    let a = json::to_string(&run_pipeline(&cfg).unwrap()).unwrap();
    cfg.threads = Some(3);
    let b = json::to_string(&run_pipeline(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    cfg.seed = 1;
    let c = json::to_string(&run_pipeline(&cfg).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn reports_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::noisy_blobs(1), dir.path(), KernelFormat::Mkck).unwrap();
    for mode in [Mode::Dnm, Mode::Akkm, Mode::KkmPerView, Mode::Decompose] {
        let mut cfg = config(dir.path(), 4, mode);
        cfg.timings = true;
        cfg.heatmaps = true;
        let report = run_pipeline(&cfg).unwrap();
        let text = json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report, "{mode:?}");
        assert_eq!(json::to_string(&back).unwrap(), text);
    }
}

#[test]
fn timings_cover_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::zero_noise(30, 2, 2, 0), dir.path(), KernelFormat::Mkck).unwrap();
    let mut cfg = config(dir.path(), 2, Mode::Dnm);
    cfg.timings = true;
    let report = run_pipeline(&cfg).unwrap();
    let t = report.clustering().unwrap().timings.clone().unwrap();
    let parts = t.load + t.preprocess + t.eigen + t.optimize + t.cluster + t.metrics;
    assert!(parts > 0.0 && parts <= t.total + 1e-9, "{t:?}");
    assert!(report.without_timings().clustering().unwrap().timings.is_none());
}

#[test]
fn unlabeled_datasets_still_report_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::zero_noise(30, 3, 2, 4), dir.path(), KernelFormat::Csv).unwrap();
    std::fs::remove_file(dir.path().join("labels.txt")).unwrap();
    let report = run_pipeline(&config(dir.path(), 3, Mode::Dnm)).unwrap();
    let r = report.clustering().unwrap();
    assert!(r.metrics.is_none());
    assert_eq!(r.optimizer.as_ref().unwrap().dims, [3, 3]);
    assert!(r.wcss.is_finite());
    assert!(run_pipeline(&config(dir.path(), 3, Mode::Decompose)).is_err());
}

#[test]
fn per_view_mode_selects_the_best_view() {
    let dir = tempfile::tempdir().unwrap();
    let sizes = [10, 10];
    let good = common::block_kernel(&sizes);
    let noise = common::axis_projector(20, 0..20);
    common::write_views(dir.path(), &[noise, good], Some(&common::block_labels(&sizes)));
    let mut cfg = config(dir.path(), 2, Mode::KkmPerView);
    cfg.preprocess = Some(Preprocess::None);
    let report = run_pipeline(&cfg).unwrap();
    let r = report.clustering().unwrap();
    assert_eq!(r.selected_view, Some(1));
    assert_eq!(r.per_view.as_ref().unwrap().len(), 2);
    assert_eq!(r.metrics.as_ref().unwrap().best.acc, 1.0);
}

#[test]
fn decompose_reports_the_injected_noise() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::figure2(0), dir.path(), KernelFormat::Mkck).unwrap();
    let mut cfg = config(dir.path(), 4, Mode::Decompose);
    let RunReport::Decompose(r) = run_pipeline(&cfg).unwrap() else { panic!() };
    let dims: Vec<usize> = r.views.iter().map(|v| v.d).collect();
    assert_eq!(dims, [4, 8]);
    // Four tilts of 1.45 rad: Tr(E_C) = 4·(cos² − 1); the second view adds
    // four extra columns to its four tilts of 1.1 rad.
    assert!((r.views[0].tr_c - 4.0 * (1.45f64.cos().powi(2) - 1.0)).abs() < 1e-8);
    assert!((r.views[1].tr_n - (4.0 + 4.0 * 1.1f64.sin().powi(2))).abs() < 1e-8);
    assert!(r.views.iter().all(|v| v.lemma1_residual < 1e-8 && v.lemma2_residual < 1e-8));
    assert!(r.theorem2_residual < 1e-8);
    assert_eq!(r.denoise.len(), 4);

    // The heavily tilted view cannot reach alignment 4 with the other one.
    cfg.dims_from = DimChoice::Dnm;
    assert_eq!(run_pipeline(&cfg).unwrap_err().exit_code(), 4);

    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::zero_noise(24, 3, 2, 0), dir.path(), KernelFormat::Mkck).unwrap();
    let mut cfg = config(dir.path(), 3, Mode::Decompose);
    cfg.dims_from = DimChoice::Dnm;
    let RunReport::Decompose(r) = run_pipeline(&cfg).unwrap() else { panic!() };
    assert_eq!(r.dims_from, DimChoice::Dnm);
    assert!(r.views.iter().all(|v| v.d == 3 && v.tr_e.abs() < 1e-10));
}

#[test]
fn synth_mode_replays_the_manifest_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&SynthSpec::figure2(3), dir.path(), KernelFormat::Csv).unwrap();
    let before: Vec<Vec<u8>> = ["view_00.csv", "view_01.csv", "labels.txt", "manifest.json"]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    std::fs::remove_file(dir.path().join("view_01.csv")).unwrap();
    std::fs::write(dir.path().join("view_00.csv"), "0\n").unwrap();
    let RunReport::Synth(r) = run_pipeline(&config(dir.path(), 4, Mode::Synth)).unwrap() else { panic!() };
    assert_eq!(r.spec, SynthSpec::figure2(3));
    let after: Vec<Vec<u8>> = ["view_00.csv", "view_01.csv", "labels.txt", "manifest.json"]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn invalid_configs_are_rejected_before_loading() {
    let dir = tempfile::tempdir().unwrap();
    let base = config(dir.path(), 2, Mode::Dnm);
    for cfg in [
        RunConfig { k: 1, ..base.clone() },
        RunConfig { restarts: 0, ..base.clone() },
        RunConfig { initial_m: 0.0, ..base.clone() },
        RunConfig { threads: Some(0), ..base.clone() },
    ] {
        assert!(matches!(run_pipeline(&cfg), Err(DnmError::Config(_))));
    }
    // Empty directory: no views.
    assert!(matches!(run_pipeline(&base), Err(DnmError::Format { .. })));
}

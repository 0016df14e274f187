//! End-to-end runs of the harness on a tiny config: index, tables, failure
//! marking, reports and the command line.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sdlab::harness::config::ExperimentConfig;
use sdlab::harness::pipeline::{run_pipeline, ArtifactIndex, Family, Pipeline, RunStatus, INDEX_FILE};
use sdlab::harness::report::{emit_report, ReportKind};
use sdlab::hessian::HessianMethod;
use sdlab::nn::ArchSpec;
use sdlab::Error;

fn tiny(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::quick();
    cfg.name = "tiny".into();
    cfg.output_dir = dir.to_path_buf();
    cfg.prune.rounds = 3;
    cfg.train.epochs = 5;
    cfg.distill.config.outer_steps = 10;
    cfg.analysis.grid_resolution = (8, 6);
    cfg.analysis.num_alphas = 11;
    cfg.analysis.hessian_probes = 20;
    cfg.analysis.hessian_batch = 32;
    cfg
}

fn files_under(root: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel);
            }
        }
    }
    out
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn index_lists_every_artifact_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let index = run_pipeline(&tiny(dir.path())).unwrap();
    assert_eq!(index.status, RunStatus::Complete);
    index.verify().unwrap();

    let listed: BTreeSet<String> = index.artifacts.iter().map(|a| a.path.clone()).collect();
    let mut on_disk = files_under(dir.path());
    on_disk.remove(INDEX_FILE);
    assert_eq!(listed, on_disk);

    let reloaded = ArtifactIndex::load(dir.path()).unwrap();
    assert_eq!(reloaded.hashes(), index.hashes());
}

#[test]
fn tables_have_fixed_headers() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&tiny(dir.path())).unwrap();
    let expected = [
        ("prune_imp.csv", "family,round,sparsity,pruning_points,cumulative_points,val_loss,val_accuracy"),
        ("prune_distilled.csv", "family,round,sparsity,pruning_points,cumulative_points,val_loss,val_accuracy"),
        (
            "data_cost.csv",
            "round,sparsity,imp_points,distilled_points,imp_cumulative,distilled_cumulative,ratio,expected_ratio",
        ),
        ("retrain.csv", "family,round,sparsity,seed,val_loss,val_accuracy"),
        (
            "stability.csv",
            "family,round,sparsity,pair,seed_a,seed_b,barrier_halfway,barrier_max,halfway_interpolated,stable,tolerance",
        ),
        (
            "landscape.csv",
            "family,round,sparsity,nx,ny,evaluations,flagged,x_min,x_max,y_min,y_max,ref1_x,ref2_x,ref2_y,loss_min,loss_max",
        ),
        ("hessian_stats.csv", "family,round,sparsity,method,probes,count,min,max,mean,std,avg_magnitude"),
    ];
    for (file, cols) in expected {
        assert_eq!(header(&dir.path().join(file)), cols, "{file}");
    }
}

#[test]
fn identical_configs_give_identical_hashes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_pipeline(&tiny(a.path())).unwrap();
    let second = run_pipeline(&tiny(b.path())).unwrap();
    assert_eq!(first.hashes(), second.hashes());
}

#[test]
fn failing_stage_is_marked_and_keeps_earlier_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    // 10,703 parameters, above the exact diagonal's limit
    cfg.arch = ArchSpec::mlp(&[2, 100, 100, 3]);
    cfg.train.epochs = 2;
    cfg.prune.rounds = 1;
    cfg.analysis.hessian_method = HessianMethod::ExactFd;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { ref stage, .. } if stage == "hessian"), "{err}");

    let index = ArtifactIndex::load(dir.path()).unwrap();
    assert_eq!(index.status, RunStatus::Failed);
    assert_eq!(index.failed_stage.as_deref(), Some("hessian"));
    assert!(index.error.as_deref().unwrap().contains("10703"));
    assert!(index.of_kind("stability").next().is_some());
    index.verify().unwrap();
    let text = std::fs::read_to_string(dir.path().join(INDEX_FILE)).unwrap();
    assert!(text.contains("\"FAILED\""));
}

#[test]
fn reports_render_from_a_complete_run() {
    let dir = tempfile::tempdir().unwrap();
    let index = run_pipeline(&tiny(dir.path())).unwrap();
    for kind in ReportKind::ALL {
        assert!(!emit_report(&index, kind).unwrap().is_empty(), "{}", kind.as_str());
    }
    let reports = dir.path().join("reports");

    assert_eq!(header(&reports.join("lmc_curves.csv")), "family,round,pair,alpha,train_loss,val_accuracy");
    let hessian = header(&reports.join("hessian_table.csv"));
    assert_eq!(hessian.split(',').count(), 5, "{hessian}");

    let heatmaps: Vec<_> = files_under(&reports)
        .into_iter()
        .filter(|f| f.starts_with("landscape_") && f.ends_with(".svg"))
        .collect();
    assert_eq!(heatmaps.len(), 3);
    for svg in heatmaps {
        let text = std::fs::read_to_string(reports.join(&svg)).unwrap();
        assert_eq!(text.matches("class=\"ref\"").count(), 3, "{svg}");
    }
}

#[test]
fn report_on_a_partial_run_names_what_is_missing() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(tiny(dir.path()), true).unwrap();
    let outcome = p.masks(Family::Imp).map(drop);
    let index = p.finish(outcome).unwrap();
    match emit_report(&index, ReportKind::LandscapeHeatmap) {
        Err(Error::MissingArtifacts(kinds)) => assert!(!kinds.is_empty()),
        other => panic!("expected missing artifacts, got {other:?}"),
    }
    assert!(emit_report(&index, ReportKind::SparsityAccuracy).is_err());
}

fn sdlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sdlab")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let good = dir.path().join("good.toml");
    let mut cfg = tiny(&out);
    std::fs::write(&good, cfg.to_toml().unwrap()).unwrap();
    cfg.seeds = vec![1, 2, 3];
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, cfg.to_toml().unwrap()).unwrap();

    let code = |args: &[&str]| sdlab(args).status.code();
    assert_eq!(code(&["--config", bad.to_str().unwrap(), "run"]), Some(2));
    assert_eq!(code(&["--config", dir.path().join("absent.toml").to_str().unwrap(), "run"]), Some(2));
    assert_eq!(code(&["--config", good.to_str().unwrap(), "report"]), Some(3));
    assert_eq!(code(&["--config", good.to_str().unwrap(), "prune", "--mode", "imp"]), Some(0));
    assert!(out.join("masks/imp_r03.ckpt").exists());
    assert_eq!(code(&["--config", good.to_str().unwrap(), "report", "--kind", "nonsense"]), Some(2));
    // the second stage reuses the masks and the index keeps both
    assert_eq!(code(&["--config", good.to_str().unwrap(), "prune", "--mode", "distilled"]), Some(0));
    let index = ArtifactIndex::load(&out).unwrap();
    assert!(index.artifacts.iter().any(|a| a.path == "prune_imp.csv"));
    assert!(index.artifacts.iter().any(|a| a.path == "prune_distilled.csv"));
}

#[test]
fn quick_profile_finishes_within_five_minutes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::quick();
    cfg.output_dir = dir.path().to_path_buf();
    let start = Instant::now();
    let index = run_pipeline(&cfg).unwrap();
    let took = start.elapsed();
    assert_eq!(index.status, RunStatus::Complete);
    assert!(took < Duration::from_secs(300), "{took:?}");
}

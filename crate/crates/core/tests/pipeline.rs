use std::path::Path;
use std::process::Command;

use ictrait::pipeline::{self, CachePolicy, Pipeline, PipelineConfig, Stage, StageOutcome};
use ictrait::synth::SyntheticCohortSpec;
use ictrait::Error;

fn project(dir: &Path) -> PipelineConfig {
    let (_, path) = pipeline::write_synthetic_project(&SyntheticCohortSpec::default(), dir).unwrap();
    PipelineConfig::load(&path).unwrap()
}

fn walk(d: &Path, out: &mut Vec<std::path::PathBuf>) {
    for e in std::fs::read_dir(d).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            walk(&p, out);
        } else {
            out.push(p);
        }
    }
}

#[test]
fn stage_without_upstream_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let p = Pipeline::new(project(tmp.path()));
    match p.run_stage(Stage::Grid, CachePolicy::Reuse) {
        Err(Error::MissingUpstream { stage, upstream }) => {
            assert_eq!(stage, "grid");
            assert_eq!(upstream, "featurize");
        }
        other => panic!("expected MissingUpstream, got {other:?}"),
    }
}

#[test]
fn end_to_end_writes_every_stage_and_caches() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = project(tmp.path());
    let p = Pipeline::new(cfg.clone());
    let ran = p.run_all(false).unwrap();
    assert_eq!(ran.len(), 10);
    assert!(ran.iter().all(|(_, o)| *o == StageOutcome::Ran));
    for s in Stage::ALL {
        assert!(p.stage_path(s).join("manifest.txt").exists(), "{s}");
    }

    // artifacts never embed where they were written
    let mut files = Vec::new();
    walk(&cfg.stage_dir(), &mut files);
    let needle = tmp.path().to_string_lossy().into_owned();
    for f in &files {
        let text = String::from_utf8_lossy(&std::fs::read(f).unwrap()).into_owned();
        assert!(!text.contains(&needle), "{} mentions its location", f.display());
    }

    let again = p.run_all(true).unwrap();
    assert!(again.iter().all(|(_, o)| *o == StageOutcome::Cached));

    // a changed score file invalidates the stages that read it
    let scores = cfg.resolve(&cfg.paths.scores);
    let mut text = std::fs::read_to_string(&scores).unwrap();
    text.push('\n');
    std::fs::write(&scores, text).unwrap();
    assert_eq!(p.run_stage(Stage::Featurize, CachePolicy::Strict).unwrap(), StageOutcome::Cached);
    assert!(matches!(
        p.run_stage(Stage::Split, CachePolicy::Strict),
        Err(Error::StaleCache { .. })
    ));
    assert_eq!(p.run_stage(Stage::Split, CachePolicy::Reuse).unwrap(), StageOutcome::Ran);
}

#[test]
fn participant_without_score_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = project(tmp.path());
    let scores = cfg.resolve(&cfg.paths.scores);
    let text = std::fs::read_to_string(&scores).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("p003,")).collect();
    std::fs::write(&scores, kept.join("\n")).unwrap();
    let p = Pipeline::new(cfg);
    for s in [Stage::Ingest, Stage::Embed, Stage::Featurize] {
        p.run_stage(s, CachePolicy::Force).unwrap();
    }
    match p.run_stage(Stage::Split, CachePolicy::Force) {
        Err(Error::MissingScore(id)) => assert_eq!(id, "p003"),
        other => panic!("expected MissingScore, got {other:?}"),
    }
}

#[test]
fn cli_runs_and_maps_errors_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ictrait");
    let out = Command::new(bin)
        .args(["synth", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let cfg = tmp.path().join("ictrait.toml");

    let out = Command::new(bin).arg("--config").arg(&cfg).arg("rank").output().unwrap();
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));

    let out = Command::new(bin).arg("--config").arg(tmp.path().join("absent.toml")).arg("ingest").output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = Command::new(bin)
        .arg("--config")
        .arg(&cfg)
        .args(["--jobs", "2", "run-all"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("report: done"));
}

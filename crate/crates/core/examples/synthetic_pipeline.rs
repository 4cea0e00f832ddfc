//! Generate a synthetic cohort and run every pipeline stage on it.
//!
//! The equivalent command line is
//! `ictrait synth --out DIR && ictrait --config DIR/ictrait.toml run-all`.

use ictrait::pipeline::{self, Pipeline, PipelineConfig, Stage};
use ictrait::synth::SyntheticCohortSpec;

fn main() -> ictrait::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    let (cohort, cfg_path) = pipeline::write_synthetic_project(&SyntheticCohortSpec::default(), dir.path())?;
    println!("{} synthetic participants written", cohort.participants.len());
    let p = Pipeline::new(PipelineConfig::load(&cfg_path)?);
    for (stage, outcome) in p.run_all(false)? {
        println!("  {stage:<10} {outcome:?}");
    }
    let report = std::fs::read_to_string(p.stage_path(Stage::Report).join("report.txt")).expect("report");
    println!("{report}");
    Ok(())
}

//! Turn a raw activity export into an individual corpus.
//!
//! ```text
//! cargo run --example corpus
//! ```

use ictrait::artifact::ArtifactMeta;
use ictrait::corpus::{self, PreprocessConfig, Preprocessor};

fn main() -> ictrait::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    let export = dir.path().join("p001.json");
    std::fs::write(
        &export,
        r#"[
  {"title": "Kunstausstellung in Berlin besuchen", "time": "2021-03-02T10:00:00Z"},
  {"title": "Wie funktioniert ein Teleskop?", "time": "2021-03-02T11:30:00Z"},
  {"title": "<b>Neue</b> Ideen für kreatives Schreiben", "time": "2021-03-04T09:15:00Z"},
  {"title": "Teleskop kaufen Vergleich", "time": "2021-03-05T20:00:00Z"}
]"#,
    )
    .expect("write export");

    let pre = Preprocessor::new(&PreprocessConfig::german())?;
    let raw = corpus::parse_activity_export(&export)?;
    let ic = corpus::build_corpus(&raw, &pre);
    println!("participant {}: {} tokens, {} types", ic.participant_id, ic.token_count(), ic.type_count());
    println!("tokens: {}", ic.tokens().join(" "));
    for (w, n) in ic.ranked_frequencies().into_iter().take(5) {
        println!("  {w:<12} {n}");
    }
    // the reference threshold is far above what a toy export reaches
    println!("validation at 2500 types: {:?}", corpus::validate_corpus(&ic, corpus::DEFAULT_MIN_TYPES));
    println!("validation at 5 types:    {:?}", corpus::validate_corpus(&ic, 5));
    print!("{}", ic.to_freq_file(&ArtifactMeta::new("freq")));
    Ok(())
}

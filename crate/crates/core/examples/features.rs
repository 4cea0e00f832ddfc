//! Label-similarity features for a small synthetic cohort.

use ictrait::corpus::{self, PreprocessConfig, Preprocessor};
use ictrait::embedding::{train_skipgram, SkipgramConfig};
use ictrait::features;
use ictrait::synth::{generate_synthetic_cohort, SyntheticCohortSpec, TRAIT_NAME};

fn main() -> ictrait::Result<()> {
    let cohort = generate_synthetic_cohort(&SyntheticCohortSpec {
        n_participants: 8,
        ..Default::default()
    })?;
    let pre = Preprocessor::new(&PreprocessConfig::german())?;
    let lexicon = features::parse_lexicon(&cohort.lexicon_tsv(), &pre)?.for_trait(TRAIT_NAME);

    let cfg = SkipgramConfig {
        dimensions: 32,
        epochs: 5,
        ..Default::default()
    };
    let models = cohort
        .participants
        .iter()
        .map(|p| {
            let tokens = p.documents.iter().flat_map(|d| pre.tokenize(d)).collect();
            let ic = corpus::IndividualCorpus::from_tokens(p.id.clone(), tokens);
            train_skipgram(&ic, &cfg)
        })
        .collect::<ictrait::Result<Vec<_>>>()?;

    let kept = features::filter_labels(&lexicon, &models);
    println!("{} of {} labels occur in at least half of the vocabularies", kept.len(), lexicon.len());
    let fm = features::build_feature_matrix(&models, &kept, 50)?;
    let shown = fm.n_cols().min(5);
    println!("{:<6} {}", "", fm.labels[..shown].iter().map(|l| format!("{l:>8}")).collect::<String>());
    for (i, p) in fm.participants.iter().enumerate() {
        let row: String = (0..shown).map(|j| format!("{:>8.3}", fm.values[[i, j]])).collect();
        println!("{p:<6} {row}");
    }
    Ok(())
}

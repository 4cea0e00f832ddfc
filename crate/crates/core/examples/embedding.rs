//! Train a skip-gram model on a two-topic corpus and inspect neighbours.

use ictrait::corpus::IndividualCorpus;
use ictrait::embedding::{train_skipgram_with_report, SkipgramConfig};
use ictrait::rng::job_rng;
use rand::Rng;

fn main() -> ictrait::Result<()> {
    let music = ["geige", "konzert", "oper", "chor", "klavier", "sinfonie"];
    let sport = ["tor", "stadion", "trainer", "liga", "abseits", "elfmeter"];
    let mut rng = job_rng(5, &[]);
    let mut tokens = Vec::new();
    for _ in 0..500 {
        let topic = if rng.random_bool(0.5) { &music } else { &sport };
        for _ in 0..8 {
            tokens.push(topic[rng.random_range(0..topic.len())].to_string());
        }
    }
    let ic = IndividualCorpus::from_tokens("demo", tokens);
    let cfg = SkipgramConfig {
        dimensions: 24,
        epochs: 5,
        min_frequency: 1,
        ..Default::default()
    };
    let (model, report) = train_skipgram_with_report(&ic, &cfg)?;
    println!("vocabulary {} words, {} pairs per epoch", model.vocab_len(), report.pairs_per_epoch);
    for (i, l) in report.epoch_losses.iter().enumerate() {
        println!("  epoch {}: mean loss {l:.4}", i + 1);
    }
    for probe in ["oper", "liga"] {
        let mut sims: Vec<(&String, f64)> = model
            .words()
            .iter()
            .filter(|w| *w != probe)
            .map(|w| (w, model.similarity(probe, w).unwrap()))
            .collect();
        sims.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<String> = sims.iter().take(4).map(|(w, s)| format!("{w} {s:.2}")).collect();
        println!("nearest to {probe}: {}", top.join(", "));
    }
    Ok(())
}

//! Mutual information between pitch and four context labellings.
//!
//! `cargo run --example context_mi -- [file.json]`

use stripes::context::{mi_report, mutual_information, pooled_events, synthetic_chord_corpus, ContextOptions, ContextType};
use stripes::pianoroll::load_annotated;

fn main() -> stripes::Result<()> {
    let contexts = [ContextType::Time, ContextType::Rep, ContextType::Key, ContextType::Bin];
    if let Some(path) = std::env::args().nth(1) {
        let (roll, ann) = load_annotated(&std::fs::read(&path)?)?;
        for ctx in contexts {
            match mi_report(&roll, ann.as_ref(), ctx, ContextOptions::default()) {
                Ok(r) => println!("{ctx:>5}: {:.4} nats over {} events", r.mi_nats, r.events),
                Err(e) => println!("{ctx:>5}: {e}"),
            }
        }
        return Ok(());
    }

    let corpus = synthetic_chord_corpus(200, 0)?;
    println!("pooled over {} constructed samples", corpus.len());
    for onset_only in [false, true] {
        let opts = ContextOptions { onset_only, ..ContextOptions::default() };
        let row: Vec<String> = contexts
            .iter()
            .map(|&ctx| Ok(format!("{ctx} {:.4}", mutual_information(&pooled_events(&corpus, ctx, opts)?)?)))
            .collect::<stripes::Result<_>>()?;
        println!("{:<10} {}", if onset_only { "onsets" } else { "cells" }, row.join("  "));
    }
    Ok(())
}

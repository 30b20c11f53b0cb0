//! Writes a synthetic demo corpus and its embeddings.
//!
//! ```text
//! cargo run -p narrative-atlas --example planted -- <out dir> [seed]
//! ```
//!
//! Produces `submissions.jsonl` and `embeddings.jsonl` with an accepted chain
//! of 12 events and a rejected chain of 20 sharing start and end events.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use narrative_atlas::synth::{generate_planted_corpus, AcceptanceProfile, PlantedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().ok_or("usage: planted <out dir> [seed]")?);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    std::fs::create_dir_all(&dir)?;
    let spec = PlantedSpec::new(
        &[12, 20],
        &[AcceptanceProfile::Accepted, AcceptanceProfile::Rejected],
        0.05,
        seed,
    );
    let planted = generate_planted_corpus(&spec)?;
    planted.write_corpus(BufWriter::new(File::create(dir.join("submissions.jsonl"))?))?;
    planted.write_embeddings(BufWriter::new(File::create(dir.join("embeddings.jsonl"))?))?;
    println!("{} events", planted.corpus.len());
    for (i, chain) in planted.planted.iter().enumerate() {
        println!("chain {i}: {}", chain.join(" "));
    }
    Ok(())
}

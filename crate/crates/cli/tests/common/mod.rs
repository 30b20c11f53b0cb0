#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use narrative_atlas::synth::{
    generate_planted_corpus, AcceptanceProfile, PlantedCorpus, PlantedSpec,
};
use tempfile::TempDir;

pub struct Fixture {
    pub dir: TempDir,
    pub planted: PlantedCorpus,
    pub corpus_id: String,
}

impl Fixture {
    pub fn store(&self) -> PathBuf {
        self.dir.path().join("store")
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn run(&self, args: &[&str]) -> Output {
        run(&self.store(), args)
    }
}

pub fn run(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_narrative-atlas"))
        .args(args)
        .env("NARRATIVE_ATLAS_STORE", store)
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// An accepted chain of 12 and a rejected chain of 20, ingested with embeddings.
pub fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let spec = PlantedSpec::new(
        &[12, 20],
        &[AcceptanceProfile::Accepted, AcceptanceProfile::Rejected],
        0.05,
        0,
    );
    let planted = generate_planted_corpus(&spec).unwrap();
    planted
        .write_corpus(File::create(dir.path().join("submissions.jsonl")).unwrap())
        .unwrap();
    planted
        .write_embeddings(File::create(dir.path().join("embeddings.jsonl")).unwrap())
        .unwrap();
    let store = dir.path().join("store");
    let sub = dir.path().join("submissions.jsonl");
    let out = run(&store, &["ingest", sub.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let corpus_id = stdout(&out).lines().next().unwrap().to_string();
    let emb = dir.path().join("embeddings.jsonl");
    let out = run(&store, &["embed-import", &corpus_id, emb.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    Fixture {
        dir,
        planted,
        corpus_id,
    }
}

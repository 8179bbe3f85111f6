use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use symattn::data::{generate_synthetic, Dispersion, Split, SynthConfig};
use symattn::harness::{
    run_attention_report, run_experiment, run_tau_ablation, run_training, write_synthetic,
    AttentionSummary, CorpusSource, ExperimentSpec, LoadedCorpus, ABLATION_FILE, ATTENTION_DIR,
    CHECKPOINT_FILE, LOG_FILE, METRICS_FILE, RUN_FILE,
};
use symattn::model::{AttentionRecord, TauMode};
use symattn::optim::{Checkpoint, TrainConfig};
use symattn::Error;

fn small_synth() -> SynthConfig {
    SynthConfig {
        n_train: 12,
        n_dev: 4,
        n_test: 4,
        d_k: 16,
        segments_min: 8,
        segments_max: 30,
        ..SynthConfig::default()
    }
}

fn small_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::synthetic(small_synth());
    spec.model.head_hidden = 16;
    spec.optim = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    spec
}

/// Relative path → file bytes for every file under `dir`.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn spec_json_parses_both_sources_and_rejects_typos() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"corpus":{"kind":"synthetic","seed":3,"n_train":5},"model":{"tau_mode":"global"},"optim":{"epochs":2,"adamw":{"lr":0.001}}}"#,
    )
    .unwrap();
    let spec = ExperimentSpec::from_file(&cfg).unwrap();
    match &spec.corpus {
        CorpusSource::Synthetic(s) => {
            assert_eq!((s.seed, s.n_train, s.n_dev, s.d_k), (3, 5, 16, 64));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(spec.model.tau_mode, TauMode::Global);
    assert_eq!(spec.optim.epochs, 2);
    assert_eq!(spec.optim.adamw.lr, 0.001);
    assert_eq!(spec.optim.adamw.weight_decay, 0.01);
    assert_eq!(spec.seed, 7);

    fs::write(&cfg, r#"{"corpus":{"kind":"manifest","manifest":"data/manifest.jsonl"}}"#).unwrap();
    match ExperimentSpec::from_file(&cfg).unwrap().corpus {
        CorpusSource::Manifest { manifest, queries } => {
            assert_eq!(manifest, dir.path().join("data/manifest.jsonl"));
            assert!(queries.is_none());
        }
        other => panic!("{other:?}"),
    }

    fs::write(&cfg, r#"{"corpus":{"kind":"synthetic"},"optim":{"epoch":2}}"#).unwrap();
    assert!(matches!(ExperimentSpec::from_file(&cfg), Err(Error::Validation(_))));
}

#[test]
fn training_run_writes_the_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&small_spec(), dir.path()).unwrap();
    for f in [RUN_FILE, CHECKPOINT_FILE, LOG_FILE, METRICS_FILE] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let log = fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
    assert_eq!(log.lines().count(), 3);
    let ck = Checkpoint::read(dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ck, res.checkpoint);
    assert_eq!(ck.config.model.embed_dim, 16);
    let echoed: ExperimentSpec =
        serde_json::from_slice(&fs::read(dir.path().join(RUN_FILE)).unwrap()).unwrap();
    assert_eq!(echoed, small_spec());
    assert_eq!(res.metrics.test.as_ref().unwrap().n, 4);
}

#[test]
fn explicit_embed_dim_must_match_corpus() {
    let mut spec = small_spec();
    spec.model.embed_dim = Some(32);
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(run_experiment(&spec, dir.path()), Err(Error::Dimension(_))));
}

#[test]
fn ablation_has_three_rows_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let table = run_tau_ablation(&small_spec(), a.path()).unwrap();
    let modes: Vec<TauMode> = table.rows.iter().map(|r| r.tau_mode).collect();
    assert_eq!(modes, [TauMode::None, TauMode::Global, TauMode::PerSymptom]);
    for m in ["none", "global", "per_symptom"] {
        assert!(a.path().join(m).join(CHECKPOINT_FILE).is_file());
    }
    let parsed: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join(ABLATION_FILE)).unwrap()).unwrap();
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 3);
    assert_eq!(table.to_table().lines().count(), 4);

    run_tau_ablation(&small_spec(), b.path()).unwrap();
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
}

#[test]
fn none_row_equals_frozen_per_symptom_run() {
    let loaded = {
        let s = generate_synthetic(&small_synth()).unwrap();
        LoadedCorpus {
            corpus: s.corpus,
            queries: s.queries,
            relevance: Some(s.relevance),
        }
    };
    let mut none = small_spec();
    none.model.tau_mode = TauMode::None;
    let mut frozen = small_spec();
    frozen.model.tau_mode = TauMode::PerSymptom;
    frozen.optim.freeze_tau = true;
    let dir = tempfile::tempdir().unwrap();
    let a = run_training(&none, &loaded, &dir.path().join("a")).unwrap();
    let b = run_training(&frozen, &loaded, &dir.path().join("b")).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.log, b.log);
}

#[test]
fn attention_report_exports_every_test_participant() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let cfg = small_synth();
    let synth = generate_synthetic(&cfg).unwrap();
    write_synthetic(&cfg, &synth, &data).unwrap();
    let run = run_experiment(&small_spec(), &dir.path().join("run")).unwrap();

    let out = dir.path().join("attend");
    let summary = run_attention_report(
        &run.checkpoint,
        &synth.corpus,
        Some(&synth.relevance),
        Split::Test,
        &out,
    )
    .unwrap();
    assert_eq!(summary.n_participants, 4);
    let rec = summary.planted_recovery.unwrap();
    assert!(rec.total > 0 && rec.hits <= rec.total);
    assert_eq!(summary.entropy.len(), 8);
    for r in synth.corpus.split(Split::Test) {
        let bytes = fs::read(out.join(ATTENTION_DIR).join(format!("{}.json", r.id))).unwrap();
        let art: AttentionRecord = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(art.weights.len(), 8);
        assert_eq!(art.segment_ids.len(), r.num_segments());
        assert!(art.topk.iter().all(|t| t.len() == 3));
        for row in &art.weights {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    let none = run_attention_report(&run.checkpoint, &synth.corpus, None, Split::Dev, &out).unwrap();
    assert!(none.planted_recovery.is_none());

    let wide = generate_synthetic(&SynthConfig {
        d_k: 20,
        ..small_synth()
    })
    .unwrap();
    assert!(matches!(
        run_attention_report(&run.checkpoint, &wide.corpus, None, Split::Test, &out),
        Err(Error::Validation(_))
    ));
}

/// Diffuse-evidence symptoms (sleep, tired) spread their attention more than
/// concentrated ones (depressed, psychomotor).
#[test]
fn heterogeneous_entropy_direction() {
    let cfg = SynthConfig {
        dispersion: Dispersion::Heterogeneous,
        ..SynthConfig::default()
    };
    let mut spec = ExperimentSpec::synthetic(cfg.clone());
    spec.model.tau_mode = TauMode::PerSymptom;
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&spec, &dir.path().join("run")).unwrap();
    let synth = generate_synthetic(&cfg).unwrap();
    let s: AttentionSummary = run_attention_report(
        &run.checkpoint,
        &synth.corpus,
        Some(&synth.relevance),
        Split::Test,
        dir.path(),
    )
    .unwrap();
    let e = |i: usize| s.entropy[i].mean_entropy;
    let diffuse = (e(2) + e(3)) / 2.0;
    let concentrated = (e(1) + e(7)) / 2.0;
    assert!(diffuse > concentrated, "diffuse {diffuse} vs concentrated {concentrated}");
}

use std::fs;

use proptest::prelude::*;
use symattn::data::{
    generate_synthetic, load_corpus, planted_count, pseudo_queries, read_embedding_file,
    write_corpus, write_embedding_file, Dispersion, NoiseLevels, QuerySet, Split, SynthConfig,
};
use symattn::numkern::Matrix;
use symattn::Error;

fn small_cfg(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        n_train: 6,
        n_dev: 3,
        n_test: 3,
        d_k: 16,
        ..SynthConfig::default()
    }
}

#[test]
fn one_by_one_file_is_sixteen_known_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.sge");
    write_embedding_file(&path, &Matrix::from_rows(&[[2.5]])).unwrap();
    assert_eq!(
        fs::read(&path).unwrap(),
        [0x53, 0x47, 0x45, 0x31, 1, 0, 0, 0, 1, 0, 0, 0, 0x00, 0x00, 0x20, 0x40]
    );
    assert_eq!(read_embedding_file(&path).unwrap().get(0, 0), 2.5);
}

#[test]
fn bad_magic_and_truncation_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.sge");
    write_embedding_file(&path, &Matrix::zeros(3, 5)).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes.truncate(60);
    fs::write(&path, &bytes).unwrap();
    match read_embedding_file(&path) {
        Err(Error::Length {
            expected, actual, ..
        }) => assert_eq!((expected, actual), (72, 60)),
        other => panic!("{other:?}"),
    }
    bytes[..4].copy_from_slice(b"XXXX");
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_embedding_file(&path), Err(Error::Format(_))));
    assert!(matches!(
        read_embedding_file(dir.path().join("missing.sge")),
        Err(Error::NotFound(_))
    ));
}

fn finite_f32() -> impl Strategy<Value = f32> {
    prop_oneof![
        Just(0.0f32),
        Just(-0.0f32),
        Just(f32::MIN_POSITIVE / 4.0),
        Just(-f32::from_bits(1)),
        prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sge1_roundtrip_is_bit_exact(
        (rows, cols, vals) in (0usize..6, 0usize..6).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), prop::collection::vec(finite_f32(), r * c))
        })
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sge");
        let m = Matrix::from_vec(rows, cols, vals.iter().map(|&v| v as f64).collect()).unwrap();
        write_embedding_file(&path, &m).unwrap();
        let back = read_embedding_file(&path).unwrap();
        prop_assert_eq!(back.shape(), (rows, cols));
        for (a, b) in vals.iter().zip(back.as_slice()) {
            prop_assert_eq!(a.to_bits(), (*b as f32).to_bits());
        }
    }
}

fn write_manifest(dir: &std::path::Path, lines: &[String]) -> std::path::PathBuf {
    let path = dir.join("manifest.jsonl");
    fs::write(&path, lines.join("\n")).unwrap();
    path
}

fn entry(id: &str, file: &str, labels: &str, split: &str) -> String {
    format!(r#"{{"id":"{id}","embedding_path":"{file}","labels":{labels},"split":"{split}"}}"#)
}

#[test]
fn manifest_with_two_records_loads() {
    let dir = tempfile::tempdir().unwrap();
    write_embedding_file(dir.path().join("a.sge"), &Matrix::filled(3, 4, 0.5)).unwrap();
    write_embedding_file(dir.path().join("b.sge"), &Matrix::filled(2, 4, -1.0)).unwrap();
    let m = write_manifest(
        dir.path(),
        &[
            entry("p2", "b.sge", "[0,1,2,3,0,1,2,3]", "dev"),
            entry("p1", "a.sge", "[3,3,3,3,3,3,3,3]", "train"),
        ],
    );
    let c = load_corpus(&m).unwrap();
    assert_eq!(c.records.len(), 2);
    assert_eq!(c.d_k, 4);
    assert_eq!(c.records[0].id, "p1");
    assert_eq!(c.records[0].total_label(), 24);
    assert_eq!(c.split_sizes(), [1, 1, 0]);
    assert_eq!(c.get("p2").unwrap().split, Split::Dev);
}

#[test]
fn manifest_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_embedding_file(dir.path().join("a.sge"), &Matrix::filled(3, 4, 0.5)).unwrap();
    write_embedding_file(dir.path().join("w.sge"), &Matrix::filled(3, 5, 0.5)).unwrap();

    let m = write_manifest(dir.path(), &[entry("bad_rec", "a.sge", "[0,0,0,0,0,0,0,4]", "train")]);
    match load_corpus(&m) {
        Err(Error::Validation(msg)) => assert!(msg.contains("bad_rec"), "{msg}"),
        other => panic!("{other:?}"),
    }

    let m = write_manifest(dir.path(), &[]);
    match load_corpus(&m) {
        Err(Error::Validation(msg)) => assert!(msg.contains("empty corpus")),
        other => panic!("{other:?}"),
    }

    let m = write_manifest(
        dir.path(),
        &[
            entry("a", "a.sge", "[0,0,0,0,0,0,0,0]", "train"),
            entry("b", "w.sge", "[0,0,0,0,0,0,0,0]", "train"),
        ],
    );
    match load_corpus(&m) {
        Err(Error::Validation(msg)) => assert!(msg.contains("width"), "{msg}"),
        other => panic!("{other:?}"),
    }

    let m = write_manifest(dir.path(), &[entry("a", "a.sge", "[0,0,0]", "train")]);
    assert!(matches!(load_corpus(&m), Err(Error::Validation(_))));

    let m = write_manifest(
        dir.path(),
        &[
            entry("a", "a.sge", "[0,0,0,0,0,0,0,0]", "train"),
            entry("a", "a.sge", "[0,0,0,0,0,0,0,0]", "dev"),
        ],
    );
    assert!(matches!(load_corpus(&m), Err(Error::Validation(_))));
}

#[test]
fn synthetic_corpus_survives_disk_roundtrip_exactly() {
    let s = generate_synthetic(&small_cfg(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = write_corpus(&s.corpus, dir.path()).unwrap();
    assert_eq!(load_corpus(&m).unwrap(), s.corpus);
    let qpath = dir.path().join("queries.sge");
    s.queries.save(&qpath).unwrap();
    assert_eq!(QuerySet::load(&qpath).unwrap(), s.queries);
}

#[test]
fn same_seed_same_corpus() {
    let a = generate_synthetic(&SynthConfig::default()).unwrap();
    let b = generate_synthetic(&SynthConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.corpus.split_sizes(), [48, 16, 16]);
    assert_eq!(a.corpus.d_k, 64);
    let c = generate_synthetic(&SynthConfig::default().with_seed(8)).unwrap();
    assert_ne!(a.corpus, c.corpus);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute force: project every segment on `u_s`; on a noise-free corpus the
/// largest projection is `1 + y_s` when the symptom is planted and 0 otherwise.
#[test]
fn noise_free_labels_are_recovered_by_projection() {
    for seed in 0..5 {
        let cfg = SynthConfig {
            noise: NoiseLevels::noise_free(),
            ..small_cfg(seed)
        };
        let s = generate_synthetic(&cfg).unwrap();
        for r in &s.corpus.records {
            for sym in 0..8 {
                let u = s.signatures.row(sym);
                let projections: Vec<f64> =
                    (0..r.num_segments()).map(|i| dot(r.segments.row(i), u)).collect();
                let best = projections.iter().cloned().fold(f64::MIN, f64::max);
                let label = if best > 0.5 { (best - 1.0).round() as u8 } else { 0 };
                assert_eq!(label, r.labels[sym], "{} symptom {sym}", r.id);
                let planted: Vec<usize> = (0..r.num_segments())
                    .filter(|&i| projections[i] > 0.5)
                    .collect();
                assert_eq!(planted, s.relevance_of(&r.id).unwrap().relevant[sym]);
            }
        }
    }
}

#[test]
fn all_zero_labels_plant_nothing() {
    let s = generate_synthetic(&SynthConfig {
        n_train: 200,
        ..small_cfg(11)
    })
    .unwrap();
    let zero = s
        .corpus
        .records
        .iter()
        .filter(|r| r.total_label() == 0)
        .count();
    for r in &s.corpus.records {
        let rel = s.relevance_of(&r.id).unwrap();
        for (sym, idx) in rel.relevant.iter().enumerate() {
            if r.labels[sym] == 0 {
                assert!(idx.is_empty());
            }
        }
    }
    // labels are uniform over 4 values, so an all-zero participant is rare
    assert!(zero <= 1);
}

/// Relevant rows project onto `u_s` well above the other rows: the gap in
/// means exceeds three standard deviations of the non-relevant projections.
#[test]
fn relevant_rows_stand_out_statistically() {
    let s = generate_synthetic(&SynthConfig::default()).unwrap();
    for sym in 0..8 {
        let u = s.signatures.row(sym);
        let (mut rel, mut other) = (Vec::new(), Vec::new());
        for r in &s.corpus.records {
            let idx = &s.relevance_of(&r.id).unwrap().relevant[sym];
            for i in 0..r.num_segments() {
                let p = dot(r.segments.row(i), u);
                if idx.binary_search(&i).is_ok() {
                    rel.push(p);
                } else {
                    other.push(p);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mr, mo) = (mean(&rel), mean(&other));
        let sd = (other.iter().map(|p| (p - mo).powi(2)).sum::<f64>() / other.len() as f64).sqrt();
        assert!(mr - mo > 3.0 * sd, "symptom {sym}: gap {} vs sd {sd}", mr - mo);
        // planted noise is 0.1 per coordinate, so each relevant projection sits
        // within a few tenths of an integer in 2..=4
        for p in rel {
            let nearest = p.round();
            assert!((2.0..=4.0).contains(&nearest) && (p - nearest).abs() < 0.5, "{p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn planted_counts_follow_the_rule(seed in 0u64..10_000) {
        let s = generate_synthetic(&small_cfg(seed)).unwrap();
        for r in &s.corpus.records {
            let n = r.num_segments();
            prop_assert!((20..=120).contains(&n));
            for (sym, idx) in s.relevance_of(&r.id).unwrap().relevant.iter().enumerate() {
                let expect = (r.labels[sym] as usize * n).div_ceil(12);
                prop_assert_eq!(idx.len(), expect);
                prop_assert_eq!(planted_count(r.labels[sym], n), expect);
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(idx.iter().all(|&i| i < n));
            }
        }
    }
}

#[test]
fn heterogeneous_corpus_spreads_sleep_and_concentrates_mood() {
    let s = generate_synthetic(&SynthConfig {
        dispersion: Dispersion::Heterogeneous,
        ..SynthConfig::default()
    })
    .unwrap();
    for r in &s.corpus.records {
        let rel = &s.relevance_of(&r.id).unwrap().relevant;
        for sym in [1, 7] {
            assert_eq!(rel[sym].len(), usize::from(r.labels[sym] > 0));
        }
        for sym in [2, 3] {
            let base = planted_count(r.labels[sym], r.num_segments());
            assert_eq!(rel[sym].len(), (2 * base).min(r.num_segments()));
        }
    }
}

#[test]
fn too_small_dimension_is_invalid_input() {
    let cfg = SynthConfig {
        d_k: 7,
        ..small_cfg(1)
    };
    assert!(matches!(generate_synthetic(&cfg), Err(Error::InvalidInput(_))));
}

#[test]
fn pseudo_queries_contract() {
    let a = pseudo_queries(1, 1024).unwrap();
    let b = pseudo_queries(2, 1024).unwrap();
    assert_eq!(a, pseudo_queries(1, 1024).unwrap());
    for r in 0..8 {
        let n = dot(a.vectors.row(r), a.vectors.row(r)).sqrt();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(dot(a.vectors.row(r), b.vectors.row(r)).abs() < 0.5);
    }
    assert_eq!(a.symptom_names.len(), 8);
}

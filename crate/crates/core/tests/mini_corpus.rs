use std::path::PathBuf;

use sdgmap_core::analytics::{evaluate, parse_truth, summarize};
use sdgmap_core::ingest::{consolidate, read_batch, MappingRequest, Role};
use sdgmap_core::{classify, load_library, normalize, rank, CompiledLibrary, SdgId, TopN};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn every_paper_matches_per_the_oracle() {
    let lib = load_library(&data("sample_queries.tsv")).unwrap();
    let batch = read_batch(&[data("mini_corpus.csv")], None, &MappingRequest::Auto).unwrap();
    let truth = parse_truth(&std::fs::read_to_string(data("mini_truth.csv")).unwrap(), &batch).unwrap();
    assert_eq!(truth.len(), 15);
    for &(row, sdg) in &truth {
        let tokens = normalize(&consolidate(&batch.records[row])).tokens().to_vec();
        let ranked = sdgmap_oracle::rank(&lib, &tokens);
        let pos = ranked.iter().position(|r| r.sdg == sdg.get());
        assert!(
            matches!(pos, Some(0..=2)),
            "row {row}: truth {sdg} at {pos:?} in {ranked:?}"
        );
    }
}

#[test]
fn accuracy_targets() {
    let lib = CompiledLibrary::compile(load_library(&data("sample_queries.tsv")).unwrap());
    let batch = read_batch(&[data("mini_corpus.csv")], None, &MappingRequest::Auto).unwrap();
    assert_eq!(batch.mapping.column(Role::Title), Some("Title"));
    let results: Vec<_> = batch
        .records
        .iter()
        .map(|r| rank(&classify(&normalize(&consolidate(r)), &lib), TopN::MAX))
        .collect();
    let truth = parse_truth(&std::fs::read_to_string(data("mini_truth.csv")).unwrap(), &batch).unwrap();
    let table = evaluate(&results, &truth, TopN::new(5).unwrap()).unwrap();
    eprintln!("{}", sdgmap_core::analytics::eval_csv(&table).unwrap());
    assert_eq!(table.overall.accuracy(3), 100.0);
    assert!(table.overall.accuracy(1) >= 80.0);

    let summary = summarize(&results).unwrap();
    let focus: usize = [1, 4, 5]
        .iter()
        .map(|&n| summary.get(SdgId::new(n).unwrap()).within_top[0])
        .sum();
    assert!(focus >= 14, "top-1 distribution {:?}", summary.series(1));
}

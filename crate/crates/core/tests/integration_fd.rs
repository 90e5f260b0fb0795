use std::collections::BTreeSet;

use schema_align::fd::{cluster_columns, evaluate_clusters, integrate_fd, Integrated, TokenTypeProvider};
use schema_align::ingest::{is_missing, Document};
use schema_align::synth::{builtin_layouts, generate_dataset};

fn corpus() -> (schema_align::synth::Dataset, Vec<Document>) {
    let data = generate_dataset(&builtin_layouts(), 2, 10, 42).unwrap();
    let docs = data.load_documents().unwrap();
    (data, docs)
}

#[test]
fn clustering_partitions_columns_without_same_document_merges() {
    let (_, docs) = corpus();
    let total: usize = docs.iter().map(|d| d.table.col_count()).sum();
    for tau in [0.3, 0.5, 0.7, 0.9] {
        let c = cluster_columns(&docs, tau, &TokenTypeProvider);
        assert_eq!(c.columns.len(), total);
        let mut seen = BTreeSet::new();
        for cluster in &c.clusters {
            let mut docs_in = BTreeSet::new();
            for &m in &cluster.members {
                assert!(seen.insert(m), "column {m} in two clusters");
                assert!(docs_in.insert(c.columns[m].document_id.clone()), "tau {tau}: {} repeats a document", cluster.name);
                assert_eq!(c.cluster_of[m], c.clusters.iter().position(|x| x.name == cluster.name).unwrap());
            }
        }
        assert_eq!(seen.len(), total);
    }
}

#[test]
fn cluster_count_grows_with_tau_on_fixture() {
    let (_, docs) = corpus();
    let counts: Vec<usize> = [0.3, 0.5, 0.7, 0.9, 1.0]
        .iter()
        .map(|&t| cluster_columns(&docs, t, &TokenTypeProvider).clusters.len())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}

#[test]
fn outer_union_preserves_rows_and_values() {
    let (data, docs) = corpus();
    let clustering = cluster_columns(&docs, 0.7, &TokenTypeProvider);
    let Integrated { table, provenance } = integrate_fd(&docs, &clustering);
    let rows: usize = docs.iter().map(|d| d.table.row_count()).sum();
    assert_eq!(table.row_count(), rows);
    assert_eq!(provenance.len(), rows);
    assert_eq!(table.col_count(), clustering.clusters.len());

    let mut r = 0;
    for doc in &docs {
        for row in &doc.table.cells {
            for (c, cell) in row.iter().enumerate() {
                let k = doc.table.col_count();
                let global = docs.iter().take_while(|d| d.id != doc.id).map(|d| d.table.col_count()).sum::<usize>() + c;
                let out = &table.rows[r][clustering.cluster_of[global]];
                if is_missing(cell) {
                    assert_eq!(out, &None);
                } else {
                    assert_eq!(out.as_deref(), Some(cell.as_str()), "{k}");
                }
            }
            assert_eq!(provenance[r], doc.format_id());
            r += 1;
        }
    }
    assert!(evaluate_clusters(&clustering, &data.cluster_truth).unwrap().f1 > 0.0);
}

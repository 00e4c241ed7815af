use evotopic_core::alignment::LocalCluster;
use evotopic_core::corpus::{Corpus, Document};
use evotopic_core::representation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_window(rng: &mut ChaCha8Rng) -> (Corpus, Vec<LocalCluster>) {
    let n_docs = rng.random_range(3..40);
    let vocab = rng.random_range(3..30);
    let docs = (0..n_docs)
        .map(|i| {
            let tokens: Vec<String> = (0..rng.random_range(0..15))
                .map(|_| format!("w{}", rng.random_range(0..vocab)))
                .collect();
            Document {
                id: format!("d{i}"),
                timestamp: 0,
                text: tokens.join(" "),
                tokens,
            }
        })
        .collect();
    let corpus = Corpus::from_documents(docs).unwrap();
    let k = rng.random_range(1..=4.min(n_docs));
    let mut members = vec![Vec::new(); k];
    for d in 0..n_docs {
        members[if d < k { d } else { rng.random_range(0..k) }].push(d);
    }
    let clusters = members
        .into_iter()
        .enumerate()
        .map(|(i, m)| LocalCluster {
            window: 0,
            local_id: i,
            size: m.len(),
            members: m,
            rows: Vec::new(),
            centroid: Vec::new(),
        })
        .collect();
    (corpus, clusters)
}

/// Literal c-TF-IDF: concatenate each class, count by scanning.
fn nested_loop_weights(corpus: &Corpus, clusters: &[LocalCluster]) -> Vec<Vec<(String, f64)>> {
    let class_text: Vec<Vec<&str>> = clusters
        .iter()
        .map(|c| {
            c.members
                .iter()
                .flat_map(|&d| corpus.documents()[d].tokens.iter().map(String::as_str))
                .collect()
        })
        .collect();
    let total: usize = class_text.iter().map(Vec::len).sum();
    let a = total as f64 / clusters.len() as f64;
    class_text
        .iter()
        .map(|text| {
            let mut distinct: Vec<&str> = text.clone();
            distinct.sort();
            distinct.dedup();
            let mut terms: Vec<(String, f64)> = distinct
                .into_iter()
                .map(|t| {
                    let tf = text.iter().filter(|&&x| x == t).count() as f64;
                    let f: usize = class_text.iter().map(|c| c.iter().filter(|&&x| x == t).count()).sum();
                    (t.to_string(), tf * (1.0 + a / f as f64).ln())
                })
                .collect();
            terms.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
            terms
        })
        .collect()
}

#[test]
fn weights_match_nested_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let (corpus, clusters) = random_window(&mut rng);
        let refs: Vec<&LocalCluster> = clusters.iter().collect();
        let got = representation::window_weights(&corpus, &refs);
        let oracle = nested_loop_weights(&corpus, &clusters);
        assert_eq!(got.len(), oracle.len());
        for (g, o) in got.iter().zip(&oracle) {
            assert_eq!(g.len(), o.len());
            for ((gt, gw), (ot, ow)) in g.iter().zip(o) {
                assert_eq!(gt, ot);
                assert!((gw - ow).abs() < 1e-12);
            }
        }
        let reps = representation::ctfidf(&corpus, &clusters, 5);
        for (rep, o) in reps.iter().zip(&oracle) {
            assert_eq!(rep.terms.len(), o.len().min(5));
            assert_eq!(rep.empty, o.is_empty());
        }
    }
}

#[test]
fn windows_are_scored_independently() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (corpus, mut clusters) = random_window(&mut rng);
    let alone = representation::ctfidf(&corpus, &clusters, 10);
    let mut other = clusters.clone();
    for c in &mut other {
        c.window = 1;
        c.members.truncate(1);
    }
    clusters.extend(other);
    let both = representation::ctfidf(&corpus, &clusters, 10);
    assert_eq!(&both[..alone.len()], &alone[..]);
}

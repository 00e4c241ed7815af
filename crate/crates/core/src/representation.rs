//! Class-based TF-IDF term lists for local clusters.
//!
//! Within one window every local cluster is a class whose text is the
//! concatenation of its documents. A token is weighted by
//! `tf(t, c) * ln(1 + A / f(t))`, where `f(t)` is the token's count over all
//! classes of the window and `A` the mean token count per class.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::LocalCluster;
use crate::corpus::Corpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRepresentation {
    pub window: usize,
    pub local_id: usize,
    /// Sorted by weight descending, then token ascending.
    pub terms: Vec<(String, f64)>,
    /// The cluster's documents have no tokens at all.
    pub empty: bool,
}

impl TopicRepresentation {
    pub fn tokens(&self) -> Vec<&str> {
        self.terms.iter().map(|(t, _)| t.as_str()).collect()
    }
}

/// Full (untruncated) weights of one window's classes, in class order.
pub fn window_weights(corpus: &Corpus, classes: &[&LocalCluster]) -> Vec<Vec<(String, f64)>> {
    let docs = corpus.documents();
    let counts: Vec<HashMap<&str, usize>> = classes
        .iter()
        .map(|c| {
            let mut tf = HashMap::new();
            for &d in &c.members {
                for tok in &docs[d].tokens {
                    *tf.entry(tok.as_str()).or_insert(0) += 1;
                }
            }
            tf
        })
        .collect();

    let mut freq: HashMap<&str, usize> = HashMap::new();
    let mut total = 0usize;
    for tf in &counts {
        for (&tok, &n) in tf {
            *freq.entry(tok).or_insert(0) += n;
            total += n;
        }
    }
    let avg = total as f64 / classes.len().max(1) as f64;

    counts
        .iter()
        .map(|tf| {
            let mut terms: Vec<(String, f64)> = tf
                .iter()
                .map(|(&tok, &n)| (tok.to_string(), n as f64 * (avg / freq[tok] as f64).ln_1p()))
                .collect();
            terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            terms
        })
        .collect()
}

/// Top-`top_m` c-TF-IDF terms for every local cluster, grouped per window.
pub fn ctfidf(corpus: &Corpus, clusters: &[LocalCluster], top_m: usize) -> Vec<TopicRepresentation> {
    let mut by_window: BTreeMap<usize, Vec<&LocalCluster>> = BTreeMap::new();
    for c in clusters {
        by_window.entry(c.window).or_default().push(c);
    }
    let groups: Vec<(usize, Vec<&LocalCluster>)> = by_window.into_iter().collect();
    groups
        .par_iter()
        .map(|(window, classes)| {
            window_weights(corpus, classes)
                .into_iter()
                .zip(classes)
                .map(|(mut terms, c)| {
                    let empty = terms.is_empty();
                    terms.truncate(top_m);
                    TopicRepresentation {
                        window: *window,
                        local_id: c.local_id,
                        terms,
                        empty,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

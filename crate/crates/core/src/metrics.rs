//! Topic coherence (NPMI over document co-occurrence), topic diversity
//! (proportion of unique words) and the period-wise and topic-wise reports
//! built from them.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::alignment::{EvolvingTopic, LocalCluster};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::representation::TopicRepresentation;
use crate::windowing::Window;

/// Document-level token presence for a reference collection.
#[derive(Debug, Clone, Default)]
pub struct RefDocs {
    n_docs: usize,
    /// Ascending document positions containing each token.
    postings: HashMap<String, Vec<u32>>,
}

impl RefDocs {
    pub fn new<I, D, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        let mut n_docs = 0;
        for (i, doc) in docs.into_iter().enumerate() {
            n_docs = i + 1;
            let unique: HashSet<String> = doc.into_iter().map(|t| t.as_ref().to_string()).collect();
            for tok in unique {
                postings.entry(tok).or_default().push(i as u32);
            }
        }
        RefDocs { n_docs, postings }
    }

    pub fn from_corpus(corpus: &Corpus, members: &[usize]) -> Self {
        RefDocs::new(members.iter().map(|&d| corpus.documents()[d].tokens.iter()))
    }

    pub fn len(&self) -> usize {
        self.n_docs
    }

    pub fn is_empty(&self) -> bool {
        self.n_docs == 0
    }

    pub fn doc_count(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, Vec::len)
    }

    pub fn joint_count(&self, a: &str, b: &str) -> usize {
        let (Some(pa), Some(pb)) = (self.postings.get(a), self.postings.get(b)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].cmp(&pb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Normalised pointwise mutual information from document counts.
///
/// No co-occurrence gives -1; co-occurrence in every document gives 0.
pub fn npmi(a: &str, b: &str, refs: &RefDocs) -> Result<f64> {
    for t in [a, b] {
        if refs.doc_count(t) == 0 {
            return Err(Error::ExcludedPair(t.to_string()));
        }
    }
    let n = refs.len() as f64;
    let joint = refs.joint_count(a, b);
    if joint == 0 {
        return Ok(-1.0);
    }
    let p_ab = joint as f64 / n;
    if p_ab == 1.0 {
        return Ok(0.0);
    }
    let p_a = refs.doc_count(a) as f64 / n;
    let p_b = refs.doc_count(b) as f64 / n;
    Ok((p_ab / (p_a * p_b)).ln() / -p_ab.ln())
}

/// Mean NPMI over the unordered pairs of a topic's terms that occur in the
/// reference documents; `None` with fewer than two such terms.
pub fn single_topic_coherence<S: AsRef<str>>(terms: &[S], refs: &RefDocs) -> Option<f64> {
    let scoreable: Vec<&str> = terms
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| refs.doc_count(t) > 0)
        .collect();
    if scoreable.len() < 2 {
        return None;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for r in 1..scoreable.len() {
        for s in 0..r {
            sum += npmi(scoreable[r], scoreable[s], refs).expect("both terms occur");
            pairs += 1;
        }
    }
    Some(sum / pairs as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub tc: f64,
    pub per_topic: Vec<Option<f64>>,
    /// Topics with fewer than two scoreable terms.
    pub skipped: usize,
}

/// Mean over topics of the per-topic mean pairwise NPMI.
pub fn topic_coherence<S: AsRef<str>>(topics: &[Vec<S>], refs: &RefDocs) -> Result<Coherence> {
    let per_topic: Vec<Option<f64>> = topics.iter().map(|t| single_topic_coherence(t, refs)).collect();
    let scored: Vec<f64> = per_topic.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(Error::UndefinedCoherence);
    }
    Ok(Coherence {
        tc: scored.iter().sum::<f64>() / scored.len() as f64,
        skipped: topics.len() - scored.len(),
        per_topic,
    })
}

/// Unique terms across all topics divided by the total term count.
pub fn topic_diversity<S: AsRef<str>>(topics: &[Vec<S>]) -> Result<f64> {
    if topics.is_empty() || topics.iter().any(Vec::is_empty) {
        return Err(Error::EmptyTopics);
    }
    let total: usize = topics.iter().map(Vec::len).sum();
    let unique: HashSet<&str> = topics.iter().flatten().map(AsRef::as_ref).collect();
    Ok(unique.len() as f64 / total as f64)
}

/// Which documents estimate the NPMI probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefScope {
    /// All documents of the topic's window.
    #[default]
    Window,
    /// Only the documents of the local cluster being scored.
    Topic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub window: usize,
    pub topic_count: usize,
    pub tc: Option<f64>,
    pub td: Option<f64>,
    pub quality: Option<f64>,
    pub skipped_topics: usize,
    /// Why the row has no scores.
    pub gap: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub rows: Vec<PeriodRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRow {
    pub topic: usize,
    pub part_count: usize,
    pub scored_parts: usize,
    pub tc: Option<f64>,
    pub td: Option<f64>,
    pub quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub rows: Vec<TopicRow>,
}

/// Looks up clusters and representations by `(window, local_id)`.
pub struct MetricsContext<'a> {
    pub corpus: &'a Corpus,
    pub windows: &'a [Window],
    pub clusters: &'a [LocalCluster],
    pub representations: &'a [TopicRepresentation],
    pub scope: RefScope,
}

impl MetricsContext<'_> {
    fn cluster(&self, window: usize, local_id: usize) -> Option<&LocalCluster> {
        self.clusters
            .iter()
            .find(|c| c.window == window && c.local_id == local_id)
    }

    fn representation(&self, window: usize, local_id: usize) -> Option<&TopicRepresentation> {
        self.representations
            .iter()
            .find(|r| r.window == window && r.local_id == local_id)
    }

    fn refs_for(&self, rep: &TopicRepresentation, window_refs: &RefDocs) -> RefDocs {
        match self.scope {
            RefScope::Window => window_refs.clone(),
            RefScope::Topic => self
                .cluster(rep.window, rep.local_id)
                .map(|c| RefDocs::from_corpus(self.corpus, &c.members))
                .unwrap_or_default(),
        }
    }

    fn part_coherence(&self, rep: &TopicRepresentation, window_refs: &RefDocs) -> Option<f64> {
        match self.scope {
            RefScope::Window => single_topic_coherence(&rep.tokens(), window_refs),
            RefScope::Topic => single_topic_coherence(&rep.tokens(), &self.refs_for(rep, window_refs)),
        }
    }
}

/// Per-window coherence, diversity and quality of that window's topics.
pub fn period_wise(ctx: &MetricsContext<'_>) -> PeriodReport {
    let rows = ctx
        .windows
        .iter()
        .map(|w| {
            let reps: Vec<&TopicRepresentation> = ctx.representations.iter().filter(|r| r.window == w.index).collect();
            let mut row = PeriodRow {
                window: w.index,
                topic_count: reps.len(),
                tc: None,
                td: None,
                quality: None,
                skipped_topics: 0,
                gap: None,
            };
            if w.members.is_empty() {
                row.gap = Some("empty window".into());
                return row;
            }
            if reps.is_empty() {
                row.gap = Some("no topics".into());
                return row;
            }
            let window_refs = RefDocs::from_corpus(ctx.corpus, &w.members);
            let scores: Vec<Option<f64>> = reps.iter().map(|r| ctx.part_coherence(r, &window_refs)).collect();
            let scored: Vec<f64> = scores.iter().flatten().copied().collect();
            row.skipped_topics = reps.len() - scored.len();
            if !scored.is_empty() {
                row.tc = Some(scored.iter().sum::<f64>() / scored.len() as f64);
            }
            let term_lists: Vec<Vec<&str>> = reps.iter().map(|r| r.tokens()).filter(|t| !t.is_empty()).collect();
            row.td = topic_diversity(&term_lists).ok();
            row.quality = row.tc.zip(row.td).map(|(c, d)| c * d);
            if row.quality.is_none() {
                row.gap = Some("no scoreable topics".into());
            }
            row
        })
        .collect();
    PeriodReport { rows }
}

/// Per evolving topic: mean of its parts' coherences (each against its own
/// window) and diversity of all its parts' terms pooled.
pub fn topic_wise(ctx: &MetricsContext<'_>, topics: &[EvolvingTopic]) -> TopicReport {
    let mut window_refs: HashMap<usize, RefDocs> = HashMap::new();
    let rows = topics
        .iter()
        .map(|topic| {
            let mut scores = Vec::new();
            let mut term_lists = Vec::new();
            for &(w, local) in &topic.parts {
                let Some(rep) = ctx.representation(w, local) else {
                    continue;
                };
                let refs = window_refs
                    .entry(w)
                    .or_insert_with(|| RefDocs::from_corpus(ctx.corpus, &ctx.windows[w].members));
                if let Some(s) = ctx.part_coherence(rep, refs) {
                    scores.push(s);
                }
                if !rep.terms.is_empty() {
                    term_lists.push(rep.tokens());
                }
            }
            let tc = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
            let td = topic_diversity(&term_lists).ok();
            TopicRow {
                topic: topic.id,
                part_count: topic.parts.len(),
                scored_parts: scores.len(),
                tc,
                td,
                quality: tc.zip(td).map(|(c, d)| c * d),
            }
        })
        .collect();
    TopicReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs(docs: &[&[&str]]) -> RefDocs {
        RefDocs::new(docs.iter().map(|d| d.iter()))
    }

    #[test]
    fn disjoint_pair_is_minus_one() {
        let r = refs(&[&["t"], &["t"], &["u"], &["u"]]);
        assert_eq!(npmi("t", "u", &r).unwrap(), -1.0);
    }

    #[test]
    fn perfect_association_is_one() {
        let r = refs(&[&["t", "u"], &["t", "u"], &["x"], &["y"]]);
        assert!((npmi("t", "u", &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_overlap_hand_value() {
        let r = refs(&[&["t", "u"], &["t", "u"], &["u"], &["x"]]);
        let expected = (0.5f64 / (0.5 * 0.75)).ln() / -(0.5f64.ln());
        let got = npmi("t", "u", &r).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.4150374992788438).abs() < 1e-12);
    }

    #[test]
    fn everywhere_pair_is_zero_and_missing_token_errors() {
        let r = refs(&[&["t", "u"], &["t", "u"]]);
        assert_eq!(npmi("t", "u", &r).unwrap(), 0.0);
        assert!(matches!(npmi("t", "zz", &r), Err(Error::ExcludedPair(ref t)) if t == "zz"));
    }

    #[test]
    fn coherence_averages_topics_and_skips_unscoreable() {
        let r = refs(&[&["a", "b"], &["a", "b"], &["c"], &["d"]]);
        let c = topic_coherence(&[vec!["a", "b"]], &r).unwrap();
        assert!((c.tc - 1.0).abs() < 1e-12);

        let c = topic_coherence(&[vec!["a", "b"], vec!["c", "d"], vec!["a", "zz"]], &r).unwrap();
        assert_eq!(c.skipped, 1);
        assert!((c.tc - 0.0).abs() < 1e-12);

        assert!(matches!(topic_coherence(&[vec!["zz", "yy"]], &r), Err(Error::UndefinedCoherence)));
    }

    #[test]
    fn diversity_examples() {
        let a: Vec<String> = (0..10).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..10).map(|i| format!("b{i}")).collect();
        assert_eq!(topic_diversity(&[a.clone(), b]).unwrap(), 1.0);
        assert_eq!(topic_diversity(&[a.clone(), a.clone(), a.clone(), a]).unwrap(), 0.25);
        assert_eq!(topic_diversity(&[vec!["a", "b"], vec!["b", "c"]]).unwrap(), 0.75);
        assert!(matches!(topic_diversity::<&str>(&[]), Err(Error::EmptyTopics)));
    }
}

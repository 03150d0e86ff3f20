//! Topic modeling over clinical notes: collapsed Gibbs LDA, fold-in inference,
//! and per-note topic-proportion vectors.
//!
//! Fitting is deterministic given (corpus, seed) and invariant to document
//! order: documents are processed in a canonical order keyed by a content
//! digest, and each document draws from its own RNG stream derived from that
//! digest.

use crate::seeding::{derive_rng, digest_parts, to_hex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

/// Token -> count map for one note or document.
pub type TokenCounts = BTreeMap<String, u32>;

/// Per-document distribution over topics; sums to 1.
pub type DocTopicDist = Vec<f64>;

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document {0} has no tokens")]
    EmptyDocument(usize),
    #[error("no term meets the document-frequency threshold {0}")]
    EmptyVocabulary(usize),
    #[error("topic index {topic} out of range for K={k}")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("invalid hyperparameter: {0}")]
    BadParam(String),
    #[error("held-out set has no in-vocabulary tokens")]
    NoInVocabTokens,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

const STOP_WORDS: [&str; 32] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "had", "has", "have",
    "in", "if", "is", "it", "no", "not", "of", "on", "or", "that", "the", "this", "to", "was",
    "were", "will", "with", "you",
];

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2
/// characters and a fixed stop list.
pub fn tokenize(text: &str) -> TokenCounts {
    let mut counts = TokenCounts::new();
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        let token = raw.to_lowercase();
        if token.len() < 2 || STOP_WORDS.contains(&token.as_str()) {
            continue;
        }
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Ordered term list with dense indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn new(mut terms: Vec<String>) -> Self {
        terms.sort();
        terms.dedup();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, index }
    }

    /// Terms appearing in at least `min_docs` documents, lexicographic order.
    pub fn build(corpus: &[TokenCounts], min_docs: usize) -> Result<Self, TopicsError> {
        let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            for term in doc.keys() {
                *doc_freq.entry(term).or_insert(0) += 1;
            }
        }
        let terms: Vec<String> = doc_freq
            .into_iter()
            .filter(|(_, df)| *df >= min_docs)
            .map(|(t, _)| t.to_string())
            .collect();
        if terms.is_empty() {
            return Err(TopicsError::EmptyVocabulary(min_docs));
        }
        Ok(Vocabulary::new(terms))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn content_hash(&self) -> String {
        let parts: Vec<&[u8]> = self.terms.iter().map(|t| t.as_bytes()).collect();
        to_hex(&digest_parts(&parts))
    }

    fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric document-topic prior; None means 50/K.
    pub alpha: Option<f64>,
    /// Symmetric topic-term prior.
    pub beta: f64,
    /// Collapsed Gibbs sweeps; no convergence test is applied.
    pub iterations: usize,
    /// Vocabulary pruning: keep terms in at least this many documents.
    pub min_term_docs: usize,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams { k: 50, alpha: None, beta: 0.01, iterations: 200, min_term_docs: 5 }
    }
}

/// A fitted topic model: K term distributions plus the priors used to fit.
#[derive(Debug, Clone)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// K x vocab; each row sums to 1.
    pub phi: Vec<Vec<f64>>,
    pub vocab: Vocabulary,
}

/// Canonical content digest of a document: its sorted (term, count) pairs.
fn doc_digest(doc: &TokenCounts) -> [u8; 32] {
    let mut parts: Vec<Vec<u8>> = Vec::with_capacity(doc.len() * 2);
    for (term, count) in doc {
        parts.push(term.as_bytes().to_vec());
        parts.push(count.to_le_bytes().to_vec());
    }
    let refs: Vec<&[u8]> = parts.iter().map(|p| p.as_slice()).collect();
    digest_parts(&refs)
}

/// Expand a count map into in-vocabulary token instances, term-sorted.
fn expand_tokens(doc: &TokenCounts, vocab: &Vocabulary) -> Vec<usize> {
    let mut out = Vec::new();
    for (term, count) in doc {
        if let Some(w) = vocab.index_of(term) {
            for _ in 0..*count {
                out.push(w);
            }
        }
    }
    out
}

fn sample_categorical(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Fit a topic model by collapsed Gibbs sampling.
///
/// Documents left empty by vocabulary pruning are skipped. phi is estimated
/// from the final counts with beta smoothing.
pub fn fit_lda(corpus: &[TokenCounts], params: &LdaParams, seed: u64) -> Result<TopicModel, TopicsError> {
    if corpus.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    for (i, doc) in corpus.iter().enumerate() {
        if doc.values().all(|c| *c == 0) {
            return Err(TopicsError::EmptyDocument(i));
        }
    }
    if params.k == 0 {
        return Err(TopicsError::BadParam("K must be positive".into()));
    }
    let alpha = params.alpha.unwrap_or(50.0 / params.k as f64);
    if alpha <= 0.0 || params.beta <= 0.0 {
        return Err(TopicsError::BadParam("alpha and beta must be positive".into()));
    }

    let vocab = Vocabulary::build(corpus, params.min_term_docs)?;
    let k = params.k;
    let w_total = vocab.len();
    let beta = params.beta;

    // Canonical document order: sort by content digest. Documents with equal
    // content are interchangeable, so input order cannot affect the fit.
    let mut order: Vec<(usize, [u8; 32])> =
        corpus.iter().enumerate().map(|(i, d)| (i, doc_digest(d))).collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));

    struct DocState {
        digest_hex: String,
        tokens: Vec<usize>,
        assignments: Vec<usize>,
    }

    let mut docs: Vec<DocState> = Vec::new();
    for (i, digest) in &order {
        let tokens = expand_tokens(&corpus[*i], &vocab);
        if tokens.is_empty() {
            continue; // fully pruned by the vocabulary threshold
        }
        docs.push(DocState {
            digest_hex: to_hex(digest),
            assignments: vec![0; tokens.len()],
            tokens,
        });
    }
    if docs.is_empty() {
        return Err(TopicsError::EmptyVocabulary(params.min_term_docs));
    }

    let mut n_dk = vec![vec![0i64; k]; docs.len()];
    let mut n_kw = vec![vec![0i64; w_total]; k];
    let mut n_k = vec![0i64; k];

    for (d, doc) in docs.iter_mut().enumerate() {
        let mut rng = derive_rng(seed, &["lda-init", &doc.digest_hex]);
        for (pos, &w) in doc.tokens.iter().enumerate() {
            let topic = rng.gen_range(0..k);
            doc.assignments[pos] = topic;
            n_dk[d][topic] += 1;
            n_kw[topic][w] += 1;
            n_k[topic] += 1;
        }
    }

    let w_beta = w_total as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for sweep in 0..params.iterations {
        let sweep_tag = sweep.to_string();
        for (d, doc) in docs.iter_mut().enumerate() {
            let mut rng = derive_rng(seed, &["lda-sweep", &sweep_tag, &doc.digest_hex]);
            for pos in 0..doc.tokens.len() {
                let w = doc.tokens[pos];
                let old = doc.assignments[pos];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + beta)
                        / (n_k[t] as f64 + w_beta);
                    weights[t] = p;
                    total += p;
                }
                let new = sample_categorical(&weights, total, &mut rng);
                doc.assignments[pos] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let denom = n_k[t] as f64 + w_beta;
            (0..w_total).map(|w| (n_kw[t][w] as f64 + beta) / denom).collect()
        })
        .collect();

    Ok(TopicModel { k, alpha, beta, phi, vocab })
}

/// Infer topic proportions for one note by fold-in Gibbs with phi frozen.
///
/// Out-of-vocabulary terms are skipped; a note with no in-vocabulary tokens
/// gets the symmetric prior, i.e. the uniform distribution.
pub fn infer_topics(
    model: &TopicModel,
    note: &TokenCounts,
    fold_in_iterations: usize,
    seed: u64,
) -> DocTopicDist {
    let tokens = expand_tokens(note, &model.vocab);
    let k = model.k;
    if tokens.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut rng = derive_rng(seed, &["lda-fold-in"]);
    let mut n_dk = vec![0i64; k];
    let mut assignments = vec![0usize; tokens.len()];
    for (pos, &w) in tokens.iter().enumerate() {
        let _ = w;
        let topic = rng.gen_range(0..k);
        assignments[pos] = topic;
        n_dk[topic] += 1;
    }
    let mut weights = vec![0.0f64; k];
    for _ in 0..fold_in_iterations {
        for pos in 0..tokens.len() {
            let w = tokens[pos];
            let old = assignments[pos];
            n_dk[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                let p = (n_dk[t] as f64 + model.alpha) * model.phi[t][w];
                weights[t] = p;
                total += p;
            }
            let new = sample_categorical(&weights, total, &mut rng);
            assignments[pos] = new;
            n_dk[new] += 1;
        }
    }
    let denom = tokens.len() as f64 + k as f64 * model.alpha;
    (0..k).map(|t| (n_dk[t] as f64 + model.alpha) / denom).collect()
}

/// The n highest-phi terms of a topic; ties broken by vocabulary index.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>, TopicsError> {
    if topic >= model.k {
        return Err(TopicsError::TopicOutOfRange { topic, k: model.k });
    }
    let mut idx: Vec<usize> = (0..model.vocab.len()).collect();
    idx.sort_by(|&a, &b| {
        model.phi[topic][b]
            .partial_cmp(&model.phi[topic][a])
            .unwrap()
            .then(a.cmp(&b))
    });
    Ok(idx.into_iter().take(n).map(|w| model.vocab.term(w).to_string()).collect())
}

/// Held-out perplexity over in-vocabulary tokens, using fold-in inference
/// for per-document proportions. The uniform term model scores `vocab.len()`.
pub fn perplexity(
    model: &TopicModel,
    held_out: &[TokenCounts],
    fold_in_iterations: usize,
    seed: u64,
) -> Result<f64, TopicsError> {
    let mut log_sum = 0.0f64;
    let mut n_tokens = 0usize;
    for doc in held_out {
        let theta = infer_topics(model, doc, fold_in_iterations, seed);
        for (term, count) in doc {
            if let Some(w) = model.vocab.index_of(term) {
                let p: f64 = (0..model.k).map(|t| theta[t] * model.phi[t][w]).sum();
                log_sum += *count as f64 * p.ln();
                n_tokens += *count as usize;
            }
        }
    }
    if n_tokens == 0 {
        return Err(TopicsError::NoInVocabTokens);
    }
    Ok((-log_sum / n_tokens as f64).exp())
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

/// Write the model as a CSV matrix with a header line, plus a `.vocab`
/// sidecar listing one term per line.
pub fn save_checkpoint(path: &Path, model: &TopicModel, config_hash: &str) -> Result<(), TopicsError> {
    let vocab_path = vocab_sidecar(path);
    {
        let mut w = BufWriter::new(std::fs::File::create(&vocab_path)?);
        for term in model.vocab.terms() {
            writeln!(w, "{term}")?;
        }
        w.flush()?;
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "# icu-topics v1 k={} alpha={} beta={} vocab_hash={} config_hash={}",
        model.k,
        model.alpha,
        model.beta,
        model.vocab.content_hash(),
        config_hash
    )?;
    for row in &model.phi {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Load a checkpoint; returns the model and the recorded config hash.
pub fn load_checkpoint(path: &Path) -> Result<(TopicModel, String), TopicsError> {
    let vocab_path = vocab_sidecar(path);
    let terms: Vec<String> = std::fs::read_to_string(&vocab_path)?
        .lines()
        .map(|l| l.to_string())
        .collect();
    let mut vocab = Vocabulary { terms, index: BTreeMap::new() };
    vocab.rebuild_index();

    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| TopicsError::BadCheckpoint("empty file".into()))??;
    let fields: BTreeMap<&str, &str> = header
        .trim_start_matches('#')
        .split_whitespace()
        .filter_map(|f| f.split_once('='))
        .collect();
    let k: usize = fields
        .get("k")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| TopicsError::BadCheckpoint("missing k".into()))?;
    let alpha: f64 = fields
        .get("alpha")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| TopicsError::BadCheckpoint("missing alpha".into()))?;
    let beta: f64 = fields
        .get("beta")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| TopicsError::BadCheckpoint("missing beta".into()))?;
    let vocab_hash = fields
        .get("vocab_hash")
        .map(|v| v.to_string())
        .ok_or_else(|| TopicsError::BadCheckpoint("missing vocab_hash".into()))?;
    let config_hash = fields.get("config_hash").unwrap_or(&"").to_string();
    if vocab.content_hash() != vocab_hash {
        return Err(TopicsError::BadCheckpoint("vocabulary hash mismatch".into()));
    }

    let mut phi = Vec::with_capacity(k);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.parse::<f64>()).collect();
        let row = row.map_err(|e| TopicsError::BadCheckpoint(format!("bad phi value: {e}")))?;
        if row.len() != vocab.len() {
            return Err(TopicsError::BadCheckpoint(format!(
                "phi row width {} != vocab size {}",
                row.len(),
                vocab.len()
            )));
        }
        phi.push(row);
    }
    if phi.len() != k {
        return Err(TopicsError::BadCheckpoint(format!("expected {k} phi rows, got {}", phi.len())));
    }
    for (t, row) in phi.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(TopicsError::BadCheckpoint(format!("phi row {t} sums to {s}")));
        }
    }
    Ok((TopicModel { k, alpha, beta, phi, vocab }, config_hash))
}

fn vocab_sidecar(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".vocab");
    std::path::PathBuf::from(os)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two disjoint sub-vocabularies, documents pure in one or the other.
    pub(crate) fn disjoint_corpus(docs_per_side: usize, seed: u64) -> Vec<TokenCounts> {
        let side_a: Vec<String> = (0..20).map(|i| format!("alpha{i:02}")).collect();
        let side_b: Vec<String> = (0..20).map(|i| format!("bravo{i:02}")).collect();
        let mut corpus = Vec::new();
        let mut rng = derive_rng(seed, &["disjoint-corpus"]);
        for d in 0..docs_per_side * 2 {
            let side = if d % 2 == 0 { &side_a } else { &side_b };
            let mut doc = TokenCounts::new();
            for _ in 0..30 {
                let t = side[rng.gen_range(0..side.len())].clone();
                *doc.entry(t).or_insert(0) += 1;
            }
            corpus.push(doc);
        }
        corpus
    }

    /// Oracle: bipartition terms by document co-occurrence (union-find).
    pub(crate) fn cooccurrence_components(corpus: &[TokenCounts]) -> BTreeMap<String, usize> {
        let mut parent: BTreeMap<String, String> = BTreeMap::new();
        fn find(parent: &mut BTreeMap<String, String>, x: &str) -> String {
            let p = parent.get(x).cloned().unwrap_or_else(|| x.to_string());
            if p == x {
                return p;
            }
            let root = find(parent, &p);
            parent.insert(x.to_string(), root.clone());
            root
        }
        for doc in corpus {
            let terms: Vec<&String> = doc.keys().collect();
            for t in &terms {
                parent.entry((*t).clone()).or_insert_with(|| (*t).clone());
            }
            for pair in terms.windows(2) {
                let ra = find(&mut parent, pair[0]);
                let rb = find(&mut parent, pair[1]);
                if ra != rb {
                    parent.insert(ra, rb);
                }
            }
        }
        let keys: Vec<String> = parent.keys().cloned().collect();
        let mut roots: Vec<String> = Vec::new();
        let mut out = BTreeMap::new();
        for t in keys {
            let r = find(&mut parent, &t);
            let id = match roots.iter().position(|x| *x == r) {
                Some(i) => i,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            out.insert(t, id);
        }
        out
    }

    fn fit_disjoint(seed: u64) -> (Vec<TokenCounts>, TopicModel) {
        let corpus = disjoint_corpus(40, 11);
        let params = LdaParams {
            k: 2,
            alpha: Some(0.5),
            beta: 0.01,
            iterations: 120,
            min_term_docs: 2,
        };
        let model = fit_lda(&corpus, &params, seed).unwrap();
        (corpus, model)
    }

    #[test]
    fn recovers_disjoint_vocabulary_topics() {
        let (corpus, model) = fit_disjoint(3);
        let components = cooccurrence_components(&corpus);
        let n_components = components.values().max().unwrap() + 1;
        assert_eq!(n_components, 2, "oracle bipartition must find 2 components");

        let mut topic_components = Vec::new();
        for t in 0..2 {
            let tops = top_words(&model, t, 10).unwrap();
            let comps: Vec<usize> = tops.iter().map(|w| components[w]).collect();
            assert!(
                comps.windows(2).all(|p| p[0] == p[1]),
                "topic {t} top words span components: {tops:?}"
            );
            topic_components.push(comps[0]);
        }
        assert_ne!(topic_components[0], topic_components[1], "topics must split the bipartition");
    }

    #[test]
    fn pure_note_gets_dominant_mass() {
        let (corpus, model) = fit_disjoint(3);
        let note = corpus[0].clone();
        let dist = infer_topics(&model, &note, 50, 17);
        let max = dist.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max >= 0.8, "expected >= 0.8 mass on the pure topic, got {dist:?}");
        let sum: f64 = dist.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn k1_phi_is_smoothed_term_frequencies() {
        let corpus = vec![
            TokenCounts::from([("aa".into(), 3), ("bb".into(), 1)]),
            TokenCounts::from([("aa".into(), 1), ("bb".into(), 1), ("cc".into(), 2)]),
        ];
        let params = LdaParams { k: 1, alpha: Some(1.0), beta: 0.5, iterations: 5, min_term_docs: 1 };
        let model = fit_lda(&corpus, &params, 5).unwrap();
        // counts: aa=4, bb=2, cc=2, total 8; W=3, beta=0.5
        let denom = 8.0 + 3.0 * 0.5;
        let expect = [(4.0 + 0.5) / denom, (2.0 + 0.5) / denom, (2.0 + 0.5) / denom];
        for (w, e) in expect.iter().enumerate() {
            assert!((model.phi[0][w] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_rows_sum_to_one() {
        let (_, model) = fit_disjoint(9);
        for row in &model.phi {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_and_permutation_invariant() {
        let corpus = disjoint_corpus(15, 2);
        let params = LdaParams { k: 2, alpha: Some(0.5), beta: 0.01, iterations: 30, min_term_docs: 2 };
        let a = fit_lda(&corpus, &params, 42).unwrap();
        let b = fit_lda(&corpus, &params, 42).unwrap();
        assert_eq!(a.phi, b.phi);

        let mut reversed = corpus.clone();
        reversed.reverse();
        let c = fit_lda(&reversed, &params, 42).unwrap();
        assert_eq!(a.phi, c.phi);

        let d = fit_lda(&corpus, &params, 43).unwrap();
        assert_ne!(a.phi, d.phi);
    }

    #[test]
    fn all_unknown_note_is_uniform() {
        let (_, model) = fit_disjoint(3);
        let note = TokenCounts::from([("zulu".into(), 4)]);
        let dist = infer_topics(&model, &note, 25, 1);
        assert_eq!(dist, vec![0.5, 0.5]);
    }

    #[test]
    fn top_words_clamps_and_orders() {
        let corpus = vec![
            TokenCounts::from([("aa".into(), 5), ("bb".into(), 2)]),
            TokenCounts::from([("aa".into(), 5), ("bb".into(), 2), ("cc".into(), 1)]),
        ];
        let params = LdaParams { k: 1, alpha: Some(1.0), beta: 0.1, iterations: 3, min_term_docs: 1 };
        let model = fit_lda(&corpus, &params, 0).unwrap();
        let top = top_words(&model, 0, 1).unwrap();
        assert_eq!(top, vec!["aa".to_string()]);
        let all = top_words(&model, 0, 99).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0], "aa");
        assert!(top_words(&model, 1, 1).is_err());
    }

    #[test]
    fn perplexity_beats_uniform() {
        let corpus = disjoint_corpus(40, 21);
        let (train, held) = corpus.split_at(60);
        let params = LdaParams { k: 2, alpha: Some(0.5), beta: 0.01, iterations: 80, min_term_docs: 2 };
        let model = fit_lda(train, &params, 7).unwrap();
        let ppl = perplexity(&model, held, 30, 13).unwrap();
        let uniform = model.vocab.len() as f64;
        assert!(ppl < uniform, "model perplexity {ppl} should beat uniform {uniform}");
    }

    #[test]
    fn checkpoint_round_trips() {
        let (_, model) = fit_disjoint(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topics.ckpt");
        save_checkpoint(&path, &model, "cafef00d").unwrap();
        let (back, config_hash) = load_checkpoint(&path).unwrap();
        assert_eq!(config_hash, "cafef00d");
        assert_eq!(back.k, model.k);
        assert_eq!(back.phi, model.phi);
        assert_eq!(back.vocab.terms(), model.vocab.terms());
    }

    #[test]
    fn rejects_empty_inputs() {
        assert!(matches!(fit_lda(&[], &LdaParams::default(), 0), Err(TopicsError::EmptyCorpus)));
        let corpus = vec![TokenCounts::new()];
        assert!(matches!(
            fit_lda(&corpus, &LdaParams::default(), 0),
            Err(TopicsError::EmptyDocument(0))
        ));
    }

    #[test]
    fn tokenize_lowercases_and_filters() {
        let counts = tokenize("The patient, PATIENT was intubated; BP 120/80 a x");
        assert_eq!(counts.get("patient"), Some(&2));
        assert_eq!(counts.get("intubated"), Some(&1));
        assert_eq!(counts.get("120"), Some(&1));
        assert!(!counts.contains_key("the"));
        assert!(!counts.contains_key("a"));
        assert!(!counts.contains_key("x"));
    }
}

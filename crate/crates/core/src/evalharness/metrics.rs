//! Reference-based text metrics over token sequences, scaled to [0, 100].

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::analysis::count_ngrams;

/// One token per code point, whitespace dropped.
pub fn tokenize_chars(text: &str) -> Vec<char> {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], k: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    for g in tokens.windows(k) {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// Cumulative BLEU up to order `n` with uniform weights and the standard
/// brevity penalty. Without smoothing any zero precision gives 0; with
/// `Some(eps)` a zero match count is replaced by `eps`.
pub fn bleu_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize, smoothing: Option<f64>) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidOrder(n));
    }
    if reference.is_empty() {
        return Err(EvalError::EmptyInput("reference"));
    }
    if candidate.len() < n {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let cand = ngram_counts(candidate, k);
        let refc = ngram_counts(reference, k);
        let clipped: usize = cand.iter().map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0))).sum();
        let total = candidate.len() - k + 1;
        let numerator = match (clipped, smoothing) {
            (0, None) => return Ok(0.0),
            (0, Some(eps)) => eps,
            (c, _) => c as f64,
        };
        log_sum += (numerator / total as f64).ln() / n as f64;
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((100.0 * bp * log_sum.exp()).min(100.0))
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// LCS-based F-measure; `beta` above 1 weights recall.
pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T], beta: f64) -> Result<f64, EvalError> {
    if candidate.is_empty() {
        return Err(EvalError::EmptyInput("candidate"));
    }
    if reference.is_empty() {
        return Err(EvalError::EmptyInput("reference"));
    }
    let l = lcs_len(candidate, reference) as f64;
    if l == 0.0 {
        return Ok(0.0);
    }
    let p = l / candidate.len() as f64;
    let r = l / reference.len() as f64;
    let b2 = beta * beta;
    Ok(100.0 * (1.0 + b2) * p * r / (r + b2 * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    /// Weight of precision in the harmonic mean; 0.9 leans toward recall.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Search-node cap for the minimum-chunk alignment.
    pub search_budget: usize,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
            search_budget: 200_000,
        }
    }
}

/// An exact-match alignment: `pairs[k] = (candidate index, reference index)`,
/// sorted by candidate index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
    pub chunks: usize,
    /// True when the search proved the chunk count minimal.
    pub exact: bool,
}

pub fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if k == 0 || pairs[k - 1] != (i.wrapping_sub(1), j.wrapping_sub(1)) {
            chunks += 1;
        }
    }
    chunks
}

/// Maximum-cardinality exact alignment with as few chunks as possible.
///
/// Finding the minimum is a hard combinatorial problem, so the search is a
/// depth-first branch and bound seeded by greedy longest-common-substring
/// tiling and capped at `budget` nodes. Short inputs are always solved
/// exactly.
pub fn align<T: Eq + Hash>(candidate: &[T], reference: &[T], budget: usize) -> Alignment {
    let greedy = greedy_tiling(candidate, reference);
    let mut search = Search::new(candidate, reference, budget);
    search.best_chunks = count_chunks(&greedy);
    search.best = greedy;
    if search.best_chunks > 1 {
        search.dfs(0, 0);
    }
    let chunks = count_chunks(&search.best);
    Alignment {
        pairs: search.best,
        chunks,
        exact: !search.exhausted,
    }
}

fn greedy_tiling<T: Eq>(c: &[T], r: &[T]) -> Vec<(usize, usize)> {
    let mut used_c = vec![false; c.len()];
    let mut used_r = vec![false; r.len()];
    let mut pairs = Vec::new();
    loop {
        // Longest run of equal, unused tokens; earliest start wins ties.
        let mut best = (0, 0, 0);
        for i in 0..c.len() {
            for j in 0..r.len() {
                let mut len = 0;
                while i + len < c.len()
                    && j + len < r.len()
                    && !used_c[i + len]
                    && !used_r[j + len]
                    && c[i + len] == r[j + len]
                {
                    len += 1;
                }
                if len > best.2 {
                    best = (i, j, len);
                }
            }
        }
        let (i, j, len) = best;
        if len == 0 {
            break;
        }
        for k in 0..len {
            used_c[i + k] = true;
            used_r[j + k] = true;
            pairs.push((i + k, j + k));
        }
    }
    pairs.sort_unstable();
    pairs
}

struct Search<'a, T> {
    c: &'a [T],
    r: &'a [T],
    /// Token class of each candidate position; classes absent from the
    /// reference are `None`.
    class: Vec<Option<usize>>,
    /// Reference positions per class.
    ref_positions: Vec<Vec<usize>>,
    /// Matches still required per class.
    need: Vec<usize>,
    /// Unvisited candidate positions per class, from the current index on.
    remaining: Vec<usize>,
    used_r: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    best_chunks: usize,
    nodes: usize,
    budget: usize,
    exhausted: bool,
}

impl<'a, T: Eq + Hash> Search<'a, T> {
    fn new(c: &'a [T], r: &'a [T], budget: usize) -> Self {
        let mut ids: HashMap<&T, usize> = HashMap::new();
        let mut ref_positions: Vec<Vec<usize>> = Vec::new();
        for (j, t) in r.iter().enumerate() {
            let id = *ids.entry(t).or_insert_with(|| {
                ref_positions.push(Vec::new());
                ref_positions.len() - 1
            });
            ref_positions[id].push(j);
        }
        let class: Vec<Option<usize>> = c.iter().map(|t| ids.get(t).copied()).collect();
        let mut remaining = vec![0; ref_positions.len()];
        for id in class.iter().flatten() {
            remaining[*id] += 1;
        }
        let need = remaining
            .iter()
            .zip(&ref_positions)
            .map(|(&cc, rp)| cc.min(rp.len()))
            .collect();
        Self {
            c,
            r,
            class,
            ref_positions,
            need,
            remaining,
            used_r: vec![false; r.len()],
            current: Vec::new(),
            best: Vec::new(),
            best_chunks: usize::MAX,
            nodes: 0,
            budget,
            exhausted: false,
        }
    }

    fn dfs(&mut self, i: usize, chunks: usize) {
        if chunks >= self.best_chunks {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if i == self.c.len() {
            // Every class reached its quota by construction.
            self.best = self.current.clone();
            self.best_chunks = chunks;
            return;
        }
        let Some(id) = self.class[i] else {
            self.dfs(i + 1, chunks);
            return;
        };
        debug_assert!(self.c[i] == self.r[self.ref_positions[id][0]]);
        self.remaining[id] -= 1;
        let extends = self
            .current
            .last()
            .filter(|&&(pi, _)| pi + 1 == i)
            .map(|&(_, pj)| pj + 1);
        if self.need[id] > 0 {
            // Extending the previous chunk first finds good bounds early.
            let mut order: Vec<usize> = self.ref_positions[id].iter().copied().filter(|&j| !self.used_r[j]).collect();
            if let Some(e) = extends {
                if let Some(pos) = order.iter().position(|&j| j == e) {
                    order.swap(0, pos);
                }
            }
            for j in order {
                let cost = usize::from(Some(j) != extends);
                self.used_r[j] = true;
                self.need[id] -= 1;
                self.current.push((i, j));
                self.dfs(i + 1, chunks + cost);
                self.current.pop();
                self.need[id] += 1;
                self.used_r[j] = false;
                if self.exhausted {
                    break;
                }
            }
        }
        // Skipping is only allowed if later occurrences can still fill the quota.
        if !self.exhausted && self.remaining[id] >= self.need[id] {
            self.dfs(i + 1, chunks);
        }
        self.remaining[id] += 1;
    }
}

/// METEOR with exact matching only. The fragmentation term is
/// `(chunks - 1) / (matches - 1)` (0 for a single match), so a contiguous
/// full match carries no penalty and identical inputs score exactly 100.
pub fn meteor<T: Eq + Hash>(candidate: &[T], reference: &[T], params: &MeteorParams) -> Result<f64, EvalError> {
    if candidate.is_empty() {
        return Err(EvalError::EmptyInput("candidate"));
    }
    if reference.is_empty() {
        return Err(EvalError::EmptyInput("reference"));
    }
    let a = align(candidate, reference, params.search_budget);
    Ok(meteor_from_alignment(a.pairs.len(), a.chunks, candidate.len(), reference.len(), params))
}

pub fn meteor_from_alignment(matches: usize, chunks: usize, cand_len: usize, ref_len: usize, params: &MeteorParams) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let p = m / cand_len as f64;
    let r = m / ref_len as f64;
    let fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let frag = if matches == 1 { 0.0 } else { (chunks as f64 - 1.0) / (m - 1.0) };
    let penalty = params.gamma * frag.powf(params.beta);
    (100.0 * fmean * (1.0 - penalty)).clamp(0.0, 100.0)
}

/// Pooled character n-gram diversity of a response set, scaled to [0, 100].
pub fn distinct_responses(responses: &[&str], n: usize) -> Result<f64, EvalError> {
    if responses.is_empty() {
        return Err(EvalError::EmptyInput("responses"));
    }
    if !(1..=3).contains(&n) {
        return Err(EvalError::InvalidOrder(n));
    }
    let seqs: Vec<Vec<char>> = responses.iter().map(|r| tokenize_chars(r)).collect();
    let (unique, total) = count_ngrams(&seqs, n);
    if total == 0 {
        return Err(EvalError::EmptyInput("responses shorter than n"));
    }
    Ok(100.0 * unique as f64 / total as f64)
}

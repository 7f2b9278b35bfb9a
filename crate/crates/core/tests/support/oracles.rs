//! Slow, obviously-correct reference implementations used to cross-check
//! the library's metric kernels. Nothing here shares code with the crate.

#![allow(dead_code)]

/// All contiguous k-grams, as owned vectors.
pub fn grams<T: Clone>(tokens: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 || tokens.len() < k {
        return Vec::new();
    }
    (0..=tokens.len() - k).map(|i| tokens[i..i + k].to_vec()).collect()
}

fn occurrences<T: PartialEq>(haystack: &[Vec<T>], needle: &[T]) -> usize {
    haystack.iter().filter(|g| g.as_slice() == needle).count()
}

/// Cumulative BLEU: geometric mean of clipped precisions as an nth root of
/// their product, times the brevity penalty.
pub fn bleu<T: Clone + PartialEq>(cand: &[T], reference: &[T], n: usize, smoothing: Option<f64>) -> f64 {
    if cand.len() < n {
        return 0.0;
    }
    let mut product = 1.0f64;
    for k in 1..=n {
        let cg = grams(cand, k);
        let rg = grams(reference, k);
        let mut seen: Vec<Vec<T>> = Vec::new();
        let mut clipped = 0usize;
        for g in &cg {
            if seen.iter().any(|s| s == g) {
                continue;
            }
            seen.push(g.clone());
            clipped += occurrences(&cg, g).min(occurrences(&rg, g));
        }
        let num = if clipped == 0 {
            match smoothing {
                Some(eps) => eps,
                None => return 0.0,
            }
        } else {
            clipped as f64
        };
        product *= num / cg.len() as f64;
    }
    let (c, r) = (cand.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    100.0 * bp * product.powf(1.0 / n as f64)
}

fn is_subsequence<T: PartialEq>(needle: &[T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == x))
}

/// LCS length by trying every subsequence of `a`. Exponential; keep inputs short.
pub fn lcs_brute<T: Clone + PartialEq>(a: &[T], b: &[T]) -> usize {
    assert!(a.len() <= 16);
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let ones = mask.count_ones() as usize;
        if ones <= best {
            continue;
        }
        let sub: Vec<T> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i].clone()).collect();
        if is_subsequence(&sub, b) {
            best = ones;
        }
    }
    best
}

/// LCS length by the textbook full-table recurrence.
pub fn lcs_table<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

pub fn rouge_l(lcs: usize, cand_len: usize, ref_len: usize, beta: f64) -> f64 {
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand_len as f64;
    let r = lcs as f64 / ref_len as f64;
    100.0 * (1.0 + beta * beta) * p * r / (r + beta * beta * p)
}

/// Chunk count of an alignment given as `map[i] = Some(j)`: a new chunk
/// starts at every matched candidate position that does not directly extend
/// the previous matched pair in both sequences.
fn chunks_of(map: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for (i, m) in map.iter().enumerate() {
        if let Some(j) = *m {
            match prev {
                Some((pi, pj)) if pi + 1 == i && pj + 1 == j => {}
                _ => chunks += 1,
            }
            prev = Some((i, j));
        }
    }
    chunks
}

/// Enumerates every one-to-one exact alignment, keeping those of maximum
/// size, and returns (matches, fewest chunks among them).
pub fn best_alignment<T: PartialEq>(cand: &[T], reference: &[T]) -> (usize, usize) {
    fn go<T: PartialEq>(
        i: usize,
        cand: &[T],
        reference: &[T],
        used: &mut Vec<bool>,
        map: &mut Vec<Option<usize>>,
        best: &mut (usize, usize),
    ) {
        if i == cand.len() {
            let m = map.iter().filter(|x| x.is_some()).count();
            let c = chunks_of(map);
            if m > best.0 || (m == best.0 && c < best.1) {
                *best = (m, c);
            }
            return;
        }
        for j in 0..reference.len() {
            if !used[j] && cand[i] == reference[j] {
                used[j] = true;
                map[i] = Some(j);
                go(i + 1, cand, reference, used, map, best);
                map[i] = None;
                used[j] = false;
            }
        }
        go(i + 1, cand, reference, used, map, best);
    }
    let mut best = (0, usize::MAX);
    go(0, cand, reference, &mut vec![false; reference.len()], &mut vec![None; cand.len()], &mut best);
    if best.0 == 0 {
        best.1 = 0;
    }
    best
}

pub fn meteor(cand_len: usize, ref_len: usize, matches: usize, chunks: usize, alpha: f64, beta: f64, gamma: f64) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let p = m / cand_len as f64;
    let r = m / ref_len as f64;
    let fmean = p * r / (alpha * p + (1.0 - alpha) * r);
    let frag = if matches == 1 { 0.0 } else { (chunks as f64 - 1.0) / (m - 1.0) };
    100.0 * fmean * (1.0 - gamma * frag.powf(beta))
}

/// Distinct-n by sorting and deduplicating every n-gram of every sequence.
pub fn distinct<T: Clone + Ord>(seqs: &[Vec<T>], n: usize) -> Option<f64> {
    let mut all: Vec<Vec<T>> = seqs.iter().flat_map(|s| grams(s, n)).collect();
    let total = all.len();
    if total == 0 {
        return None;
    }
    all.sort();
    all.dedup();
    Some(all.len() as f64 / total as f64)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Entropy in bits, as -sum p ln p / ln 2.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total as f64;
            h -= p * p.ln();
        }
    }
    h / std::f64::consts::LN_2
}

/// Fleiss' kappa from the per-case category count table.
pub fn fleiss(table: &[Vec<usize>]) -> f64 {
    let cases = table.len() as f64;
    let raters: usize = table[0].iter().sum();
    let n = raters as f64;
    let k = table[0].len();
    let mut p_bar = 0.0;
    for row in table {
        let agree: f64 = row.iter().map(|&c| (c * c) as f64).sum::<f64>() - n;
        p_bar += agree / (n * (n - 1.0));
    }
    p_bar /= cases;
    let mut p_e = 0.0;
    for j in 0..k {
        let pj = table.iter().map(|r| r[j] as f64).sum::<f64>() / (cases * n);
        p_e += pj * pj;
    }
    (p_bar - p_e) / (1.0 - p_e)
}

/// Mean, population standard deviation via E[x^2] - E[x]^2, and the median
/// from a sorted copy.
pub fn summary(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sq = values.iter().map(|v| v * v).sum::<f64>() / n;
    let sd = (sq - mean * mean).max(0.0).sqrt();
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = s.len() / 2;
    let median = if s.len() % 2 == 1 { s[mid] } else { (s[mid - 1] + s[mid]) / 2.0 };
    (mean, sd, median)
}

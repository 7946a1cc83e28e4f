//! Brute-force reference implementations, written without reusing library
//! internals.

use std::collections::BTreeMap;

/// Lowercased alphanumeric runs.
pub fn words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn grams(tokens: &[String], n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(tokens[i..i + n].join("\u{1}"));
        i += 1;
    }
    out
}

fn occurrences(list: &[String], g: &str) -> usize {
    list.iter().filter(|x| x.as_str() == g).count()
}

/// Corpus BLEU-4: clipped counts, add-one for n >= 2, closest-reference
/// brevity penalty (shorter on ties).
pub fn bleu(pairs: &[(String, Vec<String>)]) -> f64 {
    let mut m = [0f64; 4];
    let mut t = [0f64; 4];
    let mut c = 0usize;
    let mut r = 0usize;
    for (pred, refs) in pairs {
        let p = words(pred);
        let rs: Vec<Vec<String>> = refs.iter().map(|x| words(x)).collect();
        c += p.len();
        let mut best: Option<usize> = None;
        for x in &rs {
            let better = match best {
                None => true,
                Some(b) => {
                    let (db, dx) = ((b as i64 - p.len() as i64).abs(), (x.len() as i64 - p.len() as i64).abs());
                    dx < db || (dx == db && x.len() < b)
                }
            };
            if better {
                best = Some(x.len());
            }
        }
        r += best.unwrap_or(0);
        for n in 1..=4 {
            let pg = grams(&p, n);
            let mut distinct = pg.clone();
            distinct.sort();
            distinct.dedup();
            for g in &distinct {
                let max_ref = rs.iter().map(|x| occurrences(&grams(x, n), g)).max().unwrap_or(0);
                m[n - 1] += occurrences(&pg, g).min(max_ref) as f64;
            }
            t[n - 1] += pg.len() as f64;
        }
    }
    if c == 0 || m[0] == 0.0 {
        return 0.0;
    }
    let mut log_sum = (m[0] / t[0]).ln();
    for n in 1..4 {
        log_sum += ((m[n] + 1.0) / (t[n] + 1.0)).ln();
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * (log_sum / 4.0).exp()
}

pub fn f1(pred: &str, gold: &str) -> f64 {
    let norm = |s: &str| -> Vec<String> {
        let kept: String = s.to_lowercase().chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
        kept.split_whitespace().filter(|w| !["a", "an", "the"].contains(w)).map(String::from).collect()
    };
    let p = norm(pred);
    let mut g = norm(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let glen = g.len() as f64;
    let mut common = 0.0;
    for w in &p {
        if let Some(i) = g.iter().position(|x| x == w) {
            g.remove(i);
            common += 1.0;
        }
    }
    if common == 0.0 {
        return 0.0;
    }
    let precision = common / p.len() as f64;
    let recall = common / glen;
    2.0 * precision * recall / (precision + recall)
}

/// A passage as seen by the retrieval oracle.
#[derive(Debug, Clone)]
pub struct OraclePassage {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
}

/// Exhaustive BM25 (k1 = 1.2, b = 0.75) over all passages. Distinct query
/// terms are summed in ascending order. Returns positive scores, best first,
/// ties to the smaller (doc_id, passage index).
pub fn bm25_rank(passages: &[OraclePassage], query: &str) -> Vec<(String, usize, f64)> {
    let toks: Vec<Vec<String>> = passages.iter().map(|p| words(&p.text)).collect();
    let n = passages.len() as f64;
    let total: usize = toks.iter().map(Vec::len).sum();
    let avg = total as f64 / passages.len() as f64;
    let mut terms = words(query);
    terms.sort();
    terms.dedup();
    let mut out = Vec::new();
    for (i, p) in passages.iter().enumerate() {
        let mut score = 0.0;
        for term in &terms {
            let tf = toks[i].iter().filter(|t| *t == term).count();
            if tf == 0 {
                continue;
            }
            let df = toks.iter().filter(|ts| ts.contains(term)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let tf = tf as f64;
            let norm = 1.0 - 0.75 + 0.75 * toks[i].len() as f64 / avg;
            score += idf * tf * (1.2 + 1.0) / (tf + 1.2 * norm);
        }
        if score > 0.0 {
            out.push((p.doc_id.clone(), p.index, score));
        }
    }
    out.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then_with(|| (&a.0, a.1).cmp(&(&b.0, b.1))));
    out
}

fn host(url: &str) -> Option<String> {
    let rest = url.split_once("://")?.1;
    let h = rest.split(['/', '?', '#']).next()?;
    (!h.is_empty()).then(|| h.to_lowercase())
}

pub fn blocked(url: &str, suffixes: &[&str]) -> bool {
    match host(url) {
        None => true,
        Some(h) => suffixes.iter().any(|s| h == *s || h.ends_with(&format!(".{s}"))),
    }
}

/// Document ranking: each document scores its best passage; blocked
/// documents are removed before truncating to `k`.
pub fn search_rank(
    passages: &[OraclePassage],
    urls: &BTreeMap<String, String>,
    suffixes: &[&str],
    query: &str,
    k: usize,
) -> Vec<String> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for (doc, _, s) in bm25_rank(passages, query) {
        let e = best.entry(doc).or_insert(s);
        if s > *e {
            *e = s;
        }
    }
    let mut docs: Vec<(String, f64)> = best.into_iter().collect();
    docs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    docs.into_iter().filter(|(d, _)| !blocked(&urls[d], suffixes)).take(k).map(|(d, _)| urls[&d].clone()).collect()
}

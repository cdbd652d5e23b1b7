//! Independent reference implementations and helpers shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use apidigest::summarize::{ExtractiveSummary, SentencePool};

/// Renumbers labels by order of first appearance; -1 stays -1.
pub fn canonical(labels: &[i64]) -> Vec<i64> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                return -1;
            }
            let next = map.len() as i64;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Quadratic DBSCAN: core points are those with at least `min_pts` points
/// (self included) within `eps`; cores within `eps` of each other share a
/// cluster; a border point joins the adjacent cluster whose lowest core
/// index is smallest; everything else is noise.
pub fn dbscan_oracle(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i64> {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let adjacent: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| dist(&points[i], &points[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = (0..n).map(|i| adjacent[i].iter().filter(|&&a| a).count() >= min_pts).collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && adjacent[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // Union by minimum index: each root is its component's lowest core index.
    let mut labels = vec![-1i64; n];
    for i in 0..n {
        if core[i] {
            labels[i] = find(&mut parent, i) as i64;
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && adjacent[i][j])
                .map(|j| find(&mut parent, j) as i64)
                .min()
                .unwrap_or(-1);
        }
    }
    labels
}

/// c-TF-IDF straight from the formula, one (topic, term) cell at a time.
/// Returns weights of every term kept after document-frequency pruning.
pub fn ctfidf_oracle(docs: &[Vec<String>], labels: &[i64]) -> BTreeMap<(i64, String), f64> {
    let classes: BTreeSet<i64> = labels.iter().copied().filter(|&l| l >= 0).collect();
    let live: Vec<usize> = (0..docs.len()).filter(|&i| labels[i] >= 0).collect();
    let total: usize = live.iter().map(|&i| docs[i].len()).sum();
    let a = total as f64 / classes.len() as f64;
    let terms: BTreeSet<&String> = live.iter().flat_map(|&i| docs[i].iter()).collect();

    let mut out = BTreeMap::new();
    for term in terms {
        let df = live.iter().filter(|&&i| docs[i].contains(term)).count();
        if df < 2 {
            continue;
        }
        let count_in = |c: i64| -> usize {
            live.iter()
                .filter(|&&i| labels[i] == c)
                .map(|&i| docs[i].iter().filter(|t| *t == term).count())
                .sum()
        };
        let f: usize = classes.iter().map(|&c| count_in(c)).sum();
        for &c in &classes {
            let tf = count_in(c);
            if tf > 0 {
                out.insert((c, term.clone()), tf as f64 * (1.0 + a / f as f64).ln());
            }
        }
    }
    out
}

/// Checks that `summary` is an order-preserving, duplicate-free
/// subsequence of the pool with at most `m` sentences.
pub fn check_summary(pool: &SentencePool, summary: &ExtractiveSummary, m: usize) -> Result<(), String> {
    if summary.sentences.len() > m {
        return Err(format!("{} sentences for target {m}", summary.sentences.len()));
    }
    if summary.sentences.len() != summary.indices.len() {
        return Err("indices and sentences differ in length".into());
    }
    if summary.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("indices not increasing: {:?}", summary.indices));
    }
    for (&i, s) in summary.indices.iter().zip(&summary.sentences) {
        if pool.sentences.get(i) != Some(s) {
            return Err(format!("sentence {s:?} is not pool sentence {i}"));
        }
    }
    let unique: BTreeSet<&String> = summary.sentences.iter().collect();
    if unique.len() != summary.sentences.len() {
        return Err("duplicate sentence in summary".into());
    }
    let distinct_in_pool: BTreeSet<&String> = pool.sentences.iter().collect();
    if summary.sentences.len() < m.min(distinct_in_pool.len()) {
        return Err(format!(
            "only {} sentences though {} were available",
            summary.sentences.len(),
            m.min(distinct_in_pool.len())
        ));
    }
    Ok(())
}

/// Fraction of items whose cluster's majority class matches their own.
/// Noise items count as misses.
pub fn purity(predicted: &[i64], truth: &[usize]) -> f64 {
    let mut table: BTreeMap<i64, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= 0 {
            *table.entry(p).or_default().entry(t).or_default() += 1;
        }
    }
    let hits: usize = table.values().map(|row| row.values().copied().max().unwrap_or(0)).sum();
    hits as f64 / predicted.len() as f64
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

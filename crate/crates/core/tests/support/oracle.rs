//! Straight-line reimplementation of the metric definitions, used only to
//! check the library. Works on plain index arrays, never on library types.

#![allow(dead_code)]

/// Per-user Fragmentation straight from the definition.
///
/// `parents[i]` is the parent of tweet `i`, `authors[i]` and `labels[i]`
/// (0..4) its author and label. Returns `(author, score)` for each distinct
/// author in ascending order; `None` when the score is undefined.
pub fn fragmentation(
    parents: &[Option<usize>],
    authors: &[usize],
    labels: &[usize],
    exclude_l1: bool,
) -> Vec<(usize, Option<f64>)> {
    let mut users: Vec<usize> = authors.to_vec();
    users.sort_unstable();
    users.dedup();

    let mut exposure = vec![[0.0f64; 4]; users.len()];
    let col = |a: usize| users.iter().position(|&u| u == a).unwrap();
    for child in 0..parents.len() {
        let Some(parent) = parents[child] else { continue };
        if authors[child] == authors[parent] {
            continue;
        }
        exposure[col(authors[child])][labels[parent]] += 1.0;
        exposure[col(authors[parent])][labels[child]] += 1.0;
    }
    if exclude_l1 {
        for v in &mut exposure {
            v[0] = 0.0;
        }
    }
    let norm = |v: &[f64; 4]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let active: Vec<usize> = (0..users.len()).filter(|&u| norm(&exposure[u]) > 0.0).collect();

    users
        .iter()
        .enumerate()
        .map(|(u, &author)| {
            if active.len() < 2 || !active.contains(&u) {
                return (author, None);
            }
            let mut total = 0.0;
            for &v in active.iter().filter(|&&v| v != u) {
                let dot: f64 = (0..4).map(|k| exposure[u][k] * exposure[v][k]).sum();
                total += dot / (norm(&exposure[u]) * norm(&exposure[v]));
            }
            (author, Some(1.0 - total / (active.len() - 1) as f64))
        })
        .collect()
}

/// Raw KL and max-normalised Representation for each conversation of a topic.
pub fn representation(conversations: &[Vec<usize>], exclude_l1: bool) -> Vec<Option<(f64, f64)>> {
    let keep = |l: usize| !(exclude_l1 && l == 0);
    let mut pool = [0.0f64; 4];
    for conv in conversations {
        for &l in conv.iter().filter(|&&l| keep(l)) {
            pool[l] += 1.0;
        }
    }
    let pool_total: f64 = pool.iter().sum();

    let raw: Vec<Option<f64>> = conversations
        .iter()
        .map(|conv| {
            let mut counts = [0.0f64; 4];
            for &l in conv.iter().filter(|&&l| keep(l)) {
                counts[l] += 1.0;
            }
            let total: f64 = counts.iter().sum();
            if total == 0.0 {
                return None;
            }
            let mut kl = 0.0;
            for l in 0..4 {
                if counts[l] > 0.0 {
                    let p = counts[l] / total;
                    let q = pool[l] / pool_total;
                    kl += p * (p / q).ln();
                }
            }
            Some(kl)
        })
        .collect();
    let max = raw.iter().flatten().cloned().fold(0.0, f64::max);
    raw.into_iter()
        .map(|r| r.map(|kl| (kl, if max > 0.0 { kl / max } else { 0.0 })))
        .collect()
}

/// Every rooted tree shape on `n` nodes up to isomorphism, as parent arrays
/// with `parents[i] < i` for `i > 0`.
pub fn tree_shapes(n: usize) -> Vec<Vec<Option<usize>>> {
    fn canon(children: &[Vec<usize>], node: usize) -> String {
        let mut parts: Vec<String> = children[node].iter().map(|&c| canon(children, c)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    let mut parents = vec![None; n];
    fn rec(
        i: usize,
        n: usize,
        parents: &mut Vec<Option<usize>>,
        seen: &mut std::collections::BTreeSet<String>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if i == n {
            let mut children = vec![Vec::new(); n];
            for (c, p) in parents.iter().enumerate() {
                if let Some(p) = p {
                    children[*p].push(c);
                }
            }
            if seen.insert(canon(&children, 0)) {
                out.push(parents.clone());
            }
            return;
        }
        for p in 0..i {
            parents[i] = Some(p);
            rec(i + 1, n, parents, seen, out);
        }
    }
    if n == 0 {
        return out;
    }
    rec(1, n, &mut parents, &mut seen, &mut out);
    out
}

/// Author assignments of `n` tweets using at most `max_authors` authors,
/// one per partition (restricted growth strings).
pub fn author_assignments(n: usize, max_authors: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let next = cur.iter().max().map_or(0, |m| m + 1);
        for a in 0..=next.min(max - 1) {
            cur.push(a);
            rec(cur, n, max, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, max_authors, &mut out);
    out
}

/// All label vectors of length `n` over `alphabet`.
pub fn label_assignments(n: usize, alphabet: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                alphabet.iter().map(move |&l| {
                    let mut w = v.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
#[allow(unused_imports)]
mod self_check {
    use super::*;

    #[test]
    fn enumeration_sizes() {
        let shapes: Vec<usize> = (1..=6).map(|n| tree_shapes(n).len()).collect();
        assert_eq!(shapes, [1, 1, 2, 4, 9, 20]);
        assert_eq!(author_assignments(6, 3).len(), 1 + 31 + 90);
        assert_eq!(label_assignments(3, &[1, 2, 3]).len(), 27);
    }

    #[test]
    fn all_same_label_star_scores_zero() {
        // u0 sees L3 twice, u1 and u2 see L3 once: parallel columns.
        let parents = [None, Some(0), Some(0)];
        let authors = [0, 1, 2];
        let labels = [2, 2, 2];
        let s = fragmentation(&parents, &authors, &labels, false);
        assert!(s.iter().all(|(_, x)| *x == Some(0.0)));
    }
}

//! Enumeration of small posets and presheaves up to isomorphism.
//!
//! Canonical forms are minimal codes over all relabelings: for posets the
//! `<=` matrix under permutations of the elements, for presheaves the
//! restriction tables under independent permutations of every fiber.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::poset::FinPoset;
use crate::presheaf::Presheaf;

use super::VerifyError;

/// Largest poset size accepted by the enumerator.
pub const MAX_ENUM_POSET: usize = 6;
/// Largest fiber size accepted by the enumerator.
pub const MAX_ENUM_FIBER: usize = 3;
/// Raw table assignments tried per poset before giving up.
pub const MAX_ENUM_TABLES: u64 = 2_000_000;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Canonical code of a poset: the lexicographically least `<=` matrix
/// (off-diagonal, row-major) over all relabelings.
pub fn poset_code(p: &FinPoset) -> Vec<bool> {
    let n = p.len();
    permutations(n)
        .into_iter()
        .map(|perm| {
            let mut code = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        code.push(p.leq(perm[i], perm[j]));
                    }
                }
            }
            code
        })
        .min()
        .unwrap_or_default()
}

fn stage_name(i: usize) -> String {
    ((b'a' + i as u8) as char).to_string()
}

/// All posets with exactly `n` elements, one per isomorphism class, in
/// canonical-code order. Elements are named `a, b, c, ...`.
pub fn posets_up_to_iso(n: usize) -> Result<Vec<FinPoset>, VerifyError> {
    if n == 0 || n > MAX_ENUM_POSET {
        return Err(VerifyError::Cap {
            what: "poset size",
            size: n,
            cap: MAX_ENUM_POSET,
        });
    }
    // Every poset has a linear extension, so relations `i < j` suffice.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let rel = |i: usize, j: usize| {
            i == j || (i < j && mask & (1 << pairs.iter().position(|&e| e == (i, j)).unwrap()) != 0)
        };
        let transitive = (0..n).all(|i| {
            (i + 1..n).all(|j| (j + 1..n).all(|k| !(rel(i, j) && rel(j, k)) || rel(i, k)))
        });
        if !transitive {
            continue;
        }
        let chosen: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &e)| e)
            .collect();
        let p = FinPoset::from_indices((0..n).map(stage_name).collect(), &chosen)?;
        let code = poset_code(&p);
        if seen.insert(code.clone()) {
            out.push((code, p));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out.into_iter().map(|(_, p)| p).collect())
}

/// Canonical code of a presheaf under relabeling of each fiber: sizes, then
/// the least concatenation of all restriction tables.
pub fn presheaf_code(f: &Presheaf) -> (Vec<u32>, Vec<u32>) {
    let poset = f.poset();
    let n = poset.len();
    let pairs = poset.leq_pairs();
    let perms: Vec<Vec<Vec<usize>>> = (0..n).map(|p| permutations(f.size(p) as usize)).collect();
    let mut choice = vec![0usize; n];
    let mut best: Option<Vec<u32>> = None;
    loop {
        // σ_p sends old index x to perms[p][choice[p]][x].
        let mut code = Vec::new();
        for &(q, p) in &pairs {
            if p == q {
                continue;
            }
            let sp = &perms[p][choice[p]];
            let sq = &perms[q][choice[q]];
            let mut table = vec![0u32; f.size(p) as usize];
            for x in 0..f.size(p) {
                table[sp[x as usize]] = sq[f.restrict(p, q, x) as usize] as u32;
            }
            code.extend(table);
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
        let mut k = 0;
        loop {
            if k == n {
                return (f.sizes().to_vec(), best.unwrap_or_default());
            }
            choice[k] += 1;
            if choice[k] < perms[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// All presheaves on `poset` with every fiber of size at most `max_fiber`
/// (empty fibers included), one per isomorphism class, ordered by
/// canonical code. Fiber elements are labelled `0, 1, ...`.
pub fn presheaves_up_to_iso(
    poset: &Arc<FinPoset>,
    max_fiber: usize,
) -> Result<Vec<Arc<Presheaf>>, VerifyError> {
    if max_fiber > MAX_ENUM_FIBER {
        return Err(VerifyError::Cap {
            what: "fiber size",
            size: max_fiber,
            cap: MAX_ENUM_FIBER,
        });
    }
    let n = poset.len();
    let covers = poset.cover_pairs();
    let mut tried = 0u64;
    let mut found = std::collections::BTreeMap::new();
    let mut sizes = vec![0usize; n];
    loop {
        let radices: Vec<usize> = covers
            .iter()
            .map(|&(q, p)| sizes[q].pow(sizes[p] as u32))
            .collect();
        if radices.iter().all(|&r| r > 0) {
            let total: u64 = radices.iter().map(|&r| r as u64).product();
            tried += total;
            if tried > MAX_ENUM_TABLES {
                return Err(VerifyError::Cap {
                    what: "presheaf enumeration",
                    size: tried as usize,
                    cap: MAX_ENUM_TABLES as usize,
                });
            }
            let labels: Vec<Vec<String>> = sizes
                .iter()
                .map(|&k| (0..k).map(|i| i.to_string()).collect())
                .collect();
            for mut index in 0..total {
                let tables: Vec<((usize, usize), Vec<u32>)> = covers
                    .iter()
                    .zip(&radices)
                    .map(|(&(q, p), &r)| {
                        let mut code = (index % r as u64) as usize;
                        index /= r as u64;
                        let table = (0..sizes[p])
                            .map(|_| {
                                let v = code % sizes[q];
                                code /= sizes[q];
                                v as u32
                            })
                            .collect();
                        ((p, q), table)
                    })
                    .collect();
                let Ok(f) =
                    Presheaf::from_covers(poset.clone(), labels.clone(), tables, max_fiber.max(1))
                else {
                    continue;
                };
                found.entry(presheaf_code(&f)).or_insert_with(|| Arc::new(f));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(found.into_values().collect());
            }
            sizes[k] += 1;
            if sizes[k] <= max_fiber {
                break;
            }
            sizes[k] = 0;
            k += 1;
        }
    }
}

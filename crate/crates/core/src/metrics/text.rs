//! String similarity primitives over `char`s.

use std::collections::BTreeSet;

/// Levenshtein edit distance (unit cost insert / delete / substitute).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

/// `1 - dist / max(len)`; two empty strings are identical.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for ca in a {
        let mut diag = 0;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

/// Indel-normalized similarity ratio in `[0, 100]`:
/// `100 * (1 - indel / (|a| + |b|))`, i.e. the classic "Levenshtein ratio"
/// where a substitution costs two edits.
pub fn ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 100.0;
    }
    100.0 * (2 * lcs_len(&a, &b)) as f64 / total as f64
}

/// Token-set ratio in `[0, 100]`.
///
/// Tokens of each side are deduplicated and sorted; the shared tokens form the
/// intersection string and each side's remainder is appended to it. The result
/// is the best [`ratio`] among (intersection, a'), (intersection, b') and
/// (a', b').
pub fn token_set_ratio<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    let ta: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let tb: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let sect = join(ta.intersection(&tb));
    let combined_ab = extend(&sect, ta.difference(&tb));
    let combined_ba = extend(&sect, tb.difference(&ta));
    ratio(&sect, &combined_ab)
        .max(ratio(&sect, &combined_ba))
        .max(ratio(&combined_ab, &combined_ba))
}

fn join<'a>(tokens: impl Iterator<Item = &'a &'a str>) -> String {
    tokens.copied().collect::<Vec<_>>().join(" ")
}

fn extend<'a>(sect: &str, rest: impl Iterator<Item = &'a &'a str>) -> String {
    let rest = join(rest);
    format!("{sect} {rest}").trim().to_string()
}

/// `|A ∩ B| / |A ∪ B|` over token sets; both empty gives 1.
pub fn jaccard<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    let ta: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let tb: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

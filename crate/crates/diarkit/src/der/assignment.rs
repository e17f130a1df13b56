//! Exact maximum-weight assignment for speaker mapping.
//!
//! The optimal ref↔hyp speaker correspondence is a maximum-weight one-to-one
//! matching on the overlap matrix. The solver is the O(n²m) shortest
//! augmenting path formulation of the Hungarian method with row/column
//! potentials, run on negated weights; for rectangular inputs the smaller
//! side is always completely matched, which with non-negative weights is
//! also a global maximum over partial matchings.
//!
//! Additions and subtractions are the only arithmetic, so integer-valued
//! matrices are solved in exact arithmetic.

/// Maximum total weight of a one-to-one matching that uses every row (or
/// every column, whichever side is smaller).
pub(crate) fn max_assignment_value(weights: &[Vec<f64>]) -> f64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let pairs = if rows <= cols {
        solve_min_rows(&negate(weights))
    } else {
        transpose_pairs(solve_min_rows(&negate(&transpose(weights))))
    };
    // Summing matrix entries directly (in row order) keeps the value exact
    // instead of reconstructing it from the potentials.
    let mut sorted = pairs;
    sorted.sort_unstable();
    sorted.iter().map(|&(r, c)| weights[r][c]).sum()
}

/// Maximum-overlap one-to-one (ref, hyp) pairs, with zero-weight pairs
/// removed. Among equal-value optima, returns the lexicographically
/// smallest pair list.
///
/// `tolerance` is the slack used when testing whether a candidate pair still
/// permits an optimal completion; `0.0` demands exact equality (appropriate
/// for integer-valued matrices).
pub(crate) fn optimal_pairs_with_tolerance(
    weights: &[Vec<f64>],
    tolerance: f64,
) -> Vec<(usize, usize)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let target = max_assignment_value(weights);

    // Greedily fix pairs in lexicographic order. A pair is fixed when some
    // optimal assignment contains all fixed pairs plus it; because the fixed
    // set only grows, a pair found unusable now can never become usable, so
    // one forward scan yields the lexicographically smallest optimal list.
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    let mut fixed_value = 0.0;
    let mut used_cols = vec![false; cols];
    for r in 0..rows {
        if fixed.len() == rows.min(cols) {
            break;
        }
        for c in 0..cols {
            if used_cols[c] || weights[r][c] <= 0.0 {
                continue;
            }
            let remainder = submatrix_value(weights, &fixed, (r, c));
            let candidate = fixed_value + weights[r][c] + remainder;
            if (candidate - target).abs() <= tolerance {
                fixed.push((r, c));
                fixed_value += weights[r][c];
                used_cols[c] = true;
                break;
            }
        }
    }
    fixed
}

/// `optimal_pairs_with_tolerance` with a relative slack suited to matrices
/// of (inexact) float seconds.
pub(crate) fn optimal_pairs(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let scale = weights
        .iter()
        .flatten()
        .fold(1.0f64, |acc, &w| acc.max(w.abs()));
    optimal_pairs_with_tolerance(weights, 1e-9 * scale)
}

/// Best value over the rows/columns not yet consumed by `fixed ∪ {extra}`.
fn submatrix_value(weights: &[Vec<f64>], fixed: &[(usize, usize)], extra: (usize, usize)) -> f64 {
    let rows = weights.len();
    let cols = weights[0].len();
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    for &(r, c) in fixed.iter().chain(std::iter::once(&extra)) {
        row_used[r] = true;
        col_used[c] = true;
    }
    let free_rows: Vec<usize> = (0..rows).filter(|&r| !row_used[r]).collect();
    let free_cols: Vec<usize> = (0..cols).filter(|&c| !col_used[c]).collect();
    if free_rows.is_empty() || free_cols.is_empty() {
        return 0.0;
    }
    let sub: Vec<Vec<f64>> = free_rows
        .iter()
        .map(|&r| free_cols.iter().map(|&c| weights[r][c]).collect())
        .collect();
    max_assignment_value(&sub)
}

fn negate(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    weights.iter().map(|row| row.iter().map(|&w| -w).collect()).collect()
}

fn transpose(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = weights.len();
    let cols = weights[0].len();
    (0..cols).map(|c| (0..rows).map(|r| weights[r][c]).collect()).collect()
}

fn transpose_pairs(pairs: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    pairs.into_iter().map(|(r, c)| (c, r)).collect()
}

/// Minimum-cost complete matching of all rows for `rows ≤ cols`, as
/// (row, col) pairs. Shortest-augmenting-path Hungarian with potentials,
/// 1-indexed internally with column 0 as the virtual unmatched source.
fn solve_min_rows(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);

    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched_row = vec![0usize; m + 1]; // row matched to each column
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    (1..=m)
        .filter(|&j| matched_row[j] != 0)
        .map(|j| (matched_row[j] - 1, j - 1))
        .collect()
}

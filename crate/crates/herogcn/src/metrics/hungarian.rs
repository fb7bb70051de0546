//! Minimum-cost assignment on a square matrix (Kuhn-Munkres with
//! potentials, O(n^3)). Clustering accuracy maximizes agreement, so callers
//! negate their contingency counts.

/// Returns `assign[row] = col` minimizing the total cost.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    // Potentials and matching are 1-indexed with a dummy column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[col] = row

    for row in 1..=n {
        let mut col0 = 0usize;
        matched_row[0] = row;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prev_col = vec![0usize; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut next_col = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[r - 1][col - 1] - u[r] - v[col];
                if reduced < min_to[col] {
                    min_to[col] = reduced;
                    prev_col[col] = col0;
                }
                if min_to[col] < delta {
                    delta = min_to[col];
                    next_col = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[matched_row[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_to[col] -= delta;
                }
            }
            col0 = next_col;
            if matched_row[col0] == 0 {
                break;
            }
        }
        // Augment along the found path.
        loop {
            let prev = prev_col[col0];
            matched_row[col0] = matched_row[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for col in 1..=n {
        if matched_row[col] > 0 {
            assign[matched_row[col] - 1] = col - 1;
        }
    }
    assign
}

//! Rectangular linear assignment (Hungarian method, shortest augmenting paths
//! with potentials). O(rows² · cols).

/// Minimum-cost assignment of every row of `cost` to a distinct column.
/// Requires `rows <= cols`; returns the column chosen for each row.
fn solve_min(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let rows = cost.len();
    debug_assert!(rows <= cols);
    // 1-based internally; column 0 is a virtual start
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for row in 1..=rows {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut next = 0;
            for c in 1..=cols {
                if used[c] {
                    continue;
                }
                let reduced = cost[r - 1][c - 1] - u[r] - v[c];
                if reduced < minv[c] {
                    minv[c] = reduced;
                    way[c] = col0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    next = c;
                }
            }
            for c in 0..=cols {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = next;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assigned = vec![0; rows];
    for c in 1..=cols {
        if owner[c] != 0 {
            assigned[owner[c] - 1] = c - 1;
        }
    }
    assigned
}

/// Assignment maximizing total `weight` over a `rows × cols` matrix of any
/// shape. Every row (or every column, whichever is fewer) is paired; callers
/// drop pairs they consider invalid.
pub fn maximize(weight: &[Vec<f64>], cols: usize) -> Vec<(usize, usize)> {
    let rows = weight.len();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        let cost: Vec<Vec<f64>> = weight
            .iter()
            .map(|r| r.iter().map(|w| -w).collect())
            .collect();
        solve_min(&cost, cols).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| -weight[r][c]).collect())
            .collect();
        let mut pairs: Vec<_> = solve_min(&cost, rows)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

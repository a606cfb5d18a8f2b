//! Rectangular linear assignment via shortest augmenting paths.
//!
//! This is the Jonker-Volgenant style solver: rows are inserted one at a
//! time and each insertion runs a Dijkstra-like search over reduced costs
//! (kept non-negative by dual potentials) to find the cheapest augmenting
//! path. Complexity is O(n^2 m) for an `n x m` cost matrix with `n <= m`.

/// Solves min-cost assignment of every row to a distinct column.
///
/// `costs` is row-major with `rows <= cols`; returns `assign[row] = col`.
/// Costs must be finite.
pub fn solve_rect(costs: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols, "solve_rect needs rows <= cols");
    assert_eq!(costs.len(), rows * cols);
    if rows == 0 {
        return Vec::new();
    }

    // Index 0 is a virtual column / row used as the search root.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut parent = vec![0usize; cols + 1];
    let mut min_slack = vec![f64::INFINITY; cols + 1];
    let mut visited = vec![false; cols + 1];

    for row in 1..=rows {
        owner[0] = row;
        let mut col0 = 0usize;
        min_slack.fill(f64::INFINITY);
        visited.fill(false);

        loop {
            visited[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut next = 0usize;
            let row_costs = &costs[(r - 1) * cols..r * cols];
            for col in 1..=cols {
                if visited[col] {
                    continue;
                }
                let reduced = row_costs[col - 1] - u[r] - v[col];
                if reduced < min_slack[col] {
                    min_slack[col] = reduced;
                    parent[col] = col0;
                }
                if min_slack[col] < delta {
                    delta = min_slack[col];
                    next = col;
                }
            }
            debug_assert!(next != 0, "no augmenting column found");
            for col in 0..=cols {
                if visited[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            col0 = next;
            if owner[col0] == 0 {
                break;
            }
        }

        // Flip the augmenting path back to the root.
        loop {
            let prev = parent[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![usize::MAX; rows];
    for col in 1..=cols {
        if owner[col] != 0 {
            assign[owner[col] - 1] = col - 1;
        }
    }
    assign
}

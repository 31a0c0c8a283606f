//! Minimum-cost assignment on a square cost matrix (Hungarian method,
//! shortest-augmenting-path form, O(n^3)).

/// Solve the square assignment problem. Returns `(col_of_row, total)`
/// where `col_of_row[i]` is the column assigned to row `i`.
///
/// Costs must be finite. Exact for floating-point costs: the algorithm
/// only adds and compares potentials, never divides.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));
    debug_assert!(cost.iter().flatten().all(|c| c.is_finite()));

    // 1-indexed potentials and matching; p[j] = row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        if p[j] != 0 {
            col_of_row[p[j] - 1] = j - 1;
            total += cost[p[j] - 1][j - 1];
        }
    }
    (col_of_row, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Exhaustive minimum over all permutations; the oracle for small n.
    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for col in 0..cost.len() {
                if !used[col] {
                    used[col] = true;
                    best = best.min(cost[row][col] + rec(cost, row + 1, used));
                    used[col] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(min_cost_assignment(&[]).1, 0.0);
        let (a, t) = min_cost_assignment(&[vec![3.5]]);
        assert_eq!(a, vec![0]);
        assert_relative_eq!(t, 3.5);
    }

    #[test]
    fn known_matrix() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let (assign, total) = min_cost_assignment(&cost);
        assert_relative_eq!(total, 5.0);
        // Rows map to distinct columns.
        let mut seen = [false; 3];
        for &c in &assign {
            assert!(!seen[c]);
            seen[c] = true;
        }
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..300 {
            let n = rng.gen_range(1..=6);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect())
                .collect();
            let (_, total) = min_cost_assignment(&cost);
            assert_relative_eq!(total, brute_force(&cost), max_relative = 1e-12);
        }
    }

    #[test]
    fn assignment_cost_is_consistent() {
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let n = 8;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let (assign, total) = min_cost_assignment(&cost);
        let recomputed: f64 = assign.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_relative_eq!(total, recomputed, max_relative = 1e-12);
    }
}

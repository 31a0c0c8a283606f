//! OSPA miss distance between two finite point sets.
//!
//! For sets `Q` (size m) and `Y` (size n) with `m <= n` and cut-off `c`:
//!
//! ```text
//! ospa(Q, Y) = (1/n) (min over assignments sum d_c(q_i, y_pi(i)) + c (n - m))
//! ```
//!
//! with `d_c(q, y) = min(c, ||q - y||)`; swap the sets when `m > n`, and
//! the distance of two empty sets is zero. This is the order-1 form: the
//! localization term and the cardinality penalty `c` per unmatched point
//! average directly.

use crate::assignment::min_cost_assignment;

/// Euclidean distance saturated at the cut-off `c`.
pub fn cutoff_distance(q: &[f64], y: &[f64], c: f64) -> f64 {
    debug_assert!(c > 0.0);
    debug_assert_eq!(q.len(), y.len());
    let dist2: f64 = q.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    c.min(dist2.sqrt())
}

/// OSPA distance between point sets `q` and `y` with cut-off `c`.
///
/// Points must share one dimension. Empty-vs-empty is 0; empty-vs-n is
/// the full penalty `c`.
pub fn ospa(q: &[Vec<f64>], y: &[Vec<f64>], c: f64) -> f64 {
    assert!(c > 0.0, "cut-off must be positive");
    let (small, large) = if q.len() <= y.len() { (q, y) } else { (y, q) };
    let m = small.len();
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    if m == 0 {
        return c;
    }
    debug_assert!(small
        .iter()
        .chain(large.iter())
        .all(|p| p.len() == small[0].len()));
    // Pad the cost matrix to n x n with constant c so every unmatched
    // point of the larger set pays exactly the cut-off.
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < m {
                        cutoff_distance(&small[i], &large[j], c)
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    let (_, total) = min_cost_assignment(&cost);
    total / n as f64
}

/// OSPA over scalar points; the harness scores range and range-rate sets
/// separately.
pub fn ospa_scalar(q: &[f64], y: &[f64], c: f64) -> f64 {
    let qv: Vec<Vec<f64>> = q.iter().map(|&v| vec![v]).collect();
    let yv: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
    ospa(&qv, &yv, c)
}

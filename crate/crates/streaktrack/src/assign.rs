//! One-to-one matching primitives: an O(n³) Hungarian solver on float
//! costs and the greedy nearest-neighbor matcher used for endpoint pairing
//! and cross-frame association.

/// Minimum-cost complete assignment of rows to columns.
///
/// Every row of the smaller side is assigned. Returns `row -> Some(col)`
/// for assigned rows. Costs must be finite. Potentials-based shortest
/// augmenting path, O(n²·m).
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    if m == 0 {
        return vec![None; n];
    }
    if n > m {
        // Transpose so rows are the smaller side.
        let t: Vec<Vec<f64>> = (0..m)
            .map(|j| (0..n).map(|i| cost[i][j]).collect())
            .collect();
        let col_to_row = min_cost_assignment(&t);
        let mut out = vec![None; n];
        for (j, r) in col_to_row.iter().enumerate() {
            if let Some(i) = r {
                out[*i] = Some(j);
            }
        }
        return out;
    }

    // 1-indexed arrays; p[j] = row assigned to column j (0 = none).
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
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
            for j in 0..=m {
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

    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Maximize total score over one-to-one pairs whose score is at least
/// `min_score`; other pairs stay unmatched. Scores below `min_score`
/// (or non-finite) are ineligible. Assumes eligible scores are >= 0.
pub fn max_score_matching(score: &[Vec<f64>], min_score: f64) -> Vec<(usize, usize)> {
    let n = score.len();
    if n == 0 || score[0].is_empty() {
        return Vec::new();
    }
    let eligible =
        |s: f64| s.is_finite() && (s >= min_score || min_score == f64::NEG_INFINITY);
    // Ineligible pairs get cost 0 and act as "leave unmatched" slots;
    // eligible pairs get -score so the minimizer maximizes total score.
    let cost: Vec<Vec<f64>> = score
        .iter()
        .map(|row| {
            row.iter()
                .map(|&s| if eligible(s) { -s.max(0.0) } else { 0.0 })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let mut out = Vec::new();
    for (i, j) in assignment.iter().enumerate() {
        if let Some(j) = j {
            if eligible(score[i][*j]) {
                out.push((i, *j));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Greedy nearest-neighbor matching: repeatedly take the globally
/// smallest cost among unused rows and columns while it is <= `gate`.
/// Ties break lexicographically by (row, col) so results are reproducible.
pub fn greedy_min_matching(cost: &[Vec<f64>], gate: f64) -> Vec<(usize, usize)> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(n * m);
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c.is_finite() && c <= gate {
                entries.push((c, i, j));
            }
        }
    }
    entries.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite costs")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut out = Vec::new();
    for (_, i, j) in entries {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Minimize total cost over gated pairs, preferring more matches: the
/// optimal-assignment alternative to [`greedy_min_matching`].
pub fn min_cost_matching_gated(cost: &[Vec<f64>], gate: f64) -> Vec<(usize, usize)> {
    let score: Vec<Vec<f64>> = cost
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if c.is_finite() && c <= gate { gate - c } else { f64::NAN })
                .collect()
        })
        .collect();
    max_score_matching(&score, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive min-cost complete assignment over the smaller side.
    fn brute_min_cost(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let m = cost[0].len();
        fn rec(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            let n = cost.len();
            let m = cost[0].len();
            if i == n {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..m {
                if !used[j] {
                    used[j] = true;
                    let v = cost[i][j] + rec(cost, i + 1, used);
                    used[j] = false;
                    best = best.min(v);
                }
            }
            best
        }
        if n <= m {
            rec(cost, 0, &mut vec![false; m])
        } else {
            let t: Vec<Vec<f64>> = (0..m)
                .map(|j| (0..n).map(|i| cost[i][j]).collect())
            .collect();
            rec(&t, 0, &mut vec![false; n])
        }
    }

    fn total(cost: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
        assignment
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| cost[i][j]))
            .sum()
    }

    #[test]
    fn hungarian_matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..300 {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=6);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.random_range(0.0..100.0)).collect())
                .collect();
            let a = min_cost_assignment(&cost);
            let got = total(&cost, &a);
            let want = brute_min_cost(&cost);
            assert!(
                (got - want).abs() < 1e-9,
                "trial {trial}: hungarian {got} != brute {want}"
            );
            // One-to-one.
            let mut cols: Vec<usize> = a.iter().filter_map(|j| *j).collect();
            cols.sort_unstable();
            cols.dedup();
            assert_eq!(cols.len(), n.min(m));
        }
    }

    #[test]
    fn greedy_respects_gate_and_uniqueness() {
        let cost = vec![vec![5.0, 1.0], vec![2.0, 1.5]];
        // Ascending costs: (0,1)=1.0 first, then (1,0)=2.0.
        let pairs = greedy_min_matching(&cost, 10.0);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        // Gate excludes everything above 1.2.
        let pairs = greedy_min_matching(&cost, 1.2);
        assert_eq!(pairs, vec![(0, 1)]);
    }

    #[test]
    fn greedy_tie_break_is_lexicographic() {
        let cost = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let pairs = greedy_min_matching(&cost, 2.0);
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn max_score_matching_leaves_low_scores_unmatched() {
        let score = vec![vec![0.9, 0.2], vec![0.1, 0.05]];
        let pairs = max_score_matching(&score, 0.5);
        assert_eq!(pairs, vec![(0, 0)]);
    }

    #[test]
    fn max_score_matching_is_optimal_not_greedy() {
        // Greedy would take (0,0)=0.9 and strand row 1 with 0.1;
        // the optimum is (0,1)+(1,0) = 0.8 + 0.85.
        let score = vec![vec![0.9, 0.8], vec![0.85, 0.0]];
        let pairs = max_score_matching(&score, 0.5);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn gated_min_cost_prefers_more_matches() {
        // Greedy takes (0,0)=1 and then (1,1)=9 is over the gate; optimal
        // pairs (0,1)=2 with (1,0)=3 keeping both under the gate.
        let cost = vec![vec![1.0, 2.0], vec![3.0, 9.0]];
        let greedy = greedy_min_matching(&cost, 5.0);
        assert_eq!(greedy, vec![(0, 0)]);
        let optimal = min_cost_matching_gated(&cost, 5.0);
        assert_eq!(optimal, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn empty_inputs() {
        assert!(min_cost_assignment(&[]).is_empty());
        assert!(greedy_min_matching(&[], 1.0).is_empty());
        let one_sided: Vec<Vec<f64>> = vec![vec![]];
        assert_eq!(min_cost_assignment(&one_sided), vec![None]);
        assert!(greedy_min_matching(&one_sided, 1.0).is_empty());
    }
}

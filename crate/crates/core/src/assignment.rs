//! Minimum-cost perfect matching on square cost matrices.

/// Optimal matching together with the cost of the runner-up.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `columns[i]` is the column matched to row `i`.
    pub columns: Vec<usize>,
    pub cost: f64,
    /// Cost of the cheapest perfect matching different from `columns`
    /// (`INFINITY` for a 1x1 problem).
    pub second_cost: f64,
}

impl Assignment {
    /// `(second - best) / best`; infinite when the best cost is zero and the
    /// runner-up is not.
    pub fn relative_gap(&self) -> f64 {
        let gap = self.second_cost - self.cost;
        if self.cost > 0.0 {
            gap / self.cost
        } else if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Hungarian algorithm with row/column potentials, `O(n³)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
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
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; n];
    for j in 1..=n {
        columns[row_of[j] - 1] = j - 1;
    }
    columns
}

/// Optimal matching and runner-up cost.
///
/// Any other perfect matching differs from the optimum by a set of cycles of
/// column exchanges, so the runner-up costs the optimum plus the cheapest
/// exchange cycle, found by Floyd–Warshall (no negative cycles exist at the
/// optimum).
pub fn assign(cost: &[Vec<f64>]) -> Assignment { assign_with(cost, &|_, _| false) }

/// As [`assign`], but exchanging two columns for which `equivalent` holds
/// does not count as a different matching.
pub fn assign_with(cost: &[Vec<f64>], equivalent: &dyn Fn(usize, usize) -> bool) -> Assignment {
    let n = cost.len();
    let columns = hungarian(cost);
    let total: f64 = columns.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    // edge i -> k: row i takes the column of row k
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for k in 0..n {
            if i != k && !equivalent(columns[i], columns[k]) {
                d[i][k] = cost[i][columns[k]] - cost[k][columns[k]];
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            if d[i][m] == f64::INFINITY {
                continue;
            }
            for k in 0..n {
                let via = d[i][m] + d[m][k];
                if via < d[i][k] {
                    d[i][k] = via;
                }
            }
        }
    }
    let cycle = (0..n).map(|i| d[i][i]).fold(f64::INFINITY, f64::min).max(0.0);
    Assignment { columns, cost: total, second_cost: total + cycle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
                let mut totals: Vec<f64> = permutations(n)
                    .iter()
                    .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum())
                    .collect();
                totals.sort_by(f64::total_cmp);
                let a = assign(&cost);
                assert!((a.cost - totals[0]).abs() < 1e-12);
                if n > 1 {
                    assert!((a.second_cost - totals[1]).abs() < 1e-12, "n={n}");
                } else {
                    assert_eq!(a.second_cost, f64::INFINITY);
                }
            }
        }
    }

    #[test]
    fn identity_is_found_for_diagonal_costs() {
        let cost = vec![vec![0.0, 5.0, 5.0], vec![5.0, 0.0, 5.0], vec![5.0, 5.0, 0.0]];
        let a = assign(&cost);
        assert_eq!(a.columns, vec![0, 1, 2]);
        assert_eq!(a.relative_gap(), f64::INFINITY);
    }

    #[test]
    fn equivalent_columns_do_not_make_a_runner_up() {
        // columns 1 and 2 are the same target
        let cost = vec![vec![0.0, 4.0, 4.0], vec![4.0, 1.0, 1.0], vec![4.0, 1.0, 1.0]];
        assert_eq!(assign(&cost).relative_gap(), 0.0);
        let a = assign_with(&cost, &|a, b| a.min(b) == 1 && a.max(b) == 2);
        assert!((a.second_cost - 9.0).abs() < 1e-12);
    }
}

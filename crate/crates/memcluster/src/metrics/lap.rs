//! Minimum-cost linear assignment via the Hungarian algorithm with
//! potentials, O(n^3) on a square cost matrix.

const INF: i64 = i64::MAX / 4;

/// Solves min-cost perfect assignment on a square matrix.
/// Returns `assignment[row] = col`.
pub fn solve_min_cost(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[col] = row (1-based)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = INF;
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
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] != 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum-weight perfect assignment on a square weight matrix.
pub fn solve_max_weight(weight: &[Vec<i64>]) -> Vec<usize> {
    let max = weight.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = weight.iter().map(|row| row.iter().map(|w| max - w).collect()).collect();
    solve_min_cost(&cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(cost: &[Vec<i64>], assignment: &[usize]) -> i64 {
        assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
    }

    fn brute_force_min(cost: &[Vec<i64>]) -> i64 {
        fn recur(cost: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == cost.len() {
                return 0;
            }
            let mut best = INF;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + recur(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        recur(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn small_known_case() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let a = solve_min_cost(&cost);
        assert_eq!(total(&cost, &a), 5);
    }

    #[test]
    fn assignment_is_a_permutation() {
        let cost = vec![vec![1, 2, 3, 4]; 4];
        let mut a = solve_min_cost(&cost);
        a.sort_unstable();
        assert_eq!(a, vec![0, 1, 2, 3]);
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let cost: Vec<Vec<i64>> =
                (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..100)).collect()).collect();
            let a = solve_min_cost(&cost);
            assert_eq!(total(&cost, &a), brute_force_min(&cost));
        }
    }
}

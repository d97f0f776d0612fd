//! Bottleneck assignment on small dense cost matrices.

/// `min over permutations p of max_i cost[i][p(i)]`, by enumerating all
/// permutations (Heap's algorithm). Intended for `n <= 8`.
pub fn bottleneck_brute(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n == 0 {
        return 0.0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |p: &[usize], bound: f64| {
        let mut m = 0.0f64;
        for (i, &j) in p.iter().enumerate() {
            m = m.max(cost[i][j]);
            if m >= bound {
                break;
            }
        }
        m
    };
    let mut best = eval(&perm, f64::INFINITY);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm, best));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Allocation-free enumeration for `n <= 8` on a fixed-size cost array.
pub fn bottleneck_small(cost: &[[f64; 8]; 8], n: usize) -> f64 {
    debug_assert!(n <= 8);
    if n == 0 {
        return 0.0;
    }
    let mut perm = [0usize, 1, 2, 3, 4, 5, 6, 7];
    let eval = |p: &[usize; 8], bound: f64| {
        let mut m = 0.0f64;
        for i in 0..n {
            m = m.max(cost[i][p[i]]);
            if m >= bound {
                break;
            }
        }
        m
    };
    let mut best = eval(&perm, f64::INFINITY);
    let mut c = [0usize; 8];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm, best));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Bottleneck value by binary search over the sorted distinct costs, testing
/// each threshold for a perfect matching with Kuhn's augmenting paths.
pub fn bottleneck_threshold(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n == 0 {
        return 0.0;
    }
    let mut values: Vec<f64> = cost.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    // the row-wise maxima of any matching bound the answer from below
    let lower = cost.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let mut lo = values.partition_point(|&v| v < lower);
    let mut hi = values.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(cost, values[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    values[lo]
}

fn has_perfect_matching(cost: &[Vec<f64>], threshold: f64) -> bool {
    let n = cost.len();
    let mut match_col: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut seen = vec![false; n];
        if !augment(cost, threshold, row, &mut seen, &mut match_col) {
            return false;
        }
    }
    true
}

fn augment(cost: &[Vec<f64>], threshold: f64, row: usize, seen: &mut [bool], match_col: &mut [Option<usize>]) -> bool {
    for col in 0..cost.len() {
        if cost[row][col] <= threshold && !seen[col] {
            seen[col] = true;
            if match_col[col].is_none_or(|r| augment(cost, threshold, r, seen, match_col)) {
                match_col[col] = Some(row);
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn routes_agree_on_random_matrices() {
        let mut r = crate::rng::stream(11, "matching", 0);
        for n in 1..=7 {
            for _ in 0..50 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| r.random::<f64>()).collect()).collect();
                assert_eq!(bottleneck_brute(&cost), bottleneck_threshold(&cost));
                let mut arr = [[0.0; 8]; 8];
                for i in 0..n {
                    for j in 0..n {
                        arr[i][j] = cost[i][j];
                    }
                }
                assert_eq!(bottleneck_brute(&cost), bottleneck_small(&arr, n));
            }
        }
    }

    #[test]
    fn identity_is_found() {
        let cost = vec![vec![0.1, 5.0, 5.0], vec![5.0, 0.2, 5.0], vec![5.0, 5.0, 0.3]];
        assert_eq!(bottleneck_brute(&cost), 0.3);
        assert_eq!(bottleneck_threshold(&cost), 0.3);
    }
}

use nalgebra::DMatrix;

/// Minimum-cost one-to-one assignment for a rectangular cost matrix.
///
/// Every row is matched when `rows <= cols`, every column otherwise.
/// Returns the column matched to each row (`None` for unmatched rows) and
/// the total cost. Costs must be finite.
pub fn assign(cost: &DMatrix<f64>) -> (Vec<Option<usize>>, f64) {
    let (n, m) = cost.shape();
    if n == 0 || m == 0 {
        return (vec![None; n], 0.0);
    }
    if n > m {
        let (cols, total) = assign(&cost.transpose());
        let mut rows = vec![None; n];
        for (j, r) in cols.into_iter().enumerate() {
            if let Some(i) = r {
                rows[i] = Some(j);
            }
        }
        return (rows, total);
    }
    let col_of_row = hungarian(cost);
    let total = col_of_row.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    (col_of_row.into_iter().map(Some).collect(), total)
}

/// Shortest augmenting path Hungarian method with potentials, `n <= m`.
fn hungarian(a: &DMatrix<f64>) -> Vec<usize> {
    let (n, m) = a.shape();
    // 1-based internal indexing; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a[(i0 - 1, j - 1)] - u[i0] - v[j];
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
    let mut ans = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

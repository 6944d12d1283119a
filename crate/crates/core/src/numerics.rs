//! Small numerical kernels shared by the solvers.

use std::ops::{Add, Mul};

use nalgebra::{DMatrix, DVector};

/// Composite Simpson rule over equally spaced samples; needs an odd count.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() % 2 == 1, "simpson needs an even interval count");
    let n = values.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Matrix-valued composite Simpson rule.
pub fn simpson_matrix(values: &[DMatrix<f64>], h: f64) -> DMatrix<f64> {
    let n = values.len() - 1;
    let mut s = &values[0] + &values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

/// Running integral at the nodes from samples on a half-step grid.
///
/// `fine` holds `2N + 1` samples at spacing `h / 2`; the result holds the
/// integral from the first node to each of the `N + 1` nodes, each interval
/// done by Simpson with its midpoint.
pub fn cumulative_simpson_fine(fine: &[f64], h: f64) -> Vec<f64> {
    let n = (fine.len() - 1) / 2;
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for i in 0..n {
        acc += h / 6.0 * (fine[2 * i] + 4.0 * fine[2 * i + 1] + fine[2 * i + 2]);
        out.push(acc);
    }
    out
}

/// Fourth-order finite-difference derivative of equally spaced samples.
///
/// Central five-point stencil in the interior, one-sided fourth-order
/// stencils at the two first and two last samples. Needs at least 5 samples.
pub fn derivative4(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "derivative4 needs at least 5 samples");
    let f = values;
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    let l = n - 1;
    d[l] = (25.0 * f[l] - 48.0 * f[l - 1] + 36.0 * f[l - 2] - 16.0 * f[l - 3] + 3.0 * f[l - 4])
        / (12.0 * h);
    d[l - 1] = (3.0 * f[l] + 10.0 * f[l - 1] - 18.0 * f[l - 2] + 6.0 * f[l - 3] - f[l - 4])
        / (12.0 * h);
    d
}

/// Componentwise [`derivative4`] of a sequence of vectors.
pub fn derivative4_vec(values: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
    let dim = values.first().map_or(0, |v| v.len());
    let mut out = vec![DVector::zeros(dim); values.len()];
    for c in 0..dim {
        let col: Vec<f64> = values.iter().map(|v| v[c]).collect();
        for (o, d) in out.iter_mut().zip(derivative4(&col, h)) {
            o[c] = d;
        }
    }
    out
}

/// One classical RK4 step of `y' = f(t, y)`. The right-hand side receives
/// 0, 1 or 2 for the start, midpoint and end of the step.
pub fn rk4_step<T, F>(y: &T, h: f64, mut rhs: F) -> T
where
    T: Clone + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(usize, &T) -> T,
{
    let k1 = rhs(0, y);
    let k2 = rhs(1, &(y.clone() + k1.clone() * (h / 2.0)));
    let k3 = rhs(1, &(y.clone() + k2.clone() * (h / 2.0)));
    let k4 = rhs(2, &(y.clone() + k3.clone() * h));
    y.clone() + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Count of singular values above `tol * max`.
pub fn numeric_rank(singular_values: &[f64], tol: f64) -> usize {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > tol * max).count()
}

/// Singular values sorted in decreasing order.
pub fn sorted_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Right null direction of a matrix with a one-dimensional kernel: the right
/// singular vector of the smallest singular value. Also returns that value.
pub fn smallest_right_singular(m: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let cols = m.ncols();
    if m.nrows() == 0 {
        let mut v = DVector::zeros(cols);
        v[0] = 1.0;
        return (v, 0.0);
    }
    // Work on the Gram matrix when the matrix is short and wide, so the SVD
    // always exposes a full set of right singular vectors.
    let g = m.transpose() * m;
    let eig = g.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap_or((0, 0.0));
    (eig.eigenvectors.column(idx).into_owned(), val.max(0.0).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn linear_fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `count` values from `a` to `b` spaced evenly in log scale.
pub fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..count)
            .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// All strictly increasing `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

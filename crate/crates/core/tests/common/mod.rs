// Shared oracle helpers for integration tests. Everything here is built
// from scalar loops on `Vec<Vec<f64>>` so it shares no code path with the
// library's nalgebra-based linear algebra.

/// Dense row-major matrix as nested Vecs.
pub type Grid = Vec<Vec<f64>>;

pub fn zeros(rows: usize, cols: usize) -> Grid {
    vec![vec![0.0; cols]; rows]
}

pub fn transpose(a: &Grid) -> Grid {
    let (r, c) = (a.len(), a[0].len());
    let mut out = zeros(c, r);
    for i in 0..r {
        for j in 0..c {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub fn matmul(a: &Grid, b: &Grid) -> Grid {
    let (r, inner, c) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), inner);
    let mut out = zeros(r, c);
    for i in 0..r {
        for p in 0..inner {
            let v = a[i][p];
            if v == 0.0 {
                continue;
            }
            for j in 0..c {
                out[i][j] += v * b[p][j];
            }
        }
    }
    out
}

/// Jacobi eigendecomposition of a symmetric matrix; returns (eigenvalues,
/// eigenvector columns).
pub fn jacobi_eigen(a: &Grid) -> (Vec<f64>, Grid) {
    let n = a.len();
    let mut d = a.clone();
    let mut v = zeros(n, n);
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..200 * n * n {
        let mut max_val = 0.0;
        let (mut p, mut q) = (0, 1);
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j].abs() > max_val {
                    max_val = d[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if max_val < 1e-14 {
            break;
        }
        let theta = if (d[p][p] - d[q][q]).abs() < 1e-300 {
            std::f64::consts::FRAC_PI_4
        } else {
            0.5 * (2.0 * d[p][q] / (d[p][p] - d[q][q])).atan()
        };
        let (c, s) = (theta.cos(), theta.sin());
        for j in 0..n {
            let (dp, dq) = (d[p][j], d[q][j]);
            d[p][j] = c * dp + s * dq;
            d[q][j] = -s * dp + c * dq;
        }
        for row in d.iter_mut() {
            let (dp, dq) = (row[p], row[q]);
            row[p] = c * dp + s * dq;
            row[q] = -s * dp + c * dq;
        }
        for row in v.iter_mut() {
            let (vp, vq) = (row[p], row[q]);
            row[p] = c * vp + s * vq;
            row[q] = -s * vp + c * vq;
        }
    }
    let eig: Vec<f64> = (0..n).map(|i| d[i][i]).collect();
    (eig, v)
}

/// Full SVD of an arbitrary matrix via Jacobi on A^T A; returns
/// (U, singular values, V), descending.
pub fn jacobi_svd(a: &Grid) -> (Grid, Vec<f64>, Grid) {
    let (m, n) = (a.len(), a[0].len());
    let at = transpose(a);
    let ata = matmul(&at, a);
    let (eig, vecs) = jacobi_eigen(&ata);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig[y].partial_cmp(&eig[x]).unwrap());
    // Eigenvalues of A^T A at roundoff level would alias into sqrt-scale
    // phantom singular values; truncate them.
    let eig_floor = 1e-12 * eig.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut sigma = Vec::with_capacity(n);
    let mut v = zeros(n, n);
    for (idx, &col) in order.iter().enumerate() {
        sigma.push(if eig[col] > eig_floor {
            eig[col].sqrt()
        } else {
            0.0
        });
        for j in 0..n {
            v[j][idx] = vecs[j][col];
        }
    }
    let av = matmul(a, &v);
    let mut u = zeros(m, n);
    for (idx, s) in sigma.iter().enumerate() {
        if *s > 1e-13 {
            for i in 0..m {
                u[i][idx] = av[i][idx] / s;
            }
        }
    }
    (u, sigma, v)
}

/// Nuclear norm from the Jacobi route.
pub fn jacobi_nuclear_norm(a: &Grid) -> f64 {
    jacobi_svd(a).1.iter().sum()
}

pub fn frob_sq(a: &Grid) -> f64 {
    a.iter().flatten().map(|v| v * v).sum()
}

pub fn sub(a: &Grid, b: &Grid) -> Grid {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Grid {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[allow(dead_code)] // not every test target uses both directions
pub fn to_nalgebra(g: &Grid) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(g.len(), g[0].len(), |i, j| g[i][j])
}

//! Per-node dense linear algebra on small (dim <= 7) symmetric matrices.
//!
//! Symmetric 2-tensors are stored packed in upper-triangular row-major order
//! (0,0),(0,1),...,(0,n),(1,1),...,(n,n); this fixed layout is also the
//! column order of the snapshot files.

use crate::chart::MAX_AXES;

pub type Mat = [[f64; MAX_AXES]; MAX_AXES];

/// Number of packed components of a symmetric dim x dim matrix.
pub fn sym_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Packed index of (i, j), any order of i and j.
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * dim + 1 - i) / 2 + (j - i)
}

/// The (i, j) pair stored at packed position `k`.
pub fn sym_pair(dim: usize, k: usize) -> (usize, usize) {
    let mut row = 0;
    let mut base = 0;
    loop {
        let row_len = dim - row;
        if k < base + row_len {
            return (row, row + (k - base));
        }
        base += row_len;
        row += 1;
    }
}

pub fn unpack(packed: &[f64], dim: usize) -> Mat {
    let mut m = [[0.0; MAX_AXES]; MAX_AXES];
    for i in 0..dim {
        for j in i..dim {
            let v = packed[sym_index(dim, i, j)];
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

pub fn pack_into(m: &Mat, dim: usize, out: &mut [f64]) {
    for i in 0..dim {
        for j in i..dim {
            out[sym_index(dim, i, j)] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
}

/// Cholesky factor (lower) of a symmetric matrix; None when not positive definite.
pub fn cholesky(m: &Mat, dim: usize) -> Option<Mat> {
    let mut l = [[0.0; MAX_AXES]; MAX_AXES];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn invert_spd(m: &Mat, dim: usize) -> Option<Mat> {
    let l = cholesky(m, dim)?;
    // columns of the inverse: solve L L^T x = e_k
    let mut inv = [[0.0; MAX_AXES]; MAX_AXES];
    for k in 0..dim {
        let mut y = [0.0; MAX_AXES];
        for i in 0..dim {
            let mut s = if i == k { 1.0 } else { 0.0 };
            for j in 0..i {
                s -= l[i][j] * y[j];
            }
            y[i] = s / l[i][i];
        }
        let mut x = [0.0; MAX_AXES];
        for i in (0..dim).rev() {
            let mut s = y[i];
            for j in i + 1..dim {
                s -= l[j][i] * x[j];
            }
            x[i] = s / l[i][i];
        }
        for i in 0..dim {
            inv[i][k] = x[i];
        }
    }
    // symmetrize against roundoff
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    Some(inv)
}

/// Extreme eigenvalues of a symmetric matrix (Jacobi rotations).
pub fn sym_eigen_range(m: &Mat, dim: usize) -> (f64, f64) {
    let mut a = *m;
    for _sweep in 0..32 {
        let mut off = 0.0;
        for i in 0..dim {
            for j in i + 1..dim {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut lo = a[0][0];
    let mut hi = a[0][0];
    for i in 1..dim {
        lo = lo.min(a[i][i]);
        hi = hi.max(a[i][i]);
    }
    (lo, hi)
}

/// Matrix-vector product restricted to the leading dim x dim block.
pub fn matvec(m: &Mat, v: &[f64; MAX_AXES], dim: usize) -> [f64; MAX_AXES] {
    let mut out = [0.0; MAX_AXES];
    for i in 0..dim {
        let mut s = 0.0;
        for j in 0..dim {
            s += m[i][j] * v[j];
        }
        out[i] = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_layout() {
        // dim 3: (0,0)(0,1)(0,2)(1,1)(1,2)(2,2)
        assert_eq!(sym_index(3, 0, 0), 0);
        assert_eq!(sym_index(3, 0, 2), 2);
        assert_eq!(sym_index(3, 1, 1), 3);
        assert_eq!(sym_index(3, 2, 1), 4);
        assert_eq!(sym_index(3, 2, 2), 5);
        for k in 0..sym_len(4) {
            let (i, j) = sym_pair(4, k);
            assert_eq!(sym_index(4, i, j), k);
        }
    }

    #[test]
    fn spd_inverse() {
        let dim = 3;
        let mut m = [[0.0; MAX_AXES]; MAX_AXES];
        let vals = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.25], [0.5, -0.25, 2.0]];
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = vals[i][j];
            }
        }
        let inv = invert_spd(&m, dim).unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += m[i][k] * inv[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let dim = 2;
        let mut m = [[0.0; MAX_AXES]; MAX_AXES];
        m[0][0] = 1.0;
        m[1][1] = -1.0;
        assert!(cholesky(&m, dim).is_none());
    }

    #[test]
    fn eigen_range_diagonal() {
        let dim = 3;
        let mut m = [[0.0; MAX_AXES]; MAX_AXES];
        m[0][0] = 0.5;
        m[1][1] = 2.0;
        m[2][2] = 7.0;
        let (lo, hi) = sym_eigen_range(&m, dim);
        assert!((lo - 0.5).abs() < 1e-12);
        assert!((hi - 7.0).abs() < 1e-12);
        m[0][1] = 0.3;
        m[1][0] = 0.3;
        let (lo2, hi2) = sym_eigen_range(&m, dim);
        assert!(lo2 < 0.5 && hi2 >= 7.0 - 1e-12);
    }
}

use crate::scalar::Scalar;

/// Lower Cholesky factor of a symmetric matrix, `None` if not positive definite.
pub(crate) fn cholesky<T: Scalar>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(T::zero(), T::max);
    let floor = scale * T::epsilon() * crate::scalar::lit(64.0);
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > floor) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b`.
pub(crate) fn cholesky_solve<T: Scalar>(l: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = l.len();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let v = l[i][k] * y[k];
            y[i] -= v;
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let v = l[k][i] * y[k];
            y[i] -= v;
        }
        y[i] /= l[i][i];
    }
    y
}

/// Diagonal of `(L Lᵀ)⁻¹`.
pub(crate) fn inverse_diagonal<T: Scalar>(l: &[Vec<T>]) -> Vec<T> {
    let n = l.len();
    (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            cholesky_solve(l, &e)[j]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &[2.0, 1.0]);
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0f64).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0f64).abs() < 1e-12);
        let d = inverse_diagonal(&l);
        assert!((d[0] - 3.0 / 8.0).abs() < 1e-12);
        assert!((d[1] - 4.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        assert!(cholesky(&[vec![1.0f64, 1.0], vec![1.0, 1.0]]).is_none());
        assert!(cholesky(&[vec![0.0f64]]).is_none());
    }
}

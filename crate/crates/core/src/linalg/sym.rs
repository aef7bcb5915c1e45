use super::{LinalgError, Matrix, SymMatrix, MAX_DIM};

const MAX_SWEEPS: usize = 64;

/// All eigenvalues of `s`, ascending, with multiplicity.
///
/// Cyclic Jacobi rotations; converges quadratically and is backward stable
/// for the dimensions used here.
pub fn sym_eigenvalues(s: &SymMatrix) -> Vec<f64> {
    let n = s.dim();
    let mut a = [[0.0f64; MAX_DIM]; MAX_DIM];
    for (i, row) in a.iter_mut().enumerate().take(n) {
        for (j, v) in row.iter_mut().enumerate().take(n) {
            *v = s.get(i, j);
        }
    }
    let norm = s.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Lower-triangular `L` with `g = L L^T`.
pub fn cholesky(g: &SymMatrix) -> Result<Matrix, LinalgError> {
    let n = g.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = g.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in (j + 1)..n {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

/// Frame factor `h` with `h g h^T = I`.
///
/// Deterministic choice `h = L^{-1}` for the Cholesky factor `g = L L^T`, so
/// `h` is lower triangular with positive diagonal.
pub fn frame_factor(g: &SymMatrix) -> Result<Matrix, LinalgError> {
    let l = cholesky(g)?;
    let n = g.dim();
    let mut h = Matrix::zeros(n);
    // forward substitution, column by column of the identity
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l.get(i, k) * h.get(k, col);
            }
            h.set(i, col, s / l.get(i, i));
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_swap_examples() {
        assert_eq!(sym_eigenvalues(&SymMatrix::identity(2)), vec![1.0, 1.0]);
        let s = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ev = sym_eigenvalues(&s);
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_examples() {
        let h = frame_factor(&SymMatrix::identity(3)).unwrap();
        assert_eq!(h, Matrix::identity(3));

        let h = frame_factor(&SymMatrix::from_diag(&[4.0])).unwrap();
        assert_eq!(h.get(0, 0), 0.5);

        let g = SymMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let h = frame_factor(&g).unwrap();
        let id = g.congruence(&h);
        assert!(id.to_matrix().max_abs_diff(&Matrix::identity(2)) < 1e-12);
    }

    #[test]
    fn non_spd_reports_pivot() {
        let g = SymMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        match frame_factor(&g) {
            Err(LinalgError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
        let g = SymMatrix::from_diag(&[-1.0, 1.0]);
        assert!(matches!(
            frame_factor(&g),
            Err(LinalgError::NotPositiveDefinite { pivot: 0, .. })
        ));
    }
}

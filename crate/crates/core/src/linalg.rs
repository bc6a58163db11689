//! Dense Gauss-Jordan elimination for the small systems of the load solver.

/// Solve `a x = b` in place by Gauss-Jordan elimination with partial
/// pivoting. `a` is row-major `n × n`. Returns `None` when a pivot falls
/// below `1e-14` times the largest entry of its column.
pub fn gauss_jordan(a: &mut [f64], b: &mut [f64]) -> Option<()> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix/vector size mismatch");
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 && n > 0 {
        return None;
    }
    for col in 0..n {
        let (pivot, max) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(max > 1e-14 * scale) {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        let inv = 1.0 / a[col * n + col];
        for j in col..n {
            a[col * n + j] *= inv;
        }
        b[col] *= inv;
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_small_system() {
        let mut a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        gauss_jordan(&mut a, &mut b).unwrap();
        for (x, want) in b.iter().zip([2.0, 3.0, -1.0]) {
            assert!((x - want).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_pivoting() {
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![3.0, 4.0];
        gauss_jordan(&mut a, &mut b).unwrap();
        assert_eq!(b, vec![4.0, 3.0]);
    }

    #[test]
    fn singular_is_detected() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(gauss_jordan(&mut a, &mut b).is_none());
    }

    proptest! {
        #[test]
        fn residual_is_small(vals in prop::collection::vec(-10.0f64..10.0, 16), x in prop::collection::vec(-5.0f64..5.0, 4)) {
            // Diagonally dominant so the system is well conditioned.
            let mut a = vals.clone();
            for i in 0..4 {
                a[i * 4 + i] += 50.0;
            }
            let b: Vec<f64> = (0..4).map(|i| (0..4).map(|j| a[i * 4 + j] * x[j]).sum()).collect();
            let mut m = a.clone();
            let mut sol = b.clone();
            gauss_jordan(&mut m, &mut sol).unwrap();
            for j in 0..4 {
                prop_assert!((sol[j] - x[j]).abs() < 1e-10);
            }
        }
    }
}

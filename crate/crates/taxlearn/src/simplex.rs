//! Dense phase-1 simplex: find `x ≥ 0` with `A·x = b`, or report
//! infeasibility. Bland's rule throughout, so no cycling. Sized for
//! desk-scale decomposition problems (hundreds of columns).

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

/// `columns[j]` is the j-th column of `A`. Returns `x` with
/// `‖A·x − b‖∞ ≤ tol`, or `None` when the artificial objective cannot be
/// driven below `tol`.
pub(crate) fn feasible_point(columns: &[Vec<f64>], rhs: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = columns.len();
    let m = rhs.len();
    if m == 0 {
        return Some(vec![0.0; n]);
    }
    for col in columns {
        debug_assert_eq!(col.len(), m);
    }

    // Tableau rows [A | I | b], rows flipped so b ≥ 0.
    let width = n + m + 1;
    let mut tab = vec![vec![0.0; width]; m];
    for i in 0..m {
        let flip = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, col) in columns.iter().enumerate() {
            tab[i][j] = flip * col[i];
        }
        tab[i][n + i] = 1.0;
        tab[i][n + m] = flip * rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs for minimizing the artificial sum: structural columns
    // price at −(column sum), artificials at 0, and the stored rhs entry is
    // −(current objective).
    let mut reduced = vec![0.0; width];
    for row in &tab {
        for (r, v) in reduced.iter_mut().zip(row) {
            *r -= v;
        }
    }
    for k in 0..m {
        reduced[n + k] = 0.0;
    }

    for _ in 0..MAX_PIVOTS {
        // Bland: lowest-index improving column.
        let Some(enter) = (0..n + m).find(|&j| reduced[j] < -PIVOT_TOL) else {
            break;
        };
        // Ratio test; ties leave the lowest basis index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for (i, row) in tab.iter().enumerate() {
            let coef = row[enter];
            if coef > PIVOT_TOL {
                let ratio = row[n + m] / coef;
                let better = ratio < best - PIVOT_TOL
                    || (ratio < best + PIVOT_TOL
                        && leave.is_some_and(|l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = leave?; // unbounded phase-1 cannot happen; bail defensively
        let pivot = tab[leave][enter];
        for v in &mut tab[leave] {
            *v /= pivot;
        }
        for i in 0..m {
            if i != leave {
                let factor = tab[i][enter];
                if factor != 0.0 {
                    let (pivot_row, row) = if i < leave {
                        let (a, b) = tab.split_at_mut(leave);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = tab.split_at_mut(i);
                        (&a[leave], &mut b[0])
                    };
                    for (v, p) in row.iter_mut().zip(pivot_row) {
                        *v -= factor * p;
                    }
                }
            }
        }
        let factor = reduced[enter];
        if factor != 0.0 {
            for (v, p) in reduced.iter_mut().zip(&tab[leave]) {
                *v -= factor * p;
            }
        }
        basis[leave] = enter;
    }

    let mut x = vec![0.0; n];
    let mut artificial_mass = 0.0;
    for (i, &b) in basis.iter().enumerate() {
        let value = tab[i][n + m];
        if b < n {
            x[b] = value.max(0.0);
        } else {
            artificial_mass += value.abs();
        }
    }
    if artificial_mass > tol {
        return None;
    }
    // Independent residual check against the original system.
    for i in 0..m {
        let mut acc = 0.0;
        for (j, col) in columns.iter().enumerate() {
            acc += col[i] * x[j];
        }
        if (acc - rhs[i]).abs() > tol {
            return None;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_square_system() {
        // x0 + x1 = 1, x1 = 0.6
        let columns = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let x = feasible_point(&columns, &[1.0, 0.6], 1e-9).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-9);
        assert!((x[1] - 0.6).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasibility() {
        // x0 = 1 and x0 = 2 cannot both hold.
        let columns = vec![vec![1.0, 1.0]];
        assert!(feasible_point(&columns, &[1.0, 2.0], 1e-9).is_none());
    }

    #[test]
    fn rejects_negative_only_solutions() {
        // x0·1 = −1 has no nonnegative solution.
        let columns = vec![vec![1.0]];
        assert!(feasible_point(&columns, &[-1.0], 1e-9).is_none());
    }

    #[test]
    fn underdetermined_system_picks_a_vertex() {
        // One equation, three unknowns: x0 + 2x1 + x2 = 2.
        let columns = vec![vec![1.0], vec![2.0], vec![1.0]];
        let x = feasible_point(&columns, &[2.0], 1e-9).unwrap();
        let acc = x[0] + 2.0 * x[1] + x[2];
        assert!((acc - 2.0).abs() < 1e-9);
        assert!(x.iter().all(|&v| v >= 0.0));
    }
}

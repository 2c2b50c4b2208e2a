//! Regular evaluation lattices.

use specreg_core::Pencil;

use crate::error::{Error, Result};

/// Largest covariate dimension supported by [`grid`].
pub const MAX_GRID_DIM: usize = 3;

/// Evaluates `pencil` on the lattice spanned by `mins`, `maxs` and `steps`
/// points per axis. Rows come out in row-major order (last axis fastest),
/// each as the point followed by its value.
pub fn grid(pencil: &Pencil, mins: &[f64], maxs: &[f64], steps: &[usize]) -> Result<Vec<Vec<f64>>> {
    let d = pencil.d();
    if d > MAX_GRID_DIM {
        return Err(Error::Usage(format!(
            "grid output supports d ≤ {MAX_GRID_DIM}, model has d = {d}; slice the model to at most {MAX_GRID_DIM} free coordinates"
        )));
    }
    if d == 0 {
        return Err(Error::Usage("grid output needs d ≥ 1".into()));
    }
    if mins.len() != d || maxs.len() != d || steps.len() != d {
        return Err(Error::Usage(format!(
            "expected {d} values for each of --mins, --maxs and --steps"
        )));
    }
    for j in 0..d {
        if steps[j] < 2 {
            return Err(Error::Usage(format!("axis {}: steps must be at least 2", j + 1)));
        }
        if !(mins[j].is_finite() && maxs[j].is_finite() && mins[j] <= maxs[j]) {
            return Err(Error::Usage(format!("axis {}: need finite min ≤ max", j + 1)));
        }
    }
    let total: usize = steps.iter().product();
    let mut rows = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..total {
        for j in 0..d {
            let t = idx[j] as f64 / (steps[j] - 1) as f64;
            x[j] = if idx[j] + 1 == steps[j] { maxs[j] } else { mins[j] + t * (maxs[j] - mins[j]) };
        }
        let mut row = x.clone();
        row.push(pencil.eval(&x)?);
        rows.push(row);
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < steps[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use specreg_core::BlockSymMatrix;

    fn norm2() -> Pencil {
        let a1 = BlockSymMatrix::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let a2 = BlockSymMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        Pencil::new(vec![a1, a2], None).unwrap()
    }

    #[test]
    fn three_by_three_box() {
        let rows = grid(&norm2(), &[-1.0, -1.0], &[1.0, 1.0], &[3, 3]).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[4], vec![0.0, 0.0, 0.0]);
        assert_eq!(&rows[1][..2], &[-1.0, 0.0]);
        assert!((rows[0][2] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_steps_and_dims() {
        assert!(matches!(grid(&norm2(), &[-1.0, -1.0], &[1.0, 1.0], &[1, 3]), Err(Error::Usage(_))));
        let p = Pencil::zeros(4, 1, 1, true).unwrap();
        assert!(matches!(grid(&p, &[0.0; 4], &[1.0; 4], &[2; 4]), Err(Error::Usage(_))));
    }
}

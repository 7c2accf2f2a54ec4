use crate::error::{Error, Result};
use crate::Float;

/// Solves `A x = b` for a symmetric positive definite `A` (row-major, n × n)
/// by Cholesky factorization.
///
/// A pivot below `n · eps · max|diag|` is treated as singular.
pub fn cholesky_solve<F: Float>(a: &[F], b: &[F]) -> Result<Vec<F>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Dimension(format!(
            "{}-element matrix for {n} unknowns",
            a.len()
        )));
    }
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(F::zero(), F::max);
    let tol = F::epsilon() * F::of_count(n.max(1)) * F::of(16.0) * max_diag;

    let mut l = vec![F::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > tol) {
            return Err(Error::Singular(format!("pivot {j} is {d}")));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    // L y = b
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // Lᵀ x = y
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

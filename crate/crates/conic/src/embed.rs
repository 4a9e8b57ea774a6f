//! Complex Hermitian <-> real symmetric block embedding.
//!
//! `W = A + iB` maps to `[[A, -B], [B, A]]`. For Hermitian `C` and any real
//! symmetric `X` of twice the size, `tr(embed(C) X) / 2 = Re tr(C project(X))`,
//! so halving the embedded coefficients keeps every functional unchanged.

use nalgebra::{Complex, DMatrix};

use crate::program::CMatrix;

pub fn embed(c: &CMatrix) -> DMatrix<f64> {
    let n = c.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = c[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    out
}

/// Projects a real symmetric `2n x 2n` matrix onto the embedded subspace and
/// returns the corresponding Hermitian `n x n` matrix. Preserves PSD-ness.
pub fn project(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        Complex::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::trace_product;

    fn herm() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(2.0, 0.0),
                Complex::new(0.5, -1.0),
                Complex::new(0.5, 1.0),
                Complex::new(-1.0, 0.0),
            ],
        )
    }

    #[test]
    fn project_inverts_embed() {
        let w = herm();
        let back = project(&embed(&w));
        assert!((back - w).norm() < 1e-15);
    }

    #[test]
    fn halved_embedded_trace_matches_complex_trace() {
        let c = herm();
        let w = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(1.0, 0.0),
                Complex::new(0.2, 0.3),
                Complex::new(0.2, -0.3),
                Complex::new(0.7, 0.0),
            ],
        );
        let real = (embed(&c) * embed(&w)).trace() / 2.0;
        assert!((real - trace_product(&c, &w)).abs() < 1e-14);
    }
}

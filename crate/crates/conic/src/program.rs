//! Hermitian semidefinite programs with nonnegative scalar auxiliaries.
//!
//! A program maximizes a real linear functional over a product of complex
//! Hermitian PSD blocks `W_b` and nonnegative scalars `t_s`, subject to
//! linear constraints of the form
//!
//! ```text
//! sum_b tr(C_b W_b) + sum_s a_s t_s  {<=, >=, =}  rhs
//! ```
//!
//! with every `C_b` Hermitian, so each functional is real on the feasible set.

use nalgebra::{Complex, DMatrix};

use crate::ConicError;

pub type CMatrix = DMatrix<Complex<f64>>;

/// Relative tolerance used to decide whether a coefficient matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `sum_b tr(C_b W_b) + sum_s a_s t_s`, stored sparsely over blocks and scalars.
#[derive(Debug, Clone, Default)]
pub struct LinearFunctional {
    pub blocks: Vec<(usize, CMatrix)>,
    pub scalars: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_block(mut self, block: usize, coeff: CMatrix) -> Self {
        self.blocks.push((block, coeff));
        self
    }

    pub fn with_scalar(mut self, index: usize, coeff: f64) -> Self {
        self.scalars.push((index, coeff));
        self
    }

    /// Evaluates the functional at Hermitian block values and scalar values.
    pub fn eval(&self, matrices: &[CMatrix], scalars: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (b, c) in &self.blocks {
            acc += trace_product(c, &matrices[*b]);
        }
        for (s, a) in &self.scalars {
            acc += a * scalars[*s];
        }
        acc
    }
}

/// `Re tr(A B)`; equals `tr(A B)` when both are Hermitian.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub functional: LinearFunctional,
    pub sense: Sense,
    pub rhs: f64,
}

/// A maximization program over Hermitian PSD blocks and nonnegative scalars.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub psd_block_dims: Vec<usize>,
    pub n_scalars: usize,
    pub objective: LinearFunctional,
    pub constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(psd_block_dims: Vec<usize>, n_scalars: usize) -> Self {
        Self {
            psd_block_dims,
            n_scalars,
            objective: LinearFunctional::new(),
            constraints: Vec::new(),
        }
    }

    pub fn maximize(&mut self, objective: LinearFunctional) -> &mut Self {
        self.objective = objective;
        self
    }

    pub fn add_constraint(&mut self, functional: LinearFunctional, sense: Sense, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            functional,
            sense,
            rhs,
        });
        self
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Largest constraint violation at the given point, in the units of each row.
    pub fn max_violation(&self, matrices: &[CMatrix], scalars: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let v = c.functional.eval(matrices, scalars);
                match c.sense {
                    Sense::Le => (v - c.rhs).max(0.0),
                    Sense::Ge => (c.rhs - v).max(0.0),
                    Sense::Eq => (v - c.rhs).abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        if self.psd_block_dims.contains(&0) {
            return Err(ConicError::Malformed("PSD block of dimension zero".into()));
        }
        if self.psd_block_dims.is_empty() && self.n_scalars == 0 {
            return Err(ConicError::Malformed("program has no variables".into()));
        }
        let check = |f: &LinearFunctional, what: &str| -> Result<(), ConicError> {
            for (b, c) in &f.blocks {
                let dim = *self.psd_block_dims.get(*b).ok_or_else(|| {
                    ConicError::Malformed(format!("{what}: block index {b} out of range"))
                })?;
                if c.nrows() != dim || c.ncols() != dim {
                    return Err(ConicError::Malformed(format!(
                        "{what}: block {b} coefficient is {}x{}, expected {dim}x{dim}",
                        c.nrows(),
                        c.ncols()
                    )));
                }
                if !is_hermitian(c, HERMITIAN_TOL) {
                    return Err(ConicError::Malformed(format!(
                        "{what}: block {b} coefficient is not Hermitian"
                    )));
                }
            }
            for (s, a) in &f.scalars {
                if *s >= self.n_scalars {
                    return Err(ConicError::Malformed(format!(
                        "{what}: scalar index {s} out of range"
                    )));
                }
                if !a.is_finite() {
                    return Err(ConicError::Malformed(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.functional, &format!("constraint {i}"))?;
            if !c.rhs.is_finite() {
                return Err(ConicError::Malformed(format!("constraint {i}: non-finite bound")));
            }
        }
        Ok(())
    }
}

/// Hermitian to `tol` relative to the largest entry.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol * scale.max(1.0) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn trace_product_of_hermitian_pair_is_real_trace() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)]);
        let b = CMatrix::identity(2, 2);
        assert_eq!(trace_product(&a, &b), 4.0);
    }

    #[test]
    fn rejects_non_hermitian_coefficient() {
        let mut p = ConicProgram::new(vec![2], 0);
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        p.add_constraint(LinearFunctional::new().with_block(0, bad), Sense::Le, 1.0);
        assert!(matches!(p.validate(), Err(ConicError::Malformed(_))));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let mut p = ConicProgram::new(vec![3], 0);
        p.maximize(LinearFunctional::new().with_block(0, CMatrix::identity(2, 2)));
        assert!(p.validate().is_err());
    }

    #[test]
    fn violation_measures_each_sense() {
        let mut p = ConicProgram::new(vec![], 1);
        p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0), Sense::Le, 1.0);
        p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0), Sense::Ge, 3.0);
        assert_eq!(p.max_violation(&[], &[2.0]), 1.0);
    }
}

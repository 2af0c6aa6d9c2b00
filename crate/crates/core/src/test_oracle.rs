//! Dense reference constructions used only by unit tests. Every operator
//! here is materialized as an explicit matrix through Kronecker products.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::qcore::{Direction, SingleQubitOp};

pub type Matrix = Vec<Vec<Complex64>>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { Complex64::new(1.0, 0.0) } else { zero() }).collect())
        .collect()
}

pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn kron_mat(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![zero(); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn add_scaled(a: &Matrix, b: &Matrix, scale: Complex64) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + scale * y).collect())
        .collect()
}

pub fn scale(a: &Matrix, s: f64) -> Matrix {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn dense_apply(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn op_matrix(op: &SingleQubitOp) -> Matrix {
    op.matrix().iter().map(|r| r.to_vec()).collect()
}

/// `I ⊗ … ⊗ U ⊗ … ⊗ I` with `U` at position `qubit` (leftmost factor = qubit 0).
pub fn local_matrix(op: &SingleQubitOp, qubit: usize, m: usize) -> Matrix {
    let mut out = vec![vec![Complex64::new(1.0, 0.0)]];
    for q in 0..m {
        let factor = if q == qubit { op_matrix(op) } else { identity(2) };
        out = kron_mat(&out, &factor);
    }
    out
}

fn sigma_x() -> Matrix {
    vec![
        vec![zero(), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), zero()],
    ]
}

pub fn full_entangler_matrix(m: usize, direction: Direction) -> Matrix {
    let mut xs = vec![vec![Complex64::new(1.0, 0.0)]];
    for _ in 0..m {
        xs = kron_mat(&xs, &sigma_x());
    }
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Adjoint => -1.0,
    };
    scale(
        &add_scaled(&identity(1 << m), &xs, Complex64::new(0.0, sign)),
        FRAC_1_SQRT_2,
    )
}

/// `J_2 ⊗ … ⊗ J_2` over `num_pairs` adjacent qubit pairs.
pub fn pair_entangler_matrix(num_pairs: usize, direction: Direction) -> Matrix {
    let j2 = full_entangler_matrix(2, direction);
    let mut out = vec![vec![Complex64::new(1.0, 0.0)]];
    for _ in 0..num_pairs {
        out = kron_mat(&out, &j2);
    }
    out
}

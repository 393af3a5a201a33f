use std::ops::{Index, IndexMut};

use super::DScalar;
use crate::error::{Error, Result};

/// Square row-major matrix sized by the tree's DoF count.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMat<const P: usize> {
    n: usize,
    data: Vec<DScalar<P>>,
}

impl<const P: usize> DenseMat<P> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![DScalar::ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = DScalar::ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = DScalar::constant(x);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)].v).collect()).collect()
    }

    pub fn mul_vec(&self, x: &[DScalar<P>]) -> Vec<DScalar<P>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * x[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<const P: usize> Index<(usize, usize)> for DenseMat<P> {
    type Output = DScalar<P>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &DScalar<P> {
        &self.data[i * self.n + j]
    }
}

impl<const P: usize> IndexMut<(usize, usize)> for DenseMat<P> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut DScalar<P> {
        &mut self.data[i * self.n + j]
    }
}

/// Solves `A x = b` by LU with partial pivoting. Tangents of `x` come out of
/// the dual arithmetic, so they satisfy `A dx = db − dA x` exactly.
pub fn solve_dense<const P: usize>(a: &DenseMat<P>, b: &[DScalar<P>]) -> Result<Vec<DScalar<P>>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Dimension { what: "right-hand side", expected: n, got: b.len() });
    }
    let tol = 1e-12 * a.max_abs();
    let mut lu = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].v.abs() > lu[(piv, k)].v.abs() {
                piv = i;
            }
        }
        if !(lu[(piv, k)].v.abs() > tol) {
            return Err(Error::Singular { pivot: k });
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        let inv = lu[(k, k)].recip();
        for i in k + 1..n {
            let f = lu[(i, k)] * inv;
            if f.v == 0.0 && f.d.iter().all(|d| *d == 0.0) {
                continue;
            }
            for j in k + 1..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            let t = x[k];
            x[i] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= lu[(k, j)] * x[j];
        }
        x[k] = s / lu[(k, k)];
    }
    Ok(x)
}

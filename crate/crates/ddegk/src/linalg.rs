//! Small dense eigen-analysis and a banded LU solver.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Eigenvalues with matching right and left eigenvectors.
///
/// Left vectors satisfy l^T A = lambda l^T (plain transpose) and are scaled so
/// that l_i . r_i = 1 without conjugation.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<C64>,
    pub right: Vec<Vec<C64>>,
    pub left: Vec<Vec<C64>>,
    /// 2-norm condition number of the right eigenvector matrix.
    pub condition: f64,
}

/// Full eigendecomposition of a real square matrix, sorted by real part
/// descending, then imaginary part descending.
///
/// Eigenvalues come from the real Schur form; eigenvectors from complex
/// inverse iteration at each eigenvalue.
pub fn eigen_pairs(a: &DMatrix<f64>) -> Result<EigenPairs> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Config(
            "eigen-analysis needs a non-empty square matrix".into(),
        ));
    }
    let mut values: Vec<C64> = a.clone().complex_eigenvalues().iter().cloned().collect();
    let scale = a.amax().max(1.0);
    // Conjugate pairs share one real part so the ordering keeps them adjacent.
    for i in 0..n {
        if values[i].im > 0.0 {
            if let Some(j) = (0..n)
                .filter(|&j| j != i && values[j].im < 0.0)
                .min_by(|&p, &q| {
                    (values[p].conj() - values[i])
                        .norm()
                        .total_cmp(&(values[q].conj() - values[i]).norm())
                })
            {
                if (values[j].conj() - values[i]).norm() < 1e-8 * scale {
                    let re = 0.5 * (values[i].re + values[j].re);
                    let im = 0.5 * (values[i].im - values[j].im);
                    values[i] = C64::new(re, im);
                    values[j] = C64::new(re, -im);
                }
            }
        }
    }
    values.sort_by(|p, q| q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im)));

    let ac: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    let at = ac.transpose();
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for (k, &lam) in values.iter().enumerate() {
        let r = inverse_iteration(&ac, lam, scale, k)?;
        let mut l = inverse_iteration(&at, lam, scale, k + n)?;
        let dot: C64 = l.iter().zip(&r).map(|(x, y)| x * y).sum();
        if dot.norm() < 1e-14 {
            return Err(Error::Conditioning(f64::INFINITY));
        }
        for v in l.iter_mut() {
            *v /= dot;
        }
        right.push(r);
        left.push(l);
    }

    let v = DMatrix::from_fn(n, n, |i, j| right[j][i]);
    let sv = v.svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    Ok(EigenPairs {
        values,
        right,
        left,
        condition,
    })
}

// Unit-norm solution of (A - lambda I) x = 0 by shifted inverse iteration.
fn inverse_iteration(a: &DMatrix<C64>, lam: C64, scale: f64, seed: usize) -> Result<Vec<C64>> {
    let n = a.nrows();
    let shift = lam + C64::new(1e-11 * scale, 1e-11 * scale);
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    // Deterministic, generic starting vector.
    let mut x = DVector::from_fn(n, |i, _| {
        C64::new(
            1.0 + 0.1 * ((i * 7 + seed * 3) % 11) as f64,
            0.05 * (i % 5) as f64,
        )
    });
    for _ in 0..4 {
        let y = lu.solve(&x).ok_or(Error::Conditioning(f64::INFINITY))?;
        let nrm = y.norm();
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::Conditioning(f64::INFINITY));
        }
        x = y / C64::new(nrm, 0.0);
    }
    Ok(x.iter().cloned().collect())
}

/// Banded matrix with LU factorization by partial pivoting.
///
/// Entry (i, j) is nonzero only for -kl <= j - i <= ku. Storage reserves
/// kl extra superdiagonals for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // Column offset j - i + kl lies in [0, width).
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` at (i, j); panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    /// Solves A x = b in place, destroying the matrix.
    pub fn solve_in_place(mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Solver {
                    residual: f64::INFINITY,
                    message: format!("singular banded matrix at column {k}"),
                });
            }
            let last_col = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, c) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, c);
                }
                b.swap(k, p);
            }
            let piv = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let f = self.data[ik] / piv;
                if f == 0.0 {
                    continue;
                }
                self.data[ik] = 0.0;
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    if kj != 0.0 {
                        let ij = self.idx(i, j);
                        self.data[ij] -= f * kj;
                    }
                }
                b[i] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + ku + kl).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=last_col {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_ordering() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = eigen_pairs(&a).unwrap();
        let re: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn eigenvectors_satisfy_definitions() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.2, 1.0, 0.1, 0.0, 0.3, 0.0, -2.0]);
        let e = eigen_pairs(&a).unwrap();
        let ac = a.map(|v| C64::new(v, 0.0));
        for k in 0..3 {
            let r = DVector::from_vec(e.right[k].clone());
            let l = DVector::from_vec(e.left[k].clone());
            assert!((&ac * &r - &r * e.values[k]).norm() < 1e-10);
            assert!((ac.transpose() * &l - &l * e.values[k]).norm() < 1e-10);
            for j in 0..3 {
                let d: C64 = e.left[k].iter().zip(&e.right[j]).map(|(x, y)| x * y).sum();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((d - want).norm() < 1e-9);
            }
        }
        assert!(e.values[0].im > 0.0 && e.values[1].im < 0.0);
    }

    #[test]
    fn banded_solve_matches_dense() {
        let n = 12;
        let (kl, ku) = (2, 3);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // Weak diagonal forces pivoting.
                let v = if i == j {
                    0.01
                } else {
                    ((i * 3 + j * 5) % 7) as f64 - 3.0
                };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        band.solve_in_place(&mut x).unwrap();
        let r = &dense * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.amax() < 1e-10);
    }
}

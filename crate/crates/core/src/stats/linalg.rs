//! Dense least squares via Householder QR.
//!
//! Small designs only (tens of regressors); no attempt at blocking or
//! parallelism. Rank deficiency is detected from the R diagonal and reported
//! with the offending design-column indices so callers can name the columns.

use crate::scalar::Scalar;

use super::StatError;

/// Column-major design matrix with an implicit leading intercept column.
pub(crate) struct Design<F> {
    n: usize,
    m: usize,
    /// Column-major `n * m`, first column all ones.
    data: Vec<F>,
}

impl<F: Scalar> Design<F> {
    /// Builds `[1 | cols...]`. All columns must have equal length.
    pub fn with_intercept(cols: &[&[F]]) -> Self {
        let n = cols.first().map_or(0, |c| c.len());
        let m = cols.len() + 1;
        let mut data = Vec::with_capacity(n * m);
        data.extend(std::iter::repeat_n(F::one(), n));
        for col in cols {
            debug_assert_eq!(col.len(), n);
            data.extend_from_slice(col);
        }
        Design { n, m, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `X * beta`.
    pub fn matvec(&self, beta: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.n];
        for (j, &b) in beta.iter().enumerate() {
            let col = &self.data[j * self.n..(j + 1) * self.n];
            for (o, &x) in out.iter_mut().zip(col) {
                *o = *o + b * x;
            }
        }
        out
    }

    /// Weighted least squares: minimizes `|| sqrt(w) .* (y - X b) ||`.
    /// `weights = None` solves the ordinary problem.
    pub fn least_squares(
        &self,
        y: &[F],
        weights: Option<&[F]>,
    ) -> Result<LeastSquares<F>, StatError> {
        assert_eq!(y.len(), self.n);
        let (n, m) = (self.n, self.m);
        if n < m {
            return Err(StatError::TooFewRows { rows: n, params: m });
        }

        // Working copies, row-scaled by sqrt(w) when weighted.
        let mut a = vec![F::zero(); n * m]; // column-major
        let mut rhs = y.to_vec();
        match weights {
            Some(w) => {
                assert_eq!(w.len(), n);
                for j in 0..m {
                    for i in 0..n {
                        a[j * n + i] = self.data[j * n + i] * w[i].sqrt();
                    }
                }
                for i in 0..n {
                    rhs[i] = rhs[i] * w[i].sqrt();
                }
            }
            None => a.copy_from_slice(&self.data),
        }

        // Householder QR, reducing `a` to R in the top m rows.
        let mut v = vec![F::zero(); n];
        for k in 0..m {
            let mut norm2 = F::zero();
            for i in k..n {
                let x = a[k * n + i];
                norm2 = norm2 + x * x;
            }
            let norm = norm2.sqrt();
            if norm == F::zero() {
                // Dependent column; leave R[k,k] = 0 for the rank check below.
                continue;
            }
            let akk = a[k * n + k];
            let alpha = if akk >= F::zero() { -norm } else { norm };
            let mut vnorm2 = F::zero();
            for i in k..n {
                let vi = if i == k { akk - alpha } else { a[k * n + i] };
                v[i] = vi;
                vnorm2 = vnorm2 + vi * vi;
            }
            if vnorm2 == F::zero() {
                continue;
            }
            // Apply H = I - 2 v v^T / (v^T v) to remaining columns and rhs.
            for j in k..m {
                let mut dot = F::zero();
                for i in k..n {
                    dot = dot + v[i] * a[j * n + i];
                }
                let s = F::cast(2.0) * dot / vnorm2;
                for i in k..n {
                    a[j * n + i] = a[j * n + i] - s * v[i];
                }
            }
            let mut dot = F::zero();
            for i in k..n {
                dot = dot + v[i] * rhs[i];
            }
            let s = F::cast(2.0) * dot / vnorm2;
            for i in k..n {
                rhs[i] = rhs[i] - s * v[i];
            }
            a[k * n + k] = alpha;
        }

        // Rank check on the R diagonal.
        let mut max_diag = F::zero();
        for k in 0..m {
            max_diag = max_diag.max(a[k * n + k].abs());
        }
        let tol = max_diag * F::cast(1e-10);
        let dependent: Vec<usize> = (0..m).filter(|&k| a[k * n + k].abs() <= tol).collect();
        if !dependent.is_empty() {
            return Err(StatError::RankDeficient { columns: dependent });
        }

        // Back-substitute R b = Q^T y.
        let mut coef = vec![F::zero(); m];
        for k in (0..m).rev() {
            let mut s = rhs[k];
            for j in (k + 1)..m {
                s = s - a[j * n + k] * coef[j];
            }
            coef[k] = s / a[k * n + k];
        }

        // (X'X)^{-1} = R^{-1} R^{-T} from the triangular inverse.
        let mut rinv = vec![F::zero(); m * m]; // column-major upper triangular
        for j in 0..m {
            rinv[j * m + j] = F::one() / a[j * n + j];
            for i in (0..j).rev() {
                let mut s = F::zero();
                for k in (i + 1)..=j {
                    s = s + a[k * n + i] * rinv[j * m + k];
                }
                rinv[j * m + i] = -s / a[i * n + i];
            }
        }
        let mut xtx_inv = vec![F::zero(); m * m]; // row-major symmetric
        for i in 0..m {
            for j in i..m {
                let mut s = F::zero();
                for k in j..m {
                    s = s + rinv[k * m + i] * rinv[k * m + j];
                }
                xtx_inv[i * m + j] = s;
                xtx_inv[j * m + i] = s;
            }
        }

        // Residual sum of squares against the original (unweighted) system.
        let fitted = self.matvec(&coef);
        let mut rss = F::zero();
        match weights {
            Some(w) => {
                for i in 0..n {
                    let r = y[i] - fitted[i];
                    rss = rss + w[i] * r * r;
                }
            }
            None => {
                for i in 0..n {
                    let r = y[i] - fitted[i];
                    rss = rss + r * r;
                }
            }
        }

        Ok(LeastSquares { coef, rss, xtx_inv })
    }
}

#[derive(Debug)]
pub(crate) struct LeastSquares<F> {
    /// Intercept first, then one coefficient per design column.
    pub coef: Vec<F>,
    pub rss: F,
    /// Row-major `m * m`; `(X'WX)^{-1}` for the weighted problem.
    pub xtx_inv: Vec<F>,
}

impl<F: Scalar> LeastSquares<F> {
    pub fn xtx_inv_diag(&self, j: usize, m: usize) -> F {
        self.xtx_inv[j * m + j]
    }
}

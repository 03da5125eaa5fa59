//! OLS and logistic node models.

use serde::{Deserialize, Serialize};

use crate::scalar::{mean, Scalar};

use super::dist::{chi_square_upper, f_upper_tail, normal_cdf, student_t_two_sided};
use super::linalg::Design;
use super::StatError;

/// Which regression family produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ols,
    Logit,
}

/// One fitted node model. Coefficient vectors are aligned with the regressor
/// order passed to the fit; the intercept is kept separate and never counted
/// as an edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionFit<F> {
    pub model_kind: ModelKind,
    pub intercept: F,
    pub coefficients: Vec<F>,
    pub std_errors: Vec<F>,
    pub per_coef_p: Vec<F>,
    /// R² for OLS, McFadden pseudo-R² for logit.
    pub r2: F,
    pub adj_r2: F,
    /// F-test (OLS) or likelihood-ratio test against intercept-only (logit).
    pub joint_p: F,
    pub bic: F,
    pub n: usize,
    pub converged: bool,
}

const LOGIT_MAX_ITER: usize = 100;
const LOGIT_LL_TOL: f64 = 1e-8;
/// Coefficients beyond this magnitude are treated as divergence toward
/// separation rather than a usable maximum-likelihood estimate.
const LOGIT_COEF_BOUND: f64 = 1e3;

/// Ordinary least squares of `y` on `xcols` plus an intercept.
pub fn fit_ols<F: Scalar>(y: &[F], xcols: &[&[F]]) -> Result<RegressionFit<F>, StatError> {
    let n = y.len();
    let p = xcols.len();
    if n <= p + 1 {
        return Err(StatError::TooFewRows {
            rows: n,
            params: p + 1,
        });
    }
    let design = Design::with_intercept(xcols);
    let ls = design.least_squares(y, None)?;

    let nf = F::from_count(n);
    let pf = F::from_count(p);
    let dof = F::from_count(n - p - 1);

    let ybar = mean(y);
    let tss: F = y.iter().map(|&v| (v - ybar) * (v - ybar)).sum();
    let rss = ls.rss.max(F::zero());

    let r2 = if tss > F::zero() {
        (F::one() - rss / tss).max(F::zero()).min(F::one())
    } else {
        F::zero()
    };
    let adj_r2 = F::one() - (F::one() - r2) * (nf - F::one()) / dof;

    let sigma2 = rss / dof;
    let m = design.m();
    let mut std_errors = Vec::with_capacity(p);
    let mut per_coef_p = Vec::with_capacity(p);
    for j in 1..m {
        let se = (sigma2 * ls.xtx_inv_diag(j, m)).sqrt();
        let t = if se > F::zero() {
            ls.coef[j] / se
        } else if ls.coef[j] == F::zero() {
            F::zero()
        } else {
            F::infinity()
        };
        std_errors.push(se);
        per_coef_p.push(student_t_two_sided(t, dof));
    }

    let joint_p = if rss > F::zero() && p > 0 {
        let f = ((tss - rss) / pf) / (rss / dof);
        f_upper_tail(f.max(F::zero()), pf, dof)
    } else if p == 0 {
        F::one()
    } else {
        F::zero() // exact fit
    };

    let bic = nf * (rss.max(F::cast(1e-300)) / nf).ln() + F::from_count(p + 1) * nf.ln();

    Ok(RegressionFit {
        model_kind: ModelKind::Ols,
        intercept: ls.coef[0],
        coefficients: ls.coef[1..].to_vec(),
        std_errors,
        per_coef_p,
        r2,
        adj_r2,
        joint_p,
        bic,
        n,
        converged: true,
    })
}

/// Logistic regression of a 0/1 response on `xcols` plus an intercept,
/// fitted by iteratively reweighted least squares.
///
/// Non-convergence (including divergence under separation) is reported via
/// `converged = false` with the last iterate's values left in place; callers
/// must treat such fits as unusable.
pub fn fit_logit<F: Scalar>(y: &[F], xcols: &[&[F]]) -> Result<RegressionFit<F>, StatError> {
    let n = y.len();
    let p = xcols.len();
    if n <= p + 1 {
        return Err(StatError::TooFewRows {
            rows: n,
            params: p + 1,
        });
    }
    let ones = y.iter().filter(|&&v| v == F::one()).count();
    let zeros = y.iter().filter(|&&v| v == F::zero()).count();
    if ones + zeros != n {
        return Err(StatError::NotBinary);
    }
    if ones == 0 || zeros == 0 {
        return Err(StatError::SingleClass);
    }

    let design = Design::with_intercept(xcols);
    // Unweighted rank probe so a collinear design errors out rather than
    // masquerading as non-convergence.
    design.least_squares(y, None)?;

    let m = design.m();
    let nf = F::from_count(n);
    let clamp_lo = F::cast(1e-10);
    let clamp_hi = F::one() - clamp_lo;

    let mut beta = vec![F::zero(); m];
    let mut ll_prev = F::neg_infinity();
    let mut converged = false;
    let mut last = None;

    for _ in 0..LOGIT_MAX_ITER {
        let eta = design.matvec(&beta);
        let mu: Vec<F> = eta
            .iter()
            .map(|&e| {
                (F::one() / (F::one() + (-e).exp()))
                    .max(clamp_lo)
                    .min(clamp_hi)
            })
            .collect();
        let w: Vec<F> = mu.iter().map(|&m| m * (F::one() - m)).collect();
        let z: Vec<F> = eta
            .iter()
            .zip(y.iter().zip(&mu))
            .map(|(&e, (&yi, &mi))| e + (yi - mi) / (mi * (F::one() - mi)))
            .collect();
        let ls = match design.least_squares(&z, Some(&w)) {
            Ok(ls) => ls,
            // Weight collapse under separation can make X'WX singular.
            Err(StatError::RankDeficient { .. }) => break,
            Err(e) => return Err(e),
        };
        beta = ls.coef.clone();
        let ll = log_likelihood(&design, &beta, y, clamp_lo, clamp_hi);
        last = Some(ls);
        if (ll - ll_prev).abs() < F::cast(LOGIT_LL_TOL) {
            converged = true;
            ll_prev = ll;
            break;
        }
        ll_prev = ll;
    }

    if beta.iter().any(|b| b.abs() > F::cast(LOGIT_COEF_BOUND)) {
        converged = false;
    }
    // Perfect prediction means the likelihood is maximized at infinity; the
    // iterate that stopped moving is not a usable MLE.
    if converged {
        let sep_tol = F::cast(1e-6);
        let separated = design.matvec(&beta).iter().zip(y).all(|(&e, &yi)| {
            let mu = F::one() / (F::one() + (-e).exp());
            (yi - mu).abs() < sep_tol
        });
        if separated {
            converged = false;
        }
    }

    let ll = if ll_prev.is_finite() {
        ll_prev
    } else {
        F::cast(-1e300)
    };
    let pbar = F::from_count(ones) / nf;
    let ll0 = nf * (pbar * pbar.ln() + (F::one() - pbar) * (F::one() - pbar).ln());

    let (std_errors, per_coef_p, intercept, coefficients) = match &last {
        Some(ls) => {
            let mut ses = Vec::with_capacity(p);
            let mut ps = Vec::with_capacity(p);
            #[allow(clippy::needless_range_loop)]
            for j in 1..m {
                let se = ls.xtx_inv_diag(j, m).max(F::zero()).sqrt();
                let zstat = if se > F::zero() {
                    beta[j] / se
                } else {
                    F::zero()
                };
                ses.push(se);
                ps.push((F::cast(2.0) * normal_cdf(-zstat.abs())).min(F::one()));
            }
            (ses, ps, beta[0], beta[1..].to_vec())
        }
        None => (
            vec![F::zero(); p],
            vec![F::one(); p],
            F::zero(),
            vec![F::zero(); p],
        ),
    };

    let r2 = if ll0 < F::zero() {
        (F::one() - ll / ll0)
            .max(F::zero())
            .min(F::one() - F::epsilon())
    } else {
        F::zero()
    };
    // McFadden's adjustment: penalize by the parameter count.
    let adj_r2 = if ll0 < F::zero() {
        F::one() - (ll - F::from_count(p + 1)) / ll0
    } else {
        F::zero()
    };
    let lr = (F::cast(2.0) * (ll - ll0)).max(F::zero());
    let joint_p = chi_square_upper(lr, F::from_count(p.max(1)));
    let bic = -F::cast(2.0) * ll + F::from_count(p + 1) * nf.ln();

    Ok(RegressionFit {
        model_kind: ModelKind::Logit,
        intercept,
        coefficients,
        std_errors,
        per_coef_p,
        r2,
        adj_r2,
        joint_p,
        bic,
        n,
        converged,
    })
}

fn log_likelihood<F: Scalar>(design: &Design<F>, beta: &[F], y: &[F], lo: F, hi: F) -> F {
    design
        .matvec(beta)
        .iter()
        .zip(y)
        .map(|(&e, &yi)| {
            let mu = (F::one() / (F::one() + (-e).exp())).max(lo).min(hi);
            yi * mu.ln() + (F::one() - yi) * (F::one() - mu).ln()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = fit_ols(&y, &[&x]).unwrap();
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(fit.joint_p < 1e-12);
    }

    #[test]
    fn matches_frozen_reference_fit() {
        // Two-regressor instance with externally computed coefficients,
        // standard errors, p-values, R² and BIC.
        let x1: [f64; 8] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let x2: [f64; 8] = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
        let y: [f64; 8] = [3.1, 4.2, 8.3, 9.1, 13.2, 14.1, 18.3, 19.2];
        let fit = fit_ols(&y, &[&x1, &x2]).unwrap();
        assert!((fit.intercept - -0.11874999999999813).abs() < 1e-10);
        assert!((fit.coefficients[0] - 1.71875).abs() < 1e-10);
        assert!((fit.coefficients[1] - 0.7937500000000002).abs() < 1e-10);
        assert!((fit.std_errors[0] - 0.02864109809347407).abs() < 1e-10);
        assert!((fit.per_coef_p[0] - 2.431629375938514e-8).abs() < 1e-15);
        assert!((fit.per_coef_p[1] - 1.1449699441300116e-6).abs() < 1e-13);
        assert!((fit.r2 - 0.9998770888745766).abs() < 1e-12);
        assert!((fit.adj_r2 - 0.9998279244244073).abs() < 1e-12);
        assert!((fit.joint_p - 1.6748579851572064e-10).abs() < 1e-17);
        assert!((fit.bic - -38.12309493079695).abs() < 1e-9);
    }

    #[test]
    fn independent_regressor_gives_uniform_joint_p() {
        let mut low = 0usize;
        let mut sum = 0.0;
        let reps = 200;
        for seed in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = normals(&mut rng, 1000);
            let y = normals(&mut rng, 1000);
            let fit = fit_ols(&y, &[&x]).unwrap();
            assert!(fit.r2 < 0.05);
            if fit.joint_p < 0.05 {
                low += 1;
            }
            sum += fit.joint_p;
        }
        let frac = low as f64 / reps as f64;
        assert!(frac > 0.005 && frac < 0.12, "rejection rate {frac}");
        let avg = sum / reps as f64;
        assert!((avg - 0.5).abs() < 0.1, "mean p {avg}");
    }

    #[test]
    fn duplicate_regressors_error() {
        let x: Vec<f64> = (0..20).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        assert!(matches!(
            fit_ols(&y, &[&x, &x]),
            Err(StatError::RankDeficient { .. })
        ));
    }

    #[test]
    fn logit_matches_frozen_reference_fit() {
        let x: [f64; 20] = [
            -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, -2.2, 1.8, 0.3, -0.7, 1.2, -1.9,
            2.1, 0.9, -0.4, -1.1,
        ];
        let y: [f64; 20] = [
            0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0,
            1.0, 1.0, 0.0,
        ];
        let fit = fit_logit(&y, &[&x]).unwrap();
        assert!(fit.converged);
        assert!((fit.intercept - 0.29662286640452884).abs() < 1e-6);
        assert!((fit.coefficients[0] - 2.367815275953185).abs() < 1e-6);
        assert!((fit.std_errors[0] - 1.041217552559451).abs() < 1e-5);
        assert!((fit.per_coef_p[0] - 0.02296098851423615).abs() < 1e-6);
        assert!((fit.r2 - 0.6053593916827213).abs() < 1e-7);
        assert!((fit.joint_p - 4.46467899944893e-5).abs() < 1e-10);
        assert!((fit.bic - 16.854165349686067).abs() < 1e-6);
    }

    #[test]
    fn logit_recovers_unit_slope() {
        let mut errs: Vec<f64> = (0..20)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
                let x = normals(&mut rng, 5000);
                let y: Vec<f64> = x
                    .iter()
                    .map(|&xv| {
                        let p = 1.0 / (1.0 + (-xv_f(xv)).exp());
                        let u: f64 = rand::Rng::random(&mut rng);
                        if u < p {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let fit = fit_logit(&y, &[&x]).unwrap();
                (fit.coefficients[0] - 1.0).abs()
            })
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errs[errs.len() / 2];
        assert!(median <= 0.15, "median slope error {median}");
    }

    fn xv_f(x: f64) -> f64 {
        x // logit P = 0 + 1*x
    }

    #[test]
    fn perfectly_separated_data_does_not_converge() {
        let x: Vec<f64> = (-10..10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
        let fit = fit_logit(&y, &[&x]).unwrap();
        assert!(!fit.converged);
    }

    #[test]
    fn uninformative_regressor_low_pseudo_r2() {
        let mut r2s: Vec<f64> = (0..11)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(50 + seed);
                let x = normals(&mut rng, 2000);
                let y: Vec<f64> = (0..2000)
                    .map(|_| {
                        if rand::Rng::random::<f64>(&mut rng) < 0.5 {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                fit_logit(&y, &[&x]).unwrap().r2
            })
            .collect();
        r2s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(r2s[r2s.len() / 2] < 0.01);
    }

    #[test]
    fn single_class_response_errors() {
        let x: Vec<f64> = (0..30).map(|v| v as f64).collect();
        let y = vec![1.0; 30];
        assert!(matches!(fit_logit(&y, &[&x]), Err(StatError::SingleClass)));
    }

    #[test]
    fn bic_rewards_a_regressor_that_earns_its_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200;
        let x1 = normals(&mut rng, n);
        let x2 = normals(&mut rng, n);
        let noise = normals(&mut rng, n);
        let y: Vec<f64> = (0..n)
            .map(|i| x1[i] + 0.8 * x2[i] + 0.5 * noise[i])
            .collect();
        let small = fit_ols(&y, &[&x1]).unwrap();
        let full = fit_ols(&y, &[&x1, &x2]).unwrap();
        assert!(full.bic < small.bic, "informative regressor lowers BIC");

        // Both values match a direct recomputation from the definition.
        for (fit, p) in [(&small, 1usize), (&full, 2usize)] {
            let mut rss = 0.0;
            for i in 0..n {
                let mut pred = fit.intercept;
                pred += fit.coefficients[0] * x1[i];
                if p == 2 {
                    pred += fit.coefficients[1] * x2[i];
                }
                let r = y[i] - pred;
                rss += r * r;
            }
            let direct = n as f64 * (rss / n as f64).ln() + (p + 1) as f64 * (n as f64).ln();
            assert!((fit.bic - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn adj_r2_never_exceeds_r2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x1 = normals(&mut rng, 80);
        let x2 = normals(&mut rng, 80);
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + 0.2 * b).collect();
        let fit = fit_ols(&y, &[&x1, &x2]).unwrap();
        assert!(fit.adj_r2 <= fit.r2);
    }
}

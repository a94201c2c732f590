//! Random-intercept linear mixed model estimated by REML.
//!
//! `y = X b + Z u + e`, `u_j ~ N(0, sigma_u^2)` one intercept per question,
//! `e ~ N(0, sigma_e^2)`. The likelihood is profiled over the variance ratio
//! `lambda = sigma_u^2 / sigma_e^2`: for fixed lambda the grouped structure
//! gives closed-form GLS quantities via `V_j^-1 = I - lambda/(1+lambda n_j) 11'`,
//! and lambda itself is found by a bracketed golden-section search
//! (tolerance 1e-8). Fixed-effect standard errors come from the GLS
//! covariance; no clustered correction is applied here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stats::design::{ObservationTable, CONDITION_COL};
use crate::stats::ttest::t_to_p;

/// REML fit summary for the jailbreak coefficient.
#[derive(Debug, Clone)]
pub struct MixedModelResult {
    pub beta: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    pub p: f64,
    pub sigma_u2: f64,
    pub sigma_e2: f64,
    /// Profiled variance ratio at the optimum.
    pub lambda: f64,
    pub n: usize,
    pub n_groups: usize,
    /// All fixed-effect coefficients by name.
    pub coefficients: Vec<(String, f64)>,
}

/// GLS quantities at a fixed variance ratio.
struct ProfilePoint {
    beta: DVector<f64>,
    sigma_e2: f64,
    /// (X' V*^-1 X)^-1, to be scaled by sigma_e2 for the covariance.
    xtvx_inv: DMatrix<f64>,
    /// -2 * profiled REML log-likelihood, up to an additive constant.
    deviance: f64,
}

struct Grouped {
    /// Row indices per group.
    groups: Vec<Vec<usize>>,
}

fn group_rows(group_ids: &[usize]) -> Grouped {
    let g = group_ids.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); g];
    for (i, &gi) in group_ids.iter().enumerate() {
        groups[gi].push(i);
    }
    Grouped { groups }
}

fn profile_at(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    grouped: &Grouped,
    lambda: f64,
) -> Result<ProfilePoint> {
    let n = x.nrows();
    let k = x.ncols();
    let mut xtvx = DMatrix::<f64>::zeros(k, k);
    let mut xtvy = DVector::<f64>::zeros(k);
    let mut ytvy = 0.0f64;
    let mut logdet_v = 0.0f64;

    for rows in &grouped.groups {
        let nj = rows.len() as f64;
        let c = lambda / (1.0 + lambda * nj);
        logdet_v += (1.0 + lambda * nj).ln();

        let mut xt1 = DVector::<f64>::zeros(k);
        let mut yt1 = 0.0f64;
        for &i in rows {
            for j in 0..k {
                let xij = x[(i, j)];
                xtvy[j] += xij * y[i];
                for j2 in 0..=j {
                    xtvx[(j, j2)] += xij * x[(i, j2)];
                }
                xt1[j] += xij;
            }
            ytvy += y[i] * y[i];
            yt1 += y[i];
        }
        for j in 0..k {
            for j2 in 0..=j {
                xtvx[(j, j2)] -= c * xt1[j] * xt1[j2];
            }
            xtvy[j] -= c * xt1[j] * yt1;
        }
        ytvy -= c * yt1 * yt1;
    }
    for j in 0..k {
        for j2 in 0..j {
            xtvx[(j2, j)] = xtvx[(j, j2)];
        }
    }

    let xtvx_inv = xtvx.clone().try_inverse().ok_or(Error::SingularGram)?;
    let beta = &xtvx_inv * &xtvy;
    // r' V^-1 r with beta solving the GLS normal equations.
    let rss = (ytvy - beta.dot(&xtvy)).max(f64::MIN_POSITIVE);
    let df = (n - k) as f64;
    let sigma_e2 = rss / df;
    let logdet_xtvx = xtvx
        .lu()
        .determinant()
        .max(f64::MIN_POSITIVE)
        .ln();
    let deviance = df * rss.ln() + logdet_v + logdet_xtvx;

    Ok(ProfilePoint {
        beta,
        sigma_e2,
        xtvx_inv,
        deviance,
    })
}

const LAMBDA_TOL: f64 = 1e-8;
const LAMBDA_CAP: f64 = 1e7;
const MAX_ITERS: usize = 400;

/// Minimize the profiled REML deviance over lambda: a coarse log-spaced grid
/// locates the basin, then golden-section refines the bracketing interval to
/// [`LAMBDA_TOL`].
fn search_lambda(x: &DMatrix<f64>, y: &DVector<f64>, grouped: &Grouped) -> Result<f64> {
    let dev = |l: f64| profile_at(x, y, grouped, l).map(|p| p.deviance);

    let mut grid = vec![0.0f64];
    let mut l = 1e-6;
    while l <= LAMBDA_CAP {
        grid.push(l);
        l *= 2.0;
    }
    let mut best = 0usize;
    let mut best_f = f64::INFINITY;
    let mut values = Vec::with_capacity(grid.len());
    for &g in &grid {
        let f = dev(g)?;
        values.push(f);
        if f < best_f {
            best_f = f;
            best = values.len() - 1;
        }
    }
    if best == grid.len() - 1 {
        return Err(Error::NonConvergence {
            lo: grid[best - 1],
            hi: LAMBDA_CAP,
        });
    }
    if best == 0 {
        // Boundary optimum: no between-question variance.
        return Ok(0.0);
    }

    let mut lo = grid[best - 1];
    let mut hi = grid[best + 1];
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let mut fa = dev(a)?;
    let mut fb = dev(b)?;
    let mut iters = 0;
    while (hi - lo) > LAMBDA_TOL {
        iters += 1;
        if iters > MAX_ITERS {
            return Err(Error::NonConvergence { lo, hi });
        }
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = dev(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = dev(b)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(if dev(mid)? <= dev(0.0)? { mid } else { 0.0 })
}

/// Core REML fit on an arbitrary design matrix with a grouping factor.
pub fn reml_random_intercept(
    x: &DMatrix<f64>,
    names: &[String],
    y: &DVector<f64>,
    group_ids: &[usize],
) -> Result<MixedModelResult> {
    let n = x.nrows();
    let k = x.ncols();
    if y.len() != n || group_ids.len() != n {
        return Err(Error::DimMismatch(format!(
            "X has {n} rows, y {}, groups {}",
            y.len(),
            group_ids.len()
        )));
    }
    if n <= k {
        return Err(Error::Config(format!(
            "need more observations ({n}) than parameters ({k})"
        )));
    }
    let grouped = group_rows(group_ids);
    let lambda = search_lambda(x, y, &grouped)?;
    let point = profile_at(x, y, &grouped, lambda)?;
    summarize(names, n, grouped.groups.len(), lambda, point)
}

/// Evaluate the fit at a fixed variance ratio (no search). With
/// `lambda = 0` this is exactly OLS on the same design.
pub fn reml_at_fixed_ratio(
    x: &DMatrix<f64>,
    names: &[String],
    y: &DVector<f64>,
    group_ids: &[usize],
    lambda: f64,
) -> Result<MixedModelResult> {
    let grouped = group_rows(group_ids);
    let point = profile_at(x, y, &grouped, lambda)?;
    summarize(names, x.nrows(), grouped.groups.len(), lambda, point)
}

fn summarize(
    names: &[String],
    n: usize,
    n_groups: usize,
    lambda: f64,
    point: ProfilePoint,
) -> Result<MixedModelResult> {
    let k = names.len();
    let idx = names
        .iter()
        .position(|t| t == CONDITION_COL)
        .unwrap_or(0);
    let beta = point.beta[idx];
    let se = (point.sigma_e2 * point.xtvx_inv[(idx, idx)]).max(0.0).sqrt();
    let df = (n - k) as f64;
    let dist = statrs::distribution::StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    use statrs::distribution::ContinuousCDF;
    let crit = dist.inverse_cdf(0.975);
    let p = if se > 0.0 { t_to_p(beta / se, df) } else { 1.0 };
    Ok(MixedModelResult {
        beta,
        se,
        ci95: (beta - crit * se, beta + crit * se),
        p,
        sigma_u2: lambda * point.sigma_e2,
        sigma_e2: point.sigma_e2,
        lambda,
        n,
        n_groups,
        coefficients: names
            .iter()
            .cloned()
            .zip(point.beta.iter().copied())
            .collect(),
    })
}

/// `score ~ condition + model + (1 | question)` via REML.
pub fn fit_mixed_random_intercept(table: &ObservationTable) -> Result<MixedModelResult> {
    let questions = table.questions();
    if questions.len() < 3 {
        return Err(Error::Config(format!(
            "mixed model needs at least 3 questions, got {}",
            questions.len()
        )));
    }
    let models = table.models();
    let n = table.len();
    let mut names = vec!["intercept".to_string(), CONDITION_COL.to_string()];
    for m in models.iter().skip(1) {
        names.push(format!("model:{m}"));
    }
    let k = names.len();
    let mut x = DMatrix::<f64>::zeros(n, k);
    for (i, r) in table.rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = f64::from(u8::from(r.condition));
        for (mj, m) in models.iter().skip(1).enumerate() {
            x[(i, 2 + mj)] = f64::from(u8::from(&r.model_id == m));
        }
    }
    let q_index: std::collections::HashMap<&str, usize> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| (q.as_str(), i))
        .collect();
    let group_ids: Vec<usize> = table
        .rows
        .iter()
        .map(|r| q_index[r.question_id.as_str()])
        .collect();
    let y = table.outcomes();
    reml_random_intercept(&x, &names, &y, &group_ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::design::Observation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn balanced_one_way(
        seed: u64,
        q: usize,
        m: usize,
        sigma_u: f64,
        sigma_e: f64,
    ) -> (DMatrix<f64>, DVector<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nu = Normal::new(0.0, sigma_u).unwrap();
        let ne = Normal::new(0.0, sigma_e).unwrap();
        let n = q * m;
        let x = DMatrix::from_element(n, 1, 1.0);
        let mut y = DVector::zeros(n);
        let mut groups = Vec::with_capacity(n);
        let mut row = 0;
        for j in 0..q {
            let u = nu.sample(&mut rng);
            for _ in 0..m {
                y[row] = 5.0 + u + ne.sample(&mut rng);
                groups.push(j);
                row += 1;
            }
        }
        (x, y, groups)
    }

    /// ANOVA closed form for balanced one-way random effects: REML equals
    /// the method-of-moments estimators when the between component is
    /// positive.
    fn anova_components(y: &DVector<f64>, q: usize, m: usize) -> (f64, f64) {
        let n = q * m;
        let grand = y.iter().sum::<f64>() / n as f64;
        let mut msb = 0.0;
        let mut msw = 0.0;
        for j in 0..q {
            let block: Vec<f64> = (0..m).map(|i| y[j * m + i]).collect();
            let mean = block.iter().sum::<f64>() / m as f64;
            msb += (mean - grand).powi(2);
            for v in block {
                msw += (v - mean).powi(2);
            }
        }
        msb *= m as f64 / (q - 1) as f64;
        msw /= (q * (m - 1)) as f64;
        (msw, ((msb - msw) / m as f64).max(0.0))
    }

    #[test]
    fn balanced_case_matches_closed_form() {
        let (q, m) = (12, 8);
        let (x, y, groups) = balanced_one_way(11, q, m, 1.5, 0.7);
        let names = vec!["intercept".to_string()];
        let fit = reml_random_intercept(&x, &names, &y, &groups).unwrap();
        let (sigma_e2, sigma_u2) = anova_components(&y, q, m);
        assert!(
            (fit.sigma_e2 - sigma_e2).abs() < 1e-4,
            "sigma_e2 {} vs {}",
            fit.sigma_e2,
            sigma_e2
        );
        assert!(
            (fit.sigma_u2 - sigma_u2).abs() < 1e-4,
            "sigma_u2 {} vs {}",
            fit.sigma_u2,
            sigma_u2
        );
    }

    #[test]
    fn zero_between_variance_collapses_to_ols() {
        let (x, y, groups) = balanced_one_way(13, 10, 6, 0.0, 1.0);
        let names = vec!["intercept".to_string()];
        let fit = reml_random_intercept(&x, &names, &y, &groups).unwrap();
        assert!(fit.sigma_u2 <= 0.05, "sigma_u2 = {}", fit.sigma_u2);
        let ols = reml_at_fixed_ratio(&x, &names, &y, &groups, 0.0).unwrap();
        // beta within 2 simulated SEs of the OLS fit
        assert!((fit.beta - ols.beta).abs() <= 2.0 * ols.se);
    }

    #[test]
    fn fixed_zero_ratio_equals_ols_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 40;
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-1.0..1.0) });
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let groups: Vec<usize> = (0..n).map(|i| i % 5).collect();
        let names = vec!["intercept".to_string(), "slope".to_string()];
        let mixed = reml_at_fixed_ratio(&x, &names, &y, &groups, 0.0).unwrap();
        let beta_ols = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y;
        for (j, (_, b)) in mixed.coefficients.iter().enumerate() {
            assert!((b - beta_ols[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn condition_effect_recovered_with_random_intercepts() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let nu = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        for q in 0..12 {
            let u: f64 = nu.sample(&mut rng);
            for _ in 0..6 {
                for condition in [false, true] {
                    let y = 1.0 + if condition { 2.0 } else { 0.0 } + u
                        + rng.gen_range(-0.3..0.3);
                    rows.push(Observation {
                        outcome: y,
                        condition,
                        model_id: "m0".into(),
                        question_id: format!("q{q}"),
                    });
                }
            }
        }
        let fit = fit_mixed_random_intercept(&ObservationTable::new(rows)).unwrap();
        assert!((fit.beta - 2.0).abs() < 0.1, "beta = {}", fit.beta);
        assert!(fit.p < 1e-6);
        assert!(fit.sigma_u2 > 0.3);
    }

    #[test]
    fn too_few_questions_rejected() {
        let rows = vec![
            Observation {
                outcome: 1.0,
                condition: false,
                model_id: "m".into(),
                question_id: "q1".into(),
            },
            Observation {
                outcome: 2.0,
                condition: true,
                model_id: "m".into(),
                question_id: "q2".into(),
            },
        ];
        assert!(fit_mixed_random_intercept(&ObservationTable::new(rows)).is_err());
    }
}

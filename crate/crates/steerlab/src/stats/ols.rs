//! Fixed-effects OLS with CR1 cluster-robust standard errors, and pairwise
//! interaction contrasts via reference rotation.
//!
//! Point estimates come from a thin-QR solve. Inference uses the sandwich
//! estimator `(X'X)^-1 (sum_g X_g' e_g e_g' X_g) (X'X)^-1` with the CR1
//! small-sample factor `G/(G-1) * (n-1)/(n-k)`, and a t reference
//! distribution with `G - 1` degrees of freedom.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stats::design::{build_design, collinear_columns, Design, ObservationTable, CONDITION_COL};

/// One estimated coefficient with cluster-robust inference.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub term: String,
    pub beta: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    pub p: f64,
    /// FDR-adjusted q-value; filled in when the result joins a table family.
    pub q: Option<f64>,
    pub n: usize,
    pub n_clusters: usize,
}

/// A fitted fixed-effects model.
#[derive(Debug, Clone)]
pub struct FixedEffectsFit {
    /// Inference for the jailbreak indicator.
    pub effect: RegressionResult,
    /// All coefficients by design-column name.
    pub coefficients: Vec<(String, f64)>,
    pub residuals: DVector<f64>,
    pub design: Design,
}

fn qr_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * y;
    r.solve_upper_triangular(&qty).ok_or(Error::SingularGram)
}

/// CR1 sandwich covariance clustered on the given ids.
///
/// Symmetric positive semidefinite by construction:
/// `A^-1 (sum_g s_g s_g') A^-1 * G/(G-1) * (n-1)/(n-k)` with
/// `s_g = X_g' e_g` and `A = X'X`.
pub fn cluster_robust_covariance(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    cluster_ids: &[usize],
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let k = x.ncols();
    if residuals.len() != n || cluster_ids.len() != n {
        return Err(Error::DimMismatch(format!(
            "X has {n} rows, residuals {}, clusters {}",
            residuals.len(),
            cluster_ids.len()
        )));
    }
    let g = cluster_ids.iter().copied().max().map_or(0, |m| m + 1);
    if g < 2 {
        return Err(Error::Config("need at least 2 clusters".into()));
    }
    if n <= k {
        return Err(Error::Config(format!(
            "need more observations ({n}) than parameters ({k})"
        )));
    }

    let xtx = x.transpose() * x;
    let xtx_inv = xtx.clone().try_inverse().ok_or(Error::SingularGram)?;

    // Per-cluster score vectors s_g = X_g' e_g, accumulated as outer products.
    let mut scores = vec![DVector::<f64>::zeros(k); g];
    for i in 0..n {
        let gi = cluster_ids[i];
        let e = residuals[i];
        for j in 0..k {
            scores[gi][j] += x[(i, j)] * e;
        }
    }
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for s in &scores {
        meat += s * s.transpose();
    }

    let cr1 = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64));
    Ok(&xtx_inv * meat * &xtx_inv * cr1)
}

fn infer(
    term: &str,
    beta: f64,
    var: f64,
    n: usize,
    n_clusters: usize,
) -> RegressionResult {
    let se = var.max(0.0).sqrt();
    let df = (n_clusters - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let (p, ci) = if se > 0.0 {
        let t = beta / se;
        let p = 2.0 * (1.0 - dist.cdf(t.abs()));
        let crit = dist.inverse_cdf(0.975);
        (p, (beta - crit * se, beta + crit * se))
    } else {
        (if beta == 0.0 { 1.0 } else { 0.0 }, (beta, beta))
    };
    RegressionResult {
        term: term.to_string(),
        beta,
        se,
        ci95: ci,
        p,
        q: None,
        n,
        n_clusters,
    }
}

fn fit_with_design(table: &ObservationTable, design: Design) -> Result<FixedEffectsFit> {
    let offenders = collinear_columns(&design);
    if !offenders.is_empty() {
        return Err(Error::RankDeficient(offenders));
    }
    let y = table.outcomes();
    let beta = qr_solve(&design.x, &y)?;
    let residuals = &y - &design.x * &beta;
    let clusters = table.cluster_ids();
    let cov = cluster_robust_covariance(&design.x, &residuals, &clusters)?;

    let idx = design
        .names
        .iter()
        .position(|n| n == CONDITION_COL)
        .expect("design always contains the condition column");
    let effect = infer(
        CONDITION_COL,
        beta[idx],
        cov[(idx, idx)],
        table.len(),
        table.num_clusters(),
    );
    let coefficients = design
        .names
        .iter()
        .cloned()
        .zip(beta.iter().copied())
        .collect();
    Ok(FixedEffectsFit {
        effect,
        coefficients,
        residuals,
        design,
    })
}

/// `Y = a + b jailbreak + model FE + question FE`, CR1 clustered on
/// model x question.
pub fn fit_fixed_effects(table: &ObservationTable) -> Result<FixedEffectsFit> {
    table.validate()?;
    let design = build_design(table, None, true)?;
    fit_with_design(table, design)
}

/// One interaction coefficient: the differential jailbreak effect of
/// `model` relative to `reference`.
#[derive(Debug, Clone)]
pub struct InteractionContrast {
    pub model: String,
    pub reference: String,
    pub delta_beta: f64,
    pub se: f64,
    pub p: f64,
    pub q: Option<f64>,
}

/// Fit the interaction specification against a fixed reference model and
/// return one contrast per non-reference model.
pub fn fit_interactions(
    table: &ObservationTable,
    reference_model: &str,
) -> Result<Vec<InteractionContrast>> {
    table.validate()?;
    let models = table.models();
    if models.len() < 2 {
        return Err(Error::Config(
            "interaction contrasts need at least 2 models".into(),
        ));
    }
    let design = build_design(table, Some(reference_model), true)?;
    let fit = fit_with_design(table, design)?;
    let clusters = table.cluster_ids();
    let cov = cluster_robust_covariance(&fit.design.x, &fit.residuals, &clusters)?;

    let mut out = Vec::new();
    for (j, name) in fit.design.names.iter().enumerate() {
        if let Some(model) = name.strip_prefix("jailbreak_x_model:") {
            let beta = fit.coefficients[j].1;
            let r = infer(name, beta, cov[(j, j)], table.len(), table.num_clusters());
            out.push(InteractionContrast {
                model: model.to_string(),
                reference: reference_model.to_string(),
                delta_beta: beta,
                se: r.se,
                p: r.p,
                q: None,
            });
        }
    }
    Ok(out)
}

/// All pairwise contrasts, obtained by re-fitting with a rotated reference.
/// For each unordered model pair `{A, B}` (A > B in sort order) the reported
/// contrast is `effect(A) - effect(B)`; rotating the reference flips the
/// sign exactly.
pub fn pairwise_contrasts(table: &ObservationTable) -> Result<Vec<InteractionContrast>> {
    let models = table.models();
    let mut out = Vec::new();
    for (bi, b) in models.iter().enumerate() {
        let contrasts = fit_interactions(table, b)?;
        for a in models.iter().skip(bi + 1) {
            let hit = contrasts
                .iter()
                .find(|c| &c.model == a)
                .expect("each non-reference model has a contrast");
            out.push(hit.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::design::Observation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Simulated table with known ATE, model effects, and question effects.
    pub(crate) fn simulate(
        seed: u64,
        n_models: usize,
        n_questions: usize,
        reps: usize,
        ate: f64,
        per_model_extra: &[f64],
        noise_sd: f64,
    ) -> ObservationTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model_effects: Vec<f64> = (0..n_models).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let question_effects: Vec<f64> =
            (0..n_questions).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut rows = Vec::new();
        for m in 0..n_models {
            for q in 0..n_questions {
                for _ in 0..reps {
                    for condition in [false, true] {
                        let mut y = model_effects[m] + question_effects[q];
                        if condition {
                            y += ate + per_model_extra.get(m).copied().unwrap_or(0.0);
                        }
                        y += rng.gen_range(-noise_sd..noise_sd);
                        rows.push(Observation {
                            outcome: y,
                            condition,
                            model_id: format!("m{m}"),
                            question_id: format!("q{q}"),
                        });
                    }
                }
            }
        }
        ObservationTable::new(rows)
    }

    #[test]
    fn recovers_known_treatment_effect() {
        let t = simulate(1, 3, 10, 3, 2.0, &[0.0, 0.0, 0.0], 0.1);
        let fit = fit_fixed_effects(&t).unwrap();
        assert!(
            fit.effect.beta > 1.9 && fit.effect.beta < 2.1,
            "beta = {}",
            fit.effect.beta
        );
        assert!(fit.effect.p < 0.001);
        assert!(fit.effect.ci95.0 <= fit.effect.beta && fit.effect.beta <= fit.effect.ci95.1);
    }

    #[test]
    fn constant_condition_reports_rank_deficiency() {
        let mut t = simulate(2, 2, 4, 2, 1.0, &[0.0, 0.0], 0.1);
        for r in &mut t.rows {
            r.condition = true;
        }
        match fit_fixed_effects(&t) {
            Err(Error::RankDeficient(cols)) => assert!(cols.contains(&"jailbreak".to_string())),
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn zero_residuals_give_zero_covariance() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let e = DVector::zeros(4);
        let cov = cluster_robust_covariance(&x, &e, &[0, 0, 1, 1]).unwrap();
        assert!(cov.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn singleton_clusters_match_hc1() {
        // One observation per cluster: CR1 reduces exactly to HC1.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 24;
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { rng.gen_range(-1.0..1.0) * (i as f64 + 1.0) });
        let e = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
        let clusters: Vec<usize> = (0..n).collect();
        let cr1 = cluster_robust_covariance(&x, &e, &clusters).unwrap();

        // HC1 oracle: (X'X)^-1 (sum_i e_i^2 x_i x_i') (X'X)^-1 * n/(n-k)
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let mut meat = DMatrix::zeros(2, 2);
        for i in 0..n {
            let xi = x.row(i).transpose();
            meat += &xi * xi.transpose() * e[i] * e[i];
        }
        let hc1 = &xtx_inv * meat * &xtx_inv * (n as f64 / (n as f64 - 2.0));
        for (a, b) in cr1.iter().zip(hc1.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn three_cluster_hand_example() {
        // n = 6, k = 2, clusters of size 2; sandwich worked by hand.
        let x = DMatrix::from_row_slice(
            6,
            2,
            &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 1.0, 5.0, 1.0, 6.0],
        );
        let e = DVector::from_row_slice(&[0.5, -0.5, 1.0, 0.0, -0.25, 0.25]);
        let clusters = [0usize, 0, 1, 1, 2, 2];
        let got = cluster_robust_covariance(&x, &e, &clusters).unwrap();

        // Oracle by the literal formula with explicit block products.
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let mut meat = DMatrix::zeros(2, 2);
        for g in 0..3 {
            let rows: Vec<usize> = (0..6).filter(|&i| clusters[i] == g).collect();
            let xg = DMatrix::from_fn(rows.len(), 2, |i, j| x[(rows[i], j)]);
            let eg = DVector::from_fn(rows.len(), |i, _| e[rows[i]]);
            let s = xg.transpose() * eg;
            meat += &s * s.transpose();
        }
        let factor = (3.0 / 2.0) * (5.0 / 4.0);
        let oracle = &xtx_inv * meat * &xtx_inv * factor;
        for (a, b) in got.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_models_have_null_interaction() {
        let t = simulate(5, 2, 8, 4, 1.5, &[0.0, 0.0], 0.2);
        let contrasts = fit_interactions(&t, "m0").unwrap();
        assert_eq!(contrasts.len(), 1);
        assert!(contrasts[0].delta_beta.abs() < 0.15);
        assert!(contrasts[0].p > 0.05);
    }

    #[test]
    fn interaction_recovers_differential_effect() {
        let t = simulate(6, 3, 8, 4, 1.0, &[0.0, 2.0, -1.0], 0.1);
        let contrasts = fit_interactions(&t, "m0").unwrap();
        let m1 = contrasts.iter().find(|c| c.model == "m1").unwrap();
        let m2 = contrasts.iter().find(|c| c.model == "m2").unwrap();
        assert!((m1.delta_beta - 2.0).abs() < 0.1);
        assert!((m2.delta_beta + 1.0).abs() < 0.1);
    }

    #[test]
    fn reference_rotation_is_antisymmetric() {
        let t = simulate(7, 3, 6, 3, 1.0, &[0.3, -0.4, 0.9], 0.3);
        let models = t.models();
        for a in &models {
            for b in &models {
                if a == b {
                    continue;
                }
                let ab = fit_interactions(&t, b)
                    .unwrap()
                    .into_iter()
                    .find(|c| &c.model == a)
                    .unwrap();
                let ba = fit_interactions(&t, a)
                    .unwrap()
                    .into_iter()
                    .find(|c| &c.model == b)
                    .unwrap();
                assert!(
                    (ab.delta_beta + ba.delta_beta).abs() < 1e-8,
                    "{} vs {}",
                    ab.delta_beta,
                    ba.delta_beta
                );
            }
        }
    }

    #[test]
    fn outcome_shift_changes_only_intercept() {
        let t = simulate(8, 2, 5, 3, 1.2, &[0.0, 0.0], 0.2);
        let mut shifted = t.clone();
        for r in &mut shifted.rows {
            r.outcome += 100.0;
        }
        let f1 = fit_fixed_effects(&t).unwrap();
        let f2 = fit_fixed_effects(&shifted).unwrap();
        assert!((f1.effect.beta - f2.effect.beta).abs() < 1e-10);
        assert!((f1.effect.se - f2.effect.se).abs() < 1e-10);
        assert!((f1.effect.p - f2.effect.p).abs() < 1e-10);
        let i1 = f1.coefficients.iter().find(|(n, _)| n == "intercept").unwrap().1;
        let i2 = f2.coefficients.iter().find(|(n, _)| n == "intercept").unwrap().1;
        assert!((i2 - i1 - 100.0).abs() < 1e-9);
    }
}

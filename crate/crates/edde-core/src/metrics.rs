//! Diversity and quality measures over model predictions.
//!
//! The pairwise diversity of two models over a dataset is the scaled mean
//! 2-norm distance of their soft targets,
//! `Div = (sqrt(2)/2) * (1/N) * sum_i ||p_i - q_i||_2`, with similarity
//! `Sim = 1 - Div`; both lie in `[0, 1]` for probability-vector rows.
//! Ensemble diversity averages `Div` over all member pairs.

use alloc::string::String;
use alloc::vec::Vec;

use crate::simplex::{argmax, check_probability_row, check_same_len, scaled_l2};
use crate::{Error, Result};

/// One model's soft targets over a dataset: `N x k` rows of probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub model_id: String,
    pub soft_targets: Vec<Vec<f64>>,
}

impl PredictionMatrix {
    pub fn new(model_id: impl Into<String>, soft_targets: Vec<Vec<f64>>) -> Result<Self> {
        if soft_targets.is_empty() {
            return Err(Error::validation("prediction matrix has no rows"));
        }
        let k = soft_targets[0].len();
        for row in &soft_targets {
            check_same_len(row.len(), k, "prediction row width")?;
            check_probability_row(row, 1e-6, "prediction row")?;
        }
        Ok(PredictionMatrix {
            model_id: model_id.into(),
            soft_targets,
        })
    }

    pub fn n(&self) -> usize {
        self.soft_targets.len()
    }

    pub fn k(&self) -> usize {
        self.soft_targets[0].len()
    }
}

fn check_conformable(a: &PredictionMatrix, b: &PredictionMatrix) -> Result<()> {
    check_same_len(a.n(), b.n(), "prediction matrix rows")?;
    check_same_len(a.k(), b.k(), "prediction matrix classes")
}

/// Pairwise diversity of two models; in `[0, 1]`.
pub fn pairwise_div(pj: &PredictionMatrix, pk: &PredictionMatrix) -> Result<f64> {
    check_conformable(pj, pk)?;
    let sum: f64 = pj
        .soft_targets
        .iter()
        .zip(&pk.soft_targets)
        .map(|(a, b)| scaled_l2(a, b))
        .sum();
    Ok(sum / pj.n() as f64)
}

/// Pairwise similarity `1 - Div`; in `[0, 1]`.
pub fn pairwise_sim(pj: &PredictionMatrix, pk: &PredictionMatrix) -> Result<f64> {
    Ok(1.0 - pairwise_div(pj, pk)?)
}

/// Mean pairwise diversity over all `T(T-1)/2` model pairs. Requires `T >= 2`.
pub fn ensemble_div(preds: &[PredictionMatrix]) -> Result<f64> {
    let t = preds.len();
    if t < 2 {
        return Err(Error::validation("ensemble diversity needs at least 2 models"));
    }
    let mut sum = 0.0;
    for j in 0..t {
        for k in j + 1..t {
            sum += pairwise_div(&preds[j], &preds[k])?;
        }
    }
    Ok(2.0 / (t * (t - 1)) as f64 * sum)
}

/// `T x T` matrix of pairwise similarities; symmetric with unit diagonal.
pub fn similarity_matrix(preds: &[PredictionMatrix]) -> Result<Vec<Vec<f64>>> {
    let t = preds.len();
    if t == 0 {
        return Err(Error::validation("similarity matrix needs at least 1 model"));
    }
    let mut m = alloc::vec![alloc::vec![0.0; t]; t];
    for j in 0..t {
        m[j][j] = 1.0;
        for k in j + 1..t {
            let s = pairwise_sim(&preds[j], &preds[k])?;
            m[j][k] = s;
            m[k][j] = s;
        }
    }
    Ok(m)
}

/// The hard-decision ambiguity used by AdaBoost.NC.
///
/// Correctness is encoded `+1` (correct) / `-1` (incorrect) per sample, for
/// the ensemble (`H`) and each model (`h_t`). Per sample:
/// `amb = (1/2) * sum_t alpha_t * (H - h_t)`.
pub fn amb_nc(
    ensemble_correct: &[i8],
    model_correct: &[Vec<i8>],
    alphas: &[f64],
) -> Result<Vec<f64>> {
    check_same_len(model_correct.len(), alphas.len(), "models vs alphas")?;
    let n = ensemble_correct.len();
    for m in model_correct {
        check_same_len(m.len(), n, "model correctness length")?;
    }
    let valid = |v: i8| v == 1 || v == -1;
    if !ensemble_correct.iter().cloned().all(valid)
        || !model_correct.iter().flatten().cloned().all(valid)
    {
        return Err(Error::validation("correctness entries must be +1 or -1"));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut amb = 0.0;
        for (m, &a) in model_correct.iter().zip(alphas) {
            amb += a * f64::from(ensemble_correct[i] - m[i]);
        }
        out.push(0.5 * amb);
    }
    Ok(out)
}

/// Accuracy and diversity summary for one ensemble on one dataset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiversityReport {
    pub model_ids: Vec<String>,
    /// `T x T` symmetric pairwise similarity matrix with unit diagonal.
    pub pairwise: Vec<Vec<f64>>,
    /// Ensemble diversity; 0 for a single-model ensemble.
    pub div_h: f64,
    pub average_accuracy: f64,
    pub ensemble_accuracy: f64,
    /// Exactly `ensemble_accuracy - average_accuracy`.
    pub increased_accuracy: f64,
}

/// Alpha-weighted soft-target combination, normalized to the simplex:
/// `H_i = sum_t alpha_t p_t,i / sum_t alpha_t`.
pub fn combine_soft_targets(preds: &[PredictionMatrix], alphas: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_same_len(preds.len(), alphas.len(), "models vs alphas")?;
    if preds.is_empty() {
        return Err(Error::validation("cannot combine an empty model list"));
    }
    for w in preds.windows(2) {
        check_conformable(&w[0], &w[1])?;
    }
    let total: f64 = alphas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::validation("alpha weights must have positive sum"));
    }
    let (n, k) = (preds[0].n(), preds[0].k());
    let mut combined = alloc::vec![alloc::vec![0.0; k]; n];
    for (p, &a) in preds.iter().zip(alphas) {
        for (out, row) in combined.iter_mut().zip(&p.soft_targets) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += a * x;
            }
        }
    }
    for row in &mut combined {
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    Ok(combined)
}

fn argmax_accuracy(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(row, &y)| argmax(row) == y)
        .count();
    correct as f64 / labels.len() as f64
}

/// Table-style summary: per-model average accuracy, alpha-weighted ensemble
/// accuracy, their difference, and the diversity numbers.
pub fn accuracy_summary(
    preds: &[PredictionMatrix],
    alphas: &[f64],
    labels: &[usize],
) -> Result<DiversityReport> {
    if preds.is_empty() {
        return Err(Error::validation("accuracy summary needs at least 1 model"));
    }
    check_same_len(preds[0].n(), labels.len(), "predictions vs labels")?;
    let k = preds[0].k();
    if labels.iter().any(|&y| y >= k) {
        return Err(Error::validation("label out of range"));
    }

    let average_accuracy = preds
        .iter()
        .map(|p| argmax_accuracy(&p.soft_targets, labels))
        .sum::<f64>()
        / preds.len() as f64;
    let combined = combine_soft_targets(preds, alphas)?;
    let ensemble_accuracy = argmax_accuracy(&combined, labels);
    let div_h = if preds.len() >= 2 {
        ensemble_div(preds)?
    } else {
        0.0
    };
    Ok(DiversityReport {
        model_ids: preds.iter().map(|p| p.model_id.clone()).collect(),
        pairwise: similarity_matrix(preds)?,
        div_h,
        average_accuracy,
        ensemble_accuracy,
        increased_accuracy: ensemble_accuracy - average_accuracy,
    })
}

/// Bias/variance view of an ensemble's members:
/// bias is the mean scaled distance of member soft targets to the one-hot
/// truth, variance is the ensemble diversity. Requires `T >= 2`.
pub fn bias_variance_report(preds: &[PredictionMatrix], labels: &[usize]) -> Result<(f64, f64)> {
    if preds.len() < 2 {
        return Err(Error::validation("bias/variance report needs at least 2 models"));
    }
    check_same_len(preds[0].n(), labels.len(), "predictions vs labels")?;
    let k = preds[0].k();
    let mut bias_sum = 0.0;
    let mut count = 0usize;
    for p in preds {
        for (row, &y) in p.soft_targets.iter().zip(labels) {
            let truth = crate::data::one_hot(y, k)?;
            bias_sum += scaled_l2(row, &truth);
            count += 1;
        }
    }
    Ok((bias_sum / count as f64, ensemble_div(preds)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(id: &str, rows: &[&[f64]]) -> PredictionMatrix {
        PredictionMatrix::new(id, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identical_predictions_have_zero_div_and_unit_sim() {
        let p = pm("a", &[&[0.2, 0.8], &[0.9, 0.1]]);
        assert_eq!(pairwise_div(&p, &p).unwrap(), 0.0);
        assert_eq!(pairwise_sim(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn opposite_one_hot_rows_are_maximally_diverse() {
        let p = pm("a", &[&[1.0, 0.0]]);
        let q = pm("b", &[&[0.0, 1.0]]);
        assert!((pairwise_div(&p, &q).unwrap() - 1.0).abs() < 1e-12);
        assert!(pairwise_sim(&p, &q).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pairwise_div_matches_hand_computed_value() {
        // ||(0.2, -0.2)||_2 = 0.2 sqrt(2); scaled by sqrt(2)/2 -> 0.2.
        let p = pm("a", &[&[0.8, 0.2]]);
        let q = pm("b", &[&[0.6, 0.4]]);
        assert!((pairwise_div(&p, &q).unwrap() - 0.2).abs() < 1e-12);
        assert!((pairwise_sim(&p, &q).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ensemble_div_of_two_models_is_their_pairwise_div() {
        let p = pm("a", &[&[0.8, 0.2]]);
        let q = pm("b", &[&[0.6, 0.4]]);
        let d = pairwise_div(&p, &q).unwrap();
        assert_eq!(ensemble_div(&[p, q]).unwrap(), d);
    }

    #[test]
    fn ensemble_div_averages_pairs() {
        // Three single-row matrices engineered so the pairwise divs are
        // 0.1, 0.2, 0.3 along the first coordinate pair.
        let a = pm("a", &[&[0.5, 0.5]]);
        let b = pm("b", &[&[0.6, 0.4]]); // d(a,b)=0.1
        let c = pm("c", &[&[0.8, 0.2]]); // d(a,c)=0.3, d(b,c)=0.2
        let expect = (0.1 + 0.3 + 0.2) / 3.0;
        assert!((ensemble_div(&[a, b, c]).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn ensemble_div_requires_two_models() {
        let p = pm("a", &[&[1.0, 0.0]]);
        assert!(ensemble_div(core::slice::from_ref(&p)).is_err());
    }

    #[test]
    fn similarity_matrix_shape_and_symmetry() {
        let a = pm("a", &[&[0.5, 0.5]]);
        let b = pm("b", &[&[0.9, 0.1]]);
        let m = similarity_matrix(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m[0][0], 1.0);
        assert_eq!(m[1][1], 1.0);
        assert_eq!(m[0][1], m[1][0]);
        assert_eq!(m[0][1], pairwise_sim(&a, &b).unwrap());
        assert_eq!(similarity_matrix(&[a]).unwrap(), alloc::vec![alloc::vec![1.0]]);
    }

    #[test]
    fn amb_nc_hand_cases() {
        // All correct -> 0.
        let amb = amb_nc(&[1], &[alloc::vec![1], alloc::vec![1]], &[1.0, 1.0]).unwrap();
        assert_eq!(amb, alloc::vec![0.0]);
        // Ensemble correct, h1 correct, h2 incorrect -> 1/2 * (0 + 2) = 1.
        let amb = amb_nc(&[1], &[alloc::vec![1], alloc::vec![-1]], &[1.0, 1.0]).unwrap();
        assert_eq!(amb, alloc::vec![1.0]);
        // Single model, both incorrect -> 0.
        let amb = amb_nc(&[-1], &[alloc::vec![-1]], &[1.0]).unwrap();
        assert_eq!(amb, alloc::vec![0.0]);
    }

    #[test]
    fn amb_nc_rejects_bad_encoding() {
        assert!(amb_nc(&[0], &[alloc::vec![1]], &[1.0]).is_err());
    }

    #[test]
    fn single_model_summary_has_zero_increase() {
        let p = pm("a", &[&[0.9, 0.1], &[0.2, 0.8]]);
        let r = accuracy_summary(core::slice::from_ref(&p), &[1.0], &[0, 1]).unwrap();
        assert_eq!(r.increased_accuracy, 0.0);
        assert_eq!(r.ensemble_accuracy, 1.0);
        assert_eq!(r.div_h, 0.0);
    }

    #[test]
    fn identical_models_have_equal_ensemble_and_average_accuracy() {
        let p = pm("a", &[&[0.9, 0.1], &[0.7, 0.3]]);
        let r = accuracy_summary(&[p.clone(), p], &[0.5, 2.0], &[0, 1]).unwrap();
        assert_eq!(r.ensemble_accuracy, r.average_accuracy);
        assert_eq!(r.div_h, 0.0);
    }

    #[test]
    fn complementary_confident_models_boost_ensemble_accuracy() {
        // Two models, each 60% accurate, with errors on disjoint halves and
        // near-one-hot confidence. Expected values were frozen from a
        // straight-line enumeration of the combined argmax below.
        let n = 10;
        let hi = 0.96;
        let lo = 0.04;
        let mut a_rows = Vec::new();
        let mut b_rows = Vec::new();
        let labels: Vec<usize> = alloc::vec![0; n];
        for i in 0..n {
            // Model a errs on samples 0..4 only with mild confidence; model b
            // errs on 4..8. Both confidently correct elsewhere.
            let a_correct = i >= 4;
            let b_correct = !(4..8).contains(&i);
            a_rows.push(if a_correct {
                alloc::vec![hi, lo]
            } else {
                alloc::vec![0.45, 0.55]
            });
            b_rows.push(if b_correct {
                alloc::vec![hi, lo]
            } else {
                alloc::vec![0.45, 0.55]
            });
        }
        let a = PredictionMatrix::new("a", a_rows).unwrap();
        let b = PredictionMatrix::new("b", b_rows).unwrap();

        // Independent brute-force check of the combined accuracy.
        let mut expect_correct = 0;
        for i in 0..n {
            let c0 = 0.5 * (a.soft_targets[i][0] + b.soft_targets[i][0]);
            if c0 > 0.5 {
                expect_correct += 1;
            }
        }
        assert!(expect_correct as f64 / n as f64 > 0.6);

        let r = accuracy_summary(&[a, b], &[1.0, 1.0], &labels).unwrap();
        assert!((r.average_accuracy - 0.6).abs() < 1e-12);
        assert_eq!(r.ensemble_accuracy, expect_correct as f64 / n as f64);
        assert!(r.increased_accuracy > 0.0);
    }

    #[test]
    fn bias_variance_perfect_models_are_zero_zero() {
        let p = pm("a", &[&[1.0, 0.0], &[0.0, 1.0]]);
        let (bias, var) = bias_variance_report(&[p.clone(), p], &[0, 1]).unwrap();
        assert_eq!((bias, var), (0.0, 0.0));
    }

    #[test]
    fn bias_variance_hand_case() {
        let a = pm("a", &[&[1.0, 0.0]]);
        let b = pm("b", &[&[0.0, 1.0]]);
        let (bias, var) = bias_variance_report(&[a, b], &[0]).unwrap();
        assert!((bias - 0.5).abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_imperfect_models_have_zero_variance_positive_bias() {
        let p = pm("a", &[&[0.6, 0.4]]);
        let (bias, var) = bias_variance_report(&[p.clone(), p], &[0]).unwrap();
        assert_eq!(var, 0.0);
        assert!((bias - 0.4).abs() < 1e-12);
    }
}

pub use crate::curriculum::{model_score, phase_eval_score};

/// Index of the median score: the middle one for odd counts, the lower
/// middle for even counts. When several runs share the median score the
/// lowest index wins. `None` for an empty slice.
pub fn median_of_runs(scores: &[f64]) -> Option<usize> {
    if scores.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let median = scores[order[(scores.len() - 1) / 2]];
    scores.iter().position(|s| s.total_cmp(&median).is_eq())
}

/// Sample standard deviation over `√n`; 0 for fewer than two values.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    var.sqrt() / nf.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median_of_runs(&[42.0, 0.0, 17.0]), Some(2));
        assert_eq!(median_of_runs(&[5.0, 5.0, 5.0]), Some(0));
        assert_eq!(median_of_runs(&[1.0, 9.0, 4.0, 6.0]), Some(2));
        assert_eq!(median_of_runs(&[]), None);
    }

    #[test]
    fn sem_small_cases() {
        assert_eq!(standard_error(&[3.0]), 0.0);
        // sd of [1, 3] is √2, SEM = √2/√2 = 1
        assert!((standard_error(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}

use crate::model::posterior::LabelPosterior;

/// Posterior proportional to per-class trigger counts; uniform when every
/// LF abstains. Scores are ignored.
pub fn majority_vote(tau: &[u32], num_classes: usize) -> LabelPosterior {
    let mut counts = vec![0.0; num_classes];
    for &t in tau {
        if t != 0 && (t as usize) <= num_classes {
            counts[t as usize - 1] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return LabelPosterior::uniform(num_classes);
    }
    LabelPosterior::from_probs(counts.into_iter().map(|c| c / total).collect())
}

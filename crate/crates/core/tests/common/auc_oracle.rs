//! Brute-force ranking statistic: over every (positive, negative) pair,
//! a win counts 1 and a tie counts ½.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut half_wins = 0u64;
    let mut pairs = 0u64;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1;
            half_wins += if si > sj {
                2
            } else if si == sj {
                1
            } else {
                0
            };
        }
    }
    half_wins as f64 / (2 * pairs) as f64
}

/// Balanced accuracy at a threshold, counted directly.
pub fn bacc_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut p, mut tn, mut n) = (0.0, 0.0, 0.0, 0.0);
    for (&s, &y) in scores.iter().zip(labels) {
        if y {
            p += 1.0;
            if s >= threshold {
                tp += 1.0;
            }
        } else {
            n += 1.0;
            if s < threshold {
                tn += 1.0;
            }
        }
    }
    (tp / p + tn / n) / 2.0
}

/// Scores on a coarse grid so ties are common; both classes present.
pub fn random_scored_set(rng: &mut ChaCha8Rng, len: usize) -> (Vec<f64>, Vec<bool>) {
    loop {
        let labels: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            continue;
        }
        let scores = labels
            .iter()
            .map(|&y| {
                let shift = if y { 3 } else { 0 };
                f64::from(rng.random_range(0..12) + shift) / 16.0
            })
            .collect();
        return (scores, labels);
    }
}

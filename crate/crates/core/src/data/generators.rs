//! Synthetic datasets with known gold labels.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::dataset::{DatasetFile, InstanceRecord, TaskSpec, SCHEMA_VERSION};
use crate::error::InputError;
use crate::model::lf::LfSpec;
use crate::model::observations::ObservationSet;

/// Clamp range for distorted quality guides.
pub const GUIDE_CLAMP: (f64, f64) = (0.01, 0.99);

fn discrete_file(num_classes: usize, lfs: Vec<LfSpec>, instances: Vec<InstanceRecord>) -> DatasetFile {
    DatasetFile {
        schema_version: SCHEMA_VERSION,
        task: TaskSpec { num_classes },
        lfs,
        instances,
    }
}

fn record(tau: Vec<u32>, gold: usize) -> InstanceRecord {
    InstanceRecord {
        score: vec![0.0; tau.len()],
        tau,
        gold: Some(gold),
    }
}

/// Uniform draw over nonempty subsets of `size` items, by rejection.
fn nonempty_subset(rng: &mut ChaCha8Rng, size: usize) -> Vec<bool> {
    loop {
        let mask: Vec<bool> = (0..size).map(|_| rng.random_bool(0.5)).collect();
        if mask.iter().any(|&b| b) {
            return mask;
        }
    }
}

/// Perfect-oracle LFs: LF j targets class `j mod K + 1` and triggers exactly
/// when the gold label equals its target.
pub fn gen_oracle(
    m: usize,
    n: usize,
    num_classes: usize,
    class_balance: &[f64],
    seed: u64,
) -> Result<DatasetFile, InputError> {
    if n == 0 {
        return Err(InputError::Invalid("oracle generator needs at least one LF".into()));
    }
    if num_classes < 2 {
        return Err(InputError::Invalid(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    if class_balance.len() != num_classes {
        return Err(InputError::LengthMismatch {
            what: "class balance vs classes",
            left: class_balance.len(),
            right: num_classes,
        });
    }
    let classes =
        WeightedIndex::new(class_balance).map_err(|e| InputError::Invalid(format!("invalid class balance: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lfs: Vec<LfSpec> = (0..n)
        .map(|j| LfSpec::discrete(format!("oracle_{j}"), j % num_classes + 1))
        .collect();
    let instances = (0..m)
        .map(|_| {
            let y = classes.sample(&mut rng) + 1;
            let tau = lfs
                .iter()
                .map(|lf| if lf.target_class == y { y as u32 } else { 0 })
                .collect();
            record(tau, y)
        })
        .collect();
    Ok(discrete_file(num_classes, lfs, instances))
}

/// Binary task with LFs `S1 = 1..=r` labeling class 1 and `S2 = r+1..=n`
/// labeling class 2. Class-1 instances trigger a nonempty subset of S1 only;
/// class-2 instances trigger nonempty subsets of both. `skew` is the
/// fraction of class-1 instances.
pub fn gen_twoset(m: usize, r: usize, n: usize, skew: f64, seed: u64) -> Result<DatasetFile, InputError> {
    if r == 0 || r >= n {
        return Err(InputError::Invalid(format!(
            "twoset needs 1 <= r < n, got r={r}, n={n}"
        )));
    }
    if !(skew > 0.0 && skew < 1.0) {
        return Err(InputError::Invalid(format!("skew must lie in (0, 1), got {skew}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lfs: Vec<LfSpec> = (0..n)
        .map(|j| {
            let class = if j < r { 1 } else { 2 };
            LfSpec::discrete(format!("s{class}_{j}"), class)
        })
        .collect();
    let instances = (0..m)
        .map(|_| {
            let y = if rng.random_bool(skew) { 1 } else { 2 };
            let mut tau: Vec<u32> = nonempty_subset(&mut rng, r).into_iter().map(u32::from).collect();
            if y == 2 {
                tau.extend(
                    nonempty_subset(&mut rng, n - r)
                        .into_iter()
                        .map(|on| if on { 2 } else { 0 }),
                );
            } else {
                tau.resize(n, 0);
            }
            record(tau, y)
        })
        .collect();
    Ok(discrete_file(2, lfs, instances))
}

/// `n` independent binary voters, each correct with probability
/// `0.5 + epsilon`, on balanced gold labels.
///
/// A voter can name either class, so voter v is encoded as the LF pair
/// (`v_1` targeting class 1, `v_2` targeting class 2) of which exactly one
/// triggers per instance. The file therefore has `2n` LFs.
pub fn gen_near_random(m: usize, n: usize, epsilon: f64, seed: u64) -> Result<DatasetFile, InputError> {
    if n == 0 {
        return Err(InputError::Invalid(
            "near-random generator needs at least one voter".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(InputError::Invalid(format!(
            "epsilon must lie in (0, 0.5], got {epsilon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lfs: Vec<LfSpec> = (0..n)
        .flat_map(|v| {
            [
                LfSpec::discrete(format!("v{v}_1"), 1),
                LfSpec::discrete(format!("v{v}_2"), 2),
            ]
        })
        .collect();
    let instances = (0..m)
        .map(|_| {
            let y = if rng.random_bool(0.5) { 1 } else { 2 };
            let mut tau = vec![0u32; 2 * n];
            for v in 0..n {
                let vote = if rng.random_bool(0.5 + epsilon) { y } else { 3 - y };
                tau[2 * v + vote - 1] = vote as u32;
            }
            record(tau, y)
        })
        .collect();
    Ok(discrete_file(2, lfs, instances))
}

/// Replaces each q^t with `clamp(accuracy + N(0, sigma), 0.01, 0.99)`.
/// `sigma` is a standard deviation.
pub fn distort_guides(
    lfs: &[LfSpec],
    true_accuracies: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<Vec<LfSpec>, InputError> {
    if true_accuracies.len() != lfs.len() {
        return Err(InputError::LengthMismatch {
            what: "accuracies vs LFs",
            left: true_accuracies.len(),
            right: lfs.len(),
        });
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(InputError::Invalid(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if let Some(a) = true_accuracies.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(InputError::Invalid(format!("accuracy {a} is outside (0, 1)")));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| InputError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(lfs
        .iter()
        .zip(true_accuracies)
        .map(|(lf, &acc)| {
            let q = if sigma == 0.0 {
                acc
            } else {
                acc + noise.sample(&mut rng)
            };
            let mut out = lf.clone();
            out.quality_guide_t = q.clamp(GUIDE_CLAMP.0, GUIDE_CLAMP.1);
            out
        })
        .collect())
}

/// Fraction of each LF's triggers that agree with gold, clamped to the
/// guide range. LFs that never trigger on a gold-labeled instance get 0.5.
pub fn empirical_accuracies(lfs: &[LfSpec], obs: &ObservationSet) -> Result<Vec<f64>, InputError> {
    let gold = obs
        .gold()
        .ok_or_else(|| InputError::Invalid("dataset has no gold labels".into()))?;
    let mut hits = vec![0usize; lfs.len()];
    let mut fired = vec![0usize; lfs.len()];
    for (i, g) in gold.iter().enumerate() {
        let Some(g) = g else { continue };
        for (j, lf) in lfs.iter().enumerate() {
            if obs.triggered(i, j) {
                fired[j] += 1;
                hits[j] += usize::from(lf.target_class == *g);
            }
        }
    }
    Ok(hits
        .iter()
        .zip(&fired)
        .map(|(&h, &f)| {
            if f == 0 {
                0.5
            } else {
                (h as f64 / f as f64).clamp(GUIDE_CLAMP.0, GUIDE_CLAMP.1)
            }
        })
        .collect())
}

//! Simulated Alice/Bob measurements in the Schmidt bases, and the plug-in
//! estimate of `E_N` from the resulting counts.
//!
//! Shot `k` of a simulation with seed `s` draws its uniform variate from
//! 64-bit word `k` of the ChaCha8 stream keyed by `s` (stream 0). The counts
//! are therefore fixed by `(λ, shots, seed)` no matter how the shots are
//! split across threads. Bootstrap resampling uses stream 1 of the same key.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::CorrelationTable;
use crate::error::{Error, Result};
use crate::measures::normalization;
use crate::schmidt::SchmidtDecomposition;

const SIMULATION_STREAM: u64 = 0;
const BOOTSTRAP_STREAM: u64 = 1;
const CHUNK: u64 = 1 << 16;
/// Bootstrap resamples per estimate.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Joint outcome tallies, `counts[i·n + j]` for Alice `i`, Bob `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasurementRecord {
    n: usize,
    counts: Vec<u64>,
    shots: u64,
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub shots: u64,
}

impl MeasurementRecord {
    pub fn new(n: usize, counts: Vec<u64>, seed: u64) -> Result<MeasurementRecord> {
        if counts.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: counts.len(),
            });
        }
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(Error::InvalidShots);
        }
        Ok(MeasurementRecord {
            n,
            counts,
            shots,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n + j]
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Empirical joint distribution as a correlation table.
    pub fn frequency_table(&self) -> CorrelationTable {
        CorrelationTable::from_joint(frequencies(self.n, &self.counts, self.shots))
    }
}

fn frequencies(n: usize, counts: &[u64], shots: u64) -> Vec<Vec<f64>> {
    let total = shots as f64;
    (0..n)
        .map(|i| (0..n).map(|j| counts[i * n + j] as f64 / total).collect())
        .collect()
}

fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Mixes `(seed, index)` into an independent seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `shots` joint outcomes from `P(i_A, j_B) = δᵢⱼ λⱼ`.
pub fn simulate_measurements(
    dec: &SchmidtDecomposition,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    if shots < 1 {
        return Err(Error::InvalidShots);
    }
    let n = dec.n();
    // (flat cell index, cumulative probability) over the support
    let mut cells: Vec<(usize, f64)> = Vec::new();
    let mut acc = 0.0;
    for (i, &l) in dec.lambdas().iter().enumerate() {
        if l > 0.0 {
            acc += l;
            cells.push((i * n + i, acc));
        }
    }
    if let Some(last) = cells.last_mut() {
        last.1 = f64::INFINITY;
    }

    let n_chunks = shots.div_ceil(CHUNK);
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(shots);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SIMULATION_STREAM);
            rng.set_word_pos(2 * start as u128);
            let mut local = vec![0u64; n * n];
            for _ in start..end {
                let u = unit_interval(rng.next_u64()) * acc;
                let cell = cells.iter().find(|&&(_, cum)| u < cum).map_or(0, |c| c.0);
                local[cell] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; n * n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    MeasurementRecord::new(n, counts, seed)
}

fn plug_in(n: usize, counts: &[u64], shots: u64) -> f64 {
    let table = CorrelationTable::from_joint(frequencies(n, counts, shots));
    normalization(n) * table.delta_sum()
}

fn multinomial<R: Rng>(shots: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return out;
    };
    let mut remaining = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        if k == last {
            out[k] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map(|b| b.sample(rng))
            .unwrap_or(if q >= 1.0 { remaining } else { 0 });
        out[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    out
}

/// `N/(2(N−1)) · Σᵢⱼ |p̂ᵢⱼ − p̂ᵢ q̂ⱼ|` over the full empirical table, with a
/// bootstrap standard error.
///
/// Off-diagonal noise is not assumed away, so the estimate is slightly
/// biased at small shot counts; the bootstrap spread reports the scatter.
pub fn estimate_en(record: &MeasurementRecord) -> Result<EstimateWithError> {
    let n = record.n();
    if n < 2 {
        return Err(Error::WrongDimension(format!(
            "E_N needs N ≥ 2, got N = {n}"
        )));
    }
    let min = (n * n) as u64;
    if record.shots() < min {
        return Err(Error::TooFewShots {
            shots: record.shots(),
            min,
        });
    }
    let value = plug_in(n, record.counts(), record.shots());

    let probs: Vec<f64> = record
        .counts()
        .iter()
        .map(|&c| c as f64 / record.shots() as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(record.seed());
    rng.set_stream(BOOTSTRAP_STREAM);
    let samples: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let counts = multinomial(record.shots(), &probs, &mut rng);
            plug_in(n, &counts, record.shots())
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;

    Ok(EstimateWithError {
        value,
        std_error: var.sqrt(),
        shots: record.shots(),
    })
}

/// One simulation and estimate per entry of `shot_schedule`; entry `k` uses
/// seed `derive_seed(seed, k)`.
pub fn estimate_convergence_scan(
    dec: &SchmidtDecomposition,
    shot_schedule: &[u64],
    seed: u64,
) -> Result<Vec<EstimateWithError>> {
    if shot_schedule.is_empty() {
        return Err(Error::InvalidArgument("empty shot schedule".into()));
    }
    if shot_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ScheduleNotIncreasing);
    }
    shot_schedule
        .iter()
        .enumerate()
        .map(|(k, &shots)| {
            let record = simulate_measurements(dec, shots, derive_seed(seed, k as u64))?;
            estimate_en(&record)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::correlation_table;
    use crate::measures::{en_closed_form, en_correlation_sum};
    use proptest::prelude::*;
    use rand::RngCore;

    fn dec(l: &[f64]) -> SchmidtDecomposition {
        SchmidtDecomposition::from_lambdas(l).unwrap()
    }

    #[test]
    fn balanced_qubits_million_shots() {
        let rec = simulate_measurements(&dec(&[0.5, 0.5]), 1_000_000, 0).unwrap();
        assert_eq!(rec.count(0, 1), 0);
        assert_eq!(rec.count(1, 0), 0);
        let sigma = (1e6f64 * 0.25).sqrt();
        for i in 0..2 {
            assert!((rec.count(i, i) as f64 - 500_000.0).abs() < 5.0 * sigma);
        }
        let est = estimate_en(&rec).unwrap();
        assert!(est.std_error < 0.01);
        assert!((est.value - 1.0).abs() <= 5.0 * est.std_error);
    }

    #[test]
    fn deterministic_distribution() {
        let rec = simulate_measurements(&dec(&[1.0, 0.0]), 1234, 9).unwrap();
        assert_eq!(rec.counts(), &[1234, 0, 0, 0]);
        let est = estimate_en(&rec).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn shot_count_checks() {
        assert_eq!(
            simulate_measurements(&dec(&[0.5, 0.5]), 0, 0).unwrap_err(),
            Error::InvalidShots
        );
        let rec = simulate_measurements(&dec(&[0.5, 0.5]), 3, 0).unwrap();
        assert!(matches!(estimate_en(&rec), Err(Error::TooFewShots { .. })));
    }

    #[test]
    fn exact_frequencies_give_closed_form() {
        let rec = MeasurementRecord::new(2, vec![70, 0, 0, 30], 0).unwrap();
        let est = estimate_en(&rec).unwrap();
        assert!((est.value - 0.84).abs() < 1e-9);
        let closed = en_closed_form(&dec(&[0.7, 0.3])).unwrap().value;
        assert!((est.value - closed).abs() < 1e-9);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let d = dec(&[0.5, 0.3, 0.2]);
        let a = simulate_measurements(&d, 300_001, 42).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_measurements(&d, 300_001, 42).unwrap());
        assert_eq!(a, b);
        let c = simulate_measurements(&d, 300_001, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chunking_matches_a_single_sequential_stream() {
        // shot k uses word k of one stream, so a sequential draw must agree
        let d = dec(&[0.6, 0.4]);
        let shots = 2 * CHUNK + 17;
        let rec = simulate_measurements(&d, shots, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        rng.set_stream(SIMULATION_STREAM);
        let mut first = 0;
        for _ in 0..shots {
            if unit_interval(rng.next_u64()) < 0.6 {
                first += 1;
            }
        }
        assert_eq!(rec.count(0, 0), first);
        assert_eq!(rec.count(1, 1), shots - first);
    }

    #[test]
    fn convergence_scan() {
        let est =
            estimate_convergence_scan(&dec(&[0.5, 0.5]), &[100, 10_000, 1_000_000], 0).unwrap();
        assert_eq!(est.len(), 3);
        assert!(est.windows(2).all(|w| w[1].std_error < w[0].std_error));
        assert_eq!(
            estimate_convergence_scan(&dec(&[0.5, 0.5]), &[100], 0)
                .unwrap()
                .len(),
            1
        );
        assert_eq!(
            estimate_convergence_scan(&dec(&[0.5, 0.5]), &[10_000, 100], 0).unwrap_err(),
            Error::ScheduleNotIncreasing
        );
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|k| derive_seed(0, k)).collect();
        let mut sorted = seeds.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }

    #[test]
    fn record_validation() {
        assert!(matches!(
            MeasurementRecord::new(2, vec![1, 2, 3], 0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            MeasurementRecord::new(2, vec![0; 4], 0).unwrap_err(),
            Error::InvalidShots
        );
    }

    proptest! {
        #[test]
        fn plug_in_exact_on_true_frequencies(
            raw in proptest::collection::vec(1u64..1000, 2..=6)
        ) {
            let n = raw.len();
            let shots: u64 = raw.iter().sum();
            let lambdas: Vec<f64> = raw.iter().map(|&c| c as f64 / shots as f64).collect();
            let mut counts = vec![0u64; n * n];
            for (i, &c) in raw.iter().enumerate() {
                counts[i * n + i] = c;
            }
            prop_assume!(shots >= (n * n) as u64);
            let rec = MeasurementRecord::new(n, counts, 0).unwrap();
            let est = estimate_en(&rec).unwrap();
            let truth = en_correlation_sum(&correlation_table(&dec(&lambdas))).unwrap().value;
            prop_assert!((est.value - truth).abs() <= 1e-9);
        }
    }
}

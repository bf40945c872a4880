//! Deterministic counter-keyed randomness.
//!
//! Every random draw in the crate is a pure function of a [`RngKey`]: a root
//! seed plus a list of stream words. Keys are mixed into a ChaCha12 seed, so
//! distinct keys give independent-looking streams and the same key always
//! reproduces the same sequence, regardless of call order or thread count.

use super::{CondKernel, Dist, ProbError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Root seed plus stream words identifying one random stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngKey {
    seed: u64,
    words: Vec<u64>,
}

fn scramble(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngKey {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            words: Vec::new(),
        }
    }

    /// Child key extended by one stream word.
    pub fn with(&self, word: u64) -> Self {
        let mut words = self.words.clone();
        words.push(word);
        Self {
            seed: self.seed,
            words,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// ChaCha stream for this key. Pure function of `(seed, words)`.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut h = scramble(self.seed ^ 0x0C0A_11AB_0C0A_11AB);
        for (i, &w) in self.words.iter().enumerate() {
            h = scramble(
                h.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    ^ scramble(w.wrapping_add(i as u64 + 1)),
            );
        }
        h = scramble(h ^ (self.words.len() as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
        let mut seed = [0u8; 32];
        let mut z = h;
        for chunk in seed.chunks_exact_mut(8) {
            z = scramble(z.wrapping_add(0x9E37_79B9_7F4A_7C15));
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}

/// An i.i.d. sequence of length `n` from `d`, deterministic in `key`.
pub fn sample_iid(d: &Dist, n: usize, key: &RngKey) -> Vec<usize> {
    let mut rng = key.rng();
    (0..n).map(|_| d.inverse_cdf(rng.random::<f64>())).collect()
}

/// A conditionally i.i.d. sequence: symbol `t` is drawn from the kernel row
/// selected by the conditioning sequences at time `t`.
///
/// `cond` holds one sequence per `from` axis of the kernel, in kernel order;
/// all must share one length, which is the output length.
pub fn sample_cond_iid(k: &CondKernel, cond: &[&[usize]], key: &RngKey) -> Result<Vec<usize>> {
    if cond.len() != k.from_sizes().len() {
        return Err(ProbError::ShapeMismatch {
            expected: k.from_sizes().len(),
            got: cond.len(),
        });
    }
    let n = cond.first().map(|c| c.len()).unwrap_or(0);
    if n == 0 || cond.iter().any(|c| c.len() != n) {
        return Err(ProbError::BadSequences);
    }
    let mut rng = key.rng();
    let mut out = Vec::with_capacity(n);
    let mut syms = vec![0usize; cond.len()];
    for t in 0..n {
        for (j, c) in cond.iter().enumerate() {
            syms[j] = c[t];
        }
        let row = k.row(k.from_index(&syms));
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut pick = row.len() - 1;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        out.push(pick);
    }
    Ok(out)
}

/// Uniform draw from the probability simplex (Dirichlet(1,..,1)).
pub fn random_dist(len: usize, rng: &mut impl Rng) -> Dist {
    assert!(len >= 1);
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            -(u.max(f64::MIN_POSITIVE)).ln()
        })
        .collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    // Exactly renormalize so Dist::new never trips on float fuzz.
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 0.0 {
        let last = v.len() - 1;
        v[last] += 1.0 - s;
        if v[last] < 0.0 {
            v[last] = 0.0;
            let s2: f64 = v.iter().sum();
            for x in &mut v {
                *x /= s2;
            }
        }
    }
    Dist::new(v).expect("normalized by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Axis;

    #[test]
    fn point_mass_gives_constant_sequence() {
        let d = Dist::point_mass(4, 2).unwrap();
        let key = RngKey::new(7).with(1);
        assert_eq!(sample_iid(&d, 20, &key), vec![2; 20]);
    }

    #[test]
    fn same_key_same_sequence_distinct_keys_differ() {
        let d = Dist::uniform(4).unwrap();
        let key = RngKey::new(42).with(3).with(9);
        assert_eq!(sample_iid(&d, 100, &key), sample_iid(&d, 100, &key));
        let other = RngKey::new(42).with(3).with(10);
        assert_ne!(sample_iid(&d, 100, &key), sample_iid(&d, 100, &other));
        // extension must not collide with a sibling word
        let a = RngKey::new(1).with(5);
        let b = RngKey::new(1).with(5).with(0);
        assert_ne!(sample_iid(&d, 100, &a), sample_iid(&d, 100, &b));
    }

    #[test]
    fn uniform_bit_frequency_concentrates() {
        let d = Dist::uniform(2).unwrap();
        let n = 100_000;
        let mut bad = 0;
        for seed in 0..50u64 {
            let seq = sample_iid(&d, n, &RngKey::new(seed).with(0));
            let ones = seq.iter().filter(|&&x| x == 1).count() as f64;
            if (ones / n as f64 - 0.5).abs() > 0.01 {
                bad += 1;
            }
        }
        assert!(bad == 0, "{bad}/50 seeds outside the binomial tail bound");
    }

    #[test]
    fn empirical_tv_distance_bound() {
        // TV distance to the source <= 5 sqrt(|alphabet|/n) on 99% of seeds
        let d = Dist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let n = 2000;
        let bound = 5.0 * (4.0 / n as f64).sqrt();
        let mut fail = 0;
        for seed in 0..100u64 {
            let seq = sample_iid(&d, n, &RngKey::new(seed).with(9));
            let mut counts = [0usize; 4];
            for &x in &seq {
                counts[x] += 1;
            }
            let tv: f64 = counts
                .iter()
                .zip(d.probs())
                .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
                .sum::<f64>()
                / 2.0;
            if tv > bound {
                fail += 1;
            }
        }
        assert!(fail <= 1, "{fail}/100 seeds exceeded the TV bound");
    }

    #[test]
    fn conditional_sampling_tracks_states() {
        // deterministic kernel: x = s
        let rows = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let k = CondKernel::new(vec![Axis::S1], vec![3], vec![Axis::X1], vec![3], rows).unwrap();
        let s = vec![0usize, 2, 1, 1, 0];
        let out = sample_cond_iid(&k, &[&s], &RngKey::new(0)).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn conditional_frequencies_match_rows() {
        let rows = vec![0.9, 0.1, 0.2, 0.8];
        let k = CondKernel::new(vec![Axis::S1], vec![2], vec![Axis::X1], vec![2], rows).unwrap();
        let n = 10_000;
        let s: Vec<usize> = (0..n).map(|t| t % 2).collect();
        let x = sample_cond_iid(&k, &[&s], &RngKey::new(3).with(1)).unwrap();
        let mut ones = [0.0f64; 2];
        for t in 0..n {
            if x[t] == 1 {
                ones[s[t]] += 1.0;
            }
        }
        assert!((ones[0] / (n as f64 / 2.0) - 0.1).abs() < 0.02);
        assert!((ones[1] / (n as f64 / 2.0) - 0.8).abs() < 0.02);
    }
}

//! Monte Carlo simulation of the CF coordination coding protocol.
//!
//! Per trial: draw the state block and a uniform message pair; the CF scans
//! codeword-index pairs `(z1, z2)` in lexicographic order for the first one
//! making `(s1^n, s2^n, x1^n, x2^n)` weakly typical under the target input
//! joint (falling back to `(1,1)` — index 0 here — when none passes); the
//! encoders transmit, the channel adds noise, and the decoder searches all
//! `(w, z)` tuples for a unique message pair whose tuple is typical under
//! the full decoding joint.
//!
//! Codebooks are lazy: codeword symbols are pure functions of
//! `(seed, encoder, w, z)` pushed through the per-encoder conditional law at
//! the realized states, so only visited codewords are ever materialized.
//! `run_trials` redraws the codebook per trial (a fresh random-coding
//! ensemble member) by deriving a per-trial stream from the root seed;
//! everything is bit-reproducible from the config.

use crate::bounds::CoutBudget;
use crate::channel::{CausalityTag, ChannelError, InputPolicy, StateMac};
use crate::prob::{Axis, CondKernel, Dist, ProbError, RngKey, TypicalityTest};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const TAG_CODEWORD: u64 = 1;
const TAG_STATE: u64 = 2;
const TAG_MESSAGE: u64 = 3;
const TAG_CHANNEL: u64 = 4;
const TAG_TRIAL: u64 = 5;

/// Decoder enumeration guard.
const MAX_DECODE_TUPLES: u128 = 1 << 30;
/// Message/index spaces must stay addressable by one u64.
const MAX_INDEX_BITS: f64 = 62.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation supports the no-state and state-cooperation regimes; pre-lift Shannon strategies onto the channel first")]
    UnsupportedTau,
    #[error("policy shape incompatible with the simulated regime")]
    PolicyShape,
    #[error("CF pair space {pairs} exceeds search_cap {cap}")]
    PairSpaceExceedsCap { pairs: u128, cap: u64 },
    #[error("decoder would enumerate 2^{log2_tuples:.1} (w,z) tuples, beyond the 2^30 guard")]
    TupleEnumerationExceeded { log2_tuples: f64 },
    #[error("n*rate = {bits:.1} bits cannot be indexed by a u64 message id")]
    MessageSpaceTooLarge { bits: f64 },
    #[error("typicality slacks must be positive")]
    BadSlack,
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Full configuration of one simulated code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeConfig {
    /// Blocklength.
    pub n: usize,
    /// Message rates in bits per channel use.
    pub r1: f64,
    pub r2: f64,
    /// CF output budget in bits per channel use (list sizes `floor(2^(n c))`).
    pub budget: CoutBudget,
    /// CF typicality slack.
    pub delta: f64,
    /// Decoder typicality slack.
    pub eps_dec: f64,
    /// `NoState` or `NoncausalStateCoop`; lift other regimes first.
    pub tau: CausalityTag,
    pub policy: InputPolicy,
    pub seed: u64,
    pub trials: usize,
    /// Cap on the CF pair scan (default `2^20`).
    pub search_cap: u64,
}

impl CodeConfig {
    pub fn new(tau: CausalityTag, policy: InputPolicy) -> Self {
        Self {
            n: 100,
            r1: 0.0,
            r2: 0.0,
            budget: CoutBudget::zero(),
            delta: 0.05,
            eps_dec: 0.05,
            tau,
            policy,
            seed: 0,
            trials: 100,
            search_cap: 1 << 20,
        }
    }

    pub fn m1(&self) -> u64 {
        block_count(self.n, self.r1)
    }

    pub fn m2(&self) -> u64 {
        block_count(self.n, self.r2)
    }

    pub fn l1(&self) -> u64 {
        block_count(self.n, self.budget.c1)
    }

    pub fn l2(&self) -> u64 {
        block_count(self.n, self.budget.c2)
    }

    fn validate(&self, mac: &StateMac) -> Result<()> {
        if self.n == 0 || self.delta <= 0.0 || self.eps_dec <= 0.0 {
            return Err(SimError::BadSlack);
        }
        match self.tau {
            CausalityTag::NoState => {
                if !self.policy.is_state_independent() {
                    return Err(SimError::PolicyShape);
                }
            }
            CausalityTag::NoncausalStateCoop => {
                if matches!(self.policy, InputPolicy::ShannonStrategy { .. }) {
                    return Err(SimError::PolicyShape);
                }
            }
            _ => return Err(SimError::UnsupportedTau),
        }
        for bits in [
            self.n as f64 * self.r1,
            self.n as f64 * self.r2,
            self.n as f64 * self.budget.c1,
            self.n as f64 * self.budget.c2,
        ] {
            if bits > MAX_INDEX_BITS {
                return Err(SimError::MessageSpaceTooLarge { bits });
            }
        }
        let _ = mac;
        Ok(())
    }
}

fn block_count(n: usize, rate: f64) -> u64 {
    (n as f64 * rate).exp2().floor().max(1.0) as u64
}

/// Aggregate outcome of a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: usize,
    pub cf_success_rate: f64,
    pub error_rate: f64,
    /// Wilson 95% interval for the error rate.
    pub error_ci: (f64, f64),
    /// Wilson 95% interval for the CF success rate.
    pub cf_ci: (f64, f64),
    /// Empirical mean per-symbol input costs, when the channel defines them.
    pub mean_costs: Option<(f64, f64)>,
}

/// Wilson 95% score interval.
pub fn wilson_95(successes: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Precomputed laws and typicality tables shared across trials.
struct Engine {
    n: usize,
    m1: u64,
    m2: u64,
    l1: u64,
    l2: u64,
    /// `p(x1|s1)` codebook law (rows identical for state-independent
    /// policies).
    enc1: CondKernel,
    enc2: CondKernel,
    cf_test: TypicalityTest,
    /// Full decode group flattened for the hot loop.
    dec: DecodeTable,
    state_flat: Dist,
    s2n: usize,
    kernel_rows: Vec<f64>,
    x1n: usize,
    x2n: usize,
    yn: usize,
    costs: Option<(Vec<f64>, Vec<f64>)>,
    eps_dec: f64,
    search_cap: u64,
}

struct DecodeTable {
    /// `-log2 p(s1,s2,x1,x2,y)` flattened in that axis order.
    neg_log: Vec<f64>,
    entropy: f64,
    sizes: [usize; 5],
}

impl Engine {
    fn new(mac: &StateMac, config: &CodeConfig) -> Result<Self> {
        config.validate(mac)?;
        let law = config.policy.conditional_input_law(mac)?;
        let joint = mac.induced_joint(&config.policy)?;
        let enc1 = joint.conditional(&[Axis::X1], &[Axis::S1])?;
        let enc2 = joint.conditional(&[Axis::X2], &[Axis::S2])?;
        let cf_joint = joint.marginal(&[Axis::S1, Axis::S2, Axis::X1, Axis::X2])?;
        let cf_groups = vec![
            vec![Axis::S1, Axis::X1],
            vec![Axis::S2, Axis::X2],
            vec![Axis::S1, Axis::S2],
        ];
        let cf_test = TypicalityTest::prepare(&cf_joint, &cf_groups, config.delta)?;
        let dec_marginal = joint.marginal(&[Axis::S1, Axis::S2, Axis::X1, Axis::X2, Axis::Y])?;
        let entropy = crate::prob::entropy_of(dec_marginal.table());
        let neg_log = dec_marginal
            .table()
            .iter()
            .map(|&p| if p > 0.0 { -p.log2() } else { f64::INFINITY })
            .collect();
        let sizes = [
            mac.s1_size(),
            mac.s2_size(),
            mac.x1_size(),
            mac.x2_size(),
            mac.y_size(),
        ];
        let _ = law;
        Ok(Self {
            n: config.n,
            m1: config.m1(),
            m2: config.m2(),
            l1: config.l1(),
            l2: config.l2(),
            enc1,
            enc2,
            cf_test,
            dec: DecodeTable {
                neg_log,
                entropy,
                sizes,
            },
            state_flat: Dist::new(mac.state_law().table().to_vec())?,
            s2n: mac.s2_size(),
            kernel_rows: mac.kernel().rows_flat().to_vec(),
            x1n: mac.x1_size(),
            x2n: mac.x2_size(),
            yn: mac.y_size(),
            costs: mac.costs().map(|c| (c.b1.clone(), c.b2.clone())),
            eps_dec: config.eps_dec,
            search_cap: config.search_cap,
        })
    }

    /// Lazy codeword: deterministic in `(base key, encoder, w, z, states)`.
    fn codeword(&self, base: &RngKey, encoder: u8, w: u64, z: u64, states: &[usize]) -> Vec<usize> {
        let key = base
            .with(TAG_CODEWORD)
            .with(encoder as u64)
            .with(w)
            .with(z);
        let law = if encoder == 1 { &self.enc1 } else { &self.enc2 };
        let mut rng = key.rng();
        states
            .iter()
            .map(|&s| {
                let row = law.row(s);
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
                pick
            })
            .collect()
    }

    /// Lexicographic CF scan; `(0, 0, false)` when nothing is typical.
    fn cf_select(
        &self,
        base: &RngKey,
        w1: u64,
        w2: u64,
        s1: &[usize],
        s2: &[usize],
    ) -> Result<(u64, u64, bool)> {
        let pairs = self.l1 as u128 * self.l2 as u128;
        if pairs > self.search_cap as u128 {
            return Err(SimError::PairSpaceExceedsCap {
                pairs,
                cap: self.search_cap,
            });
        }
        let mut x2_memo: Vec<Option<Vec<usize>>> = vec![None; self.l2 as usize];
        for z1 in 0..self.l1 {
            let x1 = self.codeword(base, 1, w1, z1, s1);
            for z2 in 0..self.l2 {
                let x2 = x2_memo[z2 as usize]
                    .get_or_insert_with(|| self.codeword(base, 2, w2, z2, s2));
                let seqs = [
                    (Axis::S1, s1),
                    (Axis::S2, s2),
                    (Axis::X1, &x1[..]),
                    (Axis::X2, &x2[..]),
                ];
                if self.cf_test.check(&seqs)? {
                    return Ok((z1, z2, true));
                }
            }
        }
        Ok((0, 0, false))
    }

    /// Exhaustive typicality decoding; `(0,0)` when no unique message pair
    /// passes.
    fn decode(
        &self,
        base: &RngKey,
        s1: &[usize],
        s2: &[usize],
        y: &[usize],
    ) -> Result<(u64, u64)> {
        let tuples =
            self.m1 as u128 * self.l1 as u128 * self.m2 as u128 * self.l2 as u128;
        if tuples > MAX_DECODE_TUPLES {
            return Err(SimError::TupleEnumerationExceeded {
                log2_tuples: (tuples as f64).log2(),
            });
        }
        let n = self.n;
        let d = &self.dec;
        let [_, ns2, nx1, nx2, ny] = d.sizes;
        let st_x1 = nx2 * ny;
        let st_x2 = ny;
        // base offset per symbol (everything except the inputs)
        let mut base_idx = Vec::with_capacity(n);
        for t in 0..n {
            let idx = (((s1[t] * ns2) + s2[t]) * nx1 * nx2 * ny) + y[t];
            base_idx.push(idx);
        }
        let hi = n as f64 * (d.entropy + self.eps_dec);
        let lo = n as f64 * (d.entropy - self.eps_dec);

        // iterate with the smaller side memoized
        let side1 = self.m1 as u128 * self.l1 as u128;
        let side2 = self.m2 as u128 * self.l2 as u128;
        let memo_first = side1 <= side2;
        let (memo_m, memo_l, memo_enc, memo_s) = if memo_first {
            (self.m1, self.l1, 1u8, s1)
        } else {
            (self.m2, self.l2, 2u8, s2)
        };
        let (outer_m, outer_l, outer_enc, outer_s) = if memo_first {
            (self.m2, self.l2, 2u8, s2)
        } else {
            (self.m1, self.l1, 1u8, s1)
        };
        let memo: Vec<Vec<usize>> = (0..memo_m * memo_l)
            .map(|i| {
                let (w, z) = (i / memo_l, i % memo_l);
                self.codeword(base, memo_enc, w, z, memo_s)
            })
            .collect();

        let mut winner: Option<(u64, u64)> = None;
        for wo in 0..outer_m {
            for zo in 0..outer_l {
                let xo = self.codeword(base, outer_enc, wo, zo, outer_s);
                let contrib: Vec<usize> = (0..n)
                    .map(|t| {
                        base_idx[t]
                            + xo[t] * if memo_first { st_x2 } else { st_x1 }
                    })
                    .collect();
                for (i, xm) in memo.iter().enumerate() {
                    let wm = i as u64 / memo_l;
                    let mut acc = 0.0;
                    let mut dead = false;
                    let st = if memo_first { st_x1 } else { st_x2 };
                    for t in 0..n {
                        let v = d.neg_log[contrib[t] + xm[t] * st];
                        if v.is_infinite() {
                            dead = true;
                            break;
                        }
                        acc += v;
                        if acc > hi {
                            dead = true;
                            break;
                        }
                    }
                    if dead || acc < lo {
                        continue;
                    }
                    let pair = if memo_first { (wm, wo) } else { (wo, wm) };
                    match winner {
                        None => winner = Some(pair),
                        Some(p) if p == pair => {}
                        Some(_) => return Ok((0, 0)),
                    }
                }
            }
        }
        Ok(winner.unwrap_or((0, 0)))
    }

    fn sample_states(&self, base: &RngKey) -> (Vec<usize>, Vec<usize>) {
        let seq = crate::prob::sample_iid(&self.state_flat, self.n, &base.with(TAG_STATE));
        let s1 = seq.iter().map(|&s| s / self.s2n).collect();
        let s2 = seq.iter().map(|&s| s % self.s2n).collect();
        (s1, s2)
    }

    fn transmit(
        &self,
        base: &RngKey,
        s1: &[usize],
        s2: &[usize],
        x1: &[usize],
        x2: &[usize],
    ) -> Vec<usize> {
        let mut rng = base.with(TAG_CHANNEL).rng();
        (0..self.n)
            .map(|t| {
                let row_idx =
                    ((s1[t] * self.s2n + s2[t]) * self.x1n + x1[t]) * self.x2n + x2[t];
                let row = &self.kernel_rows[row_idx * self.yn..(row_idx + 1) * self.yn];
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                let mut pick = self.yn - 1;
                for (i, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// One lazily generated codeword `x_i^n(w, z | s_i^n)`.
pub fn codeword_for(
    mac: &StateMac,
    config: &CodeConfig,
    encoder: u8,
    w: u64,
    z: u64,
    states: &[usize],
) -> Result<Vec<usize>> {
    let engine = Engine::new(mac, config)?;
    Ok(engine.codeword(&RngKey::new(config.seed), encoder, w, z, states))
}

/// The CF's lexicographic typical-pair search.
pub fn cf_select(
    mac: &StateMac,
    config: &CodeConfig,
    w1: u64,
    w2: u64,
    s1: &[usize],
    s2: &[usize],
) -> Result<(u64, u64, bool)> {
    let engine = Engine::new(mac, config)?;
    engine.cf_select(&RngKey::new(config.seed), w1, w2, s1, s2)
}

/// Exhaustive weak-typicality decoding over all `(w, z)` tuples.
pub fn decode_typical(
    mac: &StateMac,
    config: &CodeConfig,
    y: &[usize],
    s1: &[usize],
    s2: &[usize],
) -> Result<(u64, u64)> {
    let engine = Engine::new(mac, config)?;
    engine.decode(&RngKey::new(config.seed), s1, s2, y)
}

/// The three CF feasibility thresholds (bits per use) for a target input
/// joint at slack `delta`, and the verdict for a budget.
///
/// `t1 = H(X1|S1) - H(X1|S1,S2) + 24 delta`,
/// `t2 = H(X2|S2) - H(X2|S1,S2) + 24 delta`,
/// `t_sum = H(X1|S1) + H(X2|S2) - H(X1,X2|S1,S2) + 6 delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfThresholds {
    pub t1: f64,
    pub t2: f64,
    pub t_sum: f64,
}

impl CfThresholds {
    /// True iff the budget strictly exceeds every threshold.
    pub fn satisfied_by(&self, budget: CoutBudget) -> bool {
        budget.c1 > self.t1 && budget.c2 > self.t2 && budget.sum() > self.t_sum
    }
}

pub fn cf_feasibility_thresholds(
    mac: &StateMac,
    policy: &InputPolicy,
    delta: f64,
) -> Result<CfThresholds> {
    if matches!(policy, InputPolicy::ShannonStrategy { .. }) {
        return Err(SimError::PolicyShape);
    }
    let j = mac.induced_joint(policy)?;
    let (a1, a2, a12, _) =
        crate::bounds::dependence_measures(&j).map_err(|_| SimError::PolicyShape)?;
    Ok(CfThresholds {
        t1: a1 + 24.0 * delta,
        t2: a2 + 24.0 * delta,
        t_sum: a1 + a2 + a12 + 6.0 * delta,
    })
}

/// Run the full protocol for `config.trials` independent trials.
pub fn run_trials(mac: &StateMac, config: &CodeConfig) -> Result<SimResult> {
    let engine = Engine::new(mac, config)?;
    // fail fast on configs the decoder guard would reject anyway
    let tuples = config.m1() as u128
        * config.l1() as u128
        * config.m2() as u128
        * config.l2() as u128;
    if tuples > MAX_DECODE_TUPLES {
        return Err(SimError::TupleEnumerationExceeded {
            log2_tuples: (tuples as f64).log2(),
        });
    }
    let root = RngKey::new(config.seed);
    let outcomes: Vec<Result<(bool, bool, f64, f64)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let base = root.with(TAG_TRIAL).with(trial as u64);
            let (s1, s2) = engine.sample_states(&base);
            let mut mrng = base.with(TAG_MESSAGE).rng();
            let w1 = mrng.random_range(0..engine.m1);
            let w2 = mrng.random_range(0..engine.m2);
            let (z1, z2, found) = engine.cf_select(&base, w1, w2, &s1, &s2)?;
            let x1 = engine.codeword(&base, 1, w1, z1, &s1);
            let x2 = engine.codeword(&base, 2, w2, z2, &s2);
            let y = engine.transmit(&base, &s1, &s2, &x1, &x2);
            let (w1_hat, w2_hat) = engine.decode(&base, &s1, &s2, &y)?;
            let error = (w1_hat, w2_hat) != (w1, w2);
            let (c1, c2) = match &engine.costs {
                Some((b1, b2)) => {
                    let c1: f64 = x1.iter().map(|&x| b1[x]).sum::<f64>() / engine.n as f64;
                    let c2: f64 = x2.iter().map(|&x| b2[x]).sum::<f64>() / engine.n as f64;
                    (c1, c2)
                }
                None => (0.0, 0.0),
            };
            Ok((error, found, c1, c2))
        })
        .collect();
    let mut errors = 0usize;
    let mut cf_hits = 0usize;
    let (mut cost1, mut cost2) = (0.0, 0.0);
    for o in outcomes {
        let (error, found, c1, c2) = o?;
        if error {
            errors += 1;
        }
        if found {
            cf_hits += 1;
        }
        cost1 += c1;
        cost2 += c2;
    }
    let t = config.trials;
    Ok(SimResult {
        trials: t,
        cf_success_rate: cf_hits as f64 / t as f64,
        error_rate: errors as f64 / t as f64,
        error_ci: wilson_95(errors, t),
        cf_ci: wilson_95(cf_hits, t),
        mean_costs: engine
            .costs
            .as_ref()
            .map(|_| (cost1 / t as f64, cost2 / t as f64)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_builtin, Builtin};

    fn mod3() -> StateMac {
        make_builtin(&Builtin::Mod3Adder).unwrap()
    }

    fn uniform_cfg(tau: CausalityTag) -> CodeConfig {
        let mac = mod3();
        CodeConfig::new(tau, InputPolicy::uniform_independent(&mac))
    }

    #[test]
    fn codewords_are_deterministic_and_policy_shaped() {
        let mac = mod3();
        let mut cfg = uniform_cfg(CausalityTag::NoState);
        cfg.n = 50;
        let s = vec![0usize; 50];
        let a = codeword_for(&mac, &cfg, 1, 3, 1, &s).unwrap();
        let b = codeword_for(&mac, &cfg, 1, 3, 1, &s).unwrap();
        assert_eq!(a, b);
        let c = codeword_for(&mac, &cfg, 1, 3, 2, &s).unwrap();
        assert_ne!(a, c);

        // point-mass policy gives a constant codeword
        let mut cfg = CodeConfig::new(
            CausalityTag::NoState,
            InputPolicy::point_mass(&mac, 1, 0),
        );
        cfg.n = 20;
        let s = vec![1usize; 20];
        assert_eq!(
            codeword_for(&mac, &cfg, 1, 0, 0, &s).unwrap(),
            vec![1usize; 20]
        );
        // encoder 2 conditions on S2, degenerate for this channel
        let s2 = vec![0usize; 20];
        assert_eq!(
            codeword_for(&mac, &cfg, 2, 0, 0, &s2).unwrap(),
            vec![0usize; 20]
        );
    }

    #[test]
    fn codeword_state_frequencies_match_conditional_law() {
        // conditional law p(x|s) distinguishable per state
        let mac = make_builtin(&Builtin::RandomSeeded {
            sizes: [2, 1, 3, 2, 3],
            seed: 11,
        })
        .unwrap();
        let law = CondKernel::new(
            vec![Axis::S1],
            vec![2],
            vec![Axis::X1],
            vec![3],
            vec![0.7, 0.2, 0.1, 0.1, 0.3, 0.6],
        )
        .unwrap();
        let pol = InputPolicy::CondIndependent {
            px1: law.clone(),
            px2: CondKernel::new(
                vec![Axis::S2],
                vec![1],
                vec![Axis::X2],
                vec![2],
                vec![0.5, 0.5],
            )
            .unwrap(),
        };
        let mut cfg = CodeConfig::new(CausalityTag::NoncausalStateCoop, pol);
        cfg.n = 4000;
        let mac = mac;
        let s: Vec<usize> = (0..cfg.n).map(|t| t % 2).collect();
        let mut counts = [[0f64; 3]; 2];
        for w in 0..10u64 {
            let x = codeword_for(&mac, &cfg, 1, w, 0, &s).unwrap();
            for t in 0..cfg.n {
                counts[s[t]][x[t]] += 1.0;
            }
        }
        let per_state = (10 * cfg.n / 2) as f64;
        for s_val in 0..2 {
            for x in 0..3 {
                let freq = counts[s_val][x] / per_state;
                assert!(
                    (freq - law.row(s_val)[x]).abs() < 0.02,
                    "state {s_val} symbol {x}: {freq}"
                );
            }
        }
    }

    #[test]
    fn zero_budget_cf_has_single_candidate() {
        let mac = mod3();
        let mut cfg = uniform_cfg(CausalityTag::NoState);
        cfg.n = 120;
        cfg.delta = 0.2;
        let root = RngKey::new(9).with(77);
        let seq = crate::prob::sample_iid(
            &Dist::new(mac.state_law().table().to_vec()).unwrap(),
            cfg.n,
            &root,
        );
        let s1 = seq;
        let s2 = vec![0usize; cfg.n];
        let (z1, z2, _found) = cf_select(&mac, &cfg, 0, 0, &s1, &s2).unwrap();
        assert_eq!((z1, z2), (0, 0));
    }

    #[test]
    fn pair_space_cap_enforced() {
        let mac = mod3();
        let mut cfg = uniform_cfg(CausalityTag::NoState);
        cfg.n = 100;
        cfg.budget = CoutBudget::new(0.2, 0.2);
        cfg.search_cap = 1 << 10;
        let s1 = vec![0usize; 100];
        let s2 = vec![0usize; 100];
        match cf_select(&mac, &cfg, 0, 0, &s1, &s2) {
            Err(SimError::PairSpaceExceedsCap { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn decoder_guard_rejects_exponential_enumerations() {
        let mac = mod3();
        let mut cfg = uniform_cfg(CausalityTag::NoState);
        cfg.n = 200;
        cfg.r1 = 0.70;
        cfg.r2 = 0.70;
        match run_trials(&mac, &cfg) {
            Err(SimError::MessageSpaceTooLarge { .. })
            | Err(SimError::TupleEnumerationExceeded { .. }) => {}
            other => panic!("expected enumeration guard, got {other:?}"),
        }
    }

    #[test]
    fn zero_rate_code_never_errs() {
        let mac = mod3();
        let mut cfg = uniform_cfg(CausalityTag::NoState);
        cfg.n = 60;
        cfg.trials = 50;
        cfg.seed = 1234;
        let res = run_trials(&mac, &cfg).unwrap();
        assert_eq!(res.error_rate, 0.0);
        assert_eq!(res.trials, 50);
    }

    #[test]
    fn results_reproduce_bit_for_bit() {
        let mac = mod3();
        let mut cfg = uniform_cfg(CausalityTag::NoState);
        cfg.n = 40;
        cfg.r1 = 0.25;
        cfg.r2 = 0.25;
        cfg.trials = 30;
        cfg.seed = 77;
        let a = run_trials(&mac, &cfg).unwrap();
        let b = run_trials(&mac, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thresholds_examples() {
        let mac = mod3();
        // conditionally independent policy: entropy differences vanish
        let pol = InputPolicy::uniform_independent(&mac);
        let th = cf_feasibility_thresholds(&mac, &pol, 0.01).unwrap();
        assert!((th.t1 - 0.24).abs() < 1e-9);
        assert!((th.t2 - 0.24).abs() < 1e-9);
        assert!((th.t_sum - 0.06).abs() < 1e-9);

        // the log2(3)-achieving joint: sum threshold carries I(X1;X2)
        let joint = InputPolicy::state_independent_joint(
            &mac,
            vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0],
        )
        .unwrap();
        let th = cf_feasibility_thresholds(&mac, &joint, 0.0).unwrap();
        assert!(th.t1.abs() < 1e-9, "state-independent joint: t1 = I(X1;S2|S1) = 0");
        assert!(th.t2.abs() < 1e-9);
        assert!((th.t_sum - 0.081704165945510).abs() < 1e-9);

        // affine in delta
        let th2 = cf_feasibility_thresholds(&mac, &joint, 0.01).unwrap();
        assert!((th2.t1 - th.t1 - 0.24).abs() < 1e-12);
        assert!((th2.t_sum - th.t_sum - 0.06).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_brackets_point_estimate() {
        for &(s, n) in &[(0usize, 10usize), (5, 10), (10, 10), (50, 500)] {
            let (lo, hi) = wilson_95(s, n);
            let p = s as f64 / n as f64;
            assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }
    }
}

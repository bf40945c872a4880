//! Sum-capacity baselines, cooperation inner bounds, rate regions, outer
//! regions, and time-sharing combinations.
//!
//! The maximizations here are nonconvex once input dependence enters, so the
//! solver is multistart block ascent: each simplex block is driven by a
//! multiplicative (exponentiated-gradient) update with backtracking, budget
//! constraints enter through an escalating exterior quadratic penalty, and
//! every reported value is re-evaluated at a strictly feasible policy. The
//! returned number is therefore always an achievable (lower-bound) value;
//! golden tests cross-check the small builtins against exhaustive grids.

mod solver;

use crate::channel::{
    CausalityTag, ChannelError, InputPolicy, StateMac, StrategyMap,
};
use crate::prob::{Axis, JointDist, ProbError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("cost budgets admit no feasible policy")]
    InfeasibleCosts,
    #[error("{pairs} deterministic map pairs exceed the 1e6 enumeration cap; use smaller auxiliary alphabets")]
    MapEnumerationTooLarge { pairs: u128 },
    #[error("auxiliary alphabet {size} too large; pass explicit u_sizes")]
    AuxAlphabetTooLarge { size: usize },
    #[error("policy shape does not match the causality regime (expected {expected})")]
    PolicyShape { expected: &'static str },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, BoundError>;

/// CF output edge capacities in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoutBudget {
    pub c1: f64,
    pub c2: f64,
}

impl CoutBudget {
    pub fn new(c1: f64, c2: f64) -> Self {
        assert!(c1 >= 0.0 && c2 >= 0.0, "budgets must be nonnegative");
        Self { c1, c2 }
    }

    pub fn zero() -> Self {
        Self { c1: 0.0, c2: 0.0 }
    }

    pub fn sum(&self) -> f64 {
        self.c1 + self.c2
    }
}

/// How hard the multistart solver works.
#[derive(Debug, Clone)]
pub struct SolveOpts {
    /// Random restarts in addition to the canonical starts (uniform,
    /// baseline argmax, caller-provided warm starts).
    pub starts: usize,
    /// Seed for the restart draws.
    pub seed: u64,
    /// Auxiliary alphabet sizes for the causal/non-causal regimes.
    /// `None` uses the canonical full function alphabet `|U_i| = |X_i|^|S_i|`
    /// (which dominates every smaller choice); `Some` enumerates all
    /// deterministic map pairs at the given sizes.
    pub u_sizes: Option<(usize, usize)>,
    /// Warm-start policies (projected to feasibility before use).
    pub warm_starts: Vec<InputPolicy>,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0xC00B_5EED,
            u_sizes: None,
            warm_starts: Vec::new(),
        }
    }
}

/// Convergence bookkeeping from the multistart solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub starts: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// A computed sum-rate bound with its achieving policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SumRateBound {
    /// Bits per channel use; a feasible-point (lower) bound.
    pub value: f64,
    pub achieving_policy: InputPolicy,
    /// Named constraint usages and slacks (dependence budget, costs).
    pub constraint_slacks: BTreeMap<String, f64>,
    pub report: OptimizerReport,
}

/// Region provenance: achievable (inner) or converse (outer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Inner,
    Outer,
}

/// A rate region `{R1 <= a, R2 <= b, R1+R2 <= c, R >= 0}` stored in reduced
/// form: each stored face value is the exact support of the region in its
/// direction, so time-sharing composes facewise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    r1_max: f64,
    r2_max: f64,
    sum_max: f64,
    pub provenance: Provenance,
}

/// One half-plane constraint `a R1 + b R2 <= c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl RateRegion {
    /// Build from raw pentagon faces, reducing to exact supports.
    pub fn from_pentagon(a: f64, b: f64, c: f64, provenance: Provenance) -> Self {
        let a = a.max(0.0);
        let b = b.max(0.0);
        let c = c.max(0.0);
        Self {
            r1_max: a.min(c),
            r2_max: b.min(c),
            sum_max: c.min(a + b),
            provenance,
        }
    }

    pub fn r1_max(&self) -> f64 {
        self.r1_max
    }

    pub fn r2_max(&self) -> f64 {
        self.r2_max
    }

    /// Maximum of `R1 + R2` over the region.
    pub fn max_sum_rate(&self) -> f64 {
        self.sum_max
    }

    pub fn half_planes(&self) -> [HalfPlane; 3] {
        [
            HalfPlane { a: 1.0, b: 0.0, c: self.r1_max },
            HalfPlane { a: 0.0, b: 1.0, c: self.r2_max },
            HalfPlane { a: 1.0, b: 1.0, c: self.sum_max },
        ]
    }

    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        r1 >= -tol
            && r2 >= -tol
            && r1 <= self.r1_max + tol
            && r2 <= self.r2_max + tol
            && r1 + r2 <= self.sum_max + tol
    }
}

/// Minkowski time-sharing combination `mu . A (+) (1-mu) . B`.
///
/// Supports add under scaling and Minkowski sums, and both operands are in
/// reduced pentagon form, so the facewise combination is exact.
pub fn time_share_combine(ra: &RateRegion, rb: &RateRegion, mu: f64) -> RateRegion {
    assert!((0.0..=1.0).contains(&mu), "mu must lie in [0,1]");
    let lam = 1.0 - mu;
    RateRegion {
        r1_max: mu * ra.r1_max + lam * rb.r1_max,
        r2_max: mu * ra.r2_max + lam * rb.r2_max,
        sum_max: mu * ra.sum_max + lam * rb.sum_max,
        provenance: if ra.provenance == rb.provenance {
            ra.provenance
        } else {
            Provenance::Inner
        },
    }
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// No-cooperation sum-capacity baseline.
///
/// For the no-state regimes this maximizes `I(X1,X2;Y|S)` over products
/// `p(x1) p(x2)`; from the causal regime onward over conditionally
/// independent `p(x1|s1) p(x2|s2)`. Alternating concave block ascent with
/// multistarts; each block is solved to a KKT gap of 1e-9.
pub fn baseline_sum_capacity(
    mac: &StateMac,
    tau: CausalityTag,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    solver::solve_baseline(mac, tau.state_aware(), opts)
}

/// Cooperation inner bound on the sum rate at a CF output budget.
///
/// * no-state / strictly causal: max `I(X1,X2;Y|S)` over joints `p(x1,x2)`
///   with `I(X1;X2) <= c1 + c2`;
/// * causal / non-causal: the same over Shannon-strategy auxiliaries
///   `p(u1,u2)` on the lifted channel with `I(U1;U2) <= c1 + c2`;
/// * non-causal with state cooperation: max over `p(x1,x2|s1,s2)` subject to
///   the three coordination constraints
///   `H(X1|S1) - H(X1|S1,S2) <= c1`, `H(X2|S2) - H(X2|S1,S2) <= c2`,
///   `H(X1|S1) + H(X2|S2) - H(X1,X2|S1,S2) <= c1 + c2`.
///
/// The returned value is evaluated at a strictly feasible policy.
pub fn inner_sum_rate(
    mac: &StateMac,
    tau: CausalityTag,
    budget: CoutBudget,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    match tau {
        CausalityTag::NoState | CausalityTag::StrictlyCausal => {
            solver::solve_inner_message(mac, budget, opts)
        }
        CausalityTag::Causal | CausalityTag::Noncausal => {
            solver::solve_inner_shannon(mac, budget, opts)
        }
        CausalityTag::NoncausalStateCoop => solver::solve_inner_state_coop(mac, budget, opts),
    }
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

/// The three-face achievable region at a fixed policy.
pub fn rate_region_at_policy(
    mac: &StateMac,
    tau: CausalityTag,
    policy: &InputPolicy,
) -> Result<RateRegion> {
    let (a1, a2): (&[Axis], &[Axis]) = match tau {
        CausalityTag::Causal | CausalityTag::Noncausal => {
            if !matches!(policy, InputPolicy::ShannonStrategy { .. }) {
                return Err(BoundError::PolicyShape {
                    expected: "ShannonStrategy for the causal regimes",
                });
            }
            (&[Axis::U1], &[Axis::U2])
        }
        CausalityTag::NoState | CausalityTag::StrictlyCausal => {
            if !policy.is_state_independent() {
                return Err(BoundError::PolicyShape {
                    expected: "state-independent policy for the no-state regimes",
                });
            }
            (&[Axis::X1], &[Axis::X2])
        }
        CausalityTag::NoncausalStateCoop => {
            if matches!(policy, InputPolicy::ShannonStrategy { .. }) {
                return Err(BoundError::PolicyShape {
                    expected: "an input-law policy (not a Shannon strategy)",
                });
            }
            (&[Axis::X1], &[Axis::X2])
        }
    };
    let j = mac.induced_joint(policy)?;
    let s: Vec<Axis> = vec![Axis::S1, Axis::S2];
    let mut s_with_b: Vec<Axis> = s.clone();
    s_with_b.extend_from_slice(a2);
    let mut s_with_a: Vec<Axis> = s.clone();
    s_with_a.extend_from_slice(a1);
    let r1 = j.cond_mutual_info(a1, &[Axis::Y], &s_with_b)?;
    let r2 = j.cond_mutual_info(a2, &[Axis::Y], &s_with_a)?;
    let ab: Vec<Axis> = a1.iter().chain(a2.iter()).copied().collect();
    let sum = j.cond_mutual_info(&ab, &[Axis::Y], &s)?;
    Ok(RateRegion::from_pentagon(r1, r2, sum, Provenance::Inner))
}

/// No-cooperation outer region.
///
/// The sum-rate face is exact (time-sharing over the auxiliary `Q` averages
/// sum rates, so it collapses to the Q-free baseline). The individual-rate
/// faces are the best values found by the same multistart machinery and are
/// reported as such.
pub fn no_coop_outer_region(
    mac: &StateMac,
    tau: CausalityTag,
    opts: &SolveOpts,
) -> Result<RateRegion> {
    let baseline = baseline_sum_capacity(mac, tau, opts)?;
    let (r1, r2) = solver::individual_rate_supports(mac, tau.state_aware(), &baseline, opts)?;
    Ok(RateRegion::from_pentagon(
        r1,
        r2,
        baseline.value,
        Provenance::Outer,
    ))
}

// ---------------------------------------------------------------------------
// Shared evaluation helpers (also used by gain analysis)
// ---------------------------------------------------------------------------

/// `I(X1,X2;Y|S1,S2)` (or the `U` version for Shannon strategies) at a policy.
pub fn sum_rate_at_policy(mac: &StateMac, policy: &InputPolicy) -> Result<f64> {
    let j = mac.induced_joint(policy)?;
    let pair: &[Axis] = if matches!(policy, InputPolicy::ShannonStrategy { .. }) {
        &[Axis::U1, Axis::U2]
    } else {
        &[Axis::X1, Axis::X2]
    };
    Ok(j.cond_mutual_info(pair, &[Axis::Y], &[Axis::S1, Axis::S2])?)
}

/// Dependence measures of a policy against the coordination constraints:
/// `(I(X1;S2|S1), I(X2;S1|S2), I(X1;X2|S1,S2), I(X1;X2))`.
pub fn dependence_measures(j: &JointDist) -> Result<(f64, f64, f64, f64)> {
    let a1 = j.cond_mutual_info(&[Axis::X1], &[Axis::S2], &[Axis::S1])?;
    let a2 = j.cond_mutual_info(&[Axis::X2], &[Axis::S1], &[Axis::S2])?;
    let a12 = j.cond_mutual_info(&[Axis::X1], &[Axis::X2], &[Axis::S1, Axis::S2])?;
    let i = j.cond_mutual_info(&[Axis::X1], &[Axis::X2], &[])?;
    Ok((a1, a2, a12, i))
}

pub(crate) fn canonical_maps(mac: &StateMac) -> Result<(StrategyMap, StrategyMap)> {
    let u1 = (mac.x1_size() as u128).pow(mac.s1_size() as u32);
    let u2 = (mac.x2_size() as u128).pow(mac.s2_size() as u32);
    if u1 > 256 || u2 > 256 {
        return Err(BoundError::AuxAlphabetTooLarge {
            size: u1.max(u2) as usize,
        });
    }
    Ok((
        StrategyMap::full_function_table(mac.x1_size(), mac.s1_size()),
        StrategyMap::full_function_table(mac.x2_size(), mac.s2_size()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_reduction_and_time_share() {
        let a = RateRegion::from_pentagon(2.0, 2.0, 1.0, Provenance::Inner);
        assert_eq!(a.r1_max(), 1.0);
        assert_eq!(a.max_sum_rate(), 1.0);

        let b = RateRegion::from_pentagon(1.0, 0.0, 5.0, Provenance::Inner);
        assert_eq!(b.max_sum_rate(), 1.0);
        assert_eq!(b.r2_max(), 0.0);

        // mu = 1 and mu = 0 return the operands
        let c = time_share_combine(&a, &b, 1.0);
        assert_eq!(c, RateRegion { provenance: Provenance::Inner, ..a });
        let c = time_share_combine(&a, &b, 0.0);
        assert_eq!(c.max_sum_rate(), b.max_sum_rate());

        // sum-rate support is exactly affine in mu
        for &mu in &[0.25, 0.5, 0.75] {
            let c = time_share_combine(&a, &b, mu);
            let expect = mu * a.max_sum_rate() + (1.0 - mu) * b.max_sum_rate();
            assert_eq!(c.max_sum_rate(), expect);
        }
    }

    #[test]
    fn region_contains_origin() {
        let r = RateRegion::from_pentagon(0.3, 0.7, 0.8, Provenance::Outer);
        assert!(r.contains(0.0, 0.0, 0.0));
        assert!(!r.contains(0.31, 0.0, 1e-9));
    }
}

//! Class membership checks, the functional-representation construction, the
//! perturbation path `lambda*(h)`, derivative identities, and slope-profile
//! certification of infinite-slope cooperation gain.
//!
//! The membership predicate exploits the linearity of
//! `I1(X1,X2;Y|S) + E[D(p1(y|S) || p0(y|S))]` in `p1`: the expression equals
//! the `p1`-weighted average of `D(p(.|s,x1,x2) || p0(.|s))`, so the best
//! witness over the supported cells is a point mass (or the solution of a
//! small LP when input costs bind), and `J*` is exact rather than heuristic.

mod lp;

use crate::bounds::{
    baseline_sum_capacity, dependence_measures, inner_sum_rate, BoundError, CoutBudget, SolveOpts,
    SumRateBound,
};
use crate::channel::{CausalityTag, ChannelError, InputPolicy, StateMac, StrategyMap};
use crate::prob::{kl_of, Axis, CondKernel, Dist, JointDist, ProbError, SUPPORT_TOL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strictness margin for the strict inequality in the class condition.
pub const CLASS_MARGIN: f64 = 1e-6;
/// Gains below this are treated as zero when classifying slope profiles.
const GAIN_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GainError {
    #[error("baseline optimization failed: {0}")]
    Baseline(#[from] BoundError),
    #[error("witness support is not contained in the baseline support")]
    SupportViolation,
    #[error("requested h = {h} lies beyond the invertible range (h_max = {h_max})")]
    PathValidity { h: f64, h_max: f64 },
    #[error("{0}")]
    BadParams(&'static str),
    #[error("cost constraints leave no feasible witness")]
    InfeasibleWitness,
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, GainError>;

// ---------------------------------------------------------------------------
// Class membership
// ---------------------------------------------------------------------------

/// One supported per-state witness cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportWitness {
    pub s1: usize,
    pub s2: usize,
    pub x1: usize,
    pub x2: usize,
}

/// Membership verdict for the infinite-slope channel class of one causality
/// regime.
///
/// `tau` is stored as the class representative: the strictly causal class is
/// the no-state class and the non-causal class is the causal class, so those
/// pairs produce identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub tau: CausalityTag,
    pub member: bool,
    /// Baseline argmax policy `p0`.
    pub p0: InputPolicy,
    /// Best dependence witness `p1` (point mass unless costs bind).
    pub witness_p1: InputPolicy,
    /// `max I1 + E[D]` over admissible `p1`, in bits.
    pub j_star: f64,
    /// Baseline `I0` in bits.
    pub i0: f64,
    /// `j_star - i0`.
    pub margin: f64,
    pub support_certificate: Vec<SupportWitness>,
}

fn class_representative(tau: CausalityTag) -> CausalityTag {
    match tau {
        CausalityTag::NoState | CausalityTag::StrictlyCausal => CausalityTag::NoState,
        CausalityTag::Causal | CausalityTag::Noncausal => CausalityTag::Causal,
        CausalityTag::NoncausalStateCoop => CausalityTag::NoncausalStateCoop,
    }
}

/// `p(y | s1, s2)` under a policy.
fn output_given_state(mac: &StateMac, policy: &InputPolicy) -> Result<CondKernel> {
    let j = mac.induced_joint(policy)?;
    Ok(j.conditional(&[Axis::Y], &[Axis::S1, Axis::S2])?)
}

/// `sum_s p(s) D(W(.|s,x1,x2) || p0(.|s))` for one input cell.
fn cell_score(mac: &StateMac, p0_y: &CondKernel, x1: usize, x2: usize) -> Result<f64> {
    let mut acc = 0.0;
    for s1 in 0..mac.s1_size() {
        for s2 in 0..mac.s2_size() {
            let ps = mac.state_prob(s1, s2);
            if ps == 0.0 {
                continue;
            }
            let w = mac.kernel_row(s1, s2, x1, x2);
            let d = kl_of(w, p0_y.row(s1 * mac.s2_size() + s2))
                .map_err(|_| GainError::SupportViolation)?;
            acc += ps * d;
        }
    }
    Ok(acc)
}

/// Check membership of the channel in the infinite-slope class for `tau`.
pub fn check_class(mac: &StateMac, tau: CausalityTag, opts: &SolveOpts) -> Result<ClassReport> {
    match class_representative(tau) {
        CausalityTag::NoState => check_class_no_state(mac, opts),
        CausalityTag::Causal => check_class_causal(mac, opts),
        CausalityTag::NoncausalStateCoop => check_class_state_coop(mac, opts),
        _ => unreachable!("normalized"),
    }
}

fn check_class_no_state(mac: &StateMac, opts: &SolveOpts) -> Result<ClassReport> {
    let baseline = baseline_sum_capacity(mac, CausalityTag::NoState, opts)?;
    let (sup1, sup2) = match &baseline.achieving_policy {
        InputPolicy::Independent { px1, px2 } => {
            (px1.support(SUPPORT_TOL), px2.support(SUPPORT_TOL))
        }
        _ => unreachable!("no-state baseline is a product policy"),
    };
    let p0_y = output_given_state(mac, &baseline.achieving_policy)?;
    let mut cells = Vec::new();
    for &x1 in &sup1 {
        for &x2 in &sup2 {
            cells.push((x1, x2, cell_score(mac, &p0_y, x1, x2)?));
        }
    }
    let (witness_table, j_star) = witness_over_cells(mac, &cells)?;
    let witness = InputPolicy::state_independent_joint(mac, witness_table.clone())?;
    let i0 = baseline.value;
    let certificate = state_independent_certificate(mac, &witness_table);
    Ok(finish_report(
        CausalityTag::NoState,
        baseline,
        witness,
        j_star,
        i0,
        certificate,
    ))
}

fn check_class_causal(mac: &StateMac, opts: &SolveOpts) -> Result<ClassReport> {
    let baseline = baseline_sum_capacity(mac, CausalityTag::Causal, opts)?;
    let (k1, k2) = match &baseline.achieving_policy {
        InputPolicy::CondIndependent { px1, px2 } => (px1.clone(), px2.clone()),
        _ => unreachable!("aware baseline is conditionally independent"),
    };
    let rep1 = functional_representation(&k1)?;
    let rep2 = functional_representation(&k2)?;
    let lifted = mac.lift_shannon_strategy(&rep1.map, &rep2.map)?;
    let p0_y = output_given_state(mac, &baseline.achieving_policy)?;
    let sup1 = rep1.u.support(SUPPORT_TOL);
    let sup2 = rep2.u.support(SUPPORT_TOL);
    let mut cells = Vec::new();
    for &u1 in &sup1 {
        for &u2 in &sup2 {
            cells.push((u1, u2, cell_score(&lifted, &p0_y, u1, u2)?));
        }
    }
    let (witness_table, j_star) = witness_over_cells(&lifted, &cells)?;
    let pu = JointDist::new(
        vec![Axis::U1, Axis::U2],
        vec![rep1.u.len(), rep2.u.len()],
        witness_table.clone(),
    )?;
    let witness = InputPolicy::ShannonStrategy {
        pu,
        f1: rep1.map.clone(),
        f2: rep2.map.clone(),
    };
    // certificate in original input coordinates at the heaviest witness cell
    let (mut bu1, mut bu2, mut bw) = (0, 0, -1.0);
    for u1 in 0..rep1.u.len() {
        for u2 in 0..rep2.u.len() {
            let wgt = witness_table[u1 * rep2.u.len() + u2];
            if wgt > bw {
                bw = wgt;
                bu1 = u1;
                bu2 = u2;
            }
        }
    }
    let mut certificate = Vec::new();
    for s1 in 0..mac.s1_size() {
        for s2 in 0..mac.s2_size() {
            certificate.push(SupportWitness {
                s1,
                s2,
                x1: rep1.map.apply(bu1, s1),
                x2: rep2.map.apply(bu2, s2),
            });
        }
    }
    let i0 = baseline.value;
    Ok(finish_report(
        CausalityTag::Causal,
        baseline,
        witness,
        j_star,
        i0,
        certificate,
    ))
}

fn check_class_state_coop(mac: &StateMac, opts: &SolveOpts) -> Result<ClassReport> {
    let baseline = baseline_sum_capacity(mac, CausalityTag::Causal, opts)?;
    let (k1, k2) = match &baseline.achieving_policy {
        InputPolicy::CondIndependent { px1, px2 } => (px1.clone(), px2.clone()),
        _ => unreachable!("aware baseline is conditionally independent"),
    };
    let p0_y = output_given_state(mac, &baseline.achieving_policy)?;
    let cell = mac.x1_size() * mac.x2_size();
    let mut rows = vec![0.0; mac.s1_size() * mac.s2_size() * cell];
    let mut j_star = 0.0;
    let mut certificate = Vec::new();
    let mut lp_cells: Vec<Vec<(usize, usize, f64)>> = Vec::new();
    for s1 in 0..mac.s1_size() {
        for s2 in 0..mac.s2_size() {
            let s = s1 * mac.s2_size() + s2;
            let ps = mac.state_prob(s1, s2);
            let sup1 = Dist::new(k1.row(s1).to_vec())?.support(SUPPORT_TOL);
            let sup2 = Dist::new(k2.row(s2).to_vec())?.support(SUPPORT_TOL);
            if ps == 0.0 {
                // irrelevant state: keep the product row (inside the support)
                for &x1 in &sup1 {
                    for &x2 in &sup2 {
                        rows[s * cell + x1 * mac.x2_size() + x2] =
                            k1.row(s1)[x1] * k2.row(s2)[x2];
                    }
                }
                let total: f64 = rows[s * cell..(s + 1) * cell].iter().sum();
                for v in &mut rows[s * cell..(s + 1) * cell] {
                    *v /= total;
                }
                lp_cells.push(Vec::new());
                continue;
            }
            let mut scored = Vec::new();
            for &x1 in &sup1 {
                for &x2 in &sup2 {
                    let w = mac.kernel_row(s1, s2, x1, x2);
                    let d = kl_of(w, p0_y.row(s)).map_err(|_| GainError::SupportViolation)?;
                    scored.push((x1, x2, d));
                }
            }
            let (bx1, bx2, best) = scored
                .iter()
                .cloned()
                .fold((0, 0, f64::NEG_INFINITY), |acc, c| {
                    if c.2 > acc.2 + 1e-15 {
                        c
                    } else {
                        acc
                    }
                });
            rows[s * cell + bx1 * mac.x2_size() + bx2] = 1.0;
            j_star += ps * best;
            certificate.push(SupportWitness {
                s1,
                s2,
                x1: bx1,
                x2: bx2,
            });
            lp_cells.push(scored);
        }
    }
    // with active costs the per-state point masses may be infeasible; solve
    // the coupled LP over the supported cells instead
    if let Some(costs) = mac.costs() {
        let point_policy = InputPolicy::JointConditional {
            pxx: CondKernel::new(
                vec![Axis::S1, Axis::S2],
                vec![mac.s1_size(), mac.s2_size()],
                vec![Axis::X1, Axis::X2],
                vec![mac.x1_size(), mac.x2_size()],
                rows.clone(),
            )?,
        };
        let rep = mac.expected_cost(&point_policy)?;
        if !rep.feasible {
            let (lp_rows, lp_value, lp_cert) =
                state_coop_lp(mac, &lp_cells, costs.budget1, costs.budget2)?;
            rows = lp_rows;
            j_star = lp_value;
            certificate = lp_cert;
        }
    }
    let witness = InputPolicy::JointConditional {
        pxx: CondKernel::new(
            vec![Axis::S1, Axis::S2],
            vec![mac.s1_size(), mac.s2_size()],
            vec![Axis::X1, Axis::X2],
            vec![mac.x1_size(), mac.x2_size()],
            rows,
        )?,
    };
    let i0 = baseline.value;
    Ok(finish_report(
        CausalityTag::NoncausalStateCoop,
        baseline,
        witness,
        j_star,
        i0,
        certificate,
    ))
}

fn finish_report(
    tau: CausalityTag,
    baseline: SumRateBound,
    witness: InputPolicy,
    j_star: f64,
    i0: f64,
    support_certificate: Vec<SupportWitness>,
) -> ClassReport {
    let margin = j_star - i0;
    ClassReport {
        tau,
        member: margin > CLASS_MARGIN,
        p0: baseline.achieving_policy,
        witness_p1: witness,
        j_star,
        i0,
        margin,
        support_certificate,
    }
}

/// Best state-independent witness over scored cells; exact point-mass max
/// when costs are absent or inactive, otherwise a small LP.
fn witness_over_cells(mac: &StateMac, cells: &[(usize, usize, f64)]) -> Result<(Vec<f64>, f64)> {
    let x2n = mac.x2_size();
    let table_len = mac.x1_size() * x2n;
    let (bx1, bx2, best) = cells
        .iter()
        .cloned()
        .fold((0, 0, f64::NEG_INFINITY), |acc, c| {
            if c.2 > acc.2 + 1e-15 {
                c
            } else {
                acc
            }
        });
    let mut table = vec![0.0; table_len];
    table[bx1 * x2n + bx2] = 1.0;
    if let Some(costs) = mac.costs() {
        let e1 = costs.b1[bx1];
        let e2 = costs.b2[bx2];
        if e1 > costs.budget1 + 1e-12 || e2 > costs.budget2 + 1e-12 {
            // LP over the supported cells
            let n = cells.len();
            let c: Vec<f64> = cells.iter().map(|c| c.2).collect();
            let a1: Vec<f64> = cells.iter().map(|c| costs.b1[c.0]).collect();
            let a2: Vec<f64> = cells.iter().map(|c| costs.b2[c.1]).collect();
            let lp = lp::Lp {
                n,
                c,
                a_eq: vec![vec![1.0; n]],
                b_eq: vec![1.0],
                a_ub: vec![a1, a2],
                b_ub: vec![costs.budget1, costs.budget2],
            };
            return match lp::solve(&lp) {
                lp::LpOutcome::Optimal { x, value } => {
                    let mut t = vec![0.0; table_len];
                    for (i, &(x1, x2, _)) in cells.iter().enumerate() {
                        t[x1 * x2n + x2] = x[i];
                    }
                    // scrub LP fuzz
                    let mass: f64 = t.iter().sum();
                    for v in &mut t {
                        *v = (*v / mass).max(0.0);
                    }
                    let mass: f64 = t.iter().sum();
                    for v in &mut t {
                        *v /= mass;
                    }
                    Ok((t, value))
                }
                lp::LpOutcome::Infeasible => Err(GainError::InfeasibleWitness),
            };
        }
    }
    Ok((table, best))
}

/// Coupled LP for the state-cooperation witness under cost budgets.
#[allow(clippy::type_complexity)]
fn state_coop_lp(
    mac: &StateMac,
    per_state_cells: &[Vec<(usize, usize, f64)>],
    budget1: f64,
    budget2: f64,
) -> Result<(Vec<f64>, f64, Vec<SupportWitness>)> {
    let costs = mac.costs().expect("caller checked");
    let cell = mac.x1_size() * mac.x2_size();
    let s_cells = mac.s1_size() * mac.s2_size();
    // variables: concatenated per-state supported cells
    let mut var_map = Vec::new();
    for (s, cells) in per_state_cells.iter().enumerate() {
        for (i, _) in cells.iter().enumerate() {
            var_map.push((s, i));
        }
    }
    let n = var_map.len();
    let mut c = vec![0.0; n];
    let mut a1 = vec![0.0; n];
    let mut a2 = vec![0.0; n];
    let mut eq_rows = Vec::new();
    let mut eq_b = Vec::new();
    for (s, cells) in per_state_cells.iter().enumerate() {
        if cells.is_empty() {
            continue;
        }
        let ps = mac.state_law().table()[s];
        let mut row = vec![0.0; n];
        for (v, &(sv, iv)) in var_map.iter().enumerate() {
            if sv == s {
                row[v] = 1.0;
                let (x1, x2, score) = cells[iv];
                c[v] = ps * score;
                a1[v] = ps * costs.b1[x1];
                a2[v] = ps * costs.b2[x2];
            }
        }
        eq_rows.push(row);
        eq_b.push(1.0);
    }
    let lp = lp::Lp {
        n,
        c,
        a_eq: eq_rows,
        b_eq: eq_b,
        a_ub: vec![a1, a2],
        b_ub: vec![budget1, budget2],
    };
    match lp::solve(&lp) {
        lp::LpOutcome::Optimal { x, value } => {
            let mut rows = vec![0.0; s_cells * cell];
            for (v, &(s, i)) in var_map.iter().enumerate() {
                let (x1, x2, _) = per_state_cells[s][i];
                rows[s * cell + x1 * mac.x2_size() + x2] += x[v];
            }
            for s in 0..s_cells {
                let r = &mut rows[s * cell..(s + 1) * cell];
                let mass: f64 = r.iter().sum();
                if mass > 0.0 {
                    for v in r.iter_mut() {
                        *v = (*v / mass).max(0.0);
                    }
                } else {
                    // zero-probability state: any supported row works
                    if let Some(&(x1, x2, _)) = per_state_cells[s].first() {
                        r[x1 * mac.x2_size() + x2] = 1.0;
                    } else {
                        r[0] = 1.0;
                    }
                }
            }
            let mut cert = Vec::new();
            for (s, cells) in per_state_cells.iter().enumerate() {
                if cells.is_empty() {
                    continue;
                }
                let r = &rows[s * cell..(s + 1) * cell];
                let mut best = 0;
                for i in 1..cell {
                    if r[i] > r[best] {
                        best = i;
                    }
                }
                cert.push(SupportWitness {
                    s1: s / mac.s2_size(),
                    s2: s % mac.s2_size(),
                    x1: best / mac.x2_size(),
                    x2: best % mac.x2_size(),
                });
            }
            Ok((rows, value, cert))
        }
        lp::LpOutcome::Infeasible => Err(GainError::InfeasibleWitness),
    }
}

fn state_independent_certificate(mac: &StateMac, table: &[f64]) -> Vec<SupportWitness> {
    let mut best = 0;
    for i in 1..table.len() {
        if table[i] > table[best] {
            best = i;
        }
    }
    let (x1, x2) = (best / mac.x2_size(), best % mac.x2_size());
    let mut out = Vec::new();
    for s1 in 0..mac.s1_size() {
        for s2 in 0..mac.s2_size() {
            out.push(SupportWitness { s1, s2, x1, x2 });
        }
    }
    out
}

/// Evaluate `I1 + E[D(p1(y|S) || p0(y|S))]` at explicit policies (the
/// quantity whose supremum is `j_star`).
pub fn witness_payoff(mac: &StateMac, p0: &InputPolicy, p1: &InputPolicy) -> Result<f64> {
    let i1 = crate::bounds::sum_rate_at_policy(mac, p1)?;
    let p0_y = output_given_state(mac, p0)?;
    let p1_y = output_given_state(mac, p1)?;
    let s_flat = Dist::new(mac.state_law().table().to_vec())?;
    let e_d = crate::prob::expected_state_kl(&p1_y, &p0_y, &s_flat)?;
    Ok(i1 + e_d)
}

// ---------------------------------------------------------------------------
// Functional representation
// ---------------------------------------------------------------------------

/// Deterministic representation of a conditional law: `U` independent of the
/// condition with `p(x|s) = sum_u p(u) 1{ g(u,s) = x }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalRep {
    pub u: Dist,
    /// `g(u, s)` as a strategy map (`table[u][s] -> x`).
    pub map: StrategyMap,
}

impl FunctionalRep {
    /// `sum_u p(u) 1{g(u,s) = x}` for all `x` at one condition value.
    pub fn reconstruct(&self, s: usize, x_size: usize) -> Vec<f64> {
        let mut out = vec![0.0; x_size];
        for (u, &pu) in self.u.probs().iter().enumerate() {
            out[self.map.apply(u, s)] += pu;
        }
        out
    }
}

/// Common-refinement quantile construction for a single-condition kernel
/// `p(x|s)`.
///
/// All interior CDF breakpoints across conditions partition `[0,1]`; `U` is
/// the interval index with `p(u)` its length, and `g(s,u)` is the quantile
/// of the interval's right endpoint. Reconstruction is exact and
/// `|U| <= |S|(|X|-1) + 1`.
pub fn functional_representation(kernel: &CondKernel) -> Result<FunctionalRep> {
    let s_size = kernel.from_cells();
    let x_size = kernel.to_cells();
    let mut breakpoints: Vec<f64> = Vec::new();
    for s in 0..s_size {
        let row = kernel.row(s);
        let mut acc = 0.0;
        for &p in row.iter().take(x_size - 1) {
            acc += p;
            if acc > 0.0 && acc < 1.0 {
                breakpoints.push(acc);
            }
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    breakpoints.push(1.0);

    let mut u_probs = Vec::with_capacity(breakpoints.len());
    let mut prev = 0.0;
    for &r in &breakpoints {
        u_probs.push(r - prev);
        prev = r;
    }
    // map: g(u, s) = min { x : F(x|s) >= right endpoint of interval u }
    let mut table = vec![0usize; breakpoints.len() * s_size];
    for s in 0..s_size {
        let row = kernel.row(s);
        for (u, &r) in breakpoints.iter().enumerate() {
            let mut acc = 0.0;
            let mut chosen = x_size - 1;
            for x in 0..x_size {
                acc += row[x];
                if acc >= r {
                    chosen = x;
                    break;
                }
            }
            table[u * s_size + s] = chosen;
        }
    }
    // scrub accumulated float fuzz in the interval lengths
    let mass: f64 = u_probs.iter().sum();
    for v in &mut u_probs {
        *v = (*v / mass).max(0.0);
    }
    let mass: f64 = u_probs.iter().sum();
    for v in &mut u_probs {
        *v /= mass;
    }
    Ok(FunctionalRep {
        u: Dist::new(u_probs)?,
        map: StrategyMap::new(breakpoints.len(), s_size, table),
    })
}

// ---------------------------------------------------------------------------
// Perturbation path
// ---------------------------------------------------------------------------

/// Solved samples of the budget-to-mixture path `lambda*(h)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaPath {
    pub eps: f64,
    pub v: (f64, f64),
    /// `(h, lambda*(h))`, monotone in both coordinates.
    pub samples: Vec<(f64, f64)>,
    /// Largest `h` for which a root exists on the increasing segment.
    pub h_max: f64,
}

/// Pointwise mixture of two conditional input laws.
fn mixture_law(law0: &CondKernel, law1: &CondKernel, lambda: f64) -> Result<CondKernel> {
    let mut rows = Vec::with_capacity(law0.rows_flat().len());
    for (a, b) in law0.rows_flat().iter().zip(law1.rows_flat()) {
        let v = (1.0 - lambda) * a + lambda * b;
        if v < -1e-12 {
            return Err(GainError::BadParams("mixture outside the simplex"));
        }
        rows.push(v.max(0.0));
    }
    let cell = law0.to_cells();
    for r in rows.chunks_exact_mut(cell) {
        let s: f64 = r.iter().sum();
        for v in r.iter_mut() {
            *v /= s;
        }
    }
    Ok(CondKernel::new(
        law0.from_axes().to_vec(),
        law0.from_sizes().to_vec(),
        law0.to_axes().to_vec(),
        law0.to_sizes().to_vec(),
        rows,
    )?)
}

fn check_support(law0: &CondKernel, law1: &CondKernel) -> Result<()> {
    for (a, b) in law0.rows_flat().iter().zip(law1.rows_flat()) {
        if *b > 1e-12 && *a < 1e-15 {
            return Err(GainError::SupportViolation);
        }
    }
    Ok(())
}

struct PathContext<'m> {
    mac: &'m StateMac,
    law0: CondKernel,
    law1: CondKernel,
    v: (f64, f64),
    eps: f64,
}

impl<'m> PathContext<'m> {
    fn new(
        mac: &'m StateMac,
        p0: &InputPolicy,
        p1: &InputPolicy,
        v: (f64, f64),
        eps: f64,
    ) -> Result<Self> {
        if eps <= 0.0 || v.0 <= 0.0 || v.1 <= 0.0 {
            return Err(GainError::BadParams("eps and v must be positive"));
        }
        let law0 = p0.conditional_input_law(mac)?;
        let law1 = p1.conditional_input_law(mac)?;
        check_support(&law0, &law1)?;
        Ok(Self {
            mac,
            law0,
            law1,
            v,
            eps,
        })
    }

    fn joint_at(&self, lambda: f64) -> Result<JointDist> {
        let law = mixture_law(&self.law0, &self.law1, lambda)?;
        Ok(self.mac.induced_joint(&InputPolicy::JointConditional { pxx: law })?)
    }

    /// `h(lambda) = I/v1 + I/v2 + I/(v1+v2) + eps lambda`.
    fn h_of(&self, lambda: f64) -> Result<f64> {
        let j = self.joint_at(lambda)?;
        let (a1, a2, a12, _) = dependence_measures(&j)?;
        Ok(a1 / self.v.0 + a2 / self.v.1 + a12 / (self.v.0 + self.v.1) + self.eps * lambda)
    }
}

/// Solve `h = h(lambda)` by bisection on the increasing segment from 0.
///
/// Errors with [`GainError::PathValidity`] for `h` beyond the segment.
pub fn lambda_star_path(
    mac: &StateMac,
    p0: &InputPolicy,
    p1: &InputPolicy,
    v: (f64, f64),
    eps: f64,
    h_grid: &[f64],
) -> Result<LambdaPath> {
    let ctx = PathContext::new(mac, p0, p1, v, eps)?;
    let (lambda_peak, h_peak) = increasing_segment(&ctx)?;
    let mut samples = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        if h < 0.0 {
            return Err(GainError::BadParams("h must be nonnegative"));
        }
        if h == 0.0 {
            samples.push((0.0, 0.0));
            continue;
        }
        if h > h_peak {
            return Err(GainError::PathValidity { h, h_max: h_peak });
        }
        samples.push((h, bisect_lambda(&ctx, h, lambda_peak)?));
    }
    Ok(LambdaPath {
        eps,
        v,
        samples,
        h_max: h_peak,
    })
}

fn increasing_segment(ctx: &PathContext) -> Result<(f64, f64)> {
    const GRID: usize = 512;
    let mut prev_h = 0.0;
    let mut lambda_peak = 0.0;
    let mut h_peak = 0.0;
    for k in 1..=GRID {
        let lambda = k as f64 / GRID as f64;
        let h = ctx.h_of(lambda)?;
        if h <= prev_h {
            break;
        }
        prev_h = h;
        lambda_peak = lambda;
        h_peak = h;
    }
    Ok((lambda_peak, h_peak))
}

fn bisect_lambda(ctx: &PathContext, h: f64, lambda_hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, lambda_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let val = ctx.h_of(mid)?;
        if (val - h).abs() <= 1e-13 {
            return Ok(mid);
        }
        if val < h {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let residual = (ctx.h_of(mid)? - h).abs();
    if residual > 1e-12 {
        return Err(GainError::PathValidity { h, h_max: ctx.h_of(lambda_hi)? });
    }
    Ok(mid)
}

// ---------------------------------------------------------------------------
// Derivative identities
// ---------------------------------------------------------------------------

/// Finite-difference derivatives of the path quantities at `lambda = 0+`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeReport {
    /// `d/dl I(X1;S2|S1)`, expected 0.
    pub d_state1: f64,
    /// `d/dl I(X2;S1|S2)`, expected 0.
    pub d_state2: f64,
    /// `d/dl I(X1;X2|S1,S2)`, expected 0.
    pub d_pair: f64,
    /// `d/dl I(X1,X2;Y|S)`.
    pub d_channel_mi: f64,
    /// `I1 + E[D] - I0`, the lower bound the channel-MI derivative must meet.
    pub rhs_bound: f64,
    /// True when central differences were usable (mixture valid at -h).
    pub central: bool,
}

impl DerivativeReport {
    pub fn state_derivatives_vanish(&self, tol: f64) -> bool {
        self.d_state1.abs() <= tol && self.d_state2.abs() <= tol && self.d_pair.abs() <= tol
    }

    pub fn channel_derivative_meets_bound(&self, tol: f64) -> bool {
        self.d_channel_mi >= self.rhs_bound - tol
    }
}

/// Richardson-extrapolated finite differences of the four path quantities at
/// `lambda = 0+`, steps `{1e-4, 1e-5, 1e-6}`.
pub fn derivative_check(
    mac: &StateMac,
    p0: &InputPolicy,
    p1: &InputPolicy,
) -> Result<DerivativeReport> {
    let ctx = PathContext::new(mac, p0, p1, (1.0, 1.0), 1.0)?;
    // validity of a small negative step decides central vs forward
    let central = {
        let mut ok = true;
        for (a, b) in ctx.law0.rows_flat().iter().zip(ctx.law1.rows_flat()) {
            if (1.0 + 1e-4) * a - 1e-4 * b < 0.0 {
                ok = false;
                break;
            }
        }
        ok
    };
    let quantities = |lambda: f64| -> Result<[f64; 4]> {
        let j = ctx.joint_at(lambda)?;
        let (a1, a2, a12, _) = dependence_measures(&j)?;
        let mi = j.cond_mutual_info(&[Axis::X1, Axis::X2], &[Axis::Y], &[Axis::S1, Axis::S2])?;
        Ok([a1, a2, a12, mi])
    };
    let f0 = quantities(0.0)?;
    let steps = [1e-4, 1e-5, 1e-6];
    let mut estimates: Vec<[f64; 4]> = Vec::new();
    for &h in &steps {
        let fp = quantities(h)?;
        let d: [f64; 4] = if central {
            let fm = quantities(-h)?;
            std::array::from_fn(|i| (fp[i] - fm[i]) / (2.0 * h))
        } else {
            std::array::from_fn(|i| (fp[i] - f0[i]) / h)
        };
        estimates.push(d);
    }
    // Richardson on the two smallest decade-spaced steps:
    // central error ~ h^2 -> (100 D(h/10) - D(h)) / 99,
    // forward error ~ h   -> (10 D(h/10) - D(h)) / 9
    let d_small = estimates[2];
    let d_mid = estimates[1];
    let extr: [f64; 4] = if central {
        std::array::from_fn(|i| (100.0 * d_small[i] - d_mid[i]) / 99.0)
    } else {
        std::array::from_fn(|i| (10.0 * d_small[i] - d_mid[i]) / 9.0)
    };
    let i0 = crate::bounds::sum_rate_at_policy(mac, p0)?;
    let payoff = witness_payoff(mac, p0, p1)?;
    Ok(DerivativeReport {
        d_state1: extr[0],
        d_state2: extr[1],
        d_pair: extr[2],
        d_channel_mi: extr[3],
        rhs_bound: payoff - i0,
        central,
    })
}

// ---------------------------------------------------------------------------
// Slope profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlopeVerdict {
    Diverges,
    Inconclusive,
    Bounded,
}

/// Gain-versus-budget profile on a geometric `h` ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeProfile {
    pub grid: Vec<f64>,
    pub gains: Vec<f64>,
    pub ratios: Vec<f64>,
    pub verdict: SlopeVerdict,
}

/// Divergence test: ratios must increase monotonically (2% slack) across the
/// last `max(4, K-2)` halvings and the final ratio must exceed 10x the
/// first; profiles whose gains never clear the noise floor are bounded.
pub(crate) fn classify_ratios(gains: &[f64], ratios: &[f64], halvings: usize) -> SlopeVerdict {
    let k = ratios.len() - 1;
    if gains.iter().all(|g| g.abs() <= GAIN_FLOOR) {
        return SlopeVerdict::Bounded;
    }
    let window = std::cmp::max(4, halvings.saturating_sub(2)).min(k);
    let start = k - window;
    let monotone = (start..k).all(|i| ratios[i + 1] >= 0.98 * ratios[i]);
    let grows = ratios[k] >= 10.0 * ratios[0];
    if monotone && grows && gains[k] > GAIN_FLOOR {
        SlopeVerdict::Diverges
    } else if ratios[k] <= 1.05 * ratios[0].max(GAIN_FLOOR) {
        SlopeVerdict::Bounded
    } else {
        SlopeVerdict::Inconclusive
    }
}

/// Slope profile of the cooperation gain for a discrete channel.
///
/// Gains are computed two ways per ladder point and the larger kept: the
/// budgeted inner-bound improvement over the baseline, and the perturbation
/// path value `I_l(X1,X2;Y|S) - I_l(X1;X2|S) - I0` at `lambda*(h)` built
/// from the class witness with `eps = 1e-3`.
pub fn slope_profile(
    mac: &StateMac,
    tau: CausalityTag,
    v: (f64, f64),
    h0: f64,
    halvings: usize,
    opts: &SolveOpts,
) -> Result<SlopeProfile> {
    if halvings < 4 {
        return Err(GainError::BadParams("need at least 4 halvings"));
    }
    if v.0 <= 0.0 || v.1 <= 0.0 {
        return Err(GainError::BadParams("direction must be positive"));
    }
    if h0 * (v.0 + v.1) > 0.25 + 1e-12 {
        return Err(GainError::BadParams(
            "h0 (v1+v2) must stay within 0.25 bits",
        ));
    }
    let baseline = baseline_sum_capacity(mac, tau, opts)?.value;
    let report = check_class(mac, tau, opts)?;
    // perturbation-path context; for the causal class the path lives on the
    // lifted channel, with p0 given by the functional representation of the
    // baseline kernels (the same one the class check lifted with)
    let path_ctx: Option<(StateMac, InputPolicy, InputPolicy)> =
        match (&report.p0, &report.witness_p1) {
            (
                InputPolicy::CondIndependent { px1, px2 },
                InputPolicy::ShannonStrategy { pu, f1, f2 },
            ) => {
                let lifted = mac.lift_shannon_strategy(f1, f2)?;
                let rep1 = functional_representation(px1)?;
                let rep2 = functional_representation(px2)?;
                let p0 = InputPolicy::Independent {
                    px1: rep1.u,
                    px2: rep2.u,
                };
                let p1 = InputPolicy::state_independent_joint(&lifted, pu.table().to_vec())?;
                Some((lifted, p0, p1))
            }
            (_, InputPolicy::ShannonStrategy { .. }) => None,
            _ => Some((mac.clone(), report.p0.clone(), report.witness_p1.clone())),
        };

    let mut grid = Vec::with_capacity(halvings + 1);
    let mut gains = Vec::with_capacity(halvings + 1);
    let mut ratios = Vec::with_capacity(halvings + 1);
    let mut warm: Vec<InputPolicy> = Vec::new();
    for k in 0..=halvings {
        let h = h0 * (0.5f64).powi(k as i32);
        let budget = CoutBudget::new(h * v.0, h * v.1);
        let ladder_opts = SolveOpts {
            warm_starts: warm.clone(),
            ..opts.clone()
        };
        let inner = inner_sum_rate(mac, tau, budget, &ladder_opts)?;
        warm = vec![inner.achieving_policy.clone()];
        let mut gain = inner.value - baseline;
        if let Some((pmac, p0, p1)) = &path_ctx {
            if let Some(g) = lambda_branch_gain(pmac, p0, p1, v, h, baseline) {
                gain = gain.max(g);
            }
        }
        grid.push(h);
        gains.push(gain);
        ratios.push(gain / h);
    }
    let verdict = classify_ratios(&gains, &ratios, halvings);
    Ok(SlopeProfile {
        grid,
        gains,
        ratios,
        verdict,
    })
}

/// `I_l(X1,X2;Y|S) - I_l(X1;X2|S) - baseline` at `lambda*(h)`, if the path
/// reaches `h`.
fn lambda_branch_gain(
    mac: &StateMac,
    p0: &InputPolicy,
    p1: &InputPolicy,
    v: (f64, f64),
    h: f64,
    baseline: f64,
) -> Option<f64> {
    let path = lambda_star_path(mac, p0, p1, v, 1e-3, &[h]).ok()?;
    let (_, lambda) = *path.samples.first()?;
    let ctx = PathContext::new(mac, p0, p1, v, 1e-3).ok()?;
    let j = ctx.joint_at(lambda).ok()?;
    let mi = j
        .cond_mutual_info(&[Axis::X1, Axis::X2], &[Axis::Y], &[Axis::S1, Axis::S2])
        .ok()?;
    let pair = j
        .cond_mutual_info(&[Axis::X1], &[Axis::X2], &[Axis::S1, Axis::S2])
        .ok()?;
    Some(mi - pair - baseline)
}


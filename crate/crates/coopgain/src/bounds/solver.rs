//! Multistart block-ascent machinery behind the bound computations.
//!
//! Building blocks:
//! * per-row multiplicative (exponentiated-gradient) updates with
//!   backtracking, monotone in the objective;
//! * a KKT-gap stopping rule (for the concave blocks the gap upper-bounds
//!   the suboptimality);
//! * escalating exterior quadratic penalties for the dependence budgets,
//!   followed by an exact bisection projection onto the feasible set along
//!   the mix toward the product (conditionally independent) projection —
//!   each dependence measure is convex and vanishing along that path, so the
//!   projection is well defined;
//! * multistarts from Dirichlet(1) plus canonical warm starts, reduced with
//!   an associative max keyed by start index (parallel and serial runs
//!   agree), ties broken toward the lexicographically smallest policy.

use super::{
    canonical_maps, BoundError, CoutBudget, OptimizerReport, Result, SolveOpts, SumRateBound,
};
use crate::channel::{Costs, InputPolicy, StateMac, StrategyMap};
use crate::prob::{random_dist, Axis, CondKernel, Dist, JointDist, RngKey};
use rayon::prelude::*;
use std::collections::BTreeMap;

const BLOCK_TOL: f64 = 1e-9;
const BLOCK_ITER_CAP: usize = 10_000;
const PENALTY_ROUNDS: usize = 6;
const VALUE_TIE_TOL: f64 = 1e-9;
const SCORE_CLAMP: f64 = 60.0;

// ---------------------------------------------------------------------------
// Channel view with per-cell caches
// ---------------------------------------------------------------------------

pub(crate) struct View {
    s1n: usize,
    s2n: usize,
    x1n: usize,
    x2n: usize,
    yn: usize,
    /// `p(s1,s2)` flattened.
    ps: Vec<f64>,
    /// Kernel rows, `[(s1,s2,x1,x2) x y]`.
    w: Vec<f64>,
    /// Entropy of each kernel row (bits).
    hw: Vec<f64>,
    ps1: Vec<f64>,
    ps2: Vec<f64>,
    /// `p(s2|s1)` as `[s1][s2]` (uniform on zero-probability s1).
    s2_given_s1: Vec<f64>,
    /// `p(s1|s2)` as `[s2][s1]`.
    s1_given_s2: Vec<f64>,
    costs: Option<Costs>,
}

impl View {
    pub(crate) fn new(mac: &StateMac) -> Self {
        let (s1n, s2n) = (mac.s1_size(), mac.s2_size());
        let (x1n, x2n, yn) = (mac.x1_size(), mac.x2_size(), mac.y_size());
        let ps = mac.state_law().table().to_vec();
        let w = mac.kernel().rows_flat().to_vec();
        let hw: Vec<f64> = w
            .chunks_exact(yn)
            .map(|row| crate::prob::entropy_of(row))
            .collect();
        let mut ps1 = vec![0.0; s1n];
        let mut ps2 = vec![0.0; s2n];
        for s1 in 0..s1n {
            for s2 in 0..s2n {
                ps1[s1] += ps[s1 * s2n + s2];
                ps2[s2] += ps[s1 * s2n + s2];
            }
        }
        let mut s2_given_s1 = vec![0.0; s1n * s2n];
        let mut s1_given_s2 = vec![0.0; s2n * s1n];
        for s1 in 0..s1n {
            for s2 in 0..s2n {
                s2_given_s1[s1 * s2n + s2] = if ps1[s1] > 0.0 {
                    ps[s1 * s2n + s2] / ps1[s1]
                } else {
                    1.0 / s2n as f64
                };
                s1_given_s2[s2 * s1n + s1] = if ps2[s2] > 0.0 {
                    ps[s1 * s2n + s2] / ps2[s2]
                } else {
                    1.0 / s1n as f64
                };
            }
        }
        Self {
            s1n,
            s2n,
            x1n,
            x2n,
            yn,
            ps,
            w,
            hw,
            ps1,
            ps2,
            s2_given_s1,
            s1_given_s2,
            costs: mac.costs().cloned(),
        }
    }

    fn s_cells(&self) -> usize {
        self.s1n * self.s2n
    }

    fn cell(&self) -> usize {
        self.x1n * self.x2n
    }

    fn w_row(&self, s: usize, cell: usize) -> &[f64] {
        let idx = (s * self.cell() + cell) * self.yn;
        &self.w[idx..idx + self.yn]
    }

    /// Output law `m_s(y) = sum_cells q(cell) W(y|s,cell)` for one state.
    fn output_law(&self, s: usize, q: &[f64], m: &mut [f64]) {
        m.fill(0.0);
        for (cell, &qc) in q.iter().enumerate() {
            if qc > 0.0 {
                let row = self.w_row(s, cell);
                for y in 0..self.yn {
                    m[y] += qc * row[y];
                }
            }
        }
    }

    /// `I(X1,X2;Y|S=s)`-contribution `H(m_s) - sum q H(W_row)` for one state.
    fn state_mi(&self, s: usize, q: &[f64]) -> f64 {
        let mut m = vec![0.0; self.yn];
        self.output_law(s, q, &mut m);
        let mut acc = crate::prob::entropy_of(&m);
        for (cell, &qc) in q.iter().enumerate() {
            acc -= qc * self.hw[s * self.cell() + cell];
        }
        acc
    }

    /// Per-cell divergences `D(W(.|s,cell) || m_s)` for one state.
    fn state_divergences(&self, s: usize, q: &[f64], d: &mut [f64]) {
        let mut m = vec![0.0; self.yn];
        self.output_law(s, q, &mut m);
        let neg_log_m: Vec<f64> = m
            .iter()
            .map(|&v| if v > 0.0 { -v.log2() } else { 1e3 })
            .collect();
        for cell in 0..self.cell() {
            let row = self.w_row(s, cell);
            let mut acc = -self.hw[s * self.cell() + cell];
            for y in 0..self.yn {
                if row[y] > 0.0 {
                    acc += row[y] * neg_log_m[y];
                }
            }
            d[cell] = acc;
        }
    }
}

fn safe_ratio_log2(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        -SCORE_CLAMP
    } else if b <= 0.0 {
        SCORE_CLAMP
    } else {
        (a / b).log2().clamp(-SCORE_CLAMP, SCORE_CLAMP)
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Multiplicative row update `p_i <- p_i 2^(eta (g_i - max g))`, renormalized.
fn mult_update(row: &[f64], g: &[f64], eta: f64, out: &mut [f64]) {
    let mut gmax = f64::NEG_INFINITY;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 && g[i] > gmax {
            gmax = g[i];
        }
    }
    if !gmax.is_finite() {
        out.copy_from_slice(row);
        return;
    }
    let mut sum = 0.0;
    for i in 0..row.len() {
        let v = if row[i] > 0.0 {
            row[i] * (eta * (g[i] - gmax)).exp2()
        } else {
            0.0
        };
        out[i] = v;
        sum += v;
    }
    if sum > 0.0 {
        for v in out.iter_mut() {
            *v /= sum;
        }
    } else {
        out.copy_from_slice(row);
    }
}

// ---------------------------------------------------------------------------
// Product (baseline) problems
// ---------------------------------------------------------------------------

/// Product policy state: one simplex row per (virtual) state component.
#[derive(Clone, Debug)]
struct ProductVars {
    /// `[r1 x x1n]`; `r1 = s1n` when state-aware, else 1.
    k1: Vec<f64>,
    /// `[r2 x x2n]`.
    k2: Vec<f64>,
}

struct ProductProblem<'v> {
    view: &'v View,
    aware: bool,
    /// Cost penalty coefficient (0 when costs are absent or inactive).
    rho_cost: f64,
}

impl<'v> ProductProblem<'v> {
    fn r1(&self) -> usize {
        if self.aware {
            self.view.s1n
        } else {
            1
        }
    }

    fn r2(&self) -> usize {
        if self.aware {
            self.view.s2n
        } else {
            1
        }
    }

    fn q_for_state(&self, vars: &ProductVars, s1: usize, s2: usize, q: &mut [f64]) {
        let (x1n, x2n) = (self.view.x1n, self.view.x2n);
        let row1 = if self.aware {
            &vars.k1[s1 * x1n..(s1 + 1) * x1n]
        } else {
            &vars.k1[..x1n]
        };
        let row2 = if self.aware {
            &vars.k2[s2 * x2n..(s2 + 1) * x2n]
        } else {
            &vars.k2[..x2n]
        };
        for x1 in 0..x1n {
            for x2 in 0..x2n {
                q[x1 * x2n + x2] = row1[x1] * row2[x2];
            }
        }
    }

    fn objective(&self, vars: &ProductVars) -> f64 {
        let mut q = vec![0.0; self.view.cell()];
        let mut acc = 0.0;
        for s1 in 0..self.view.s1n {
            for s2 in 0..self.view.s2n {
                let p = self.view.ps[s1 * self.view.s2n + s2];
                if p == 0.0 {
                    continue;
                }
                self.q_for_state(vars, s1, s2, &mut q);
                acc += p * self.view.state_mi(s1 * self.view.s2n + s2, &q);
            }
        }
        acc - self.cost_penalty(vars)
    }

    fn expected_costs(&self, vars: &ProductVars) -> Option<(f64, f64)> {
        let costs = self.view.costs.as_ref()?;
        let mut e1 = 0.0;
        for r in 0..self.r1() {
            let w = if self.aware { self.view.ps1[r] } else { 1.0 };
            for x1 in 0..self.view.x1n {
                e1 += w * vars.k1[r * self.view.x1n + x1] * costs.b1[x1];
            }
        }
        let mut e2 = 0.0;
        for r in 0..self.r2() {
            let w = if self.aware { self.view.ps2[r] } else { 1.0 };
            for x2 in 0..self.view.x2n {
                e2 += w * vars.k2[r * self.view.x2n + x2] * costs.b2[x2];
            }
        }
        Some((e1, e2))
    }

    fn cost_penalty(&self, vars: &ProductVars) -> f64 {
        if self.rho_cost == 0.0 {
            return 0.0;
        }
        match (self.expected_costs(vars), self.view.costs.as_ref()) {
            (Some((e1, e2)), Some(c)) => {
                let v1 = (e1 - c.budget1).max(0.0);
                let v2 = (e2 - c.budget2).max(0.0);
                self.rho_cost * (v1 * v1 + v2 * v2)
            }
            _ => 0.0,
        }
    }

    /// Scores for the encoder-1 block (per virtual row), and the block gap.
    fn scores_k1(&self, vars: &ProductVars) -> (Vec<f64>, f64) {
        let view = self.view;
        let (x1n, x2n) = (view.x1n, view.x2n);
        let mut g = vec![0.0; self.r1() * x1n];
        let mut d = vec![0.0; view.cell()];
        let mut q = vec![0.0; view.cell()];
        for s1 in 0..view.s1n {
            for s2 in 0..view.s2n {
                let s = s1 * view.s2n + s2;
                // weight of this state inside the owning row's score
                let w = if self.aware {
                    view.s2_given_s1[s1 * view.s2n + s2]
                } else {
                    view.ps[s]
                };
                if w == 0.0 {
                    continue;
                }
                self.q_for_state(vars, s1, s2, &mut q);
                view.state_divergences(s, &q, &mut d);
                let row2 = if self.aware {
                    &vars.k2[s2 * x2n..(s2 + 1) * x2n]
                } else {
                    &vars.k2[..x2n]
                };
                let r = if self.aware { s1 } else { 0 };
                for x1 in 0..x1n {
                    let mut acc = 0.0;
                    for x2 in 0..x2n {
                        acc += row2[x2] * d[x1 * x2n + x2];
                    }
                    g[r * x1n + x1] += w * acc;
                }
            }
        }
        if self.rho_cost > 0.0 {
            if let (Some((e1, _)), Some(c)) = (self.expected_costs(vars), self.view.costs.as_ref())
            {
                let viol = (e1 - c.budget1).max(0.0);
                if viol > 0.0 {
                    for r in 0..self.r1() {
                        for x1 in 0..x1n {
                            g[r * x1n + x1] -= 2.0 * self.rho_cost * viol * c.b1[x1];
                        }
                    }
                }
            }
        }
        let gap = block_gap(&g, &vars.k1, self.r1(), x1n, |r| {
            if self.aware {
                view.ps1[r]
            } else {
                1.0
            }
        });
        (g, gap)
    }

    fn scores_k2(&self, vars: &ProductVars) -> (Vec<f64>, f64) {
        let view = self.view;
        let (x1n, x2n) = (view.x1n, view.x2n);
        let mut g = vec![0.0; self.r2() * x2n];
        let mut d = vec![0.0; view.cell()];
        let mut q = vec![0.0; view.cell()];
        for s1 in 0..view.s1n {
            for s2 in 0..view.s2n {
                let s = s1 * view.s2n + s2;
                let w = if self.aware {
                    view.s1_given_s2[s2 * view.s1n + s1]
                } else {
                    view.ps[s]
                };
                if w == 0.0 {
                    continue;
                }
                self.q_for_state(vars, s1, s2, &mut q);
                view.state_divergences(s, &q, &mut d);
                let row1 = if self.aware {
                    &vars.k1[s1 * x1n..(s1 + 1) * x1n]
                } else {
                    &vars.k1[..x1n]
                };
                let r = if self.aware { s2 } else { 0 };
                for x2 in 0..x2n {
                    let mut acc = 0.0;
                    for x1 in 0..x1n {
                        acc += row1[x1] * d[x1 * x2n + x2];
                    }
                    g[r * x2n + x2] += w * acc;
                }
            }
        }
        if self.rho_cost > 0.0 {
            if let (Some((_, e2)), Some(c)) = (self.expected_costs(vars), self.view.costs.as_ref())
            {
                let viol = (e2 - c.budget2).max(0.0);
                if viol > 0.0 {
                    for r in 0..self.r2() {
                        for x2 in 0..x2n {
                            g[r * x2n + x2] -= 2.0 * self.rho_cost * viol * c.b2[x2];
                        }
                    }
                }
            }
        }
        let gap = block_gap(&g, &vars.k2, self.r2(), x2n, |r| {
            if self.aware {
                view.ps2[r]
            } else {
                1.0
            }
        });
        (g, gap)
    }
}

fn block_gap(
    g: &[f64],
    rows: &[f64],
    nrows: usize,
    ncols: usize,
    row_weight: impl Fn(usize) -> f64,
) -> f64 {
    let mut gap = 0.0;
    for r in 0..nrows {
        let w = row_weight(r);
        if w == 0.0 {
            continue;
        }
        let gr = &g[r * ncols..(r + 1) * ncols];
        let pr = &rows[r * ncols..(r + 1) * ncols];
        let gmax = gr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean: f64 = gr.iter().zip(pr).map(|(a, b)| a * b).sum();
        gap += w * (gmax - mean);
    }
    gap.max(0.0)
}

/// Ascend one block (all rows at once) with backtracking until the KKT gap
/// closes or the iteration cap is hit. Returns iterations used.
fn ascend_block(
    rows: &mut Vec<f64>,
    ncols: usize,
    objective: impl Fn(&[f64]) -> f64,
    scores: impl Fn(&[f64]) -> (Vec<f64>, f64),
) -> usize {
    let nrows = rows.len() / ncols;
    let mut scratch = vec![0.0; rows.len()];
    let mut iters = 0;
    // step size carries across iterations so a hard region is probed once,
    // not on every pass
    let mut eta = 1.0;
    let mut stalled = 0;
    while iters < BLOCK_ITER_CAP {
        iters += 1;
        let (g, gap) = scores(rows);
        if gap <= BLOCK_TOL {
            break;
        }
        let j0 = objective(rows);
        let mut accepted = false;
        for _ in 0..30 {
            for r in 0..nrows {
                mult_update(
                    &rows[r * ncols..(r + 1) * ncols],
                    &g[r * ncols..(r + 1) * ncols],
                    eta,
                    &mut scratch[r * ncols..(r + 1) * ncols],
                );
            }
            let j1 = objective(&scratch);
            if j1 >= j0 - 1e-15 {
                rows.copy_from_slice(&scratch);
                stalled = if j1 - j0 < 1e-13 { stalled + 1 } else { 0 };
                accepted = true;
                eta = (eta * 2.0).min(1.0);
                break;
            }
            eta *= 0.5;
            if eta < 1e-12 {
                break;
            }
        }
        if !accepted || stalled >= 5 {
            break;
        }
    }
    iters
}

struct Solved {
    value: f64,
    params: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn run_product_start(problem: &ProductProblem, start: ProductVars) -> (ProductVars, Solved) {
    let mut vars = start;
    let mut total_iters = 0;
    let mut converged = false;
    let rounds = if problem.view.costs.is_some() {
        PENALTY_ROUNDS
    } else {
        1
    };
    let mut rho = 10.0;
    for round in 0..rounds {
        let p = ProductProblem {
            view: problem.view,
            aware: problem.aware,
            rho_cost: if problem.view.costs.is_some() { rho } else { 0.0 },
        };
        for _sweep in 0..200 {
            let before = p.objective(&vars);
            let mut k1 = vars.k1.clone();
            total_iters += ascend_block(
                &mut k1,
                p.view.x1n,
                |rows| {
                    let v = ProductVars {
                        k1: rows.to_vec(),
                        k2: vars.k2.clone(),
                    };
                    p.objective(&v)
                },
                |rows| {
                    let v = ProductVars {
                        k1: rows.to_vec(),
                        k2: vars.k2.clone(),
                    };
                    p.scores_k1(&v)
                },
            );
            vars.k1 = k1;
            let mut k2 = vars.k2.clone();
            total_iters += ascend_block(
                &mut k2,
                p.view.x2n,
                |rows| {
                    let v = ProductVars {
                        k1: vars.k1.clone(),
                        k2: rows.to_vec(),
                    };
                    p.objective(&v)
                },
                |rows| {
                    let v = ProductVars {
                        k1: vars.k1.clone(),
                        k2: rows.to_vec(),
                    };
                    p.scores_k2(&v)
                },
            );
            vars.k2 = k2;
            let after = p.objective(&vars);
            let (_, gap1) = p.scores_k1(&vars);
            let (_, gap2) = p.scores_k2(&vars);
            if after - before < 1e-13 && gap1 <= BLOCK_TOL && gap2 <= BLOCK_TOL {
                converged = true;
                break;
            }
            if after - before < 1e-13 && _sweep > 3 {
                break;
            }
        }
        rho *= 10.0;
        let _ = round;
    }
    // final cost projection (preserves nothing else, so do it before scoring)
    if let Some(c) = problem.view.costs.as_ref() {
        project_product_costs(problem, &mut vars, c);
    }
    let clean = ProductProblem {
        view: problem.view,
        aware: problem.aware,
        rho_cost: 0.0,
    };
    let value = clean.objective(&vars);
    let mut params = vars.k1.clone();
    params.extend_from_slice(&vars.k2);
    (
        vars,
        Solved {
            value,
            params,
            iterations: total_iters,
            converged,
        },
    )
}

fn project_product_costs(problem: &ProductProblem, vars: &mut ProductVars, c: &Costs) {
    let clean = ProductProblem {
        view: problem.view,
        aware: problem.aware,
        rho_cost: 0.0,
    };
    if let Some((e1, e2)) = clean.expected_costs(vars) {
        let x1n = problem.view.x1n;
        let x2n = problem.view.x2n;
        if e1 > c.budget1 {
            let best = argmin(&c.b1);
            let emin = c.b1[best];
            let t = ((e1 - c.budget1) / (e1 - emin).max(1e-300)).min(1.0);
            for r in 0..clean.r1() {
                for x in 0..x1n {
                    let delta = if x == best { 1.0 } else { 0.0 };
                    let v = &mut vars.k1[r * x1n + x];
                    *v = (1.0 - t) * *v + t * delta;
                }
            }
        }
        if e2 > c.budget2 {
            let best = argmin(&c.b2);
            let emin = c.b2[best];
            let t = ((e2 - c.budget2) / (e2 - emin).max(1e-300)).min(1.0);
            for r in 0..clean.r2() {
                for x in 0..x2n {
                    let delta = if x == best { 1.0 } else { 0.0 };
                    let v = &mut vars.k2[r * x2n + x];
                    *v = (1.0 - t) * *v + t * delta;
                }
            }
        }
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn check_cost_feasible(mac: &StateMac) -> Result<()> {
    if let Some(c) = mac.costs() {
        let min1 = c.b1.iter().cloned().fold(f64::INFINITY, f64::min);
        let min2 = c.b2.iter().cloned().fold(f64::INFINITY, f64::min);
        if min1 > c.budget1 + 1e-12 || min2 > c.budget2 + 1e-12 {
            return Err(BoundError::InfeasibleCosts);
        }
    }
    Ok(())
}

fn product_starts(view: &View, aware: bool, opts: &SolveOpts) -> Vec<ProductVars> {
    let r1 = if aware { view.s1n } else { 1 };
    let r2 = if aware { view.s2n } else { 1 };
    let mut starts = Vec::with_capacity(opts.starts + 1);
    starts.push(ProductVars {
        k1: vec![1.0 / view.x1n as f64; r1 * view.x1n],
        k2: vec![1.0 / view.x2n as f64; r2 * view.x2n],
    });
    for i in 0..opts.starts {
        let key = RngKey::new(opts.seed).with(0xBA5E).with(i as u64);
        let mut rng = key.rng();
        let mut k1 = Vec::with_capacity(r1 * view.x1n);
        for _ in 0..r1 {
            k1.extend_from_slice(random_dist(view.x1n, &mut rng).probs());
        }
        let mut k2 = Vec::with_capacity(r2 * view.x2n);
        for _ in 0..r2 {
            k2.extend_from_slice(random_dist(view.x2n, &mut rng).probs());
        }
        starts.push(ProductVars { k1, k2 });
    }
    starts
}

pub(crate) fn solve_baseline(
    mac: &StateMac,
    aware: bool,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    check_cost_feasible(mac)?;
    let view = View::new(mac);
    let problem = ProductProblem {
        view: &view,
        aware,
        rho_cost: 0.0,
    };
    let mut starts = product_starts(&view, aware, opts);
    for p in &opts.warm_starts {
        if let Some(v) = product_vars_from_policy(&view, aware, p) {
            starts.push(v);
        }
    }
    let results: Vec<(ProductVars, Solved)> = starts
        .into_par_iter()
        .map(|s| run_product_start(&problem, s))
        .collect();
    let n_starts = results.len();
    let mut best: Option<(ProductVars, Solved)> = None;
    let mut total_iters = 0;
    let mut any_converged = false;
    for (vars, sol) in results {
        total_iters += sol.iterations;
        any_converged |= sol.converged;
        best = Some(match best.take() {
            None => (vars, sol),
            Some((bv, bs)) => {
                if sol.value > bs.value + VALUE_TIE_TOL
                    || ((sol.value - bs.value).abs() <= VALUE_TIE_TOL
                        && lex_less(&sol.params, &bs.params))
                {
                    (vars, sol)
                } else {
                    (bv, bs)
                }
            }
        });
    }
    let (vars, _sol) = best.expect("at least one start");
    let policy = product_policy(&view, aware, &vars)?;
    // Report the value re-evaluated through the public path.
    let value = super::sum_rate_at_policy(mac, &policy)?;
    let mut slacks = BTreeMap::new();
    slacks.insert("dependence_used".into(), 0.0);
    if let Some(c) = mac.costs() {
        let rep = mac.expected_cost(&policy)?;
        slacks.insert("cost_slack_1".into(), c.budget1 - rep.cost1);
        slacks.insert("cost_slack_2".into(), c.budget2 - rep.cost2);
    }
    Ok(SumRateBound {
        value,
        achieving_policy: policy,
        constraint_slacks: slacks,
        report: OptimizerReport {
            starts: n_starts,
            iterations: total_iters,
            converged: any_converged,
        },
    })
}

fn product_vars_from_policy(view: &View, aware: bool, p: &InputPolicy) -> Option<ProductVars> {
    match (aware, p) {
        (false, InputPolicy::Independent { px1, px2 }) => Some(ProductVars {
            k1: px1.probs().to_vec(),
            k2: px2.probs().to_vec(),
        }),
        (true, InputPolicy::Independent { px1, px2 }) => {
            let mut k1 = Vec::new();
            for _ in 0..view.s1n {
                k1.extend_from_slice(px1.probs());
            }
            let mut k2 = Vec::new();
            for _ in 0..view.s2n {
                k2.extend_from_slice(px2.probs());
            }
            Some(ProductVars { k1, k2 })
        }
        (true, InputPolicy::CondIndependent { px1, px2 }) => Some(ProductVars {
            k1: px1.rows_flat().to_vec(),
            k2: px2.rows_flat().to_vec(),
        }),
        _ => None,
    }
}

fn product_policy(view: &View, aware: bool, vars: &ProductVars) -> Result<InputPolicy> {
    if aware {
        let px1 = CondKernel::new(
            vec![Axis::S1],
            vec![view.s1n],
            vec![Axis::X1],
            vec![view.x1n],
            renormalize_rows(&vars.k1, view.x1n),
        )?;
        let px2 = CondKernel::new(
            vec![Axis::S2],
            vec![view.s2n],
            vec![Axis::X2],
            vec![view.x2n],
            renormalize_rows(&vars.k2, view.x2n),
        )?;
        Ok(InputPolicy::CondIndependent { px1, px2 })
    } else {
        Ok(InputPolicy::Independent {
            px1: Dist::new(renormalize_rows(&vars.k1, view.x1n))?,
            px2: Dist::new(renormalize_rows(&vars.k2, view.x2n))?,
        })
    }
}

fn renormalize_rows(rows: &[f64], ncols: usize) -> Vec<f64> {
    let mut out = rows.to_vec();
    for r in out.chunks_exact_mut(ncols) {
        let s: f64 = r.iter().sum();
        if s > 0.0 {
            for v in r.iter_mut() {
                *v /= s;
            }
        } else {
            for v in r.iter_mut() {
                *v = 1.0 / ncols as f64;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Joint (dependence-budgeted) problems
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum BudgetKind {
    /// `I(X1;X2) <= c`
    Single(f64),
    /// the three coordination constraints `(c1, c2, c1+c2)`
    Triple(f64, f64, f64),
}

struct JointProblem<'v> {
    view: &'v View,
    /// One row per state cell when true; a single shared row otherwise.
    per_state: bool,
    budget: BudgetKind,
    rho: f64,
    rho_cost: f64,
}

impl<'v> JointProblem<'v> {
    fn nrows(&self) -> usize {
        if self.per_state {
            self.view.s_cells()
        } else {
            1
        }
    }

    fn row_of_state(&self, s: usize) -> usize {
        if self.per_state {
            s
        } else {
            0
        }
    }

    fn mutual_info_objective(&self, q: &[f64]) -> f64 {
        let cell = self.view.cell();
        let mut acc = 0.0;
        for s in 0..self.view.s_cells() {
            let p = self.view.ps[s];
            if p == 0.0 {
                continue;
            }
            let row = &q[self.row_of_state(s) * cell..(self.row_of_state(s) + 1) * cell];
            acc += p * self.view.state_mi(s, row);
        }
        acc
    }

    /// Constraint values in the same order as the budget kind.
    fn dependence(&self, q: &[f64]) -> Vec<f64> {
        match self.budget {
            BudgetKind::Single(_) => vec![pairwise_mi(&q[..self.view.cell()], self.view.x1n, self.view.x2n)],
            BudgetKind::Triple(..) => {
                let (a1, a2, a3) = coordination_measures(self.view, q, self.per_state);
                vec![a1, a2, a3]
            }
        }
    }

    fn budget_caps(&self) -> Vec<f64> {
        match self.budget {
            BudgetKind::Single(c) => vec![c],
            BudgetKind::Triple(c1, c2, cs) => vec![c1, c2, cs],
        }
    }

    fn expected_costs(&self, q: &[f64]) -> Option<(f64, f64)> {
        let costs = self.view.costs.as_ref()?;
        let cell = self.view.cell();
        let (mut e1, mut e2) = (0.0, 0.0);
        for s in 0..self.view.s_cells() {
            let p = self.view.ps[s];
            if p == 0.0 {
                continue;
            }
            let row = &q[self.row_of_state(s) * cell..(self.row_of_state(s) + 1) * cell];
            for x1 in 0..self.view.x1n {
                for x2 in 0..self.view.x2n {
                    let v = p * row[x1 * self.view.x2n + x2];
                    e1 += v * costs.b1[x1];
                    e2 += v * costs.b2[x2];
                }
            }
        }
        Some((e1, e2))
    }

    fn penalized(&self, q: &[f64]) -> f64 {
        let mut val = self.mutual_info_objective(q);
        let deps = self.dependence(q);
        let caps = self.budget_caps();
        for (d, c) in deps.iter().zip(&caps) {
            let viol = (d - c).max(0.0);
            val -= self.rho * viol * viol;
        }
        if self.rho_cost > 0.0 {
            if let (Some((e1, e2)), Some(c)) = (self.expected_costs(q), self.view.costs.as_ref())
            {
                let v1 = (e1 - c.budget1).max(0.0);
                let v2 = (e2 - c.budget2).max(0.0);
                val -= self.rho_cost * (v1 * v1 + v2 * v2);
            }
        }
        val
    }

    fn scores(&self, q: &[f64]) -> (Vec<f64>, f64) {
        let view = self.view;
        let cell = view.cell();
        let nrows = self.nrows();
        let mut g = vec![0.0; nrows * cell];
        let mut d = vec![0.0; cell];
        // objective part
        for s in 0..view.s_cells() {
            let p = view.ps[s];
            if p == 0.0 {
                continue;
            }
            let r = self.row_of_state(s);
            let row = &q[r * cell..(r + 1) * cell];
            view.state_divergences(s, row, &mut d);
            let w = if self.per_state { 1.0 } else { p };
            for c in 0..cell {
                g[r * cell + c] += w * d[c];
            }
        }
        // dependence penalty part
        let deps = self.dependence(q);
        let caps = self.budget_caps();
        match self.budget {
            BudgetKind::Single(_) => {
                let viol = (deps[0] - caps[0]).max(0.0);
                if viol > 0.0 {
                    let row = &q[..cell];
                    let (m1, m2) = row_marginals(row, view.x1n, view.x2n);
                    for x1 in 0..view.x1n {
                        for x2 in 0..view.x2n {
                            let grad =
                                safe_ratio_log2(row[x1 * view.x2n + x2], m1[x1] * m2[x2]);
                            g[x1 * view.x2n + x2] -= 2.0 * self.rho * viol * grad;
                        }
                    }
                }
            }
            BudgetKind::Triple(..) => {
                let viols: Vec<f64> = deps
                    .iter()
                    .zip(&caps)
                    .map(|(d, c)| (d - c).max(0.0))
                    .collect();
                if viols.iter().any(|&v| v > 0.0) {
                    let cm = CondMarginals::new(view, q, self.per_state);
                    for s in 0..view.s_cells() {
                        if view.ps[s] == 0.0 {
                            continue;
                        }
                        let r = self.row_of_state(s);
                        let (s1, s2) = (s / view.s2n, s % view.s2n);
                        for x1 in 0..view.x1n {
                            for x2 in 0..view.x2n {
                                let qv = q[r * cell + x1 * view.x2n + x2];
                                let g1 =
                                    safe_ratio_log2(cm.x1_given_s[s * view.x1n + x1], cm.x1_given_s1[s1 * view.x1n + x1]);
                                let g2 =
                                    safe_ratio_log2(cm.x2_given_s[s * view.x2n + x2], cm.x2_given_s2[s2 * view.x2n + x2]);
                                let g3 = safe_ratio_log2(
                                    qv,
                                    cm.x1_given_s1[s1 * view.x1n + x1]
                                        * cm.x2_given_s2[s2 * view.x2n + x2],
                                );
                                g[r * cell + x1 * view.x2n + x2] -= 2.0
                                    * self.rho
                                    * (viols[0] * g1 + viols[1] * g2 + viols[2] * g3);
                            }
                        }
                    }
                }
            }
        }
        if self.rho_cost > 0.0 {
            if let (Some((e1, e2)), Some(c)) = (self.expected_costs(q), self.view.costs.as_ref())
            {
                let v1 = (e1 - c.budget1).max(0.0);
                let v2 = (e2 - c.budget2).max(0.0);
                if v1 > 0.0 || v2 > 0.0 {
                    for r in 0..nrows {
                        for x1 in 0..view.x1n {
                            for x2 in 0..view.x2n {
                                g[r * cell + x1 * view.x2n + x2] -= 2.0
                                    * self.rho_cost
                                    * (v1 * c.b1[x1] + v2 * c.b2[x2]);
                            }
                        }
                    }
                }
            }
        }
        let ps = &view.ps;
        let per_state = self.per_state;
        let gap = block_gap(&g, q, nrows, cell, |r| if per_state { ps[r] } else { 1.0 });
        (g, gap)
    }
}

/// `I(X1;X2)` of one joint table.
fn pairwise_mi(row: &[f64], x1n: usize, x2n: usize) -> f64 {
    let (m1, m2) = row_marginals(row, x1n, x2n);
    let mut acc = 0.0;
    for x1 in 0..x1n {
        for x2 in 0..x2n {
            let q = row[x1 * x2n + x2];
            if q > 0.0 {
                acc += q * (q / (m1[x1] * m2[x2])).log2();
            }
        }
    }
    acc.max(0.0)
}

fn row_marginals(row: &[f64], x1n: usize, x2n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m1 = vec![0.0; x1n];
    let mut m2 = vec![0.0; x2n];
    for x1 in 0..x1n {
        for x2 in 0..x2n {
            m1[x1] += row[x1 * x2n + x2];
            m2[x2] += row[x1 * x2n + x2];
        }
    }
    (m1, m2)
}

/// Conditional marginals used by the coordination constraints.
struct CondMarginals {
    /// `p(x1 | s1,s2)` as `[s][x1]`
    x1_given_s: Vec<f64>,
    /// `p(x2 | s1,s2)` as `[s][x2]`
    x2_given_s: Vec<f64>,
    /// `p(x1 | s1)` as `[s1][x1]`
    x1_given_s1: Vec<f64>,
    /// `p(x2 | s2)` as `[s2][x2]`
    x2_given_s2: Vec<f64>,
}

impl CondMarginals {
    fn new(view: &View, q: &[f64], per_state: bool) -> Self {
        let cell = view.cell();
        let mut x1_given_s = vec![0.0; view.s_cells() * view.x1n];
        let mut x2_given_s = vec![0.0; view.s_cells() * view.x2n];
        for s in 0..view.s_cells() {
            let r = if per_state { s } else { 0 };
            let row = &q[r * cell..(r + 1) * cell];
            for x1 in 0..view.x1n {
                for x2 in 0..view.x2n {
                    x1_given_s[s * view.x1n + x1] += row[x1 * view.x2n + x2];
                    x2_given_s[s * view.x2n + x2] += row[x1 * view.x2n + x2];
                }
            }
        }
        let mut x1_given_s1 = vec![0.0; view.s1n * view.x1n];
        let mut x2_given_s2 = vec![0.0; view.s2n * view.x2n];
        for s1 in 0..view.s1n {
            for s2 in 0..view.s2n {
                let s = s1 * view.s2n + s2;
                for x1 in 0..view.x1n {
                    x1_given_s1[s1 * view.x1n + x1] +=
                        view.s2_given_s1[s1 * view.s2n + s2] * x1_given_s[s * view.x1n + x1];
                }
                for x2 in 0..view.x2n {
                    x2_given_s2[s2 * view.x2n + x2] +=
                        view.s1_given_s2[s2 * view.s1n + s1] * x2_given_s[s * view.x2n + x2];
                }
            }
        }
        Self {
            x1_given_s,
            x2_given_s,
            x1_given_s1,
            x2_given_s2,
        }
    }
}

/// The three coordination constraint values
/// `(H(X1|S1)-H(X1|S1,S2), H(X2|S2)-H(X2|S1,S2),
///   H(X1|S1)+H(X2|S2)-H(X1,X2|S1,S2))`.
fn coordination_measures(view: &View, q: &[f64], per_state: bool) -> (f64, f64, f64) {
    let cm = CondMarginals::new(view, q, per_state);
    let cell = view.cell();
    let mut h_x1_s1 = 0.0;
    for s1 in 0..view.s1n {
        let mut h = 0.0;
        for x1 in 0..view.x1n {
            let p = cm.x1_given_s1[s1 * view.x1n + x1];
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
        h_x1_s1 += view.ps1[s1] * h;
    }
    let mut h_x2_s2 = 0.0;
    for s2 in 0..view.s2n {
        let mut h = 0.0;
        for x2 in 0..view.x2n {
            let p = cm.x2_given_s2[s2 * view.x2n + x2];
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
        h_x2_s2 += view.ps2[s2] * h;
    }
    let (mut h_x1_s, mut h_x2_s, mut h_xx_s) = (0.0, 0.0, 0.0);
    for s in 0..view.s_cells() {
        let ps = view.ps[s];
        if ps == 0.0 {
            continue;
        }
        let r = if per_state { s } else { 0 };
        let row = &q[r * cell..(r + 1) * cell];
        for x1 in 0..view.x1n {
            let p = cm.x1_given_s[s * view.x1n + x1];
            if p > 0.0 {
                h_x1_s -= ps * p * p.log2();
            }
        }
        for x2 in 0..view.x2n {
            let p = cm.x2_given_s[s * view.x2n + x2];
            if p > 0.0 {
                h_x2_s -= ps * p * p.log2();
            }
        }
        for &v in row {
            if v > 0.0 {
                h_xx_s -= ps * v * v.log2();
            }
        }
    }
    (
        (h_x1_s1 - h_x1_s).max(0.0),
        (h_x2_s2 - h_x2_s).max(0.0),
        (h_x1_s1 + h_x2_s2 - h_xx_s).max(0.0),
    )
}

/// Mix toward the product (conditionally independent) projection until every
/// dependence constraint holds. Along this path marginals are preserved and
/// each constraint is convex with value 0 at `t = 1`, hence nonincreasing,
/// so bisection on `t` is exact.
fn project_dependence(problem: &JointProblem, q: &mut Vec<f64>) {
    let caps = problem.budget_caps();
    let feasible = |q: &[f64]| {
        problem
            .dependence(q)
            .iter()
            .zip(&caps)
            .all(|(d, c)| *d <= c + 1e-12)
    };
    if feasible(q) {
        return;
    }
    let view = problem.view;
    let cell = view.cell();
    let target: Vec<f64> = match problem.budget {
        BudgetKind::Single(_) => {
            let (m1, m2) = row_marginals(&q[..cell], view.x1n, view.x2n);
            let mut t = vec![0.0; cell];
            for x1 in 0..view.x1n {
                for x2 in 0..view.x2n {
                    t[x1 * view.x2n + x2] = m1[x1] * m2[x2];
                }
            }
            t
        }
        BudgetKind::Triple(..) => {
            let cm = CondMarginals::new(view, q, problem.per_state);
            let mut t = vec![0.0; problem.nrows() * cell];
            for s in 0..view.s_cells() {
                let r = problem.row_of_state(s);
                let (s1, s2) = (s / view.s2n, s % view.s2n);
                for x1 in 0..view.x1n {
                    for x2 in 0..view.x2n {
                        t[r * cell + x1 * view.x2n + x2] = cm.x1_given_s1[s1 * view.x1n + x1]
                            * cm.x2_given_s2[s2 * view.x2n + x2];
                    }
                }
            }
            t
        }
    };
    let mix = |t: f64, out: &mut Vec<f64>| {
        for i in 0..out.len() {
            out[i] = (1.0 - t) * q[i] + t * target[i];
        }
    };
    let mut scratch = q.clone();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        mix(mid, &mut scratch);
        if feasible(&scratch) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mix(hi, &mut scratch);
    if !feasible(&scratch) {
        // numerical corner: fall back to the fully independent projection
        scratch.copy_from_slice(&target);
    }
    *q = scratch;
}

fn project_joint_costs(problem: &JointProblem, q: &mut [f64]) {
    let Some(c) = problem.view.costs.as_ref() else {
        return;
    };
    let Some((e1, e2)) = problem.expected_costs(q) else {
        return;
    };
    let v1 = (e1 - c.budget1).max(0.0);
    let v2 = (e2 - c.budget2).max(0.0);
    if v1 <= 0.0 && v2 <= 0.0 {
        return;
    }
    // mix toward the min-cost product point mass; expected costs are affine
    // in the mix parameter, so the required t is exact
    let (b1, b2) = (argmin(&c.b1), argmin(&c.b2));
    let view = problem.view;
    let cell = view.cell();
    let delta_cost1 = c.b1[b1];
    let delta_cost2 = c.b2[b2];
    let t1 = if v1 > 0.0 {
        (e1 - c.budget1) / (e1 - delta_cost1).max(1e-300)
    } else {
        0.0
    };
    let t2 = if v2 > 0.0 {
        (e2 - c.budget2) / (e2 - delta_cost2).max(1e-300)
    } else {
        0.0
    };
    let t = t1.max(t2).min(1.0);
    for r in 0..problem.nrows() {
        for x1 in 0..view.x1n {
            for x2 in 0..view.x2n {
                let d = if x1 == b1 && x2 == b2 { 1.0 } else { 0.0 };
                let v = &mut q[r * cell + x1 * view.x2n + x2];
                *v = (1.0 - t) * *v + t * d;
            }
        }
    }
}

fn run_joint_start(
    view: &View,
    per_state: bool,
    budget: BudgetKind,
    start: Vec<f64>,
) -> Solved {
    let cell = view.cell();
    let nrows = if per_state { view.s_cells() } else { 1 };
    // keep starts interior so the multiplicative updates can move any cell
    let mut q: Vec<f64> = start;
    for r in 0..nrows {
        let row = &mut q[r * cell..(r + 1) * cell];
        let u = 1.0 / cell as f64;
        for v in row.iter_mut() {
            *v = 0.999 * *v + 0.001 * u;
        }
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    let mut total_iters = 0;
    let mut rho = 10.0;
    let has_costs = view.costs.is_some();
    for _round in 0..PENALTY_ROUNDS {
        let problem = JointProblem {
            view,
            per_state,
            budget,
            rho,
            rho_cost: if has_costs { rho } else { 0.0 },
        };
        total_iters += ascend_block(
            &mut q,
            cell,
            |rows| problem.penalized(rows),
            |rows| problem.scores(rows),
        );
        rho *= 10.0;
    }
    let problem = JointProblem {
        view,
        per_state,
        budget,
        rho: 0.0,
        rho_cost: 0.0,
    };
    project_joint_costs(&problem, &mut q);
    project_dependence(&problem, &mut q);
    let value = problem.mutual_info_objective(&q);
    Solved {
        value,
        params: q,
        iterations: total_iters,
        converged: true,
    }
}

fn joint_starts(
    view: &View,
    per_state: bool,
    opts: &SolveOpts,
    warm_tables: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let cell = view.cell();
    let nrows = if per_state { view.s_cells() } else { 1 };
    let mut starts = Vec::with_capacity(opts.starts + 1 + warm_tables.len());
    starts.push(vec![1.0 / cell as f64; nrows * cell]);
    for i in 0..opts.starts {
        let key = RngKey::new(opts.seed).with(0x301F).with(i as u64);
        let mut rng = key.rng();
        let mut q = Vec::with_capacity(nrows * cell);
        for _ in 0..nrows {
            q.extend_from_slice(random_dist(cell, &mut rng).probs());
        }
        starts.push(q);
    }
    for w in warm_tables {
        if w.len() == nrows * cell {
            starts.push(w.clone());
        }
    }
    starts
}

fn best_joint(
    view: &View,
    per_state: bool,
    budget: BudgetKind,
    starts: Vec<Vec<f64>>,
) -> (Vec<f64>, usize, usize, bool) {
    let results: Vec<Solved> = starts
        .into_par_iter()
        .map(|s| run_joint_start(view, per_state, budget, s))
        .collect();
    let n = results.len();
    let mut iters = 0;
    let mut best: Option<Solved> = None;
    for sol in results {
        iters += sol.iterations;
        best = Some(match best.take() {
            None => sol,
            Some(b) => {
                if sol.value > b.value + VALUE_TIE_TOL
                    || ((sol.value - b.value).abs() <= VALUE_TIE_TOL
                        && lex_less(&sol.params, &b.params))
                {
                    sol
                } else {
                    b
                }
            }
        });
    }
    let b = best.expect("at least one start");
    (b.params, n, iters, b.converged)
}

/// Warm tables derived from caller policies (conditional input law rows).
fn warm_tables_from_policies(
    mac: &StateMac,
    per_state: bool,
    policies: &[InputPolicy],
) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for p in policies {
        if matches!(p, InputPolicy::ShannonStrategy { .. }) {
            continue;
        }
        if let Ok(law) = p.conditional_input_law(mac) {
            if per_state {
                out.push(law.rows_flat().to_vec());
            } else {
                // average the conditional rows under the state law (exact
                // when the policy is state-independent)
                let cell = law.to_cells();
                let mut row = vec![0.0; cell];
                for s in 0..law.from_cells() {
                    let w = mac.state_law().table()[s];
                    for c in 0..cell {
                        row[c] += w * law.row(s)[c];
                    }
                }
                out.push(row);
            }
        }
    }
    out
}

/// Inner bound for the no-state / strictly causal regimes:
/// max `I(X1,X2;Y|S)` over `p(x1,x2)` with `I(X1;X2) <= c1+c2`.
pub(crate) fn solve_inner_message(
    mac: &StateMac,
    budget: CoutBudget,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    check_cost_feasible(mac)?;
    let view = View::new(mac);
    let baseline = solve_baseline(mac, false, &thinner(opts))?;
    let mut warm = warm_tables_from_policies(mac, false, &opts.warm_starts);
    warm.extend(warm_tables_from_policies(
        mac,
        false,
        &[baseline.achieving_policy.clone()],
    ));
    let starts = joint_starts(&view, false, opts, &warm);
    let (q, n_starts, iters, converged) =
        best_joint(&view, false, BudgetKind::Single(budget.sum()), starts);
    let table = renormalize_rows(&q, view.cell());
    let policy = InputPolicy::state_independent_joint(mac, table.clone())?;
    let mut value = super::sum_rate_at_policy(mac, &policy)?;
    let mut best_policy = policy;
    if baseline.value > value {
        value = baseline.value;
        best_policy = InputPolicy::state_independent_joint(
            mac,
            independent_table(&baseline.achieving_policy, mac)?,
        )?;
    }
    let used = {
        let j = mac.induced_joint(&best_policy)?;
        j.cond_mutual_info(&[Axis::X1], &[Axis::X2], &[])?
    };
    let mut slacks = BTreeMap::new();
    slacks.insert("dependence_used".into(), used);
    slacks.insert("dependence_slack".into(), budget.sum() - used);
    add_cost_slacks(mac, &best_policy, &mut slacks)?;
    Ok(SumRateBound {
        value,
        achieving_policy: best_policy,
        constraint_slacks: slacks,
        report: OptimizerReport {
            starts: n_starts,
            iterations: iters,
            converged,
        },
    })
}

fn independent_table(policy: &InputPolicy, mac: &StateMac) -> Result<Vec<f64>> {
    match policy {
        InputPolicy::Independent { px1, px2 } => {
            let mut t = Vec::with_capacity(mac.x1_size() * mac.x2_size());
            for &a in px1.probs() {
                for &b in px2.probs() {
                    t.push(a * b);
                }
            }
            Ok(t)
        }
        _ => Err(BoundError::PolicyShape {
            expected: "independent product policy",
        }),
    }
}

fn add_cost_slacks(
    mac: &StateMac,
    policy: &InputPolicy,
    slacks: &mut BTreeMap<String, f64>,
) -> Result<()> {
    if let Some(c) = mac.costs() {
        let rep = mac.expected_cost(policy)?;
        slacks.insert("cost_slack_1".into(), c.budget1 - rep.cost1);
        slacks.insert("cost_slack_2".into(), c.budget2 - rep.cost2);
    }
    Ok(())
}

fn thinner(opts: &SolveOpts) -> SolveOpts {
    SolveOpts {
        starts: opts.starts.max(32),
        seed: opts.seed,
        u_sizes: None,
        warm_starts: Vec::new(),
    }
}

/// Inner bound for the causal / non-causal regimes via Shannon strategies on
/// the lifted channel, `I(U1;U2) <= c1+c2`.
pub(crate) fn solve_inner_shannon(
    mac: &StateMac,
    budget: CoutBudget,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    check_cost_feasible(mac)?;
    match opts.u_sizes {
        None => {
            let (f1, f2) = canonical_maps(mac)?;
            solve_on_lift(mac, &f1, &f2, budget, opts)
        }
        Some((u1, u2)) => {
            let pairs = (mac.x1_size() as u128)
                .checked_pow((u1 * mac.s1_size()) as u32)
                .and_then(|a| {
                    (mac.x2_size() as u128)
                        .checked_pow((u2 * mac.s2_size()) as u32)
                        .and_then(|b| a.checked_mul(b))
                })
                .unwrap_or(u128::MAX);
            if pairs > 1_000_000 {
                return Err(BoundError::MapEnumerationTooLarge { pairs });
            }
            let maps1 = enumerate_maps(u1, mac.s1_size(), mac.x1_size());
            let maps2 = enumerate_maps(u2, mac.s2_size(), mac.x2_size());
            let quick = SolveOpts {
                starts: (opts.starts / 4).max(4),
                seed: opts.seed,
                u_sizes: None,
                warm_starts: Vec::new(),
            };
            let mut best: Option<(SumRateBound, StrategyMap, StrategyMap)> = None;
            for f1 in &maps1 {
                for f2 in &maps2 {
                    let sol = solve_on_lift(mac, f1, f2, budget, &quick)?;
                    let better = match &best {
                        None => true,
                        Some((b, _, _)) => sol.value > b.value + VALUE_TIE_TOL,
                    };
                    if better {
                        best = Some((sol, f1.clone(), f2.clone()));
                    }
                }
            }
            let (_, f1, f2) = best.expect("map enumeration nonempty");
            // refine the winning pair at full multistart strength
            solve_on_lift(mac, &f1, &f2, budget, opts)
        }
    }
}

fn enumerate_maps(u: usize, s: usize, x: usize) -> Vec<StrategyMap> {
    let total = x.pow((u * s) as u32);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut table = vec![0usize; u * s];
        for v in table.iter_mut() {
            *v = c % x;
            c /= x;
        }
        // canonicalize up to relabeling of U: sort the per-u function columns
        let mut cols: Vec<Vec<usize>> = (0..u)
            .map(|uu| table[uu * s..(uu + 1) * s].to_vec())
            .collect();
        cols.sort();
        if seen.insert(cols) {
            out.push(StrategyMap::new(u, s, table));
        }
    }
    out
}

fn solve_on_lift(
    mac: &StateMac,
    f1: &StrategyMap,
    f2: &StrategyMap,
    budget: CoutBudget,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    let lifted = mac.lift_shannon_strategy(f1, f2)?;
    let view = View::new(&lifted);
    // product warm start: draw each state's input independently, i.e.
    // p(u) = prod_s p0(x = u(s) | s); reproduces the aware baseline at
    // I(U1;U2) = 0.
    let baseline = solve_baseline(mac, true, &thinner(opts))?;
    let mut warm = Vec::new();
    if let InputPolicy::CondIndependent { px1, px2 } = &baseline.achieving_policy {
        let p_u1 = table_product_dist(f1, px1);
        let p_u2 = table_product_dist(f2, px2);
        let mut t = Vec::with_capacity(p_u1.len() * p_u2.len());
        for &a in &p_u1 {
            for &b in &p_u2 {
                t.push(a * b);
            }
        }
        warm.push(t);
    }
    for p in &opts.warm_starts {
        if let InputPolicy::ShannonStrategy { pu, f1: g1, f2: g2 } = p {
            if g1 == f1 && g2 == f2 {
                warm.push(pu.table().to_vec());
            }
        }
    }
    let starts = joint_starts(&view, false, opts, &warm);
    let (q, n_starts, iters, converged) =
        best_joint(&view, false, BudgetKind::Single(budget.sum()), starts);
    let table = renormalize_rows(&q, view.cell());
    let pu = JointDist::new(
        vec![Axis::U1, Axis::U2],
        vec![f1.u_size, f2.u_size],
        table,
    )?;
    let policy = InputPolicy::ShannonStrategy {
        pu,
        f1: f1.clone(),
        f2: f2.clone(),
    };
    let value = super::sum_rate_at_policy(mac, &policy)?;
    let j = mac.induced_joint(&policy)?;
    let used = j.cond_mutual_info(&[Axis::U1], &[Axis::U2], &[])?;
    let mut slacks = BTreeMap::new();
    slacks.insert("dependence_used".into(), used);
    slacks.insert("dependence_slack".into(), budget.sum() - used);
    add_cost_slacks(mac, &policy, &mut slacks)?;
    Ok(SumRateBound {
        value,
        achieving_policy: policy,
        constraint_slacks: slacks,
        report: OptimizerReport {
            starts: n_starts,
            iterations: iters,
            converged,
        },
    })
}

/// `p(u) = prod_s k(x = u(s) | s)` over function-table indices.
fn table_product_dist(f: &StrategyMap, k: &CondKernel) -> Vec<f64> {
    (0..f.u_size)
        .map(|u| {
            (0..f.s_size)
                .map(|s| k.row(s)[f.apply(u, s)])
                .product::<f64>()
        })
        .collect()
}

/// Inner bound for non-causal message-and-state cooperation: max over
/// `p(x1,x2|s1,s2)` under the three coordination constraints.
pub(crate) fn solve_inner_state_coop(
    mac: &StateMac,
    budget: CoutBudget,
    opts: &SolveOpts,
) -> Result<SumRateBound> {
    check_cost_feasible(mac)?;
    let view = View::new(mac);
    let baseline = solve_baseline(mac, true, &thinner(opts))?;
    let mut warm_policies = opts.warm_starts.clone();
    warm_policies.push(baseline.achieving_policy.clone());
    // a state-independent joint solution is always feasible here too
    if let Ok(msg) = solve_inner_message(mac, budget, &thinner(opts)) {
        warm_policies.push(msg.achieving_policy);
    }
    let warm = warm_tables_from_policies(mac, true, &warm_policies);
    let starts = joint_starts(&view, true, opts, &warm);
    let (q, n_starts, iters, converged) = best_joint(
        &view,
        true,
        BudgetKind::Triple(budget.c1, budget.c2, budget.sum()),
        starts,
    );
    let rows = renormalize_rows(&q, view.cell());
    let policy = InputPolicy::JointConditional {
        pxx: CondKernel::new(
            vec![Axis::S1, Axis::S2],
            vec![mac.s1_size(), mac.s2_size()],
            vec![Axis::X1, Axis::X2],
            vec![mac.x1_size(), mac.x2_size()],
            rows,
        )?,
    };
    let value = super::sum_rate_at_policy(mac, &policy)?;
    let j = mac.induced_joint(&policy)?;
    let (a1, a2, a12, _) = super::dependence_measures(&j)?;
    let a3 = a1 + a2 + a12;
    let mut slacks = BTreeMap::new();
    slacks.insert("coord_c1_used".into(), a1);
    slacks.insert("coord_c2_used".into(), a2);
    slacks.insert("coord_sum_used".into(), a3);
    slacks.insert("coord_c1_slack".into(), budget.c1 - a1);
    slacks.insert("coord_c2_slack".into(), budget.c2 - a2);
    slacks.insert("coord_sum_slack".into(), budget.sum() - a3);
    add_cost_slacks(mac, &policy, &mut slacks)?;
    Ok(SumRateBound {
        value,
        achieving_policy: policy,
        constraint_slacks: slacks,
        report: OptimizerReport {
            starts: n_starts,
            iterations: iters,
            converged,
        },
    })
}

// ---------------------------------------------------------------------------
// Individual-rate supports for the outer region
// ---------------------------------------------------------------------------

/// Best-found supports of `R1` (`max I(X1;Y|S,X2)`) and `R2`.
pub(crate) fn individual_rate_supports(
    mac: &StateMac,
    aware: bool,
    baseline: &SumRateBound,
    opts: &SolveOpts,
) -> Result<(f64, f64)> {
    let view = View::new(mac);
    let starts = {
        let mut s = product_starts(
            &view,
            aware,
            &SolveOpts {
                starts: opts.starts.min(16),
                ..thinner(opts)
            },
        );
        if let Some(v) = product_vars_from_policy(&view, aware, &baseline.achieving_policy) {
            s.push(v);
        }
        s
    };
    let r1 = starts
        .par_iter()
        .map(|s| ascend_individual(&view, aware, s.clone(), true))
        .reduce(|| 0.0, f64::max);
    let r2 = starts
        .par_iter()
        .map(|s| ascend_individual(&view, aware, s.clone(), false))
        .reduce(|| 0.0, f64::max);
    Ok((r1, r2))
}

/// Alternating ascent on `I(X1;Y|S,X2)` (or the mirrored objective): the own
/// block is concave (multiplicative updates), the partner block is linear in
/// its rows so each row update is a point-mass argmax.
fn ascend_individual(view: &View, aware: bool, mut vars: ProductVars, first: bool) -> f64 {
    let problem = ProductProblem {
        view,
        aware,
        rho_cost: 0.0,
    };
    let eval = |v: &ProductVars| individual_objective(view, &problem, v, first);
    for _ in 0..60 {
        let before = eval(&vars);
        if first {
            let mut k1 = vars.k1.clone();
            ascend_block(
                &mut k1,
                view.x1n,
                |rows| {
                    eval(&ProductVars {
                        k1: rows.to_vec(),
                        k2: vars.k2.clone(),
                    })
                },
                |rows| {
                    individual_scores(
                        view,
                        &problem,
                        &ProductVars {
                            k1: rows.to_vec(),
                            k2: vars.k2.clone(),
                        },
                        true,
                    )
                },
            );
            vars.k1 = k1;
            // partner block: per-row argmax of the linear coefficients
            let coef = partner_coefficients(view, &problem, &vars, true);
            point_mass_rows(&mut vars.k2, view.x2n, &coef);
        } else {
            let mut k2 = vars.k2.clone();
            ascend_block(
                &mut k2,
                view.x2n,
                |rows| {
                    eval(&ProductVars {
                        k1: vars.k1.clone(),
                        k2: rows.to_vec(),
                    })
                },
                |rows| {
                    individual_scores(
                        view,
                        &problem,
                        &ProductVars {
                            k1: vars.k1.clone(),
                            k2: rows.to_vec(),
                        },
                        false,
                    )
                },
            );
            vars.k2 = k2;
            let coef = partner_coefficients(view, &problem, &vars, false);
            point_mass_rows(&mut vars.k1, view.x1n, &coef);
        }
        if eval(&vars) - before < 1e-12 {
            break;
        }
    }
    eval(&vars)
}

/// `I(X1;Y|S,X2)` when `first`, else `I(X2;Y|S,X1)`.
fn individual_objective(
    view: &View,
    problem: &ProductProblem,
    vars: &ProductVars,
    first: bool,
) -> f64 {
    let mut acc = 0.0;
    let (x1n, x2n, yn) = (view.x1n, view.x2n, view.yn);
    for s1 in 0..view.s1n {
        for s2 in 0..view.s2n {
            let s = s1 * view.s2n + s2;
            let ps = view.ps[s];
            if ps == 0.0 {
                continue;
            }
            let row1 = if problem.aware {
                &vars.k1[s1 * x1n..(s1 + 1) * x1n]
            } else {
                &vars.k1[..x1n]
            };
            let row2 = if problem.aware {
                &vars.k2[s2 * x2n..(s2 + 1) * x2n]
            } else {
                &vars.k2[..x2n]
            };
            if first {
                for x2 in 0..x2n {
                    if row2[x2] == 0.0 {
                        continue;
                    }
                    let mut m = vec![0.0; yn];
                    let mut hterm = 0.0;
                    for x1 in 0..x1n {
                        let wrow = view.w_row(s, x1 * x2n + x2);
                        for y in 0..yn {
                            m[y] += row1[x1] * wrow[y];
                        }
                        hterm += row1[x1] * view.hw[s * view.cell() + x1 * x2n + x2];
                    }
                    acc += ps * row2[x2] * (crate::prob::entropy_of(&m) - hterm);
                }
            } else {
                for x1 in 0..x1n {
                    if row1[x1] == 0.0 {
                        continue;
                    }
                    let mut m = vec![0.0; yn];
                    let mut hterm = 0.0;
                    for x2 in 0..x2n {
                        let wrow = view.w_row(s, x1 * x2n + x2);
                        for y in 0..yn {
                            m[y] += row2[x2] * wrow[y];
                        }
                        hterm += row2[x2] * view.hw[s * view.cell() + x1 * x2n + x2];
                    }
                    acc += ps * row1[x1] * (crate::prob::entropy_of(&m) - hterm);
                }
            }
        }
    }
    acc
}

/// Scores for the "own" encoder's rows under `I(own;Y|S,partner)`: the
/// partner-averaged divergence of each own-symbol channel row against the
/// per-(state, partner-symbol) output mixture.
fn individual_scores(
    view: &View,
    problem: &ProductProblem,
    vars: &ProductVars,
    first: bool,
) -> (Vec<f64>, f64) {
    let (x1n, x2n, yn) = (view.x1n, view.x2n, view.yn);
    let own_n = if first { x1n } else { x2n };
    let r_own = if problem.aware {
        if first {
            view.s1n
        } else {
            view.s2n
        }
    } else {
        1
    };
    let mut g = vec![0.0; r_own * own_n];
    for s1 in 0..view.s1n {
        for s2 in 0..view.s2n {
            let s = s1 * view.s2n + s2;
            let w = if problem.aware {
                if first {
                    view.s2_given_s1[s1 * view.s2n + s2]
                } else {
                    view.s1_given_s2[s2 * view.s1n + s1]
                }
            } else {
                view.ps[s]
            };
            if w == 0.0 {
                continue;
            }
            let row1 = if problem.aware {
                &vars.k1[s1 * x1n..(s1 + 1) * x1n]
            } else {
                &vars.k1[..x1n]
            };
            let row2 = if problem.aware {
                &vars.k2[s2 * x2n..(s2 + 1) * x2n]
            } else {
                &vars.k2[..x2n]
            };
            let (own_row, partner_row) = if first { (row1, row2) } else { (row2, row1) };
            let r = if problem.aware {
                if first {
                    s1
                } else {
                    s2
                }
            } else {
                0
            };
            let partner_n = if first { x2n } else { x1n };
            for xp in 0..partner_n {
                if partner_row[xp] == 0.0 {
                    continue;
                }
                let mut m = vec![0.0; yn];
                for xo in 0..own_n {
                    let cell = if first { xo * x2n + xp } else { xp * x2n + xo };
                    let wrow = view.w_row(s, cell);
                    for y in 0..yn {
                        m[y] += own_row[xo] * wrow[y];
                    }
                }
                let neg_log_m: Vec<f64> = m
                    .iter()
                    .map(|&v| if v > 0.0 { -v.log2() } else { 1e3 })
                    .collect();
                for xo in 0..own_n {
                    let cell = if first { xo * x2n + xp } else { xp * x2n + xo };
                    let wrow = view.w_row(s, cell);
                    let mut dterm = -view.hw[s * view.cell() + cell];
                    for y in 0..yn {
                        if wrow[y] > 0.0 {
                            dterm += wrow[y] * neg_log_m[y];
                        }
                    }
                    g[r * own_n + xo] += w * partner_row[xp] * dterm;
                }
            }
        }
    }
    let own_rows = if first { &vars.k1 } else { &vars.k2 };
    let gap = block_gap(&g, own_rows, r_own, own_n, |r| {
        if problem.aware {
            if first {
                view.ps1[r]
            } else {
                view.ps2[r]
            }
        } else {
            1.0
        }
    });
    (g, gap)
}

/// Linear coefficients of the partner block for `I(own;Y|S,partner)`.
fn partner_coefficients(
    view: &View,
    problem: &ProductProblem,
    vars: &ProductVars,
    first: bool,
) -> Vec<f64> {
    let (x1n, x2n, yn) = (view.x1n, view.x2n, view.yn);
    let partner_n = if first { x2n } else { x1n };
    let r_p = if problem.aware {
        if first {
            view.s2n
        } else {
            view.s1n
        }
    } else {
        1
    };
    let mut coef = vec![0.0; r_p * partner_n];
    for s1 in 0..view.s1n {
        for s2 in 0..view.s2n {
            let s = s1 * view.s2n + s2;
            let w = if problem.aware {
                if first {
                    view.s1_given_s2[s2 * view.s1n + s1]
                } else {
                    view.s2_given_s1[s1 * view.s2n + s2]
                }
            } else {
                view.ps[s]
            };
            if w == 0.0 {
                continue;
            }
            let row1 = if problem.aware {
                &vars.k1[s1 * x1n..(s1 + 1) * x1n]
            } else {
                &vars.k1[..x1n]
            };
            let row2 = if problem.aware {
                &vars.k2[s2 * x2n..(s2 + 1) * x2n]
            } else {
                &vars.k2[..x2n]
            };
            let own_row = if first { row1 } else { row2 };
            let own_n = if first { x1n } else { x2n };
            let r = if problem.aware {
                if first {
                    s2
                } else {
                    s1
                }
            } else {
                0
            };
            for xp in 0..partner_n {
                let mut m = vec![0.0; yn];
                let mut hterm = 0.0;
                for xo in 0..own_n {
                    let cell = if first { xo * x2n + xp } else { xp * x2n + xo };
                    let wrow = view.w_row(s, cell);
                    for y in 0..yn {
                        m[y] += own_row[xo] * wrow[y];
                    }
                    hterm += own_row[xo] * view.hw[s * view.cell() + cell];
                }
                coef[r * partner_n + xp] += w * (crate::prob::entropy_of(&m) - hterm);
            }
        }
    }
    coef
}

fn point_mass_rows(rows: &mut [f64], ncols: usize, coef: &[f64]) {
    for (r, row) in rows.chunks_exact_mut(ncols).enumerate() {
        let c = &coef[r * ncols..(r + 1) * ncols];
        let mut best = 0;
        for i in 1..ncols {
            if c[i] > c[best] {
                best = i;
            }
        }
        for (i, v) in row.iter_mut().enumerate() {
            *v = if i == best { 1.0 } else { 0.0 };
        }
    }
}

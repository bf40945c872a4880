//! State-dependent MACs, input policies, built-in channels, and the channel
//! transforms the bound machinery relies on.
//!
//! A [`StateMac`] is a memoryless stationary two-user MAC
//! `p(s1,s2) p(y|s1,s2,x1,x2)` with optional per-encoder input costs. Input
//! behavior is described by an [`InputPolicy`] in one of four factorization
//! shapes, matching the four state-causality regimes of [`CausalityTag`].

use crate::prob::{
    random_dist, Axis, CondKernel, Dist, JointDist, ProbError, RngKey,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cap on user-supplied alphabet sizes. Derived axes (folded outputs,
/// Shannon-strategy auxiliaries) may exceed it; the dense-table guards in
/// `prob` still apply.
pub const MAX_ALPHABET: usize = 16;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("alphabet for {axis} has {size} symbols, cap is {MAX_ALPHABET}")]
    AlphabetTooLarge { axis: &'static str, size: usize },
    #[error("unknown builtin channel '{0}'")]
    UnknownBuiltin(String),
    #[error("policy alphabet does not match the channel ({what})")]
    PolicyMismatch { what: &'static str },
    #[error("channel has no cost functions")]
    CostsAbsent,
    #[error("cost vector for encoder {encoder} has wrong length")]
    CostShape { encoder: u8 },
    #[error("cost values and budgets must be nonnegative")]
    NegativeCost,
    #[error("strategy map for encoder {encoder} emits symbol {value} outside the input alphabet")]
    MapRangeOutside { encoder: u8, value: usize },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Encoder state-information regime.
///
/// `NoState` (0), `StrictlyCausal` (T-1), `Causal` (T), `Noncausal` (inf),
/// and `NoncausalStateCoop` ((inf,s): non-causal with state shared through
/// the cooperation facilitator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalityTag {
    NoState,
    StrictlyCausal,
    Causal,
    Noncausal,
    NoncausalStateCoop,
}

impl CausalityTag {
    /// Policies conditioned on own state component are allowed from `Causal`
    /// onward; below that, inputs cannot depend on the state.
    pub fn state_aware(self) -> bool {
        matches!(
            self,
            CausalityTag::Causal | CausalityTag::Noncausal | CausalityTag::NoncausalStateCoop
        )
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "0" | "none" => Some(Self::NoState),
            "t-1" | "t1" | "strictly-causal" => Some(Self::StrictlyCausal),
            "t" | "causal" => Some(Self::Causal),
            "inf" | "noncausal" => Some(Self::Noncausal),
            "inf,s" | "inf-s" | "(inf,s)" | "state" => Some(Self::NoncausalStateCoop),
            _ => None,
        }
    }
}

impl std::fmt::Display for CausalityTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CausalityTag::NoState => "0",
            CausalityTag::StrictlyCausal => "T-1",
            CausalityTag::Causal => "T",
            CausalityTag::Noncausal => "inf",
            CausalityTag::NoncausalStateCoop => "(inf,s)",
        };
        write!(f, "{s}")
    }
}

/// Per-encoder input costs `b_i : X_i -> R>=0` with budgets `B_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub budget1: f64,
    pub budget2: f64,
}

/// A finite-alphabet state-dependent MAC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMac {
    s1_size: usize,
    s2_size: usize,
    x1_size: usize,
    x2_size: usize,
    y_size: usize,
    /// Joint state law over axes `[S1, S2]`.
    state_law: JointDist,
    /// Channel kernel from `[S1, S2, X1, X2]` to `[Y]`.
    kernel: CondKernel,
    costs: Option<Costs>,
}

impl StateMac {
    pub fn new(
        state_law: JointDist,
        kernel: CondKernel,
        costs: Option<Costs>,
    ) -> Result<Self> {
        let (s1_size, s2_size) = match (state_law.axes(), state_law.sizes()) {
            ([Axis::S1, Axis::S2], [a, b]) => (*a, *b),
            _ => return Err(ChannelError::PolicyMismatch { what: "state law axes" }),
        };
        let from = kernel.from_sizes();
        if kernel.from_axes() != [Axis::S1, Axis::S2, Axis::X1, Axis::X2]
            || kernel.to_axes() != [Axis::Y]
            || from[0] != s1_size
            || from[1] != s2_size
        {
            return Err(ChannelError::PolicyMismatch { what: "kernel axes" });
        }
        let (x1_size, x2_size) = (from[2], from[3]);
        let y_size = kernel.to_sizes()[0];
        if let Some(c) = &costs {
            if c.b1.len() != x1_size {
                return Err(ChannelError::CostShape { encoder: 1 });
            }
            if c.b2.len() != x2_size {
                return Err(ChannelError::CostShape { encoder: 2 });
            }
            if c.b1.iter().chain(c.b2.iter()).any(|&v| v < 0.0 || !v.is_finite())
                || c.budget1 < 0.0
                || c.budget2 < 0.0
            {
                return Err(ChannelError::NegativeCost);
            }
        }
        Ok(Self {
            s1_size,
            s2_size,
            x1_size,
            x2_size,
            y_size,
            state_law,
            kernel,
            costs,
        })
    }

    /// Enforce the user-facing alphabet cap (builtins and parsed files).
    pub fn check_alphabet_cap(&self) -> Result<()> {
        for (name, size) in [
            ("S1", self.s1_size),
            ("S2", self.s2_size),
            ("X1", self.x1_size),
            ("X2", self.x2_size),
            ("Y", self.y_size),
        ] {
            if size > MAX_ALPHABET {
                return Err(ChannelError::AlphabetTooLarge { axis: name, size });
            }
        }
        Ok(())
    }

    pub fn s1_size(&self) -> usize {
        self.s1_size
    }
    pub fn s2_size(&self) -> usize {
        self.s2_size
    }
    pub fn x1_size(&self) -> usize {
        self.x1_size
    }
    pub fn x2_size(&self) -> usize {
        self.x2_size
    }
    pub fn y_size(&self) -> usize {
        self.y_size
    }
    pub fn state_law(&self) -> &JointDist {
        &self.state_law
    }
    pub fn kernel(&self) -> &CondKernel {
        &self.kernel
    }
    pub fn costs(&self) -> Option<&Costs> {
        self.costs.as_ref()
    }

    /// `p(s1, s2)` table entry.
    pub fn state_prob(&self, s1: usize, s2: usize) -> f64 {
        self.state_law.table()[s1 * self.s2_size + s2]
    }

    /// Kernel row `p(. | s1, s2, x1, x2)`.
    pub fn kernel_row(&self, s1: usize, s2: usize, x1: usize, x2: usize) -> &[f64] {
        self.kernel.row(self.kernel.from_index(&[s1, s2, x1, x2]))
    }

    /// Structural equality within `tol` (used by golden tests and the
    /// spec-file round trip).
    pub fn approx_eq(&self, other: &StateMac, tol: f64) -> bool {
        self.s1_size == other.s1_size
            && self.s2_size == other.s2_size
            && self.x1_size == other.x1_size
            && self.x2_size == other.x2_size
            && self.y_size == other.y_size
            && self
                .state_law
                .table()
                .iter()
                .zip(other.state_law.table())
                .all(|(a, b)| (a - b).abs() <= tol)
            && self
                .kernel
                .rows_flat()
                .iter()
                .zip(other.kernel.rows_flat())
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Fold the state into the output: a stateless MAC with output alphabet
    /// `S1 x S2 x Y` and kernel `q((s,y)|x1,x2) = p(s) p(y|s,x1,x2)`.
    pub fn fold_state_into_output(&self) -> StateMac {
        let folded_y = self.s1_size * self.s2_size * self.y_size;
        let mut rows = vec![0.0; self.x1_size * self.x2_size * folded_y];
        for x1 in 0..self.x1_size {
            for x2 in 0..self.x2_size {
                let base = (x1 * self.x2_size + x2) * folded_y;
                for s1 in 0..self.s1_size {
                    for s2 in 0..self.s2_size {
                        let ps = self.state_prob(s1, s2);
                        let krow = self.kernel_row(s1, s2, x1, x2);
                        for y in 0..self.y_size {
                            rows[base + (s1 * self.s2_size + s2) * self.y_size + y] =
                                ps * krow[y];
                        }
                    }
                }
            }
        }
        Self::stateless(self.x1_size, self.x2_size, folded_y, rows)
            .expect("folded kernel rows stay normalized")
    }

    /// Average the state out: `p(y|x1,x2) = sum_s p(s) p(y|s,x1,x2)`.
    pub fn marginalize_state(&self) -> StateMac {
        let mut rows = vec![0.0; self.x1_size * self.x2_size * self.y_size];
        for x1 in 0..self.x1_size {
            for x2 in 0..self.x2_size {
                let base = (x1 * self.x2_size + x2) * self.y_size;
                for s1 in 0..self.s1_size {
                    for s2 in 0..self.s2_size {
                        let ps = self.state_prob(s1, s2);
                        let krow = self.kernel_row(s1, s2, x1, x2);
                        for y in 0..self.y_size {
                            rows[base + y] += ps * krow[y];
                        }
                    }
                }
            }
        }
        Self::stateless(self.x1_size, self.x2_size, self.y_size, rows)
            .expect("state-averaged rows stay normalized")
    }

    fn stateless(x1: usize, x2: usize, y: usize, mut rows: Vec<f64>) -> Result<StateMac> {
        // Remove float fuzz so downstream normalization checks stay exact.
        for r in rows.chunks_exact_mut(y) {
            let s: f64 = r.iter().sum();
            if s > 0.0 {
                for v in r.iter_mut() {
                    *v /= s;
                }
            }
        }
        let state_law = JointDist::new(vec![Axis::S1, Axis::S2], vec![1, 1], vec![1.0])?;
        let kernel = CondKernel::new(
            vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2],
            vec![1, 1, x1, x2],
            vec![Axis::Y],
            vec![y],
            rows,
        )?;
        StateMac::new(state_law, kernel, None)
    }

    /// Replace the inputs by Shannon-strategy auxiliaries:
    /// `p(y|s,u1,u2) = p(y | s, f1(u1,s1), f2(u2,s2))`, state law unchanged.
    pub fn lift_shannon_strategy(
        &self,
        f1: &StrategyMap,
        f2: &StrategyMap,
    ) -> Result<StateMac> {
        f1.check(self.s1_size, self.x1_size, 1)?;
        f2.check(self.s2_size, self.x2_size, 2)?;
        let (u1, u2) = (f1.u_size, f2.u_size);
        let mut rows = vec![0.0; self.s1_size * self.s2_size * u1 * u2 * self.y_size];
        let mut idx = 0;
        for s1 in 0..self.s1_size {
            for s2 in 0..self.s2_size {
                for a in 0..u1 {
                    for b in 0..u2 {
                        let x1 = f1.apply(a, s1);
                        let x2 = f2.apply(b, s2);
                        let krow = self.kernel_row(s1, s2, x1, x2);
                        rows[idx..idx + self.y_size].copy_from_slice(krow);
                        idx += self.y_size;
                    }
                }
            }
        }
        let kernel = CondKernel::new(
            vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2],
            vec![self.s1_size, self.s2_size, u1, u2],
            vec![Axis::Y],
            vec![self.y_size],
            rows,
        )?;
        StateMac::new(self.state_law.clone(), kernel, self.costs.clone())
            .map(|mut mac| {
                // Costs live on the original inputs; a lifted channel carries
                // the per-U expected costs instead.
                if let Some(c) = &self.costs {
                    let b1 = (0..u1)
                        .map(|a| {
                            let mut acc = 0.0;
                            let m = self.state_law.marginal(&[Axis::S1]).unwrap();
                            for (s1, &p) in m.table().iter().enumerate() {
                                acc += p * c.b1[f1.apply(a, s1)];
                            }
                            acc
                        })
                        .collect();
                    let b2 = (0..u2)
                        .map(|b| {
                            let mut acc = 0.0;
                            let m = self.state_law.marginal(&[Axis::S2]).unwrap();
                            for (s2, &p) in m.table().iter().enumerate() {
                                acc += p * c.b2[f2.apply(b, s2)];
                            }
                            acc
                        })
                        .collect();
                    mac.costs = Some(Costs {
                        b1,
                        b2,
                        budget1: c.budget1,
                        budget2: c.budget2,
                    });
                }
                mac
            })
    }

    /// Full joint over `[S1,S2,X1,X2,Y]` induced by a policy
    /// (`[S1,S2,U1,U2,X1,X2,Y]` for Shannon strategies, U axes retained).
    pub fn induced_joint(&self, policy: &InputPolicy) -> Result<JointDist> {
        policy.check_compatible(self)?;
        match policy {
            InputPolicy::ShannonStrategy { pu, f1, f2 } => {
                let (u1, u2) = (f1.u_size, f2.u_size);
                let sizes = vec![
                    self.s1_size,
                    self.s2_size,
                    u1,
                    u2,
                    self.x1_size,
                    self.x2_size,
                    self.y_size,
                ];
                let cells: usize = sizes.iter().product();
                let mut table = vec![0.0; cells];
                for s1 in 0..self.s1_size {
                    for s2 in 0..self.s2_size {
                        let ps = self.state_prob(s1, s2);
                        if ps == 0.0 {
                            continue;
                        }
                        for a in 0..u1 {
                            for b in 0..u2 {
                                let p_ab = pu.table()[a * u2 + b];
                                if p_ab == 0.0 {
                                    continue;
                                }
                                let x1 = f1.apply(a, s1);
                                let x2 = f2.apply(b, s2);
                                let krow = self.kernel_row(s1, s2, x1, x2);
                                for (y, &py) in krow.iter().enumerate() {
                                    let idx = (((((s1 * self.s2_size + s2) * u1 + a) * u2 + b)
                                        * self.x1_size
                                        + x1)
                                        * self.x2_size
                                        + x2)
                                        * self.y_size
                                        + y;
                                    table[idx] = ps * p_ab * py;
                                }
                            }
                        }
                    }
                }
                Ok(JointDist::new(
                    vec![
                        Axis::S1,
                        Axis::S2,
                        Axis::U1,
                        Axis::U2,
                        Axis::X1,
                        Axis::X2,
                        Axis::Y,
                    ],
                    sizes,
                    table,
                )?)
            }
            _ => {
                let law = policy.conditional_input_law(self)?;
                let sizes = vec![
                    self.s1_size,
                    self.s2_size,
                    self.x1_size,
                    self.x2_size,
                    self.y_size,
                ];
                let cells: usize = sizes.iter().product();
                let mut table = vec![0.0; cells];
                let mut idx = 0;
                for s1 in 0..self.s1_size {
                    for s2 in 0..self.s2_size {
                        let ps = self.state_prob(s1, s2);
                        let row = law.row(s1 * self.s2_size + s2);
                        for x1 in 0..self.x1_size {
                            for x2 in 0..self.x2_size {
                                let pxx = row[x1 * self.x2_size + x2];
                                let krow = self.kernel_row(s1, s2, x1, x2);
                                for &py in krow.iter() {
                                    table[idx] = ps * pxx * py;
                                    idx += 1;
                                }
                            }
                        }
                    }
                }
                Ok(JointDist::new(
                    vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2, Axis::Y],
                    sizes,
                    table,
                )?)
            }
        }
    }

    /// Expected input costs `(E[b1(X1)], E[b2(X2)])` under a policy, plus a
    /// feasibility flag against the budgets.
    pub fn expected_cost(&self, policy: &InputPolicy) -> Result<CostReport> {
        let costs = self.costs.as_ref().ok_or(ChannelError::CostsAbsent)?;
        let j = self.induced_joint(policy)?;
        let m1 = j.marginal(&[Axis::X1])?;
        let m2 = j.marginal(&[Axis::X2])?;
        let c1: f64 = m1
            .table()
            .iter()
            .zip(&costs.b1)
            .map(|(&p, &b)| p * b)
            .sum();
        let c2: f64 = m2
            .table()
            .iter()
            .zip(&costs.b2)
            .map(|(&p, &b)| p * b)
            .sum();
        Ok(CostReport {
            cost1: c1,
            cost2: c2,
            feasible: c1 <= costs.budget1 + 1e-9 && c2 <= costs.budget2 + 1e-9,
        })
    }
}

/// Expected-cost evaluation of a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub cost1: f64,
    pub cost2: f64,
    pub feasible: bool,
}

/// Deterministic per-encoder map `f : U x S -> X` (a Shannon strategy).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyMap {
    pub u_size: usize,
    pub s_size: usize,
    /// Row-major `[u][s] -> x`.
    pub table: Vec<usize>,
}

impl StrategyMap {
    pub fn new(u_size: usize, s_size: usize, table: Vec<usize>) -> Self {
        assert_eq!(table.len(), u_size * s_size);
        Self {
            u_size,
            s_size,
            table,
        }
    }

    /// Identity strategy: `U = X`, `f(u, s) = u`.
    pub fn identity(x_size: usize, s_size: usize) -> Self {
        let mut table = vec![0; x_size * s_size];
        for u in 0..x_size {
            for s in 0..s_size {
                table[u * s_size + s] = u;
            }
        }
        Self::new(x_size, s_size, table)
    }

    /// Canonical full strategy alphabet: `U` enumerates every function
    /// `S -> X` (`|U| = |X|^|S|`), `f(u, s)` evaluates function `u` at `s`.
    /// Every Shannon strategy with any auxiliary alphabet factors through
    /// this one.
    pub fn full_function_table(x_size: usize, s_size: usize) -> Self {
        let u_size = x_size.pow(s_size as u32);
        let mut table = vec![0; u_size * s_size];
        for u in 0..u_size {
            let mut code = u;
            for s in 0..s_size {
                table[u * s_size + s] = code % x_size;
                code /= x_size;
            }
        }
        Self::new(u_size, s_size, table)
    }

    pub fn apply(&self, u: usize, s: usize) -> usize {
        self.table[u * self.s_size + s]
    }

    fn check(&self, s_size: usize, x_size: usize, encoder: u8) -> Result<()> {
        if self.s_size != s_size {
            return Err(ChannelError::PolicyMismatch {
                what: "strategy map state alphabet",
            });
        }
        if let Some(&bad) = self.table.iter().find(|&&x| x >= x_size) {
            return Err(ChannelError::MapRangeOutside {
                encoder,
                value: bad,
            });
        }
        Ok(())
    }
}

/// Input distribution in one of the four factorization shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputPolicy {
    /// `p(x1) p(x2)` — no state adaptation.
    Independent { px1: Dist, px2: Dist },
    /// `p(x1|s1) p(x2|s2)` — conditionally independent state adaptation.
    CondIndependent {
        px1: CondKernel,
        px2: CondKernel,
    },
    /// `p(u1,u2)` over auxiliaries with deterministic maps `x_i = f_i(u_i, s_i)`.
    ShannonStrategy {
        /// Joint over `[U1, U2]` (a product is a special case).
        pu: JointDist,
        f1: StrategyMap,
        f2: StrategyMap,
    },
    /// Fully general `p(x1,x2|s1,s2)`.
    JointConditional { pxx: CondKernel },
}

impl InputPolicy {
    pub fn uniform_independent(mac: &StateMac) -> Self {
        InputPolicy::Independent {
            px1: Dist::uniform(mac.x1_size()).unwrap(),
            px2: Dist::uniform(mac.x2_size()).unwrap(),
        }
    }

    pub fn point_mass(mac: &StateMac, x1: usize, x2: usize) -> Self {
        InputPolicy::Independent {
            px1: Dist::point_mass(mac.x1_size(), x1).unwrap(),
            px2: Dist::point_mass(mac.x2_size(), x2).unwrap(),
        }
    }

    /// State-independent joint `p(x1,x2)` wrapped as a conditional policy.
    pub fn state_independent_joint(mac: &StateMac, table: Vec<f64>) -> Result<Self> {
        let cell = mac.x1_size() * mac.x2_size();
        if table.len() != cell {
            return Err(ChannelError::PolicyMismatch { what: "joint table" });
        }
        let s_cells = mac.s1_size() * mac.s2_size();
        let mut rows = Vec::with_capacity(s_cells * cell);
        for _ in 0..s_cells {
            rows.extend_from_slice(&table);
        }
        Ok(InputPolicy::JointConditional {
            pxx: CondKernel::new(
                vec![Axis::S1, Axis::S2],
                vec![mac.s1_size(), mac.s2_size()],
                vec![Axis::X1, Axis::X2],
                vec![mac.x1_size(), mac.x2_size()],
                rows,
            )?,
        })
    }

    /// The conditional input law `p(x1,x2|s1,s2)` this policy induces.
    /// For Shannon strategies the auxiliaries are summed out.
    pub fn conditional_input_law(&self, mac: &StateMac) -> Result<CondKernel> {
        self.check_compatible(mac)?;
        let (s1n, s2n) = (mac.s1_size(), mac.s2_size());
        let (x1n, x2n) = (mac.x1_size(), mac.x2_size());
        let cell = x1n * x2n;
        let mut rows = vec![0.0; s1n * s2n * cell];
        match self {
            InputPolicy::Independent { px1, px2 } => {
                for s in 0..s1n * s2n {
                    for x1 in 0..x1n {
                        for x2 in 0..x2n {
                            rows[s * cell + x1 * x2n + x2] = px1.probs()[x1] * px2.probs()[x2];
                        }
                    }
                }
            }
            InputPolicy::CondIndependent { px1, px2 } => {
                for s1 in 0..s1n {
                    for s2 in 0..s2n {
                        let r1 = px1.row(s1);
                        let r2 = px2.row(s2);
                        let s = s1 * s2n + s2;
                        for x1 in 0..x1n {
                            for x2 in 0..x2n {
                                rows[s * cell + x1 * x2n + x2] = r1[x1] * r2[x2];
                            }
                        }
                    }
                }
            }
            InputPolicy::ShannonStrategy { pu, f1, f2 } => {
                let u2n = f2.u_size;
                for s1 in 0..s1n {
                    for s2 in 0..s2n {
                        let s = s1 * s2n + s2;
                        for a in 0..f1.u_size {
                            for b in 0..u2n {
                                let p = pu.table()[a * u2n + b];
                                if p > 0.0 {
                                    let x1 = f1.apply(a, s1);
                                    let x2 = f2.apply(b, s2);
                                    rows[s * cell + x1 * x2n + x2] += p;
                                }
                            }
                        }
                    }
                }
            }
            InputPolicy::JointConditional { pxx } => {
                rows.copy_from_slice(pxx.rows_flat());
            }
        }
        Ok(CondKernel::new(
            vec![Axis::S1, Axis::S2],
            vec![s1n, s2n],
            vec![Axis::X1, Axis::X2],
            vec![x1n, x2n],
            rows,
        )?)
    }

    /// A policy is state-dependent unless it is `Independent` or a
    /// `JointConditional` with identical rows.
    pub fn is_state_independent(&self) -> bool {
        match self {
            InputPolicy::Independent { .. } => true,
            InputPolicy::JointConditional { pxx } => {
                let cell = pxx.to_cells();
                let first = pxx.row(0);
                (1..pxx.from_cells()).all(|r| {
                    pxx.row(r)
                        .iter()
                        .zip(first)
                        .all(|(a, b)| (a - b).abs() <= 1e-12)
                }) && cell > 0
            }
            _ => false,
        }
    }

    fn check_compatible(&self, mac: &StateMac) -> Result<()> {
        let ok = match self {
            InputPolicy::Independent { px1, px2 } => {
                px1.len() == mac.x1_size() && px2.len() == mac.x2_size()
            }
            InputPolicy::CondIndependent { px1, px2 } => {
                px1.from_cells() == mac.s1_size()
                    && px1.to_cells() == mac.x1_size()
                    && px2.from_cells() == mac.s2_size()
                    && px2.to_cells() == mac.x2_size()
            }
            InputPolicy::ShannonStrategy { pu, f1, f2 } => {
                pu.sizes() == [f1.u_size, f2.u_size]
                    && f1.s_size == mac.s1_size()
                    && f2.s_size == mac.s2_size()
                    && f1.table.iter().all(|&x| x < mac.x1_size())
                    && f2.table.iter().all(|&x| x < mac.x2_size())
            }
            InputPolicy::JointConditional { pxx } => {
                pxx.from_cells() == mac.s1_size() * mac.s2_size()
                    && pxx.to_cells() == mac.x1_size() * mac.x2_size()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ChannelError::PolicyMismatch {
                what: "policy alphabets",
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in channels
// ---------------------------------------------------------------------------

/// Built-in example channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    /// `Y = X1 + X2 + S (mod 3)`, S uniform over `{0,1,2}` seen only by the
    /// decoder side (S2 degenerate), binary inputs, ternary output.
    Mod3Adder,
    /// Noiseless `Y = X1`; X2 and the state are irrelevant.
    TrivialIdentity,
    /// A random kernel and state law, deterministic in the seed.
    RandomSeeded {
        sizes: [usize; 5],
        seed: u64,
    },
}

impl Builtin {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "mod3" | "mod3_adder" => Some(Builtin::Mod3Adder),
            "trivial" | "trivial_identity" => Some(Builtin::TrivialIdentity),
            _ => None,
        }
    }
}

/// Construct a built-in channel. Alphabets are checked against
/// [`MAX_ALPHABET`].
pub fn make_builtin(which: &Builtin) -> Result<StateMac> {
    let mac = match which {
        Builtin::Mod3Adder => {
            let state_law =
                JointDist::new(vec![Axis::S1, Axis::S2], vec![3, 1], vec![1.0 / 3.0; 3])?;
            let mut rows = vec![0.0; 3 * 1 * 2 * 2 * 3];
            for s in 0..3 {
                for x1 in 0..2 {
                    for x2 in 0..2 {
                        let y = (x1 + x2 + s) % 3;
                        rows[((s * 2 + x1) * 2 + x2) * 3 + y] = 1.0;
                    }
                }
            }
            let kernel = CondKernel::new(
                vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2],
                vec![3, 1, 2, 2],
                vec![Axis::Y],
                vec![3],
                rows,
            )?;
            StateMac::new(state_law, kernel, None)?
        }
        Builtin::TrivialIdentity => {
            let state_law = JointDist::new(vec![Axis::S1, Axis::S2], vec![1, 1], vec![1.0])?;
            let mut rows = vec![0.0; 2 * 2 * 2];
            for x1 in 0..2 {
                for x2 in 0..2 {
                    rows[(x1 * 2 + x2) * 2 + x1] = 1.0;
                }
            }
            let kernel = CondKernel::new(
                vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2],
                vec![1, 1, 2, 2],
                vec![Axis::Y],
                vec![2],
                rows,
            )?;
            StateMac::new(state_law, kernel, None)?
        }
        Builtin::RandomSeeded { sizes, seed } => {
            let [s1, s2, x1, x2, y] = *sizes;
            let key = RngKey::new(*seed).with(0xC4A7);
            let mut rng = key.rng();
            let state = random_dist(s1 * s2, &mut rng);
            let state_law =
                JointDist::new(vec![Axis::S1, Axis::S2], vec![s1, s2], state.probs().to_vec())?;
            let mut rows = Vec::with_capacity(s1 * s2 * x1 * x2 * y);
            for _ in 0..s1 * s2 * x1 * x2 {
                rows.extend_from_slice(random_dist(y, &mut rng).probs());
            }
            let kernel = CondKernel::new(
                vec![Axis::S1, Axis::S2, Axis::X1, Axis::X2],
                vec![s1, s2, x1, x2],
                vec![Axis::Y],
                vec![y],
                rows,
            )?;
            StateMac::new(state_law, kernel, None)?
        }
    };
    mac.check_alphabet_cap()?;
    Ok(mac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mod3() -> StateMac {
        make_builtin(&Builtin::Mod3Adder).unwrap()
    }

    #[test]
    fn mod3_kernel_entries() {
        let mac = mod3();
        // y = 2 given s=1, x1=1, x2=0
        assert_eq!(mac.kernel_row(1, 0, 1, 0)[2], 1.0);
        assert_eq!(mac.kernel_row(1, 0, 1, 0)[0], 0.0);
    }

    #[test]
    fn trivial_identity_kernel() {
        let mac = make_builtin(&Builtin::TrivialIdentity).unwrap();
        for x1 in 0..2 {
            for x2 in 0..2 {
                assert_eq!(mac.kernel_row(0, 0, x1, x2)[x1], 1.0);
            }
        }
    }

    #[test]
    fn random_seeded_is_deterministic() {
        let b = Builtin::RandomSeeded {
            sizes: [2, 3, 2, 2, 4],
            seed: 99,
        };
        let a = make_builtin(&b).unwrap();
        let c = make_builtin(&b).unwrap();
        assert!(a.approx_eq(&c, 0.0));
    }

    #[test]
    fn induced_joint_uniform_mod3() {
        let mac = mod3();
        let j = mac
            .induced_joint(&InputPolicy::uniform_independent(&mac))
            .unwrap();
        // all 12 (s, x1, x2) cells carry 1/12, y deterministic
        let m = j.marginal(&[Axis::S1, Axis::X1, Axis::X2]).unwrap();
        for &p in m.table() {
            assert!((p - 1.0 / 12.0).abs() < 1e-12);
        }
        let hy_given_rest = j.entropy_group(&[Axis::S1, Axis::X1, Axis::X2, Axis::Y]).unwrap()
            - j.entropy_group(&[Axis::S1, Axis::X1, Axis::X2]).unwrap();
        assert!(hy_given_rest.abs() < 1e-9);
    }

    #[test]
    fn induced_joint_point_mass() {
        let mac = mod3();
        let j = mac.induced_joint(&InputPolicy::point_mass(&mac, 1, 0)).unwrap();
        let m = j.marginal(&[Axis::X1, Axis::X2]).unwrap();
        assert!((m.table()[1 * 2 + 0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shannon_identity_lift_matches_independent() {
        let mac = mod3();
        let px1 = Dist::new(vec![0.3, 0.7]).unwrap();
        let px2 = Dist::new(vec![0.6, 0.4]).unwrap();
        let pu = JointDist::new(
            vec![Axis::U1, Axis::U2],
            vec![2, 2],
            vec![
                0.3 * 0.6,
                0.3 * 0.4,
                0.7 * 0.6,
                0.7 * 0.4,
            ],
        )
        .unwrap();
        let strat = InputPolicy::ShannonStrategy {
            pu,
            f1: StrategyMap::identity(2, 3),
            f2: StrategyMap::identity(2, 1),
        };
        let indep = InputPolicy::Independent { px1, px2 };
        let a = mac.induced_joint(&strat).unwrap();
        let b = mac.induced_joint(&indep).unwrap();
        let am = a.marginal(&[Axis::S1, Axis::X1, Axis::X2, Axis::Y]).unwrap();
        let bm = b.marginal(&[Axis::S1, Axis::X1, Axis::X2, Axis::Y]).unwrap();
        for (x, y) in am.table().iter().zip(bm.table()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fold_state_examples() {
        let mac = mod3();
        let folded = mac.fold_state_into_output();
        assert_eq!(folded.y_size(), 9);
        assert_eq!(folded.s1_size(), 1);
        // q((s=0, y=0) | x1=0, x2=0) = 1/3
        assert!((folded.kernel_row(0, 0, 0, 0)[0] - 1.0 / 3.0).abs() < 1e-12);
        // rows stay normalized
        for x1 in 0..2 {
            for x2 in 0..2 {
                let s: f64 = folded.kernel_row(0, 0, x1, x2).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fold_preserves_input_output_information() {
        // I(X1,X2; (S,Y)) on the folded channel equals I(X1,X2; Y | S) on the
        // original when inputs are independent of the state.
        let mac = mod3();
        let policy = InputPolicy::uniform_independent(&mac);
        let orig = mac.induced_joint(&policy).unwrap();
        let i_orig = orig
            .cond_mutual_info(&[Axis::X1, Axis::X2], &[Axis::Y], &[Axis::S1, Axis::S2])
            .unwrap();
        let folded = mac.fold_state_into_output();
        let fj = folded.induced_joint(&policy).unwrap();
        let i_fold = fj
            .cond_mutual_info(&[Axis::X1, Axis::X2], &[Axis::Y], &[])
            .unwrap();
        assert!((i_orig - i_fold).abs() < 1e-9, "{i_orig} vs {i_fold}");
    }

    #[test]
    fn marginalize_state_mod3_is_uniform() {
        let flat = mod3().marginalize_state();
        for x1 in 0..2 {
            for x2 in 0..2 {
                for y in 0..3 {
                    assert!((flat.kernel_row(0, 0, x1, x2)[y] - 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn marginalize_trivial_state_is_identity() {
        let mac = make_builtin(&Builtin::TrivialIdentity).unwrap();
        let flat = mac.marginalize_state();
        assert!(flat.approx_eq(&mac, 1e-12));
    }

    #[test]
    fn lift_constant_maps() {
        let mac = mod3();
        let f1 = StrategyMap::new(2, 3, vec![1, 1, 1, 1, 1, 1]); // f1 == 1
        let f2 = StrategyMap::new(2, 1, vec![0, 0]); // f2 == 0
        let lifted = mac.lift_shannon_strategy(&f1, &f2).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                for b in 0..2 {
                    assert_eq!(lifted.kernel_row(s, 0, a, b), mac.kernel_row(s, 0, 1, 0));
                }
            }
        }
    }

    #[test]
    fn lift_identity_maps_is_noop() {
        let mac = mod3();
        let lifted = mac
            .lift_shannon_strategy(&StrategyMap::identity(2, 3), &StrategyMap::identity(2, 1))
            .unwrap();
        assert!(lifted.approx_eq(&mac, 0.0));
    }

    #[test]
    fn lift_rejects_bad_range() {
        let mac = mod3();
        let f1 = StrategyMap::new(2, 3, vec![0, 0, 0, 0, 0, 5]);
        let f2 = StrategyMap::identity(2, 1);
        assert!(matches!(
            mac.lift_shannon_strategy(&f1, &f2),
            Err(ChannelError::MapRangeOutside { encoder: 1, value: 5 })
        ));
    }

    #[test]
    fn expected_cost_examples() {
        // quadratic costs on binary inputs
        let mut mac = mod3();
        mac.costs = Some(Costs {
            b1: vec![0.0, 1.0],
            b2: vec![0.0, 1.0],
            budget1: 0.5,
            budget2: 0.5,
        });
        let rep = mac
            .expected_cost(&InputPolicy::uniform_independent(&mac))
            .unwrap();
        assert!((rep.cost1 - 0.5).abs() < 1e-12);
        assert!(rep.feasible);

        let rep = mac.expected_cost(&InputPolicy::point_mass(&mac, 0, 0)).unwrap();
        assert_eq!(rep.cost1, 0.0);

        // quadratic cost on a ternary input, uniform: E[x^2] = 5/3
        let b = Builtin::RandomSeeded {
            sizes: [1, 1, 3, 2, 3],
            seed: 5,
        };
        let mut mac3 = make_builtin(&b).unwrap();
        mac3.costs = Some(Costs {
            b1: vec![0.0, 1.0, 4.0],
            b2: vec![0.0, 0.0],
            budget1: 2.0,
            budget2: 1.0,
        });
        let pol = InputPolicy::Independent {
            px1: Dist::uniform(3).unwrap(),
            px2: Dist::uniform(2).unwrap(),
        };
        let rep = mac3.expected_cost(&pol).unwrap();
        assert!((rep.cost1 - 5.0 / 3.0).abs() < 1e-12);

        let plain = mod3();
        assert!(matches!(
            plain.expected_cost(&InputPolicy::uniform_independent(&plain)),
            Err(ChannelError::CostsAbsent)
        ));
    }

    #[test]
    fn shannon_full_table_covers_all_functions() {
        let f = StrategyMap::full_function_table(2, 3);
        assert_eq!(f.u_size, 8);
        // every function S -> X appears exactly once
        let mut seen = std::collections::HashSet::new();
        for u in 0..8 {
            let tbl: Vec<usize> = (0..3).map(|s| f.apply(u, s)).collect();
            assert!(seen.insert(tbl));
        }
    }
}

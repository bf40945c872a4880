//! Finite-alphabet probability and information-measure kernel.
//!
//! Everything downstream (channel transforms, bound optimizers, class
//! checkers, the protocol simulator) is built on the three value types here:
//!
//! * [`Dist`] — a distribution over one labeled alphabet,
//! * [`JointDist`] — a dense joint table over named axes,
//! * [`CondKernel`] — a conditional table, one normalized row per
//!   conditioning cell.
//!
//! All measures are in bits (base-2 logs) with the convention
//! `0 * log 0 = 0`. Normalization is checked to `1e-9`; alphabets are small
//! by design (dense storage, exhaustive loops).

mod rng;

pub use rng::{random_dist, sample_cond_iid, sample_iid, RngKey};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "sums to one" checks.
pub const NORM_TOL: f64 = 1e-9;
/// Default threshold below which a probability counts as zero support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Errors from constructing or combining probability objects.
#[derive(Debug, Error)]
pub enum ProbError {
    #[error("alphabet must have at least one symbol")]
    EmptyAlphabet,
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within {NORM_TOL}")]
    NotNormalized { sum: f64 },
    #[error("conditional row {row} sums to {sum}, expected 1 within {NORM_TOL}")]
    RowNotNormalized { row: usize, sum: f64 },
    #[error("axis {0:?} appears more than once")]
    DuplicateAxis(Axis),
    #[error("axis {0:?} not present in this joint")]
    AxisNotFound(Axis),
    #[error("axis sets must be disjoint")]
    OverlappingAxisSets,
    #[error("alphabet sizes differ: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("support violation: p({index}) > 0 but q({index}) = 0 (divergence is infinite)")]
    SupportViolation { index: usize },
    #[error("support violation in conditional row for state {state}")]
    StateSupportViolation { state: usize },
    #[error("sequences must share one length >= 1")]
    BadSequences,
    #[error("table with {cells} cells exceeds the dense-storage guard")]
    TableTooLarge { cells: usize },
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Named axes a joint distribution may carry.
///
/// `S1`,`S2`: state components; `X1`,`X2`: channel inputs; `Y`: output;
/// `U1`,`U2`: Shannon-strategy auxiliaries; `Q`: time-sharing symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    S1,
    S2,
    X1,
    X2,
    Y,
    U1,
    U2,
    Q,
}

// ---------------------------------------------------------------------------
// Dist
// ---------------------------------------------------------------------------

/// A probability distribution over a finite alphabet `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        for (i, &p) in probs.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(ProbError::NegativeEntry { index: i, value: p });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ProbError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `n` symbols.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    /// Point mass on `symbol`.
    pub fn point_mass(n: usize, symbol: usize) -> Result<Self> {
        if n == 0 || symbol >= n {
            return Err(ProbError::EmptyAlphabet);
        }
        let mut probs = vec![0.0; n];
        probs[symbol] = 1.0;
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Indices with probability strictly above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Inverse-CDF lookup: smallest symbol whose cumulative mass exceeds `u`.
    pub fn inverse_cdf(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Shannon entropy of a distribution, in bits.
pub fn entropy(d: &Dist) -> f64 {
    entropy_of(&d.probs)
}

/// Entropy of a raw nonnegative table (unnormalized callers beware).
pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
///
/// Errors with [`ProbError::SupportViolation`] when `supp(p)` is not
/// contained in `supp(q)` (the divergence would be infinite).
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(ProbError::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    kl_of(&p.probs, &q.probs)
}

pub(crate) fn kl_of(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q.iter()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(ProbError::SupportViolation { index: i });
            }
            d += pi * (pi / qi).log2();
        }
    }
    Ok(d.max(0.0))
}

/// State-averaged divergence `sum_s p(s) D(p1(.|s) || p0(.|s))` in bits.
///
/// Both kernels must condition on the same single axis whose alphabet
/// matches `p_s`. Zero-probability states are skipped; a support violation
/// inside a positive-probability state reports that state.
pub fn expected_state_kl(p1: &CondKernel, p0: &CondKernel, p_s: &Dist) -> Result<f64> {
    if p1.from_cells() != p_s.len() || p0.from_cells() != p_s.len() {
        return Err(ProbError::AlphabetMismatch {
            left: p1.from_cells(),
            right: p_s.len(),
        });
    }
    if p1.to_cells() != p0.to_cells() {
        return Err(ProbError::AlphabetMismatch {
            left: p1.to_cells(),
            right: p0.to_cells(),
        });
    }
    let mut acc = 0.0;
    for (s, &ps) in p_s.probs().iter().enumerate() {
        if ps <= 0.0 {
            continue;
        }
        let d = kl_of(p1.row(s), p0.row(s))
            .map_err(|_| ProbError::StateSupportViolation { state: s })?;
        acc += ps * d;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// JointDist
// ---------------------------------------------------------------------------

/// Dense joint distribution over an ordered list of named axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    axes: Vec<Axis>,
    sizes: Vec<usize>,
    table: Vec<f64>,
}

/// Guard against accidentally materializing an absurd dense table.
const MAX_CELLS: usize = 1 << 27;

impl JointDist {
    pub fn new(axes: Vec<Axis>, sizes: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(ProbError::EmptyAlphabet);
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(ProbError::DuplicateAxis(*a));
            }
        }
        let cells: usize = sizes.iter().product();
        if cells > MAX_CELLS {
            return Err(ProbError::TableTooLarge { cells });
        }
        if table.len() != cells {
            return Err(ProbError::ShapeMismatch {
                expected: cells,
                got: table.len(),
            });
        }
        for (i, &p) in table.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(ProbError::NegativeEntry { index: i, value: p });
            }
        }
        let mass: f64 = table.iter().sum();
        if (mass - 1.0).abs() > NORM_TOL {
            return Err(ProbError::NotNormalized { sum: mass });
        }
        Ok(Self { axes, sizes, table })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn size_of(&self, axis: Axis) -> Result<usize> {
        self.axis_pos(axis).map(|i| self.sizes[i])
    }

    fn axis_pos(&self, axis: Axis) -> Result<usize> {
        self.axes
            .iter()
            .position(|&a| a == axis)
            .ok_or(ProbError::AxisNotFound(axis))
    }

    /// Row-major strides, last axis fastest.
    fn strides(&self) -> Vec<usize> {
        let mut st = vec![1usize; self.sizes.len()];
        for i in (0..self.sizes.len().saturating_sub(1)).rev() {
            st[i] = st[i + 1] * self.sizes[i + 1];
        }
        st
    }

    /// Marginal over `keep` (result axes follow this joint's axis order).
    pub fn marginal(&self, keep: &[Axis]) -> Result<JointDist> {
        let mut positions = Vec::with_capacity(keep.len());
        for &a in keep {
            positions.push(self.axis_pos(a)?);
        }
        positions.sort_unstable();
        positions.dedup();
        if positions.len() != keep.len() {
            return Err(ProbError::DuplicateAxis(keep[0]));
        }
        let out_axes: Vec<Axis> = positions.iter().map(|&i| self.axes[i]).collect();
        let out_sizes: Vec<usize> = positions.iter().map(|&i| self.sizes[i]).collect();
        let out_cells: usize = out_sizes.iter().product();
        let mut out = vec![0.0; out_cells];

        let strides = self.strides();
        let mut out_strides = vec![1usize; out_sizes.len()];
        for i in (0..out_sizes.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_sizes[i + 1];
        }
        for (cell, &p) in self.table.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut idx = 0;
            for (k, &pos) in positions.iter().enumerate() {
                let sym = (cell / strides[pos]) % self.sizes[pos];
                idx += sym * out_strides[k];
            }
            out[idx] += p;
        }
        // Mass was validated at construction; re-wrap without re-checking to
        // avoid compounding float fuzz on deep marginal chains.
        Ok(JointDist {
            axes: out_axes,
            sizes: out_sizes,
            table: out,
        })
    }

    /// Entropy (bits) of the marginal on `group`; `H(empty) = 0`.
    pub fn entropy_group(&self, group: &[Axis]) -> Result<f64> {
        if group.is_empty() {
            return Ok(0.0);
        }
        let m = self.marginal(group)?;
        Ok(entropy_of(&m.table))
    }

    /// Conditional mutual information `I(A;B|C)` in bits.
    ///
    /// Computed as `H(A,C) + H(B,C) - H(A,B,C) - H(C)`; exactly symmetric in
    /// `(a, b)`. The three axis sets must be disjoint.
    pub fn cond_mutual_info(&self, a: &[Axis], b: &[Axis], c: &[Axis]) -> Result<f64> {
        for x in a {
            if b.contains(x) || c.contains(x) {
                return Err(ProbError::OverlappingAxisSets);
            }
        }
        for x in b {
            if c.contains(x) {
                return Err(ProbError::OverlappingAxisSets);
            }
        }
        let ac: Vec<Axis> = a.iter().chain(c.iter()).copied().collect();
        let bc: Vec<Axis> = b.iter().chain(c.iter()).copied().collect();
        let abc: Vec<Axis> = a.iter().chain(b.iter()).chain(c.iter()).copied().collect();
        Ok(self.entropy_group(&ac)? + self.entropy_group(&bc)?
            - self.entropy_group(&abc)?
            - self.entropy_group(c)?)
    }

    /// Mutual information `I(A;B)` in bits.
    pub fn mutual_info(&self, a: &[Axis], b: &[Axis]) -> Result<f64> {
        self.cond_mutual_info(a, b, &[])
    }

    /// Conditional kernel `p(target | given)` extracted from this joint.
    ///
    /// Conditioning cells with zero mass get a uniform row (they carry no
    /// weight anywhere this is used).
    pub fn conditional(&self, target: &[Axis], given: &[Axis]) -> Result<CondKernel> {
        let all: Vec<Axis> = given.iter().chain(target.iter()).copied().collect();
        let m = self.marginal(&all)?;
        let t_sizes: Vec<usize> = target
            .iter()
            .map(|&a| self.size_of(a))
            .collect::<Result<_>>()?;
        let g_sizes: Vec<usize> = given
            .iter()
            .map(|&a| self.size_of(a))
            .collect::<Result<_>>()?;
        let t_cells: usize = t_sizes.iter().product();
        let g_cells: usize = g_sizes.iter().product();
        let mut rows = vec![0.0; g_cells * t_cells];

        // Walk the (given+target) marginal and scatter into given-major rows
        // (the caller's axis order, which may differ from the joint's).
        let m_strides = m.strides();
        for (cell, &p) in m.table.iter().enumerate() {
            let mut gi = 0;
            for (k, &a) in given.iter().enumerate() {
                let pos = m.axis_pos(a)?;
                let sym = (cell / m_strides[pos]) % m.sizes[pos];
                gi = gi * g_sizes[k] + sym;
            }
            let mut ti = 0;
            for (k, &a) in target.iter().enumerate() {
                let pos = m.axis_pos(a)?;
                let sym = (cell / m_strides[pos]) % m.sizes[pos];
                ti = ti * t_sizes[k] + sym;
            }
            rows[gi * t_cells + ti] += p;
        }
        for gi in 0..g_cells {
            let row = &mut rows[gi * t_cells..(gi + 1) * t_cells];
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                for v in row.iter_mut() {
                    *v /= mass;
                }
            } else {
                for v in row.iter_mut() {
                    *v = 1.0 / t_cells as f64;
                }
            }
        }
        CondKernel::new(given.to_vec(), g_sizes, target.to_vec(), t_sizes, rows)
    }

    /// Flatten the whole table into a [`Dist`] (symbol = row-major cell).
    pub fn flatten(&self) -> Dist {
        Dist {
            probs: self.table.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// CondKernel
// ---------------------------------------------------------------------------

/// Conditional distribution table: one normalized row per conditioning cell.
///
/// Rows are stored row-major over the `from` axes (last axis fastest), each
/// row dense over the `to` axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondKernel {
    from_axes: Vec<Axis>,
    from_sizes: Vec<usize>,
    to_axes: Vec<Axis>,
    to_sizes: Vec<usize>,
    rows: Vec<f64>,
}

impl CondKernel {
    pub fn new(
        from_axes: Vec<Axis>,
        from_sizes: Vec<usize>,
        to_axes: Vec<Axis>,
        to_sizes: Vec<usize>,
        rows: Vec<f64>,
    ) -> Result<Self> {
        if to_sizes.is_empty() || to_sizes.iter().any(|&s| s == 0) || from_sizes.iter().any(|&s| s == 0)
        {
            return Err(ProbError::EmptyAlphabet);
        }
        let from_cells: usize = from_sizes.iter().product();
        let to_cells: usize = to_sizes.iter().product();
        if from_cells.saturating_mul(to_cells) > MAX_CELLS {
            return Err(ProbError::TableTooLarge {
                cells: from_cells * to_cells,
            });
        }
        if rows.len() != from_cells * to_cells {
            return Err(ProbError::ShapeMismatch {
                expected: from_cells * to_cells,
                got: rows.len(),
            });
        }
        for (i, &p) in rows.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(ProbError::NegativeEntry { index: i, value: p });
            }
        }
        for r in 0..from_cells {
            let sum: f64 = rows[r * to_cells..(r + 1) * to_cells].iter().sum();
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(ProbError::RowNotNormalized { row: r, sum });
            }
        }
        Ok(Self {
            from_axes,
            from_sizes,
            to_axes,
            to_sizes,
            rows,
        })
    }

    /// Kernel with a single (trivial) conditioning cell.
    pub fn from_dist(to_axis: Axis, d: &Dist) -> Self {
        Self {
            from_axes: vec![],
            from_sizes: vec![],
            to_axes: vec![to_axis],
            to_sizes: vec![d.len()],
            rows: d.probs().to_vec(),
        }
    }

    pub fn from_axes(&self) -> &[Axis] {
        &self.from_axes
    }

    pub fn from_sizes(&self) -> &[usize] {
        &self.from_sizes
    }

    pub fn to_axes(&self) -> &[Axis] {
        &self.to_axes
    }

    pub fn to_sizes(&self) -> &[usize] {
        &self.to_sizes
    }

    pub fn from_cells(&self) -> usize {
        self.from_sizes.iter().product()
    }

    pub fn to_cells(&self) -> usize {
        self.to_sizes.iter().product()
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        let t = self.to_cells();
        &self.rows[cell * t..(cell + 1) * t]
    }

    pub fn rows_flat(&self) -> &[f64] {
        &self.rows
    }

    /// Row-major conditioning cell index from per-axis symbols.
    pub fn from_index(&self, symbols: &[usize]) -> usize {
        debug_assert_eq!(symbols.len(), self.from_sizes.len());
        let mut idx = 0;
        for (k, &s) in symbols.iter().enumerate() {
            idx = idx * self.from_sizes[k] + s;
        }
        idx
    }

    /// Row-major target cell index from per-axis symbols.
    pub fn to_index(&self, symbols: &[usize]) -> usize {
        debug_assert_eq!(symbols.len(), self.to_sizes.len());
        let mut idx = 0;
        for (k, &s) in symbols.iter().enumerate() {
            idx = idx * self.to_sizes[k] + s;
        }
        idx
    }

    /// Row as a `Dist` (useful for sampling and KL calls).
    pub fn row_dist(&self, cell: usize) -> Dist {
        Dist {
            probs: self.row(cell).to_vec(),
        }
    }
}

// ---------------------------------------------------------------------------
// Weak typicality
// ---------------------------------------------------------------------------

/// One named symbol sequence per axis.
pub type AxisSequences<'a> = [(Axis, &'a [usize])];

/// Precompiled weak-typicality test against a joint, for one group list.
///
/// The full axis set of the joint is always tested; callers list any
/// additional marginal groups explicitly. `check` is allocation-free and is
/// what the simulator's hot loops use.
#[derive(Debug, Clone)]
pub struct TypicalityTest {
    groups: Vec<PreparedGroup>,
    delta: f64,
}

#[derive(Debug, Clone)]
struct PreparedGroup {
    axes: Vec<Axis>,
    sizes: Vec<usize>,
    neg_log: Vec<f64>,
    entropy: f64,
}

impl TypicalityTest {
    pub fn prepare(j: &JointDist, groups: &[Vec<Axis>], delta: f64) -> Result<Self> {
        let mut all_groups: Vec<Vec<Axis>> = vec![j.axes().to_vec()];
        for g in groups {
            let mut canon = g.clone();
            canon.sort_unstable();
            canon.dedup();
            // canonical order = joint's axis order
            let mut ordered: Vec<Axis> = j
                .axes()
                .iter()
                .copied()
                .filter(|a| canon.contains(a))
                .collect();
            if ordered.len() != canon.len() {
                return Err(ProbError::AxisNotFound(
                    *canon
                        .iter()
                        .find(|a| !j.axes().contains(a))
                        .unwrap_or(&canon[0]),
                ));
            }
            if !all_groups.contains(&ordered) {
                all_groups.push(std::mem::take(&mut ordered));
            }
        }
        let mut prepared = Vec::with_capacity(all_groups.len());
        for g in &all_groups {
            let m = j.marginal(g)?;
            let entropy = entropy_of(m.table());
            let neg_log: Vec<f64> = m
                .table()
                .iter()
                .map(|&p| if p > 0.0 { -p.log2() } else { f64::INFINITY })
                .collect();
            prepared.push(PreparedGroup {
                axes: m.axes().to_vec(),
                sizes: m.sizes().to_vec(),
                neg_log,
                entropy,
            });
        }
        Ok(Self {
            groups: prepared,
            delta,
        })
    }

    /// True iff every group's empirical per-symbol log-likelihood is within
    /// `delta` of its entropy. A zero-probability symbol tuple fails
    /// (never errors).
    pub fn check(&self, seqs: &AxisSequences) -> Result<bool> {
        let n = seqs.first().map(|(_, s)| s.len()).unwrap_or(0);
        if n == 0 || seqs.iter().any(|(_, s)| s.len() != n) {
            return Err(ProbError::BadSequences);
        }
        for g in &self.groups {
            let mut cols: Vec<&[usize]> = Vec::with_capacity(g.axes.len());
            for &a in &g.axes {
                let col = seqs
                    .iter()
                    .find(|(ax, _)| *ax == a)
                    .map(|(_, s)| *s)
                    .ok_or(ProbError::AxisNotFound(a))?;
                cols.push(col);
            }
            let mut acc = 0.0;
            for t in 0..n {
                let mut idx = 0;
                for (k, col) in cols.iter().enumerate() {
                    idx = idx * g.sizes[k] + col[t];
                }
                let v = g.neg_log[idx];
                if v.is_infinite() {
                    return Ok(false);
                }
                acc += v;
            }
            if (acc / n as f64 - g.entropy).abs() > self.delta {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// One-shot weak-typicality test; see [`TypicalityTest`].
pub fn typicality_test(
    seqs: &AxisSequences,
    j: &JointDist,
    groups: &[Vec<Axis>],
    delta: f64,
) -> Result<bool> {
    TypicalityTest::prepare(j, groups, delta)?.check(seqs)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> Dist {
        Dist::new(p.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&dist(&[0.5, 0.5])) - 1.0).abs() < 1e-12);
        assert_eq!(entropy(&dist(&[1.0, 0.0])), 0.0);
        assert!((entropy(&dist(&[0.25, 0.5, 0.25])) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let u = dist(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert!(kl_divergence(&u, &u).unwrap().abs() < 1e-12);

        let p = dist(&[1.0, 0.0, 0.0]);
        let q = dist(&[0.25, 0.5, 0.25]);
        assert!((kl_divergence(&p, &q).unwrap() - 2.0).abs() < 1e-12);

        // direct evaluation of the sum, frozen from an exact side computation
        let p = dist(&[0.3, 0.7]);
        let q = dist(&[0.5, 0.5]);
        assert!((kl_divergence(&p, &q).unwrap() - 0.118709100769307).abs() < 1e-12);

        // support violation is an error, not infinity
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[1.0, 0.0]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(ProbError::SupportViolation { index: 1 })
        ));
    }

    #[test]
    fn support_examples() {
        assert_eq!(dist(&[0.5, 0.5, 0.0]).support(SUPPORT_TOL), vec![0, 1]);
        assert_eq!(
            dist(&[1e-12, 1.0 - 1e-12]).support(SUPPORT_TOL),
            vec![1]
        );
        assert_eq!(
            dist(&[0.25; 4]).support(SUPPORT_TOL),
            vec![0, 1, 2, 3]
        );
    }

    /// The mod-3 joint used across the crate: S uniform over {0,1,2},
    /// X1, X2 independent uniform bits, Y = X1 + X2 + S (mod 3).
    fn mod3_joint() -> JointDist {
        let mut table = vec![0.0; 3 * 2 * 2 * 3];
        for s in 0..3 {
            for x1 in 0..2 {
                for x2 in 0..2 {
                    let y = (x1 + x2 + s) % 3;
                    let idx = ((s * 2 + x1) * 2 + x2) * 3 + y;
                    table[idx] = 1.0 / 12.0;
                }
            }
        }
        JointDist::new(
            vec![Axis::S1, Axis::X1, Axis::X2, Axis::Y],
            vec![3, 2, 2, 3],
            table,
        )
        .unwrap()
    }

    #[test]
    fn cond_mutual_info_examples() {
        // independent uniform bits
        let j = JointDist::new(
            vec![Axis::X1, Axis::X2],
            vec![2, 2],
            vec![0.25; 4],
        )
        .unwrap();
        assert!(j
            .cond_mutual_info(&[Axis::X1], &[Axis::X2], &[])
            .unwrap()
            .abs()
            < 1e-12);

        // identity coupling
        let j = JointDist::new(
            vec![Axis::X1, Axis::X2],
            vec![2, 2],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        assert!(
            (j.cond_mutual_info(&[Axis::X1], &[Axis::X2], &[]).unwrap() - 1.0).abs() < 1e-12
        );

        // exact summation over the 24-cell mod-3 joint
        let j = mod3_joint();
        let i = j
            .cond_mutual_info(&[Axis::X1, Axis::X2], &[Axis::Y], &[Axis::S1])
            .unwrap();
        assert!((i - 1.5).abs() < 1e-12, "got {i}");
        // symmetry is exact
        let i2 = j
            .cond_mutual_info(&[Axis::Y], &[Axis::X1, Axis::X2], &[Axis::S1])
            .unwrap();
        assert_eq!(i, i2);
    }

    #[test]
    fn expected_state_kl_examples() {
        // p1(.|s) point mass at y = s, p0(.|s) = (1/4,1/2,1/4) shifted by s
        let mut p1 = vec![0.0; 9];
        let mut p0 = vec![0.0; 9];
        for s in 0..3 {
            p1[s * 3 + s] = 1.0;
            for y in 0..3 {
                p0[s * 3 + y] = [0.25, 0.5, 0.25][(y + 3 - s) % 3];
            }
        }
        let k1 = CondKernel::new(vec![Axis::S1], vec![3], vec![Axis::Y], vec![3], p1).unwrap();
        let k0 = CondKernel::new(vec![Axis::S1], vec![3], vec![Axis::Y], vec![3], p0).unwrap();
        let ps = dist(&[1.0 / 3.0; 3]);
        assert!((expected_state_kl(&k1, &k0, &ps).unwrap() - 2.0).abs() < 1e-12);

        // identical kernels
        assert!(expected_state_kl(&k0, &k0, &ps).unwrap().abs() < 1e-12);

        // degenerate state law reduces to a single row divergence
        let ps = dist(&[1.0, 0.0, 0.0]);
        let single = expected_state_kl(&k1, &k0, &ps).unwrap();
        let row = kl_divergence(&k1.row_dist(0), &k0.row_dist(0)).unwrap();
        assert!((single - row).abs() < 1e-12);
    }

    #[test]
    fn conditional_extraction() {
        let j = mod3_joint();
        let k = j.conditional(&[Axis::Y], &[Axis::S1]).unwrap();
        // p(y|s) = (1/4,1/2,1/4) shifted by s
        for s in 0..3 {
            for y in 0..3 {
                let expect = [0.25, 0.5, 0.25][(y + 3 - s) % 3];
                assert!((k.row(s)[y] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn typicality_examples() {
        // n=1 uniform bit, delta=0
        let j = JointDist::new(vec![Axis::X1], vec![2], vec![0.5, 0.5]).unwrap();
        let seq = [0usize];
        assert!(typicality_test(&[(Axis::X1, &seq)], &j, &[], 0.0).unwrap());

        // point mass source, matching sequence, delta=0
        let j = JointDist::new(vec![Axis::X1], vec![2], vec![1.0, 0.0]).unwrap();
        let seq = [0usize, 0];
        assert!(typicality_test(&[(Axis::X1, &seq)], &j, &[], 0.0).unwrap());

        // weak typicality does not constrain composition: "0000" is typical
        let j = JointDist::new(vec![Axis::X1], vec![2], vec![0.5, 0.5]).unwrap();
        let seq = [0usize, 0, 0, 0];
        assert!(typicality_test(&[(Axis::X1, &seq)], &j, &[], 0.1).unwrap());

        // zero-probability symbol: not typical, no error
        let j = JointDist::new(vec![Axis::X1], vec![2], vec![1.0, 0.0]).unwrap();
        let seq = [1usize];
        assert!(!typicality_test(&[(Axis::X1, &seq)], &j, &[], 10.0).unwrap());
    }

    #[test]
    fn typicality_large_delta_accepts_positive_sequences() {
        let j = mod3_joint();
        // delta >= log2 of inverse of smallest positive mass (1/12 -> ~3.58)
        let delta = 4.0;
        let groups = vec![vec![Axis::S1, Axis::X1], vec![Axis::X1, Axis::X2]];
        let s = [0usize, 1, 2, 0];
        let x1 = [0usize, 1, 0, 1];
        let x2 = [1usize, 0, 0, 1];
        let y: Vec<usize> = (0..4).map(|t| (x1[t] + x2[t] + s[t]) % 3).collect();
        let seqs = [
            (Axis::S1, &s[..]),
            (Axis::X1, &x1[..]),
            (Axis::X2, &x2[..]),
            (Axis::Y, &y[..]),
        ];
        assert!(typicality_test(&seqs, &j, &groups, delta).unwrap());
    }

    #[test]
    fn chain_rule_on_mod3() {
        let j = mod3_joint();
        // H(X1,X2 | S) = H(X1|S) + H(X2|X1,S)
        let h = |g: &[Axis]| j.entropy_group(g).unwrap();
        let lhs = h(&[Axis::X1, Axis::X2, Axis::S1]) - h(&[Axis::S1]);
        let rhs = (h(&[Axis::X1, Axis::S1]) - h(&[Axis::S1]))
            + (h(&[Axis::X2, Axis::X1, Axis::S1]) - h(&[Axis::X1, Axis::S1]));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

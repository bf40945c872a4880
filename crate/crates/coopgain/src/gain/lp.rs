//! Dense two-phase simplex for the small linear programs in the class
//! checker (witness search under active cost constraints).
//!
//! Problem form: maximize `c . x` subject to `A_eq x = b_eq`,
//! `A_ub x <= b_ub`, `x >= 0`, with all `b >= 0`. Sizes here are tiny
//! (至 a few hundred variables, a handful of rows), so a plain tableau
//! with Bland's rule is plenty.

const EPS: f64 = 1e-10;

pub(crate) struct Lp {
    pub n: usize,
    pub c: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

#[derive(Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
}

pub(crate) fn solve(lp: &Lp) -> LpOutcome {
    let n = lp.n;
    let m_eq = lp.a_eq.len();
    let m_ub = lp.a_ub.len();
    let m = m_eq + m_ub;
    // columns: n structural | m_ub slacks | m artificials (eq rows plus any
    // ub row we start infeasible on — with b >= 0 only eq rows need them)
    let n_slack = m_ub;
    let n_art = m_eq;
    let width = n + n_slack + n_art + 1; // + rhs
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    for (i, row) in lp.a_eq.iter().enumerate() {
        debug_assert!(lp.b_eq[i] >= -EPS);
        t[i][..n].copy_from_slice(row);
        t[i][n + n_slack + i] = 1.0;
        t[i][width - 1] = lp.b_eq[i];
        basis[i] = n + n_slack + i;
    }
    for (j, row) in lp.a_ub.iter().enumerate() {
        let i = m_eq + j;
        debug_assert!(lp.b_ub[j] >= -EPS);
        t[i][..n].copy_from_slice(row);
        t[i][n + j] = 1.0;
        t[i][width - 1] = lp.b_ub[j].max(0.0);
        basis[i] = n + j;
    }

    // phase 1: minimize the artificial sum
    if n_art > 0 {
        let mut obj = vec![0.0; width];
        for i in 0..m_eq {
            for k in 0..width {
                obj[k] += t[i][k];
            }
        }
        for a in 0..n_art {
            obj[n + n_slack + a] = 0.0;
        }
        simplex_iterate(&mut t, &mut basis, &mut obj, n + n_slack + n_art, true);
        let infeas: f64 = obj[width - 1];
        if infeas > 1e-7 {
            return LpOutcome::Infeasible;
        }
        // drive any artificial still in the basis out (degenerate rows)
        for i in 0..m {
            if basis[i] >= n + n_slack {
                if let Some(j) = (0..n + n_slack).find(|&j| t[i][j].abs() > EPS) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }
    }

    // phase 2: the objective row carries `w = R[rhs] - sum R[j] x_j` for
    // w = -(c.x), so maximizing c.x means entering at positive entries of
    // R[j] = c[j]
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(&lp.c);
    // express objective in terms of the current basis
    for i in 0..m {
        let coeff = obj[basis[i]];
        if coeff.abs() > 0.0 {
            for k in 0..width {
                obj[k] -= coeff * t[i][k];
            }
        }
    }
    simplex_iterate(&mut t, &mut basis, &mut obj, n + n_slack, false);

    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1];
        }
    }
    let value: f64 = lp.c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

fn simplex_iterate(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut Vec<f64>,
    n_cols: usize,
    phase1: bool,
) {
    let m = t.len();
    let width = obj.len();
    for _ in 0..20_000 {
        // entering column (Bland: smallest index with positive reduced cost
        // for phase-1 min written as max of negated row / here we keep one
        // convention: improve while some obj coefficient is positive)
        let enter = (0..n_cols).find(|&j| obj[j] > EPS);
        let Some(enter) = enter else {
            return;
        };
        // ratio test (Bland: smallest basis index on ties)
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                if ratio < best - EPS || (ratio < best + EPS && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // unbounded; phase 1 cannot be unbounded, phase 2 callers have
            // bounded feasible sets (probability masses), so just stop
            debug_assert!(!phase1, "phase 1 unbounded");
            return;
        };
        pivot_with_obj(t, basis, obj, leave, enter);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let width = t[0].len();
    let piv = t[row][col];
    for k in 0..width {
        t[row][k] /= piv;
    }
    for i in 0..t.len() {
        if i != row && t[i][col].abs() > 0.0 {
            let f = t[i][col];
            for k in 0..width {
                t[i][k] -= f * t[row][k];
            }
        }
    }
    basis[row] = col;
}

fn pivot_with_obj(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut [f64],
    row: usize,
    col: usize,
) {
    let width = obj.len();
    let piv = t[row][col];
    for k in 0..width {
        t[row][k] /= piv;
    }
    for i in 0..t.len() {
        if i != row && t[i][col].abs() > 0.0 {
            let f = t[i][col];
            for k in 0..width {
                t[i][k] -= f * t[row][k];
            }
        }
    }
    let f = obj[col];
    if f.abs() > 0.0 {
        for k in 0..width {
            obj[k] -= f * t[row][k];
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn simplex_on_a_probability_simplex() {
        // max 2 x0 + x1 s.t. x0 + x1 + x2 = 1
        let lp = Lp {
            n: 3,
            c: vec![2.0, 1.0, 0.0],
            a_eq: vec![vec![1.0, 1.0, 1.0]],
            b_eq: vec![1.0],
            a_ub: vec![],
            b_ub: vec![],
        };
        match solve(&lp) {
            LpOutcome::Optimal { x, value } => {
                assert_close(value, 2.0);
                assert_close(x[0], 1.0);
            }
            _ => panic!("expected optimal"),
        }
    }

    #[test]
    fn budget_constraint_binds() {
        // max x0 on the simplex with cost(x0) = 1 limited to 0.3
        let lp = Lp {
            n: 2,
            c: vec![1.0, 0.0],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![1.0],
            a_ub: vec![vec![1.0, 0.0]],
            b_ub: vec![0.3],
        };
        match solve(&lp) {
            LpOutcome::Optimal { x, value } => {
                assert_close(value, 0.3);
                assert_close(x[0], 0.3);
                assert_close(x[1], 0.7);
            }
            _ => panic!("expected optimal"),
        }
    }

    #[test]
    fn infeasible_detected() {
        // x0 = 1 and x0 <= 0.2 cannot both hold
        let lp = Lp {
            n: 1,
            c: vec![1.0],
            a_eq: vec![vec![1.0]],
            b_eq: vec![1.0],
            a_ub: vec![vec![1.0]],
            b_ub: vec![0.2],
        };
        assert_eq!(solve(&lp), LpOutcome::Infeasible);
    }

    #[test]
    fn matches_vertex_enumeration_on_random_instances() {
        use crate::prob::RngKey;
        use rand::Rng;
        // max c.x over {x >= 0, sum x = 1, a.x <= b} — optimum is on a
        // vertex supported by at most two coordinates
        for seed in 0..40u64 {
            let mut rng = RngKey::new(seed).with(77).rng();
            let n = 2 + (rng.random::<u32>() as usize % 5);
            let c: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let b = rng.random::<f64>();
            let lp = Lp {
                n,
                c: c.clone(),
                a_eq: vec![vec![1.0; n]],
                b_eq: vec![1.0],
                a_ub: vec![a.clone()],
                b_ub: vec![b],
            };
            // brute force: singletons and pairs with the budget tight
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                if a[i] <= b + 1e-12 {
                    best = best.max(c[i]);
                }
                for j in 0..n {
                    if i == j || (a[i] - a[j]).abs() < 1e-12 {
                        continue;
                    }
                    // t a_i + (1-t) a_j = b
                    let t = (b - a[j]) / (a[i] - a[j]);
                    if (0.0..=1.0).contains(&t) {
                        best = best.max(t * c[i] + (1.0 - t) * c[j]);
                    }
                }
            }
            match solve(&lp) {
                LpOutcome::Optimal { value, x } => {
                    assert!((value - best).abs() < 1e-7, "seed {seed}: {value} vs {best}");
                    let mass: f64 = x.iter().sum();
                    assert!((mass - 1.0).abs() < 1e-8);
                    let used: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum();
                    assert!(used <= b + 1e-7);
                }
                LpOutcome::Infeasible => {
                    assert!(best == f64::NEG_INFINITY, "seed {seed}: claims infeasible");
                }
            }
        }
    }
}

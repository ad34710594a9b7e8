//! Brute-force solution of the pairwise ranking SVM dual
//! `max Σα − ½αᵀQα, 0 ≤ α ≤ C` by enumerating which variables sit at 0,
//! at C, or strictly inside the box.

use preflearn::monitor::Silent;
use preflearn::ranksvm::{fit, KernelSpec, SvmParams};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

#[derive(Clone, Copy, Debug)]
pub enum K {
    Linear,
    Poly(f64, f64, i32),
    Rbf(f64),
}

pub fn kernel(k: K, x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    match k {
        K::Linear => dot,
        K::Poly(g, c0, d) => (g * dot + c0).powi(d),
        K::Rbf(g) => (-g * x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp(),
    }
}

fn spec(k: K) -> KernelSpec {
    match k {
        K::Linear => KernelSpec::Linear,
        K::Poly(g, c0, d) => KernelSpec::Polynomial {
            gamma: Some(g),
            coef0: c0,
            degree: d as u32,
        },
        K::Rbf(g) => KernelSpec::Rbf { gamma: Some(g) },
    }
}

pub fn pair_matrix(k: K, x: &[Vec<f64>], pairs: &[(usize, usize)]) -> Vec<Vec<f64>> {
    pairs
        .iter()
        .map(|&(a, b)| {
            pairs
                .iter()
                .map(|&(c, d)| {
                    kernel(k, &x[a], &x[c]) - kernel(k, &x[a], &x[d]) - kernel(k, &x[b], &x[c]) + kernel(k, &x[b], &x[d])
                })
                .collect()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let quad: f64 = (0..alpha.len())
        .map(|i| (0..alpha.len()).map(|j| alpha[i] * q[i][j] * alpha[j]).sum::<f64>())
        .sum();
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Optimal dual variables and objective.
pub fn brute_force(q: &[Vec<f64>], c: f64) -> (Vec<f64>, f64) {
    let m = q.len();
    let mut best = (vec![0.0; m], 0.0);
    for code in 0..3usize.pow(m as u32) {
        // 0: at zero, 1: at C, 2: free
        let state: Vec<usize> = (0..m).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let a: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| q[i][j]).collect()).collect();
            let b: Vec<f64> = free
                .iter()
                .map(|&i| 1.0 - (0..m).filter(|&j| state[j] == 1).map(|j| q[i][j] * c).sum::<f64>())
                .collect();
            let Some(sol) = solve(a, b) else { continue };
            if sol.iter().any(|&v| !(-1e-12..=c + 1e-12).contains(&v)) {
                continue;
            }
            for (k, &i) in free.iter().enumerate() {
                alpha[i] = sol[k].clamp(0.0, c);
            }
        }
        let obj = objective(q, &alpha);
        if obj > best.1 {
            best = (alpha, obj);
        }
    }
    best
}

pub fn oracle_score(k: K, x: &[Vec<f64>], pairs: &[(usize, usize)], alpha: &[f64], z: &[f64]) -> f64 {
    pairs
        .iter()
        .zip(alpha)
        .map(|(&(a, b), al)| al * (kernel(k, &x[a], z) - kernel(k, &x[b], z)))
        .sum()
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub x: Vec<Vec<f64>>,
    pub pairs: Vec<(usize, usize)>,
    pub kernel: K,
    pub c: f64,
}

pub fn instances() -> impl Strategy<Value = Instance> {
    let kernel = prop_oneof![
        Just(K::Linear),
        (0.2f64..2.0, 0.0f64..1.5, 2i32..=3).prop_map(|(g, c0, d)| K::Poly(g, c0, d)),
        (0.1f64..3.0).prop_map(K::Rbf),
    ];
    (1usize..=6, 1usize..=3, kernel, prop_oneof![Just(0.1), Just(1.0), Just(10.0)])
        .prop_flat_map(|(m, d, kernel, c)| {
            let points = proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d), 2 * m);
            (points, Just(kernel), Just(c))
        })
        .prop_map(|(x, kernel, c)| {
            let pairs = (0..x.len() / 2).map(|i| (2 * i, 2 * i + 1)).collect();
            Instance { x, pairs, kernel, c }
        })
}

fn params(inst: &Instance, tol: f64) -> SvmParams {
    SvmParams {
        c: inst.c,
        kernel: spec(inst.kernel),
        tol,
        max_epochs: 100_000,
        ..SvmParams::default()
    }
}

pub fn matches_brute_force() -> Result<(), String> {
    super::run(1000, instances(), |inst| {
        let (alpha, best) = brute_force(&pair_matrix(inst.kernel, &inst.x, &inst.pairs), inst.c);
        let t = fit(&inst.x, &inst.pairs, &params(&inst, 1e-6), &Silent).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let got = t.report.dual_objective;
        prop_assert!((got - best).abs() <= 1e-4, "objective {got} vs oracle {best}");
        // Training predictions: the preferred side of every pair agrees
        // wherever the oracle's margin is not a near-tie.
        for &(a, b) in &inst.pairs {
            let want = oracle_score(inst.kernel, &inst.x, &inst.pairs, &alpha, &inst.x[a])
                - oracle_score(inst.kernel, &inst.x, &inst.pairs, &alpha, &inst.x[b]);
            let have = t.model.score(&inst.x[a]).unwrap() - t.model.score(&inst.x[b]).unwrap();
            if want.abs() > 1e-3 {
                prop_assert_eq!(want > 0.0, have > 0.0, "pair ({}, {}): oracle {} model {}", a, b, want, have);
            }
        }
        Ok(())
    })
}

pub fn kkt_at_convergence() -> Result<(), String> {
    let tol = 1e-3;
    super::run(1000, instances(), |inst| {
        let q = pair_matrix(inst.kernel, &inst.x, &inst.pairs);
        let t = fit(&inst.x, &inst.pairs, &params(&inst, tol), &Silent).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(t.report.converged);
        let alpha = &t.solution.alpha;
        for i in 0..alpha.len() {
            let g = 1.0 - (0..alpha.len()).map(|j| q[i][j] * alpha[j]).sum::<f64>();
            let ok = if alpha[i] <= 0.0 {
                g <= tol
            } else if alpha[i] >= inst.c {
                g >= -tol
            } else {
                g.abs() <= tol
            };
            prop_assert!(ok, "alpha[{}] = {} with gradient {}", i, alpha[i], g);
            prop_assert!((0.0..=inst.c).contains(&alpha[i]));
        }
        Ok(())
    })
}

//! Ranking SVM.
//!
//! Each preference `a ≻ b` becomes a margin constraint `f(a) − f(b) ≥ 1 − ξ`
//! on the utility `f(x) = Σᵢ αᵢ (K(aᵢ, x) − K(bᵢ, x))`. The dual
//!
//! ```text
//! max_α  Σᵢ αᵢ − ½ Σᵢ Σⱼ αᵢ αⱼ Qᵢⱼ     s.t. 0 ≤ αᵢ ≤ C
//! Qᵢⱼ = K(aᵢ,aⱼ) − K(aᵢ,bⱼ) − K(bᵢ,aⱼ) + K(bᵢ,bⱼ)
//! ```
//!
//! has no bias term and hence no equality constraint, so it is solved by
//! cyclic single-coordinate ascent with exact line search, clipped to the box.

use serde::{Deserialize, Serialize};

use crate::dataset::{DataTable, PreferenceSet};
use crate::error::{Error, Result};
use crate::monitor::{Monitor, Silent};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Polynomial { gamma: f64, coef0: f64, degree: u32 },
    Rbf { gamma: f64 },
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { gamma, degree, coef0 } => {
                if !(gamma > 0.0) || degree < 1 || !coef0.is_finite() {
                    return Err(Error::InvalidParam(format!(
                        "polynomial kernel needs gamma > 0 and degree >= 1 (gamma={gamma}, degree={degree})"
                    )));
                }
                Ok(())
            }
            Kernel::Rbf { gamma } => {
                if !(gamma > 0.0) {
                    return Err(Error::InvalidParam(format!("rbf kernel needs gamma > 0 (gamma={gamma})")));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Polynomial { gamma, coef0, degree } => (gamma * dot(x, y) + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// `K(a,c) − K(a,d) − K(b,c) + K(b,d)`: the kernel between difference pairs.
pub fn pair_kernel(kernel: &Kernel, p: (&[f64], &[f64]), q: (&[f64], &[f64])) -> Result<f64> {
    check_dims(p.0, p.1)?;
    check_dims(p.0, q.0)?;
    check_dims(p.0, q.1)?;
    Ok(pair_kernel_unchecked(kernel, p, q))
}

#[inline]
fn pair_kernel_unchecked(kernel: &Kernel, (a, b): (&[f64], &[f64]), (c, d): (&[f64], &[f64])) -> f64 {
    if let Kernel::Linear = kernel {
        return a
            .iter()
            .zip(b)
            .zip(c.iter().zip(d))
            .map(|((a, b), (c, d))| (a - b) * (c - d))
            .sum();
    }
    kernel.eval_unchecked(a, c) - kernel.eval_unchecked(a, d) - kernel.eval_unchecked(b, c)
        + kernel.eval_unchecked(b, d)
}

/// Kernel choice as configured; unset `gamma` resolves to `1 / feature count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default = "one")]
        coef0: f64,
        #[serde(default = "two")]
        degree: u32,
    },
    Rbf {
        #[serde(default)]
        gamma: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> u32 {
    2
}

impl KernelSpec {
    pub fn resolve(&self, dim: usize) -> Kernel {
        let default_gamma = 1.0 / dim.max(1) as f64;
        match *self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Polynomial { gamma, coef0, degree } => Kernel::Polynomial {
                gamma: gamma.unwrap_or(default_gamma),
                coef0,
                degree,
            },
            KernelSpec::Rbf { gamma } => Kernel::Rbf {
                gamma: gamma.unwrap_or(default_gamma),
            },
        }
    }
}

impl From<Kernel> for KernelSpec {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Linear => KernelSpec::Linear,
            Kernel::Polynomial { gamma, coef0, degree } => KernelSpec::Polynomial {
                gamma: Some(gamma),
                coef0,
                degree,
            },
            Kernel::Rbf { gamma } => KernelSpec::Rbf { gamma: Some(gamma) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelSpec,
    /// KKT tolerance.
    pub tol: f64,
    pub max_epochs: usize,
    /// Largest pair count for which the full Q matrix is precomputed;
    /// above it columns are computed on demand.
    pub cache_limit: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kernel: KernelSpec::Linear,
            tol: 1e-3,
            max_epochs: 1000,
            cache_limit: 10_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParam(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParam("max_epochs must be at least 1".into()));
        }
        if let KernelSpec::Polynomial { gamma: Some(g), .. } | KernelSpec::Rbf { gamma: Some(g) } = self.kernel {
            if !(g > 0.0) {
                return Err(Error::InvalidParam(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmRankModel {
    pub kernel: Kernel,
    pub dim: usize,
    pub support: Vec<SupportPair>,
}

impl SvmRankModel {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.score_unchecked(x))
    }

    pub(crate) fn score_unchecked(&self, x: &[f64]) -> f64 {
        if let Kernel::Linear = self.kernel {
            // Σ αᵢ (aᵢ − bᵢ)·x, accumulated per pair to match the kernel form.
            return self
                .support
                .iter()
                .map(|s| s.alpha * s.a.iter().zip(&s.b).zip(x).map(|((a, b), x)| (a - b) * x).sum::<f64>())
                .sum();
        }
        self.support
            .iter()
            .map(|s| s.alpha * (self.kernel.eval_unchecked(&s.a, x) - self.kernel.eval_unchecked(&s.b, x)))
            .sum()
    }
}

/// Free-function form of [`SvmRankModel::score`].
pub fn svm_score(model: &SvmRankModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

/// Access to the dual Hessian `Q`.
pub trait Gram {
    fn len(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    /// Write column `i` of `Q` into `out` (length `len()`).
    fn column(&self, i: usize, out: &mut [f64]);
}

/// Fully materialized row-major `Q`.
pub struct DenseGram {
    n: usize,
    q: Vec<f64>,
}

impl DenseGram {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        DenseGram {
            n,
            q: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    fn build(kernel: &Kernel, pairs: &[(&[f64], &[f64])]) -> Self {
        let n = pairs.len();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = pair_kernel_unchecked(kernel, pairs[i], pairs[j]);
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        DenseGram { n, q }
    }
}

impl Gram for DenseGram {
    fn len(&self) -> usize {
        self.n
    }

    fn diag(&self, i: usize) -> f64 {
        self.q[i * self.n + i]
    }

    fn column(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.q[i * self.n..(i + 1) * self.n]);
    }
}

/// Columns recomputed from the pair vectors on every request.
struct LazyGram<'a> {
    kernel: Kernel,
    pairs: &'a [(&'a [f64], &'a [f64])],
    diag: Vec<f64>,
}

impl Gram for LazyGram<'_> {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    fn column(&self, i: usize, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(self.pairs) {
            *o = pair_kernel_unchecked(&self.kernel, *p, self.pairs[i]);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// `gᵢ = 1 − (Qα)ᵢ` at the returned point.
    pub gradient: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    pub max_violation: f64,
    /// Coordinates with `Qᵢᵢ ≤ 0`, left at zero.
    pub skipped: usize,
}

impl DualSolution {
    /// `Σα − ½ αᵀQα`, evaluated through the maintained gradient.
    pub fn objective(&self) -> f64 {
        0.5 * self.alpha.iter().zip(&self.gradient).map(|(a, g)| a * (1.0 + g)).sum::<f64>()
    }
}

fn violation(alpha: f64, g: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        g.max(0.0)
    } else if alpha >= c {
        (-g).max(0.0)
    } else {
        g.abs()
    }
}

/// Cyclic coordinate ascent on the box-constrained dual.
///
/// Starts from `α = 0` and sweeps coordinates in index order, setting each to
/// its clipped one-dimensional optimum. Stops once the largest KKT violation
/// after a sweep drops below `tol`, or after `max_epochs` sweeps.
pub fn solve_dual(gram: &dyn Gram, c: f64, tol: f64, max_epochs: usize, monitor: &dyn Monitor) -> Result<DualSolution> {
    let m = gram.len();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![1.0; m];
    let mut col = vec![0.0; m];
    let usable: Vec<bool> = (0..m).map(|i| gram.diag(i) > 1e-12).collect();
    let skipped = usable.iter().filter(|u| !**u).count();
    let max_violation = |alpha: &[f64], grad: &[f64]| {
        (0..m)
            .filter(|&i| usable[i])
            .map(|i| violation(alpha[i], grad[i], c))
            .fold(0.0, f64::max)
    };

    let mut worst = max_violation(&alpha, &grad);
    let mut epochs = 0;
    while worst >= tol && epochs < max_epochs {
        if monitor.cancelled() {
            return Err(Error::Cancelled);
        }
        for i in 0..m {
            if !usable[i] || violation(alpha[i], grad[i], c) == 0.0 {
                continue;
            }
            let qii = gram.diag(i);
            let next = (alpha[i] + grad[i] / qii).clamp(0.0, c);
            let delta = next - alpha[i];
            if delta == 0.0 {
                continue;
            }
            alpha[i] = next;
            gram.column(i, &mut col);
            for (g, q) in grad.iter_mut().zip(&col) {
                *g -= delta * q;
            }
        }
        epochs += 1;
        worst = max_violation(&alpha, &grad);
        monitor.progress(epochs as f64 / max_epochs as f64);
    }
    Ok(DualSolution {
        alpha,
        gradient: grad,
        epochs,
        converged: worst < tol,
        max_violation: worst,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub converged: bool,
    pub epochs: usize,
    pub max_violation: f64,
    pub dual_objective: f64,
    /// Pairs whose two objects are identical, dropped before solving.
    pub zero_difference_pairs: usize,
    /// Pairs with a non-positive diagonal entry, left out of the solve.
    pub degenerate_pairs: usize,
    pub support_pairs: usize,
}

#[derive(Clone, Debug)]
pub struct SvmTraining {
    pub model: SvmRankModel,
    pub report: SolverReport,
    pub solution: DualSolution,
}

/// Train on preference pairs given as row positions into `x`.
pub fn fit(x: &[Vec<f64>], pairs: &[(usize, usize)], params: &SvmParams, monitor: &dyn Monitor) -> Result<SvmTraining> {
    params.validate()?;
    let dim = x.first().map_or(0, Vec::len);
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: row.len(),
        });
    }
    let kernel = params.kernel.resolve(dim);
    kernel.validate()?;

    let usable: Vec<(&[f64], &[f64])> = pairs
        .iter()
        .map(|&(a, b)| (x[a].as_slice(), x[b].as_slice()))
        .filter(|(a, b)| a != b)
        .collect();
    let zero_difference = pairs.len() - usable.len();
    if zero_difference > 0 {
        log::warn!("skipping {zero_difference} preference pairs whose objects are identical");
    }
    if usable.is_empty() {
        return Err(Error::NoPairs("every pair compares identical feature vectors".into()));
    }

    let solution = if usable.len() <= params.cache_limit {
        let gram = DenseGram::build(&kernel, &usable);
        solve_dual(&gram, params.c, params.tol, params.max_epochs, monitor)?
    } else {
        let diag = usable.iter().map(|p| pair_kernel_unchecked(&kernel, *p, *p)).collect();
        let gram = LazyGram {
            kernel,
            pairs: &usable,
            diag,
        };
        solve_dual(&gram, params.c, params.tol, params.max_epochs, monitor)?
    };
    if !solution.converged {
        log::info!(
            "ranking SVM stopped at max_epochs={} with KKT violation {:.3e}",
            params.max_epochs,
            solution.max_violation
        );
    }

    let support: Vec<SupportPair> = usable
        .iter()
        .zip(&solution.alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|((a, b), &alpha)| SupportPair {
            a: a.to_vec(),
            b: b.to_vec(),
            alpha,
        })
        .collect();
    let report = SolverReport {
        converged: solution.converged,
        epochs: solution.epochs,
        max_violation: solution.max_violation,
        dual_objective: solution.objective(),
        zero_difference_pairs: zero_difference,
        degenerate_pairs: solution.skipped,
        support_pairs: support.len(),
    };
    Ok(SvmTraining {
        model: SvmRankModel { kernel, dim, support },
        report,
        solution,
    })
}

/// Train a ranking SVM on the preferences over `table`'s (numeric) objects.
pub fn train_ranksvm(prefs: &PreferenceSet, table: &DataTable, params: &SvmParams) -> Result<SvmTraining> {
    let x = table.numeric_matrix()?;
    let pairs = prefs.indices(table)?;
    if pairs.is_empty() {
        return Err(Error::NoPairs("the preference set is empty".into()));
    }
    fit(&x, &pairs, params, &Silent)
}

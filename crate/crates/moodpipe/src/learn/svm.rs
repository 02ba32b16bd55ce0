//! Support vector machine trained by Sequential Minimal Optimization.
//!
//! The solver repeatedly picks a pair of multipliers violating the KKT
//! conditions beyond `tol`, solves the two-variable subproblem in closed
//! form (clipping to the box/equality-constraint segment), and updates the
//! bias. Example visit order is shuffled from the seed, so distinct seeds
//! give tolerance-identical but bitwise distinct solutions — the harness's
//! per-initialization variation for this family.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::standardize::Standardizer;

/// Polynomial kernel `K(x, z) = (x·z)^degree`; degree 1 is the linear
/// kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub degree: u32,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { degree: 1 }
    }
}

impl KernelSpec {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, z)| x * z).sum();
        match self.degree {
            1 => dot,
            d => dot.powi(d as i32),
        }
    }
}

/// SMO hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Consecutive no-progress full sweeps tolerated while violations
    /// remain before giving up with a convergence warning.
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
    #[serde(default)]
    pub kernel: KernelSpec,
}

fn default_c() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-3
}
fn default_max_passes() -> usize {
    10
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: default_c(),
            tol: default_tol(),
            max_passes: default_max_passes(),
            kernel: KernelSpec::default(),
        }
    }
}

/// Raw solver output over the full training set.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub sweeps: usize,
}

/// Dual objective `Σα - 1/2 ΣΣ α_i α_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], kernel_matrix: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut obj: f64 = alpha.iter().sum();
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] != 0.0 {
                obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * kernel_matrix[i][j];
            }
        }
    }
    obj
}

struct SmoState<'a> {
    y: &'a [f64],
    k: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
    c: f64,
    tol: f64,
}

const STEP_EPS: f64 = 1e-12;

impl<'a> SmoState<'a> {
    /// Closed-form joint optimization of (i1, i2). Returns true when a
    /// step was taken.
    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;

        let (low, high) = if (y1 - y2).abs() > 0.5 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a2_old + a1_old - self.c).max(0.0), (a2_old + a1_old).min(self.c))
        };
        if high - low < STEP_EPS {
            return false;
        }

        let (k11, k12, k22) = (self.k[i1][i1], self.k[i1][i2], self.k[i2][i2]);
        let eta = k11 + k22 - 2.0 * k12;

        #[cfg(debug_assertions)]
        let obj_before = dual_objective(&self.alpha, self.y, &self.k);

        let a2_new = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(low, high)
        } else {
            // Degenerate curvature: compare the dual objective at the two
            // segment endpoints directly.
            let delta = |a2: f64| self.objective_delta(i1, i2, a2);
            let (d_low, d_high) = (delta(low), delta(high));
            if d_low > d_high + STEP_EPS {
                low
            } else if d_high > d_low + STEP_EPS {
                high
            } else {
                return false;
            }
        };

        if (a2_new - a2_old).abs() < STEP_EPS * (a2_new + a2_old + STEP_EPS) {
            return false;
        }
        let a1_new = (a1_old + s * (a2_old - a2_new)).clamp(0.0, self.c);

        let da1 = a1_new - a1_old;
        let da2 = a2_new - a2_old;
        let b_old = self.bias;
        let b1 = b_old - e1 - y1 * da1 * k11 - y2 * da2 * k12;
        let b2 = b_old - e2 - y1 * da1 * k12 - y2 * da2 * k22;
        let b_new = if a1_new > 0.0 && a1_new < self.c {
            b1
        } else if a2_new > 0.0 && a2_new < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };

        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        let db = b_new - b_old;
        self.bias = b_new;
        for i in 0..self.errors.len() {
            self.errors[i] += y1 * da1 * self.k[i1][i] + y2 * da2 * self.k[i2][i] + db;
        }

        #[cfg(debug_assertions)]
        {
            let obj_after = dual_objective(&self.alpha, self.y, &self.k);
            debug_assert!(
                obj_after >= obj_before - 1e-9,
                "dual objective decreased: {obj_before} -> {obj_after}"
            );
        }
        true
    }

    /// Change in the dual objective if alpha[i2] moved to `a2` along the
    /// equality-constraint segment (alpha[i1] absorbing the difference).
    fn objective_delta(&self, i1: usize, i2: usize, a2: f64) -> f64 {
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let a1 = a1_old + s * (a2_old - a2);
        let (k11, k12, k22) = (self.k[i1][i1], self.k[i1][i2], self.k[i2][i2]);
        // v_i = f(x_i) - b - a1 y1 K_1i - a2 y2 K_2i over the old state.
        let f1 = self.errors[i1] + y1;
        let f2 = self.errors[i2] + y2;
        let v1 = f1 - self.bias - a1_old * y1 * k11 - a2_old * y2 * k12;
        let v2 = f2 - self.bias - a1_old * y1 * k12 - a2_old * y2 * k22;
        let w = |a1x: f64, a2x: f64| {
            a1x + a2x
                - 0.5 * a1x * a1x * k11
                - 0.5 * a2x * a2x * k22
                - s * a1x * a2x * k12
                - a1x * y1 * v1
                - a2x * y2 * v2
        };
        w(a1, a2) - w(a1_old, a2_old)
    }

    /// KKT check and second-multiplier choice for one example.
    fn examine(&mut self, i2: usize, order: &[usize], rng: &mut ChaCha8Rng) -> (bool, bool) {
        let y2 = self.y[i2];
        let a2 = self.alpha[i2];
        let r2 = self.errors[i2] * y2;
        let violating = (r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0);
        if !violating {
            return (false, false);
        }

        // Second-choice heuristic: largest |E1 - E2| among non-bound points.
        let e2 = self.errors[i2];
        let mut best: Option<(usize, f64)> = None;
        for &i in order {
            if i == i2 || self.alpha[i] <= 0.0 || self.alpha[i] >= self.c {
                continue;
            }
            let gap = (self.errors[i] - e2).abs();
            if best.map_or(true, |(_, g)| gap > g) {
                best = Some((i, gap));
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return (true, true);
            }
        }
        // Fall back to the non-bound set, then everything, from a seeded
        // start position.
        let start = (rng.next_u64() as usize) % order.len();
        for offset in 0..order.len() {
            let i1 = order[(start + offset) % order.len()];
            if i1 == i2 || self.alpha[i1] <= 0.0 || self.alpha[i1] >= self.c {
                continue;
            }
            if self.take_step(i1, i2) {
                return (true, true);
            }
        }
        for offset in 0..order.len() {
            let i1 = order[(start + offset) % order.len()];
            if i1 == i2 {
                continue;
            }
            if self.take_step(i1, i2) {
                return (true, true);
            }
        }
        (true, false)
    }
}

use rand::RngCore;

/// Solve the SVM dual on pre-standardized data; labels must be ±1.
pub fn smo_solve(
    x: &[Vec<f64>],
    y: &[f64],
    config: &SvmConfig,
    seed: u64,
) -> Result<SmoSolution> {
    let n = x.len();
    if n == 0 || y.iter().all(|&v| v > 0.0) || y.iter().all(|&v| v < 0.0) {
        return Err(Error::SingleClass);
    }
    assert!(config.c > 0.0, "C must be positive");
    assert!(y.iter().all(|&v| v == 1.0 || v == -1.0), "labels must be +/-1");

    let kernel_matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| config.kernel.eval(&x[i], &x[j])).collect())
        .collect();

    let mut state = SmoState {
        y,
        k: kernel_matrix,
        alpha: vec![0.0; n],
        bias: 0.0,
        errors: y.iter().map(|&v| -v).collect(),
        c: config.c,
        tol: config.tol,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut examine_all = true;
    let mut stuck_sweeps = 0usize;
    let mut sweeps = 0usize;
    let mut converged = false;
    let sweep_cap = 200 + config.max_passes * 50;

    loop {
        let mut changed = 0usize;
        let mut violations = 0usize;
        let candidates: Vec<usize> = if examine_all {
            order.clone()
        } else {
            order
                .iter()
                .copied()
                .filter(|&i| state.alpha[i] > 0.0 && state.alpha[i] < state.c)
                .collect()
        };
        for i in candidates {
            let (violated, stepped) = state.examine(i, &order, &mut rng);
            violations += violated as usize;
            changed += stepped as usize;
        }
        sweeps += 1;

        if examine_all {
            if violations == 0 {
                converged = true;
                break;
            }
            if changed == 0 {
                stuck_sweeps += 1;
                if stuck_sweeps >= config.max_passes {
                    break;
                }
            } else {
                stuck_sweeps = 0;
                examine_all = false;
            }
        } else if changed == 0 {
            examine_all = true;
        }

        if sweeps >= sweep_cap {
            break;
        }
    }

    Ok(SmoSolution {
        alpha: state.alpha,
        bias: state.bias,
        converged,
        sweeps,
    })
}

/// Trained SVM with optional Platt calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub standardizer: Standardizer,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    /// Platt sigmoid (A, B): P(y=1|f) = 1 / (1 + exp(A f + B)).
    pub platt: Option<(f64, f64)>,
    pub converged: bool,
}

impl SvmModel {
    /// Build the sparse model from a solver run over standardized rows.
    pub fn from_solution(
        standardized_x: &[Vec<f64>],
        y: &[f64],
        solution: &SmoSolution,
        kernel: KernelSpec,
        standardizer: Standardizer,
    ) -> Self {
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for (i, &a) in solution.alpha.iter().enumerate() {
            if a > 1e-12 {
                support_vectors.push(standardized_x[i].clone());
                coefficients.push(a * y[i]);
            }
        }
        SvmModel {
            standardizer,
            support_vectors,
            coefficients,
            bias: solution.bias,
            kernel,
            platt: None,
            converged: solution.converged,
        }
    }

    /// Decision value on a raw (unstandardized) row.
    pub fn decision_value(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(row);
        self.decision_value_standardized(&z)
    }

    /// Decision value on an already standardized row.
    pub fn decision_value_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, z))
            .sum::<f64>()
            + self.bias
    }

    /// Calibrated probability of the positive class; 0.5-threshold on the
    /// raw decision value when no sigmoid was fitted.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let f = self.decision_value(row);
        match self.platt {
            Some((a, b)) => super::platt::sigmoid_prob(f, a, b),
            None => {
                if f >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn config(tol: f64) -> SvmConfig {
        SvmConfig {
            c: 1.0,
            tol,
            max_passes: 10,
            kernel: KernelSpec::default(),
        }
    }

    /// Exact QP oracle for tiny problems: enumerate every assignment of
    /// multipliers to {lower, upper, free}, solve the stationarity system
    /// on the free set under the equality constraint, keep feasible
    /// candidates, and return the best dual objective.
    fn brute_force_dual_optimum(x: &[Vec<f64>], y: &[f64], c: f64, kernel: &KernelSpec) -> f64 {
        let n = x.len();
        assert!(n <= 6);
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| kernel.eval(&x[i], &x[j])).collect())
            .collect();

        // Gaussian elimination with partial pivoting.
        fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
            let n = b.len();
            for col in 0..n {
                let pivot = (col..n).max_by(|&i, &j| {
                    a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
                })?;
                if a[pivot][col].abs() < 1e-10 {
                    return None;
                }
                a.swap(col, pivot);
                b.swap(col, pivot);
                for row in 0..n {
                    if row != col {
                        let factor = a[row][col] / a[col][col];
                        for cc in 0..n {
                            a[row][cc] -= factor * a[col][cc];
                        }
                        b[row] -= factor * b[col];
                    }
                }
            }
            Some((0..n).map(|i| b[i] / a[i][i]).collect())
        }

        let mut best = f64::MIN;
        // 0 = at lower bound (0), 1 = at upper bound (C), 2 = free.
        for assignment in 0..3usize.pow(n as u32) {
            let mut code = assignment;
            let mut fixed = vec![0.0; n];
            let mut free: Vec<usize> = Vec::new();
            for i in 0..n {
                match code % 3 {
                    0 => fixed[i] = 0.0,
                    1 => fixed[i] = c,
                    _ => free.push(i),
                }
                code /= 3;
            }

            let alpha = if free.is_empty() {
                let balance: f64 = (0..n).map(|i| fixed[i] * y[i]).sum();
                if balance.abs() > 1e-9 {
                    continue;
                }
                fixed
            } else {
                // Stationarity over free vars with multiplier for the
                // equality constraint: Q_FF a_F + lambda y_F = 1 - Q_FB a_B,
                // y_F' a_F = -y_B' a_B.
                let m = free.len();
                let mut mat = vec![vec![0.0; m + 1]; m + 1];
                let mut rhs = vec![0.0; m + 1];
                for (r, &i) in free.iter().enumerate() {
                    for (cidx, &j) in free.iter().enumerate() {
                        mat[r][cidx] = y[i] * y[j] * k[i][j];
                    }
                    mat[r][m] = y[i];
                    let bound_term: f64 = (0..n)
                        .filter(|&j| !free.contains(&j))
                        .map(|j| y[i] * y[j] * k[i][j] * fixed[j])
                        .sum();
                    rhs[r] = 1.0 - bound_term;
                }
                for (cidx, &j) in free.iter().enumerate() {
                    mat[m][cidx] = y[j];
                }
                rhs[m] = -(0..n)
                    .filter(|&j| !free.contains(&j))
                    .map(|j| y[j] * fixed[j])
                    .sum::<f64>();
                let Some(solution) = solve(mat, rhs) else { continue };
                let mut alpha = fixed;
                let mut ok = true;
                for (r, &i) in free.iter().enumerate() {
                    let a = solution[r];
                    if !(-1e-9..=c + 1e-9).contains(&a) {
                        ok = false;
                        break;
                    }
                    alpha[i] = a.clamp(0.0, c);
                }
                if !ok {
                    continue;
                }
                alpha
            };

            best = best.max(dual_objective(&alpha, y, &k));
        }
        best
    }

    fn kkt_satisfied(x: &[Vec<f64>], y: &[f64], sol: &SmoSolution, cfg: &SvmConfig) -> bool {
        let n = x.len();
        for i in 0..n {
            let f: f64 = (0..n)
                .map(|j| sol.alpha[j] * y[j] * cfg.kernel.eval(&x[j], &x[i]))
                .sum::<f64>()
                + sol.bias;
            let margin = y[i] * f;
            let a = sol.alpha[i];
            let ok = if a <= 1e-9 {
                margin >= 1.0 - cfg.tol - 1e-6
            } else if a >= cfg.c - 1e-9 {
                margin <= 1.0 + cfg.tol + 1e-6
            } else {
                (margin - 1.0).abs() <= cfg.tol + 1e-6
            };
            if !ok {
                return false;
            }
        }
        true
    }

    #[test]
    fn symmetric_pair_is_split_at_zero() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1.0, 1.0];
        let sol = smo_solve(&x, &y, &config(1e-3), 0).unwrap();
        assert!(sol.converged);
        assert_relative_eq!(sol.alpha[0], sol.alpha[1], max_relative = 1e-9);
        assert!(sol.bias.abs() < 1e-6, "boundary at 0, bias {}", sol.bias);
        // Both classified correctly.
        for (xi, yi) in x.iter().zip(&y) {
            let f: f64 = x
                .iter()
                .zip(&y)
                .zip(&sol.alpha)
                .map(|((xj, yj), aj)| aj * yj * KernelSpec::default().eval(xj, xi))
                .sum::<f64>()
                + sol.bias;
            assert!(f * yi > 0.0);
        }
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![-1.0, 1.0, 1.0, -1.0];
        let sol = smo_solve(&x, &y, &config(1e-3), 1).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| {
                let f: f64 = x
                    .iter()
                    .zip(&y)
                    .zip(&sol.alpha)
                    .map(|((xj, yj), aj)| aj * yj * KernelSpec::default().eval(xj, xi))
                    .sum::<f64>()
                    + sol.bias;
                f * yi > 0.0
            })
            .count();
        assert!(correct <= 3, "xor training accuracy must be <= 0.75");
    }

    #[test]
    fn dual_matches_brute_force_oracle_on_small_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let cfg = SvmConfig {
            tol: 1e-8,
            ..config(1e-8)
        };
        for case in 0..40 {
            let n = 3 + (case % 4); // 3..=6 points
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                .collect();
            let mut y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            y.shuffle(&mut rng);
            let sol = smo_solve(&x, &y, &cfg, case as u64).unwrap();
            let k: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| cfg.kernel.eval(&x[i], &x[j])).collect())
                .collect();
            let smo_obj = dual_objective(&sol.alpha, &y, &k);
            let oracle_obj = brute_force_dual_optimum(&x, &y, cfg.c, &cfg.kernel);
            assert!(
                (smo_obj - oracle_obj).abs() <= 1e-6 * oracle_obj.abs().max(1.0),
                "case {case}: smo {smo_obj} vs oracle {oracle_obj}"
            );
        }
    }

    #[test]
    fn kkt_conditions_hold_on_converged_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let cfg = config(1e-3);
        for case in 0..30 {
            let n = 4 + (case % 10);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
                .collect();
            let y: Vec<f64> = x
                .iter()
                .map(|p| if p[0] + 0.5 * p[1] + rng.gen_range(-0.5..0.5) > 0.0 { 1.0 } else { -1.0 })
                .collect();
            if y.iter().all(|&v| v == y[0]) {
                continue;
            }
            let sol = smo_solve(&x, &y, &cfg, case as u64).unwrap();
            if sol.converged {
                assert!(kkt_satisfied(&x, &y, &sol, &cfg), "case {case}");
            }
        }
    }

    #[test]
    fn alpha_stays_in_box_and_balance_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let cfg = config(1e-3);
        let n = 20;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = x.iter().map(|p| if p[0] > p[1] { 1.0 } else { -1.0 }).collect();
        let sol = smo_solve(&x, &y, &cfg, 3).unwrap();
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(balance.abs() < 1e-8, "sum alpha_i y_i = {balance}");
        for &a in &sol.alpha {
            assert!((-1e-12..=cfg.c + 1e-12).contains(&a));
        }
    }

    #[test]
    fn seeds_change_order_but_not_separability() {
        let x = vec![
            vec![-2.0, 0.1],
            vec![-1.5, -0.3],
            vec![-1.0, 0.2],
            vec![1.0, -0.1],
            vec![1.5, 0.3],
            vec![2.0, -0.2],
        ];
        let y = vec![-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let cfg = config(1e-3);
        for seed in 0..5 {
            let sol = smo_solve(&x, &y, &cfg, seed).unwrap();
            assert!(sol.converged);
            for (xi, yi) in x.iter().zip(&y) {
                let f: f64 = x
                    .iter()
                    .zip(&y)
                    .zip(&sol.alpha)
                    .map(|((xj, yj), aj)| aj * yj * cfg.kernel.eval(xj, xi))
                    .sum::<f64>()
                    + sol.bias;
                assert!(f * yi > 0.0, "seed {seed} misclassifies");
            }
        }
        // Same seed twice: bit-identical.
        let a = smo_solve(&x, &y, &cfg, 9).unwrap();
        let b = smo_solve(&x, &y, &cfg, 9).unwrap();
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.bias, b.bias);
    }
}

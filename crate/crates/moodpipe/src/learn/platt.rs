//! Platt scaling: fit `P(y=1|f) = 1/(1+exp(A·f+B))` to decision values by
//! regularized maximum likelihood with Platt's smoothed targets
//! `t+ = (N+ + 1)/(N+ + 2)`, `t- = 1/(N- + 2)`, using Newton iterations
//! with backtracking (the standard robust formulation).

/// Calibrated probability of the positive class for decision value `f`.
pub fn sigmoid_prob(f: f64, a: f64, b: f64) -> f64 {
    let z = a * f + b;
    if z >= 0.0 {
        (-z).exp() / (1.0 + (-z).exp())
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Fit (A, B) on decision values and binary labels.
///
/// Degenerate inputs (all decision values equal) yield A = 0 with B set
/// from the smoothed base rate.
pub fn fit_sigmoid(decision_values: &[f64], labels: &[bool]) -> (f64, f64) {
    assert_eq!(decision_values.len(), labels.len());
    assert!(!decision_values.is_empty(), "cannot calibrate on no data");
    let n = decision_values.len();
    let prior1 = labels.iter().filter(|&&l| l).count() as f64;
    let prior0 = n as f64 - prior1;

    let spread = decision_values
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if spread.1 - spread.0 < 1e-12 {
        return (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
    }

    let hi_target = (prior1 + 1.0) / (prior1 + 2.0);
    let lo_target = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l { hi_target } else { lo_target })
        .collect();

    let max_iter = 100;
    let min_step = 1e-10;
    let sigma = 1e-12;
    let eps = 1e-5;

    let mut a = 0.0f64;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();

    let objective = |a: f64, b: f64| -> f64 {
        let mut fval = 0.0;
        for (&f, &t) in decision_values.iter().zip(&targets) {
            let z = f * a + b;
            // log(1 + exp(z)) in the numerically safe branch.
            if z >= 0.0 {
                fval += t * z + (1.0 + (-z).exp()).ln();
            } else {
                fval += (t - 1.0) * z + (1.0 + z.exp()).ln();
            }
        }
        fval
    };

    let mut fval = objective(a, b);
    for _ in 0..max_iter {
        // Gradient and Hessian (regularized).
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&f, &t) in decision_values.iter().zip(&targets) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        // Newton direction with backtracking line search.
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let new_f = objective(na, nb);
            if new_f < fval + 0.0001 * step * gd {
                a = na;
                b = nb;
                fval = new_f;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

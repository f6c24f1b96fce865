//! Nelder–Mead simplex descent with dimension-adapted coefficients.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop as soon as the best value reaches this.
    pub stop_value: f64,
    /// Stop when the simplex diameter and value spread both fall below these.
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.1,
            max_evals: 10_000,
            stop_value: f64::NEG_INFINITY,
            xtol: 1e-12,
            ftol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub iterations: usize,
}

pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, sigma) = (0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] != 0.0 { opts.initial_step * x[i].abs().max(1.0) } else { opts.initial_step };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if best <= opts.stop_value
            || evals >= opts.max_evals
            || (diameter <= opts.xtol && worst - best <= opts.ftol.max(0.0) + f64::EPSILON * best.abs())
        {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex[1..].iter_mut() {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + sigma * (*xi - bi);
            }
            *v = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evals,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    #[test]
    fn minimizes_rosenbrock() {
        let opts = NelderMeadOptions {
            max_evals: 20_000,
            xtol: 1e-10,
            ..Default::default()
        };
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(m.value < 1e-12, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn respects_budget_and_target() {
        let opts = NelderMeadOptions {
            max_evals: 50,
            ..Default::default()
        };
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0, 0.5, 0.3], &opts);
        assert!(m.evals <= 50 + 5);
        let opts = NelderMeadOptions {
            stop_value: 1e-2,
            max_evals: 100_000,
            ..Default::default()
        };
        let m = nelder_mead(|x| x.iter().map(|v| v * v).sum(), &[1.0, 1.0, 1.0], &opts);
        assert!(m.value <= 1e-2 && m.value > 1e-6);
    }
}

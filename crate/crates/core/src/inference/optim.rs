//! Nelder–Mead simplex minimization with restarts at the best vertex.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Converged once every vertex lies within `tol` of the best one (max norm).
    pub tol: f64,
    pub max_evals: usize,
    /// Edge length of the initial simplex.
    pub step: f64,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_evals: 2000,
            step: 0.5,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0`; NaN values count as +∞.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut iterations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        finite_or_inf(f(x))
    };
    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0, &mut evals);
    if n == 0 {
        return Minimum {
            x: best_x,
            value: best_v,
            evals,
            iterations,
            converged: true,
        };
    }
    let mut converged = false;
    for _round in 0..=opts.restarts {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_v)];
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += opts.step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter < opts.tol {
                converged = true;
                break;
            }
            iterations += 1;
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (w - c)).collect() };
            let xr = along(-1.0);
            let vr = eval(&xr, &mut evals);
            if vr < simplex[0].1 {
                let xe = along(-2.0);
                let ve = eval(&xe, &mut evals);
                simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
                continue;
            }
            if vr < simplex[n - 1].1 {
                simplex[n] = (xr, vr);
                continue;
            }
            let (xc, vc) = if vr < worst.1 {
                let xc = along(-0.5);
                let vc = eval(&xc, &mut evals);
                (xc, vc)
            } else {
                let xc = along(0.5);
                let vc = eval(&xc, &mut evals);
                (xc, vc)
            };
            if vc < worst.1.min(vr) {
                simplex[n] = (xc, vc);
                continue;
            }
            let x0 = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = x0.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                let v = eval(&x, &mut evals);
                *vertex = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = best_v - simplex[0].1 > 1e-10 * (1.0 + best_v.abs());
        if simplex[0].1 <= best_v {
            best_x = simplex[0].0.clone();
            best_v = simplex[0].1;
        }
        if !converged || !improved {
            break;
        }
    }
    Minimum {
        x: best_x,
        value: best_v,
        evals,
        iterations,
        converged,
    }
}

//! Derivative-free minimizers: Nelder–Mead on a few family parameters and
//! blockwise coordinate descent on a monotone free profile.

/// Outcome of a local search.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop once the simplex values agree to this relative spread.
    pub f_tol: f64,
    /// ... and its vertices to this distance.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 2000,
            f_tol: 1e-11,
            x_tol: 1e-7,
            initial_step: 0.3,
        }
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Non-finite values are treated as `+inf`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let dim = x0.len();
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(x0, &mut evals);
        simplex.push((x0.to_vec(), v0));
        for i in 0..dim {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut converged = false;
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            let size = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (worst - best).abs() <= self.f_tol * best.abs().max(1e-300) && size <= self.x_tol {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64, xw: &[f64]| -> Vec<f64> {
                centroid.iter().zip(xw).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xw = simplex[dim].0.clone();
            let xr = along(alpha, &xw);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(gamma, &xw);
                let fe = eval(&xe, &mut evals);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst {
                    let xc = along(rho * alpha, &xw);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(-rho, &xw);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < worst.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = x_best
                            .iter()
                            .zip(&vertex.0)
                            .map(|(b, v)| b + sigma * (v - b))
                            .collect();
                        let v = eval(&x, &mut evals);
                        *vertex = (x, v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evaluations: evals,
            converged,
        }
    }
}

/// Keeps `y` nonincreasing after index 0 by a running minimum.
pub fn project_nonincreasing(y: &mut [f64]) {
    for k in 1..y.len() {
        if y[k] > y[k - 1] {
            y[k] = y[k - 1];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoordinateDescent {
    pub max_evals: usize,
    pub block: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for CoordinateDescent {
    fn default() -> Self {
        CoordinateDescent {
            max_evals: 2000,
            block: 4,
            initial_step: 0.05,
            min_step: 1e-4,
        }
    }
}

impl CoordinateDescent {
    /// Minimizes over nonincreasing vectors with `y[0]` held fixed. Each
    /// sweep shifts one block of coordinates up or down by the current step;
    /// the step halves after a sweep without improvement.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, y0: &[f64]) -> Minimum {
        let mut y = y0.to_vec();
        project_nonincreasing(&mut y);
        let mut best = f(&y);
        if !best.is_finite() {
            best = f64::INFINITY;
        }
        let mut evals = 1;
        let mut step = self.initial_step;
        let len = y.len();
        while step >= self.min_step && evals < self.max_evals {
            let mut improved = false;
            let mut start = 1;
            while start < len && evals < self.max_evals {
                let end = (start + self.block).min(len);
                for dir in [-1.0, 1.0] {
                    let mut trial = y.clone();
                    for v in &mut trial[start..end] {
                        *v += dir * step;
                    }
                    project_nonincreasing(&mut trial);
                    let v = f(&trial);
                    evals += 1;
                    if v < best {
                        best = v;
                        y = trial;
                        improved = true;
                        break;
                    }
                }
                start = end;
            }
            if !improved {
                step *= 0.5;
            }
        }
        Minimum {
            x: y,
            value: best,
            evaluations: evals,
            converged: step < self.min_step,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let nm = NelderMead {
            max_evals: 5000,
            ..Default::default()
        };
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn coordinate_descent_stays_monotone() {
        let target = [0.0, -0.5, -0.5, -1.0, -3.0, -3.5];
        let cd = CoordinateDescent {
            block: 1,
            ..Default::default()
        };
        let m = cd.minimize(
            |y| y.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum(),
            &[0.0; 6],
        );
        assert!(m.x.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.value < 1e-6, "{}", m.value);
    }
}

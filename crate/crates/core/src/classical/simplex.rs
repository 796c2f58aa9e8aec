//! Nelder-Mead simplex minimisation.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once the spread of objective values across the simplex is below
    /// `ftol * (|f_best| + 1e-12)` and the simplex diameter below
    /// `xtol * (1 + max |x_best|)`.
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            ftol: 1e-10,
            xtol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimises `f` from `start`, with the initial simplex offset by `steps`
/// along each axis. Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, start: &[f64], steps: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = eval(start);
        return SimplexResult {
            x: Vec::new(),
            f: v,
            evals: 1,
            converged: true,
        };
    }

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += if steps[i] != 0.0 { steps[i] } else { 0.05 };
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| eval(p)).collect();
    let mut converged = false;

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };

    while evals.get() < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        points = order.iter().map(|&i| points[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[n]);
        let spread = worst - best;
        let diameter = points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&points[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let size = points[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if best.is_finite() && spread <= opts.ftol * (best.abs() + 1e-12) && diameter <= opts.xtol * (1.0 + size) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &points[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }

        let reflected = combine(&centroid, &points[n], -1.0);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = combine(&centroid, &points[n], -2.0);
            let fe = eval(&expanded);
            if fe < fr {
                points[n] = expanded;
                values[n] = fe;
            } else {
                points[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            points[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = combine(&centroid, &points[n], -0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = combine(&centroid, &points[n], 0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < values[n].min(fr) {
            points[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            points[i] = combine(&points[0], &points[i], 0.5);
            values[i] = eval(&points[i]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty");
    SimplexResult {
        x: points[best].clone(),
        f: values[best],
        evals: evals.get(),
        converged,
    }
}

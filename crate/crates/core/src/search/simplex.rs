//! Derivative-free local maximizers: a bounded Nelder–Mead simplex and a
//! coordinate-wise golden-section polish.
//!
//! Box bounds are enforced by reflecting every trial point back into the box
//! before it is evaluated, so the simplex never holds an infeasible vertex.

/// Reflects `x` into `[lo, hi]` (triangle wave).
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if !(width > 0.0) {
        return lo;
    }
    let t = (x - lo).rem_euclid(2.0 * width);
    if t <= width {
        lo + t
    } else {
        lo + 2.0 * width - t
    }
}

pub fn reflect_point(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = reflect(*v, lo, hi);
    }
}

/// Counts objective calls against a hard budget.
pub struct Budgeted<'f> {
    f: &'f mut dyn FnMut(&[f64]) -> f64,
    bounds: &'f [(f64, f64)],
    used: usize,
    limit: usize,
}

impl<'f> Budgeted<'f> {
    pub fn new(f: &'f mut dyn FnMut(&[f64]) -> f64, bounds: &'f [(f64, f64)], limit: usize) -> Self {
        Self { f, bounds, used: 0, limit }
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    pub fn used(&self) -> usize {
        self.used
    }

    /// Reflects `x` into the box in place and evaluates it. NaN maps to −∞.
    pub fn eval(&mut self, x: &mut [f64]) -> f64 {
        reflect_point(x, self.bounds);
        self.used += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Initial edge length per coordinate.
    pub initial_step: Vec<f64>,
    /// Spread of vertex values below which the simplex counts as converged.
    pub f_tol: f64,
    /// Simplex diameter below which it counts as converged.
    pub x_tol: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub rebuilds: usize,
}

#[derive(Debug, Clone)]
pub struct LocalOptimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Maximizes within the budget, starting from `x0`.
pub fn nelder_mead(obj: &mut Budgeted<'_>, x0: &[f64], opts: &SimplexOptions) -> LocalOptimum {
    let mut x = x0.to_vec();
    let value = obj.eval(&mut x);
    let mut best = LocalOptimum { x, value };
    if best.x.is_empty() {
        return best;
    }
    let mut scale = 1.0;
    for _ in 0..=opts.rebuilds {
        if obj.exhausted() {
            break;
        }
        let steps: Vec<f64> = opts.initial_step.iter().map(|s| s * scale).collect();
        let found = run_simplex(obj, &best, &steps, opts);
        let gained = found.value - best.value;
        if found.value > best.value {
            best = found;
        }
        if gained <= opts.f_tol {
            break;
        }
        scale *= 0.5;
    }
    best
}

fn run_simplex(obj: &mut Budgeted<'_>, start: &LocalOptimum, steps: &[f64], opts: &SimplexOptions) -> LocalOptimum {
    let n = start.x.len();
    let nf = n as f64;
    // adaptive coefficients for higher dimensions (Gao & Han)
    let (alpha, gamma, rho, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    // stored as (−f, x) so the simplex is minimized
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((-start.value, start.x.clone()));
    for i in 0..n {
        if obj.exhausted() {
            break;
        }
        let mut x = start.x.clone();
        x[i] += steps[i];
        let v = obj.eval(&mut x);
        if x[i] == start.x[i] {
            // reflected onto the start: step the other way
            x[i] -= 2.0 * steps[i];
        }
        simplex.push((-v, x));
    }
    if simplex.len() < n + 1 {
        return best_of(&simplex);
    }

    loop {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        if obj.exhausted() || converged(&simplex, opts) {
            break;
        }
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p.1[k]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.1)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(alpha);
        let fr = -obj.eval(&mut xr);
        if fr < simplex[0].0 {
            if obj.exhausted() {
                simplex[n] = (fr, xr);
                continue;
            }
            let mut xe = along(alpha * gamma);
            let fe = -obj.eval(&mut xe);
            simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
            continue;
        }
        if fr < simplex[n - 1].0 {
            simplex[n] = (fr, xr);
            continue;
        }
        if obj.exhausted() {
            break;
        }
        let (mut xc, reference) = if fr < worst.0 {
            (along(alpha * rho), fr)
        } else {
            (along(-rho), worst.0)
        };
        let fc = -obj.eval(&mut xc);
        if fc < reference {
            simplex[n] = (fc, xc);
            continue;
        }
        // shrink towards the best vertex
        let best_x = simplex[0].1.clone();
        for p in simplex.iter_mut().skip(1) {
            if obj.exhausted() {
                break;
            }
            let mut x: Vec<f64> = best_x
                .iter()
                .zip(&p.1)
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            let f = -obj.eval(&mut x);
            *p = (f, x);
        }
    }
    best_of(&simplex)
}

fn best_of(simplex: &[(f64, Vec<f64>)]) -> LocalOptimum {
    let best = simplex
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty simplex");
    LocalOptimum {
        x: best.1.clone(),
        value: -best.0,
    }
}

fn converged(sorted: &[(f64, Vec<f64>)], opts: &SimplexOptions) -> bool {
    let spread = sorted[sorted.len() - 1].0 - sorted[0].0;
    if !(spread <= opts.f_tol) {
        return false;
    }
    let best = &sorted[0].1;
    let diameter = sorted[1..]
        .iter()
        .flat_map(|p| p.1.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    diameter <= opts.x_tol
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`; returns the best point seen.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, max_evals: usize) -> (f64, f64, usize) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    let (mut best_x, mut best_f) = if fc >= fd { (c, fc) } else { (d, fd) };
    while hi - lo > tol && evals < max_evals {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
            if fc > best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
            if fd > best_f {
                best_x = d;
                best_f = fd;
            }
        }
        evals += 1;
    }
    (best_x, best_f, evals)
}

/// Sweeps each coordinate with a golden-section line search in a window of
/// half-width `radius[i]` around the incumbent, halving the windows after
/// every pass. Only strict improvements are accepted.
pub fn coordinate_polish(obj: &mut Budgeted<'_>, start: LocalOptimum, radius: &[f64], min_radius: f64) -> LocalOptimum {
    let mut best = start;
    let mut radius = radius.to_vec();
    while !obj.exhausted() && radius.iter().any(|&r| r > min_radius) {
        for i in 0..best.x.len() {
            let r = radius[i];
            if obj.exhausted() {
                break;
            }
            if r <= min_radius {
                continue;
            }
            let centre = best.x[i];
            let remaining = obj.limit.saturating_sub(obj.used);
            let mut winner: Option<LocalOptimum> = None;
            golden_section(
                |t| {
                    if obj.exhausted() {
                        return f64::NEG_INFINITY;
                    }
                    let mut probe = best.x.clone();
                    probe[i] = t;
                    let v = obj.eval(&mut probe);
                    if winner.as_ref().is_none_or(|w| v > w.value) {
                        winner = Some(LocalOptimum { x: probe, value: v });
                    }
                    v
                },
                centre - r,
                centre + r,
                r * 1e-3,
                remaining.min(40),
            );
            if let Some(w) = winner {
                if w.value > best.value {
                    best = w;
                }
            }
        }
        for r in radius.iter_mut() {
            *r *= 0.5;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_stays_in_box() {
        assert_eq!(reflect(0.5, 0.0, 1.0), 0.5);
        assert!((reflect(1.25, 0.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((reflect(-0.25, 0.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((reflect(2.25, 0.0, 1.0) - 0.25).abs() < 1e-15);
        for k in -50..50 {
            let v = reflect(k as f64 * 0.37, -1.0, 2.0);
            assert!((-1.0..=2.0).contains(&v));
        }
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx, _) = golden_section(|t| -(t - 0.3) * (t - 0.3), -1.0, 2.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn simplex_maximizes_a_bounded_quadratic() {
        let bounds = [(-5.0, 5.0); 3];
        let mut f = |x: &[f64]| -((x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + 0.1 * (x[2] - 2.0).powi(2));
        let mut obj = Budgeted::new(&mut f, &bounds, 5_000);
        let opts = SimplexOptions {
            initial_step: vec![0.5; 3],
            f_tol: 1e-14,
            x_tol: 1e-9,
            rebuilds: 2,
        };
        let best = nelder_mead(&mut obj, &[0.0, 0.0, 0.0], &opts);
        assert!(best.value > -1e-10, "{best:?}");
        assert!(obj.used() <= 5_000);
    }

    #[test]
    fn simplex_respects_bounds_at_an_edge_optimum() {
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let mut f = |x: &[f64]| x[0] + x[1];
        let mut obj = Budgeted::new(&mut f, &bounds, 2_000);
        let opts = SimplexOptions {
            initial_step: vec![0.2; 2],
            f_tol: 1e-13,
            x_tol: 1e-10,
            rebuilds: 3,
        };
        let best = nelder_mead(&mut obj, &[0.2, 0.3], &opts);
        assert!(best.x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(best.value > 2.0 - 1e-6, "{best:?}");
    }

    #[test]
    fn polish_improves_along_coordinates() {
        let bounds = [(-3.0, 3.0); 2];
        let mut f = |x: &[f64]| -((x[0] - 0.7).powi(2) + (x[1] + 1.2).powi(2));
        let mut obj = Budgeted::new(&mut f, &bounds, 2_000);
        let start = LocalOptimum { x: vec![0.0, 0.0], value: -(0.49 + 1.44) };
        let best = coordinate_polish(&mut obj, start, &[2.0, 2.0], 1e-7);
        assert!(best.value > -1e-8, "{best:?}");
    }

    #[test]
    fn budget_is_never_exceeded() {
        let bounds = [(-1.0, 1.0); 4];
        let mut f = |x: &[f64]| x.iter().map(|v| (5.0 * v).sin()).sum::<f64>();
        let mut obj = Budgeted::new(&mut f, &bounds, 37);
        let opts = SimplexOptions {
            initial_step: vec![0.3; 4],
            f_tol: 0.0,
            x_tol: 0.0,
            rebuilds: 10,
        };
        nelder_mead(&mut obj, &[0.0; 4], &opts);
        assert_eq!(obj.used(), 37);
    }
}

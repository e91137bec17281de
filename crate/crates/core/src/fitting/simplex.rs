//! Nelder–Mead downhill simplex.

use crate::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions<T> {
    /// Stop when `f_worst − f_best` falls below this.
    pub tol: T,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
    /// Best objective after every iteration; nonincreasing.
    pub history: Vec<T>,
}

/// Minimises `f` from `start` with an axis-aligned initial simplex of the
/// given per-coordinate `steps`. Coefficients: reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5.
pub fn nelder_mead<T: Real>(
    f: impl Fn(&[T]) -> T,
    start: &[T],
    steps: &[T],
    opts: &SimplexOptions<T>,
) -> SimplexResult<T> {
    let n = start.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let (alpha, gamma, rho, sigma) = (T::one(), lit::<T>(2.0), lit::<T>(0.5), lit::<T>(0.5));

    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[T]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] = x[i] + steps[i];
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let order = |s: &mut Vec<(Vec<T>, T)>| s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut history = Vec::new();
    order(&mut simplex);

    loop {
        history.push(simplex[0].1);
        if simplex[n].1 - simplex[0].1 < opts.tol || evals.get() >= opts.max_evals {
            break;
        }
        let inv_n = T::one() / T::from_usize(n).unwrap();
        let centroid: Vec<T> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<T>() * inv_n)
            .collect();
        let along = |t: T| -> Vec<T> {
            (0..n)
                .map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k]))
                .collect()
        };

        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-alpha * gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            // outside contraction when the reflection beat the worst, inside otherwise
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-rho);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<T> = (0..n)
                        .map(|k| best[k] + sigma * (v.0[k] - best[k]))
                        .collect();
                    let fx = eval(&x);
                    *v = (x, fx);
                }
            }
        }
        order(&mut simplex);
    }

    let (x, f) = simplex.swap_remove(0);
    SimplexResult {
        x,
        f,
        evals: evals.get(),
        history,
    }
}

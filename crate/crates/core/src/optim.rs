//! Box-constrained Nelder–Mead. Trial points are clamped coordinate-wise onto
//! the box, and `+∞` objective values are accepted (the simplex simply moves
//! away from them).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once `f_max − f_min ≤ f_tol · max(1, |f_min|)` over the simplex.
    pub f_tol: f64,
    /// Initial edge length as a fraction of each coordinate's box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 400,
            f_tol: 1e-9,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

/// Point `c + t (p − c)`, clamped.
fn along(c: &[f64], p: &[f64], t: f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = c.iter().zip(p).map(|(ci, pi)| ci + t * (pi - ci)).collect();
    clamp_into(&mut out, lo, hi);
    out
}

pub fn nelder_mead_box(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut start = x0.to_vec();
    clamp_into(&mut start, lo, hi);
    let f0 = eval(&start);
    if dim == 0 {
        return NelderMeadResult {
            x: start,
            f: f0,
            iterations: 0,
            evaluations: evals,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.clone(), f0));
    for j in 0..dim {
        let width = hi[j] - lo[j];
        let step = opts.initial_step * width;
        let mut v = start.clone();
        v[j] = if v[j] + step <= hi[j] {
            v[j] + step
        } else {
            v[j] - step
        };
        clamp_into(&mut v, lo, hi);
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let min_width = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| h - l)
        .fold(f64::INFINITY, f64::min);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        // Stable sort keeps the earlier vertex first among ties.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[dim].1;
        if f_best.is_infinite() && f_worst.is_infinite() && iterations > 0 {
            break;
        }
        if f_worst.is_finite() && f_worst - f_best <= opts.f_tol * f_best.abs().max(1.0) {
            break;
        }
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0_f64, f64::max);
        if diameter <= 1e-14 * min_width.max(1e-300) {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].0.clone();
        let f_second = simplex[dim - 1].1;

        let xr = along(&centroid, &worst, -REFLECT, lo, hi);
        let fr = eval(&xr);
        if fr < f_best {
            let xe = along(&centroid, &xr, EXPAND, lo, hi);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = along(&centroid, &xr, CONTRACT, lo, hi);
            let fc = eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(&centroid, &worst, CONTRACT, lo, hi);
            let fc = eval(&xc);
            let ok = fc < f_worst;
            (xc, fc, ok)
        };
        if accept {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v = along(&best, &vertex.0, SHRINK, lo, hi);
            let fv = eval(&v);
            *vertex = (v, fv);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        iterations,
        evaluations: evals,
    }
}

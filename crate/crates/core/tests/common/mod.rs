//! Brute-force reference integrals shared by the integration tests.
//!
//! Everything here is independent of the library's quadrature: a globally
//! adaptive Gauss-Kronrod 7/15 bisection, and the substitution
//! `w = (x − y)^α` which turns the weakly singular inner integral into a
//! bounded one.

#![allow(dead_code)]

use abelfem::mesh::FeSpace;
use abelfem::operator::KernelSpec;
use abelfem::quadrature::gamma;

const XGK: [f64; 8] = [
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993945,
    0.5860872354676911,
    0.4058451513773972,
    0.20778495500789846,
    0.0,
];
const WGK: [f64; 8] = [
    0.02293532201052922,
    0.06309209262997855,
    0.10479001032225018,
    0.14065325971552591,
    0.1690047266392679,
    0.1903505780647854,
    0.20443294007529889,
    0.20948214108472782,
];
const WG: [f64; 4] = [
    0.1294849661688697,
    0.27970539148927666,
    0.3818300505051189,
    0.4179591836734694,
];

/// Kronrod estimate and `|K15 − G7|` on `[a, b]`.
pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let d = r * XGK[j];
        let s = f(c - d) + f(c + d);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

/// Adaptive bisection until every leaf meets its share of `tol`.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, err) = gk15(f, a, b);
        if err <= tol || depth >= 60 || b - a < 1e-300 {
            return k;
        }
        let m = 0.5 * (a + b);
        let t = (0.5 * tol).max(1e-17);
        rec(f, a, m, t, depth + 1) + rec(f, m, b, t, depth + 1)
    }
    if b <= a {
        return 0.0;
    }
    rec(f, a, b, tol, 0)
}

/// Adaptive integration over consecutive pieces split at `breaks`.
pub fn piecewise(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let share = tol / breaks.len().max(1) as f64;
    breaks.windows(2).map(|w| adaptive(f, w[0], w[1], share)).sum()
}

fn mesh_breaks(space: &FeSpace, lo: f64, hi: f64) -> Vec<f64> {
    let mut b: Vec<f64> = std::iter::once(lo)
        .chain(space.mesh().points().iter().copied().filter(|&p| p > lo && p < hi))
        .chain(std::iter::once(hi))
        .collect();
    b.dedup();
    b
}

/// `(1/Γ(α)) ∫_0^x (x − y)^(α−1) K(x, y) v(y) dy` for a `v` that is smooth
/// between the given breakpoints and zero outside `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn abel_reference(
    alpha: f64,
    kernel: &KernelSpec,
    v: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    x: f64,
    tol: f64,
) -> f64 {
    let top = hi.min(x);
    if top <= lo {
        return 0.0;
    }
    // y = x − w^(1/α), (x − y)^(α−1) dy = dw / α
    let p = 1.0 / alpha;
    let mut ws: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&y| y > lo && y < top)
        .chain([lo, top])
        .map(|y| (x - y).max(0.0).powf(alpha))
        .collect();
    ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ws.dedup();
    let inner = |w: f64| {
        let y = x - w.powf(p);
        kernel.eval(x, y) * v(y)
    };
    piecewise(&inner, &ws, tol) / (alpha * gamma(alpha))
}

/// `a_ij = ∫ b_i(x) (A b_j)(x) dx` by nested adaptive quadrature.
pub fn matrix_entry(space: &FeSpace, alpha: f64, kernel: &KernelSpec, i: usize, j: usize, tol: f64) -> f64 {
    let (xi_lo, xi_hi) = space.support_interval(i).unwrap();
    let (yj_lo, yj_hi) = space.support_interval(j).unwrap();
    if yj_lo >= xi_hi {
        return 0.0;
    }
    let y_breaks = mesh_breaks(space, yj_lo, yj_hi);
    let bj = |y: f64| space.eval_basis(j, y.clamp(0.0, 1.0)).unwrap();
    let outer = |x: f64| {
        let bi = space.eval_basis(i, x).unwrap();
        if bi == 0.0 {
            return 0.0;
        }
        bi * abel_reference(alpha, kernel, &bj, yj_lo, yj_hi, &y_breaks, x, 0.01 * tol)
    };
    piecewise(&outer, &mesh_breaks(space, xi_lo, xi_hi), tol)
}

/// `r_i = ∫ g b_i`.
pub fn load_entry(space: &FeSpace, g: &dyn Fn(f64) -> f64, i: usize, tol: f64) -> f64 {
    let (lo, hi) = space.support_interval(i).unwrap();
    let f = |x: f64| g(x) * space.eval_basis(i, x).unwrap();
    piecewise(&f, &mesh_breaks(space, lo, hi), tol)
}

//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::num::{lit, Real};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self { abs_tol: lit(1e-10), rel_tol: T::zero(), max_subdivisions: 10_000 }
    }
}

impl<T: Real> QuadOptions<T> {
    pub fn tol(abs_tol: T, rel_tol: T) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub subdivisions: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F>(f: &F, a: T, b: T) -> Result<Piece<T>>
where
    F: Fn(T) -> Result<T>,
{
    let half = lit::<T>(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c)?;
    let mut k = fc * lit(WGK[7]);
    let mut g = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = h * lit(XGK[j]);
        let s = f(c - dx)? + f(c + dx)?;
        k = k + s * lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * lit(WG[j / 2]);
        }
    }
    let value = k * h;
    let error = ((k - g) * h).abs();
    if !value.is_finite() {
        return Err(Error::Precision(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Piece { a, b, value, error })
}

/// ∫ₐᵇ f with a fallible integrand.
pub fn try_integrate<T: Real, F>(f: F, a: T, b: T, opts: &QuadOptions<T>) -> Result<QuadResult<T>>
where
    F: Fn(T) -> Result<T>,
{
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: T::zero(), subdivisions: 0 });
    }
    let first = kronrod(&f, a, b)?;
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut count = 1usize;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult { value: total, error: err, subdivisions: count });
        }
        if count >= opts.max_subdivisions {
            return Err(Error::Precision(format!(
                "quadrature on [{a}, {b}] stalled at error {err} after {count} subdivisions"
            )));
        }
        let worst = heap.pop().expect("heap holds every piece");
        let mid = (worst.a + worst.b) * lit(0.5);
        let l = kronrod(&f, worst.a, mid)?;
        let r = kronrod(&f, mid, worst.b)?;
        total = total - worst.value + l.value + r.value;
        err = err - worst.error + l.error + r.error;
        heap.push(l);
        heap.push(r);
        count += 1;
        // refresh the running sums occasionally to shed accumulated rounding
        if count % 256 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// ∫ₐᵇ f.
pub fn integrate<T: Real, F>(f: F, a: T, b: T, opts: &QuadOptions<T>) -> Result<QuadResult<T>>
where
    F: Fn(T) -> T,
{
    try_integrate(|x| Ok(f(x)), a, b, opts)
}

/// ∫ₐ^∞ f through x = a + t/(1−t).
pub fn try_integrate_to_infinity<T: Real, F>(f: F, a: T, opts: &QuadOptions<T>) -> Result<QuadResult<T>>
where
    F: Fn(T) -> Result<T>,
{
    try_integrate(
        |t: T| {
            let one_m = T::one() - t;
            let x = a + t / one_m;
            let v = f(x)?;
            if v == T::zero() {
                Ok(v)
            } else {
                Ok(v / (one_m * one_m))
            }
        },
        T::zero(),
        T::one(),
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x: f64| x.powi(7) - 3.0 * x * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - (32.0 - 8.0)).abs() < 1e-13);
        assert_eq!(r.subdivisions, 1);
    }

    #[test]
    fn log_singularity() {
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, &QuadOptions::tol(1e-12, 0.0)).unwrap();
        assert!((r.value + 1.0).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let r = try_integrate_to_infinity(|x: f64| Ok((-x * x).exp()), 0.0, &QuadOptions::tol(1e-13, 0.0)).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn stalls_report_precision_error() {
        let opts = QuadOptions { abs_tol: 1e-30, rel_tol: 0.0, max_subdivisions: 8 };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &opts);
        assert!(matches!(r, Err(Error::Precision(_))));
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = try_integrate(|_x: f64| Err(Error::Domain("x".into())), 0.0, 1.0, &QuadOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}

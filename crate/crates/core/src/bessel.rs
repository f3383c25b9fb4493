//! Bessel functions of the first kind for integer order.

use crate::error::{invalid, Result};

pub const MAX_ARGUMENT: f64 = 50.0;

/// `J_0(x) .. J_nmax(x)` by Miller's downward recurrence normalized with
/// `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(invalid("x", format!("|x| must not exceed {MAX_ARGUMENT}")));
    }
    let mut out = vec![0.0; nmax + 1];
    let ax = x.abs();
    if ax == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let top = (nmax as f64).max(ax);
    let mut start = (top + 20.0 + 12.0 * top.sqrt()) as usize;
    start += start % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (0..start).rev() {
        let prev = 2.0 * (k + 1) as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    for (n, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    Ok(out)
}

pub fn bessel_j(n: usize, x: f64) -> Result<f64> {
    Ok(bessel_j_upto(n, x)?[n])
}

/// `k`-th positive zero of `J_n` (`k >= 1`), located by bracketing and bisection.
pub fn bessel_zero(n: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "zeros are counted from 1"));
    }
    let f = |x: f64| bessel_j(n, x);
    let step = 0.05;
    let mut a = step;
    let mut fa = f(a)?;
    let mut found = 0;
    while a + step <= MAX_ARGUMENT {
        let b = a + step;
        let fb = f(b)?;
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == k {
                return bisect(f, a, b);
            }
        }
        a = b;
        fa = fb;
    }
    Err(invalid("k", format!("zero {k} of J_{n} lies beyond {MAX_ARGUMENT}")))
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(a);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

//! Numerical integration: adaptive Simpson on finite intervals and
//! Gauss-Hermite rules for Gaussian expectations.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]`, splitting at `breaks` (points outside the
/// interval are ignored). Each piece is refined until its Richardson error
/// estimate falls below `rel_tol` times the running magnitude.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], rel_tol: f64) -> Result<f64> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.extend(inner);
    pts.push(b);

    // coarse Simpson estimates fix one absolute tolerance for the whole integral
    let pieces: Vec<[f64; 5]> = pts
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            [a, b, fa, fm, fb]
        })
        .collect();
    let coarse: f64 = pieces
        .iter()
        .map(|&[a, b, fa, fm, fb]| ((b - a) / 6.0 * (fa + 4.0 * fm + fb)).abs())
        .sum();
    let tol = rel_tol * coarse.max(f64::MIN_POSITIVE);

    let mut total = 0.0;
    for &[a, b, fa, fm, fb] in &pieces {
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += adapt(&f, a, b, fa, fm, fb, whole, tol, 0)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Numerical(format!(
            "adaptive quadrature did not converge on [{a}, {b}]"
        )));
    }
    Ok(adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?
        + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?)
}

/// Gauss-Hermite rule of a given order for the weight `exp(-x^2)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on the orthonormal Hermite recurrence,
    /// seeded with the usual asymptotic guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// `E[f(X)]` for `X ~ N(0, sigma^2)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, sigma: f64, mut f: F) -> f64 {
        let s = std::f64::consts::SQRT_2 * sigma;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(s * x))
            .sum::<f64>()
            / PI.sqrt()
    }

    /// Like [`expect`](Self::expect) for an even integrand: evaluates `f`
    /// once per node pair `+-x`.
    pub fn expect_even<F: FnMut(f64) -> f64>(&self, sigma: f64, mut f: F) -> f64 {
        let s = std::f64::consts::SQRT_2 * sigma;
        let n = self.nodes.len();
        let mut acc = 0.0;
        for i in 0..n.div_ceil(2) {
            let x = self.nodes[i];
            let w = if n - 1 - i == i {
                self.weights[i]
            } else {
                2.0 * self.weights[i]
            };
            acc += w * f(s * x.abs());
        }
        acc / PI.sqrt()
    }
}

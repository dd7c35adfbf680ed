//! Slow reference evaluators used only by tests.
//!
//! Nothing here calls the crate's FFT or kernel code: band-limited data are
//! interpolated by a naive DFT onto a finer grid, and singular integrals are
//! evaluated by singularity subtraction plus the plain trapezoid rule.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Trigonometric interpolant of samples on the uniform grid α_j = 2πj/N.
pub struct Trig {
    /// (k, c_k) for k = −N/2..N/2, the Nyquist term split symmetrically.
    terms: Vec<(f64, Complex64)>,
}

impl Trig {
    pub fn new(samples: &[Complex64]) -> Self {
        let n = samples.len();
        let half = n as i64 / 2;
        let mut terms = Vec::with_capacity(n + 1);
        for k in -half..=half {
            let mut c = Complex64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                let a = 2.0 * PI * j as f64 / n as f64;
                c += v * Complex64::from_polar(1.0, -(k as f64) * a);
            }
            c /= n as f64;
            if k.abs() == half {
                c *= 0.5;
            }
            terms.push((k as f64, c));
        }
        Self { terms }
    }

    pub fn real(samples: &[f64]) -> Self {
        Self::new(&samples.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        self.terms.iter().map(|&(k, c)| c * Complex64::from_polar(1.0, k * alpha)).sum()
    }

    pub fn deriv(&self, alpha: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(k, c)| c * I * k * Complex64::from_polar(1.0, k * alpha))
            .sum()
    }

    pub fn mean(&self) -> Complex64 {
        self.terms.iter().find(|t| t.0 == 0.0).unwrap().1
    }
}

/// Curve sampled on a fine grid of `m` nodes for reference quadrature.
pub struct DenseCurve {
    pub m: usize,
    pub length: f64,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_alpha: Vec<f64>,
    /// ξ − α, periodic.
    pub periodic: Vec<Complex64>,
    pub xi_beta: Vec<Complex64>,
}

impl DenseCurve {
    /// `theta` holds N coarse samples; the fine grid has `refine·N` nodes.
    pub fn new(theta: &[f64], length: f64, refine: usize) -> Self {
        let n = theta.len();
        let m = n * refine;
        let interp = Trig::real(theta);
        let alpha: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
        let th: Vec<f64> = alpha.iter().map(|&a| interp.eval(a).re).collect();
        let th_a: Vec<f64> = alpha.iter().map(|&a| interp.deriv(a).re).collect();
        let scale = length / (2.0 * PI);
        let tangent: Vec<Complex64> = th.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();

        // Antiderivative of e^{iθ} through its fine-grid Fourier series.
        let series = Trig::new(&tangent);
        let c0 = series.mean();
        let periodic = alpha
            .iter()
            .map(|&a| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(k, c) in &series.terms {
                    if k != 0.0 {
                        acc += c * (Complex64::from_polar(1.0, k * a) - 1.0) / (I * k);
                    }
                }
                scale * acc + (scale * c0 - 1.0) * a
            })
            .collect();
        let xi_beta = tangent.iter().map(|t| scale * t).collect();
        Self {
            m,
            length,
            alpha,
            theta: th,
            theta_alpha: th_a,
            periodic,
            xi_beta,
        }
    }

    pub fn chord(&self, j: usize, k: usize) -> Complex64 {
        self.periodic[j] - self.periodic[k] + (self.alpha[j] - self.alpha[k])
    }

    pub fn cot(&self, j: usize, k: usize) -> Complex64 {
        let z = 0.5 * self.chord(j, k);
        z.cos() / z.sin()
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    /// Fine-grid index of coarse node j.
    pub fn fine(&self, j: usize, n: usize) -> usize {
        j * (self.m / n)
    }

    /// 𝔥f at the coarse nodes via 𝔥f(α) = (1/2πi)∫(f(β) − f(α))ξ_β cot dβ,
    /// using 𝔥1 = 0.
    pub fn cauchy(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        let interp = Trig::new(f);
        let fv: Vec<Complex64> = self.alpha.iter().map(|&a| interp.eval(a)).collect();
        let fd: Vec<Complex64> = self.alpha.iter().map(|&a| interp.deriv(a)).collect();
        (0..n)
            .map(|jc| {
                let j = self.fine(jc, n);
                let mut acc = -2.0 * fd[j];
                for k in 0..self.m {
                    if k != j {
                        acc += (fv[k] - fv[j]) * self.xi_beta[k] * self.cot(j, k);
                    }
                }
                acc * self.h() / (2.0 * PI * I)
            })
            .collect()
    }

    /// K* from its real kernel −(L/4π²)Im[e^{iθ(α)}cot((ξ(α) − ξ(β))/2)],
    /// diagonal −θ_α/2π.
    pub fn adjoint_double_layer(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let interp = Trig::real(f);
        let fv: Vec<f64> = self.alpha.iter().map(|&a| interp.eval(a).re).collect();
        (0..n)
            .map(|jc| {
                let j = self.fine(jc, n);
                let e = Complex64::from_polar(1.0, self.theta[j]);
                let mut acc = -self.theta_alpha[j] / (2.0 * PI) * fv[j];
                for k in 0..self.m {
                    if k != j {
                        acc += -self.length / (4.0 * PI * PI) * (e * self.cot(j, k)).im * fv[k];
                    }
                }
                acc * self.h()
            })
            .collect()
    }

    /// (1/2π)∫ f [ξ_β cot(Δξ/2) − cot(Δα/2)] dβ, diagonal −iθ_α f.
    pub fn remainder(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        let interp = Trig::new(f);
        let fv: Vec<Complex64> = self.alpha.iter().map(|&a| interp.eval(a)).collect();
        (0..n)
            .map(|jc| {
                let j = self.fine(jc, n);
                let mut acc = -I * self.theta_alpha[j] * fv[j];
                for k in 0..self.m {
                    if k != j {
                        let flat = 1.0 / (0.5 * (self.alpha[j] - self.alpha[k])).tan();
                        acc += fv[k] * (self.xi_beta[k] * self.cot(j, k) - flat);
                    }
                }
                acc * self.h() / (2.0 * PI)
            })
            .collect()
    }

    /// (1/2πi)∫(A(α) − A(β)) f_β cot dβ, diagonal 2A_α f_α/ξ_α.
    fn difference_kernel(&self, a: &Trig, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        let fi = Trig::new(f);
        let av: Vec<Complex64> = self.alpha.iter().map(|&x| a.eval(x)).collect();
        let ad: Vec<Complex64> = self.alpha.iter().map(|&x| a.deriv(x)).collect();
        let fd: Vec<Complex64> = self.alpha.iter().map(|&x| fi.deriv(x)).collect();
        (0..n)
            .map(|jc| {
                let j = self.fine(jc, n);
                let mut acc = 2.0 * ad[j] * fd[j] / self.xi_beta[j];
                for k in 0..self.m {
                    if k != j {
                        acc += (av[j] - av[k]) * fd[k] * self.cot(j, k);
                    }
                }
                acc * self.h() / (2.0 * PI * I)
            })
            .collect()
    }

    /// [W, 𝔥](f_s/ξ_s)
    pub fn commutator_velocity(&self, w: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        self.difference_kernel(&Trig::new(w), f)
    }

    /// [𝔥, e^{2iθ}](f_s/ξ_s), with e^{2iθ} taken from the fine-grid angle.
    pub fn commutator_exp2itheta(&self, f: &[Complex64]) -> Vec<Complex64> {
        // e^{2iθ} is not band-limited, so interpolate its fine samples.
        let e2: Vec<Complex64> = self.theta.iter().map(|&t| Complex64::from_polar(1.0, 2.0 * t)).collect();
        let series = Trig::new(&e2);
        self.difference_kernel(&series, f).into_iter().map(|v| -v).collect()
    }
}

/// Agreement of the oracle at `refine` and 2·`refine`, as an error estimate.
pub fn oracle_spread(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_diff_c(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn complexify(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Truncated Neumann series Σ_{m ≤ terms} (−s·A)^m b for (I + s·A)x = b.
pub fn neumann(apply: impl Fn(&[f64]) -> Vec<f64>, sign: f64, b: &[f64], terms: usize) -> Vec<f64> {
    let mut term = b.to_vec();
    let mut sum = b.to_vec();
    for _ in 0..terms {
        term = apply(&term).into_iter().map(|v| -sign * v).collect();
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    sum
}

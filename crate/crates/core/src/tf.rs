//! Rational transfer functions: continuous-time design, bilinear
//! discretization, and a transposed direct-form II realization.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `N(s)/D(s)` with coefficients in ascending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn poly_eval(p: &[f64], x: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    p
}

impl ContinuousTf {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        let num = trim(num);
        let den = trim(den);
        assert!(
            den.iter().any(|&c| c != 0.0),
            "transfer function denominator is zero"
        );
        Self { num, den }
    }

    pub fn gain(k: f64) -> Self {
        Self::new(vec![k], vec![1.0])
    }

    /// `1 / (tau s + 1)`.
    pub fn first_order_lag(tau: f64) -> Self {
        Self::new(vec![1.0], vec![1.0, tau])
    }

    /// `s / (s + 2π fc)`.
    pub fn high_pass(cutoff_hz: f64) -> Self {
        Self::new(vec![0.0, 1.0], vec![2.0 * PI * cutoff_hz, 1.0])
    }

    /// `2π fc / (s + 2π fc)`.
    pub fn low_pass(cutoff_hz: f64) -> Self {
        let w = 2.0 * PI * cutoff_hz;
        Self::new(vec![w], vec![w, 1.0])
    }

    /// `2π fd s / (s + 2π fd)`: a derivative that flattens out above `fd`.
    pub fn band_limited_derivative(cutoff_hz: f64) -> Self {
        let w = 2.0 * PI * cutoff_hz;
        Self::new(vec![0.0, w], vec![w, 1.0])
    }

    /// `k / (s + a)`.
    pub fn first_order(k: f64, a: f64) -> Self {
        Self::new(vec![k], vec![a, 1.0])
    }

    /// `k · 2ζω s / (s² + 2ζω s + ω²)`: unity-shaped band-pass peaking at `k`
    /// when `s = jω`.
    pub fn resonant(k: f64, omega: f64, damping: f64) -> Self {
        let bw = 2.0 * damping * omega;
        Self::new(vec![0.0, k * bw], vec![omega * omega, bw, 1.0])
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len().max(self.num.len()) - 1
    }

    pub fn series(&self, other: &Self) -> Self {
        Self::new(
            poly_mul(&self.num, &other.num),
            poly_mul(&self.den, &other.den),
        )
    }

    pub fn parallel(&self, other: &Self) -> Self {
        let num = poly_add(
            &poly_mul(&self.num, &other.den),
            &poly_mul(&other.num, &self.den),
        );
        Self::new(num, poly_mul(&self.den, &other.den))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.num.iter().map(|c| c * k).collect(), self.den.clone())
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Response at `s = j 2π f`. `None` when `f` sits on a pole.
    pub fn freq_response(&self, freq_hz: f64) -> Option<Complex64> {
        let s = Complex64::new(0.0, 2.0 * PI * freq_hz);
        let d = poly_eval(&self.den, s);
        if d.norm() == 0.0 {
            None
        } else {
            Some(poly_eval(&self.num, s) / d)
        }
    }

    /// Tustin discretization `s = (2/dt)(z - 1)/(z + 1)`, no prewarping.
    pub fn bilinear(&self, dt: f64) -> DiscreteTf {
        let n = self.order();
        let c = 2.0 / dt;
        // Multiply N and D through by (z + 1)^n; the results are polynomials in
        // z with ascending coefficients.
        let map = |p: &[f64]| -> Vec<f64> {
            let mut acc = vec![0.0; n + 1];
            for (i, &coef) in p.iter().enumerate() {
                if coef == 0.0 {
                    continue;
                }
                let mut term = vec![coef * c.powi(i as i32)];
                for _ in 0..i {
                    term = poly_mul(&term, &[-1.0, 1.0]);
                }
                for _ in 0..(n - i) {
                    term = poly_mul(&term, &[1.0, 1.0]);
                }
                acc = poly_add(&acc, &term);
            }
            acc
        };
        let bz = map(&self.num);
        let az = map(&self.den);
        // Coefficient of z^(n-k) becomes the z^-k coefficient.
        let b: Vec<f64> = (0..=n).map(|k| bz[n - k]).collect();
        let a: Vec<f64> = (0..=n).map(|k| az[n - k]).collect();
        DiscreteTf::new(b, a)
    }
}

/// `B(z⁻¹)/A(z⁻¹)` realized in transposed direct form II.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTf {
    b: Vec<f64>,
    a: Vec<f64>,
    state: Vec<f64>,
}

impl DiscreteTf {
    /// Coefficients in ascending powers of `z⁻¹`; normalized so `a[0] = 1`.
    pub fn new(mut b: Vec<f64>, mut a: Vec<f64>) -> Self {
        assert!(!a.is_empty() && a[0] != 0.0, "a[0] must be non-zero");
        let n = a.len().max(b.len());
        b.resize(n, 0.0);
        a.resize(n, 0.0);
        let a0 = a[0];
        b.iter_mut().for_each(|c| *c /= a0);
        a.iter_mut().for_each(|c| *c /= a0);
        Self {
            b,
            a,
            state: vec![0.0; n - 1],
        }
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }

    /// Sets the internal state to the steady state reached under a constant
    /// input `x`, so the next output equals the DC response.
    pub fn prime(&mut self, x: f64) {
        let n = self.state.len();
        if n == 0 {
            return;
        }
        let sa: f64 = self.a.iter().sum();
        let sb: f64 = self.b.iter().sum();
        let y = if sa != 0.0 { sb / sa * x } else { 0.0 };
        // In steady state s_i = sum_{j>i} (b_j x - a_j y).
        for i in 0..n {
            self.state[i] = (i + 1..=n).map(|j| self.b[j] * x - self.a[j] * y).sum();
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.state.first().copied().unwrap_or(0.0);
        let n = self.state.len();
        for i in 0..n {
            let next = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = next + self.b[i + 1] * x - self.a[i + 1] * y;
        }
        y
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Response at `z = e^{j 2π f dt}`.
    pub fn freq_response(&self, freq_hz: f64, dt: f64) -> Complex64 {
        let zinv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz * dt);
        poly_eval(&self.b, zinv) / poly_eval(&self.a, zinv)
    }

    /// Roots of `z^n A(z⁻¹)`.
    pub fn poles(&self) -> Vec<Complex64> {
        let n = self.a.len() - 1;
        match n {
            0 => Vec::new(),
            1 => vec![Complex64::new(-self.a[1], 0.0)],
            _ => {
                // Companion matrix of z^n + a1 z^(n-1) + ... + an.
                let mut m = DMatrix::<f64>::zeros(n, n);
                for j in 0..n {
                    m[(0, j)] = -self.a[j + 1];
                }
                for i in 1..n {
                    m[(i, i - 1)] = 1.0;
                }
                m.complex_eigenvalues().iter().copied().collect()
            }
        }
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }
}

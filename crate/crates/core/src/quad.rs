//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Works for scalar and matrix-valued integrands; a matrix integrand shares
//! one set of nodes across all of its entries, so entries that are exact
//! multiples of each other integrate to exact multiples (up to rounding).

use nalgebra::DMatrix;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be accumulated by the quadrature.
pub trait QuadValue: Clone {
    fn zeros_like(&self) -> Self;
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn max_abs(&self) -> f64;
}

impl QuadValue for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for DMatrix<f64> {
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
    fn max_abs(&self) -> f64 {
        self.amax()
    }
}

/// Adaptive quadrature settings.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

fn kronrod<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc.zeros_like();
    let mut g = fc.zeros_like();
    k.axpy(WGK[7], &fc);
    g.axpy(WG[3], &fc);
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f(center - half * x);
        let f2 = f(center + half * x);
        k.axpy(WGK[j], &f1);
        k.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            g.axpy(WG[j / 2], &f1);
            g.axpy(WG[j / 2], &f2);
        }
    }
    let mut diff = k.clone();
    diff.axpy(-1.0, &g);
    let mut value = k.zeros_like();
    value.axpy(half, &k);
    (value, (half * diff.max_abs()).abs())
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`; a reversed interval yields the negated integral.
    /// Returns the estimate and its error bound.
    pub fn integrate<V, F>(&self, f: F, a: f64, b: f64) -> (V, f64)
    where
        V: QuadValue,
        F: Fn(f64) -> V,
    {
        if b < a {
            let (v, e) = self.integrate(f, b, a);
            let mut neg = v.zeros_like();
            neg.axpy(-1.0, &v);
            return (neg, e);
        }
        let (value, error) = kronrod(&f, a, b);
        if a == b {
            return (value.zeros_like(), 0.0);
        }
        let mut segments = vec![Segment { a, b, value, error }];
        loop {
            let mut total = segments[0].value.zeros_like();
            let mut err = 0.0;
            for s in &segments {
                total.axpy(1.0, &s.value);
                err += s.error;
            }
            let tol = self.abs_tol.max(self.rel_tol * total.max_abs());
            if err <= tol || segments.len() >= self.max_intervals {
                if err > tol {
                    log::warn!("quadrature on [{a}, {b}] stopped at error {err:e} > {tol:e}");
                }
                return (total, err);
            }
            let worst = segments
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let s = segments.swap_remove(worst);
            let mid = 0.5 * (s.a + s.b);
            if mid <= s.a || mid >= s.b {
                // interval cannot be split further in floating point
                segments.push(Segment { error: 0.0, ..s });
                continue;
            }
            let (v1, e1) = kronrod(&f, s.a, mid);
            let (v2, e2) = kronrod(&f, mid, s.b);
            segments.push(Segment {
                a: s.a,
                b: mid,
                value: v1,
                error: e1,
            });
            segments.push(Segment {
                a: mid,
                b: s.b,
                value: v2,
                error: e2,
            });
        }
    }
}

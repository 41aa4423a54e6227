//! Small dense helpers: 2×2 complex matrices, binary quadratic forms and
//! low-degree complex polynomials.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[C64; 2]; 2];

pub fn det(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Mat2) -> C64 {
    m[0][0] + m[1][1]
}

/// Adjugate, so that `adj(m) * m = det(m) * I`.
pub fn adj(m: &Mat2) -> Mat2 {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn scale(m: &Mat2, s: C64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d.norm() == 0.0 || !d.is_finite() {
        return None;
    }
    Some(scale(&adj(m), d.inv()))
}

pub fn identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn frobenius(m: &Mat2) -> f64 {
    m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ratio of largest to smallest singular value.
pub fn condition_number(m: &Mat2) -> f64 {
    let f2 = frobenius(m).powi(2);
    let d = det(m).norm();
    if d == 0.0 {
        return f64::INFINITY;
    }
    // s1^2 + s2^2 = f2, s1 s2 = d
    let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
    let s1sq = 0.5 * (f2 + disc);
    s1sq / d
}

/// Splits a rank-one matrix into `r sᵀ`, taking the largest-modulus column
/// as `r`.
pub fn rank_one_factors(m: &Mat2) -> ([C64; 2], [C64; 2]) {
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            if m[i][j].norm() > best {
                best = m[i][j].norm();
                bi = i;
                bj = j;
            }
        }
    }
    let r = [m[0][bj], m[1][bj]];
    let pivot = m[bi][bj];
    let s = [m[bi][0] / pivot, m[bi][1] / pivot];
    (r, s)
}

/// Invertible matrix sending `v` to `e0`. The completing basis vector is the
/// standard basis vector orthogonal to the dominant entry of `v`.
pub fn map_to_e0(v: &[C64; 2]) -> Mat2 {
    let k = if v[0].norm() >= v[1].norm() { 0 } else { 1 };
    let mut other = [ZERO; 2];
    other[1 - k] = ONE;
    let cols = [[v[0], other[0]], [v[1], other[1]]];
    inverse(&cols).expect("completed basis is invertible when v is nonzero")
}

/// Singular value decomposition `m = Σ σ_k u_k v_kᵀ` with `σ₁ ≥ σ₂`.
/// Returns `(sigma, u_columns, v_columns)` where the right factors are
/// already conjugated so that `m[i][j] = Σ_k σ_k u_k[i] v_k[j]`.
pub fn svd2(m: &Mat2) -> ([f64; 2], [[C64; 2]; 2], [[C64; 2]; 2]) {
    let nm = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    let svd = nm.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order = [0usize, 1];
    if svd.singular_values[1] > svd.singular_values[0] {
        order = [1, 0];
    }
    let mut sigma = [0.0; 2];
    let mut us = [[ZERO; 2]; 2];
    let mut vs = [[ZERO; 2]; 2];
    for (slot, &k) in order.iter().enumerate() {
        sigma[slot] = svd.singular_values[k];
        vs[slot] = [vt[(k, 0)], vt[(k, 1)]];
    }
    // left vectors from m v̄, which stays consistent with the right vectors
    // on rank-deficient input
    for slot in 0..2 {
        let v = vs[slot];
        let mv = [m[0][0] * v[0].conj() + m[0][1] * v[1].conj(), m[1][0] * v[0].conj() + m[1][1] * v[1].conj()];
        us[slot] = if sigma[slot] > 1e-14 * sigma[0] && sigma[slot] > 0.0 {
            [mv[0] / sigma[slot], mv[1] / sigma[slot]]
        } else if slot == 1 {
            [-us[0][1].conj(), us[0][0].conj()]
        } else {
            [ONE, ZERO]
        };
    }
    (sigma, us, vs)
}

/// Projective roots `(x : y)` of the binary quadratic form
/// `a x² + b x y + c y²`. Returns `None` when the form vanishes identically
/// relative to `tol`.
pub fn binary_quadratic_roots(a: C64, b: C64, c: C64, tol: f64) -> Option<[(C64, C64); 2]> {
    let scale = a.norm().max(b.norm()).max(c.norm());
    if scale <= tol {
        return None;
    }
    if a.norm().max(c.norm()) <= tol * scale {
        return Some([(ONE, ZERO), (ZERO, ONE)]);
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    // stable pair of roots of t² coefficient form, solved in whichever
    // affine chart has the larger leading coefficient
    if a.norm() >= c.norm() {
        // roots t = x/y with y = 1
        let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
        let t1 = q / a;
        let t2 = if q.norm() > 0.0 { c / q } else { t1 };
        Some([(t1, ONE), (t2, ONE)])
    } else {
        // roots s = y/x with x = 1: c s² + b s + a = 0
        let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
        let s1 = q / c;
        let s2 = if q.norm() > 0.0 { a / q } else { s1 };
        Some([(ONE, s1), (ONE, s2)])
    }
}

/// Dense complex polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    /// `c0 + c1 λ`
    pub fn linear(c0: C64, c1: C64) -> Self {
        Poly(vec![c0, c1])
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![ZERO; n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-ONE))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly(vec![]);
        }
        let mut out = vec![ZERO; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.0.iter().rev().fold(ZERO, |acc, c| acc * x + c)
    }

    pub fn max_coeff(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Degree after dropping leading coefficients below `tol · max|c|`.
    pub fn effective_degree(&self, tol: f64) -> Option<usize> {
        let m = self.max_coeff();
        if m == 0.0 {
            return None;
        }
        self.0.iter().rposition(|c| c.norm() > tol * m)
    }

    /// All roots, via Durand–Kerner iteration followed by Newton polishing.
    /// Leading coefficients below `tol · max|c|` are treated as zero.
    pub fn roots(&self, tol: f64) -> Vec<C64> {
        let Some(deg) = self.effective_degree(tol) else {
            return vec![];
        };
        if deg == 0 {
            return vec![];
        }
        let lead = self.0[deg];
        let monic: Vec<C64> = self.0[..=deg].iter().map(|c| c / lead).collect();
        let p = Poly(monic);
        // seeds on a circle sized by the geometric mean of the root moduli
        let radius = p.0[0].norm().powf(1.0 / deg as f64).max(1e-3);
        let seed = C64::new(0.4, 0.9);
        let mut z: Vec<C64> = (0..deg).map(|k| seed.powu(k as u32 + 1) * radius).collect();
        for _ in 0..2000 {
            let mut delta: f64 = 0.0;
            for i in 0..deg {
                let mut denom = ONE;
                for j in 0..deg {
                    if i != j {
                        denom *= z[i] - z[j];
                    }
                }
                if denom.norm() == 0.0 {
                    denom = C64::new(1e-300, 0.0);
                }
                let step = p.eval(z[i]) / denom;
                z[i] -= step;
                delta = delta.max(step.norm() / (1.0 + z[i].norm()));
            }
            if delta < 1e-15 {
                break;
            }
        }
        let dp = p.derivative();
        for r in z.iter_mut() {
            for _ in 0..3 {
                let d = dp.eval(*r);
                if d.norm() == 0.0 {
                    break;
                }
                let step = p.eval(*r) / d;
                if !step.is_finite() {
                    break;
                }
                *r -= step;
            }
        }
        z
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect())
    }
}

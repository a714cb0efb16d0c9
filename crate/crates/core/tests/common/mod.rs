//! Exact trigonometric arithmetic over the rationals.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::Ratio;

pub type Q = Ratio<i128>;

/// `Σ aₖ sin kx + bₖ cos kx` plus a constant, with rational coefficients.
/// Keys are `(k, 0)` for `sin kx`, `(k, 1)` for `cos kx`, `(0, 1)` for 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trig(pub BTreeMap<(u32, u8), Q>);

fn q(n: i128) -> Q {
    Q::from_integer(n)
}

impl Trig {
    pub fn sin(k: u32) -> Self {
        Self::term(k, 0, q(1))
    }

    pub fn cos(k: u32) -> Self {
        Self::term(k, 1, q(1))
    }

    fn term(k: u32, kind: u8, c: Q) -> Self {
        let mut t = Trig::default();
        t.add(k as i64, kind, c);
        t
    }

    /// Add `c·sin(kx)` or `c·cos(kx)` for a possibly negative `k`.
    fn add(&mut self, k: i64, kind: u8, c: Q) {
        let (k, c) = match (k < 0, kind) {
            (true, 0) => (-k, -c),
            (true, _) => (-k, c),
            _ => (k, c),
        };
        if kind == 0 && k == 0 {
            return;
        }
        let e = self.0.entry((k as u32, kind)).or_insert(q(0));
        *e += c;
        if *e == q(0) {
            self.0.remove(&(k as u32, kind));
        }
    }

    pub fn mul(&self, other: &Trig) -> Trig {
        let half = Q::new(1, 2);
        let mut out = Trig::default();
        for (&(a, ka), &ca) in &self.0 {
            for (&(b, kb), &cb) in &other.0 {
                let (a, b) = (a as i64, b as i64);
                let c = ca * cb * half;
                match (ka, kb) {
                    (0, 0) => {
                        out.add(a - b, 1, c);
                        out.add(a + b, 1, -c);
                    }
                    (1, 1) => {
                        out.add(a - b, 1, c);
                        out.add(a + b, 1, c);
                    }
                    (0, _) => {
                        out.add(a + b, 0, c);
                        out.add(a - b, 0, c);
                    }
                    _ => {
                        out.add(a + b, 0, c);
                        out.add(b - a, 0, c);
                    }
                }
            }
        }
        out
    }

    pub fn derivative(&self) -> Trig {
        let mut out = Trig::default();
        for (&(k, kind), &c) in &self.0 {
            let kq = q(k as i128);
            if kind == 0 {
                out.add(k as i64, 1, c * kq);
            } else {
                out.add(k as i64, 0, -c * kq);
            }
        }
        out
    }

    /// `½ ∂ₓ(fg)`
    pub fn drift(&self, other: &Trig) -> Trig {
        let mut d = self.mul(other).derivative();
        for c in d.0.values_mut() {
            *c *= Q::new(1, 2);
        }
        d
    }

    pub fn max_mode(&self) -> u32 {
        self.0.keys().map(|&(k, _)| k).max().unwrap_or(0)
    }

    /// Coordinates in `(sin x, cos x, sin 2x, …)` up to mode `n`.
    pub fn coords(&self, n: u32) -> Vec<Q> {
        let mut v = vec![q(0); 2 * n as usize];
        for (&(k, kind), &c) in &self.0 {
            if k >= 1 && k <= n {
                v[2 * (k as usize - 1) + kind as usize] = c;
            }
        }
        v
    }

    /// Value at `x` in floating point.
    pub fn eval(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|(&(k, kind), c)| {
                let c = *c.numer() as f64 / *c.denom() as f64;
                if kind == 0 {
                    c * (k as f64 * x).sin()
                } else {
                    c * (k as f64 * x).cos()
                }
            })
            .sum()
    }
}

/// Row-reduced basis of the span of `vectors`.
pub fn echelon(vectors: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for v in vectors {
        let mut v = v.clone();
        for r in &rows {
            let pivot = r.iter().position(|c| *c != q(0)).expect("nonzero row");
            if v[pivot] != q(0) {
                let f = v[pivot] / r[pivot];
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= f * y;
                }
            }
        }
        if let Some(p) = v.iter().position(|c| *c != q(0)) {
            let lead = v[p];
            for x in v.iter_mut() {
                *x /= lead;
            }
            for r in rows.iter_mut() {
                if r[p] != q(0) {
                    let f = r[p];
                    for (x, y) in r.iter_mut().zip(&v) {
                        *x -= f * y;
                    }
                }
            }
            rows.push(v);
        }
    }
    rows
}

/// One exact ladder level: its basis as trig polynomials.
pub struct ExactLevel {
    pub basis: Vec<Trig>,
    pub width: u32,
}

impl ExactLevel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn contains(&self, t: &Trig) -> bool {
        if t.max_mode() > self.width {
            return false;
        }
        let mut all: Vec<Vec<Q>> = self.basis.iter().map(|b| b.coords(self.width)).collect();
        let before = echelon(&all).len();
        all.push(t.coords(self.width));
        echelon(&all).len() == before
    }

    /// Largest `m` with every `sin kx, cos kx`, `k ≤ m`, in the span.
    pub fn modes_covered(&self, cap: u32) -> u32 {
        (1..=cap)
            .take_while(|&k| self.contains(&Trig::sin(k)) && self.contains(&Trig::cos(k)))
            .count() as u32
    }
}

fn from_coords(v: &[Q]) -> Trig {
    let mut t = Trig::default();
    for (i, c) in v.iter().enumerate() {
        if *c != q(0) {
            t.add(i as i64 / 2 + 1, (i % 2) as u8, *c);
        }
    }
    t
}

/// Levels `0..=levels` of the ladder, computed without truncation.
pub fn exact_ladder(levels: usize) -> Vec<ExactLevel> {
    let mut out = vec![ExactLevel {
        basis: vec![Trig::sin(1), Trig::cos(1)],
        width: 1,
    }];
    for _ in 0..levels {
        let last = out.last().unwrap();
        let width = 2 * last.width;
        let mut gens: Vec<Vec<Q>> = last.basis.iter().map(|b| b.coords(width)).collect();
        for (a, fa) in last.basis.iter().enumerate() {
            for fb in &last.basis[a..] {
                gens.push(fa.drift(fb).coords(width));
            }
        }
        let basis = echelon(&gens).iter().map(|v| from_coords(v)).collect();
        out.push(ExactLevel { basis, width });
    }
    out
}

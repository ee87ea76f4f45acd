//! Banded LU factorization with partial pivoting.
//!
//! Row `r` stores columns `r - kl ..= r + kl + ku`, leaving room for the
//! fill-in that row interchanges create.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, w, data: vec![0.0; n * w] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku, "({r},{c}) outside band");
        r * self.w + c + self.kl - r
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(c + self.kl >= r && c <= r + self.ku, "({r},{c}) outside band");
        let k = self.at(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku {
            0.0
        } else {
            self.data[self.at(r, c)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.at(r, c)] * x[c]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.w);
        let mut piv = vec![0usize; n];
        let data = &mut self.data;
        let at = |r: usize, c: usize| r * w + c + kl - r;
        for k in 0..n {
            let imax = (k + kl).min(n - 1);
            let cmax = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = data[at(k, k)].abs();
            for i in k + 1..=imax {
                let v = data[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix(k));
            }
            piv[k] = p;
            if p != k {
                for c in k..=cmax {
                    data.swap(at(k, c), at(p, c));
                }
            }
            let pivot = data[at(k, k)];
            let rk = at(k, k);
            for i in k + 1..=imax {
                let ik = at(i, k);
                let l = data[ik] / pivot;
                data[ik] = l;
                if l != 0.0 {
                    let len = cmax - k;
                    let (src, dst) = if rk < ik {
                        let (a, b) = data.split_at_mut(ik);
                        (&a[rk + 1..rk + 1 + len], &mut b[1..1 + len])
                    } else {
                        unreachable!("row k precedes row i in storage")
                    };
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= l * s;
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, w, data: self.data, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.w);
        let at = |r: usize, c: usize| r * w + c + kl - r;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.data[at(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + kl + ku).min(n - 1);
            let row = &self.data[at(k, k)..=at(k, cmax)];
            let s: f64 = row[1..].iter().zip(&b[k + 1..=cmax]).map(|(a, x)| a * x).sum();
            b[k] = (b[k] - s) / row[0];
        }
    }
}

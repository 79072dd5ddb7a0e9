//! Periodic 2-D signals on integer lattices.
//!
//! A signal is stored as an `r x c` block together with its periodicity
//! lattice in Hermite normal form, spanned by `(r, s)` and `(0, c)` with
//! `0 <= s < c`. Sample `(a, b)` is found by subtracting `q = floor(a / r)`
//! copies of `(r, s)` and reducing the column modulo `c`. Shears and
//! quincunx downsampling map such a lattice to another one exactly, so
//! periodic extension stays consistent through the whole filter-bank tree.

/// Hermite-normal-form periodicity lattice, basis `(r, s)`, `(0, c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Lattice {
    pub r: i64,
    pub s: i64,
    pub c: i64,
}

/// 2x2 integer matrix, row-major.
pub(crate) type Mat2 = [[i64; 2]; 2];

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), if a >= 0 { 1 } else { -1 }, 0)
    } else {
        let (g, x, y) = egcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    egcd(a, b).0
}

impl Lattice {
    pub fn rect(rows: usize, cols: usize) -> Self {
        Self {
            r: rows as i64,
            s: 0,
            c: cols as i64,
        }
    }

    pub fn len(&self) -> usize {
        (self.r * self.c) as usize
    }

    fn gens(&self) -> [(i64, i64); 2] {
        [(self.r, self.s), (0, self.c)]
    }

    /// Hermite normal form of the lattice spanned by `gens`.
    fn from_gens(gens: &[(i64, i64)]) -> Self {
        let (mut r, mut t, mut c) = (0i64, 0i64, 0i64);
        for &(a, b) in gens {
            if a == 0 && b == 0 {
                continue;
            }
            if a == 0 {
                c = gcd(c, b.abs());
                continue;
            }
            if r == 0 {
                r = a;
                t = b;
                continue;
            }
            let (g, p, q) = egcd(r, a);
            let w = (a / g) * t - (r / g) * b;
            r = g;
            t = p * t + q * b;
            c = gcd(c, w.abs());
        }
        if r < 0 {
            r = -r;
            t = -t;
        }
        assert!(r > 0 && c > 0, "degenerate periodicity lattice");
        Self {
            r,
            s: t.rem_euclid(c),
            c,
        }
    }

    /// Lattice of `y[n] = x[M n]`.
    pub fn resampled(&self, m: &Mat2) -> Self {
        let mi = inverse(m);
        let g: Vec<(i64, i64)> = self
            .gens()
            .iter()
            .map(|&(a, b)| (mi[0][0] * a + mi[0][1] * b, mi[1][0] * a + mi[1][1] * b))
            .collect();
        Self::from_gens(&g)
    }

    /// Lattice of `y[n] = x[D n + e]` for diagonal `D = diag(d0, d1)`.
    pub fn downsampled(&self, d: (i64, i64)) -> Self {
        let [g1, g2] = self.gens();
        let cands = [
            g1,
            g2,
            (g1.0 + g2.0, g1.1 + g2.1),
            (2 * g1.0, 2 * g1.1),
            (2 * g2.0, 2 * g2.1),
        ];
        let g: Vec<(i64, i64)> = cands
            .iter()
            .filter(|(a, b)| a % d.0 == 0 && b % d.1 == 0)
            .map(|&(a, b)| (a / d.0, b / d.1))
            .collect();
        Self::from_gens(&g)
    }
}

/// Inverse of a unimodular integer matrix.
pub(crate) fn inverse(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    assert!(det == 1 || det == -1, "resampling matrix must be unimodular");
    [
        [m[1][1] * det, -m[0][1] * det],
        [-m[1][0] * det, m[0][0] * det],
    ]
}

/// Periodic signal: one period stored row-major on its HNF block.
#[derive(Clone, Debug)]
pub(crate) struct PSig {
    pub lat: Lattice,
    pub data: Vec<f64>,
}

impl PSig {
    pub fn new(lat: Lattice, data: Vec<f64>) -> Self {
        assert_eq!(lat.len(), data.len());
        Self { lat, data }
    }

    #[inline]
    pub fn get(&self, a: i64, b: i64) -> f64 {
        let Lattice { r, s, c } = self.lat;
        let q = a.div_euclid(r);
        let a2 = a - q * r;
        let b2 = (b - q * s).rem_euclid(c);
        self.data[(a2 * c + b2) as usize]
    }

    fn from_index_fn(lat: Lattice, mut f: impl FnMut(i64, i64) -> f64) -> Self {
        let mut data = Vec::with_capacity(lat.len());
        for i in 0..lat.r {
            for j in 0..lat.c {
                data.push(f(i, j));
            }
        }
        Self::new(lat, data)
    }

    /// `y[n] = x[M n]`.
    pub fn resample(&self, m: &Mat2) -> Self {
        let lat = self.lat.resampled(m);
        Self::from_index_fn(lat, |i, j| {
            self.get(m[0][0] * i + m[0][1] * j, m[1][0] * i + m[1][1] * j)
        })
    }

    /// `y[n] = x[D n + e]`.
    pub fn downsample(&self, d: (i64, i64), e: (i64, i64)) -> Self {
        let lat = self.lat.downsampled(d);
        Self::from_index_fn(lat, |i, j| self.get(d.0 * i + e.0, d.1 * j + e.1))
    }

    /// Interleave two polyphase components back onto lattice `lat`:
    /// coset `D Z^2` from `p0`, coset `D Z^2 + e` from `p1`.
    pub fn interleave(p0: &PSig, p1: &PSig, d: (i64, i64), e: (i64, i64), lat: Lattice) -> Self {
        Self::from_index_fn(lat, |i, j| {
            if i.rem_euclid(d.0) == 0 && j.rem_euclid(d.1) == 0 {
                p0.get(i.div_euclid(d.0), j.div_euclid(d.1))
            } else {
                let (a, b) = (i - e.0, j - e.1);
                debug_assert!(a.rem_euclid(d.0) == 0 && b.rem_euclid(d.1) == 0);
                p1.get(a.div_euclid(d.0), b.div_euclid(d.1))
            }
        })
    }

    /// Separable periodic filtering `out[n] = sum_k f[k] x[n - off + k]`
    /// along columns, then along rows.
    pub fn sep_filter(&self, f: &[f64], off: i64) -> Self {
        let Lattice { r, c, .. } = self.lat;
        let mut tmp = vec![0.0; self.data.len()];
        for i in 0..r {
            let row = &self.data[(i * c) as usize..((i + 1) * c) as usize];
            let out = &mut tmp[(i * c) as usize..((i + 1) * c) as usize];
            for j in 0..c {
                let mut acc = 0.0;
                for (k, &fk) in f.iter().enumerate() {
                    acc += fk * row[(j - off + k as i64).rem_euclid(c) as usize];
                }
                out[j as usize] = acc;
            }
        }
        let mid = PSig::new(self.lat, tmp);
        Self::from_index_fn(self.lat, |i, j| {
            let mut acc = 0.0;
            for (k, &fk) in f.iter().enumerate() {
                let a = i - off + k as i64;
                acc += fk
                    * if (0..r).contains(&a) {
                        mid.data[(a * c + j) as usize]
                    } else {
                        mid.get(a, j)
                    };
            }
            acc
        })
    }

    pub fn zip_with(&self, other: &PSig, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.lat, other.lat);
        Self::new(
            self.lat,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_of_rect_is_identity() {
        let l = Lattice::from_gens(&[(6, 0), (0, 4)]);
        assert_eq!(l, Lattice { r: 6, s: 0, c: 4 });
    }

    #[test]
    fn hnf_is_basis_independent() {
        // (4, 1), (0, 6) and the unimodular recombination (4, 7), (4, 1).
        let a = Lattice::from_gens(&[(4, 1), (0, 6)]);
        let b = Lattice::from_gens(&[(4, 7), (4, 1)]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 24);
    }

    #[test]
    fn get_respects_periodicity() {
        let lat = Lattice { r: 3, s: 2, c: 5 };
        let x = PSig::from_index_fn(lat, |i, j| (i * 10 + j) as f64);
        for a in -7..7 {
            for b in -9..9 {
                let v = x.get(a, b);
                assert_eq!(v, x.get(a + 3, b + 2));
                assert_eq!(v, x.get(a, b + 5));
            }
        }
    }

    #[test]
    fn resample_inverse_round_trips() {
        let lat = Lattice::rect(8, 6);
        let x = PSig::from_index_fn(lat, |i, j| (i * i + 3 * j) as f64);
        let m: Mat2 = [[1, 1], [0, 1]];
        let back = x.resample(&m).resample(&inverse(&m));
        assert_eq!(back.lat, lat);
        assert_eq!(back.data, x.data);
    }

    #[test]
    fn down_then_interleave_restores() {
        let lat = Lattice::rect(8, 8);
        let x = PSig::from_index_fn(lat, |i, j| (i * 8 + j) as f64);
        for (d, e) in [((2, 1), (1, 1)), ((2, 1), (1, 0)), ((1, 2), (1, 1)), ((1, 2), (0, 1))] {
            let p0 = x.downsample(d, (0, 0));
            let p1 = x.downsample(d, e);
            assert_eq!(p0.lat.len() * 2, lat.len());
            let y = PSig::interleave(&p0, &p1, d, e, lat);
            assert_eq!(y.data, x.data);
        }
    }
}

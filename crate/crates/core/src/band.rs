//! Symmetric banded matrices stored by lower diagonals.

#[derive(Debug, Clone)]
pub struct SymBand {
    pub n: usize,
    pub kd: usize,
    // a[i][j] for i - kd <= j <= i at data[i * (kd + 1) + (i - j)]
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> Self {
        SymBand {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.kd, "entry outside band");
        self.data[i * (self.kd + 1) + (i - j)] += v;
    }

    /// self - sigma * other
    pub fn shifted(&self, sigma: f64, other: &SymBand) -> SymBand {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - sigma * b)
            .collect();
        SymBand {
            n: self.n,
            kd: self.kd,
            data,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kd);
            for j in lo..=i {
                let a = self.data[i * (self.kd + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// LDL^T without pivoting; an exactly zero pivot is replaced by the smallest normal.
    pub fn ldl(&self) -> Ldl {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(kd);
            // row i of L times D
            let mut di = l[i * w];
            for k in lo..i {
                let lik = l[i * w + (i - k)];
                di -= lik * lik * d[k];
            }
            if di == 0.0 {
                di = f64::MIN_POSITIVE;
            }
            d[i] = di;
            let hi = (i + kd).min(n - 1);
            for j in i + 1..=hi {
                let mut v = l[j * w + (j - i)];
                let lo_j = j.saturating_sub(kd);
                for k in lo_j.max(lo)..i {
                    v -= l[j * w + (j - k)] * l[i * w + (i - k)] * d[k];
                }
                l[j * w + (j - i)] = v / di;
            }
        }
        Ldl { n, kd, l, d }
    }
}

pub struct Ldl {
    n: usize,
    kd: usize,
    l: Vec<f64>,
    pub d: Vec<f64>,
}

impl Ldl {
    /// Number of negative pivots, i.e. eigenvalues below the shift.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(kd);
            for k in lo..i {
                x[i] -= self.l[i * w + (i - k)] * x[k];
            }
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let hi = (i + kd).min(n - 1);
            for j in i + 1..=hi {
                x[i] -= self.l[j * w + (j - i)] * x[j];
            }
        }
        x
    }
}

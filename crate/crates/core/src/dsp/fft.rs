//! Iterative radix-2 FFT, enough for power spectra of short frames.

use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    rev: Vec<usize>,
}

impl Fft {
    /// `n` must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT size {n} is not a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let half = n / 2;
        let angle = |k: usize| -core::f64::consts::TAU * k as f64 / n as f64;
        Fft {
            n,
            cos: (0..half).map(|k| math::cos(angle(k))).collect(),
            sin: (0..half).map(|k| math::sin(angle(k))).collect(),
            rev,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform of `(re, im)`.
    pub fn transform(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        assert_eq!(re.len(), n);
        assert_eq!(im.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let (wr, wi) = (self.cos[k * step], self.sin[k * step]);
                    let a = start + k;
                    let b = a + len / 2;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }

    /// `|X_k|²` for `k = 0..=n/2` of a real signal zero-padded to `n`.
    pub fn power_spectrum(&self, signal: &[f64], re: &mut Vec<f64>, im: &mut Vec<f64>) -> Vec<f64> {
        re.clear();
        re.extend_from_slice(signal);
        re.resize(self.n, 0.0);
        im.clear();
        im.resize(self.n, 0.0);
        self.transform(re, im);
        (0..=self.n / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(n²) DFT.
    fn dft(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = x.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for k in 0..n {
            for (t, v) in x.iter().enumerate() {
                let a = -core::f64::consts::TAU * (k * t) as f64 / n as f64;
                re[k] += v * math::cos(a);
                im[k] += v * math::sin(a);
            }
        }
        (re, im)
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = crate::rng::SplitMix64::new(1);
        for n in [1usize, 2, 4, 8, 64, 256] {
            let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let (er, ei) = dft(&x);
            let mut re = x.clone();
            let mut im = vec![0.0; n];
            Fft::new(n).transform(&mut re, &mut im);
            for k in 0..n {
                assert!((re[k] - er[k]).abs() < 1e-9, "n={n} k={k}");
                assert!((im[k] - ei[k]).abs() < 1e-9, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn parseval() {
        let mut rng = crate::rng::SplitMix64::new(2);
        let x: Vec<f64> = (0..512).map(|_| rng.normal()).collect();
        let mut re = x.clone();
        let mut im = vec![0.0; 512];
        Fft::new(512).transform(&mut re, &mut im);
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum::<f64>() / 512.0;
        assert!((time - freq).abs() < 1e-8 * time);
    }
}

//! Forward complex FFT for the cube axes.
//!
//! Radix-2 decimation-in-time for power-of-two lengths, direct DFT otherwise.
//! Both paths use the same exact twiddle table, so results depend only on the
//! input and the length.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    /// `exp(-2πik/len)` for `k in 0..len`.
    twiddles: Vec<Complex64>,
    /// Empty unless `len` is a power of two.
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let twiddles = (0..len)
            .map(|k| {
                let angle = -2.0 * PI * (k as f64) / (len as f64);
                Complex64::new(Float::cos(angle), Float::sin(angle))
            })
            .collect();
        let bitrev = if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            (0..len)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect()
        } else {
            Vec::new()
        };
        Self { len, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, `X[k] = Σ x[n]·exp(-2πikn/N)`.
    pub fn process(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        if self.bitrev.is_empty() {
            self.direct(buf);
        } else {
            self.radix2(buf);
        }
    }

    fn radix2(&self, buf: &mut [Complex64]) {
        let n = self.len;
        for (i, &j) in self.bitrev.iter().enumerate() {
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for j in 0..half {
                    let w = self.twiddles[j * stride];
                    let t = w * buf[start + j + half];
                    let u = buf[start + j];
                    buf[start + j] = u + t;
                    buf[start + j + half] = u - t;
                }
            }
            size *= 2;
        }
    }

    fn direct(&self, buf: &mut [Complex64]) {
        let n = self.len;
        let input = buf.to_vec();
        for (k, out) in buf.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, x) in input.iter().enumerate() {
                acc += x * self.twiddles[(k * m) % n];
            }
            *out = acc;
        }
    }
}

/// Applies `plan` to every line of `data` along `axis` of a row-major tensor
/// with dimensions `shape`.
pub(crate) fn fft_along_axis(data: &mut [Complex64], shape: &[usize], axis: usize, plan: &FftPlan) {
    let len = shape[axis];
    debug_assert_eq!(plan.len(), len);
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    for o in 0..outer {
        let base = o * len * inner;
        for i in 0..inner {
            let offset = base + i;
            if inner == 1 {
                plan.process(&mut data[offset..offset + len]);
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = data[offset + k * inner];
            }
            plan.process(&mut line);
            for (k, value) in line.iter().enumerate() {
                data[offset + k * inner] = *value;
            }
        }
    }
}

/// Source index for output bin `k` of an FFT-shifted axis of length `n`
/// (zero frequency at bin `n / 2`).
#[inline]
pub(crate) fn shifted_source(k: usize, n: usize) -> usize {
    (k + n - n / 2) % n
}

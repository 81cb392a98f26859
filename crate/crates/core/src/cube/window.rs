use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{Error, Result};

/// Taper applied along the fast-time and slow-time axes before their FFTs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Window {
    #[default]
    Hanning,
    Rectangular,
}

impl Window {
    pub fn weights(self, n: usize) -> Result<Vec<f64>> {
        match self {
            Window::Hanning => hanning_weights(n),
            Window::Rectangular => {
                if n < 2 {
                    return Err(Error::Config(alloc::format!("window length {n} < 2")));
                }
                Ok(vec![1.0; n])
            }
        }
    }
}

/// Symmetric Hanning window `w[i] = 0.5·(1 − cos(2πi/(n−1)))`.
///
/// The second half is mirrored from the first so `w[i] == w[n−1−i]` holds
/// bit-for-bit.
pub fn hanning_weights(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Config(alloc::format!("window length {n} < 2")));
    }
    let denom = (n - 1) as f64;
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let value = 0.5 * (1.0 - Float::cos(2.0 * PI * i as f64 / denom));
        w[i] = value;
        w[n - 1 - i] = value;
    }
    Ok(w)
}

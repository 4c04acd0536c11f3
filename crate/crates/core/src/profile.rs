//! Parameter profiles and the derived integer scales `L`, `q = 1/ψ`, `z`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cut_matching::CmgParams;
use crate::error::{overflow, Error, Result};
use crate::expander::DecompParams;
use crate::sparse_cut::CutParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Practical,
    Theory,
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "practical" => Ok(ProfileKind::Practical),
            "theory" => Ok(ProfileKind::Theory),
            _ => Err(Error::InvalidArgument(format!("unknown profile {s:?}"))),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::Practical => "practical",
            ProfileKind::Theory => "theory",
        })
    }
}

/// Concrete constants for one graph size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub kind: ProfileKind,
    /// `φ_exp = 1/phi_den`.
    pub phi_den: i64,
    /// `δ_KRV = 1/delta_den`.
    pub delta_den: i64,
    pub rounds: u32,
    /// `ψ = 1/(L·phi_rand_den)`.
    pub phi_rand_den: i64,
    pub sketch_dim: usize,
    pub max_depth: u32,
    /// Expansion checked on small witnesses.
    pub phi_w_den: i64,
}

/// `⌈log₂ n⌉`, at least 1.
pub fn log2_ceil(n: usize) -> u32 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1)
}

impl Profile {
    pub fn new(kind: ProfileKind, n: usize) -> Self {
        let lg = log2_ceil(n) as i64;
        let lg2 = lg * lg;
        let lg3 = lg2 * lg;
        let sketch_dim = 8 + 4 * lg as usize;
        match kind {
            ProfileKind::Practical => Profile {
                kind,
                phi_den: 16,
                delta_den: 8,
                rounds: (4 * lg2) as u32,
                phi_rand_den: 16,
                sketch_dim,
                max_depth: (4 * lg3) as u32,
                phi_w_den: 8,
            },
            ProfileKind::Theory => Profile {
                kind,
                phi_den: lg3,
                delta_den: 64 * lg2,
                rounds: (4 * lg2) as u32,
                phi_rand_den: lg3 * lg2 * lg2,
                sketch_dim,
                max_depth: (4 * lg3) as u32,
                phi_w_den: 8 * lg3,
            },
        }
    }

    pub fn decomp(&self, scales: &Scales) -> DecompParams {
        DecompParams {
            cmg: CmgParams {
                phi_den: self.phi_den,
                delta_den: self.delta_den,
                rounds: self.rounds,
                sketch_dim: self.sketch_dim,
                cut: CutParams::new(scales.levels as i64),
            },
            max_depth: self.max_depth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Scales {
    /// `L = ⌈log_{10/9} c(E)⌉ + 1`.
    pub levels: u32,
    pub q: i64,
    /// `z = 200·L·q`.
    pub z: i64,
}

/// Smallest `k ≥ 0` with `(10/9)^k ≥ c`, up to float rounding at exact powers.
fn log_ten_ninths_ceil(c: i128) -> u32 {
    let mut k = 0u32;
    let mut ratio = c as f64;
    while ratio > 1.0 + 1e-12 {
        ratio *= 0.9;
        k += 1;
    }
    k
}

impl Scales {
    pub fn new(total_cap: i128, phi_rand_den: i64) -> Result<Self> {
        let levels = log_ten_ninths_ceil(total_cap.max(1)) + 1;
        let q = (levels as i64).checked_mul(phi_rand_den).ok_or_else(|| overflow("ψ denominator"))?;
        let z = q.checked_mul(200 * levels as i64).ok_or_else(|| overflow("z = 200L/ψ"))?;
        Ok(Scales { levels, q, z })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_count() {
        assert_eq!(Scales::new(1, 16).unwrap().levels, 1);
        // (10/9)^1 = 1.11 < 2 ≤ (10/9)^7 = 2.09.
        assert_eq!(Scales::new(2, 16).unwrap().levels, 8);
        assert_eq!(Scales::new(10, 1).unwrap().levels, 23);
        let s = Scales::new(10, 16).unwrap();
        assert_eq!(s.q, 23 * 16);
        assert_eq!(s.z, 200 * 23 * s.q);
    }

    #[test]
    fn exact_power_boundary() {
        assert_eq!(log_ten_ninths_ceil(1), 0);
        for c in 2..2000i128 {
            let k = log_ten_ninths_ceil(c);
            assert!((10f64 / 9.0).powi(k as i32) >= c as f64 * (1.0 - 1e-9));
            assert!((10f64 / 9.0).powi(k as i32 - 1) < c as f64);
        }
    }

    #[test]
    fn profiles() {
        let p = Profile::new(ProfileKind::Practical, 50);
        assert_eq!((p.phi_den, p.delta_den, p.rounds), (16, 8, 144));
        let t = Profile::new(ProfileKind::Theory, 50);
        assert_eq!(t.phi_den, 216);
        assert_eq!("theory".parse::<ProfileKind>().unwrap(), ProfileKind::Theory);
        assert!("fast".parse::<ProfileKind>().is_err());
    }

    #[test]
    fn huge_theory_scale_overflows_cleanly() {
        let t = Profile::new(ProfileKind::Theory, 1 << 20);
        assert!(Scales::new(i64::MAX as i128, t.phi_rand_den * 1_000_000_000).is_err());
    }
}

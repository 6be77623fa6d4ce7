//! Pairing backends usable by the schemes.
//!
//! Ciphertext material lives in the first source group (`G1`), key material
//! in the second (`G2`). Every pairing the schemes evaluate pairs one
//! ciphertext component with one key component, so an asymmetric pairing
//! is sufficient.

use std::fmt;
use std::str::FromStr;

use ark_ec::pairing::Pairing;

use crate::error::Error;

/// A pairing engine with a stable identifier for the container format.
pub trait Backend: Pairing {
    const CURVE: CurveId;
}

impl Backend for ark_bls12_381::Bls12_381 {
    const CURVE: CurveId = CurveId::Bls12_381;
}

impl Backend for ark_bn254::Bn254 {
    const CURVE: CurveId = CurveId::Bn254;
}

/// Default backend.
pub type Bls12 = ark_bls12_381::Bls12_381;
pub type Bn254 = ark_bn254::Bn254;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CurveId {
    Bls12_381 = 1,
    Bn254 = 2,
}

impl CurveId {
    pub const ALL: [CurveId; 2] = [CurveId::Bls12_381, CurveId::Bn254];

    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(CurveId::Bls12_381),
            2 => Some(CurveId::Bn254),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveId::Bls12_381 => "bls12-381",
            CurveId::Bn254 => "bn254",
        }
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bls12-381" | "bls12_381" | "bls12" => Ok(CurveId::Bls12_381),
            "bn254" => Ok(CurveId::Bn254),
            other => Err(Error::invalid(format!("unknown curve `{other}`"))),
        }
    }
}

/// Runs a generic body with `$E` bound to the backend named by a [`CurveId`].
#[macro_export]
macro_rules! with_backend {
    ($curve:expr, $E:ident => $body:expr) => {
        match $curve {
            $crate::backend::CurveId::Bls12_381 => {
                type $E = $crate::backend::Bls12;
                $body
            }
            $crate::backend::CurveId::Bn254 => {
                type $E = $crate::backend::Bn254;
                $body
            }
        }
    };
}

//! Two-step key generation: the owner fixes which slots are searched and
//! leaves their values open; a holder of the parametric key fills them in.
//!
//! For an open slot `t` the key stores `U_t = d_t C^t_1` and
//! `F_t = -d_t C^t_2 + s_t C^t_3`. Binding a value `y_t` yields
//! `y_t U_t + F_t = (d_t y_t, -d_t, s_t)_{C^t}`, the component the one-shot
//! key generation would have produced with the same coins.

use std::collections::BTreeMap;

use ark_ec::pairing::Pairing;
use ark_ff::{One, Zero};
use rand::Rng;

use super::{tail_components, AmortizedKey, AmortizedSecretKey, TailCoins};
use crate::dpvs::{lincomb, RightVec, Scalar};
use crate::error::{ensure_len, Error, Result};
use crate::hve_basic::{HveKey, KeyCoins};
use crate::metrics::Meter;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSlot<E: Pairing> {
    /// `U_t`, scaled by the bound value.
    pub scalable: RightVec<E>,
    /// `F_t`, added unchanged.
    pub fixed: RightVec<E>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParametricKey<E: Pairing> {
    pub ell: usize,
    pub k0: RightVec<E>,
    pub open: BTreeMap<usize, ParamSlot<E>>,
    pub k0_star: RightVec<E>,
    pub ktail: RightVec<E>,
}

impl<E: Pairing> ParametricKey<E> {
    pub fn open_slots(&self) -> Vec<usize> {
        self.open.keys().copied().collect()
    }
}

/// `open_mask[t]` marks slot `t` as a parameter; all other slots are
/// wildcards.
pub fn keygen_parametric<E: Pairing, R: Rng + ?Sized>(
    open_mask: &[bool],
    tail_value: Scalar<E>,
    msk: &AmortizedSecretKey<E>,
    rng: &mut R,
) -> Result<ParametricKey<E>> {
    let support: Vec<usize> = open_mask
        .iter()
        .enumerate()
        .filter_map(|(t, open)| open.then_some(t))
        .collect();
    let coins = KeyCoins::sample(&support, rng);
    let tail = TailCoins::sample(rng);
    keygen_parametric_with_coins(open_mask, tail_value, msk, &coins, &tail, &())
}

pub fn keygen_parametric_with_coins<E: Pairing, M: Meter + ?Sized>(
    open_mask: &[bool],
    tail_value: Scalar<E>,
    msk: &AmortizedSecretKey<E>,
    coins: &KeyCoins<Scalar<E>>,
    tail: &TailCoins<Scalar<E>>,
    meter: &M,
) -> Result<ParametricKey<E>> {
    ensure_len("parameter mask", msk.ell(), open_mask.len())?;
    let support = open_mask
        .iter()
        .enumerate()
        .filter_map(|(t, open)| open.then_some(t));
    if !support.eq(coins.slots.keys().copied()) {
        return Err(Error::invalid(
            "key coins do not cover exactly the open slots",
        ));
    }
    let zero = Scalar::<E>::zero();
    let s0 = -coins.slots.values().map(|c| c.s).sum::<Scalar<E>>();
    let k0 = lincomb(&[s0, Scalar::<E>::one(), coins.eta], &msk.prefix.zero)?;
    let mut open = BTreeMap::new();
    for (&t, sc) in &coins.slots {
        let basis = &msk.prefix.slots[t];
        open.insert(
            t,
            ParamSlot {
                scalable: lincomb(&[sc.d, zero, zero], basis)?,
                fixed: lincomb(&[zero, -sc.d, sc.s], basis)?,
            },
        );
    }
    meter.lincombs(1 + open.len() as u64);
    let (k0_star, ktail) = tail_components(tail_value, msk, tail, meter)?;
    Ok(ParametricKey {
        ell: msk.ell(),
        k0,
        open,
        k0_star,
        ktail,
    })
}

/// `k_t = y_t U_t + F_t` for every open slot; `values` must name exactly
/// the open slots.
pub fn bind_parameters<E: Pairing>(
    pk: &ParametricKey<E>,
    values: &BTreeMap<usize, Scalar<E>>,
) -> Result<AmortizedKey<E>> {
    if !pk.open.keys().eq(values.keys()) {
        return Err(Error::invalid(format!(
            "parameter values for slots {:?} do not match open slots {:?}",
            values.keys().collect::<Vec<_>>(),
            pk.open_slots()
        )));
    }
    let kts = pk
        .open
        .iter()
        .map(|(&t, slot)| Ok((t, slot.scalable.scale(&values[&t]).add(&slot.fixed)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(AmortizedKey {
        prefix: HveKey {
            ell: pk.ell,
            k0: pk.k0.clone(),
            kts,
        },
        k0_star: pk.k0_star.clone(),
        ktail: pk.ktail.clone(),
    })
}

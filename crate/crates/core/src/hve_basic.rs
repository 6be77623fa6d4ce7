//! Hidden vector encryption over `F_q^ell` with one 3-dimensional dual
//! basis pair per attribute slot plus one for the blinding slot.
//!
//! Slots are indexed `0..ell`; the extra pair `(B^0, C^0)` is held
//! separately as `zero`.

use std::collections::BTreeMap;

use ark_ec::pairing::Pairing;
use ark_ec::{AffineRepr, CurveGroup};
use ark_ff::{One, UniformRand, Zero};
use rand::Rng;

use crate::dpvs::{
    gen_dual_pair, lincomb, nonzero_scalar, pair_product, Gt, LeftBasis, LeftVec, RightBasis,
    RightVec, Scalar,
};
use crate::error::{ensure_len, Error, Result};
use crate::metrics::Meter;

/// Search pattern: `None` is the wildcard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern<F> {
    entries: Vec<Option<F>>,
}

impl<F: Copy> Pattern<F> {
    pub fn new(entries: Vec<Option<F>>) -> Self {
        Pattern { entries }
    }

    pub fn wildcards(ell: usize) -> Self {
        Pattern {
            entries: vec![None; ell],
        }
    }

    /// Pattern with the given slots fixed and every other slot a wildcard.
    pub fn from_fixed(ell: usize, fixed: &BTreeMap<usize, F>) -> Result<Self> {
        let mut entries = vec![None; ell];
        for (&t, v) in fixed {
            if t >= ell {
                return Err(Error::invalid(format!(
                    "pattern slot {t} out of range (ell = {ell})"
                )));
            }
            entries[t] = Some(*v);
        }
        Ok(Pattern { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Option<F>] {
        &self.entries
    }

    /// Indices of the non-wildcard slots (the set `S`).
    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(t, e)| e.as_ref().map(|_| t))
            .collect()
    }
}

/// True iff every non-wildcard entry of `y` equals the matching entry of `x`.
pub fn hve_match<F: PartialEq + Copy>(x: &[F], y: &Pattern<F>) -> Result<bool> {
    ensure_len("attribute vector", y.len(), x.len())?;
    Ok(x.iter()
        .zip(y.entries())
        .all(|(xv, yv)| yv.as_ref().is_none_or(|v| v == xv)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterPublicKey<E: Pairing> {
    pub gt: Gt<E>,
    pub zero: LeftBasis<E>,
    pub slots: Vec<LeftBasis<E>>,
}

impl<E: Pairing> MasterPublicKey<E> {
    pub fn ell(&self) -> usize {
        self.slots.len()
    }

    /// Source-group elements held by the key.
    pub fn num_group_elems(&self) -> usize {
        9 * (self.slots.len() + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterSecretKey<E: Pairing> {
    pub zero: RightBasis<E>,
    pub slots: Vec<RightBasis<E>>,
}

impl<E: Pairing> MasterSecretKey<E> {
    pub fn ell(&self) -> usize {
        self.slots.len()
    }
}

#[derive(Clone, Debug)]
pub struct MasterKeys<E: Pairing> {
    pub mpk: MasterPublicKey<E>,
    pub msk: MasterSecretKey<E>,
}

/// `c_0` and `c_1..c_ell`: the attribute-bound part of a ciphertext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeBlock<E: Pairing> {
    pub c0: LeftVec<E>,
    pub cts: Vec<LeftVec<E>>,
}

impl<E: Pairing> AttributeBlock<E> {
    pub fn ell(&self) -> usize {
        self.cts.len()
    }

    pub fn num_group_elems(&self) -> usize {
        self.c0.len() + self.cts.iter().map(|c| c.len()).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HveCiphertext<E: Pairing> {
    pub c: Gt<E>,
    pub attrs: AttributeBlock<E>,
}

impl<E: Pairing> HveCiphertext<E> {
    pub fn num_group_elems(&self) -> usize {
        self.attrs.num_group_elems()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HveKey<E: Pairing> {
    pub ell: usize,
    pub k0: RightVec<E>,
    pub kts: BTreeMap<usize, RightVec<E>>,
}

impl<E: Pairing> HveKey<E> {
    pub fn num_group_elems(&self) -> usize {
        self.k0.len() + self.kts.values().map(|k| k.len()).sum::<usize>()
    }
}

/// Encryption randomness `z, w_0, w_1..w_ell`.
#[derive(Clone, Debug)]
pub struct EncryptCoins<F> {
    pub z: F,
    pub w0: F,
    pub ws: Vec<F>,
}

impl<F: UniformRand> EncryptCoins<F> {
    pub fn sample<R: Rng + ?Sized>(ell: usize, rng: &mut R) -> Self {
        EncryptCoins {
            z: F::rand(rng),
            w0: F::rand(rng),
            ws: (0..ell).map(|_| F::rand(rng)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotCoins<F> {
    pub d: F,
    pub s: F,
}

/// Key-generation randomness: `eta` and `(d_t, s_t)` for each `t` in `S`.
#[derive(Clone, Debug)]
pub struct KeyCoins<F> {
    pub eta: F,
    pub slots: BTreeMap<usize, SlotCoins<F>>,
}

impl<F: UniformRand> KeyCoins<F> {
    pub fn sample<R: Rng + ?Sized>(support: &[usize], rng: &mut R) -> Self {
        let eta = F::rand(rng);
        let slots = support
            .iter()
            .map(|&t| {
                (
                    t,
                    SlotCoins {
                        d: F::rand(rng),
                        s: F::rand(rng),
                    },
                )
            })
            .collect();
        KeyCoins { eta, slots }
    }
}

type BasisPair<E> = (LeftBasis<E>, RightBasis<E>);

/// `ell + extra` psi-orthogonal 3x3 pairs under one fresh psi, together with
/// `g_T = e(g1, g2)^psi`.
pub(crate) fn sample_pairs<E: Pairing, R: Rng + ?Sized, M: Meter + ?Sized>(
    count: usize,
    rng: &mut R,
    meter: &M,
) -> Result<(Gt<E>, Vec<BasisPair<E>>)> {
    let psi: Scalar<E> = nonzero_scalar(rng);
    let g1 = (E::G1Affine::generator() * psi).into_affine();
    meter.pairings(1);
    let gt = E::pairing(g1, E::G2Affine::generator());
    let pairs = (0..count)
        .map(|_| gen_dual_pair::<E, R>(3, psi, rng).map(|p| p.into_bases()))
        .collect::<Result<Vec<_>>>()?;
    Ok((gt, pairs))
}

pub fn setup<E: Pairing, R: Rng + ?Sized>(ell: usize, rng: &mut R) -> Result<MasterKeys<E>> {
    setup_metered(ell, rng, &())
}

pub fn setup_metered<E: Pairing, R: Rng + ?Sized, M: Meter + ?Sized>(
    ell: usize,
    rng: &mut R,
    meter: &M,
) -> Result<MasterKeys<E>> {
    if ell == 0 {
        return Err(Error::invalid("attribute count must be at least 1"));
    }
    let (gt, pairs) = sample_pairs::<E, R, M>(ell + 1, rng, meter)?;
    let mut pairs = pairs.into_iter();
    let (b0, c0) = pairs.next().expect("ell + 1 pairs");
    let (bs, cs): (Vec<_>, Vec<_>) = pairs.unzip();
    Ok(MasterKeys {
        mpk: MasterPublicKey {
            gt,
            zero: b0,
            slots: bs,
        },
        msk: MasterSecretKey {
            zero: c0,
            slots: cs,
        },
    })
}

/// `c_0 = (w_0, z, 0)_{B^0}` and `c_t = (w_t, w_t x_t, w_0)_{B^t}`.
pub(crate) fn encrypt_attrs<E: Pairing, M: Meter + ?Sized>(
    x: &[Scalar<E>],
    zero: &LeftBasis<E>,
    slots: &[LeftBasis<E>],
    coins: &EncryptCoins<Scalar<E>>,
    meter: &M,
) -> Result<AttributeBlock<E>> {
    ensure_len("attribute vector", slots.len(), x.len())?;
    ensure_len("encryption coins", slots.len(), coins.ws.len())?;
    let c0 = lincomb(&[coins.w0, coins.z, Scalar::<E>::zero()], zero)?;
    let cts = x
        .iter()
        .zip(&coins.ws)
        .zip(slots)
        .map(|((xt, wt), basis)| lincomb(&[*wt, *wt * xt, coins.w0], basis))
        .collect::<Result<Vec<_>>>()?;
    meter.lincombs(1 + slots.len() as u64);
    Ok(AttributeBlock { c0, cts })
}

pub fn encrypt<E: Pairing, R: Rng + ?Sized>(
    m: &Gt<E>,
    x: &[Scalar<E>],
    mpk: &MasterPublicKey<E>,
    rng: &mut R,
) -> Result<HveCiphertext<E>> {
    let coins = EncryptCoins::sample(mpk.ell(), rng);
    encrypt_with_coins(m, x, mpk, &coins, &())
}

pub fn encrypt_with_coins<E: Pairing, M: Meter + ?Sized>(
    m: &Gt<E>,
    x: &[Scalar<E>],
    mpk: &MasterPublicKey<E>,
    coins: &EncryptCoins<Scalar<E>>,
    meter: &M,
) -> Result<HveCiphertext<E>> {
    let attrs = encrypt_attrs(x, &mpk.zero, &mpk.slots, coins, meter)?;
    meter.gt_exps(1);
    let c = mpk.gt * coins.z + m;
    Ok(HveCiphertext { c, attrs })
}

pub fn keygen<E: Pairing, R: Rng + ?Sized>(
    y: &Pattern<Scalar<E>>,
    msk: &MasterSecretKey<E>,
    rng: &mut R,
) -> Result<HveKey<E>> {
    let coins = KeyCoins::sample(&y.support(), rng);
    keygen_with_coins(y, msk, &coins, &())
}

/// `k_0 = (s_0, 1, eta)_{C^0}` with `s_0 = -sum s_t`, and
/// `k_t = (d_t y_t, -d_t, s_t)_{C^t}` for `t` in `S`.
pub fn keygen_with_coins<E: Pairing, M: Meter + ?Sized>(
    y: &Pattern<Scalar<E>>,
    msk: &MasterSecretKey<E>,
    coins: &KeyCoins<Scalar<E>>,
    meter: &M,
) -> Result<HveKey<E>> {
    ensure_len("pattern", msk.ell(), y.len())?;
    let support = y.support();
    if !support.iter().copied().eq(coins.slots.keys().copied()) {
        return Err(Error::invalid(
            "key coins do not cover exactly the pattern support",
        ));
    }
    let s0 = -coins.slots.values().map(|c| c.s).sum::<Scalar<E>>();
    let k0 = lincomb(&[s0, Scalar::<E>::one(), coins.eta], &msk.zero)?;
    let mut kts = BTreeMap::new();
    for (&t, sc) in &coins.slots {
        let yt = y.entries()[t].expect("t is in the support");
        kts.insert(t, lincomb(&[sc.d * yt, -sc.d, sc.s], &msk.slots[t])?);
    }
    meter.lincombs(1 + kts.len() as u64);
    Ok(HveKey {
        ell: msk.ell(),
        k0,
        kts,
    })
}

/// `e(k_0, c_0) * prod_{t in S} e(k_t, c_t)`.
pub(crate) fn attrs_factor<E: Pairing, M: Meter + ?Sized>(
    key: &HveKey<E>,
    attrs: &AttributeBlock<E>,
    meter: &M,
) -> Result<Gt<E>> {
    ensure_len("ciphertext attribute count", key.ell, attrs.ell())?;
    let mut pairs = Vec::with_capacity(key.kts.len() + 1);
    pairs.push((&attrs.c0, &key.k0));
    for (&t, kt) in &key.kts {
        let ct = attrs.cts.get(t).ok_or_else(|| {
            Error::invalid(format!(
                "key slot {t} exceeds ciphertext attribute count {}",
                attrs.ell()
            ))
        })?;
        pairs.push((ct, kt));
    }
    pair_product::<E, M>(&pairs, meter)
}

/// Returns the payload when the key pattern matches the ciphertext's
/// attributes and an unrelated target-group element otherwise.
pub fn decrypt<E: Pairing>(key: &HveKey<E>, ct: &HveCiphertext<E>) -> Result<Gt<E>> {
    decrypt_metered(key, ct, &())
}

pub fn decrypt_metered<E: Pairing, M: Meter + ?Sized>(
    key: &HveKey<E>,
    ct: &HveCiphertext<E>,
    meter: &M,
) -> Result<Gt<E>> {
    Ok(ct.c - attrs_factor(key, &ct.attrs, meter)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Bls12;
    use crate::dpvs::{base_gt, pair_vec};
    use crate::metrics::OpCounters;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type E = Bls12;
    type Fr = Scalar<E>;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn fr(v: u64) -> Fr {
        Fr::from(v)
    }

    #[test]
    fn match_examples() {
        let x = [fr(5), fr(7)];
        assert!(hve_match(&x, &Pattern::wildcards(2)).unwrap());
        assert!(hve_match(&x, &Pattern::new(vec![Some(fr(5)), None])).unwrap());
        assert!(!hve_match(&[fr(6), fr(7)], &Pattern::new(vec![Some(fr(5)), None])).unwrap());
        assert!(hve_match(&x, &Pattern::wildcards(3)).is_err());
    }

    #[test]
    fn match_exhaustive_small_field() {
        // all of F_3^2 against all of (F_3 + wildcard)^2
        let entries: Vec<Option<u8>> = vec![None, Some(0), Some(1), Some(2)];
        let mut matches = 0;
        for x0 in 0..3u8 {
            for x1 in 0..3u8 {
                for y0 in &entries {
                    for y1 in &entries {
                        let brute =
                            (y0.is_none() || *y0 == Some(x0)) && (y1.is_none() || *y1 == Some(x1));
                        let got = hve_match(&[x0, x1], &Pattern::new(vec![*y0, *y1])).unwrap();
                        assert_eq!(got, brute);
                        matches += got as usize;
                    }
                }
            }
        }
        // each coordinate: 1 wildcard + 1 equal value out of 4 entries
        assert_eq!(matches, 9 * 2 * 2);
    }

    #[test]
    fn setup_shapes() {
        let mut r = rng(1);
        let keys = setup::<E, _>(1, &mut r).unwrap();
        assert_eq!(keys.mpk.ell(), 1);
        assert_eq!(keys.mpk.num_group_elems(), 18);
        assert!(setup::<E, _>(0, &mut r).is_err());

        let other = setup::<E, _>(1, &mut rng(2)).unwrap();
        assert_ne!(keys.mpk.zero, other.mpk.zero);
        for k in [&keys, &other] {
            for (b, c) in std::iter::once((&k.mpk.zero, &k.msk.zero))
                .chain(k.mpk.slots.iter().zip(&k.msk.slots))
            {
                for i in 0..3 {
                    for j in 0..3 {
                        let p = pair_vec::<E>(b.column(i), c.column(j)).unwrap();
                        if i == j {
                            assert_eq!(p, k.mpk.gt);
                        } else {
                            assert!(p.is_zero());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_matching_and_wildcard() {
        let mut r = rng(3);
        let keys = setup::<E, _>(3, &mut r).unwrap();
        let x = vec![fr(10), fr(20), fr(30)];
        let m = Gt::<E>::rand(&mut r);
        let ct = encrypt(&m, &x, &keys.mpk, &mut r).unwrap();

        let all = keygen(&Pattern::wildcards(3), &keys.msk, &mut r).unwrap();
        assert!(all.kts.is_empty());
        assert_eq!(decrypt(&all, &ct).unwrap(), m);

        let y = Pattern::new(vec![Some(fr(10)), None, Some(fr(30))]);
        let k = keygen(&y, &keys.msk, &mut r).unwrap();
        assert_eq!(decrypt(&k, &ct).unwrap(), m);

        let full = Pattern::new(x.iter().copied().map(Some).collect());
        assert_eq!(
            decrypt(&keygen(&full, &keys.msk, &mut r).unwrap(), &ct).unwrap(),
            m
        );
    }

    #[test]
    fn mismatch_never_recovers_payload() {
        let mut r = rng(4);
        let keys = setup::<E, _>(2, &mut r).unwrap();
        let y = Pattern::new(vec![Some(fr(1)), None]);
        for _ in 0..100 {
            let m = Gt::<E>::rand(&mut r);
            let x = vec![fr(2), Fr::rand(&mut r)];
            let ct = encrypt(&m, &x, &keys.mpk, &mut r).unwrap();
            let k = keygen(&y, &keys.msk, &mut r).unwrap();
            assert_ne!(decrypt(&k, &ct).unwrap(), m);
        }
    }

    #[test]
    fn fixed_coins_match_lincomb_recomputation() {
        let mut r = rng(5);
        let keys = setup::<E, _>(3, &mut r).unwrap();
        let y = Pattern::new(vec![Some(fr(4)), None, Some(fr(9))]);
        let coins = KeyCoins {
            eta: fr(11),
            slots: [
                (0, SlotCoins { d: fr(2), s: fr(3) }),
                (2, SlotCoins { d: fr(5), s: fr(7) }),
            ]
            .into_iter()
            .collect(),
        };
        let k = keygen_with_coins(&y, &keys.msk, &coins, &()).unwrap();
        // s_0 = -(3 + 7)
        let s0 = -fr(10);
        assert_eq!(
            coins.slots.values().map(|c| c.s).sum::<Fr>() + s0,
            Fr::zero()
        );
        assert_eq!(
            k.k0,
            lincomb(&[s0, Fr::one(), fr(11)], &keys.msk.zero).unwrap()
        );
        assert_eq!(
            k.kts[&0],
            lincomb(&[fr(8), -fr(2), fr(3)], &keys.msk.slots[0]).unwrap()
        );
        assert_eq!(
            k.kts[&2],
            lincomb(&[fr(45), -fr(5), fr(7)], &keys.msk.slots[2]).unwrap()
        );

        let wrong = KeyCoins {
            eta: fr(1),
            slots: BTreeMap::new(),
        };
        assert!(keygen_with_coins(&y, &keys.msk, &wrong, &()).is_err());
    }

    #[test]
    fn encryption_uses_its_coins() {
        let mut r = rng(6);
        let keys = setup::<E, _>(2, &mut r).unwrap();
        let x = vec![fr(1), fr(2)];
        let m = Gt::<E>::rand(&mut r);
        let coins = EncryptCoins {
            z: fr(3),
            w0: fr(4),
            ws: vec![fr(5), fr(6)],
        };
        let ct = encrypt_with_coins(&m, &x, &keys.mpk, &coins, &()).unwrap();
        assert_eq!(ct.c, keys.mpk.gt * fr(3) + m);
        assert_eq!(
            ct.attrs.c0,
            lincomb(&[fr(4), fr(3), fr(0)], &keys.mpk.zero).unwrap()
        );
        assert_eq!(
            ct.attrs.cts[1],
            lincomb(&[fr(6), fr(12), fr(4)], &keys.mpk.slots[1]).unwrap()
        );
        // g_T is e(g1, g2)^psi for a nonzero psi, never the plain base
        assert!(!keys.mpk.gt.is_zero());
        assert_ne!(keys.mpk.gt, base_gt::<E>() * Fr::zero());
    }

    #[test]
    fn fresh_randomness_changes_every_component() {
        let mut r = rng(7);
        let keys = setup::<E, _>(2, &mut r).unwrap();
        let x = vec![fr(1), fr(2)];
        let m = Gt::<E>::rand(&mut r);
        let a = encrypt(&m, &x, &keys.mpk, &mut r).unwrap();
        let b = encrypt(&m, &x, &keys.mpk, &mut r).unwrap();
        assert_ne!(a.c, b.c);
        assert_ne!(a.attrs.c0, b.attrs.c0);
        for (ca, cb) in a.attrs.cts.iter().zip(&b.attrs.cts) {
            assert_ne!(ca, cb);
        }
    }

    #[test]
    fn shapes_and_pairing_counts() {
        let mut r = rng(8);
        let ell = 5;
        let keys = setup::<E, _>(ell, &mut r).unwrap();
        let x: Vec<Fr> = (0..ell as u64).map(fr).collect();
        let m = Gt::<E>::rand(&mut r);
        let counters = OpCounters::new();
        let (ct, enc) = counters.measure(|c| {
            encrypt_with_coins(&m, &x, &keys.mpk, &EncryptCoins::sample(ell, &mut r), c).unwrap()
        });
        assert_eq!(ct.num_group_elems(), 3 * (ell + 1));
        assert_eq!(enc.gt_exps, 1);
        assert_eq!(enc.lincombs, ell as u64 + 1);
        for t in 0..=ell {
            let y = Pattern::new((0..ell).map(|i| (i < t).then(|| fr(i as u64))).collect());
            let k = keygen(&y, &keys.msk, &mut r).unwrap();
            assert_eq!(k.num_group_elems(), 3 * (t + 1));
            let (out, counts) = counters.measure(|c| decrypt_metered(&k, &ct, c).unwrap());
            assert_eq!(out, m);
            assert_eq!(counts.pairings, 3 * (t as u64 + 1));
        }
    }

    #[test]
    fn rejects_mixed_families() {
        let mut r = rng(9);
        let small = setup::<E, _>(2, &mut r).unwrap();
        let big = setup::<E, _>(3, &mut r).unwrap();
        let m = Gt::<E>::rand(&mut r);
        assert!(encrypt(&m, &[fr(1)], &small.mpk, &mut r).is_err());
        let ct = encrypt(&m, &[fr(1), fr(2)], &small.mpk, &mut r).unwrap();
        let k = keygen(&Pattern::wildcards(3), &big.msk, &mut r).unwrap();
        assert!(decrypt(&k, &ct).is_err());
        assert!(keygen(&Pattern::wildcards(2), &big.msk, &mut r).is_err());

        let mut bad = keygen(&Pattern::new(vec![Some(fr(1)), None]), &small.msk, &mut r).unwrap();
        let kt = bad.kts.remove(&0).unwrap();
        bad.kts.insert(7, kt);
        assert!(matches!(decrypt(&bad, &ct), Err(Error::InvalidArgument(_))));
    }
}

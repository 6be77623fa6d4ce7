//! Operation counts and sizes for both schemes, next to the published
//! cost formulas.
//!
//! Source-group sizes count elements of G1 or G2. Setup sizes cover the
//! public and the secret key together. Formula columns are empty where the
//! published tables give no value.

use std::io::Write;
use std::time::Instant;

use hvedb_core::container::Record;
use hvedb_core::dpvs::{element_sizes, Gt, Scalar};
use hvedb_core::hve_amortized::{
    decrypt_block, encrypt_am_with_coins, keygen_am_with_coins, setup_am_metered, shared_factor,
    AmortizedEncryptCoins, AmortizedKey, TailCoins,
};
use hvedb_core::hve_basic::{
    decrypt_metered, encrypt_with_coins, keygen_with_coins, setup_metered, EncryptCoins, KeyCoins,
    Pattern,
};
use hvedb_core::table::{encode_column, encode_value};
use hvedb_core::{with_backend, Backend, CurveId, OpCounters, OpCounts, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Basic,
    Amortized,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Basic => "basic",
            Scheme::Amortized => "amortized",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operation {
    Setup,
    Encrypt,
    KeyGen,
    Decrypt,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Setup => "setup",
            Operation::Encrypt => "encrypt",
            Operation::KeyGen => "keygen",
            Operation::Decrypt => "decrypt",
        }
    }
}

/// Published cost of one operation; `None` where the table is silent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Formula {
    pub pairings: Option<u64>,
    pub gt_exps: Option<u64>,
    pub lincombs: Option<u64>,
    pub group_elems: Option<u64>,
    pub gt_elems: Option<u64>,
}

/// Cost-table formulas for the non-amortized scheme.
pub fn basic_formula(op: Operation, ell: u64, t: u64) -> Formula {
    match op {
        Operation::Setup => Formula {
            pairings: Some(1),
            group_elems: Some(18 * ell),
            gt_elems: Some(1),
            ..Formula::default()
        },
        Operation::Encrypt => Formula {
            gt_exps: Some(1),
            lincombs: Some(ell + 1),
            group_elems: Some(10 * ell),
            gt_elems: Some(1),
            ..Formula::default()
        },
        Operation::KeyGen => Formula {
            lincombs: Some(t + 1),
            group_elems: Some(3 * (t + 1)),
            ..Formula::default()
        },
        Operation::Decrypt => Formula {
            pairings: Some(3 * (t + 1)),
            ..Formula::default()
        },
    }
}

/// Cost-table formulas for the amortized scheme, one ciphertext per row
/// of `ell` messages and `c` projected columns.
pub fn amortized_formula(op: Operation, ell: u64, t: u64, c: u64) -> Formula {
    match op {
        Operation::Setup => Formula {
            pairings: Some(1),
            group_elems: Some(18 * ell),
            ..Formula::default()
        },
        Operation::Encrypt => Formula {
            gt_exps: Some(ell),
            lincombs: Some(ell * ell + ell),
            group_elems: Some(13 * ell),
            gt_elems: Some(1),
            ..Formula::default()
        },
        Operation::KeyGen => Formula {
            lincombs: Some(c * (t + 1)),
            group_elems: Some(3 * (t + 3)),
            ..Formula::default()
        },
        Operation::Decrypt => Formula {
            pairings: Some(3 * c * (t + 1)),
            ..Formula::default()
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityRow {
    pub scheme: Scheme,
    pub op: Operation,
    pub curve: CurveId,
    pub ell: usize,
    pub t: usize,
    /// Projected columns; amortized keygen/decrypt only.
    pub c: Option<usize>,
    /// Messages per ciphertext; amortized encrypt only.
    pub n: Option<usize>,
    pub counts: OpCounts,
    pub group_elems: Option<u64>,
    pub gt_elems: Option<u64>,
    /// Serialized size of the produced object.
    pub bytes: Option<u64>,
    pub formula: Formula,
    /// Excluded from equality-sensitive comparisons.
    pub wall_us: u128,
}

fn delta(measured: Option<u64>, formula: Option<u64>) -> Option<i64> {
    Some(measured? as i64 - formula? as i64)
}

impl ComplexityRow {
    pub fn delta_pairings(&self) -> Option<i64> {
        delta(Some(self.counts.pairings), self.formula.pairings)
    }
    pub fn delta_gt_exps(&self) -> Option<i64> {
        delta(Some(self.counts.gt_exps), self.formula.gt_exps)
    }
    pub fn delta_lincombs(&self) -> Option<i64> {
        delta(Some(self.counts.lincombs), self.formula.lincombs)
    }
    pub fn delta_group_elems(&self) -> Option<i64> {
        delta(self.group_elems, self.formula.group_elems)
    }
}

pub const CSV_HEADER: [&str; 25] = [
    "scheme",
    "operation",
    "curve",
    "ell",
    "t",
    "c",
    "n",
    "pairings",
    "gt_exps",
    "lincombs",
    "group_elems",
    "gt_elems",
    "bytes",
    "formula_pairings",
    "formula_gt_exps",
    "formula_lincombs",
    "formula_group_elems",
    "formula_gt_elems",
    "delta_pairings",
    "delta_gt_exps",
    "delta_lincombs",
    "delta_group_elems",
    "delta_gt_elems",
    "curve_g1_bytes",
    "wall_us",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_complexity_csv<W: Write>(rows: &[ComplexityRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.op.name().to_string(),
            r.curve.name().to_string(),
            r.ell.to_string(),
            r.t.to_string(),
            opt(r.c),
            opt(r.n),
            r.counts.pairings.to_string(),
            r.counts.gt_exps.to_string(),
            r.counts.lincombs.to_string(),
            opt(r.group_elems),
            opt(r.gt_elems),
            opt(r.bytes),
            opt(r.formula.pairings),
            opt(r.formula.gt_exps),
            opt(r.formula.lincombs),
            opt(r.formula.group_elems),
            opt(r.formula.gt_elems),
            opt(r.delta_pairings()),
            opt(r.delta_gt_exps()),
            opt(r.delta_lincombs()),
            opt(r.delta_group_elems()),
            opt(delta(r.gt_elems, r.formula.gt_elems)),
            g1_bytes(r.curve).to_string(),
            r.wall_us.to_string(),
        ])?;
    }
    w.flush()
}

/// Compressed size of one G1 element on `curve`.
pub fn g1_bytes(curve: CurveId) -> usize {
    with_backend!(curve, E => element_sizes::<E>().g1)
}

fn timed<T>(counters: &OpCounters, f: impl FnOnce(&OpCounters) -> T) -> (T, OpCounts, u128) {
    let start = Instant::now();
    let (out, counts) = counters.measure(f);
    (out, counts, start.elapsed().as_micros())
}

fn attrs<E: Backend>(ell: usize) -> Vec<Scalar<E>> {
    (0..ell)
        .map(|i| encode_value(format!("v{i}").as_bytes()))
        .collect()
}

/// Pattern fixing the first `t` slots to the values of [`attrs`].
fn pattern<E: Backend>(ell: usize, t: usize) -> Pattern<Scalar<E>> {
    let x = attrs::<E>(ell);
    Pattern::new((0..ell).map(|i| (i < t).then_some(x[i])).collect())
}

/// Runs every grid point on `curve`. Points with `t > ell` or `c > ell`
/// are skipped.
pub fn run_complexity_suite(grid: &Grid, curve: CurveId) -> Result<Vec<ComplexityRow>> {
    with_backend!(curve, E => run_on::<E>(grid))
}

fn run_on<E: Backend>(grid: &Grid) -> Result<Vec<ComplexityRow>> {
    let counters = OpCounters::new();
    let mut rows = Vec::new();
    for &ell in &grid.ell {
        let mut rng = ChaCha20Rng::seed_from_u64(ell as u64);
        #[allow(clippy::too_many_arguments)]
        let row = |scheme: Scheme,
                   op: Operation,
                   t: usize,
                   c: Option<usize>,
                   n: Option<usize>,
                   counts: OpCounts,
                   group_elems: Option<u64>,
                   gt_elems: Option<u64>,
                   bytes: Option<u64>,
                   wall_us: u128| {
            let formula = match scheme {
                Scheme::Basic => basic_formula(op, ell as u64, t as u64),
                Scheme::Amortized => {
                    amortized_formula(op, ell as u64, t as u64, c.unwrap_or(1) as u64)
                }
            };
            ComplexityRow {
                scheme,
                op,
                curve: E::CURVE,
                ell,
                t,
                c,
                n,
                counts,
                group_elems,
                gt_elems,
                bytes,
                formula,
                wall_us,
            }
        };

        // basic scheme
        let (keys, counts, us) = timed(&counters, |m| setup_metered::<E, _, _>(ell, &mut rng, m));
        let keys = keys?;
        let setup_elems = 2 * keys.mpk.num_group_elems() as u64;
        let bytes = (keys.mpk.to_bytes().len() + keys.msk.to_bytes().len()) as u64;
        rows.push(row(
            Scheme::Basic,
            Operation::Setup,
            0,
            None,
            None,
            counts,
            Some(setup_elems),
            Some(1),
            Some(bytes),
            us,
        ));

        let m = keys.mpk.gt * encode_value::<Scalar<E>>(b"message");
        let x = attrs::<E>(ell);
        let coins = EncryptCoins::sample(ell, &mut rng);
        let (ct, counts, us) = timed(&counters, |meter| {
            encrypt_with_coins(&m, &x, &keys.mpk, &coins, meter)
        });
        let ct = ct?;
        rows.push(row(
            Scheme::Basic,
            Operation::Encrypt,
            0,
            None,
            None,
            counts,
            Some(ct.attrs.num_group_elems() as u64),
            Some(1),
            Some(ct.to_bytes().len() as u64),
            us,
        ));

        for &t in grid.t.iter().filter(|&&t| t <= ell) {
            let p = pattern::<E>(ell, t);
            let coins = KeyCoins::sample(&p.support(), &mut rng);
            let (key, counts, us) = timed(&counters, |meter| {
                keygen_with_coins(&p, &keys.msk, &coins, meter)
            });
            let key = key?;
            rows.push(row(
                Scheme::Basic,
                Operation::KeyGen,
                t,
                None,
                None,
                counts,
                Some(key.num_group_elems() as u64),
                Some(0),
                Some(key.to_bytes().len() as u64),
                us,
            ));
            let (out, counts, us) = timed(&counters, |meter| decrypt_metered(&key, &ct, meter));
            debug_assert_eq!(out?, m);
            rows.push(row(
                Scheme::Basic,
                Operation::Decrypt,
                t,
                None,
                None,
                counts,
                None,
                None,
                None,
                us,
            ));
        }

        // amortized scheme
        let (keys, counts, us) =
            timed(&counters, |m| setup_am_metered::<E, _, _>(ell, &mut rng, m));
        let keys = keys?;
        let elems = 2 * keys.mpk.num_group_elems() as u64;
        let bytes = (keys.mpk.to_bytes().len() + keys.msk.to_bytes().len()) as u64;
        rows.push(row(
            Scheme::Amortized,
            Operation::Setup,
            0,
            None,
            None,
            counts,
            Some(elems),
            Some(1),
            Some(bytes),
            us,
        ));

        let tails: Vec<Scalar<E>> = (0..ell.max(*grid.n.iter().max().unwrap_or(&1)))
            .map(encode_column)
            .collect();
        let mut row_ct = None;
        let mut ns: Vec<usize> = grid.n.clone();
        if !ns.contains(&ell) {
            ns.push(ell);
        }
        for &n in &ns {
            let msgs: Vec<Gt<E>> = (0..n)
                .map(|j| *keys.mpk.gt() * Scalar::<E>::from(j as u64 + 1))
                .collect();
            let coins = AmortizedEncryptCoins::sample(ell, n, &mut rng);
            let (ct, counts, us) = timed(&counters, |meter| {
                encrypt_am_with_coins(&msgs, &x, &tails[..n], &keys.mpk, &coins, meter)
            });
            let ct = ct?;
            if grid.n.contains(&n) {
                rows.push(row(
                    Scheme::Amortized,
                    Operation::Encrypt,
                    0,
                    None,
                    Some(n),
                    counts,
                    Some(ct.num_group_elems() as u64),
                    Some(ct.num_gt_elems() as u64),
                    Some(ct.to_bytes().len() as u64),
                    us,
                ));
            }
            if n == ell {
                row_ct = Some((ct, msgs));
            }
        }
        let (ct, msgs) = row_ct.expect("n = ell is always encrypted");

        for &t in grid.t.iter().filter(|&&t| t <= ell) {
            let p = pattern::<E>(ell, t);
            for &c in grid.c.iter().filter(|&&c| c <= ell) {
                let coin_sets: Vec<_> = (0..c)
                    .map(|_| {
                        (
                            KeyCoins::sample(&p.support(), &mut rng),
                            TailCoins::sample(&mut rng),
                        )
                    })
                    .collect();
                let (token, counts, us) = timed(&counters, |meter| {
                    coin_sets
                        .iter()
                        .enumerate()
                        .map(|(j, (kc, tc))| {
                            keygen_am_with_coins(&p, tails[j], &keys.msk, kc, tc, meter)
                        })
                        .collect::<Result<Vec<AmortizedKey<E>>>>()
                });
                let token = token?;
                rows.push(row(
                    Scheme::Amortized,
                    Operation::KeyGen,
                    t,
                    Some(c),
                    None,
                    counts,
                    Some(token.iter().map(|k| k.num_group_elems() as u64).sum()),
                    Some(0),
                    Some(token.iter().map(|k| k.to_bytes().len() as u64).sum()),
                    us,
                ));
                let (out, counts, us) = timed(&counters, |meter| {
                    token
                        .iter()
                        .enumerate()
                        .map(|(j, k)| {
                            let shared = shared_factor(k, &ct, meter)?;
                            decrypt_block(&shared, k, &ct, j, meter)
                        })
                        .collect::<Result<Vec<_>>>()
                });
                debug_assert_eq!(out?, msgs[..c]);
                rows.push(row(
                    Scheme::Amortized,
                    Operation::Decrypt,
                    t,
                    Some(c),
                    None,
                    counts,
                    None,
                    None,
                    None,
                    us,
                ));
            }
        }
    }
    Ok(rows)
}

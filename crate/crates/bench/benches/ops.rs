use std::collections::{BTreeMap, BTreeSet};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hvedb_bench::synth::uniform_table;
use hvedb_core::dpvs::{gen_dual_pair, Gt, Scalar};
use hvedb_core::hve_amortized::{decrypt_all, encrypt_am, keygen_am, setup_am};
use hvedb_core::hve_basic::{self, Pattern};
use hvedb_core::proxy::execute_query;
use hvedb_core::store::{EncryptedStore, MemoryStore, StoredRow, TableSchema};
use hvedb_core::table::{encode_column, encrypt_row, make_token};
use hvedb_core::Bls12;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

type E = Bls12;
type Fr = Scalar<E>;

fn rng() -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(1)
}

fn dpvs(c: &mut Criterion) {
    let mut r = rng();
    c.bench_function("gen_dual_pair/3", |b| {
        b.iter(|| gen_dual_pair::<E, _>(3, Fr::from(7u64), &mut r).unwrap())
    });
}

fn basic(c: &mut Criterion) {
    let mut g = c.benchmark_group("basic");
    let mut r = rng();
    for ell in [2usize, 4, 8] {
        let keys = hve_basic::setup::<E, _>(ell, &mut r).unwrap();
        let x: Vec<Fr> = (1..=ell as u64).map(Fr::from).collect();
        let m: Gt<E> = keys.mpk.gt * Fr::from(5u64);
        g.bench_with_input(BenchmarkId::new("encrypt", ell), &ell, |b, _| {
            b.iter(|| hve_basic::encrypt(&m, &x, &keys.mpk, &mut r).unwrap())
        });
        let ct = hve_basic::encrypt(&m, &x, &keys.mpk, &mut r).unwrap();
        let key = hve_basic::keygen(
            &Pattern::new(x.iter().map(|v| Some(*v)).collect()),
            &keys.msk,
            &mut r,
        )
        .unwrap();
        g.bench_with_input(BenchmarkId::new("decrypt", ell), &ell, |b, _| {
            b.iter(|| hve_basic::decrypt(black_box(&key), &ct).unwrap())
        });
    }
    g.finish();
}

fn amortized(c: &mut Criterion) {
    let mut g = c.benchmark_group("amortized");
    let mut r = rng();
    let ell = 4;
    let keys = setup_am::<E, _>(ell, &mut r).unwrap();
    let x: Vec<Fr> = (1..=ell as u64).map(Fr::from).collect();
    for n in [1usize, 4, 8] {
        let msgs = vec![*keys.mpk.gt() * Fr::from(3u64); n];
        let tails: Vec<Fr> = (0..n).map(encode_column).collect();
        g.bench_with_input(BenchmarkId::new("encrypt", n), &n, |b, _| {
            b.iter(|| encrypt_am(&msgs, &x, &tails, &keys.mpk, &mut r).unwrap())
        });
        let ct = encrypt_am(&msgs, &x, &tails, &keys.mpk, &mut r).unwrap();
        let key = keygen_am(
            &Pattern::new(vec![Some(x[0]), None, None, None]),
            tails[0],
            &keys.msk,
            &mut r,
        )
        .unwrap();
        g.bench_with_input(BenchmarkId::new("decrypt_all", n), &n, |b, _| {
            b.iter(|| decrypt_all(black_box(&key), &ct, &()).unwrap())
        });
    }
    g.finish();
}

fn query(c: &mut Criterion) {
    let mut g = c.benchmark_group("query");
    g.sample_size(10);
    let mut r = rng();
    let rows = 32;
    for ell in [2usize, 4, 8] {
        let table = uniform_table(ell, rows, 4, 3);
        let keys = setup_am::<E, _>(ell, &mut r).unwrap();
        g.bench_with_input(BenchmarkId::new("encrypt_row", ell), &ell, |b, _| {
            b.iter(|| encrypt_row(&table.rows()[0], 1, &keys.mpk, &mut r).unwrap())
        });
        let stored: Vec<StoredRow> = table
            .encrypt(&keys.mpk, &mut r)
            .unwrap()
            .iter()
            .map(StoredRow::from_wrapped)
            .collect();
        let store = MemoryStore::new();
        let schema = TableSchema {
            family: keys.msk.family,
            curve: hvedb_core::CurveId::Bls12_381,
            columns: table.columns().to_vec(),
        };
        store.put_table(&schema, &stored).unwrap();
        let preds = BTreeMap::from([(0, b"v0000".to_vec())]);
        let all: BTreeSet<usize> = (0..ell).collect();
        let token = make_token(&preds, &all, &keys.msk, &mut r).unwrap();
        g.bench_with_input(BenchmarkId::new("execute", ell), &ell, |b, _| {
            b.iter(|| execute_query(&token, &store).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dpvs, basic, amortized, query);
criterion_main!(benches);

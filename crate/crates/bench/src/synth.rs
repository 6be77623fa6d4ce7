//! Deterministic synthetic tables.

use hvedb_core::table::PlainTable;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const SERVICE_COLUMNS: [&str; 7] = [
    "ServiceId",
    "TypeId",
    "Availability",
    "Certificate",
    "Position",
    "Description",
    "Timestamp",
];

/// Rows shaped like a small sensor-service catalogue.
pub fn service_table(rows: usize, seed: u64) -> PlainTable {
    const DESCRIPTIONS: [&str; 5] = [
        "camera",
        "infrared camera",
        "temperature",
        "humidity",
        "pressure",
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data = (0..rows)
        .map(|i| {
            vec![
                rng.gen_range(1..=100u32).to_string(),
                rng.gen_range(1..=4u32).to_string(),
                if rng.gen_bool(0.7) { "yes" } else { "no" }.to_string(),
                format!("cert_{}", i + 1),
                format!("District{}", rng.gen_range(1..=5u32)),
                DESCRIPTIONS
                    .choose(&mut rng)
                    .expect("non-empty")
                    .to_string(),
                format!(
                    "20{:02}-{:02}-{:02} {:02}:{:02}:{:02}",
                    rng.gen_range(10..=13u32),
                    rng.gen_range(1..=12u32),
                    rng.gen_range(1..=28u32),
                    rng.gen_range(0..24u32),
                    rng.gen_range(0..60u32),
                    rng.gen_range(0..60u32)
                ),
            ]
            .into_iter()
            .map(String::into_bytes)
            .collect()
        })
        .collect();
    PlainTable::new(SERVICE_COLUMNS.map(String::from).to_vec(), data)
        .expect("rectangular by construction")
}

/// `ell` columns of fixed-width values drawn from `domain` choices.
pub fn uniform_table(ell: usize, rows: usize, domain: u32, seed: u64) -> PlainTable {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data = (0..rows)
        .map(|_| {
            (0..ell)
                .map(|_| format!("v{:04}", rng.gen_range(0..domain)).into_bytes())
                .collect()
        })
        .collect();
    PlainTable::new((0..ell).map(|j| format!("c{j}")).collect(), data)
        .expect("rectangular by construction")
}

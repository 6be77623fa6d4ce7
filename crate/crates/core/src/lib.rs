pub mod backend;
pub mod container;
pub mod dpvs;
pub mod error;
pub mod hve_amortized;
pub mod hve_basic;
pub mod metrics;
pub mod proxy;
pub mod query;
pub mod store;
pub mod table;

pub use backend::{Backend, Bls12, Bn254, CurveId};
pub use error::{Error, ErrorClass, Result};
pub use metrics::{Meter, OpCounters, OpCounts};

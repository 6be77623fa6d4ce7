use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::cell::CellKey;
use super::encode::{encode_column, encode_value};
use super::row::{try_unwrap_with_key, WrappedRow};
use crate::dpvs::Scalar;
use crate::error::{Error, Result};
use crate::hve_amortized::{
    bind_parameters, keygen_am, keygen_parametric, AmortizedKey, AmortizedSecretKey, FamilyId,
    ParametricKey,
};
use crate::hve_basic::Pattern;
use crate::Backend;

/// Decryption material for one selection-projection query: one amortized
/// key per projected column, all over the same predicate pattern.
///
/// Which columns are constrained and which are projected is visible; the
/// predicate values are not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryToken<E: Backend> {
    pub family: FamilyId,
    pub arity: usize,
    pub predicate_columns: Vec<usize>,
    pub projected: Vec<usize>,
    pub keys: Vec<AmortizedKey<E>>,
}

impl<E: Backend> QueryToken<E> {
    pub fn key_for(&self, column: usize) -> Result<&AmortizedKey<E>> {
        self.projected
            .iter()
            .position(|&c| c == column)
            .map(|i| &self.keys[i])
            .ok_or_else(|| {
                Error::invalid(format!("column {column} is not projected by this token"))
            })
    }

    pub fn try_unwrap(&self, wrapped: &WrappedRow<E>, column: usize) -> Result<Option<CellKey>> {
        try_unwrap_with_key(self.key_for(column)?, wrapped, column)
    }

    pub fn num_group_elems(&self) -> usize {
        self.keys.iter().map(|k| k.num_group_elems()).sum()
    }
}

/// A token whose predicate values are filled in later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParametricToken<E: Backend> {
    pub family: FamilyId,
    pub arity: usize,
    pub predicate_columns: Vec<usize>,
    pub projected: Vec<usize>,
    pub keys: Vec<ParametricKey<E>>,
}

impl<E: Backend> ParametricToken<E> {
    /// `values[i]` is the search value for `predicate_columns[i]`.
    pub fn bind<V: AsRef<[u8]>>(&self, values: &[V]) -> Result<QueryToken<E>> {
        if values.len() != self.predicate_columns.len() {
            return Err(Error::invalid(format!(
                "token has {} parameters, got {} values",
                self.predicate_columns.len(),
                values.len()
            )));
        }
        let encoded: BTreeMap<usize, Scalar<E>> = self
            .predicate_columns
            .iter()
            .zip(values)
            .map(|(&c, v)| (c, encode_value(v.as_ref())))
            .collect();
        let keys = self
            .keys
            .iter()
            .map(|k| bind_parameters(k, &encoded))
            .collect::<Result<Vec<_>>>()?;
        Ok(QueryToken {
            family: self.family,
            arity: self.arity,
            predicate_columns: self.predicate_columns.clone(),
            projected: self.projected.clone(),
            keys,
        })
    }
}

fn check_columns(what: &str, cols: impl IntoIterator<Item = usize>, arity: usize) -> Result<()> {
    for c in cols {
        if c >= arity {
            return Err(Error::invalid(format!(
                "{what} column {c} out of range ({arity} columns)"
            )));
        }
    }
    Ok(())
}

/// One key per projected column; columns absent from `predicates` are
/// wildcards.
pub fn make_token<E: Backend, R: Rng + ?Sized>(
    predicates: &BTreeMap<usize, Vec<u8>>,
    projected: &BTreeSet<usize>,
    msk: &AmortizedSecretKey<E>,
    rng: &mut R,
) -> Result<QueryToken<E>> {
    let arity = msk.ell();
    if projected.is_empty() {
        return Err(Error::invalid("a query must project at least one column"));
    }
    check_columns("projected", projected.iter().copied(), arity)?;
    check_columns("predicate", predicates.keys().copied(), arity)?;
    let fixed: BTreeMap<usize, Scalar<E>> = predicates
        .iter()
        .map(|(&c, v)| (c, encode_value(v)))
        .collect();
    let pattern = Pattern::from_fixed(arity, &fixed)?;
    let keys = projected
        .iter()
        .map(|&c| keygen_am(&pattern, encode_column(c), msk, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryToken {
        family: msk.family,
        arity,
        predicate_columns: predicates.keys().copied().collect(),
        projected: projected.iter().copied().collect(),
        keys,
    })
}

pub fn make_parametric_token<E: Backend, R: Rng + ?Sized>(
    predicate_columns: &BTreeSet<usize>,
    projected: &BTreeSet<usize>,
    msk: &AmortizedSecretKey<E>,
    rng: &mut R,
) -> Result<ParametricToken<E>> {
    let arity = msk.ell();
    if projected.is_empty() {
        return Err(Error::invalid("a query must project at least one column"));
    }
    check_columns("projected", projected.iter().copied(), arity)?;
    check_columns("predicate", predicate_columns.iter().copied(), arity)?;
    let mask: Vec<bool> = (0..arity).map(|t| predicate_columns.contains(&t)).collect();
    let keys = projected
        .iter()
        .map(|&c| keygen_parametric(&mask, encode_column(c), msk, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ParametricToken {
        family: msk.family,
        arity,
        predicate_columns: predicate_columns.iter().copied().collect(),
        projected: projected.iter().copied().collect(),
        keys,
    })
}

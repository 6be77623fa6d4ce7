//! Dual pairing vector spaces.
//!
//! Vectors of source-group elements, bases made of such vectors, and the
//! pairing extended component-wise to vectors. A [`DualBasisPair`] is a pair
//! of bases `(B, C)` with `e(B_i, C_j) = e(g1, g2)^(psi * delta_ij)`.

use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{AffineRepr, CurveGroup, PrimeGroup};
use ark_ff::{Field, UniformRand, Zero};
use ark_serialize::CanonicalSerialize;
use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::metrics::Meter;

pub type Scalar<E> = <E as Pairing>::ScalarField;
pub type Gt<E> = PairingOutput<E>;
pub type G1<E> = <E as Pairing>::G1Affine;
pub type G2<E> = <E as Pairing>::G2Affine;

/// Vector over the ciphertext-side group.
pub type LeftVec<E> = GroupVec<G1<E>>;
/// Vector over the key-side group.
pub type RightVec<E> = GroupVec<G2<E>>;
pub type LeftBasis<E> = Basis<G1<E>>;
pub type RightBasis<E> = Basis<G2<E>>;

/// A fixed-length vector of source-group elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupVec<G>(Vec<G>);

impl<G: AffineRepr> GroupVec<G> {
    pub fn from_elems(elems: Vec<G>) -> Self {
        GroupVec(elems)
    }

    /// The all-identity vector of length `n`.
    pub fn identity(n: usize) -> Self {
        GroupVec(vec![G::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn elems(&self) -> &[G] {
        &self.0
    }

    pub fn into_elems(self) -> Vec<G> {
        self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|e| e.is_zero())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_len("vector addition", self.len(), other.len())?;
        let sums: Vec<G::Group> = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.into_group() + b)
            .collect();
        Ok(GroupVec(G::Group::normalize_batch(&sums)))
    }

    pub fn scale(&self, s: &G::ScalarField) -> Self {
        let scaled: Vec<G::Group> = self.0.iter().map(|e| *e * s).collect();
        GroupVec(G::Group::normalize_batch(&scaled))
    }
}

/// `n` column vectors of length `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis<G> {
    cols: Vec<GroupVec<G>>,
}

impl<G: AffineRepr> Basis<G> {
    /// `A_1..A_n` with `A_i = (0, .., g, .., 0)`.
    pub fn canonical(n: usize, g: G) -> Self {
        let cols = (0..n)
            .map(|i| {
                let mut v = vec![G::zero(); n];
                v[i] = g;
                GroupVec(v)
            })
            .collect();
        Basis { cols }
    }

    pub fn from_columns(cols: Vec<GroupVec<G>>) -> Result<Self> {
        let n = cols.len();
        if n == 0 {
            return Err(Error::invalid("basis must have at least one column"));
        }
        for c in &cols {
            ensure_len("basis column", n, c.len())?;
        }
        Ok(Basis { cols })
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, i: usize) -> &GroupVec<G> {
        &self.cols[i]
    }

    pub fn columns(&self) -> &[GroupVec<G>] {
        &self.cols
    }
}

/// `(coeffs)_B = sum_i coeffs[i] * B_i`.
pub fn lincomb<G: AffineRepr>(coeffs: &[G::ScalarField], basis: &Basis<G>) -> Result<GroupVec<G>> {
    let n = basis.dim();
    ensure_len("lincomb coefficients", n, coeffs.len())?;
    let mut acc = vec![G::Group::zero(); n];
    for (c, col) in coeffs.iter().zip(&basis.cols) {
        if c.is_zero() {
            continue;
        }
        for (a, e) in acc.iter_mut().zip(&col.0) {
            if !e.is_zero() {
                *a += *e * c;
            }
        }
    }
    Ok(GroupVec(G::Group::normalize_batch(&acc)))
}

/// `e(x, y) = prod_i e(x_i, y_i)`.
pub fn pair_vec<E: Pairing>(x: &LeftVec<E>, y: &RightVec<E>) -> Result<Gt<E>> {
    pair_product(&[(x, y)], &())
}

/// Product of several vector pairings evaluated as a single multi-pairing.
pub fn pair_product<E: Pairing, M: Meter + ?Sized>(
    pairs: &[(&LeftVec<E>, &RightVec<E>)],
    meter: &M,
) -> Result<Gt<E>> {
    let mut lefts = Vec::new();
    let mut rights = Vec::new();
    for (x, y) in pairs {
        ensure_len("pairing operands", x.len(), y.len())?;
        lefts.extend_from_slice(x.elems());
        rights.extend_from_slice(y.elems());
    }
    meter.pairings(lefts.len() as u64);
    Ok(E::multi_pairing(lefts, rights))
}

/// `e(g1, g2)` for the backend's fixed generators.
pub fn base_gt<E: Pairing>() -> Gt<E> {
    E::pairing(E::G1::generator(), E::G2::generator())
}

/// Compressed encoding sizes in bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElementSizes {
    pub g1: usize,
    pub g2: usize,
    pub gt: usize,
    pub scalar: usize,
}

pub fn element_sizes<E: Pairing>() -> ElementSizes {
    ElementSizes {
        g1: E::G1Affine::generator().compressed_size(),
        g2: E::G2Affine::generator().compressed_size(),
        gt: base_gt::<E>().compressed_size(),
        scalar: Scalar::<E>::zero().compressed_size(),
    }
}

/// Dense square matrix over a field, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareMatrix<F> {
    n: usize,
    entries: Vec<F>,
}

impl<F: Field> SquareMatrix<F> {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![F::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = F::one();
        }
        SquareMatrix { n, entries }
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            ensure_len("matrix row", n, r.len())?;
            entries.extend(r);
        }
        Ok(SquareMatrix { n, entries })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        SquareMatrix {
            n,
            entries: (0..n * n).map(|_| F::rand(rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                entries.push(self.get(i, j));
            }
        }
        SquareMatrix { n, entries }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut entries = vec![F::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.get(k, j);
                }
            }
        }
        SquareMatrix { n, entries }
    }

    pub fn scale(&self, s: F) -> Self {
        SquareMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| *e * s).collect(),
        }
    }

    /// Gauss-Jordan inversion; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut inv = Self::identity(n).entries;
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let p_inv = a[col * n + col].inverse()?;
            for j in 0..n {
                a[col * n + j] *= p_inv;
                inv[col * n + j] *= p_inv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[col * n + j], inv[col * n + j]);
                    a[r * n + j] -= f * ac;
                    inv[r * n + j] -= f * ic;
                }
            }
        }
        Some(SquareMatrix { n, entries: inv })
    }
}

/// A psi-orthogonal pair of bases together with the scalar matrices that
/// generated them. The matrices never leave the owner.
#[derive(Clone, Debug)]
pub struct DualBasisPair<E: Pairing> {
    psi: Scalar<E>,
    left: LeftBasis<E>,
    right: RightBasis<E>,
    x: SquareMatrix<Scalar<E>>,
    x_star: SquareMatrix<Scalar<E>>,
}

impl<E: Pairing> DualBasisPair<E> {
    pub fn dim(&self) -> usize {
        self.left.dim()
    }

    pub fn psi(&self) -> Scalar<E> {
        self.psi
    }

    pub fn left(&self) -> &LeftBasis<E> {
        &self.left
    }

    pub fn right(&self) -> &RightBasis<E> {
        &self.right
    }

    pub fn x(&self) -> &SquareMatrix<Scalar<E>> {
        &self.x
    }

    pub fn x_star(&self) -> &SquareMatrix<Scalar<E>> {
        &self.x_star
    }

    pub fn into_bases(self) -> (LeftBasis<E>, RightBasis<E>) {
        (self.left, self.right)
    }
}

/// Samples `X` uniformly among invertible `n x n` matrices and derives the
/// pair from it.
pub fn gen_dual_pair<E: Pairing, R: Rng + ?Sized>(
    n: usize,
    psi: Scalar<E>,
    rng: &mut R,
) -> Result<DualBasisPair<E>> {
    if n == 0 {
        return Err(Error::invalid("dual basis dimension must be at least 1"));
    }
    if psi.is_zero() {
        return Err(Error::invalid("psi must be nonzero"));
    }
    loop {
        let x = SquareMatrix::random(n, rng);
        if let Some(pair) = try_dual_pair(x, psi) {
            return Ok(pair);
        }
    }
}

/// Builds the pair for a given `X`: `X* = psi * (X^T)^-1`,
/// `B_i = sum_j x_ij A_j` over `G1`, `C_i = sum_j x*_ij A_j` over `G2`.
pub fn dual_pair_from_matrix<E: Pairing>(
    x: SquareMatrix<Scalar<E>>,
    psi: Scalar<E>,
) -> Result<DualBasisPair<E>> {
    if psi.is_zero() {
        return Err(Error::invalid("psi must be nonzero"));
    }
    if x.dim() == 0 {
        return Err(Error::invalid("dual basis dimension must be at least 1"));
    }
    try_dual_pair(x, psi).ok_or_else(|| Error::invalid("matrix is singular"))
}

fn try_dual_pair<E: Pairing>(
    x: SquareMatrix<Scalar<E>>,
    psi: Scalar<E>,
) -> Option<DualBasisPair<E>> {
    let n = x.dim();
    let x_star = x.transpose().inverse()?.scale(psi);
    let a1 = Basis::canonical(n, E::G1Affine::generator());
    let a2 = Basis::canonical(n, E::G2Affine::generator());
    let left = (0..n)
        .map(|i| lincomb(x.row(i), &a1))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    let right = (0..n)
        .map(|i| lincomb(x_star.row(i), &a2))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    Some(DualBasisPair {
        psi,
        left: Basis { cols: left },
        right: Basis { cols: right },
        x,
        x_star,
    })
}

/// Uniform nonzero scalar.
pub(crate) fn nonzero_scalar<F: Field + UniformRand, R: Rng + ?Sized>(rng: &mut R) -> F {
    loop {
        let s = F::rand(rng);
        if !s.is_zero() {
            return s;
        }
    }
}

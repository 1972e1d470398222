//! Sparse truncated power series in `d` variables.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::scalar::Scalar;

/// Scalar-valued series. No degree cap is stored; products take one explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<S: Scalar = Complex64> {
    dim: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> Series<S> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        let mut s = Self::zero(dim);
        s.add_term(MultiIndex::zero(dim), c);
        s
    }

    pub fn variable(dim: usize, j: usize) -> Self {
        let mut s = Self::zero(dim);
        s.add_term(MultiIndex::unit(dim, j), S::one());
        s
    }

    pub fn monomial(idx: MultiIndex, c: S) -> Self {
        let mut s = Self::zero(idx.dim());
        s.add_term(idx, c);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, idx: &MultiIndex) -> S {
        self.terms.get(idx).copied().unwrap_or_else(S::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, idx: MultiIndex, c: S) {
        debug_assert_eq!(idx.dim(), self.dim);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).min()
    }

    pub fn truncated(&self, cap: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() <= cap)
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    pub fn scaled(&self, c: S) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), *v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }

    pub fn evaluate(&self, z: &[S]) -> S {
        let pows = power_table(z, self.max_degree().unwrap_or(0));
        let mut acc = S::zero();
        for (k, v) in &self.terms {
            acc += *v * monomial_value(&pows, k);
        }
        acc
    }
}

/// Product of two scalar series, truncated to total degree `cap`.
pub fn multiply<S: Scalar>(a: &Series<S>, b: &Series<S>, cap: usize) -> Series<S> {
    debug_assert_eq!(a.dim, b.dim);
    let mut out = Series::zero(a.dim);
    for (ka, va) in &a.terms {
        let da = ka.degree();
        if da > cap {
            continue;
        }
        for (kb, vb) in &b.terms {
            if da + kb.degree() > cap {
                continue;
            }
            out.add_term(ka.add(kb), *va * *vb);
        }
    }
    out
}

/// A map `C^d -> C^d` stored as `index -> (f^1, ..., f^d)`, truncated at `cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeriesMap<S: Scalar = Complex64> {
    dim: usize,
    cap: usize,
    coeffs: BTreeMap<MultiIndex, Vec<S>>,
}

impl<S: Scalar> TruncatedSeriesMap<S> {
    pub fn zero(dim: usize, cap: usize) -> Self {
        Self {
            dim,
            cap,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize, cap: usize) -> Self {
        Self::diagonal(&vec![S::one(); dim], cap)
    }

    pub fn diagonal(diag: &[S], cap: usize) -> Self {
        let d = diag.len();
        let mut m = Self::zero(d, cap);
        for (j, &c) in diag.iter().enumerate() {
            m.add_term(MultiIndex::unit(d, j), j, c);
        }
        m
    }

    /// Linear map with `matrix[i][j]` the coefficient of `z^j` in component `i`.
    pub fn linear(matrix: &[Vec<S>], cap: usize) -> Self {
        let d = matrix.len();
        let mut m = Self::zero(d, cap);
        for (i, row) in matrix.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                m.add_term(MultiIndex::unit(d, j), i, c);
            }
        }
        m
    }

    pub fn from_components(parts: &[Series<S>], cap: usize) -> Self {
        let d = parts.len();
        let mut m = Self::zero(d, cap);
        for (i, p) in parts.iter().enumerate() {
            for (k, v) in p.iter() {
                m.add_term(k.clone(), i, *v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Adds `c` to the coefficient of `z^idx` in `component`. Terms above the cap are dropped.
    pub fn add_term(&mut self, idx: MultiIndex, component: usize, c: S) {
        debug_assert_eq!(idx.dim(), self.dim);
        if c.is_zero() || idx.degree() > self.cap {
            return;
        }
        let d = self.dim;
        let entry = self.coeffs.entry(idx.clone()).or_insert_with(|| vec![S::zero(); d]);
        entry[component] += c;
        if entry.iter().all(S::is_zero) {
            self.coeffs.remove(&idx);
        }
    }

    /// Overwrites a coefficient.
    pub fn set(&mut self, idx: MultiIndex, component: usize, c: S) {
        let old = self.get(&idx, component);
        if old == c {
            return;
        }
        if idx.degree() > self.cap {
            return;
        }
        let d = self.dim;
        let entry = self.coeffs.entry(idx.clone()).or_insert_with(|| vec![S::zero(); d]);
        entry[component] = c;
        if entry.iter().all(S::is_zero) {
            self.coeffs.remove(&idx);
        }
    }

    pub fn get(&self, idx: &MultiIndex, component: usize) -> S {
        self.coeffs.get(idx).map(|v| v[component]).unwrap_or_else(S::zero)
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> Option<&[S]> {
        self.coeffs.get(idx).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &[S])> {
        self.coeffs.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn has_constant_term(&self) -> bool {
        self.coeffs.contains_key(&MultiIndex::zero(self.dim))
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.coeffs.keys().map(MultiIndex::degree).min()
    }

    pub fn component(&self, i: usize) -> Series<S> {
        let mut s = Series::zero(self.dim);
        for (k, v) in &self.coeffs {
            s.add_term(k.clone(), v[i]);
        }
        s
    }

    pub fn components(&self) -> Vec<Series<S>> {
        (0..self.dim).map(|i| self.component(i)).collect()
    }

    pub fn linear_part(&self) -> Vec<Vec<S>> {
        let d = self.dim;
        let mut m = vec![vec![S::zero(); d]; d];
        for j in 0..d {
            if let Some(c) = self.coeffs.get(&MultiIndex::unit(d, j)) {
                for (row, x) in m.iter_mut().zip(c) {
                    row[j] = *x;
                }
            }
        }
        m
    }

    /// Homogeneous part of degree `n`.
    pub fn degree_part(&self, n: usize) -> Self {
        self.filtered(|k| k.degree() == n)
    }

    pub fn filtered(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        Self {
            dim: self.dim,
            cap: self.cap,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn truncated(&self, cap: usize) -> Self {
        let mut t = self.filtered(|k| k.degree() <= cap);
        t.cap = cap;
        t
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        if cap < self.cap {
            return self.truncated(cap);
        }
        self.cap = cap;
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            for (i, c) in v.iter().enumerate() {
                out.add_term(k.clone(), i, *c);
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            for (i, c) in v.iter().enumerate() {
                out.add_term(k.clone(), i, -*c);
            }
        }
        out
    }

    /// Largest coefficient modulus among indices of degree `<= max_degree`.
    pub fn max_abs(&self, max_degree: usize) -> f64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| k.degree() <= max_degree)
            .flat_map(|(_, v)| v.iter().map(S::abs))
            .fold(0.0, f64::max)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(S) -> T) -> TruncatedSeriesMap<T> {
        let mut out = TruncatedSeriesMap::zero(self.dim, self.cap);
        for (k, v) in &self.coeffs {
            for (i, c) in v.iter().enumerate() {
                out.add_term(k.clone(), i, f(*c));
            }
        }
        out
    }

    pub fn to_c64(&self) -> TruncatedSeriesMap<Complex64> {
        self.map_scalars(S::to_c64)
    }
}

impl TruncatedSeriesMap<Complex64> {
    pub fn to_scalar<T: Scalar>(&self) -> TruncatedSeriesMap<T> {
        self.map_scalars(T::from_c64)
    }
}

/// `outer ∘ inner`, exact through total degree `cap` for the stored polynomials.
pub fn compose<S: Scalar>(
    outer: &TruncatedSeriesMap<S>,
    inner: &TruncatedSeriesMap<S>,
    cap: usize,
) -> Result<TruncatedSeriesMap<S>> {
    if outer.dim != inner.dim {
        return Err(Error::DimensionMismatch {
            expected: outer.dim,
            got: inner.dim,
        });
    }
    if inner.has_constant_term() {
        return Err(Error::NonzeroConstant);
    }
    let d = outer.dim;
    let parts = inner.components();
    let mut powers: BTreeMap<MultiIndex, Series<S>> = BTreeMap::new();
    powers.insert(MultiIndex::zero(d), Series::constant(d, S::one()));
    let mut out = TruncatedSeriesMap::zero(d, cap);
    for (alpha, coef) in &outer.coeffs {
        if alpha.degree() > cap {
            continue;
        }
        let p = power(&mut powers, &parts, alpha, cap);
        for (k, v) in p.iter() {
            for (i, c) in coef.iter().enumerate() {
                if !c.is_zero() {
                    out.add_term(k.clone(), i, *c * *v);
                }
            }
        }
    }
    Ok(out)
}

fn power<'a, S: Scalar>(
    memo: &'a mut BTreeMap<MultiIndex, Series<S>>,
    parts: &[Series<S>],
    alpha: &MultiIndex,
    cap: usize,
) -> &'a Series<S> {
    if !memo.contains_key(alpha) {
        let j = alpha.last_nonzero().expect("zero index is seeded");
        let prev = alpha.sub_unit(j).expect("nonzero exponent");
        let base = power(memo, parts, &prev, cap).clone();
        let p = multiply(&base, &parts[j], cap);
        memo.insert(alpha.clone(), p);
    }
    &memo[alpha]
}

/// Compositional inverse through degree `cap`.
pub fn invert<S: Scalar>(h: &TruncatedSeriesMap<S>, cap: usize) -> Result<TruncatedSeriesMap<S>> {
    if h.has_constant_term() {
        return Err(Error::NonzeroConstant);
    }
    let d = h.dim;
    let lin = h.linear_part();
    let lin_inv = invert_matrix(&lin).ok_or(Error::SingularLinearPart)?;
    let l_inv = TruncatedSeriesMap::linear(&lin_inv, cap);
    let nonlinear = h.filtered(|k| k.degree() >= 2);
    // g = L^{-1}(z - N∘g); each pass fixes one more degree.
    let mut g = l_inv.clone();
    for _ in 1..cap {
        let ng = compose(&nonlinear, &g, cap)?;
        let rhs = TruncatedSeriesMap::identity(d, cap).sub(&ng);
        g = compose(&l_inv, &rhs, cap)?;
    }
    Ok(g)
}

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
pub fn invert_matrix<S: Scalar>(m: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = m.len();
    let scale = m.iter().flat_map(|r| r.iter().map(S::abs)).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let t = a[col][j];
                a[r][j] -= f * t;
                let t = inv[col][j];
                inv[r][j] -= f * t;
            }
        }
    }
    Some(inv)
}

pub(crate) fn power_table<S: Scalar>(z: &[S], max_deg: usize) -> Vec<Vec<S>> {
    z.iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(max_deg + 1);
            let mut p = S::one();
            row.push(p);
            for _ in 0..max_deg {
                p = p * x;
                row.push(p);
            }
            row
        })
        .collect()
}

pub(crate) fn monomial_value<S: Scalar>(pows: &[Vec<S>], idx: &MultiIndex) -> S {
    let mut m = S::one();
    for (j, &e) in idx.exponents().iter().enumerate() {
        if e > 0 {
            m = m * pows[j][e as usize];
        }
    }
    m
}

/// Evaluates the stored polynomial map at `z`.
pub fn evaluate_series<S: Scalar>(s: &TruncatedSeriesMap<S>, z: &[S]) -> Vec<S> {
    let maxd = s.coeffs.keys().map(MultiIndex::degree).max().unwrap_or(0);
    let pows = power_table(z, maxd);
    let mut out = vec![S::zero(); s.dim];
    for (k, v) in &s.coeffs {
        let m = monomial_value(&pows, k);
        for (o, c) in out.iter_mut().zip(v) {
            if !c.is_zero() {
                *o += *c * m;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn one_dim(coefs: &[(u16, f64)], cap: usize) -> TruncatedSeriesMap {
        let mut m = TruncatedSeriesMap::zero(1, cap);
        for &(e, v) in coefs {
            m.add_term(MultiIndex::from_slice(&[e]), 0, c(v));
        }
        m
    }

    #[test]
    fn compose_quadratic_with_itself() {
        let f = one_dim(&[(1, 1.0), (2, 1.0)], 4);
        let g = compose(&f, &f, 4).unwrap();
        assert_eq!(g, one_dim(&[(1, 1.0), (2, 2.0), (3, 2.0), (4, 1.0)], 4));
    }

    #[test]
    fn invert_quadratic() {
        let f = one_dim(&[(1, 1.0), (2, 1.0)], 3);
        let g = invert(&f, 3).unwrap();
        assert_eq!(g, one_dim(&[(1, 1.0), (2, -1.0), (3, 2.0)], 3));
    }

    #[test]
    fn constant_term_rejected() {
        let f = one_dim(&[(0, 1.0), (1, 1.0)], 3);
        let id = TruncatedSeriesMap::identity(1, 3);
        assert_eq!(compose(&id, &f, 3), Err(Error::NonzeroConstant));
    }

    #[test]
    fn singular_linear_part_rejected() {
        let f = one_dim(&[(2, 1.0)], 3);
        assert_eq!(invert(&f, 3), Err(Error::SingularLinearPart));
    }

    #[test]
    fn linear_composition_is_matrix_product() {
        let a = vec![vec![c(1.0), c(2.0)], vec![c(0.0), c(3.0)]];
        let b = vec![vec![c(0.5), c(0.0)], vec![c(1.0), c(-1.0)]];
        let ab = compose(
            &TruncatedSeriesMap::linear(&a, 3),
            &TruncatedSeriesMap::linear(&b, 3),
            3,
        )
        .unwrap();
        let expected = vec![vec![c(2.5), c(-2.0)], vec![c(3.0), c(-3.0)]];
        assert_eq!(ab.linear_part(), expected);
        assert_eq!(ab.len(), 2);
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let mut m = TruncatedSeriesMap::<Complex64>::zero(2, 4);
        let idx = MultiIndex::from_slice(&[1, 1]);
        m.add_term(idx.clone(), 0, c(1.0));
        m.add_term(idx, 0, c(-1.0));
        assert!(m.is_empty());
    }

    #[test]
    fn monomial_square() {
        let zw = Series::monomial(MultiIndex::from_slice(&[1, 1]), c(1.0));
        let p = multiply(&zw, &zw, 8);
        assert_eq!(p, Series::monomial(MultiIndex::from_slice(&[2, 2]), c(1.0)));
        assert!(multiply(&zw, &zw, 3).is_empty());
    }
}

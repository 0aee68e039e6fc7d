//! Finite sums `Σ c_{α,β} z^α z̄^β` over one or more complex variables.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{DbarError, Result};
use crate::scalar::{ExactComplex, Scalar};

/// Exponents `(m_j, n_j)` of `z_j^{m_j} z̄_j^{n_j}` for each variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn new(exps: Vec<(u32, u32)>) -> Self {
        Monomial(exps)
    }

    pub fn exps(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    /// Largest single exponent, the quantity bounded by a density's degree.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(m, n)| m.max(n)).max().unwrap_or(0)
    }

    pub fn is_holomorphic(&self) -> bool {
        self.0.iter().all(|&(_, n)| n == 0)
    }

    fn with(&self, j: usize, e: (u32, u32)) -> Self {
        let mut v = self.0.clone();
        v[j] = e;
        Monomial(v)
    }
}

/// A value `coeff · π^pi_power`, the form every exact disc integral takes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiScaled<C> {
    pub coeff: C,
    pub pi_power: usize,
}

impl<C: Scalar> PiScaled<C> {
    pub fn to_c64(&self) -> Result<Complex64> {
        Ok(self.coeff.to_c64()? * PI.powi(self.pi_power as i32))
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }
}

/// Polynomial density in `z, z̄` with coefficients in `C`.
///
/// `max_degree` bounds every exponent in the table. Operators that raise
/// exponents return a density whose bound has been raised accordingly.
/// Equality ignores the bound and compares the term tables.
#[derive(Debug, Clone)]
pub struct Density<C: Scalar> {
    nvars: usize,
    max_degree: u32,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> PartialEq for Density<C> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

pub type ExactDensity = Density<ExactComplex>;
pub type FloatDensity = Density<Complex64>;

impl<C: Scalar> Density<C> {
    pub fn zero(nvars: usize, max_degree: u32) -> Self {
        Self {
            nvars,
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut d = Self::zero(nvars, 0);
        d.accumulate(Monomial(vec![(0, 0); nvars]), c);
        d
    }

    /// Single term `c · Π z_j^{m_j} z̄_j^{n_j}`.
    pub fn monomial(exps: &[(u32, u32)], c: C) -> Self {
        let mono = Monomial(exps.to_vec());
        let mut d = Self::zero(exps.len(), mono.degree());
        d.accumulate(mono, c);
        d
    }

    /// Builds a density from `(exponents, coefficient)` pairs, rejecting any
    /// exponent above `max_degree`.
    pub fn from_terms(
        nvars: usize,
        max_degree: u32,
        terms: impl IntoIterator<Item = (Vec<(u32, u32)>, C)>,
    ) -> Result<Self> {
        let mut d = Self::zero(nvars, max_degree);
        for (exps, c) in terms {
            d.insert(&exps, c)?;
        }
        Ok(d)
    }

    /// Adds `c` to the coefficient of the given monomial.
    pub fn insert(&mut self, exps: &[(u32, u32)], c: C) -> Result<()> {
        if exps.len() != self.nvars {
            return Err(DbarError::Shape(format!(
                "monomial has {} variables, density has {}",
                exps.len(),
                self.nvars
            )));
        }
        let mono = Monomial(exps.to_vec());
        if mono.degree() > self.max_degree {
            return Err(DbarError::Representation(format!(
                "exponent {} exceeds the declared degree {}",
                mono.degree(),
                self.max_degree
            )));
        }
        self.accumulate(mono, c);
        Ok(())
    }

    fn accumulate(&mut self, mono: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        self.max_degree = self.max_degree.max(mono.degree());
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Largest exponent actually present.
    pub fn actual_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[(u32, u32)]) -> C {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    fn check_same_vars(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(DbarError::Shape(format!(
                "densities in {} and {} variables",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let mut out = self.clone();
        out.max_degree = out.max_degree.max(other.max_degree);
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree);
        for (m, v) in &self.terms {
            out.accumulate(m.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let mut out = Self::zero(self.nvars, self.max_degree + other.max_degree);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let exps = a
                    .0
                    .iter()
                    .zip(&b.0)
                    .map(|(&(m1, n1), &(m2, n2))| (m1 + m2, n1 + n2))
                    .collect();
                out.accumulate(Monomial(exps), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// Complex conjugate function `ū`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree);
        for (m, c) in &self.terms {
            let exps = m.0.iter().map(|&(a, b)| (b, a)).collect();
            out.accumulate(Monomial(exps), c.conj());
        }
        out
    }

    /// Wirtinger derivative `∂/∂z_j`.
    pub fn dz(&self, j: usize) -> Self {
        self.map_slice(j, |m, n| {
            if m == 0 {
                vec![]
            } else {
                vec![(m - 1, n, C::ratio(m as i64, 1))]
            }
        })
    }

    /// Wirtinger derivative `∂/∂z̄_j`.
    pub fn dzbar(&self, j: usize) -> Self {
        self.map_slice(j, |m, n| {
            if n == 0 {
                vec![]
            } else {
                vec![(m, n - 1, C::ratio(n as i64, 1))]
            }
        })
    }

    /// Applies a linear map defined on one-variable monomials `z_j^m z̄_j^n`
    /// to variable `j`, leaving the other variables untouched.
    pub fn map_slice(&self, j: usize, f: impl Fn(u32, u32) -> Vec<(u32, u32, C)>) -> Self {
        assert!(j < self.nvars, "variable index {j} out of range");
        let mut out = Self::zero(self.nvars, self.max_degree);
        for (mono, c) in &self.terms {
            let (m, n) = mono.0[j];
            for (m2, n2, k) in f(m, n) {
                out.accumulate(mono.with(j, (m2, n2)), c.clone() * k);
            }
        }
        out
    }

    /// Restriction to the terms not depending on `z̄` in any variable.
    pub fn holomorphic_part(&self) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree);
        for (m, c) in &self.terms {
            if m.is_holomorphic() {
                out.accumulate(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.nvars {
            return Err(DbarError::Shape(format!(
                "point has {} coordinates, density has {} variables",
                z.len(),
                self.nvars
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (mono, c) in &self.terms {
            let mut t = c.to_c64()?;
            for (&(m, n), zj) in mono.0.iter().zip(z) {
                t *= zj.powu(m) * zj.conj().powu(n);
            }
            acc += t;
        }
        if !acc.re.is_finite() || !acc.im.is_finite() {
            return Err(DbarError::ArithmeticOverflow(format!("density value at {z:?} is not finite")));
        }
        Ok(acc)
    }

    /// `⟨u, v⟩ = ∫ u v̄ dν` over the product of unit discs, using
    /// `∫_disc z^a z̄^b dν = δ_{ab} π/(a+1)` per variable.
    pub fn inner(&self, other: &Self) -> Result<PiScaled<C>> {
        self.check_same_vars(other)?;
        // Only pairs with equal m - n in every variable contribute.
        let key = |m: &Monomial| -> Vec<i64> { m.0.iter().map(|&(a, b)| i64::from(a) - i64::from(b)).collect() };
        let mut buckets: BTreeMap<Vec<i64>, Vec<(&Monomial, &C)>> = BTreeMap::new();
        for (b, cb) in &other.terms {
            buckets.entry(key(b)).or_default().push((b, cb));
        }
        let mut acc = C::zero();
        for (a, ca) in &self.terms {
            let Some(partners) = buckets.get(&key(a)) else { continue };
            for (b, cb) in partners {
                // z^m z̄^n times conj(z^{m'} z̄^{n'}) integrates to π/(m+n'+1) per variable.
                let mut den: i64 = 1;
                for (&(m, _), &(_, n2)) in a.0.iter().zip(&b.0) {
                    den = den
                        .checked_mul(i64::from(m + n2) + 1)
                        .ok_or_else(|| DbarError::ArithmeticOverflow("monomial integral denominator".into()))?;
                }
                acc = acc + ca.clone() * cb.conj() * C::ratio(1, den);
            }
        }
        Ok(PiScaled {
            coeff: acc,
            pi_power: self.nvars,
        })
    }

    /// Largest coefficient magnitude, the exact-mode residual measure.
    pub fn max_abs_coeff(&self) -> Result<f64> {
        self.terms
            .values()
            .map(|c| c.norm_f64())
            .try_fold(0.0_f64, |acc, v| Ok(acc.max(v?)))
    }

    pub fn to_float(&self) -> Result<FloatDensity> {
        let mut out = FloatDensity::zero(self.nvars, self.max_degree);
        for (m, c) in &self.terms {
            out.accumulate(m.clone(), c.to_c64()?);
        }
        Ok(out)
    }
}

impl ExactDensity {
    /// Exact density with the same coefficients as a float density.
    pub fn from_float(d: &FloatDensity) -> Result<Self> {
        let mut out = ExactDensity::zero(d.nvars, d.max_degree);
        for (m, c) in &d.terms {
            out.accumulate(m.clone(), ExactComplex::from_c64(*c)?);
        }
        Ok(out)
    }
}

impl<C: Scalar + fmt::Display> fmt::Display for Density<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (j, &(a, b)) in m.0.iter().enumerate() {
                if a > 0 {
                    write!(f, " z{}^{a}", j + 1)?;
                }
                if b > 0 {
                    write!(f, " zb{}^{b}", j + 1)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::gauss;
    use num_traits::One;

    fn z(m: u32, n: u32) -> ExactDensity {
        ExactDensity::monomial(&[(m, n)], ExactComplex::one())
    }

    #[test]
    fn disc_inner_products() {
        let one = z(0, 0);
        let zz = z(1, 0);
        let ip = one.inner(&one).unwrap();
        assert_eq!(ip.coeff, ExactComplex::one());
        assert_eq!(ip.pi_power, 1);
        assert_eq!(zz.inner(&zz).unwrap().coeff, gauss(1, 0, 2));
        assert!(zz.inner(&one).unwrap().is_zero());
        assert!((zz.inner(&zz).unwrap().to_c64().unwrap().re - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric() {
        let u = z(2, 1).scale(&gauss(1, 2, 3)).add(&z(1, 0)).unwrap();
        let v = z(1, 0).scale(&gauss(-1, 1, 5)).add(&z(3, 2)).unwrap();
        let uv = u.inner(&v).unwrap().coeff;
        let vu = v.inner(&u).unwrap().coeff;
        assert_eq!(uv, Scalar::conj(&vu));
    }

    #[test]
    fn wirtinger_derivatives_on_monomials() {
        let u = ExactDensity::monomial(&[(0, 1), (0, 1)], ExactComplex::one());
        assert_eq!(u.dzbar(0), ExactDensity::monomial(&[(0, 0), (0, 1)], ExactComplex::one()));
        let w = ExactDensity::monomial(&[(2, 0), (0, 1)], ExactComplex::one());
        assert_eq!(w.dz(0), ExactDensity::monomial(&[(1, 0), (0, 1)], gauss(2, 0, 1)));
        assert!(w.dzbar(0).is_zero());
    }

    #[test]
    fn insert_rejects_exponent_above_degree() {
        let mut d = ExactDensity::zero(1, 2);
        assert!(d.insert(&[(3, 0)], ExactComplex::one()).is_err());
        assert!(d.insert(&[(2, 2)], ExactComplex::one()).is_ok());
        assert!(d.insert(&[(1, 0), (0, 0)], ExactComplex::one()).is_err());
    }

    #[test]
    fn cancellation_removes_terms() {
        let u = z(1, 1);
        assert!(u.sub(&u).unwrap().is_zero());
    }

    #[test]
    fn evaluation() {
        let u = z(1, 1);
        let v = u.eval(&[Complex64::from_polar(0.5, 1.3)]).unwrap();
        assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }
}

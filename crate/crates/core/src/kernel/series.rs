//! Truncated supercommutative formal power series in dual variables t^α,
//! and series-valued vectors over a graded basis.
//!
//! Variable α has the parity of the basis element e_α (|t^α| = −|e_α|).
//! Odd variables square to zero. Monomials are stored canonically as
//! packed exponent vectors (4 bits per variable) with the Koszul sign of
//! sorting folded into the coefficient; no term exceeds the truncation
//! order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::Zero;

use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::rational::{factorial, format_rat, Rat};
use crate::{Error, Result};

/// Default cap on the series truncation order.
pub const DEFAULT_SERIES_ORDER_CAP: usize = 16;

/// Packed-exponent limits: 4 bits per variable, 16 variables.
const FIELD_BITS: u32 = 4;
const FIELD_MASK: u64 = 0xF;
pub const MAX_SERIES_VARS: usize = 16;
pub const MAX_SERIES_ORDER: usize = 15;

#[inline]
fn field(key: u64, v: usize) -> u64 {
    (key >> (FIELD_BITS * v as u32)) & FIELD_MASK
}

#[inline]
fn bump(key: u64, v: usize) -> u64 {
    key + (1u64 << (FIELD_BITS * v as u32))
}

/// A truncated supercommutative power series over the dual variables of
/// `basis`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SuperSeries {
    basis: Arc<GradedBasis>,
    order: usize,
    /// bit v set ⟺ variable v is odd
    odd_mask: u64,
    terms: BTreeMap<u64, Rat>,
}

fn odd_mask_of(basis: &GradedBasis) -> u64 {
    let mut m = 0u64;
    for v in 0..basis.dim() {
        if basis.degree(v) % 2 != 0 {
            m |= 1 << v;
        }
    }
    m
}

impl SuperSeries {
    pub fn zero(basis: Arc<GradedBasis>, order: usize) -> Self {
        assert!(basis.dim() <= MAX_SERIES_VARS, "too many series variables");
        assert!(order <= MAX_SERIES_ORDER, "series order exceeds the cap");
        let odd_mask = odd_mask_of(&basis);
        SuperSeries {
            basis,
            order,
            odd_mask,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(basis: Arc<GradedBasis>, order: usize, c: Rat) -> Self {
        let mut s = SuperSeries::zero(basis, order);
        s.add_term(&[], c);
        s
    }

    pub fn one(basis: Arc<GradedBasis>, order: usize) -> Self {
        SuperSeries::constant(basis, order, Rat::from_integer(1.into()))
    }

    /// The variable t^α.
    pub fn variable(basis: Arc<GradedBasis>, order: usize, alpha: usize) -> Result<Self> {
        if alpha >= basis.dim() {
            return Err(Error::argument(format!("variable index {alpha} out of range")));
        }
        let mut s = SuperSeries::zero(basis, order);
        s.add_term(&[alpha], Rat::from_integer(1.into()));
        Ok(s)
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn key_len(&self, key: u64) -> usize {
        let mut total = 0usize;
        for v in 0..self.basis.dim() {
            total += field(key, v) as usize;
        }
        total
    }

    fn unpack(&self, key: u64) -> Vec<usize> {
        let mut word = Vec::with_capacity(self.key_len(key));
        for v in 0..self.basis.dim() {
            for _ in 0..field(key, v) {
                word.push(v);
            }
        }
        word
    }

    /// Packs an arbitrary-order word, returning (key, sign); `None` when
    /// an odd variable repeats.
    fn pack(&self, word: &[usize]) -> Option<(u64, i32)> {
        let mut key = 0u64;
        let mut sign = 1i32;
        let mut odd_seen = 0u64;
        for &v in word {
            debug_assert!(v < self.basis.dim());
            if self.odd_mask >> v & 1 == 1 {
                if odd_seen >> v & 1 == 1 {
                    return None;
                }
                // moving t^v left past the odd variables already placed
                // that have a larger index
                let higher = odd_seen & !((1u64 << (v + 1)) - 1);
                if higher.count_ones() % 2 == 1 {
                    sign = -sign;
                }
                odd_seen |= 1 << v;
            }
            key = bump(key, v);
        }
        Some((key, sign))
    }

    /// Iterates terms as (word, coefficient) with words unpacked in
    /// canonical ascending order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &Rat)> {
        self.terms.iter().map(|(&k, c)| (self.unpack(k), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, word: &[usize]) -> Rat {
        match self.pack(word) {
            None => Rat::zero(),
            Some((key, sign)) => {
                let c = self.terms.get(&key).cloned().unwrap_or_else(Rat::zero);
                if sign < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    pub fn constant_term(&self) -> Rat {
        self.terms.get(&0).cloned().unwrap_or_else(Rat::zero)
    }

    /// Adds `c·word`, normalizing; words beyond the truncation order are
    /// dropped.
    pub fn add_term(&mut self, word: &[usize], c: Rat) {
        if c.is_zero() || word.len() > self.order {
            return;
        }
        let Some((key, sign)) = self.pack(word) else {
            return;
        };
        let signed = if sign < 0 { -c } else { c };
        let slot = self.terms.entry(key).or_insert_with(Rat::zero);
        *slot += signed;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn add_key(&mut self, key: u64, c: Rat) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (&k, c) in &other.terms {
            out.add_key(k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (&k, c) in &other.terms {
            out.add_key(k, -c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rat) -> SuperSeries {
        if s.is_zero() {
            return SuperSeries {
                basis: self.basis.clone(),
                order: self.order,
                odd_mask: self.odd_mask,
                terms: BTreeMap::new(),
            };
        }
        SuperSeries {
            basis: self.basis.clone(),
            order: self.order,
            odd_mask: self.odd_mask,
            terms: self.terms.iter().map(|(&k, c)| (k, c * s)).collect(),
        }
    }

    fn compatible(&self, other: &SuperSeries) -> Result<()> {
        if self.basis != other.basis || self.order != other.order {
            return Err(Error::argument("series variable set or order mismatch"));
        }
        Ok(())
    }

    /// The sign of merging two canonical monomials, or `None` when an
    /// odd variable collides.
    #[inline]
    fn merge_sign(&self, k1: u64, k2: u64) -> Option<i32> {
        let mut o1 = 0u64;
        let mut o2 = 0u64;
        let mut odd = self.odd_mask;
        while odd != 0 {
            let v = odd.trailing_zeros() as usize;
            odd &= odd - 1;
            if field(k1, v) > 0 {
                o1 |= 1 << v;
            }
            if field(k2, v) > 0 {
                o2 |= 1 << v;
            }
        }
        if o1 & o2 != 0 {
            return None;
        }
        // each odd v in k2 passes the odd variables of k1 with index > v
        let mut sign = 1i32;
        let mut rem = o2;
        while rem != 0 {
            let v = rem.trailing_zeros() as usize;
            rem &= rem - 1;
            let higher = o1 & !((1u64 << (v + 1)) - 1);
            if higher.count_ones() % 2 == 1 {
                sign = -sign;
            }
        }
        Some(sign)
    }

    /// Supercommutative product, truncated at the common order.
    pub fn mul(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.compatible(other)?;
        let mut out = SuperSeries::zero(self.basis.clone(), self.order);
        let len1: Vec<(u64, usize)> = self.terms.keys().map(|&k| (k, self.key_len(k))).collect();
        for (k1, l1) in len1 {
            let c1 = &self.terms[&k1];
            for (&k2, c2) in &other.terms {
                let l2 = self.key_len(k2);
                if l1 + l2 > self.order {
                    continue;
                }
                let Some(sign) = self.merge_sign(k1, k2) else {
                    continue;
                };
                let prod = c1 * c2;
                out.add_key(k1 + k2, if sign < 0 { -prod } else { prod });
            }
        }
        Ok(out)
    }

    /// The graded derivation ∂_α with ∂_α t^β = δ_α^β.
    pub fn derive(&self, alpha: usize) -> Result<SuperSeries> {
        if alpha >= self.basis.dim() {
            return Err(Error::argument(format!("variable index {alpha} out of range")));
        }
        let odd_var = self.odd_mask >> alpha & 1 == 1;
        let mut out = SuperSeries::zero(self.basis.clone(), self.order);
        for (&k, c) in &self.terms {
            let e = field(k, alpha);
            if e == 0 {
                continue;
            }
            let reduced = k - (1u64 << (FIELD_BITS * alpha as u32));
            if odd_var {
                // sign: odd variables with smaller index stand in front
                let mut sign = 1i32;
                let mut odd = self.odd_mask & ((1u64 << alpha) - 1);
                let mut count = 0u32;
                while odd != 0 {
                    let v = odd.trailing_zeros() as usize;
                    odd &= odd - 1;
                    count += field(k, v) as u32;
                }
                if count % 2 == 1 {
                    sign = -sign;
                }
                out.add_key(reduced, if sign < 0 { -c.clone() } else { c.clone() });
            } else {
                out.add_key(reduced, c * Rat::from_integer((e as i64).into()));
            }
        }
        Ok(out)
    }

    /// exp of a series with zero constant term.
    pub fn exp(&self) -> Result<SuperSeries> {
        if !self.constant_term().is_zero() {
            return Err(Error::argument("exp needs zero constant term"));
        }
        let mut out = SuperSeries::one(self.basis.clone(), self.order);
        let mut power = SuperSeries::one(self.basis.clone(), self.order);
        for k in 1..=self.order {
            power = power.mul(self)?;
            if power.is_zero() {
                break;
            }
            out = out.add(&power.scale(&factorial(k).recip()))?;
        }
        Ok(out)
    }

    /// log of a series with constant term 1.
    pub fn log(&self) -> Result<SuperSeries> {
        use num::One;
        if !self.constant_term().is_one() {
            return Err(Error::argument("log needs constant term 1"));
        }
        let w = self.sub(&SuperSeries::one(self.basis.clone(), self.order))?;
        let mut out = SuperSeries::zero(self.basis.clone(), self.order);
        let mut power = SuperSeries::one(self.basis.clone(), self.order);
        for k in 1..=self.order {
            power = power.mul(&w)?;
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 0 { -1i64 } else { 1 };
            out = out.add(&power.scale(&Rat::new(sign.into(), (k as i64).into())))?;
        }
        Ok(out)
    }

    /// Total parity of a word under the dual-variable grading.
    pub fn word_parity(&self, word: &[usize]) -> bool {
        word.iter().filter(|&&v| self.basis.degree(v) % 2 != 0).count() % 2 != 0
    }

    pub fn display(&self) -> SeriesDisplay<'_> {
        SeriesDisplay { s: self }
    }
}

pub struct SeriesDisplay<'a> {
    s: &'a SuperSeries,
}

impl fmt::Display for SeriesDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.s.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in self.s.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_rat(c))?;
            for v in w {
                write!(f, "*t^{{{}}}", self.s.basis.label(v))?;
            }
        }
        Ok(())
    }
}

/// An element of (series ⊗ V): for each basis index of V, a series
/// coefficient. Used for Maurer–Cartan elements Γ.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeriesVector {
    /// Variable space (dual coordinates).
    pub vars: Arc<GradedBasis>,
    /// Value space.
    pub space: Arc<GradedBasis>,
    pub order: usize,
    comps: BTreeMap<usize, SuperSeries>,
}

impl SeriesVector {
    pub fn zero(vars: Arc<GradedBasis>, space: Arc<GradedBasis>, order: usize) -> Self {
        SeriesVector {
            vars,
            space,
            order,
            comps: BTreeMap::new(),
        }
    }

    pub fn component(&self, i: usize) -> SuperSeries {
        self.comps
            .get(&i)
            .cloned()
            .unwrap_or_else(|| SuperSeries::zero(self.vars.clone(), self.order))
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, &SuperSeries)> {
        self.comps.iter().map(|(&i, s)| (i, s))
    }

    pub fn add_term(&mut self, word: &[usize], i: usize, c: Rat) {
        let slot = self
            .comps
            .entry(i)
            .or_insert_with(|| SuperSeries::zero(self.vars.clone(), self.order));
        slot.add_term(word, c);
        if slot.is_zero() {
            self.comps.remove(&i);
        }
    }

    pub fn add(&self, other: &SeriesVector) -> Result<SeriesVector> {
        if self.vars != other.vars || self.space != other.space || self.order != other.order {
            return Err(Error::argument("series vector shape mismatch"));
        }
        let mut out = self.clone();
        for (i, s) in other.components() {
            for (w, c) in s.terms() {
                out.add_term(&w, i, c.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rat) -> SeriesVector {
        let mut out = SeriesVector::zero(self.vars.clone(), self.space.clone(), self.order);
        for (i, comp) in self.components() {
            let scaled = comp.scale(s);
            for (w, c) in scaled.terms() {
                out.add_term(&w, i, c.clone());
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Applies an arity-1 map componentwise (series coefficients pass
    /// through).
    pub fn map_space(&self, f: impl Fn(usize) -> Element) -> SeriesVector {
        let mut out = SeriesVector::zero(self.vars.clone(), self.space.clone(), self.order);
        for (i, s) in self.components() {
            let img = f(i);
            for (j, c) in img.iter() {
                for (w, sc) in s.terms() {
                    out.add_term(&w, j, sc * c);
                }
            }
        }
        out
    }
}

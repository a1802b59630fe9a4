//! Sparse multilinear maps between graded spaces.
//!
//! [`MultiMap`] is graded-symmetric: entries are stored on the canonical
//! (ascending) multi-index with the Koszul sign of sorting folded into
//! the coefficient, so each symmetric orbit has one representative.
//! [`TensorMap`] stores plain tensor entries with no symmetry assumed.
//! [`PolyMultiMap`] is a `MultiMap` whose values are polynomial in a
//! flow parameter τ.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::Zero;

use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::poly::Poly;
use crate::kernel::rational::Rat;
use crate::{Error, Result};

/// Sorts a multi-index ascending and returns the Koszul sign of the
/// sorting rearrangement. Returns `None` when the index contains a
/// repeated odd basis element (the symmetrization vanishes).
pub fn sort_index(idx: &[usize], basis: &GradedBasis) -> Option<(Vec<usize>, i32)> {
    let mut v: Vec<usize> = idx.to_vec();
    let mut sign = 1i32;
    // insertion sort, tracking odd-odd adjacent swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            if basis.degree(v[j - 1]) % 2 != 0 && basis.degree(v[j]) % 2 != 0 {
                sign = -sign;
            }
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] && basis.degree(w[0]) % 2 != 0 {
            return None;
        }
    }
    Some((v, sign))
}

/// A graded-symmetric n-ary linear map S^n(source) → target of fixed
/// degree, with exact rational structure constants.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiMap {
    arity: usize,
    degree: i64,
    source: Arc<GradedBasis>,
    target: Arc<GradedBasis>,
    entries: BTreeMap<Vec<usize>, Element>,
}

impl MultiMap {
    pub fn zero(
        arity: usize,
        degree: i64,
        source: Arc<GradedBasis>,
        target: Arc<GradedBasis>,
    ) -> Self {
        assert!(arity >= 1, "arity must be positive");
        MultiMap {
            arity,
            degree,
            source,
            target,
            entries: BTreeMap::new(),
        }
    }

    /// The identity map on `basis` (arity 1, degree 0).
    pub fn identity(basis: Arc<GradedBasis>) -> Self {
        let mut m = MultiMap::zero(1, 0, basis.clone(), basis);
        for i in 0..m.source.dim() {
            m.add_entry(&[i], Element::basis(i)).unwrap();
        }
        m
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn source(&self) -> &Arc<GradedBasis> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedBasis> {
        &self.target
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Element)> {
        self.entries.iter()
    }

    /// Adds `value` at `idx` (any order); the Koszul sign of sorting is
    /// folded in. Homogeneity of the value against the map degree is
    /// enforced.
    pub fn add_entry(&mut self, idx: &[usize], value: Element) -> Result<()> {
        if idx.len() != self.arity {
            return Err(Error::argument(format!(
                "index length {} does not match arity {}",
                idx.len(),
                self.arity
            )));
        }
        for &i in idx {
            if i >= self.source.dim() {
                return Err(Error::argument(format!("source index {i} out of range")));
            }
        }
        if value.is_zero() {
            return Ok(());
        }
        let in_deg: i64 = idx.iter().map(|&i| self.source.degree(i)).sum();
        match value.homogeneous_degree(&self.target) {
            Some(d) if d == in_deg + self.degree => {}
            _ => {
                return Err(Error::argument(format!(
                    "entry at {idx:?} is not homogeneous of degree {}",
                    in_deg + self.degree
                )))
            }
        }
        let Some((key, sign)) = sort_index(idx, &self.source) else {
            // repeated odd index: the symmetric-orbit value is zero
            return Ok(());
        };
        let signed = if sign < 0 { value.scale(&-Rat::from_integer(1.into())) } else { value };
        let slot = self.entries.entry(key.clone()).or_insert_with(Element::zero);
        *slot = slot.add(&signed);
        if slot.is_zero() {
            self.entries.remove(&key);
        }
        Ok(())
    }

    /// Evaluates on a tuple of basis indices, in any order.
    pub fn apply_basis(&self, idx: &[usize]) -> Element {
        debug_assert_eq!(idx.len(), self.arity);
        let Some((key, sign)) = sort_index(idx, &self.source) else {
            return Element::zero();
        };
        match self.entries.get(&key) {
            None => Element::zero(),
            Some(v) => {
                if sign < 0 {
                    v.scale(&-Rat::from_integer(1.into()))
                } else {
                    v.clone()
                }
            }
        }
    }

    /// Multilinear evaluation on elements. Scalars are even, so the
    /// expansion itself introduces no signs.
    pub fn apply(&self, args: &[&Element]) -> Element {
        debug_assert_eq!(args.len(), self.arity);
        let mut out = Element::zero();
        let mut idx = vec![0usize; self.arity];
        self.expand(args, 0, &mut idx, &Rat::from_integer(1.into()), &mut out);
        out
    }

    fn expand(&self, args: &[&Element], pos: usize, idx: &mut Vec<usize>, coeff: &Rat, out: &mut Element) {
        if pos == args.len() {
            let v = self.apply_basis(idx);
            for (i, c) in v.iter() {
                out.add_term(i, c * coeff);
            }
            return;
        }
        for (i, c) in args[pos].iter() {
            idx[pos] = i;
            self.expand(args, pos + 1, idx, &(coeff * c), out);
        }
    }

    pub fn add(&self, other: &MultiMap) -> Result<MultiMap> {
        if self.arity != other.arity
            || self.degree != other.degree
            || self.source != other.source
            || self.target != other.target
        {
            return Err(Error::argument("multimap shape mismatch in add"));
        }
        let mut out = self.clone();
        for (k, v) in other.entries() {
            out.add_entry(k, v.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rat) -> MultiMap {
        let mut out = MultiMap::zero(self.arity, self.degree, self.source.clone(), self.target.clone());
        if s.is_zero() {
            return out;
        }
        for (k, v) in self.entries() {
            out.entries.insert(k.clone(), v.scale(s));
        }
        out
    }

    pub fn sub(&self, other: &MultiMap) -> Result<MultiMap> {
        self.add(&other.scale(&-Rat::from_integer(1.into())))
    }

    /// Composition `self ∘ other` of arity-1 maps.
    pub fn compose1(&self, other: &MultiMap) -> Result<MultiMap> {
        if self.arity != 1 || other.arity != 1 {
            return Err(Error::argument("compose1 needs arity-1 maps"));
        }
        if other.target != self.source {
            return Err(Error::argument("compose1 basis mismatch"));
        }
        let mut out = MultiMap::zero(1, self.degree + other.degree, other.source.clone(), self.target.clone());
        for i in 0..other.source.dim() {
            let mid = other.apply_basis(&[i]);
            let v = self.apply(&[&mid]);
            out.add_entry(&[i], v)?;
        }
        Ok(out)
    }

    /// All canonical (sorted, nonvanishing) multi-indices of this arity
    /// over the source basis.
    pub fn canonical_indices(&self) -> Vec<Vec<usize>> {
        canonical_indices(&self.source, self.arity)
    }
}

/// Sorted multi-indices of length `arity` over `basis`, skipping those
/// with a repeated odd element.
pub fn canonical_indices(basis: &GradedBasis, arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    loop {
        let valid = idx
            .windows(2)
            .all(|w| w[0] != w[1] || basis.degree(w[0]) % 2 == 0);
        if valid {
            out.push(idx.clone());
        }
        // next non-decreasing tuple
        let mut k = arity;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] + 1 < basis.dim() {
                let v = idx[k] + 1;
                for item in idx.iter_mut().skip(k) {
                    *item = v;
                }
                break;
            }
        }
    }
}

/// A plain n-ary tensor map T^n(source) → target; no symmetry assumed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorMap {
    arity: usize,
    degree: i64,
    source: Arc<GradedBasis>,
    target: Arc<GradedBasis>,
    entries: BTreeMap<Vec<usize>, Element>,
}

impl TensorMap {
    pub fn zero(
        arity: usize,
        degree: i64,
        source: Arc<GradedBasis>,
        target: Arc<GradedBasis>,
    ) -> Self {
        assert!(arity >= 1);
        TensorMap {
            arity,
            degree,
            source,
            target,
            entries: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn source(&self) -> &Arc<GradedBasis> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedBasis> {
        &self.target
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Element)> {
        self.entries.iter()
    }

    pub fn add_entry(&mut self, idx: &[usize], value: Element) -> Result<()> {
        if idx.len() != self.arity {
            return Err(Error::argument("tensor index length mismatch"));
        }
        if value.is_zero() {
            return Ok(());
        }
        let slot = self.entries.entry(idx.to_vec()).or_insert_with(Element::zero);
        *slot = slot.add(&value);
        if slot.is_zero() {
            self.entries.remove(idx);
        }
        Ok(())
    }

    pub fn apply_basis(&self, idx: &[usize]) -> Element {
        self.entries.get(idx).cloned().unwrap_or_else(Element::zero)
    }

    pub fn apply(&self, args: &[&Element]) -> Element {
        debug_assert_eq!(args.len(), self.arity);
        let mut out = Element::zero();
        let mut idx = vec![0usize; self.arity];
        self.expand(args, 0, &mut idx, &Rat::from_integer(1.into()), &mut out);
        out
    }

    fn expand(&self, args: &[&Element], pos: usize, idx: &mut Vec<usize>, coeff: &Rat, out: &mut Element) {
        if pos == args.len() {
            let v = self.apply_basis(idx);
            for (i, c) in v.iter() {
                out.add_term(i, c * coeff);
            }
            return;
        }
        for (i, c) in args[pos].iter() {
            idx[pos] = i;
            self.expand(args, pos + 1, idx, &(coeff * c), out);
        }
    }
}

/// An element whose coefficients are polynomials in the flow parameter:
/// coefficient `k` multiplies τ^k.
pub type PolyElement = Vec<Element>;

pub fn poly_element_zero() -> PolyElement {
    Vec::new()
}

pub fn poly_element_constant(e: Element) -> PolyElement {
    if e.is_zero() {
        Vec::new()
    } else {
        vec![e]
    }
}

pub fn poly_element_add(a: &PolyElement, b: &PolyElement) -> PolyElement {
    let mut out = Vec::new();
    for k in 0..a.len().max(b.len()) {
        let zero = Element::zero();
        let x = a.get(k).unwrap_or(&zero);
        let y = b.get(k).unwrap_or(&zero);
        out.push(x.add(y));
    }
    trim_poly_element(out)
}

pub fn poly_element_scale(a: &PolyElement, s: &Rat) -> PolyElement {
    trim_poly_element(a.iter().map(|e| e.scale(s)).collect())
}

fn trim_poly_element(mut v: PolyElement) -> PolyElement {
    while v.last().is_some_and(|e| e.is_zero()) {
        v.pop();
    }
    v
}

/// Evaluates a τ-polynomial element at a rational τ.
pub fn poly_element_eval(a: &PolyElement, tau: &Rat) -> Element {
    let mut out = Element::zero();
    let mut p = Rat::from_integer(1.into());
    for e in a {
        for (i, c) in e.iter() {
            out.add_term(i, c * &p);
        }
        p *= tau;
    }
    out
}

/// A graded-symmetric n-ary map with values polynomial in τ.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyMultiMap {
    arity: usize,
    degree: i64,
    source: Arc<GradedBasis>,
    target: Arc<GradedBasis>,
    entries: BTreeMap<Vec<usize>, PolyElement>,
}

impl PolyMultiMap {
    pub fn zero(
        arity: usize,
        degree: i64,
        source: Arc<GradedBasis>,
        target: Arc<GradedBasis>,
    ) -> Self {
        assert!(arity >= 1);
        PolyMultiMap {
            arity,
            degree,
            source,
            target,
            entries: BTreeMap::new(),
        }
    }

    pub fn constant(m: &MultiMap) -> Self {
        let mut out = PolyMultiMap::zero(m.arity(), m.degree(), m.source().clone(), m.target().clone());
        for (k, v) in m.entries() {
            out.entries.insert(k.clone(), poly_element_constant(v.clone()));
        }
        out
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn source(&self) -> &Arc<GradedBasis> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedBasis> {
        &self.target
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &PolyElement)> {
        self.entries.iter()
    }

    /// Adds a polynomial value at a canonical or general index; the sign
    /// of sorting is folded into every τ-coefficient.
    pub fn add_entry(&mut self, idx: &[usize], value: PolyElement) -> Result<()> {
        if idx.len() != self.arity {
            return Err(Error::argument("poly index length mismatch"));
        }
        let Some((key, sign)) = sort_index(idx, &self.source) else {
            return Ok(());
        };
        let signed = if sign < 0 {
            poly_element_scale(&value, &-Rat::from_integer(1.into()))
        } else {
            value
        };
        let slot = self.entries.entry(key.clone()).or_insert_with(poly_element_zero);
        *slot = poly_element_add(slot, &signed);
        if slot.is_empty() {
            self.entries.remove(&key);
        }
        Ok(())
    }

    pub fn apply_basis(&self, idx: &[usize]) -> PolyElement {
        let Some((key, sign)) = sort_index(idx, &self.source) else {
            return poly_element_zero();
        };
        match self.entries.get(&key) {
            None => poly_element_zero(),
            Some(v) => {
                if sign < 0 {
                    poly_element_scale(v, &-Rat::from_integer(1.into()))
                } else {
                    v.clone()
                }
            }
        }
    }

    /// Evaluates the whole family at a fixed τ.
    pub fn eval(&self, tau: &Rat) -> MultiMap {
        let mut out = MultiMap::zero(self.arity, self.degree, self.source.clone(), self.target.clone());
        for (k, v) in self.entries() {
            out.add_entry(k, poly_element_eval(v, tau)).expect("consistent entry");
        }
        out
    }

    /// The antiderivative in τ with zero constant term.
    pub fn integrate(&self) -> PolyMultiMap {
        let mut out = PolyMultiMap::zero(self.arity, self.degree, self.source.clone(), self.target.clone());
        for (k, v) in self.entries() {
            let mut integ: PolyElement = vec![Element::zero()];
            for (p, e) in v.iter().enumerate() {
                integ.push(e.scale(&Rat::new(1.into(), ((p + 1) as i64).into())));
            }
            out.entries.insert(k.clone(), trim_poly_element(integ));
        }
        out
    }

    pub fn add(&self, other: &PolyMultiMap) -> Result<PolyMultiMap> {
        if self.arity != other.arity || self.degree != other.degree {
            return Err(Error::argument("poly multimap shape mismatch"));
        }
        let mut out = self.clone();
        for (k, v) in other.entries() {
            out.add_entry(k, v.clone())?;
        }
        Ok(out)
    }

    /// Highest power of τ appearing in any entry.
    pub fn tau_degree(&self) -> usize {
        self.entries.values().map(|v| v.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Per-entry coefficients as [`Poly`] values, for serialization.
    pub fn entry_polys(&self) -> Vec<(Vec<usize>, usize, Vec<Poly>)> {
        let mut out = Vec::new();
        for (k, v) in self.entries() {
            for j in 0..self.target.dim() {
                let coeffs: Vec<Rat> = v.iter().map(|e| e.coeff(j)).collect();
                let p = Poly::new(coeffs);
                if !p.is_zero() {
                    out.push((k.clone(), j, vec![p]));
                }
            }
        }
        out
    }
}

/// Multilinear application of a constant map to τ-polynomial arguments:
/// the τ-powers convolve.
pub fn apply_poly(map: &MultiMap, args: &[&PolyElement]) -> PolyElement {
    let max_len: usize = args.iter().map(|a| a.len().max(1)).sum::<usize>();
    let mut out: PolyElement = Vec::with_capacity(max_len);
    let mut chosen: Vec<&Element> = Vec::with_capacity(args.len());
    fn rec<'a>(
        map: &MultiMap,
        args: &[&'a PolyElement],
        pos: usize,
        tau_pow: usize,
        chosen: &mut Vec<&'a Element>,
        out: &mut PolyElement,
    ) {
        if pos == args.len() {
            let refs: Vec<&Element> = chosen.clone();
            let v = map.apply(&refs);
            if !v.is_zero() {
                while out.len() <= tau_pow {
                    out.push(Element::zero());
                }
                out[tau_pow] = out[tau_pow].add(&v);
            }
            return;
        }
        let arg = args[pos];
        if arg.is_empty() {
            return;
        }
        for (p, e) in arg.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            chosen.push(e);
            rec(map, args, pos + 1, tau_pow + p, chosen, out);
            chosen.pop();
        }
    }
    rec(map, args, 0, 0, &mut chosen, &mut out);
    trim_poly_element(out)
}

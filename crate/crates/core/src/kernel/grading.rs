//! Pointed graded vector spaces with a fixed finite basis, and sparse
//! elements over them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::kernel::rational::Rat;
use crate::{Error, Result};

/// A finite pointed graded vector space, presented by an ordered basis.
///
/// The distinguished unit element sits at index 0 and has degree 0.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GradedBasis {
    labels: Vec<String>,
    degrees: Vec<i64>,
    pointed: bool,
}

impl GradedBasis {
    /// Builds a pointed basis. The first label is the unit and must have
    /// degree 0; labels must be unique.
    pub fn pointed(labels: Vec<String>, degrees: Vec<i64>) -> Result<Arc<Self>> {
        if labels.len() != degrees.len() {
            return Err(Error::argument("labels/degrees length mismatch"));
        }
        if labels.is_empty() {
            return Err(Error::argument("empty basis"));
        }
        if degrees[0] != 0 {
            return Err(Error::argument("unit must have degree 0"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::argument(format!("duplicate basis label {l:?}")));
            }
        }
        Ok(Arc::new(GradedBasis {
            labels,
            degrees,
            pointed: true,
        }))
    }

    /// A basis with no distinguished unit (spaces of random variables).
    /// Degree constraints on index 0 are not enforced.
    pub fn plain(labels: Vec<String>, degrees: Vec<i64>) -> Result<Arc<Self>> {
        if labels.len() != degrees.len() {
            return Err(Error::argument("labels/degrees length mismatch"));
        }
        if labels.is_empty() {
            return Err(Error::argument("empty basis"));
        }
        Ok(Arc::new(GradedBasis {
            labels,
            degrees,
            pointed: false,
        }))
    }

    /// The one-dimensional pointed space 𝕜.
    pub fn ground_field() -> Arc<Self> {
        Arc::new(GradedBasis {
            labels: vec!["1".into()],
            degrees: vec![0],
            pointed: true,
        })
    }

    /// Whether a distinguished unit is present (index 0).
    pub fn is_pointed(&self) -> bool {
        self.pointed
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn unit_index(&self) -> usize {
        0
    }

    /// Indices of basis elements of a given degree.
    pub fn indices_of_degree(&self, d: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.degrees[i] == d).collect()
    }

    /// Sorted list of degrees present in the basis.
    pub fn degree_range(&self) -> Vec<i64> {
        let mut ds: Vec<i64> = self.degrees.clone();
        ds.sort_unstable();
        ds.dedup();
        ds
    }
}

/// A sparse vector over a [`GradedBasis`]. Stored coefficients are
/// nonzero; the map is keyed by basis index.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Element {
    coeffs: BTreeMap<usize, Rat>,
}

impl Element {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn basis(i: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(i, Rat::from_integer(1.into()));
        Element { coeffs }
    }

    pub fn term(i: usize, c: Rat) -> Self {
        let mut e = Element::zero();
        e.add_term(i, c);
        e
    }

    pub fn from_coeffs(pairs: impl IntoIterator<Item = (usize, Rat)>) -> Self {
        let mut e = Element::zero();
        for (i, c) in pairs {
            e.add_term(i, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(&i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rat)> {
        self.coeffs.iter().map(|(&i, c)| (i, c))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn add_term(&mut self, i: usize, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(i).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&i);
        }
    }

    pub fn add(&self, other: &Element) -> Element {
        let mut out = self.clone();
        for (i, c) in other.iter() {
            out.add_term(i, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Element) -> Element {
        let mut out = self.clone();
        for (i, c) in other.iter() {
            out.add_term(i, -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rat) -> Element {
        if s.is_zero() {
            return Element::zero();
        }
        Element {
            coeffs: self.coeffs.iter().map(|(&i, c)| (i, c * s)).collect(),
        }
    }

    /// The common degree of the support, if the element is homogeneous.
    /// `None` for zero or mixed-degree elements.
    pub fn homogeneous_degree(&self, basis: &GradedBasis) -> Option<i64> {
        let mut deg = None;
        for i in self.support() {
            let d = basis.degree(i);
            match deg {
                None => deg = Some(d),
                Some(existing) if existing != d => return None,
                _ => {}
            }
        }
        deg
    }

    pub fn display<'a>(&'a self, basis: &'a GradedBasis) -> ElementDisplay<'a> {
        ElementDisplay { el: self, basis }
    }
}

pub struct ElementDisplay<'a> {
    el: &'a Element,
    basis: &'a GradedBasis,
}

impl fmt::Display for ElementDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.el.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.el.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*{}", c, self.basis.label(i))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rational::rat;

    #[test]
    fn pointed_basis_validation() {
        assert!(GradedBasis::pointed(vec!["1".into(), "x".into()], vec![0, 0]).is_ok());
        assert!(GradedBasis::pointed(vec!["1".into()], vec![1]).is_err());
        assert!(GradedBasis::pointed(vec!["1".into(), "1".into()], vec![0, 0]).is_err());
        assert!(GradedBasis::pointed(vec!["1".into()], vec![0, 1]).is_err());
    }

    #[test]
    fn element_arithmetic_drops_zeros() {
        let mut e = Element::basis(2);
        e.add_term(2, rat(-1, 1));
        assert!(e.is_zero());

        let a = Element::from_coeffs([(0, rat(1, 2)), (3, rat(2, 3))]);
        let b = a.scale(&rat(6, 1));
        assert_eq!(b.coeff(0), rat(3, 1));
        assert_eq!(b.coeff(3), rat(4, 1));
        assert_eq!(a.sub(&a), Element::zero());
    }

    #[test]
    fn homogeneity() {
        let basis =
            GradedBasis::pointed(vec!["1".into(), "x".into(), "c".into()], vec![0, 0, 1]).unwrap();
        let mixed = Element::from_coeffs([(0, rat(1, 1)), (2, rat(1, 1))]);
        assert_eq!(mixed.homogeneous_degree(&basis), None);
        let hom = Element::from_coeffs([(0, rat(1, 1)), (1, rat(1, 1))]);
        assert_eq!(hom.homogeneous_degree(&basis), Some(0));
        assert_eq!(Element::zero().homogeneous_degree(&basis), None);
    }
}

//! Correlation algebras: a pointed graded space with a tower of
//! graded-symmetric products M_n satisfying the unit constraint
//! M_{n+1}(v_1,…,v_n,1) = M_n(v_1,…,v_n), together with the derived
//! family m_n of not-necessarily-symmetric products that encodes the
//! same data geometrically.

use std::sync::Arc;

use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::multimap::{canonical_indices, MultiMap, TensorMap};
use crate::kernel::partition::subset_sign;
use crate::kernel::rational::Rat;
use crate::{Error, Result};

/// A correlation algebra `(V, M)`, truncated at arity `n_max`.
///
/// `maps[k]` stores M_{k+1}; M_1 is always the identity.
#[derive(Clone, Debug)]
pub struct CorrelationAlgebra {
    basis: Arc<GradedBasis>,
    maps: Vec<MultiMap>,
}

/// The derived family m_2, m_3, … on tensor powers (`tensors[k]` is
/// m_{k+2}). Generally only Perm_n×Perm_2-invariant, not symmetric.
#[derive(Clone, Debug)]
pub struct ProductFamily {
    basis: Arc<GradedBasis>,
    tensors: Vec<TensorMap>,
}

/// One failed identity, with a witness tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Defect {
    pub identity: String,
    pub witness: Vec<usize>,
    pub detail: String,
}

/// Outcome of validation: pass/fail per identity.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            "all identities hold".into()
        } else {
            self.defects
                .iter()
                .map(|d| format!("{} at {:?}: {}", d.identity, d.witness, d.detail))
                .collect::<Vec<_>>()
                .join("; ")
        }
    }
}

impl CorrelationAlgebra {
    /// Assembles an algebra from the higher products M_2, …, M_{n_max}.
    /// Unit-tower consistency is checked on every basis tuple.
    pub fn new(basis: Arc<GradedBasis>, higher: Vec<MultiMap>) -> Result<Self> {
        let mut maps = vec![MultiMap::identity(basis.clone())];
        for (k, m) in higher.into_iter().enumerate() {
            if m.arity() != k + 2 {
                return Err(Error::argument(format!(
                    "expected arity {} at position {k}, got {}",
                    k + 2,
                    m.arity()
                )));
            }
            if m.degree() != 0 {
                return Err(Error::argument("correlation products must have degree 0"));
            }
            if m.source() != &basis || m.target() != &basis {
                return Err(Error::argument("correlation product on wrong basis"));
            }
            maps.push(m);
        }
        let alg = CorrelationAlgebra { basis, maps };
        let report = alg.check();
        if !report.passed() {
            return Err(Error::validation(report.summary()));
        }
        Ok(alg)
    }

    /// Builds without validating (for internal constructions that are
    /// correct by construction; `check` stays available).
    pub fn new_unchecked(basis: Arc<GradedBasis>, higher: Vec<MultiMap>) -> Self {
        let mut maps = vec![MultiMap::identity(basis.clone())];
        maps.extend(higher);
        CorrelationAlgebra { basis, maps }
    }

    /// The ground field 𝕜 as a correlation algebra of arity `n_max`.
    pub fn ground_field(n_max: usize) -> Self {
        let basis = GradedBasis::ground_field();
        let mut higher = Vec::new();
        for n in 2..=n_max {
            let mut m = MultiMap::zero(n, 0, basis.clone(), basis.clone());
            m.add_entry(&vec![0; n], Element::basis(0)).unwrap();
            higher.push(m);
        }
        CorrelationAlgebra::new_unchecked(basis, higher)
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    /// Arity truncation N_max.
    pub fn n_max(&self) -> usize {
        self.maps.len()
    }

    /// M_n (1-based); M_1 is the identity.
    pub fn product(&self, n: usize) -> &MultiMap {
        &self.maps[n - 1]
    }

    pub fn apply_product(&self, args: &[&Element]) -> Element {
        self.product(args.len()).apply(args)
    }

    /// Checks the unit tower, then the derived family's unit and
    /// invariance laws. Graded symmetry of M is structural in storage;
    /// asymmetric raw input is caught at ingestion by the schema loader.
    pub fn check(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check_unit_tower(&mut report);
        if report.passed() {
            if let Ok(m) = self.derived_products() {
                m.check_flato(&mut report);
            }
        }
        report
    }

    fn check_unit_tower(&self, report: &mut ValidationReport) {
        let unit = self.basis.unit_index();
        for n in 1..self.n_max() {
            for idx in canonical_indices(&self.basis, n) {
                let mut with_unit = idx.clone();
                with_unit.push(unit);
                let lhs = self.product(n + 1).apply_basis(&with_unit);
                let rhs = self.product(n).apply_basis(&idx);
                if lhs != rhs {
                    report.defects.push(Defect {
                        identity: format!("unit tower M_{}(..,1) = M_{}", n + 1, n),
                        witness: idx.clone(),
                        detail: "unit insertion changes the product".into(),
                    });
                }
            }
        }
    }

    /// Derives the family m from M by inverting the subset recursion.
    pub fn derived_products(&self) -> Result<ProductFamily> {
        let n_max = self.n_max();
        let mut tensors: Vec<TensorMap> = Vec::new();
        for n in 2..=n_max {
            let mut m_n = TensorMap::zero(n, 0, self.basis.clone(), self.basis.clone());
            for idx in all_tuples(self.basis.dim(), n) {
                let degrees: Vec<i64> = idx.iter().map(|&i| self.basis.degree(i)).collect();
                // m_n(v) = M_n(v) − Σ_{∅≠ς⊆[n−2]} ε(ς) M_{|ς|+1}(v_ς, m(v_{ς^c}·v_{n−1}·v_n))
                let mut val = self.product(n).apply_basis(&idx);
                for mask in 1u64..(1 << (n - 2)) {
                    let subset: Vec<usize> = (0..n - 2).filter(|&j| mask >> j & 1 == 1).collect();
                    let comp: Vec<usize> = (0..n - 2).filter(|&j| mask >> j & 1 == 0).collect();
                    let sign = subset_sign(&subset, n - 2, &degrees)?;
                    let mut inner_idx: Vec<usize> = comp.iter().map(|&j| idx[j]).collect();
                    inner_idx.push(idx[n - 2]);
                    inner_idx.push(idx[n - 1]);
                    let inner = tensors[inner_idx.len() - 2].apply_basis(&inner_idx);
                    let outer_basis: Vec<Element> =
                        subset.iter().map(|&j| Element::basis(idx[j])).collect();
                    let mut outer_args: Vec<&Element> = Vec::with_capacity(subset.len() + 1);
                    for e in &outer_basis {
                        outer_args.push(e);
                    }
                    outer_args.push(&inner);
                    let term = self.product(subset.len() + 1).apply(&outer_args);
                    let signed = term.scale(&Rat::from_integer((sign as i64).into()));
                    val = val.sub(&signed);
                }
                m_n.add_entry(&idx, val)?;
            }
            tensors.push(m_n);
        }
        Ok(ProductFamily {
            basis: self.basis.clone(),
            tensors,
        })
    }
}

impl ProductFamily {
    pub fn new(basis: Arc<GradedBasis>, tensors: Vec<TensorMap>) -> Result<Self> {
        for (k, t) in tensors.iter().enumerate() {
            if t.arity() != k + 2 || t.degree() != 0 {
                return Err(Error::argument("product family shape mismatch"));
            }
        }
        Ok(ProductFamily { basis, tensors })
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    /// Highest product arity available (= n_max of the parent algebra).
    pub fn n_max(&self) -> usize {
        self.tensors.len() + 1
    }

    /// m_n for n ≥ 2.
    pub fn product(&self, n: usize) -> &TensorMap {
        &self.tensors[n - 2]
    }

    /// Rebuilds the symmetric family M from m by the subset recursion;
    /// exact inverse of `CorrelationAlgebra::derived_products`.
    pub fn correlation_algebra(&self) -> Result<CorrelationAlgebra> {
        let n_max = self.n_max();
        let basis = &self.basis;
        let mut tensor_m: Vec<TensorMap> = vec![{
            let mut id = TensorMap::zero(1, 0, basis.clone(), basis.clone());
            for i in 0..basis.dim() {
                id.add_entry(&[i], Element::basis(i))?;
            }
            id
        }];
        for n in 2..=n_max {
            let mut m_n = TensorMap::zero(n, 0, basis.clone(), basis.clone());
            for idx in all_tuples(basis.dim(), n) {
                let degrees: Vec<i64> = idx.iter().map(|&i| basis.degree(i)).collect();
                let mut val = Element::zero();
                for mask in 0u64..(1 << (n - 2)) {
                    let subset: Vec<usize> = (0..n - 2).filter(|&j| mask >> j & 1 == 1).collect();
                    let comp: Vec<usize> = (0..n - 2).filter(|&j| mask >> j & 1 == 0).collect();
                    let sign = subset_sign(&subset, n - 2, &degrees)?;
                    let mut inner_idx: Vec<usize> = comp.iter().map(|&j| idx[j]).collect();
                    inner_idx.push(idx[n - 2]);
                    inner_idx.push(idx[n - 1]);
                    let inner = self.product(inner_idx.len()).apply_basis(&inner_idx);
                    let outer_basis: Vec<Element> =
                        subset.iter().map(|&j| Element::basis(idx[j])).collect();
                    let mut outer_args: Vec<&Element> = Vec::with_capacity(subset.len() + 1);
                    for e in &outer_basis {
                        outer_args.push(e);
                    }
                    outer_args.push(&inner);
                    let term = tensor_m[subset.len()].apply(&outer_args);
                    val = val.add(&term.scale(&Rat::from_integer((sign as i64).into())));
                }
                m_n.add_entry(&idx, val)?;
            }
            tensor_m.push(m_n);
        }
        // convert tensors to symmetric maps, verifying orbit consistency
        let mut sym = Vec::new();
        for (n, t) in tensor_m.iter().enumerate().skip(1) {
            let arity = n + 1;
            let mut m = MultiMap::zero(arity, 0, basis.clone(), basis.clone());
            for idx in canonical_indices(basis, arity) {
                m.add_entry(&idx, t.apply_basis(&idx))?;
            }
            for (idx, val) in t.entries() {
                if &m.apply_basis(idx) != val {
                    return Err(Error::validation(format!(
                        "derived M_{arity} is not graded-symmetric at {idx:?}"
                    )));
                }
            }
            sym.push(m);
        }
        CorrelationAlgebra::new(basis.clone(), sym)
    }

    /// Checks the structural laws of the derived family: unit laws and
    /// Perm_n×Perm_2 invariance.
    pub fn check_flato(&self, report: &mut ValidationReport) {
        let basis = &self.basis;
        let unit = basis.unit_index();
        // item 1: m_2(x, 1) = x
        for i in 0..basis.dim() {
            let v = self.product(2).apply_basis(&[i, unit]);
            if v != Element::basis(i) {
                report.defects.push(Defect {
                    identity: "m_2(x,1) = x".into(),
                    witness: vec![i],
                    detail: "unit law fails".into(),
                });
            }
        }
        // item 2: m_n vanishes on any unit argument for n ≥ 3
        for n in 3..=self.n_max() {
            for idx in all_tuples(basis.dim(), n) {
                if idx.contains(&unit) && !self.product(n).apply_basis(&idx).is_zero() {
                    report.defects.push(Defect {
                        identity: format!("m_{n}(..,1,..) = 0"),
                        witness: idx.clone(),
                        detail: "unit does not annihilate".into(),
                    });
                }
            }
        }
        // items 3-4: invariance under Perm_n × Perm_2 on (x_1..x_n | y,z)
        for n in 2..=self.n_max() {
            for idx in all_tuples(basis.dim(), n) {
                let degrees: Vec<i64> = idx.iter().map(|&i| basis.degree(i)).collect();
                let base = self.product(n).apply_basis(&idx);
                let mut swapped = idx.clone();
                swapped.swap(n - 2, n - 1);
                let sign = if degrees[n - 2] % 2 != 0 && degrees[n - 1] % 2 != 0 {
                    -1i64
                } else {
                    1
                };
                let lhs = self.product(n).apply_basis(&swapped);
                if lhs != base.scale(&Rat::from_integer(sign.into())) {
                    report.defects.push(Defect {
                        identity: format!("m_{n} Perm_2 invariance"),
                        witness: idx.clone(),
                        detail: "last-pair swap breaks invariance".into(),
                    });
                }
                for p in 0..n.saturating_sub(3) {
                    let mut perm_idx = idx.clone();
                    perm_idx.swap(p, p + 1);
                    let s = if degrees[p] % 2 != 0 && degrees[p + 1] % 2 != 0 {
                        -1i64
                    } else {
                        1
                    };
                    let lhs = self.product(n).apply_basis(&perm_idx);
                    if lhs != base.scale(&Rat::from_integer(s.into())) {
                        report.defects.push(Defect {
                            identity: format!("m_{n} Perm_{} invariance", n - 2),
                            witness: idx.clone(),
                            detail: format!("transposing slots {p},{} breaks invariance", p + 1),
                        });
                    }
                }
            }
        }
    }
}

/// Property Q: every m_n is fully graded-symmetric (descends to S^n V).
/// Returns `Ok(())` or the witness of the first failure.
pub fn check_property_q(m: &ProductFamily) -> std::result::Result<(), Defect> {
    let basis = m.basis();
    for n in 2..=m.n_max() {
        for idx in all_tuples(basis.dim(), n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| basis.degree(i)).collect();
            let base = m.product(n).apply_basis(&idx);
            for p in 0..n - 1 {
                let mut swapped = idx.clone();
                swapped.swap(p, p + 1);
                let sign = if degrees[p] % 2 != 0 && degrees[p + 1] % 2 != 0 {
                    -1i64
                } else {
                    1
                };
                let lhs = m.product(n).apply_basis(&swapped);
                if lhs != base.scale(&Rat::from_integer(sign.into())) {
                    return Err(Defect {
                        identity: format!("property Q: m_{n} symmetric"),
                        witness: idx,
                        detail: format!("slots {p},{} asymmetric", p + 1),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Builds the correlation algebra generated by a graded-commutative
/// associative binary product: M_n is the left-iterated product.
pub fn from_binary_product(
    basis: Arc<GradedBasis>,
    m2: &MultiMap,
    n_max: usize,
) -> Result<CorrelationAlgebra> {
    if m2.arity() != 2 || m2.degree() != 0 {
        return Err(Error::argument("binary product must be arity 2 degree 0"));
    }
    let mut higher = Vec::new();
    for n in 2..=n_max {
        let mut m_n = MultiMap::zero(n, 0, basis.clone(), basis.clone());
        for idx in canonical_indices(&basis, n) {
            let mut acc = Element::basis(idx[n - 1]);
            for k in (0..n - 1).rev() {
                let b = Element::basis(idx[k]);
                acc = m2.apply(&[&b, &acc]);
            }
            m_n.add_entry(&idx, acc)?;
        }
        higher.push(m_n);
    }
    CorrelationAlgebra::new(basis, higher)
}

/// All tuples (with repetition, any order) of length `len` over `0..dim`.
pub fn all_tuples(dim: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(dim.pow(len as u32));
    let mut idx = vec![0usize; len];
    loop {
        out.push(idx.clone());
        let mut k = len;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] + 1 < dim {
                idx[k] += 1;
                for item in idx.iter_mut().skip(k + 1) {
                    *item = 0;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rational::rat;

    /// 𝕜[x]/x² with basis (1, x), both even.
    fn dual_numbers(n_max: usize) -> CorrelationAlgebra {
        let basis = GradedBasis::pointed(vec!["1".into(), "x".into()], vec![0, 0]).unwrap();
        let mut m2 = MultiMap::zero(2, 0, basis.clone(), basis.clone());
        m2.add_entry(&[0, 0], Element::basis(0)).unwrap();
        m2.add_entry(&[0, 1], Element::basis(1)).unwrap();
        // x·x = 0
        from_binary_product(basis, &m2, n_max).unwrap()
    }

    #[test]
    fn ground_field_products() {
        let k = CorrelationAlgebra::ground_field(4);
        assert!(k.check().passed());
        for n in 1..=4 {
            assert_eq!(k.product(n).apply_basis(&vec![0; n]), Element::basis(0));
        }
        let m = k.derived_products().unwrap();
        // binary algebra: m = (m_2, 0, 0, …)
        assert_eq!(m.product(2).apply_basis(&[0, 0]), Element::basis(0));
        for n in 3..=4 {
            assert!(m.product(n).is_zero(), "m_{n} should vanish");
        }
    }

    #[test]
    fn dual_numbers_m_vanishes_above_two() {
        let a = dual_numbers(5);
        assert!(a.check().passed());
        let m = a.derived_products().unwrap();
        for n in 3..=5 {
            assert!(m.product(n).is_zero());
        }
        // M_3(x,x,x) = 0 since x² = 0
        assert!(a.product(3).apply_basis(&[1, 1, 1]).is_zero());
        assert!(check_property_q(&m).is_ok());
    }

    #[test]
    fn m2_equals_big_m2_and_m3_iterates() {
        let a = dual_numbers(4);
        let m = a.derived_products().unwrap();
        for idx in all_tuples(2, 2) {
            assert_eq!(
                a.product(2).apply_basis(&idx),
                m.product(2).apply_basis(&idx)
            );
        }
        // M_3(x,y,z) = m_2(x, m_2(y,z)) when m_3 = 0
        for idx in all_tuples(2, 3) {
            let inner = m.product(2).apply_basis(&idx[1..]);
            let x = Element::basis(idx[0]);
            let expect = m.product(2).apply(&[&x, &inner]);
            assert_eq!(a.product(3).apply_basis(&idx), expect);
        }
    }

    #[test]
    fn roundtrip_m_from_big_m() {
        // random M towers round trip through the derived family, arity ≤ 5
        use crate::testgen;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let a = testgen::random_correlation_algebra(&mut rng, 3, 5, true);
            let m = a.derived_products().unwrap();
            let back = m.correlation_algebra().unwrap();
            for n in 2..=a.n_max() {
                assert_eq!(a.product(n), back.product(n), "arity {n}");
            }
        }
    }

    #[test]
    fn planted_unit_tower_defect_is_reported() {
        let basis = GradedBasis::pointed(vec!["1".into(), "x".into()], vec![0, 0]).unwrap();
        let mut m2 = MultiMap::zero(2, 0, basis.clone(), basis.clone());
        m2.add_entry(&[0, 0], Element::basis(0)).unwrap();
        m2.add_entry(&[0, 1], Element::basis(1)).unwrap();
        let mut m3 = MultiMap::zero(3, 0, basis.clone(), basis.clone());
        // planted: M_3(1,1,1) = 1 + x breaks the unit tower
        m3.add_entry(
            &[0, 0, 0],
            Element::from_coeffs([(0, rat(1, 1)), (1, rat(1, 1))]),
        )
        .unwrap();
        let err = CorrelationAlgebra::new(basis, vec![m2, m3]);
        assert!(err.is_err());
        let msg = format!("{}", err.err().unwrap());
        assert!(msg.contains("unit tower"), "got: {msg}");
    }

    #[test]
    fn planted_asymmetric_m3_fails_property_q() {
        let basis =
            GradedBasis::pointed(vec!["1".into(), "x".into(), "y".into()], vec![0, 0, 0]).unwrap();
        let mut m3 = TensorMap::zero(3, 0, basis.clone(), basis.clone());
        // symmetric in the last two slots only
        m3.add_entry(&[1, 2, 2], Element::basis(1)).unwrap();
        let mut m2 = TensorMap::zero(2, 0, basis.clone(), basis.clone());
        for i in 0..3 {
            m2.add_entry(&[i, 0], Element::basis(i)).unwrap();
            if i != 0 {
                m2.add_entry(&[0, i], Element::basis(i)).unwrap();
            }
        }
        let fam = ProductFamily::new(basis, vec![m2, m3]).unwrap();
        let defect = check_property_q(&fam).unwrap_err();
        assert!(defect.identity.contains("property Q"));
    }

    #[test]
    fn binary_derived_m2_is_associative_when_m3_zero() {
        let a = dual_numbers(4);
        let m = a.derived_products().unwrap();
        let m2 = m.product(2);
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let xy = m2.apply_basis(&[x, y]);
                    let yz = m2.apply_basis(&[y, z]);
                    let ex = Element::basis(x);
                    let ez = Element::basis(z);
                    let left = m2.apply(&[&xy, &ez]);
                    let right = m2.apply(&[&ex, &yz]);
                    assert_eq!(left, right);
                }
            }
        }
    }
}

//! The descendant functor: from a homotopy probability algebra to its
//! unital sL∞-algebra (the failure tower of K against the products M),
//! and from a pointed cochain map with a chosen homotopy family Λ to an
//! sL∞-morphism.

use std::sync::Arc;

use crate::cumulants::ProbAlgebra;
use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::multimap::{canonical_indices, MultiMap};
use crate::kernel::partition::{enumerate_partitions, eps_pi_i, hooked_partitions, partition_sign};
use crate::kernel::rational::Rat;
use crate::slinfty::{SLInftyStructure, SLMorphism};
use crate::{Error, Result};

/// A homotopy family for descendant morphisms: degree −1 maps with
/// Λ_1(1) = 0 and the tower Λ_{n+1}(x_1,…,x_n,1) = Λ_n(x_1,…,x_n).
#[derive(Clone, Debug)]
pub struct LambdaFamily {
    source: Arc<GradedBasis>,
    target: Arc<GradedBasis>,
    maps: Vec<MultiMap>,
}

impl LambdaFamily {
    pub fn new(
        source: Arc<GradedBasis>,
        target: Arc<GradedBasis>,
        maps: Vec<MultiMap>,
    ) -> Result<Self> {
        let unit = source.unit_index();
        for (k, m) in maps.iter().enumerate() {
            if m.arity() != k + 1 || m.degree() != -1 {
                return Err(Error::argument("lambda component shape mismatch"));
            }
            if m.source() != &source || m.target() != &target {
                return Err(Error::argument("lambda component on wrong bases"));
            }
        }
        if let Some(l1) = maps.first() {
            if !l1.apply_basis(&[unit]).is_zero() {
                return Err(Error::validation("Λ_1(1) must vanish"));
            }
        }
        for n in 1..maps.len() {
            for idx in canonical_indices(&source, n) {
                let mut with_unit = idx.clone();
                with_unit.push(unit);
                if maps[n].apply_basis(&with_unit) != maps[n - 1].apply_basis(&idx) {
                    return Err(Error::validation(format!(
                        "Λ_{}(…,1) = Λ_{} violated at {idx:?}",
                        n + 1,
                        n
                    )));
                }
            }
        }
        Ok(LambdaFamily { source, target, maps })
    }

    /// The zero family (the default homotopy).
    pub fn zero(source: Arc<GradedBasis>, target: Arc<GradedBasis>, n_max: usize) -> Self {
        let maps = (1..=n_max)
            .map(|n| MultiMap::zero(n, -1, source.clone(), target.clone()))
            .collect();
        LambdaFamily { source, target, maps }
    }

    pub fn n_max(&self) -> usize {
        self.maps.len()
    }

    pub fn component(&self, n: usize) -> &MultiMap {
        &self.maps[n - 1]
    }
}

/// The descendant sL∞-structure ℓ^K of a homotopy probability algebra:
/// ℓ^K_n = K∘M_n − Σ_{hooked, |π|≠1} ε(π,i)·M_{|π|}(…, ℓ^K(x_{B_i}), …).
pub fn descendant_structure(p: &ProbAlgebra) -> Result<SLInftyStructure> {
    let basis = p.basis().clone();
    let n_max = p.n_max();
    let mut ell: Vec<MultiMap> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut l_n = MultiMap::zero(n, 1, basis.clone(), basis.clone());
        for idx in canonical_indices(&basis, n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| basis.degree(i)).collect();
            let m_val = p.algebra.product(n).apply_basis(&idx);
            let mut val = p.k.apply(&[&m_val]);
            hooked_partitions(n, |pi, i| {
                if pi.num_blocks() == 1 {
                    return Ok(());
                }
                let sign = eps_pi_i(pi, i, &degrees)?;
                let inner_idx: Vec<usize> = pi.block(i).iter().map(|&p| idx[p]).collect();
                let inner = ell[inner_idx.len() - 1].apply_basis(&inner_idx);
                if inner.is_zero() {
                    return Ok(());
                }
                let mut slot_elems: Vec<Element> = Vec::with_capacity(pi.num_blocks());
                for (j, block) in pi.blocks().iter().enumerate() {
                    if j == i {
                        slot_elems.push(inner.clone());
                    } else {
                        slot_elems.push(Element::basis(idx[block[0]]));
                    }
                }
                let args: Vec<&Element> = slot_elems.iter().collect();
                let term = p.algebra.product(pi.num_blocks()).apply(&args);
                val = val.sub(&term.scale(&Rat::from_integer((sign as i64).into())));
                Ok(())
            })?;
            l_n.add_entry(&idx, val)?;
        }
        ell.push(l_n);
    }
    SLInftyStructure::new(basis, ell)
}

/// The descendant sL∞-morphism φ^{f,Λ} of a pointed cochain map f
/// between two homotopy probability algebras:
///
/// φ^{f,Λ}_n = f∘M_n − Σ_{π, |π|≠1} ε(π)·M′_{|π|}(φ(x_{B_1}),…)
///            − K′Λ_n − Σ_{hooked} ε(π,i)·Λ_{|π|}(…, ℓ^K(x_{B_i}), …).
pub fn descendant_morphism(
    f: &MultiMap,
    lambda: &LambdaFamily,
    src: &ProbAlgebra,
    dst: &ProbAlgebra,
) -> Result<SLMorphism> {
    let sb = src.basis().clone();
    let db = dst.basis().clone();
    if f.arity() != 1 || f.degree() != 0 || f.source() != &sb || f.target() != &db {
        return Err(Error::argument(
            "f must be a degree-0 arity-1 map between the algebras",
        ));
    }
    if f.apply_basis(&[sb.unit_index()]) != Element::basis(db.unit_index()) {
        return Err(Error::validation("f must preserve the unit"));
    }
    let fk = f.compose1(&src.k)?;
    let kf = dst.k.compose1(f)?;
    if fk != kf {
        return Err(Error::validation("f must be a cochain map: f∘K = K′∘f fails"));
    }
    if lambda.source != sb || lambda.target != db {
        return Err(Error::argument("Λ on wrong bases"));
    }
    let ell_src = descendant_structure(src)?;
    let n_max = src.n_max().min(dst.n_max()).min(lambda.n_max());
    let mut phi: Vec<MultiMap> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut phi_n = MultiMap::zero(n, 0, sb.clone(), db.clone());
        for idx in canonical_indices(&sb, n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| sb.degree(i)).collect();
            let m_val = src.algebra.product(n).apply_basis(&idx);
            let mut val = f.apply(&[&m_val]);
            // − Σ_{π,|π|≥2} ε(π)·M′(φ(x_{B_1}),…)
            for pi in enumerate_partitions(n)? {
                if pi.num_blocks() == 1 {
                    continue;
                }
                let sign = partition_sign(&pi, &degrees)?;
                let mut blocks: Vec<Element> = Vec::with_capacity(pi.num_blocks());
                let mut vanished = false;
                for block in pi.blocks() {
                    let block_idx: Vec<usize> = block.iter().map(|&p| idx[p]).collect();
                    let v = phi[block_idx.len() - 1].apply_basis(&block_idx);
                    if v.is_zero() {
                        vanished = true;
                        break;
                    }
                    blocks.push(v);
                }
                if vanished {
                    continue;
                }
                let args: Vec<&Element> = blocks.iter().collect();
                let term = dst.algebra.product(pi.num_blocks()).apply(&args);
                val = val.sub(&term.scale(&Rat::from_integer((sign as i64).into())));
            }
            // − K′Λ_n
            let l_val = lambda.component(n).apply_basis(&idx);
            val = val.sub(&dst.k.apply(&[&l_val]));
            // − Σ_{hooked} ε(π,i)·Λ_{|π|}(…, ℓ^K(x_{B_i}), …)
            hooked_partitions(n, |pi, i| {
                let sign = eps_pi_i(pi, i, &degrees)?;
                let inner_idx: Vec<usize> = pi.block(i).iter().map(|&p| idx[p]).collect();
                let inner = ell_src.bracket_on_block(&inner_idx);
                if inner.is_zero() {
                    return Ok(());
                }
                let singles: Vec<usize> = pi
                    .blocks()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| idx[b[0]])
                    .collect();
                let mut term = Element::zero();
                for (bi, bc) in inner.iter() {
                    let mut args: Vec<usize> = Vec::with_capacity(pi.num_blocks());
                    let mut si = 0usize;
                    for j in 0..pi.num_blocks() {
                        if j == i {
                            args.push(bi);
                        } else {
                            args.push(singles[si]);
                            si += 1;
                        }
                    }
                    let v = lambda.component(pi.num_blocks()).apply_basis(&args);
                    term = term.add(&v.scale(bc));
                }
                val = val.sub(&term.scale(&Rat::from_integer((sign as i64).into())));
                Ok(())
            })?;
            phi_n.add_entry(&idx, val)?;
        }
        phi.push(phi_n);
    }
    SLMorphism::new(sb, db, phi)
}

/// The observable consequence of Λ-independence: compositions of the
/// descendants with any morphism out of a zero structure agree exactly.
pub fn lambda_invariance_test(
    f: &MultiMap,
    lambda_a: &LambdaFamily,
    lambda_b: &LambdaFamily,
    src: &ProbAlgebra,
    dst: &ProbAlgebra,
    phi_v: &SLMorphism,
) -> Result<bool> {
    let da = descendant_morphism(f, lambda_a, src, dst)?;
    let db = descendant_morphism(f, lambda_b, src, dst)?;
    let ca = crate::slinfty::compose(&da, phi_v)?;
    let cb = crate::slinfty::compose(&db, phi_v)?;
    for n in 1..=ca.n_max().min(cb.n_max()) {
        if ca.component(n) != cb.component(n) {
            return Ok(false);
        }
    }
    Ok(true)
}

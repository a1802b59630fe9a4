//! Spaces of homotopical random variables: the Π↔φ correspondence,
//! moment/cumulant extraction κ = φ^{c,Λ}•φ^V and μ = c∘Π, complete
//! integrability by staged flow construction, and complete spaces with
//! their induced correlation algebra.

use std::sync::Arc;

use num::Zero;

use crate::corralg::CorrelationAlgebra;
use crate::cumulants::{generating_series, Expectation, ProbAlgebra, ScalarFamily};
use crate::descend::{descendant_morphism, descendant_structure, LambdaFamily};
use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::linalg::Matrix;
use crate::kernel::multimap::{
    apply_poly, canonical_indices, poly_element_add, poly_element_scale, poly_element_zero,
    MultiMap, PolyElement, PolyMultiMap,
};
use crate::kernel::partition::{enumerate_partitions, eps_pi_i, partition_sign};
use crate::kernel::rational::Rat;
use crate::kernel::series::SuperSeries;
use crate::slinfty::{
    check_morphism, compose, flow, HomotopyFamily, PolyFamily, RetractData, SLInftyStructure,
    SLMorphism,
};
use crate::{Error, Result};

/// A space of homotopical random variables: a graded space V (no unit
/// required) with a morphism φ^V from the zero structure on V into the
/// descendant of the ambient algebra.
#[derive(Clone, Debug)]
pub struct RandomVarSpace {
    pub space: Arc<GradedBasis>,
    pub phi: SLMorphism,
}

impl RandomVarSpace {
    pub fn new(space: Arc<GradedBasis>, phi: SLMorphism, ambient: &ProbAlgebra) -> Result<Self> {
        if phi.source() != &space {
            return Err(Error::argument("φ^V source mismatch"));
        }
        if phi.target() != ambient.basis() {
            return Err(Error::argument("φ^V target mismatch"));
        }
        let zero_src = SLInftyStructure::zero(space.clone(), phi.n_max());
        let ell = descendant_structure(ambient)?;
        let report = check_morphism(&phi, &zero_src, &ell, phi.n_max())?;
        if !report.passed() {
            return Err(Error::validation(format!(
                "φ^V is not an sL∞-morphism: {}",
                report.summary()
            )));
        }
        Ok(RandomVarSpace { space, phi })
    }
}

/// Π^φ_n(v_1,…,v_n) = Σ_{π∈P(n)} ε(π)·M_{|π|}(φ(v_{B_1}),…,φ(v_{B_{|π|}})).
/// The source structure must be zero; K∘Π_n = 0 then holds.
pub fn pi_from_phi(phi: &SLMorphism, algebra: &CorrelationAlgebra) -> Result<Vec<MultiMap>> {
    if phi.target() != algebra.basis() {
        return Err(Error::argument("φ target does not match the algebra"));
    }
    let v = phi.source().clone();
    let n_max = phi.n_max().min(algebra.n_max());
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut pi_n = MultiMap::zero(n, 0, v.clone(), algebra.basis().clone());
        for idx in canonical_indices(&v, n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| v.degree(i)).collect();
            let mut acc = Element::zero();
            for pi in enumerate_partitions(n)? {
                if pi.num_blocks() > algebra.n_max() {
                    continue;
                }
                let sign = partition_sign(&pi, &degrees)?;
                let mut blocks: Vec<Element> = Vec::with_capacity(pi.num_blocks());
                let mut vanished = false;
                for block in pi.blocks() {
                    let block_idx: Vec<usize> = block.iter().map(|&p| idx[p]).collect();
                    let e = phi.on_block(&block_idx);
                    if e.is_zero() {
                        vanished = true;
                        break;
                    }
                    blocks.push(e);
                }
                if vanished {
                    continue;
                }
                let args: Vec<&Element> = blocks.iter().collect();
                let term = algebra.product(pi.num_blocks()).apply(&args);
                acc = acc.add(&term.scale(&Rat::from_integer((sign as i64).into())));
            }
            pi_n.add_entry(&idx, acc)?;
        }
        out.push(pi_n);
    }
    Ok(out)
}

/// Inverts the Π recursion: φ_n = Π_n − Σ_{π,|π|≥2} ε(π)·M_{|π|}(φ(v_{B_1}),…).
/// Requires K∘Π_n = 0; the output is then an sL∞-morphism from (V, 0).
pub fn phi_from_pi(
    pi_family: &[MultiMap],
    p: &ProbAlgebra,
) -> Result<SLMorphism> {
    if pi_family.is_empty() {
        return Err(Error::argument("empty Π family"));
    }
    let v = pi_family[0].source().clone();
    for (k, m) in pi_family.iter().enumerate() {
        if m.arity() != k + 1 || m.degree() != 0 {
            return Err(Error::argument("Π family shape mismatch"));
        }
        // precondition: K∘Π_n = 0
        for (idx, val) in m.entries() {
            if !p.k.apply(&[val]).is_zero() {
                return Err(Error::validation(format!(
                    "K∘Π_{} ≠ 0 at {idx:?}",
                    k + 1
                )));
            }
        }
    }
    let n_max = pi_family.len().min(p.n_max());
    let mut phi: Vec<MultiMap> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut phi_n = MultiMap::zero(n, 0, v.clone(), p.basis().clone());
        for idx in canonical_indices(&v, n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| v.degree(i)).collect();
            let mut val = pi_family[n - 1].apply_basis(&idx);
            for pi in enumerate_partitions(n)? {
                if pi.num_blocks() == 1 || pi.num_blocks() > p.n_max() {
                    continue;
                }
                let sign = partition_sign(&pi, &degrees)?;
                let mut blocks: Vec<Element> = Vec::with_capacity(pi.num_blocks());
                let mut vanished = false;
                for block in pi.blocks() {
                    let block_idx: Vec<usize> = block.iter().map(|&p| idx[p]).collect();
                    let e = phi[block_idx.len() - 1].apply_basis(&block_idx);
                    if e.is_zero() {
                        vanished = true;
                        break;
                    }
                    blocks.push(e);
                }
                if vanished {
                    continue;
                }
                let args: Vec<&Element> = blocks.iter().collect();
                let term = p.algebra.product(pi.num_blocks()).apply(&args);
                val = val.sub(&term.scale(&Rat::from_integer((sign as i64).into())));
            }
            phi_n.add_entry(&idx, val)?;
        }
        phi.push(phi_n);
    }
    SLMorphism::new(v, p.basis().clone(), phi)
}

/// The law of a space of random variables: moments μ = c∘Π^{φ^V},
/// cumulants κ = φ^{c,Λ}•φ^V, and their generating series Z, F.
/// Λ-independence and the partition identity are verified internally.
pub struct Law {
    pub mu: ScalarFamily,
    pub kappa: ScalarFamily,
    pub z: SuperSeries,
    pub f: SuperSeries,
}

/// Packages the expectation as a morphism of probability algebras into
/// the ground field (for descendant computation).
pub fn expectation_as_map(p: &ProbAlgebra, c: &Expectation) -> MultiMap {
    let kb = GradedBasis::ground_field();
    let mut m = MultiMap::zero(1, 0, p.basis().clone(), kb);
    for i in 0..p.basis().dim() {
        m.add_entry(&[i], Element::term(0, c.value(i).clone()))
            .expect("scalar entry");
    }
    m
}

/// The ground field as a homotopy probability algebra.
pub fn ground_prob_algebra(n_max: usize) -> ProbAlgebra {
    let kb = GradedBasis::ground_field();
    ProbAlgebra::new(
        CorrelationAlgebra::ground_field(n_max),
        MultiMap::zero(1, 1, kb.clone(), kb),
    )
    .expect("ground field is a probability algebra")
}

pub fn law_of_space(
    space: &RandomVarSpace,
    p: &ProbAlgebra,
    c: &Expectation,
    lambda: &LambdaFamily,
    order: usize,
) -> Result<Law> {
    let n_max = space.phi.n_max();
    let pi_fam = pi_from_phi(&space.phi, &p.algebra)?;
    // μ_n = c∘Π_n
    let mut mu = ScalarFamily::zero(space.space.clone(), n_max);
    for (n, pi_n) in pi_fam.iter().enumerate() {
        for idx in canonical_indices(&space.space, n + 1) {
            mu.set(&idx, c.apply(&pi_n.apply_basis(&idx)))?;
        }
    }
    // κ = φ^{c,Λ} • φ^V
    let ground = ground_prob_algebra(p.n_max());
    let c_map = expectation_as_map(p, c);
    let phi_c = descendant_morphism(&c_map, lambda, p, &ground)?;
    let kappa_mor = compose(&phi_c, &space.phi)?;
    let mut kappa = ScalarFamily::zero(space.space.clone(), kappa_mor.n_max());
    for n in 1..=kappa_mor.n_max() {
        for idx in canonical_indices(&space.space, n) {
            kappa.set(&idx, kappa_mor.component(n).apply_basis(&idx).coeff(0))?;
        }
    }
    // partition identity: μ_n = Σ_π ε(π)·κ(v_{B_1})⋯κ(v_{B_{|π|}})
    let rebuilt = crate::cumulants::moments_from_cumulants(&kappa)?;
    for n in 1..=mu.n_max().min(rebuilt.n_max()) {
        for idx in canonical_indices(&space.space, n) {
            if mu.eval(&idx) != rebuilt.eval(&idx) {
                return Err(Error::validation(format!(
                    "partition identity fails at {idx:?}"
                )));
            }
        }
    }
    // Λ-independence: re-run with the zero homotopy and compare
    let zero_lambda = LambdaFamily::zero(p.basis().clone(), GradedBasis::ground_field(), lambda.n_max());
    let phi_c0 = descendant_morphism(&c_map, &zero_lambda, p, &ground)?;
    let kappa0 = compose(&phi_c0, &space.phi)?;
    for n in 1..=kappa_mor.n_max().min(kappa0.n_max()) {
        if kappa_mor.component(n) != kappa0.component(n) {
            return Err(Error::validation(format!(
                "κ is not Λ-independent at arity {n}"
            )));
        }
    }
    let z = generating_series(&mu, order, true)?;
    let f = generating_series(&kappa, order, false)?;
    if f.exp()? != z {
        return Err(Error::validation("Z ≠ exp(F)"));
    }
    Ok(Law { mu, kappa, z, f })
}

/// Scalar cumulants with the homotopy certificate: the representative
/// φ̃ with φ̃_n = κ_n·1 and the polynomial flow connecting φ^V to φ̃.
pub struct IntegrableSolution {
    pub kappa: ScalarFamily,
    pub certificate: PolyFamily,
    pub eta: HomotopyFamily,
}

/// Verifies non-degeneracy: every degree-0 element with zero expectation
/// is K-exact. Returns the witness element on failure.
pub fn check_nondegenerate(p: &ProbAlgebra, c: &Expectation) -> Result<()> {
    let basis = p.basis();
    let dim = basis.dim();
    let deg0 = basis.indices_of_degree(0);
    // image of K in matrix form
    let mut kmat = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let img = p.k.apply_basis(&[j]);
        for (i, coef) in img.iter() {
            kmat[(i, j)] = coef.clone();
        }
    }
    for &i in &deg0 {
        if i == basis.unit_index() {
            continue;
        }
        // candidate: e_i − c(e_i)·1 ∈ ker c ∩ C⁰
        let mut v = vec![Rat::zero(); dim];
        v[i] = Rat::from_integer(1.into());
        let ci = c.value(i).clone();
        v[basis.unit_index()] -= ci;
        if kmat.solve(&v).is_none() {
            return Err(Error::validation(format!(
                "degenerate: {} − c({})·1 is not K-exact",
                basis.label(i),
                basis.label(i)
            )));
        }
    }
    Ok(())
}

/// A deterministic K-preimage solver (lowest-index pivots).
fn k_preimage(p: &ProbAlgebra, target: &Element) -> Result<Element> {
    let basis = p.basis();
    let dim = basis.dim();
    let mut kmat = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let img = p.k.apply_basis(&[j]);
        for (i, coef) in img.iter() {
            kmat[(i, j)] = coef.clone();
        }
    }
    let mut rhs = vec![Rat::zero(); dim];
    for (i, coef) in target.iter() {
        rhs[i] = coef.clone();
    }
    let x = kmat
        .solve(&rhs)
        .ok_or_else(|| Error::validation("element is not K-exact"))?;
    Ok(Element::from_coeffs(x.into_iter().enumerate()))
}

/// Homotopy complete integrability: produces the representative with
/// φ̃_n = κ_n·1 by the staged construction (decompose φ_n = ϰ_n·1 − Kς_n,
/// flow by η built from ς and the correction terms). The returned
/// certificate is the polynomial flow; its τ=1 endpoint equals φ̃.
pub fn integrable_solve(
    space: &RandomVarSpace,
    p: &ProbAlgebra,
    c: &Expectation,
) -> Result<IntegrableSolution> {
    let v = &space.space;
    if v.degrees().iter().any(|&d| d != 0) {
        return Err(Error::argument(
            "integrable_solve requires a degree-0 space of random variables",
        ));
    }
    check_nondegenerate(p, c)?;
    let ell = descendant_structure(p)?;
    let n_max = space.phi.n_max().min(ell.n_max());
    let unit = p.basis().unit_index();

    // stage data
    let mut eta_maps: Vec<PolyMultiMap> = Vec::with_capacity(n_max);
    let mut phi_tau: Vec<PolyMultiMap> = Vec::with_capacity(n_max);
    let mut kappa = ScalarFamily::zero(v.clone(), n_max);

    for n in 1..=n_max {
        // decompose φ_n = ϰ_n·1 − Kς_n
        let mut sigma_n = MultiMap::zero(n, -1, v.clone(), p.basis().clone());
        let mut kappa0_n: Vec<(Vec<usize>, Rat)> = Vec::new();
        for idx in canonical_indices(v, n) {
            let val = space.phi.component(n).apply_basis(&idx);
            let kap = c.apply(&val);
            let defect = Element::term(unit, kap.clone()).sub(&val);
            let pre = k_preimage(p, &defect)?;
            sigma_n.add_entry(&idx, pre)?;
            kappa0_n.push((idx, kap));
        }
        // L(τ)_n from lower stages
        let mut l_tau = PolyMultiMap::zero(n, 0, v.clone(), p.basis().clone());
        if n >= 2 {
            for idx in canonical_indices(v, n) {
                let degrees: Vec<i64> = idx.iter().map(|&i| v.degree(i)).collect();
                let mut acc: PolyElement = poly_element_zero();
                for pi in enumerate_partitions(n)? {
                    if pi.num_blocks() == 1 || pi.num_blocks() > ell.n_max() {
                        continue;
                    }
                    for i in 0..pi.num_blocks() {
                        let sign = eps_pi_i(&pi, i, &degrees)?;
                        let mut slot_polys: Vec<PolyElement> =
                            Vec::with_capacity(pi.num_blocks());
                        let mut vanished = false;
                        for (j, block) in pi.blocks().iter().enumerate() {
                            let block_idx: Vec<usize> =
                                block.iter().map(|&pp| idx[pp]).collect();
                            if block_idx.len() >= n {
                                vanished = true;
                                break;
                            }
                            let val = if j == i {
                                eta_maps[block_idx.len() - 1].apply_basis(&block_idx)
                            } else {
                                phi_tau[block_idx.len() - 1].apply_basis(&block_idx)
                            };
                            if val.is_empty() {
                                vanished = true;
                                break;
                            }
                            slot_polys.push(val);
                        }
                        if vanished {
                            continue;
                        }
                        let refs: Vec<&PolyElement> = slot_polys.iter().collect();
                        let term = apply_poly(ell.bracket(pi.num_blocks()), &refs);
                        acc = poly_element_add(
                            &acc,
                            &poly_element_scale(&term, &Rat::from_integer((sign as i64).into())),
                        );
                    }
                }
                l_tau.add_entry(&idx, acc)?;
            }
        }
        // split L = υ·1 − Kξ, assemble η_n = ξ + ς_n, Φ_n, κ_n
        let mut eta_n = PolyMultiMap::zero(n, -1, v.clone(), p.basis().clone());
        let mut phi_n = PolyMultiMap::zero(n, 0, v.clone(), p.basis().clone());
        for (idx, kap0) in &kappa0_n {
            let l_val = l_tau.apply_basis(idx);
            // υ(τ) coefficients and ξ(τ) per τ-power
            let mut upsilon: Vec<Rat> = Vec::with_capacity(l_val.len());
            let mut xi: PolyElement = Vec::with_capacity(l_val.len());
            for e in &l_val {
                let u = c.apply(e);
                let defect = Element::term(unit, u.clone()).sub(e);
                xi.push(k_preimage(p, &defect)?);
                upsilon.push(u);
            }
            let sig = sigma_n.apply_basis(idx);
            let eta_val = poly_element_add(&xi, &vec![sig.clone()]);
            eta_n.add_entry(idx, eta_val)?;
            // Φ_n(τ) = φ_n + τ·Kς_n + (∫₀^τ υ)·1
            let phi0 = space.phi.component(n).apply_basis(idx);
            let ks = p.k.apply(&[&sig]);
            let mut poly_val: PolyElement = vec![phi0, ks];
            for (pow, u) in upsilon.iter().enumerate() {
                // ∫ υ_pow·τ^pow dτ = υ_pow/(pow+1)·τ^{pow+1}
                let coef = u / Rat::from_integer(((pow + 1) as i64).into());
                while poly_val.len() <= pow + 1 {
                    poly_val.push(Element::zero());
                }
                poly_val[pow + 1] = poly_val[pow + 1].add(&Element::term(unit, coef));
            }
            phi_n.add_entry(idx, poly_val)?;
            // κ_n = ϰ_n + ∫₀¹ υ
            let mut kap = kap0.clone();
            for (pow, u) in upsilon.iter().enumerate() {
                kap += u / Rat::from_integer(((pow + 1) as i64).into());
            }
            kappa.set(idx, kap)?;
        }
        eta_maps.push(eta_n);
        phi_tau.push(phi_n);
    }

    let eta = HomotopyFamily::new(v.clone(), p.basis().clone(), eta_maps)?;
    // cross-check by integrating the generic flow with the same η
    let zero_src = SLInftyStructure::zero(v.clone(), n_max);
    let family = flow(&space.phi, &eta, &zero_src, &ell)?;
    for n in 1..=n_max {
        if family.component(n) != &phi_tau[n - 1] {
            return Err(Error::validation(format!(
                "staged Φ_{n} disagrees with the integrated flow"
            )));
        }
    }
    // endpoint must be κ·1
    let end = family.eval(&Rat::from_integer(1.into()))?;
    for n in 1..=n_max {
        for idx in canonical_indices(v, n) {
            let expect = Element::term(unit, kappa.eval(&idx));
            if end.component(n).apply_basis(&idx) != expect {
                return Err(Error::validation(format!(
                    "flow endpoint is not κ·1 at {idx:?}"
                )));
            }
        }
    }
    Ok(IntegrableSolution {
        kappa,
        certificate: family,
        eta,
    })
}

/// A complete space of homotopical random variables: cohomology S with
/// a unital quasi-isomorphism φ^S into the descendant, carrying the
/// induced correlation algebra M^S = h∘Π and expectation ι^S = c∘φ^S_1.
pub struct CompleteSpace {
    /// The induced probability algebra (S, M^S, 0).
    pub algebra: ProbAlgebra,
    /// ι^S = c∘φ^S_1.
    pub iota: Expectation,
    /// The correlation densities Π_n = Σ ε(π)·M(φ^S(B_1),…).
    pub pi: Vec<MultiMap>,
    /// The homotopy Λ_n = β∘Π_n realizing φ^S as a descendant of φ^S_1.
    pub lambda: LambdaFamily,
    /// Moments μ^S_n = c∘Π_n (= ι^S∘M^S_n).
    pub mu: ScalarFamily,
}

/// Builds the canonical probability-space structure on a complete space
/// and verifies the defining identities:
/// M^S_n = h∘Π_n, ι^S = c∘φ^S_1, μ^S = ι^S∘M^S = c∘Π, and φ^S is the
/// descendant of f = φ^S_1 up to Λ = β∘Π.
pub fn complete_space(
    p: &ProbAlgebra,
    c: &Expectation,
    retract: &RetractData,
    phi_s: &SLMorphism,
) -> Result<CompleteSpace> {
    let s_basis = phi_s.source().clone();
    if retract.f.source() != &s_basis
        || retract.f.target() != p.basis()
        || retract.h.source() != p.basis()
        || retract.h.target() != &s_basis
    {
        return Err(Error::argument("retract does not connect S and the algebra"));
    }
    // retract identities
    let hf = retract.h.compose1(&retract.f)?;
    if hf != MultiMap::identity(s_basis.clone()) {
        return Err(Error::validation("h∘f ≠ id"));
    }
    let id_c = MultiMap::identity(p.basis().clone());
    let fh = retract.f.compose1(&retract.h)?;
    let kb = p.k.compose1(&retract.beta)?;
    let bk = retract.beta.compose1(&p.k)?;
    if fh != id_c.add(&kb)?.add(&bk)? {
        return Err(Error::validation("f∘h ≠ id + Kβ + βK"));
    }
    if phi_s.component(1) != &retract.f {
        return Err(Error::validation("φ^S_1 must equal the retract's f"));
    }
    let pi_fam = pi_from_phi(phi_s, &p.algebra)?;
    // K∘Π = 0
    for (n, pi_n) in pi_fam.iter().enumerate() {
        for (idx, val) in pi_n.entries() {
            if !p.k.apply(&[val]).is_zero() {
                return Err(Error::validation(format!("K∘Π_{} ≠ 0 at {idx:?}", n + 1)));
            }
        }
    }
    // M^S_n = h∘Π_n; M^S_1 = identity by h∘f = id
    let mut m_higher = Vec::new();
    for (n, pi_n) in pi_fam.iter().enumerate().skip(1) {
        let mut m_n = MultiMap::zero(n + 1, 0, s_basis.clone(), s_basis.clone());
        for (idx, val) in pi_n.entries() {
            m_n.add_entry(idx, retract.h.apply(&[val]))?;
        }
        m_higher.push(m_n);
    }
    let s_alg = CorrelationAlgebra::new(s_basis.clone(), m_higher)?;
    let s_prob = ProbAlgebra::new(
        s_alg,
        MultiMap::zero(1, 1, s_basis.clone(), s_basis.clone()),
    )?;
    // descendant of (S, M^S, 0) must be the zero structure
    let s_desc = descendant_structure(&s_prob)?;
    if !s_desc.is_zero_structure() {
        return Err(Error::validation("descendant of the complete space is not zero"));
    }
    // ι^S = c∘f
    let mut iota_vals = Vec::with_capacity(s_basis.dim());
    for i in 0..s_basis.dim() {
        iota_vals.push(c.apply(&retract.f.apply_basis(&[i])));
    }
    let iota = Expectation::new(&s_prob, iota_vals)?;
    // μ^S_n = c∘Π_n and the identity μ^S = ι^S∘M^S
    let mut mu = ScalarFamily::zero(s_basis.clone(), pi_fam.len());
    for (n, pi_n) in pi_fam.iter().enumerate() {
        for idx in canonical_indices(&s_basis, n + 1) {
            let via_pi = c.apply(&pi_n.apply_basis(&idx));
            let via_m = iota.apply(&s_prob.algebra.product(n + 1).apply_basis(&idx));
            if via_pi != via_m {
                return Err(Error::validation(format!(
                    "μ^S ≠ ι^S∘M^S at {idx:?}"
                )));
            }
            mu.set(&idx, via_pi)?;
        }
    }
    // partition identity with κ^S = φ^{c,Λ}•φ^S
    let ground = ground_prob_algebra(p.n_max());
    let c_map = expectation_as_map(p, c);
    let zero_lambda = LambdaFamily::zero(p.basis().clone(), GradedBasis::ground_field(), pi_fam.len());
    let phi_c = descendant_morphism(&c_map, &zero_lambda, p, &ground)?;
    let kappa_mor = compose(&phi_c, phi_s)?;
    let mut kappa = ScalarFamily::zero(s_basis.clone(), kappa_mor.n_max());
    for n in 1..=kappa_mor.n_max() {
        for idx in canonical_indices(&s_basis, n) {
            kappa.set(&idx, kappa_mor.component(n).apply_basis(&idx).coeff(0))?;
        }
    }
    let rebuilt = crate::cumulants::moments_from_cumulants(&kappa)?;
    for n in 1..=rebuilt.n_max().min(mu.n_max()) {
        for idx in canonical_indices(&s_basis, n) {
            if rebuilt.eval(&idx) != mu.eval(&idx) {
                return Err(Error::validation(format!(
                    "moment/cumulant identity fails on S at {idx:?}"
                )));
            }
        }
    }
    // Λ_n = β∘Π_n and φ^S = descendant of f up to Λ
    let mut lambda_maps = Vec::with_capacity(pi_fam.len());
    for (n, pi_n) in pi_fam.iter().enumerate() {
        let mut l_n = MultiMap::zero(n + 1, -1, s_basis.clone(), p.basis().clone());
        for (idx, val) in pi_n.entries() {
            l_n.add_entry(idx, retract.beta.apply(&[val]))?;
        }
        lambda_maps.push(l_n);
    }
    let lambda = LambdaFamily::new(s_basis.clone(), p.basis().clone(), lambda_maps)?;
    let desc = descendant_morphism(&retract.f, &lambda, &s_prob, p)?;
    for n in 1..=desc.n_max().min(phi_s.n_max()) {
        if desc.component(n) != phi_s.component(n) {
            return Err(Error::validation(format!(
                "φ^S is not the descendant of φ^S_1 up to β∘Π at arity {n}"
            )));
        }
    }
    Ok(CompleteSpace {
        algebra: s_prob,
        iota,
        pi: pi_fam,
        lambda,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rational::rat;
    use crate::slinfty::transfer_minimal;
    use crate::testgen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pi_phi_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(401);
        for _ in 0..6 {
            let p = testgen::random_prob_algebra(&mut rng, 4, 4);
            let v = testgen::random_plain_basis(&mut rng, 3, 1);
            let Some(phi) = testgen::random_zero_source_morphism(&mut rng, &v, &p) else {
                continue;
            };
            let pi_fam = pi_from_phi(&phi, &p.algebra).unwrap();
            // Lemma: K∘Π_n = 0
            for pi_n in &pi_fam {
                for (_, val) in pi_n.entries() {
                    assert!(p.k.apply(&[val]).is_zero());
                }
            }
            let back = phi_from_pi(&pi_fam, &p).unwrap();
            for n in 1..=phi.n_max() {
                assert_eq!(back.component(n), phi.component(n), "arity {n}");
            }
        }
    }

    #[test]
    fn pi_binary_expansion() {
        // Π_2(v₁,v₂) = φ₁(v₁)·φ₁(v₂) + φ₂(v₁,v₂)
        let mut rng = ChaCha8Rng::seed_from_u64(402);
        let p = testgen::random_prob_algebra(&mut rng, 4, 3);
        let v = testgen::random_plain_basis(&mut rng, 2, 0);
        let Some(phi) = testgen::random_zero_source_morphism(&mut rng, &v, &p) else {
            panic!("generator failed");
        };
        let pi_fam = pi_from_phi(&phi, &p.algebra).unwrap();
        assert_eq!(pi_fam[0].entries().count(), phi.component(1).entries().count());
        for idx in canonical_indices(&v, 2) {
            let f1 = phi.component(1).apply_basis(&[idx[0]]);
            let f2 = phi.component(1).apply_basis(&[idx[1]]);
            let prod = p.algebra.product(2).apply(&[&f1, &f2]);
            let expect = prod.add(&phi.component(2).apply_basis(&idx));
            assert_eq!(pi_fam[1].apply_basis(&idx), expect);
        }
    }

    #[test]
    fn non_closed_pi_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(403);
        // find an algebra with a non-closed element to plant
        loop {
            let p = testgen::random_prob_algebra(&mut rng, 4, 3);
            let basis = p.basis();
            let Some(bad) = (0..basis.dim()).find(|&i| !p.k.apply_basis(&[i]).is_zero()) else {
                continue;
            };
            let v = GradedBasis::plain(vec!["v".into()], vec![basis.degree(bad)]).unwrap();
            let mut pi1 = MultiMap::zero(1, 0, v.clone(), basis.clone());
            pi1.add_entry(&[0], Element::basis(bad)).unwrap();
            let err = phi_from_pi(&[pi1], &p);
            assert!(err.is_err());
            break;
        }
    }

    #[test]
    fn law_of_unit_variable() {
        // φ₁(e) = 1: κ₁ = 1, κ_{n≥2} = 0
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let p = testgen::random_prob_algebra(&mut rng, 4, 4);
        let c = testgen::random_expectation(&mut rng, &p);
        let v = GradedBasis::plain(vec!["e".into()], vec![0]).unwrap();
        let unit = p.basis().unit_index();
        let mut maps = Vec::new();
        for n in 1..=4usize {
            let mut m = MultiMap::zero(n, 0, v.clone(), p.basis().clone());
            if n == 1 {
                m.add_entry(&[0], Element::basis(unit)).unwrap();
            }
            maps.push(m);
        }
        let phi = SLMorphism::new(v.clone(), p.basis().clone(), maps).unwrap();
        let space = RandomVarSpace::new(v.clone(), phi, &p).unwrap();
        let lambda = LambdaFamily::zero(p.basis().clone(), GradedBasis::ground_field(), 4);
        let law = law_of_space(&space, &p, &c, &lambda, 4).unwrap();
        assert_eq!(law.kappa.eval(&[0]), rat(1, 1));
        for n in 2..=4usize {
            assert_eq!(law.kappa.eval(&vec![0; n]), rat(0, 1));
            assert_eq!(law.mu.eval(&vec![0; n]), rat(1, 1));
        }
    }

    #[test]
    fn law_invariance_under_expectation_perturbation() {
        // replacing c by c + r∘K leaves the law unchanged
        let mut rng = ChaCha8Rng::seed_from_u64(405);
        let mut done = 0;
        while done < 3 {
            let p = testgen::random_prob_algebra(&mut rng, 4, 3);
            let c = testgen::random_expectation(&mut rng, &p);
            let v = testgen::random_plain_basis(&mut rng, 2, 0);
            let Some(phi) = testgen::random_zero_source_morphism(&mut rng, &v, &p) else {
                continue;
            };
            done += 1;
            let space = RandomVarSpace::new(v.clone(), phi, &p).unwrap();
            let lambda = LambdaFamily::zero(p.basis().clone(), GradedBasis::ground_field(), 3);
            let law1 = law_of_space(&space, &p, &c, &lambda, 3).unwrap();
            let c2 = testgen::perturb_expectation(&mut rng, &p, &c);
            let law2 = law_of_space(&space, &p, &c2, &lambda, 3).unwrap();
            assert_eq!(law1.mu, law2.mu);
            assert_eq!(law1.kappa, law2.kappa);
        }
    }

    #[test]
    fn integrable_solve_matches_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(406);
        let mut done = 0;
        while done < 3 {
            let p = testgen::random_prob_algebra(&mut rng, 4, 3);
            let c = testgen::random_expectation(&mut rng, &p);
            if check_nondegenerate(&p, &c).is_err() {
                continue;
            }
            let v = testgen::random_plain_basis(&mut rng, 2, 0);
            let Some(phi) = testgen::random_zero_source_morphism(&mut rng, &v, &p) else {
                continue;
            };
            done += 1;
            let space = RandomVarSpace::new(v.clone(), phi, &p).unwrap();
            let lambda = LambdaFamily::zero(p.basis().clone(), GradedBasis::ground_field(), 3);
            let law = law_of_space(&space, &p, &c, &lambda, 3).unwrap();
            let sol = integrable_solve(&space, &p, &c).unwrap();
            for n in 1..=3usize {
                for idx in canonical_indices(&v, n) {
                    assert_eq!(sol.kappa.eval(&idx), law.kappa.eval(&idx), "{idx:?}");
                }
            }
        }
    }

    #[test]
    fn degenerate_space_rejected() {
        // a probability algebra with zero K and a genuinely random degree-0
        // direction cannot be completely integrable
        let basis =
            GradedBasis::pointed(vec!["1".into(), "x".into()], vec![0, 0]).unwrap();
        let mut m2 = MultiMap::zero(2, 0, basis.clone(), basis.clone());
        m2.add_entry(&[0, 0], Element::basis(0)).unwrap();
        m2.add_entry(&[0, 1], Element::basis(1)).unwrap();
        let alg = crate::corralg::from_binary_product(basis.clone(), &m2, 3).unwrap();
        let p = ProbAlgebra::new(alg, MultiMap::zero(1, 1, basis.clone(), basis.clone())).unwrap();
        let c = Expectation::new(&p, vec![rat(1, 1), rat(0, 1)]).unwrap();
        assert!(check_nondegenerate(&p, &c).is_err());
    }

    #[test]
    fn complete_space_on_random_descendants() {
        let mut rng = ChaCha8Rng::seed_from_u64(407);
        for _ in 0..4 {
            let p = testgen::random_prob_algebra(&mut rng, 4, 3);
            let c = testgen::random_expectation(&mut rng, &p);
            let ell = descendant_structure(&p).unwrap();
            let (_minimal, quasi, retract) = transfer_minimal(&ell).unwrap();
            let cs = complete_space(&p, &c, &retract, &quasi).unwrap();
            // unit normalization and the unit tower on M^S
            assert_eq!(cs.iota.value(0), &rat(1, 1));
            assert!(cs.algebra.algebra.check().passed());
        }
    }
}

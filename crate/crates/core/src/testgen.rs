//! Seeded random instances for the property and acceptance suites:
//! graded bases, correlation algebras, probability algebras with
//! square-zero differentials, expectations, pointed cochain maps, and
//! homotopy families. Everything is deterministic given the RNG state.

use std::sync::Arc;

use num::{One, Zero};
use rand::Rng;

use crate::corralg::CorrelationAlgebra;
use crate::cumulants::{Expectation, ProbAlgebra, ScalarFamily};
use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::linalg::Matrix;
use crate::kernel::multimap::{canonical_indices, MultiMap};
use crate::kernel::rational::Rat;

fn small_rat(rng: &mut impl Rng) -> Rat {
    Rat::new(rng.gen_range(-3i64..=3).into(), rng.gen_range(1i64..=2).into())
}

/// A pointed basis of dimension `dim` with degrees drawn from
/// [−deg_span, deg_span]; index 0 is the unit.
pub fn random_pointed_basis(rng: &mut impl Rng, dim: usize, deg_span: i64) -> Arc<GradedBasis> {
    let mut labels = vec!["1".to_string()];
    let mut degrees = vec![0i64];
    for i in 1..dim {
        labels.push(format!("e{i}"));
        degrees.push(rng.gen_range(-deg_span..=deg_span));
    }
    GradedBasis::pointed(labels, degrees).unwrap()
}

/// A plain (unit-free) basis for spaces of random variables.
pub fn random_plain_basis(rng: &mut impl Rng, dim: usize, deg_span: i64) -> Arc<GradedBasis> {
    let labels = (0..dim).map(|i| format!("v{i}")).collect();
    let degrees = (0..dim)
        .map(|_| rng.gen_range(-deg_span..=deg_span))
        .collect();
    GradedBasis::plain(labels, degrees).unwrap()
}

/// A random homogeneous element of the prescribed degree.
pub fn random_element_of_degree(rng: &mut impl Rng, basis: &GradedBasis, degree: i64) -> Element {
    let mut e = Element::zero();
    for j in 0..basis.dim() {
        if basis.degree(j) == degree && rng.gen_bool(0.7) {
            e.add_term(j, small_rat(rng));
        }
    }
    e
}

/// A random correlation algebra: the products M_2,…,M_{n_max} are free
/// on unit-less canonical tuples and forced by the unit tower elsewhere,
/// which is exactly the defining data.
pub fn random_correlation_algebra(
    rng: &mut impl Rng,
    max_dim: usize,
    n_max: usize,
    graded: bool,
) -> CorrelationAlgebra {
    let dim = rng.gen_range(2..=max_dim.max(2));
    let span = if graded { 2 } else { 0 };
    let basis = random_pointed_basis(rng, dim, span);
    random_correlation_algebra_on(rng, basis, n_max)
}

/// Same, over a caller-chosen basis.
pub fn random_correlation_algebra_on(
    rng: &mut impl Rng,
    basis: Arc<GradedBasis>,
    n_max: usize,
) -> CorrelationAlgebra {
    let unit = basis.unit_index();
    let mut higher: Vec<MultiMap> = Vec::new();
    for n in 2..=n_max {
        let mut m_n = MultiMap::zero(n, 0, basis.clone(), basis.clone());
        for idx in canonical_indices(&basis, n) {
            let value = if let Some(pos) = idx.iter().position(|&i| i == unit) {
                // unit tower: strip one unit and evaluate the lower map
                let mut rest = idx.clone();
                rest.remove(pos);
                if rest.len() == 1 {
                    Element::basis(rest[0])
                } else {
                    higher[rest.len() - 2].apply_basis(&rest)
                }
            } else {
                let deg: i64 = idx.iter().map(|&i| basis.degree(i)).sum();
                random_element_of_degree(rng, &basis, deg)
            };
            m_n.add_entry(&idx, value).unwrap();
        }
        higher.push(m_n);
    }
    CorrelationAlgebra::new(basis, higher).expect("construction satisfies the axioms")
}

/// A random square-zero pointed differential: pair up basis elements
/// (a, b) with |b| = |a|+1, set K(a) = λ·b, then conjugate by a random
/// degree-0 unit-preserving automorphism.
pub fn random_differential(rng: &mut impl Rng, basis: &Arc<GradedBasis>) -> MultiMap {
    let dim = basis.dim();
    let unit = basis.unit_index();
    let mut used = vec![false; dim];
    used[unit] = true;
    let mut k = MultiMap::zero(1, 1, basis.clone(), basis.clone());
    for a in 0..dim {
        if used[a] {
            continue;
        }
        // candidates for K(a): unused elements of degree |a|+1
        let cands: Vec<usize> = (0..dim)
            .filter(|&b| !used[b] && b != a && basis.degree(b) == basis.degree(a) + 1)
            .collect();
        if cands.is_empty() || rng.gen_bool(0.3) {
            used[a] = true;
            continue;
        }
        let b = cands[rng.gen_range(0..cands.len())];
        used[a] = true;
        used[b] = true;
        let lambda = Rat::new(rng.gen_range(1i64..=3).into(), 1.into());
        k.add_entry(&[a], Element::term(b, lambda)).unwrap();
    }
    conjugate_by_random_automorphism(rng, basis, &k)
}

fn conjugate_by_random_automorphism(
    rng: &mut impl Rng,
    basis: &Arc<GradedBasis>,
    k: &MultiMap,
) -> MultiMap {
    let dim = basis.dim();
    let unit = basis.unit_index();
    // P = I + strictly-random degree-0 nilpotent fixing the unit, applied
    // as a change of basis: K' = P ∘ K ∘ P⁻¹
    let mut p = Matrix::identity(dim);
    for i in 0..dim {
        for j in 0..dim {
            if i != j && j != unit && basis.degree(i) == basis.degree(j) && rng.gen_bool(0.25) {
                p[(i, j)] = small_rat(rng);
            }
        }
    }
    // ensure invertibility (generic upper perturbation may degenerate)
    if p.rank() != dim {
        return k.clone();
    }
    let mut p_inv_cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut e = vec![Rat::zero(); dim];
        e[j] = Rat::one();
        p_inv_cols.push(p.solve(&e).expect("invertible"));
    }
    let mut out = MultiMap::zero(1, 1, basis.clone(), basis.clone());
    for j in 0..dim {
        // K'(e_j) = P(K(P⁻¹ e_j))
        let pre = Element::from_coeffs(
            p_inv_cols[j]
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.clone())),
        );
        let mid = k.apply(&[&pre]);
        let mut img = Element::zero();
        for (i, c) in mid.iter() {
            for r in 0..dim {
                img.add_term(r, &p[(r, i)] * c);
            }
        }
        out.add_entry(&[j], img).unwrap();
    }
    out
}

/// A random homotopy probability algebra (dim ≤ max_dim, degrees in
/// [−2, 2], arity ≤ n_max).
pub fn random_prob_algebra(rng: &mut impl Rng, max_dim: usize, n_max: usize) -> ProbAlgebra {
    loop {
        let algebra = random_correlation_algebra(rng, max_dim, n_max, true);
        let k = random_differential(rng, algebra.basis());
        if let Ok(p) = ProbAlgebra::new(algebra, k) {
            return p;
        }
    }
}

/// A random expectation for `p`: c(1) = 1, degree-0 support, c∘K = 0,
/// with the free directions sampled randomly.
pub fn random_expectation(rng: &mut impl Rng, p: &ProbAlgebra) -> Expectation {
    let basis = p.basis();
    let dim = basis.dim();
    let unit = basis.unit_index();
    // constraints: c(K e_j) = 0 for all j; unknowns: c on degree-0 indices
    let deg0: Vec<usize> = basis.indices_of_degree(0);
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for j in 0..dim {
        let img = p.k.apply_basis(&[j]);
        let row: Vec<Rat> = deg0.iter().map(|&i| img.coeff(i)).collect();
        if row.iter().any(|c| !c.is_zero()) {
            rows.push(row);
        }
    }
    let mut mat = Matrix::zeros(rows.len(), deg0.len());
    for (r, row) in rows.iter().enumerate() {
        for (cidx, v) in row.iter().enumerate() {
            mat[(r, cidx)] = v.clone();
        }
    }
    let kernel = mat.kernel_basis();
    // the unit direction always admits c(1)=1: find a kernel combination
    // with nonzero unit coordinate (the constant solution c = δ_unit is
    // in the kernel because K(1) = 0 and 1 ∉ im K guarantees consistency)
    let unit_pos = deg0.iter().position(|&i| i == unit).expect("unit has degree 0");
    let mut sol: Option<Vec<Rat>> = None;
    for v in &kernel {
        if !v[unit_pos].is_zero() {
            sol = Some(v.iter().map(|c| c / &v[unit_pos]).collect());
            break;
        }
    }
    let base = sol.expect("some expectation exists");
    // add random kernel vectors vanishing on the unit coordinate
    let mut values_deg0 = base;
    for v in &kernel {
        if v[unit_pos].is_zero() && rng.gen_bool(0.5) {
            let s = small_rat(rng);
            for (slot, c) in values_deg0.iter_mut().zip(v) {
                *slot += c * &s;
            }
        }
    }
    let mut values = vec![Rat::zero(); dim];
    for (pos, &i) in deg0.iter().enumerate() {
        values[i] = values_deg0[pos].clone();
    }
    Expectation::new(p, values).expect("constructed to satisfy the constraints")
}

/// A random pointed cochain map f: (C, K) → (C′, K′) with f(1) = 1′,
/// sampled from the affine solution space of f∘K = K′∘f.
pub fn random_chain_map(
    rng: &mut impl Rng,
    src: &ProbAlgebra,
    dst: &ProbAlgebra,
) -> Option<MultiMap> {
    let sb = src.basis();
    let db = dst.basis();
    let sd = sb.dim();
    let dd = db.dim();
    // unknowns: f[(i,j)] (dd×sd matrix entries) with degree matching;
    // constraints: (fK − K′f)(e_j) = 0 for all j, f(1) = 1', degree-0 blocks
    let mut var_index = std::collections::BTreeMap::new();
    let mut vars = Vec::new();
    for j in 0..sd {
        for i in 0..dd {
            if db.degree(i) == sb.degree(j) {
                var_index.insert((i, j), vars.len());
                vars.push((i, j));
            }
        }
    }
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    // chain-map condition per source j, target i (degree |j|+1)
    for j in 0..sd {
        let kj = src.k.apply_basis(&[j]);
        for i in 0..dd {
            if db.degree(i) != sb.degree(j) + 1 {
                continue;
            }
            let mut row = vec![Rat::zero(); vars.len()];
            // Σ_r f[(i?, r)] contributions: f(K e_j) picks f[(i, r)]·K_{r j}
            for (r, c) in kj.iter() {
                if let Some(&v) = var_index.get(&(i, r)) {
                    row[v] += c.clone();
                }
            }
            // −K′(f e_j): −Σ_m K'_{i m} f[(m, j)]
            for m in 0..dd {
                if db.degree(m) == sb.degree(j) {
                    let kim = dst.k.apply_basis(&[m]).coeff(i);
                    if !kim.is_zero() {
                        if let Some(&v) = var_index.get(&(m, j)) {
                            row[v] -= kim;
                        }
                    }
                }
            }
            if row.iter().any(|c| !c.is_zero()) {
                rows.push(row);
                rhs.push(Rat::zero());
            }
        }
    }
    // pointedness: f(1) = 1′
    for i in 0..dd {
        if db.degree(i) != 0 {
            continue;
        }
        let mut row = vec![Rat::zero(); vars.len()];
        if let Some(&v) = var_index.get(&(i, sb.unit_index())) {
            row[v] = Rat::one();
        }
        rows.push(row);
        rhs.push(if i == db.unit_index() { Rat::one() } else { Rat::zero() });
    }
    let mut mat = Matrix::zeros(rows.len(), vars.len());
    for (r, row) in rows.iter().enumerate() {
        for (cx, v) in row.iter().enumerate() {
            mat[(r, cx)] = v.clone();
        }
    }
    let particular = mat.solve(&rhs)?;
    let kernel = mat.kernel_basis();
    let mut coeffs = particular;
    for v in &kernel {
        if rng.gen_bool(0.6) {
            let s = small_rat(rng);
            for (slot, c) in coeffs.iter_mut().zip(v) {
                *slot += c * &s;
            }
        }
    }
    let mut f = MultiMap::zero(1, 0, sb.clone(), db.clone());
    for j in 0..sd {
        let mut img = Element::zero();
        for i in 0..dd {
            if let Some(&v) = var_index.get(&(i, j)) {
                img.add_term(i, coeffs[v].clone());
            }
        }
        f.add_entry(&[j], img).ok()?;
    }
    Some(f)
}

/// A random homotopy family Λ: degree −1 maps with Λ_1(1) = 0 and
/// Λ_{n+1}(x₁,…,x_n,1) = Λ_n(x₁,…,x_n).
pub fn random_lambda_family(
    rng: &mut impl Rng,
    src: &Arc<GradedBasis>,
    dst: &Arc<GradedBasis>,
    n_max: usize,
) -> Vec<MultiMap> {
    let unit = src.unit_index();
    let mut fams: Vec<MultiMap> = Vec::new();
    for n in 1..=n_max {
        let mut l_n = MultiMap::zero(n, -1, src.clone(), dst.clone());
        for idx in canonical_indices(src, n) {
            let value = if let Some(pos) = idx.iter().position(|&i| i == unit) {
                if n == 1 {
                    Element::zero() // Λ_1(1) = 0
                } else {
                    let mut rest = idx.clone();
                    rest.remove(pos);
                    fams[n - 2].apply_basis(&rest)
                }
            } else {
                let deg: i64 = idx.iter().map(|&i| src.degree(i)).sum::<i64>() - 1;
                random_element_of_degree(rng, dst, deg)
            };
            l_n.add_entry(&idx, value).unwrap();
        }
        fams.push(l_n);
    }
    fams
}

/// A random sL∞-morphism from the zero structure on `v` into the
/// descendant of `p`, built by sampling a K-closed Π family and
/// inverting the Π recursion.
pub fn random_zero_source_morphism(
    rng: &mut impl Rng,
    v: &Arc<GradedBasis>,
    p: &ProbAlgebra,
) -> Option<crate::slinfty::SLMorphism> {
    let basis = p.basis();
    let dim = basis.dim();
    // kernel of K as column vectors
    let mut kmat = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let img = p.k.apply_basis(&[j]);
        for (i, c) in img.iter() {
            kmat[(i, j)] = c.clone();
        }
    }
    let kernel = kmat.kernel_basis();
    let mut pi_fam = Vec::new();
    for n in 1..=p.n_max() {
        let mut pi_n = MultiMap::zero(n, 0, v.clone(), basis.clone());
        for idx in canonical_indices(v, n) {
            let deg: i64 = idx.iter().map(|&i| v.degree(i)).sum();
            // random kernel combination of matching degree
            let mut val = Element::zero();
            for kv in &kernel {
                if !rng.gen_bool(0.6) {
                    continue;
                }
                let e = Element::from_coeffs(kv.iter().enumerate().map(|(i, c)| (i, c.clone())));
                if e.homogeneous_degree(basis) == Some(deg) {
                    val = val.add(&e.scale(&small_rat(rng)));
                }
            }
            pi_n.add_entry(&idx, val).ok()?;
        }
        pi_fam.push(pi_n);
    }
    crate::randomvar::phi_from_pi(&pi_fam, p).ok()
}

/// Perturbs an expectation by a pointed cochain homotopy: c ↦ c + r∘K,
/// with r a random degree −1 functional.
pub fn perturb_expectation(rng: &mut impl Rng, p: &ProbAlgebra, c: &Expectation) -> Expectation {
    let basis = p.basis();
    // r: nonzero only on degree +1 elements
    let r_vals: Vec<Rat> = (0..basis.dim())
        .map(|i| {
            if basis.degree(i) == 1 {
                small_rat(rng)
            } else {
                Rat::zero()
            }
        })
        .collect();
    let mut values = c.values().to_vec();
    for (j, slot) in values.iter_mut().enumerate() {
        let kj = p.k.apply_basis(&[j]);
        for (i, coef) in kj.iter() {
            *slot += &r_vals[i] * coef;
        }
    }
    Expectation::new(p, values).expect("perturbed expectation remains valid")
}

/// A random unit-killing homotopy family: degree −1 maps η_n with
/// η_n(…,1) = 0 in every arity (the sL∞-homotopy convention, distinct
/// from the descendant-Λ tower).
pub fn random_sl_homotopy(
    rng: &mut impl Rng,
    src: &Arc<GradedBasis>,
    dst: &Arc<GradedBasis>,
    n_max: usize,
) -> Vec<MultiMap> {
    let unit = src.unit_index();
    let mut fams = Vec::new();
    for n in 1..=n_max {
        let mut l_n = MultiMap::zero(n, -1, src.clone(), dst.clone());
        for idx in canonical_indices(src, n) {
            if idx.contains(&unit) {
                continue;
            }
            let deg: i64 = idx.iter().map(|&i| src.degree(i)).sum::<i64>() - 1;
            l_n.add_entry(&idx, random_element_of_degree(rng, dst, deg))
                .unwrap();
        }
        fams.push(l_n);
    }
    fams
}

/// A random unital family of degree-0 maps: φ_1(1) = 1′ and
/// φ_k(…,1) = 0 for k ≥ 2 (the shape of an sL∞-morphism, with no
/// relation imposed).
pub fn random_unital_family(
    rng: &mut impl Rng,
    src: &Arc<GradedBasis>,
    dst: &Arc<GradedBasis>,
    n_max: usize,
) -> crate::slinfty::SLMorphism {
    let unit = src.unit_index();
    let mut phi = Vec::new();
    for n in 1..=n_max {
        let mut p = MultiMap::zero(n, 0, src.clone(), dst.clone());
        for idx in canonical_indices(src, n) {
            let value = if idx.contains(&unit) {
                if n == 1 {
                    Element::basis(dst.unit_index())
                } else {
                    Element::zero()
                }
            } else {
                let deg: i64 = idx.iter().map(|&i| src.degree(i)).sum();
                random_element_of_degree(rng, dst, deg)
            };
            p.add_entry(&idx, value).unwrap();
        }
        phi.push(p);
    }
    crate::slinfty::SLMorphism::new(src.clone(), dst.clone(), phi).unwrap()
}

/// A random symmetric scalar family (moment-style input for roundtrips),
/// with the unit tower imposed: f_1(1) = 1, f_{n+1}(…,1) = f_n(…).
pub fn random_scalar_family(rng: &mut impl Rng, max_dim: usize, n_max: usize) -> ScalarFamily {
    let dim = rng.gen_range(2..=max_dim.max(2));
    let basis = random_pointed_basis(rng, dim, 2);
    let unit = basis.unit_index();
    let mut fam = ScalarFamily::zero(basis.clone(), n_max);
    for n in 1..=n_max {
        for idx in canonical_indices(&basis, n) {
            let value = if let Some(pos) = idx.iter().position(|&i| i == unit) {
                if n == 1 {
                    Rat::one()
                } else {
                    let mut rest = idx.clone();
                    rest.remove(pos);
                    fam.eval(&rest)
                }
            } else if idx.iter().map(|&i| basis.degree(i)).sum::<i64>() == 0 {
                small_rat(rng)
            } else {
                // degree-0 functional: off-degree values vanish
                Rat::zero()
            };
            fam.set(&idx, value).unwrap();
        }
    }
    fam
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn differentials_square_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let basis = random_pointed_basis(&mut rng, 5, 2);
            let k = random_differential(&mut rng, &basis);
            assert!(k.compose1(&k).unwrap().is_zero());
            assert!(k.apply_basis(&[0]).is_zero());
        }
    }

    #[test]
    fn prob_algebras_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let p = random_prob_algebra(&mut rng, 5, 4);
            assert!(p.algebra.check().passed());
            let c = random_expectation(&mut rng, &p);
            // c∘K = 0 rechecked by construction inside Expectation::new
            let _ = c;
        }
    }

    #[test]
    fn chain_maps_commute_with_differentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut produced = 0;
        for _ in 0..10 {
            let p = random_prob_algebra(&mut rng, 4, 3);
            let q = random_prob_algebra(&mut rng, 4, 3);
            if let Some(f) = random_chain_map(&mut rng, &p, &q) {
                produced += 1;
                let fk = f.compose1(&p.k).unwrap();
                let kf = q.k.compose1(&f).unwrap();
                assert_eq!(fk, kf);
                assert_eq!(f.apply_basis(&[0]), Element::basis(0));
            }
        }
        assert!(produced > 0, "generator should usually succeed");
    }

    #[test]
    fn lambda_families_satisfy_unit_tower() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let src = random_pointed_basis(&mut rng, 4, 1);
        let dst = random_pointed_basis(&mut rng, 4, 1);
        let lam = random_lambda_family(&mut rng, &src, &dst, 4);
        assert!(lam[0].apply_basis(&[0]).is_zero());
        for n in 1..4usize {
            for idx in canonical_indices(&src, n) {
                let mut with_unit = idx.clone();
                with_unit.push(0);
                assert_eq!(
                    lam[n].apply_basis(&with_unit),
                    lam[n - 1].apply_basis(&idx)
                );
            }
        }
    }
}

//! Homotopical realization of classical algebraic probability spaces
//! with infinitesimal symmetries: truncated polynomial algebras,
//! algebraic differential operators, the Koszul complex with its
//! differential K, coinvariant reduction, and mechanical derivation of
//! moment-generating-function ODEs from the symmetry alone.
//!
//! The polynomial algebra is infinite dimensional; the honest finite
//! model truncates at a total degree cap and tracks, for every element,
//! the degree window within which its coefficients are exact.

use std::collections::BTreeMap;


use num::{One, Signed, Zero};


use crate::cumulants::{Expectation, ProbAlgebra};
use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::multimap::MultiMap;
use crate::kernel::poly::{Poly, RatFun};
use crate::kernel::rational::{format_rat, Rat};
use crate::{Error, Result};

/// Monomial: exponent vector over the polynomial generators.
pub type Mono = Vec<u32>;

fn mono_degree(m: &Mono) -> i64 {
    m.iter().map(|&e| e as i64).sum()
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// The truncated polynomial algebra A = 𝕜[s_1,…,s_g] with monomials up
/// to total degree `cap`; classical generators all have degree 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncPolyAlgebra {
    pub gens: Vec<String>,
    pub cap: i64,
}

impl TruncPolyAlgebra {
    pub fn new(gens: Vec<String>, cap: i64) -> Self {
        TruncPolyAlgebra { gens, cap }
    }

    pub fn num_gens(&self) -> usize {
        self.gens.len()
    }

    pub fn one(&self) -> PolyElem {
        PolyElem::monomial(self, &vec![0; self.num_gens()])
    }

    /// Monomials of total degree ≤ bound, ascending by (degree, lex).
    pub fn monomials_up_to(&self, bound: i64) -> Vec<Mono> {
        let mut out: Vec<Mono> = Vec::new();
        let g = self.num_gens();
        let mut stack: Vec<(Mono, i64, usize)> = vec![(vec![0; g], 0, 0)];
        while let Some((m, deg, pos)) = stack.pop() {
            if pos == g {
                out.push(m);
                continue;
            }
            for e in 0..=(bound - deg) {
                let mut next = m.clone();
                next[pos] = e as u32;
                stack.push((next, deg + e, pos + 1));
            }
        }
        out.sort_by_key(|m| (mono_degree(m), m.clone()));
        out
    }
}

/// A truncated polynomial with a validity window: all coefficients of
/// total degree ≤ `valid` are exact; higher ones may have been cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyElem {
    pub terms: BTreeMap<Mono, Rat>,
    pub valid: i64,
}

impl PolyElem {
    pub fn zero(ring: &TruncPolyAlgebra) -> Self {
        PolyElem {
            terms: BTreeMap::new(),
            valid: ring.cap,
        }
    }

    pub fn monomial(ring: &TruncPolyAlgebra, m: &Mono) -> Self {
        let mut terms = BTreeMap::new();
        if mono_degree(m) <= ring.cap {
            terms.insert(m.clone(), Rat::one());
        }
        PolyElem {
            terms,
            valid: ring.cap,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_degree(&self) -> i64 {
        self.terms.keys().map(mono_degree).min().unwrap_or(i64::MAX)
    }

    pub fn max_degree(&self) -> i64 {
        self.terms.keys().map(mono_degree).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, ring: &TruncPolyAlgebra, m: Mono, c: Rat) {
        if c.is_zero() || mono_degree(&m) > ring.cap {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &PolyElem, ring: &TruncPolyAlgebra) -> PolyElem {
        let mut out = self.clone();
        out.valid = self.valid.min(other.valid);
        for (m, c) in &other.terms {
            out.add_term(ring, m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rat) -> PolyElem {
        if s.is_zero() {
            return PolyElem {
                terms: BTreeMap::new(),
                valid: self.valid,
            };
        }
        PolyElem {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
            valid: self.valid,
        }
    }

    /// Product, truncated at the cap, with the validity window shrunk to
    /// what both factors can certify.
    pub fn mul(&self, other: &PolyElem, ring: &TruncPolyAlgebra) -> PolyElem {
        let mut out = PolyElem::zero(ring);
        out.valid = ring
            .cap
            .min(self.valid + other.min_degree())
            .min(other.valid + self.min_degree());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(ring, mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }
}

/// A linear algebraic differential operator: a finite sum of terms
/// (polynomial coefficient) × (partial-derivative multi-index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOperator {
    /// (coefficient polynomial as monomial map, derivative multi-index)
    pub terms: Vec<(BTreeMap<Mono, Rat>, Mono)>,
}

impl DiffOperator {
    pub fn zero() -> Self {
        DiffOperator { terms: Vec::new() }
    }

    /// The degree shift that bounds validity loss: min over terms of
    /// (coefficient degree − derivative order); applying the operator to
    /// an element valid to v yields validity v + shift (capped).
    pub fn validity_shift(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|(coeff, deriv)| {
                let order = mono_degree(deriv);
                coeff.keys().map(move |m| mono_degree(m) - order)
            })
            .min()
            .unwrap_or(0)
    }

    /// Largest raise in polynomial degree the operator can cause.
    pub fn max_raise(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|(coeff, deriv)| {
                let order = mono_degree(deriv);
                coeff.keys().map(move |m| mono_degree(m) - order)
            })
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, x: &PolyElem, ring: &TruncPolyAlgebra) -> PolyElem {
        let mut out = PolyElem::zero(ring);
        out.valid = ring.cap.min(x.valid + self.validity_shift());
        for (coeff, deriv) in &self.terms {
            for (m, c) in &x.terms {
                // ∂^deriv m: falling factorials per generator
                let mut factor = Rat::one();
                let mut target = m.clone();
                let mut vanished = false;
                for (g, &d) in deriv.iter().enumerate() {
                    if target[g] < d {
                        vanished = true;
                        break;
                    }
                    for k in 0..d {
                        factor *= Rat::from_integer(((target[g] - k) as i64).into());
                    }
                    target[g] -= d;
                }
                if vanished {
                    continue;
                }
                for (cm, cc) in coeff {
                    out.add_term(ring, mono_mul(cm, &target), cc * c * &factor);
                }
            }
        }
        out
    }
}

/// An infinitesimal symmetry: a Lie algebra with structure constants
/// f_ij^k and a representation by differential operators.
#[derive(Clone, Debug)]
pub struct Symmetry {
    pub names: Vec<String>,
    /// f[i][j] = Σ_k f_ij^k e_k, stored as the coefficient vector.
    pub brackets: Vec<Vec<Vec<Rat>>>,
    pub ops: Vec<DiffOperator>,
}

impl Symmetry {
    pub fn abelian(names: Vec<String>, ops: Vec<DiffOperator>) -> Self {
        let g = names.len();
        let brackets = vec![vec![vec![Rat::zero(); g]; g]; g];
        Symmetry {
            names,
            brackets,
            ops,
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Verifies ρ([e_i,e_j]) = [ρ_i, ρ_j] on monomials within the shared
    /// validity window.
    pub fn check_representation(&self, ring: &TruncPolyAlgebra) -> Result<()> {
        let raise: i64 = self.ops.iter().map(|o| o.max_raise()).max().unwrap_or(0);
        let window = ring.cap - 2 * raise.max(0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                for m in ring.monomials_up_to(window.max(0)) {
                    let x = PolyElem::monomial(ring, &m);
                    let lhs = {
                        let a = self.ops[i].apply(&self.ops[j].apply(&x, ring), ring);
                        let b = self.ops[j].apply(&self.ops[i].apply(&x, ring), ring);
                        a.add(&b.scale(&-Rat::one()), ring)
                    };
                    let mut rhs = PolyElem::zero(ring);
                    for (k, coef) in self.brackets[i][j].iter().enumerate() {
                        if !coef.is_zero() {
                            rhs = rhs.add(&self.ops[k].apply(&x, ring).scale(coef), ring);
                        }
                    }
                    let diff = lhs.add(&rhs.scale(&-Rat::one()), ring);
                    let v = diff.valid;
                    if diff.terms.keys().any(|mm| mono_degree(mm) <= v) {
                        return Err(Error::validation(format!(
                            "ρ does not respect [e_{i},e_{j}] at monomial {m:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// An element of the Koszul complex C = A ⊗ Λ[η_1..η_g]: keyed by a
/// polynomial monomial and an η-subset bitmask, with a validity window
/// on the polynomial degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoszulElem {
    pub terms: BTreeMap<(Mono, u64), Rat>,
    pub valid: i64,
}

/// The binary homotopy probability algebra (C, 1, ·, K) realizing a
/// classical space with infinitesimal symmetry.
#[derive(Clone, Debug)]
pub struct KoszulRealization {
    pub ring: TruncPolyAlgebra,
    pub sym: Symmetry,
}

impl KoszulRealization {
    pub fn elem_zero(&self) -> KoszulElem {
        KoszulElem {
            terms: BTreeMap::new(),
            valid: self.ring.cap,
        }
    }

    pub fn monomial(&self, m: &Mono, etas: u64) -> KoszulElem {
        let mut e = self.elem_zero();
        if mono_degree(m) <= self.ring.cap {
            e.terms.insert((m.clone(), etas), Rat::one());
        }
        e
    }

    /// The Chevalley–Eilenberg–Koszul differential:
    /// K(a⊗η_{i_1}⋯η_{i_k}) = Σ_p (−1)^{p−1} ρ_{i_p}(a)⊗(omit p)
    ///   + Σ_{p<q} (−1)^{p+q} a⊗η_{[i_p,i_q]}·(omit p,q).
    pub fn apply_k(&self, x: &KoszulElem) -> KoszulElem {
        let ring = &self.ring;
        let shift = self
            .sym
            .ops
            .iter()
            .map(|o| o.validity_shift())
            .min()
            .unwrap_or(0);
        let mut out = self.elem_zero();
        out.valid = ring.cap.min(x.valid + shift.min(0));
        for ((m, etas), c) in &x.terms {
            let members: Vec<usize> = (0..self.sym.dim()).filter(|&j| etas >> j & 1 == 1).collect();
            // ρ-part
            for (p, &j) in members.iter().enumerate() {
                let sign = if p % 2 == 0 { Rat::one() } else { -Rat::one() };
                let img = self.sym.ops[j].apply(
                    &PolyElem {
                        terms: BTreeMap::from([(m.clone(), c.clone())]),
                        valid: x.valid,
                    },
                    ring,
                );
                let rest = etas & !(1u64 << j);
                for (mm, cc) in &img.terms {
                    let slot = out
                        .terms
                        .entry((mm.clone(), rest))
                        .or_insert_with(Rat::zero);
                    *slot += cc * &sign;
                    if slot.is_zero() {
                        out.terms.remove(&(mm.clone(), rest));
                    }
                }
            }
            // bracket part, with the sign that makes K² = 0 for left
            // modules: (−1)^{p+q+1} in 1-based positions; the bracket
            // generator is wedged at the front then sorted in
            for p in 0..members.len() {
                for q in (p + 1)..members.len() {
                    let (i, j) = (members[p], members[q]);
                    let base_sign = if (p + q) % 2 == 0 { -Rat::one() } else { Rat::one() };
                    let rest = etas & !(1u64 << i) & !(1u64 << j);
                    for (k, coef) in self.sym.brackets[i][j].iter().enumerate() {
                        if coef.is_zero() || rest >> k & 1 == 1 {
                            continue; // η_k² = 0
                        }
                        // wedge η_k at the front of the remaining word:
                        // moving it to sorted position costs a sign
                        let before = (0..k).filter(|&b| rest >> b & 1 == 1).count();
                        let wedge_sign = if before % 2 == 0 { Rat::one() } else { -Rat::one() };
                        let slot = out
                            .terms
                            .entry((m.clone(), rest | (1u64 << k)))
                            .or_insert_with(Rat::zero);
                        *slot += c * coef * &base_sign * &wedge_sign;
                        if slot.is_zero() {
                            out.terms.remove(&(m.clone(), rest | (1u64 << k)));
                        }
                    }
                }
            }
        }
        out
    }

    /// K² = 0 on every monomial basis element within the validity window.
    pub fn check_k_squared(&self) -> Result<()> {
        let raise: i64 = self.sym.ops.iter().map(|o| o.max_raise()).max().unwrap_or(0);
        let window = (self.ring.cap - 2 * raise.max(0)).max(0);
        for etas in 0..(1u64 << self.sym.dim()) {
            if etas == 0 {
                continue;
            }
            for m in self.ring.monomials_up_to(window) {
                let x = self.monomial(&m, etas);
                let kk = self.apply_k(&self.apply_k(&x));
                let v = kk.valid;
                if kk.terms.iter().any(|((mm, _), c)| mono_degree(mm) <= v && !c.is_zero()) {
                    return Err(Error::validation(format!(
                        "K² ≠ 0 at monomial {m:?} with η-set {etas:#b}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the Koszul realization and verifies both the representation
/// property and K² = 0 within validity.
pub fn build_koszul(ring: TruncPolyAlgebra, sym: Symmetry) -> Result<KoszulRealization> {
    if sym.ops.len() != sym.dim() {
        return Err(Error::argument("one operator per Lie algebra generator"));
    }
    sym.check_representation(&ring)?;
    let real = KoszulRealization { ring, sym };
    real.check_k_squared()?;
    Ok(real)
}

/// The result of coinvariant reduction: an echelonized relation set with
/// leading monomials, supporting reduction of degree-0 monomials to the
/// quotient basis.
pub struct Coinvariants {
    ring: TruncPolyAlgebra,
    /// echelon rows keyed by leading monomial (descending pivot degree)
    rows: BTreeMap<Mono, BTreeMap<Mono, Rat>>,
    /// degree up to which every relation used is exact
    pub decidable_degree: i64,
}

impl Coinvariants {
    /// Monomials of the quotient basis up to a degree bound: those that
    /// are not leading monomials of any relation.
    pub fn quotient_basis(&self, bound: i64) -> Vec<Mono> {
        self.ring
            .monomials_up_to(bound.min(self.decidable_degree))
            .into_iter()
            .filter(|m| !self.rows.contains_key(m))
            .collect()
    }

    /// Expands [monomial] in the quotient basis. Errors when the
    /// reduction would need relations beyond the validity boundary.
    pub fn reduce(&self, m: &Mono) -> Result<BTreeMap<Mono, Rat>> {
        if mono_degree(m) > self.decidable_degree {
            return Err(Error::boundary(format!(
                "monomial {m:?} exceeds the decidable degree {}",
                self.decidable_degree
            )));
        }
        let mut cur: BTreeMap<Mono, Rat> = BTreeMap::from([(m.clone(), Rat::one())]);
        loop {
            // find the largest reducible monomial
            let Some((lead, coef)) = cur
                .iter()
                .filter(|(mm, _)| self.rows.contains_key(*mm))
                .max_by_key(|(mm, _)| (mono_degree(mm), (*mm).clone()))
                .map(|(mm, cc)| (mm.clone(), cc.clone()))
            else {
                return Ok(cur);
            };
            let row = &self.rows[&lead];
            cur.remove(&lead);
            for (mm, cc) in row {
                if mm == &lead {
                    continue;
                }
                let slot = cur.entry(mm.clone()).or_insert_with(Rat::zero);
                *slot -= &coef * cc;
                if slot.is_zero() {
                    cur.remove(mm);
                }
            }
        }
    }

    /// The induced expectation against a one-dimensional quotient:
    /// ι(monomial) = coefficient of the constant monomial. Errors when
    /// the quotient is larger than span{[1]} at the needed degree.
    pub fn iota(&self, m: &Mono) -> Result<Rat> {
        let red = self.reduce(m)?;
        let one = vec![0u32; self.ring.num_gens()];
        for mm in red.keys() {
            if mm != &one {
                return Err(Error::validation(format!(
                    "quotient is not one-dimensional: {mm:?} survives"
                )));
            }
        }
        Ok(red.get(&one).cloned().unwrap_or_else(Rat::zero))
    }
}

/// Exact row reduction of the image of K on degree −1: relations are
/// ρ_j(monomial) for all monomials whose image stays entirely inside the
/// truncation cap. Pivots on the highest-degree term (descending).
pub fn reduce_coinvariants(real: &KoszulRealization) -> Result<Coinvariants> {
    let ring = &real.ring;
    let mut relations: Vec<BTreeMap<Mono, Rat>> = Vec::new();
    let mut decidable: i64 = ring.cap;
    for (j, op) in real.sym.ops.iter().enumerate() {
        let _ = j;
        let raise = op.max_raise().max(0);
        let gen_bound = ring.cap - raise;
        for m in ring.monomials_up_to(gen_bound) {
            let img = op.apply(&PolyElem::monomial(ring, &m), ring);
            if !img.is_zero() {
                relations.push(img.terms);
            }
        }
        // relations with sources above gen_bound are unavailable; their
        // leading terms live above cap − raise + raise = cap, so every
        // monomial ≤ cap − raise is guaranteed reducible when triangular;
        // the conservative decidable window is cap − raise.
        decidable = decidable.min(ring.cap - raise);
    }
    // echelonize with pivots on the highest-degree monomial
    let mut rows: BTreeMap<Mono, BTreeMap<Mono, Rat>> = BTreeMap::new();
    // process relations by descending leading degree for determinism
    relations.sort_by_key(|r| {
        let lead = r
            .keys()
            .max_by_key(|m| (mono_degree(m), (*m).clone()))
            .cloned()
            .unwrap();
        std::cmp::Reverse((mono_degree(&lead), lead))
    });
    for mut rel in relations {
        loop {
            let Some(lead) = rel
                .keys()
                .max_by_key(|m| (mono_degree(m), (*m).clone()))
                .cloned()
            else {
                break;
            };
            if let Some(row) = rows.get(&lead) {
                let factor = rel[&lead].clone();
                let row = row.clone();
                for (mm, cc) in &row {
                    let slot = rel.entry(mm.clone()).or_insert_with(Rat::zero);
                    *slot -= &factor * cc;
                    if slot.is_zero() {
                        rel.remove(mm);
                    }
                }
            } else {
                // normalize to a monic pivot
                let inv = rel[&lead].clone().recip();
                let normalized: BTreeMap<Mono, Rat> =
                    rel.iter().map(|(m, c)| (m.clone(), c * &inv)).collect();
                rows.insert(lead, normalized);
                break;
            }
        }
    }
    Ok(Coinvariants {
        ring: ring.clone(),
        rows,
        decidable_degree: decidable,
    })
}

/// A bivariate polynomial in (s, t) for single-variable MGF work.
type BiPoly = BTreeMap<(u32, u32), Rat>;

fn bipoly_add_term(p: &mut BiPoly, key: (u32, u32), c: Rat) {
    if c.is_zero() {
        return;
    }
    let slot = p.entry(key).or_insert_with(Rat::zero);
    *slot += c;
    if slot.is_zero() {
        p.remove(&key);
    }
}

fn bipoly_mul(a: &BiPoly, b: &BiPoly) -> BiPoly {
    let mut out = BiPoly::new();
    for (&(sa, ta), ca) in a {
        for (&(sb, tb), cb) in b {
            bipoly_add_term(&mut out, (sa + sb, ta + tb), ca * cb);
        }
    }
    out
}

/// An operator Σ_k c_k(s,t)·(d/ds)^k.
type TOperator = BTreeMap<u32, BiPoly>;

fn top_add(a: &TOperator, b: &TOperator, scale: &Rat) -> TOperator {
    let mut out = a.clone();
    for (&k, coeff) in b {
        let slot = out.entry(k).or_default();
        for (&key, c) in coeff {
            bipoly_add_term(slot, key, c * scale);
        }
    }
    out.retain(|_, v| !v.is_empty());
    out
}

/// Composition a∘b via the Leibniz rule.
fn top_compose(a: &TOperator, b: &TOperator) -> TOperator {
    let mut out = TOperator::new();
    for (&k, ca) in a {
        for (&l, cb) in b {
            // ∂^k (c_b ∂^l f) = Σ_j C(k,j) (∂^j c_b) ∂^{k−j+l} f
            for j in 0..=k {
                let mut deriv = cb.clone();
                let mut ok = true;
                for _ in 0..j {
                    let mut next = BiPoly::new();
                    for (&(se, te), c) in &deriv {
                        if se > 0 {
                            bipoly_add_term(
                                &mut next,
                                (se - 1, te),
                                c * Rat::from_integer((se as i64).into()),
                            );
                        }
                    }
                    deriv = next;
                    if deriv.is_empty() {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                let binom = binomial(k as i64, j as i64);
                let prod = bipoly_mul(ca, &deriv);
                let slot = out.entry(k - j + l).or_default();
                for (&key, c) in &prod {
                    bipoly_add_term(slot, key, c * &binom);
                }
            }
        }
    }
    out.retain(|_, v| !v.is_empty());
    out
}

fn binomial(n: i64, k: i64) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc *= Rat::new((n - i).into(), (i + 1).into());
    }
    acc
}

fn top_commutator(a: &TOperator, b: &TOperator) -> TOperator {
    let ab = top_compose(a, b);
    let ba = top_compose(b, a);
    top_add(&ab, &ba, &-Rat::one())
}

/// Converts a single-variable差 operator to the (s,t) form.
fn top_from_diffop(op: &DiffOperator) -> Result<TOperator> {
    let mut out = TOperator::new();
    for (coeff, deriv) in &op.terms {
        if deriv.len() != 1 {
            return Err(Error::argument("MGF derivation needs a single variable"));
        }
        let k = deriv[0];
        let slot = out.entry(k).or_default();
        for (m, c) in coeff {
            bipoly_add_term(slot, (m[0], 0), c.clone());
        }
    }
    out.retain(|_, v| !v.is_empty());
    Ok(out)
}

/// The conjugated family ρ_t = e^{−ts}·ρ·e^{ts} = Σ_k ad^k_{L_{ts}}(ρ)/k!,
/// terminating because ρ has finite order.
pub fn conjugated_operator(op: &DiffOperator) -> Result<TOperator> {
    let rho = top_from_diffop(op)?;
    // L_{t·s}: multiplication by t·s
    let gamma: TOperator = BTreeMap::from([(0u32, BTreeMap::from([((1u32, 1u32), Rat::one())]))]);
    let mut acc = rho.clone();
    let mut cur = rho;
    let mut k = 1i64;
    loop {
        cur = top_commutator(&cur, &gamma);
        if cur.is_empty() {
            break;
        }
        let inv_fact = Rat::new(1.into(), k.into()); // iterated: cur already holds ad^k/(k−1)!
        cur = {
            let mut scaled = TOperator::new();
            for (&d, coeff) in &cur {
                let slot = scaled.entry(d).or_default();
                for (&key, c) in coeff {
                    bipoly_add_term(slot, key, c * &inv_fact);
                }
            }
            scaled
        };
        acc = top_add(&acc, &cur, &Rat::one());
        k += 1;
        if k > 64 {
            return Err(Error::validation("conjugation did not terminate"));
        }
    }
    Ok(acc)
}

/// Applies an (s,t)-operator to s^a, producing coefficients in 𝕜[t]
/// per power of s.
fn top_apply_power(op: &TOperator, a: u32) -> BTreeMap<u32, Poly> {
    let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
    for (&k, coeff) in op {
        if a < k {
            continue;
        }
        let mut factor = Rat::one();
        for i in 0..k {
            factor *= Rat::from_integer(((a - i) as i64).into());
        }
        for (&(se, te), c) in coeff {
            let spow = se + a - k;
            let slot = out.entry(spow).or_insert_with(Poly::zero);
            *slot = slot.add(&Poly::monomial(c * &factor, te as usize));
        }
    }
    out.retain(|_, p| !p.is_zero());
    out
}

/// A derived ordinary differential equation Σ_k c_k(t)·Z^{(k)} = 0 with
/// polynomial coefficients, content-normalized, highest-order leading
/// coefficient positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MgfOde {
    /// c_0, …, c_m with c_m ≠ 0.
    pub coeffs: Vec<Poly>,
}

impl MgfOde {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Residual series of the ODE applied to Z (coefficients of Z given
    /// ascending); trustworthy through `z.len() − 1 − order`.
    pub fn residual(&self, z: &[Rat]) -> Vec<Rat> {
        let zp = Poly::new(z.to_vec());
        let mut acc = Poly::zero();
        let mut deriv = zp;
        for c in &self.coeffs {
            acc = acc.add(&c.mul(&deriv));
            deriv = deriv.derivative();
        }
        let window = z.len().saturating_sub(self.order() + 1);
        (0..window).map(|k| acc.coeff(k)).collect()
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let dtag = match k {
                    0 => "Z".to_string(),
                    1 => "Z'".to_string(),
                    2 => "Z''".to_string(),
                    _ => format!("Z^({k})"),
                };
                format!("({})*{}", c.format("t"), dtag)
            })
            .collect();
        format!("{} = 0", parts.join(" + "))
    }
}

/// Derives the MGF ODE by symmetry alone: conjugate ρ to ρ_t, reduce
/// s^m modulo Im ρ_t over 𝕜(t) (pivoting on descending s-powers), and
/// translate powers of s into d/dt. The smallest m ≥ 2 whose normal
/// form drops below s^m wins; `Ok(None)` when no relation is found
/// below `max_order`.
pub fn derive_mgf_ode(op: &DiffOperator, max_order: usize) -> Result<Option<MgfOde>> {
    let rho_t = conjugated_operator(op)?;
    // relation rows keyed by leading s-power
    let bound = (max_order + 4) as u32;
    let mut pivots: BTreeMap<u32, Vec<RatFun>> = BTreeMap::new();
    for a in 0..=bound {
        let img = top_apply_power(&rho_t, a);
        let Some(&lead) = img.keys().max() else { continue };
        let mut row: Vec<RatFun> = vec![RatFun::zero(); lead as usize + 1];
        for (&p, c) in &img {
            row[p as usize] = RatFun::from_poly(c.clone());
        }
        // reduce the row's lead against existing pivots, keeping the first
        // available leading power (rows come in ascending a, so leading
        // powers ascend; collisions just get reduced)
        normalize_into_pivots(&mut pivots, row);
    }
    for m in 2..=max_order {
        let mut cur: Vec<RatFun> = vec![RatFun::zero(); m + 1];
        cur[m] = RatFun::from_poly(Poly::one());
        reduce_by_pivots(&pivots, &mut cur);
        let top = cur.iter().rposition(|c| !c.is_zero());
        match top {
            None => {
                // s^m ≡ 0: ODE Z^{(m)} = 0
                let mut coeffs = vec![Poly::zero(); m + 1];
                coeffs[m] = Poly::one();
                return Ok(Some(MgfOde { coeffs }));
            }
            Some(t) if t < m => {
                // Z^{(m)} = Σ_{k<m} cur_k(t)·Z^{(k)}  (cur holds the NF)
                let mut den = Poly::one();
                for c in cur.iter().take(m) {
                    if !c.is_zero() {
                        let g = den.gcd(c.den());
                        let (q, _) = c.den().div_rem(&g);
                        den = den.mul(&q);
                    }
                }
                let mut coeffs = vec![Poly::zero(); m + 1];
                coeffs[m] = den.clone();
                for (k, c) in cur.iter().take(m).enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let (q, r) = den.mul(c.num()).div_rem(c.den());
                    debug_assert!(r.is_zero());
                    coeffs[k] = q.neg();
                }
                // joint content normalization with positive leading c_m
                let mut joined: Vec<Rat> = Vec::new();
                for c in &coeffs {
                    joined.extend(c.coeffs().iter().cloned());
                }
                let joint = Poly::new(joined).primitive_normalized();
                // recover the scale factor from any nonzero coefficient
                let scale = scale_between(&coeffs, &joint);
                let mut out: Vec<Poly> = coeffs.iter().map(|c| c.scale(&scale)).collect();
                if out[m].leading().is_negative() {
                    for c in &mut out {
                        *c = c.neg();
                    }
                }
                return Ok(Some(MgfOde { coeffs: out }));
            }
            _ => continue,
        }
    }
    Ok(None)
}

fn scale_between(coeffs: &[Poly], normalized_join: &Poly) -> Rat {
    // find the first nonzero coefficient pair to compute the content scale
    let mut flat: Vec<Rat> = Vec::new();
    for c in coeffs {
        flat.extend(c.coeffs().iter().cloned());
    }
    for (a, b) in flat.iter().zip(normalized_join.coeffs()) {
        if !a.is_zero() {
            return b / a;
        }
    }
    Rat::one()
}

fn normalize_into_pivots(pivots: &mut BTreeMap<u32, Vec<RatFun>>, mut row: Vec<RatFun>) {
    loop {
        let Some(top) = row.iter().rposition(|c| !c.is_zero()) else {
            return;
        };
        if let Some(existing) = pivots.get(&(top as u32)) {
            let factor = row[top].clone();
            for (k, c) in existing.iter().enumerate() {
                if !c.is_zero() {
                    row[k] = row[k].sub(&factor.mul(c));
                }
            }
        } else {
            // monic
            let inv = row[top].recip();
            let normalized: Vec<RatFun> = row.iter().map(|c| c.mul(&inv)).collect();
            pivots.insert(top as u32, normalized);
            return;
        }
    }
}

fn reduce_by_pivots(pivots: &BTreeMap<u32, Vec<RatFun>>, cur: &mut Vec<RatFun>) {
    loop {
        let Some(top) = cur.iter().rposition(|c| !c.is_zero()) else {
            return;
        };
        if top == 0 {
            // constants cannot be reduced further unless a constant pivot
            // exists (it never does for a symmetry of an expectation)
            return;
        }
        let Some(row) = pivots.get(&(top as u32)) else {
            return;
        };
        let factor = cur[top].clone();
        for (k, c) in row.iter().enumerate() {
            if !c.is_zero() {
                cur[k] = cur[k].sub(&factor.mul(c));
            }
        }
    }
}

/// Exports the realization as a finite-dimensional homotopy probability
/// algebra with expectation: basis monomials s^a·η_S with
/// a + raise·|S| ≤ window; products truncate outside it.
pub fn as_prob_algebra(
    real: &KoszulRealization,
    window: i64,
    n_max: usize,
) -> Result<(ProbAlgebra, Expectation)> {
    let ring = &real.ring;
    if window > ring.cap {
        return Err(Error::argument("window exceeds the ring cap"));
    }
    let raise: i64 = real
        .sym
        .ops
        .iter()
        .map(|o| o.max_raise())
        .max()
        .unwrap_or(0)
        .max(0);
    let coin = reduce_coinvariants(real)?;
    // collect basis monomials: (mono, eta set)
    let mut labels = Vec::new();
    let mut degrees = Vec::new();
    let mut keys: Vec<(Mono, u64)> = Vec::new();
    for etas in 0..(1u64 << real.sym.dim()) {
        let level = etas.count_ones() as i64;
        let bound = window - raise * level;
        if bound < 0 {
            continue;
        }
        for m in ring.monomials_up_to(bound) {
            keys.push((m, etas));
        }
    }
    // unit first, then by (eta level, degree, lex)
    keys.sort_by_key(|(m, e)| (e.count_ones(), mono_degree(m), m.clone(), *e));
    for (m, e) in &keys {
        let mut name = String::new();
        if mono_degree(m) == 0 && *e == 0 {
            name.push('1');
        } else {
            for (g, &exp) in m.iter().enumerate() {
                for _ in 0..exp {
                    name.push_str(&ring.gens[g]);
                }
            }
            for j in 0..real.sym.dim() {
                if e >> j & 1 == 1 {
                    name.push_str(&format!("h{j}"));
                }
            }
        }
        labels.push(name);
        degrees.push(-(e.count_ones() as i64));
    }
    let basis = GradedBasis::pointed(labels, degrees)?;
    let index_of: BTreeMap<(Mono, u64), usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect();
    let in_window = |m: &Mono, e: u64| -> bool {
        mono_degree(m) + raise * (e.count_ones() as i64) <= window
    };
    // binary product with truncation
    let mut m2 = MultiMap::zero(2, 0, basis.clone(), basis.clone());
    for i in 0..keys.len() {
        for j in i..keys.len() {
            let (ma, ea) = &keys[i];
            let (mb, eb) = &keys[j];
            if ea & eb != 0 {
                continue; // η² = 0
            }
            let prod = mono_mul(ma, mb);
            let etas = ea | eb;
            if !in_window(&prod, etas) {
                continue;
            }
            // Koszul sign for merging η-words (both sorted): count
            // transpositions to interleave eb past ea
            let mut sign = 1i64;
            for bj in 0..real.sym.dim() {
                if eb >> bj & 1 == 1 {
                    let later_in_a = (bj + 1..real.sym.dim())
                        .filter(|&aj| ea >> aj & 1 == 1)
                        .count();
                    if later_in_a % 2 == 1 {
                        sign = -sign;
                    }
                }
            }
            let target = index_of[&(prod, etas)];
            m2.add_entry(&[i, j], Element::term(target, Rat::from_integer(sign.into())))?;
        }
    }
    let alg = crate::corralg::from_binary_product(basis.clone(), &m2, n_max)?;
    // K
    let mut k = MultiMap::zero(1, 1, basis.clone(), basis.clone());
    for (i, (m, e)) in keys.iter().enumerate() {
        let img = real.apply_k(&real.monomial(m, *e));
        let mut val = Element::zero();
        for ((mm, ee), c) in &img.terms {
            let Some(&t) = index_of.get(&(mm.clone(), *ee)) else {
                return Err(Error::boundary(format!(
                    "K image leaves the export window at {mm:?}"
                )));
            };
            val.add_term(t, c.clone());
        }
        k.add_entry(&[i], val)?;
    }
    let p = ProbAlgebra::new(alg, k)?;
    // expectation: coinvariant ι on degree 0, zero on η-monomials
    let mut values = Vec::with_capacity(keys.len());
    for (m, e) in &keys {
        if *e == 0 {
            values.push(coin.iota(m)?);
        } else {
            values.push(Rat::zero());
        }
    }
    let c = Expectation::new(&p, values)?;
    Ok((p, c))
}

/// The built-in Gaussian symmetry ρ = −σ²·d/ds + L_s on 𝕜[s].
pub fn gaussian_symmetry(ring: &TruncPolyAlgebra, sigma2: &Rat) -> Symmetry {
    let d_ds = vec![1u32];
    let s_mono = vec![1u32];
    let op = DiffOperator {
        terms: vec![
            (BTreeMap::from([(vec![0u32], -sigma2.clone())]), d_ds),
            (BTreeMap::from([(s_mono, Rat::one())]), vec![0u32]),
        ],
    };
    let _ = ring;
    Symmetry::abelian(vec!["e".into()], vec![op])
}

/// The built-in semicircle symmetry ρ = (4−s²)·d/ds − 3·L_s on 𝕜[s].
pub fn semicircle_symmetry(ring: &TruncPolyAlgebra) -> Symmetry {
    let op = DiffOperator {
        terms: vec![
            (
                BTreeMap::from([
                    (vec![0u32], Rat::from_integer(4.into())),
                    (vec![2u32], -Rat::one()),
                ]),
                vec![1u32],
            ),
            (
                BTreeMap::from([(vec![1u32], Rat::from_integer((-3).into()))]),
                vec![0u32],
            ),
        ],
    };
    let _ = ring;
    Symmetry::abelian(vec!["e".into()], vec![op])
}

/// Double factorial (n−1)!! convention: odd_moment_factor(2k) = (2k−1)!!.
pub fn double_factorial(n: i64) -> Rat {
    let mut acc = Rat::one();
    let mut k = n;
    while k >= 1 {
        acc *= Rat::from_integer(k.into());
        k -= 2;
    }
    acc
}

/// Catalan numbers C_k.
pub fn catalan(k: usize) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc *= Rat::new((2 * (2 * i as i64 + 1)).into(), (i as i64 + 2).into());
    }
    acc
}

/// Renders a monomial for reports.
pub fn mono_label(ring: &TruncPolyAlgebra, m: &Mono) -> String {
    if mono_degree(m) == 0 {
        return "1".into();
    }
    let mut out = String::new();
    for (g, &e) in m.iter().enumerate() {
        if e == 1 {
            out.push_str(&ring.gens[g]);
        } else if e > 1 {
            out.push_str(&format!("{}^{}", ring.gens[g], e));
        }
    }
    out
}

/// Renders a coefficient expansion for reports.
pub fn expansion_label(ring: &TruncPolyAlgebra, exp: &BTreeMap<Mono, Rat>) -> String {
    if exp.is_empty() {
        return "0".into();
    }
    exp.iter()
        .map(|(m, c)| format!("{}·[{}]", format_rat(c), mono_label(ring, m)))
        .collect::<Vec<_>>()
        .join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rational::rat;

    fn one_var(cap: i64) -> TruncPolyAlgebra {
        TruncPolyAlgebra::new(vec!["s".into()], cap)
    }

    #[test]
    fn operator_application_and_validity() {
        let ring = one_var(8);
        let sym = gaussian_symmetry(&ring, &rat(1, 1));
        let rho = &sym.ops[0];
        // ρ(1) = s, ρ(s^n) = −n·s^{n−1} + s^{n+1}
        let one = ring.one();
        let rs = rho.apply(&one, &ring);
        assert_eq!(rs.terms, BTreeMap::from([(vec![1u32], rat(1, 1))]));
        let s3 = PolyElem::monomial(&ring, &vec![3u32]);
        let r3 = rho.apply(&s3, &ring);
        assert_eq!(
            r3.terms,
            BTreeMap::from([(vec![2u32], rat(-3, 1)), (vec![4u32], rat(1, 1))])
        );
        // validity shrinks by the raise
        assert_eq!(r3.valid, 7);
    }

    #[test]
    fn gaussian_koszul_k_values() {
        // K(η) = s and K(s^n·η) = −nσ²s^{n−1} + s^{n+1}
        let ring = one_var(10);
        let real = build_koszul(ring.clone(), gaussian_symmetry(&ring, &rat(1, 1))).unwrap();
        let eta = real.monomial(&vec![0u32], 1);
        let keta = real.apply_k(&eta);
        assert_eq!(keta.terms, BTreeMap::from([((vec![1u32], 0u64), rat(1, 1))]));
        let s2eta = real.monomial(&vec![2u32], 1);
        let k2 = real.apply_k(&s2eta);
        assert_eq!(
            k2.terms,
            BTreeMap::from([
                ((vec![1u32], 0u64), rat(-2, 1)),
                ((vec![3u32], 0u64), rat(1, 1))
            ])
        );
        // K of degree-0 elements vanishes; K² = 0 checked at build time
        let s = real.monomial(&vec![1u32], 0);
        assert!(real.apply_k(&s).terms.is_empty());
    }

    #[test]
    fn semicircle_koszul_k_values() {
        // ρ(s^{n−1}) = 4(n−1)s^{n−2} − (n+2)s^n
        let ring = one_var(10);
        let real = build_koszul(ring.clone(), semicircle_symmetry(&ring)).unwrap();
        let s3eta = real.monomial(&vec![3u32], 1);
        let k3 = real.apply_k(&s3eta);
        // n−1 = 3: 4·3·s² − 6·s⁴
        assert_eq!(
            k3.terms,
            BTreeMap::from([
                ((vec![2u32], 0u64), rat(12, 1)),
                ((vec![4u32], 0u64), rat(-6, 1))
            ])
        );
    }

    #[test]
    fn nonabelian_koszul_squares_to_zero() {
        // the 2-dim solvable Lie algebra [e₀,e₁] = e₁ acting on 𝕜[s]:
        // ρ₀ = s·d/ds (weight), ρ₁ = d/ds (lowering): [ρ₀,ρ₁] = −ρ₁,
        // so set f_{01}^1 = −1.
        let ring = one_var(8);
        let rho0 = DiffOperator {
            terms: vec![(BTreeMap::from([(vec![1u32], rat(1, 1))]), vec![1u32])],
        };
        let rho1 = DiffOperator {
            terms: vec![(BTreeMap::from([(vec![0u32], rat(1, 1))]), vec![1u32])],
        };
        let mut brackets = vec![vec![vec![Rat::zero(); 2]; 2]; 2];
        brackets[0][1][1] = rat(-1, 1);
        brackets[1][0][1] = rat(1, 1);
        let sym = Symmetry {
            names: vec!["w".into(), "l".into()],
            brackets,
            ops: vec![rho0, rho1],
        };
        let real = build_koszul(ring, sym).unwrap();
        // K on η₀η₁ exercises the bracket part; K² = 0 verified in build
        let e01 = real.monomial(&vec![2u32], 0b11);
        let k = real.apply_k(&e01);
        assert!(!k.terms.is_empty());
    }

    #[test]
    fn representation_violation_detected() {
        // claiming an abelian bracket for non-commuting operators fails
        let ring = one_var(8);
        let rho0 = DiffOperator {
            terms: vec![(BTreeMap::from([(vec![1u32], rat(1, 1))]), vec![1u32])],
        };
        let rho1 = DiffOperator {
            terms: vec![(BTreeMap::from([(vec![0u32], rat(1, 1))]), vec![1u32])],
        };
        let sym = Symmetry::abelian(vec!["a".into(), "b".into()], vec![rho0, rho1]);
        assert!(build_koszul(ring, sym).is_err());
    }

    #[test]
    fn gaussian_coinvariants() {
        // [s^{2k}] = (2k−1)!!·[1] for σ² = 1, odd powers vanish
        let ring = one_var(12);
        let real = build_koszul(ring.clone(), gaussian_symmetry(&ring, &rat(1, 1))).unwrap();
        let coin = reduce_coinvariants(&real).unwrap();
        assert!(coin.decidable_degree >= 10);
        for k in 0..=5usize {
            let even = coin.iota(&vec![2 * k as u32]).unwrap();
            assert_eq!(even, double_factorial(2 * k as i64 - 1), "2k = {}", 2 * k);
            if k > 0 {
                let odd = coin.iota(&vec![2 * k as u32 - 1]).unwrap();
                assert!(odd.is_zero());
            }
        }
        // quotient is span{[1]}
        assert_eq!(coin.quotient_basis(6), vec![vec![0u32]]);
        // beyond the boundary → error naming the monomial
        let err = coin.reduce(&vec![12u32]);
        assert!(err.is_err());
    }

    #[test]
    fn gaussian_coinvariants_sigma_scaled() {
        // general σ²: ι(s^{2k}) = σ^{2k}(2k−1)!!
        let ring = one_var(8);
        let sigma2 = rat(3, 2);
        let real = build_koszul(ring.clone(), gaussian_symmetry(&ring, &sigma2)).unwrap();
        let coin = reduce_coinvariants(&real).unwrap();
        let m4 = coin.iota(&vec![4u32]).unwrap();
        assert_eq!(m4, rat(27, 4)); // 3·(3/2)²
    }

    #[test]
    fn semicircle_coinvariants_are_catalan() {
        let ring = one_var(14);
        let real = build_koszul(ring.clone(), semicircle_symmetry(&ring)).unwrap();
        let coin = reduce_coinvariants(&real).unwrap();
        for k in 0..=6usize {
            let even = coin.iota(&vec![2 * k as u32]).unwrap();
            assert_eq!(even, catalan(k), "C_{k}");
        }
        // e.g. [s⁶] = 5·[1]
        assert_eq!(coin.iota(&vec![6u32]).unwrap(), rat(5, 1));
    }

    #[test]
    fn zero_symmetry_reduction_is_identity() {
        let ring = one_var(6);
        let sym = Symmetry::abelian(vec!["e".into()], vec![DiffOperator::zero()]);
        let real = build_koszul(ring.clone(), sym).unwrap();
        let coin = reduce_coinvariants(&real).unwrap();
        // no relations: every monomial is its own class
        let red = coin.reduce(&vec![3u32]).unwrap();
        assert_eq!(red, BTreeMap::from([(vec![3u32], rat(1, 1))]));
        assert_eq!(coin.quotient_basis(3).len(), 4);
    }

    #[test]
    fn conjugated_gaussian_operator() {
        // ρ_t(1) = s − σ²t, ρ_t(s) = −σ² + s² − σ²t·s
        let ring = one_var(8);
        let sym = gaussian_symmetry(&ring, &rat(1, 1));
        let rho_t = conjugated_operator(&sym.ops[0]).unwrap();
        let at1 = top_apply_power(&rho_t, 0);
        assert_eq!(at1[&1], Poly::one());
        assert_eq!(at1[&0], Poly::new(vec![rat(0, 1), rat(-1, 1)]));
        let ats = top_apply_power(&rho_t, 1);
        assert_eq!(ats[&2], Poly::one());
        assert_eq!(ats[&1], Poly::new(vec![rat(0, 1), rat(-1, 1)]));
        assert_eq!(ats[&0], Poly::constant(rat(-1, 1)));
    }

    #[test]
    fn gaussian_mgf_ode() {
        // Z″ = σ²(1 + t²σ²)·Z, i.e. coefficients (−σ²(1+σ²t²), 0, 1)
        let ring = one_var(8);
        for sigma2 in [rat(1, 1), rat(2, 1), rat(1, 2)] {
            let sym = gaussian_symmetry(&ring, &sigma2);
            let ode = derive_mgf_ode(&sym.ops[0], 4).unwrap().unwrap();
            assert_eq!(ode.order(), 2);
            let s2 = &sigma2;
            let c0_expect = Poly::new(vec![-s2.clone(), rat(0, 1), -(s2 * s2)]);
            // joint normalization may rescale; compare up to the fixed c₂
            let scale = ode.coeffs[2].coeff(0);
            assert!(!scale.is_zero());
            let c0 = ode.coeffs[0].scale(&scale.recip());
            assert_eq!(c0, c0_expect, "σ² = {s2}");
            assert!(ode.coeffs[1].is_zero());
        }
    }

    #[test]
    fn semicircle_mgf_ode_and_catalan_recursion() {
        // t·Z″ + 3·Z′ − 4t·Z = 0
        let ring = one_var(8);
        let sym = semicircle_symmetry(&ring);
        let ode = derive_mgf_ode(&sym.ops[0], 4).unwrap().unwrap();
        assert_eq!(ode.order(), 2);
        assert_eq!(ode.coeffs[2], Poly::x());
        assert_eq!(ode.coeffs[1], Poly::constant(rat(3, 1)));
        assert_eq!(ode.coeffs[0], Poly::new(vec![rat(0, 1), rat(-4, 1)]));
        // residual on the Catalan series vanishes
        let mut z = vec![Rat::zero(); 15];
        for k in 0..=6usize {
            let mut fact = Rat::one();
            for i in 1..=(2 * k) as i64 {
                fact *= Rat::from_integer(i.into());
            }
            z[2 * k] = catalan(k) / fact;
        }
        let res = ode.residual(&z);
        assert!(res.iter().all(|c| c.is_zero()), "residual {res:?}");
        // equivalent Catalan recursion (n+2)C_{n+1} = 2(2n+1)C_n
        for n in 0..=8usize {
            let lhs = Rat::from_integer(((n + 2) as i64).into()) * catalan(n + 1);
            let rhs = Rat::from_integer((2 * (2 * n as i64 + 1)).into()) * catalan(n);
            assert_eq!(lhs, rhs, "n = {n}");
        }
    }

    #[test]
    fn gaussian_ode_annihilates_coinvariant_series() {
        // the coinvariant-derived Z satisfies the derived ODE through
        // the full validity order
        let ring = one_var(16);
        let sigma2 = rat(1, 1);
        let real = build_koszul(ring.clone(), gaussian_symmetry(&ring, &sigma2)).unwrap();
        let coin = reduce_coinvariants(&real).unwrap();
        let order = coin.decidable_degree as usize;
        let mut z = vec![Rat::zero(); order + 1];
        let mut fact = Rat::one();
        for n in 0..=order {
            if n > 0 {
                fact *= Rat::from_integer((n as i64).into());
            }
            z[n] = coin.iota(&vec![n as u32]).unwrap() / fact.clone();
        }
        let sym = gaussian_symmetry(&ring, &sigma2);
        let ode = derive_mgf_ode(&sym.ops[0], 4).unwrap().unwrap();
        let res = ode.residual(&z);
        assert!(res.len() >= 13);
        assert!(res.iter().all(|c| c.is_zero()), "residual {res:?}");
    }

    #[test]
    fn export_to_prob_algebra_gaussian() {
        let ring = one_var(12);
        let real = build_koszul(ring.clone(), gaussian_symmetry(&ring, &rat(1, 1))).unwrap();
        let (p, c) = as_prob_algebra(&real, 8, 4).unwrap();
        // moments of s under the exported expectation match the closed form
        let basis = p.basis();
        let s_idx = (0..basis.dim()).find(|&i| basis.label(i) == "s").unwrap();
        let mu = crate::cumulants::moments(&p, &c).unwrap();
        assert_eq!(mu.eval(&[s_idx, s_idx]), rat(1, 1));
        assert_eq!(mu.eval(&[s_idx; 4]), rat(3, 1));
        // descendant brackets: ℓ^K_2(η, s) = −σ²
        let ell = crate::descend::descendant_structure(&p).unwrap();
        let h_idx = (0..basis.dim()).find(|&i| basis.label(i) == "h0").unwrap();
        assert_eq!(
            ell.bracket(2).apply_basis(&[s_idx, h_idx]).coeff(0),
            rat(-1, 1)
        );
    }
}

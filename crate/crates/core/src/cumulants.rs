//! Homotopy probability spaces and their moment/cumulant combinatorics:
//! a correlation algebra with a pointed differential K, an expectation
//! functional, the partition-sum conversion between moments and
//! cumulants, generating series, independence, and the exact
//! central-limit scaling law.

use std::sync::Arc;

use num::{One, Zero};

use crate::corralg::CorrelationAlgebra;
use crate::kernel::grading::{Element, GradedBasis};
use crate::kernel::linalg::Matrix;
use crate::kernel::multimap::{canonical_indices, MultiMap};
use crate::kernel::partition::{enumerate_partitions, partition_sign};
use crate::kernel::rational::{factorial, perfect_sqrt, rat_pow, Rat};
use crate::kernel::series::SuperSeries;
use crate::{Error, Result};

/// A homotopy probability algebra: a correlation algebra together with a
/// pointed differential K (no compatibility between the two demanded).
#[derive(Clone, Debug)]
pub struct ProbAlgebra {
    pub algebra: CorrelationAlgebra,
    /// Arity-1 degree +1 map with K∘K = 0, K(1) = 0, 1 ∉ im K.
    pub k: MultiMap,
}

impl ProbAlgebra {
    pub fn new(algebra: CorrelationAlgebra, k: MultiMap) -> Result<Self> {
        if k.arity() != 1 || k.degree() != 1 {
            return Err(Error::argument("K must be arity 1, degree +1"));
        }
        if k.source() != algebra.basis() || k.target() != algebra.basis() {
            return Err(Error::argument("K acts on the wrong basis"));
        }
        let unit = algebra.basis().unit_index();
        if !k.apply_basis(&[unit]).is_zero() {
            return Err(Error::validation("K(1) must vanish"));
        }
        let kk = k.compose1(&k)?;
        if !kk.is_zero() {
            return Err(Error::validation("K∘K must vanish"));
        }
        // 1 ∉ im K, by rank comparison of K against K extended by the unit
        let dim = algebra.basis().dim();
        let mut mat = Matrix::zeros(dim, dim);
        for j in 0..dim {
            let img = k.apply_basis(&[j]);
            for (i, c) in img.iter() {
                mat[(i, j)] = c.clone();
            }
        }
        let mut unit_vec = vec![Rat::zero(); dim];
        unit_vec[unit] = Rat::one();
        if mat.solve(&unit_vec).is_some() {
            return Err(Error::validation("unit lies in the image of K"));
        }
        Ok(ProbAlgebra { algebra, k })
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.algebra.basis()
    }

    pub fn n_max(&self) -> usize {
        self.algebra.n_max()
    }
}

/// A degree-0 expectation functional with c(1) = 1 and c∘K = 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    values: Vec<Rat>,
}

impl Expectation {
    /// Validates c against a probability algebra.
    pub fn new(p: &ProbAlgebra, values: Vec<Rat>) -> Result<Self> {
        let basis = p.basis();
        if values.len() != basis.dim() {
            return Err(Error::argument("expectation values length mismatch"));
        }
        for i in 0..basis.dim() {
            if basis.degree(i) != 0 && !values[i].is_zero() {
                return Err(Error::argument("expectation must vanish off degree 0"));
            }
        }
        if !values[basis.unit_index()].is_one() {
            return Err(Error::validation("c(1) must equal 1"));
        }
        let c = Expectation { values };
        for j in 0..basis.dim() {
            if !c.apply(&p.k.apply_basis(&[j])).is_zero() {
                return Err(Error::validation(format!(
                    "c∘K ≠ 0 on basis element {}",
                    basis.label(j)
                )));
            }
        }
        Ok(c)
    }

    /// For complexes with zero differential (classical spaces) the c∘K
    /// condition is vacuous; only c(1)=1 and degree-0 support matter.
    pub fn from_values_unchecked(values: Vec<Rat>) -> Self {
        Expectation { values }
    }

    pub fn value(&self, i: usize) -> &Rat {
        &self.values[i]
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn apply(&self, e: &Element) -> Rat {
        let mut acc = Rat::zero();
        for (i, c) in e.iter() {
            acc += &self.values[i] * c;
        }
        acc
    }
}

/// A family of symmetric degree-0 multilinear functionals μ_n or κ_n,
/// stored as maps into the ground field. `maps[k]` has arity k+1.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFamily {
    pub space: Arc<GradedBasis>,
    pub maps: Vec<MultiMap>,
}

impl ScalarFamily {
    pub fn zero(space: Arc<GradedBasis>, n_max: usize) -> Self {
        let target = GradedBasis::ground_field();
        let maps = (1..=n_max)
            .map(|n| MultiMap::zero(n, 0, space.clone(), target.clone()))
            .collect();
        ScalarFamily { space, maps }
    }

    pub fn n_max(&self) -> usize {
        self.maps.len()
    }

    pub fn map(&self, n: usize) -> &MultiMap {
        &self.maps[n - 1]
    }

    /// Scalar value on a basis tuple.
    pub fn eval(&self, idx: &[usize]) -> Rat {
        self.map(idx.len()).apply_basis(idx).coeff(0)
    }

    /// Scalar value on general elements.
    pub fn eval_elements(&self, args: &[&Element]) -> Rat {
        self.map(args.len()).apply(args).coeff(0)
    }

    pub fn set(&mut self, idx: &[usize], value: Rat) -> Result<()> {
        let n = idx.len();
        self.maps[n - 1].add_entry(idx, Element::term(0, value))?;
        Ok(())
    }
}

/// μ_n(x_1,…,x_n) = c(M_n(x_1,…,x_n)) for all n up to the algebra's
/// truncation.
pub fn moments(p: &ProbAlgebra, c: &Expectation) -> Result<ScalarFamily> {
    let basis = p.basis();
    let mut fam = ScalarFamily::zero(basis.clone(), p.n_max());
    for n in 1..=p.n_max() {
        for idx in canonical_indices(basis, n) {
            let v = p.algebra.product(n).apply_basis(&idx);
            fam.set(&idx, c.apply(&v))?;
        }
    }
    Ok(fam)
}

/// Inverts the partition identity: κ_n(x) = μ_n(x) −
/// Σ_{π ≠ 1-block} ε(π)·κ(x_{B_1})⋯κ(x_{B_{|π|}}).
pub fn cumulants_from_moments(mu: &ScalarFamily) -> Result<ScalarFamily> {
    let basis = &mu.space;
    let mut kappa = ScalarFamily::zero(basis.clone(), mu.n_max());
    for n in 1..=mu.n_max() {
        for idx in canonical_indices(basis, n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| basis.degree(i)).collect();
            let mut val = mu.eval(&idx);
            for pi in enumerate_partitions(n)? {
                if pi.num_blocks() == 1 {
                    continue;
                }
                let sign = partition_sign(&pi, &degrees)?;
                let mut prod = Rat::from_integer(sign.into());
                for block in pi.blocks() {
                    let block_idx: Vec<usize> = block.iter().map(|&p| idx[p]).collect();
                    prod *= kappa.eval(&block_idx);
                    if prod.is_zero() {
                        break;
                    }
                }
                val -= prod;
            }
            kappa.set(&idx, val)?;
        }
    }
    Ok(kappa)
}

/// μ_n(x) = Σ_{π∈P(n)} ε(π)·κ(x_{B_1})⋯κ(x_{B_{|π|}}).
pub fn moments_from_cumulants(kappa: &ScalarFamily) -> Result<ScalarFamily> {
    let basis = &kappa.space;
    let mut mu = ScalarFamily::zero(basis.clone(), kappa.n_max());
    for n in 1..=kappa.n_max() {
        for idx in canonical_indices(basis, n) {
            let degrees: Vec<i64> = idx.iter().map(|&i| basis.degree(i)).collect();
            let mut val = Rat::zero();
            for pi in enumerate_partitions(n)? {
                let sign = partition_sign(&pi, &degrees)?;
                let mut prod = Rat::from_integer(sign.into());
                for block in pi.blocks() {
                    let block_idx: Vec<usize> = block.iter().map(|&p| idx[p]).collect();
                    prod *= kappa.eval(&block_idx);
                    if prod.is_zero() {
                        break;
                    }
                }
                val += prod;
            }
            mu.set(&idx, val)?;
        }
    }
    Ok(mu)
}

/// The generating series Z = 1 + Σ_n (1/n!)·Σ t^{j_n}⋯t^{j_1}·f_n(e_{j_1},…,e_{j_n})
/// of a scalar family. For the cumulant family this is F without the
/// leading 1; `with_unit_term` selects the two presentations.
pub fn generating_series(
    fam: &ScalarFamily,
    order: usize,
    with_unit_term: bool,
) -> Result<SuperSeries> {
    let basis = &fam.space;
    let mut out = if with_unit_term {
        SuperSeries::one(basis.clone(), order)
    } else {
        SuperSeries::zero(basis.clone(), order)
    };
    for n in 1..=fam.n_max().min(order) {
        let inv_fact = factorial(n).recip();
        for idx in crate::corralg::all_tuples(basis.dim(), n) {
            let v = fam.eval(&idx);
            if v.is_zero() {
                continue;
            }
            // word t^{j_n}⋯t^{j_1} for the tuple (j_1,…,j_n)
            let word: Vec<usize> = idx.iter().rev().copied().collect();
            out.add_term(&word, v * &inv_fact);
        }
    }
    Ok(out)
}

/// Classical independence: κ_n(x+y,…,x+y) = κ_n(x,…,x) + κ_n(y,…,y)
/// exactly for 1 ≤ n ≤ n_max.
pub fn independence_check(x: &Element, y: &Element, kappa: &ScalarFamily) -> bool {
    let sum = x.add(y);
    for n in 1..=kappa.n_max() {
        let args_sum: Vec<&Element> = vec![&sum; n];
        let args_x: Vec<&Element> = vec![x; n];
        let args_y: Vec<&Element> = vec![y; n];
        let lhs = kappa.eval_elements(&args_sum);
        let rhs = kappa.eval_elements(&args_x) + kappa.eval_elements(&args_y);
        if lhs != rhs {
            return false;
        }
    }
    true
}

/// The exact central-limit scaling: for X = (x_1 + … + x_N)/√N over
/// iid independent copies, κ_n(X,…,X) = κ_n(x,…,x)·N^{1−n/2}.
///
/// N must be a perfect square so that every power stays rational. The
/// value is computed symbolically through additivity and multilinearity
/// (N copies, each scaled by 1/√N), not by substituting the closed form.
pub fn clt_scaling(kappa_x: &[Rat], n: usize, big_n: u64) -> Result<Rat> {
    if n == 0 || n > kappa_x.len() {
        return Err(Error::argument("order out of range"));
    }
    if !kappa_x[0].is_zero() {
        return Err(Error::argument("clt scaling needs κ_1(x) = 0"));
    }
    let Some(root) = perfect_sqrt(big_n) else {
        return Err(Error::argument(format!("N = {big_n} is not a perfect square")));
    };
    // κ_n(X,…,X) = Σ_{i=1}^{N} κ_n(x_i/√N,…,x_i/√N)   (joint independence)
    //            = N · (1/√N)^n · κ_n(x,…,x)          (multilinearity)
    let inv_root = Rat::new(1.into(), (root as i64).into());
    let scale = rat_pow(&inv_root, n as i64) * Rat::from_integer((big_n as i64).into());
    Ok(&kappa_x[n - 1] * scale)
}

/// The predicted scaling factor N^{1−n/2} (n may be odd; N must be a
/// perfect square).
pub fn clt_predicted_factor(n: usize, big_n: u64) -> Result<Rat> {
    let Some(root) = perfect_sqrt(big_n) else {
        return Err(Error::argument(format!("N = {big_n} is not a perfect square")));
    };
    Ok(rat_pow(&Rat::from_integer((root as i64).into()), 2 - n as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corralg::from_binary_product;
    use crate::kernel::rational::rat;

    /// The classical one-variable Gaussian data, entered as a bare moment
    /// family on a 2-dim space span{1, s}: μ_n(s,…,s) = (n−1)!! σ^n.
    fn gaussian_moments(n_max: usize, sigma2: Rat) -> ScalarFamily {
        let basis = GradedBasis::pointed(vec!["1".into(), "s".into()], vec![0, 0]).unwrap();
        let mut fam = ScalarFamily::zero(basis, n_max);
        for n in 1..=n_max {
            for idx in canonical_indices(&fam.space.clone(), n) {
                // value = E[s^k] where k = #{s slots}: odd → 0, even → (k−1)!!·σ^k
                let k = idx.iter().filter(|&&i| i == 1).count();
                let v = if k % 2 == 1 {
                    Rat::zero()
                } else {
                    let mut dfac = Rat::one();
                    let mut j = k as i64 - 1;
                    while j >= 1 {
                        dfac *= Rat::from_integer(j.into());
                        j -= 2;
                    }
                    dfac * rat_pow(&sigma2, (k / 2) as i64)
                };
                fam.set(&idx, v).unwrap();
            }
        }
        fam
    }

    #[test]
    fn kappa2_is_covariance() {
        let mu = gaussian_moments(4, rat(1, 1));
        let kappa = cumulants_from_moments(&mu).unwrap();
        // κ_2(x_1,x_2) = μ_2(x_1,x_2) − μ_1(x_1)μ_1(x_2)
        let lhs = kappa.eval(&[1, 1]);
        let rhs = mu.eval(&[1, 1]) - mu.eval(&[1]) * mu.eval(&[1]);
        assert_eq!(lhs, rhs);
        assert_eq!(lhs, rat(1, 1));
    }

    #[test]
    fn gaussian_cumulants_vanish_above_two() {
        // μ = (0,1,0,3,0,15) on s → κ = (0,1,0,0,0,0)
        let mu = gaussian_moments(6, rat(1, 1));
        assert_eq!(mu.eval(&[1; 6]), rat(15, 1));
        let kappa = cumulants_from_moments(&mu).unwrap();
        assert_eq!(kappa.eval(&[1]), rat(0, 1));
        assert_eq!(kappa.eval(&[1, 1]), rat(1, 1));
        for n in 3..=6 {
            assert_eq!(kappa.eval(&vec![1; n]), rat(0, 1), "κ_{n}");
        }
        // unit constraints: κ_1(1)=1, κ_n(…,1)=0 for n ≥ 2
        assert_eq!(kappa.eval(&[0]), rat(1, 1));
        for n in 2..=6 {
            let mut idx = vec![1; n - 1];
            idx.push(0);
            assert_eq!(kappa.eval(&idx), rat(0, 1));
        }
    }

    #[test]
    fn semicircle_kappa4() {
        // μ = (0,1,0,2) → κ_4 = −1, by the partition sum over P(4)
        let basis = GradedBasis::pointed(vec!["1".into(), "s".into()], vec![0, 0]).unwrap();
        let mut mu = ScalarFamily::zero(basis, 4);
        let catalan = [rat(0, 1), rat(1, 1), rat(0, 1), rat(2, 1)];
        for n in 1..=4usize {
            for idx in canonical_indices(&mu.space.clone(), n) {
                let k = idx.iter().filter(|&&i| i == 1).count();
                let v = if k == 0 { rat(1, 1) } else { catalan[k - 1].clone() };
                mu.set(&idx, v).unwrap();
            }
        }
        let kappa = cumulants_from_moments(&mu).unwrap();
        assert_eq!(kappa.eval(&[1, 1, 1, 1]), rat(-1, 1));
        // brute-force oracle: recompose μ_4 from κ over all 15 partitions
        let mu_back = moments_from_cumulants(&kappa).unwrap();
        assert_eq!(mu_back.eval(&[1, 1, 1, 1]), rat(2, 1));
    }

    #[test]
    fn roundtrip_on_random_graded_families() {
        use crate::testgen;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let mu = testgen::random_scalar_family(&mut rng, 4, 5);
            let kappa = cumulants_from_moments(&mu).unwrap();
            let back = moments_from_cumulants(&kappa).unwrap();
            assert_eq!(mu, back);
        }
    }

    #[test]
    fn unit_scalar_series_is_exponential() {
        // single variable with μ_n(1,…,1) = 1 → Z = e^t truncated
        let k = CorrelationAlgebra::ground_field(6);
        let km = MultiMap::zero(1, 1, k.basis().clone(), k.basis().clone());
        let p = ProbAlgebra::new(k, km).unwrap();
        let c = Expectation::new(&p, vec![rat(1, 1)]).unwrap();
        let mu = moments(&p, &c).unwrap();
        let z = generating_series(&mu, 6, true).unwrap();
        for n in 0..=6usize {
            assert_eq!(z.coeff(&vec![0; n]), factorial(n).recip());
        }
    }

    #[test]
    fn z_equals_exp_f() {
        let mu = gaussian_moments(8, rat(1, 1));
        let kappa = cumulants_from_moments(&mu).unwrap();
        let z = generating_series(&mu, 8, true).unwrap();
        let f = generating_series(&kappa, 8, false).unwrap();
        assert_eq!(f.exp().unwrap(), z);
        // Gaussian: Z = e^{t²/2} → coefficient of t^{2k} is 1/(2^k k!)
        let w = vec![1usize; 8];
        assert_eq!(z.coeff(&w), rat(1, 384)); // 1/(2⁴·4!)
    }

    #[test]
    fn independence_examples() {
        // product-measure toy space: 𝕜[x]/x² ⊗ 𝕜[y]/y² with two
        // independent coordinates
        let basis = GradedBasis::pointed(
            vec!["1".into(), "x".into(), "y".into(), "xy".into()],
            vec![0, 0, 0, 0],
        )
        .unwrap();
        let mut m2 = MultiMap::zero(2, 0, basis.clone(), basis.clone());
        for i in 0..4 {
            m2.add_entry(&[0, i], Element::basis(i)).unwrap();
        }
        m2.add_entry(&[1, 2], Element::basis(3)).unwrap();
        let alg = from_binary_product(basis.clone(), &m2, 6).unwrap();
        let p = ProbAlgebra::new(
            alg,
            MultiMap::zero(1, 1, basis.clone(), basis.clone()),
        )
        .unwrap();
        // E[x]=0, E[y]=0, E[xy]=E[x]E[y]=0 : independent coordinates
        let c = Expectation::new(&p, vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]).unwrap();
        let mu = moments(&p, &c).unwrap();
        let kappa = cumulants_from_moments(&mu).unwrap();
        let x = Element::basis(1);
        let y = Element::basis(2);
        assert!(independence_check(&x, &y, &kappa));
        // x independent of the zero element
        assert!(independence_check(&x, &Element::zero(), &kappa));
    }

    #[test]
    fn self_dependence_detected() {
        // x vs x with κ_2(x,x) ≠ 0: κ_2(2x) = 4κ_2(x) ≠ 2κ_2(x)
        let mu = gaussian_moments(4, rat(1, 1));
        let kappa = cumulants_from_moments(&mu).unwrap();
        let x = Element::basis(1);
        assert!(!independence_check(&x, &x, &kappa));
    }

    #[test]
    fn clt_examples() {
        // κ_2 is N-independent
        let kappa = vec![rat(0, 1), rat(7, 3), rat(6, 1), rat(1, 1)];
        assert_eq!(clt_scaling(&kappa, 2, 4).unwrap(), rat(7, 3));
        assert_eq!(clt_scaling(&kappa, 2, 16).unwrap(), rat(7, 3));
        // n=4, N=4, κ_4 = 1 → 1/4
        assert_eq!(clt_scaling(&kappa, 4, 4).unwrap(), rat(1, 4));
        // n=3, N=9, κ_3 = 6 → 6·9^{−1/2} = 2
        assert_eq!(clt_scaling(&kappa, 3, 9).unwrap(), rat(2, 1));
        // scaling law from the prediction factor agrees
        for n in 1..=4usize {
            for big_n in [4u64, 9, 16] {
                let lhs = clt_scaling(&kappa, n, big_n).unwrap();
                let rhs = &kappa[n - 1] * clt_predicted_factor(n, big_n).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        // non-square N rejected
        assert!(clt_scaling(&kappa, 3, 8).is_err());
    }
}

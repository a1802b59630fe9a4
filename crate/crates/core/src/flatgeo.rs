//! Finite-dimensional formal geometry of correlation algebras: the
//! connection tensor A_{αβ}^γ assembled from the derived products m,
//! flat coordinates T^γ as exponential generating series of M, the
//! torsion/flatness/unit identities, the property-Q strengthening, and
//! the moment-generating-function PDE system.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::corralg::{all_tuples, check_property_q, CorrelationAlgebra, Defect, ValidationReport};
use crate::cumulants::Expectation;
use crate::kernel::rational::{factorial, Rat};
use crate::kernel::series::SuperSeries;
use crate::{Error, Result};

/// The connection one-form: a series A_{αβ}^γ per index triple.
#[derive(Clone, Debug)]
pub struct ConnectionTensor {
    pub dim: usize,
    pub order: usize,
    /// keyed (α, β, γ)
    pub comps: BTreeMap<(usize, usize, usize), SuperSeries>,
}

/// Flat coordinates: one series T^γ per index.
#[derive(Clone, Debug)]
pub struct FlatCoordinates {
    pub order: usize,
    pub comps: Vec<SuperSeries>,
}

impl ConnectionTensor {
    pub fn component(&self, a: usize, b: usize, g: usize) -> Option<&SuperSeries> {
        self.comps.get(&(a, b, g))
    }
}

/// Assembles A_{αβ}^γ = m_{αβ}^γ + Σ_{n≥1} (1/n!)·Σ t^{ρ_n}⋯t^{ρ_1}·m_{ρ_1⋯ρ_n αβ}^γ
/// from the derived products of the algebra.
pub fn connection_from_algebra(alg: &CorrelationAlgebra, order: usize) -> Result<ConnectionTensor> {
    let basis = alg.basis();
    let dim = basis.dim();
    let m = alg.derived_products()?;
    let mut comps = BTreeMap::new();
    for a in 0..dim {
        for b in 0..dim {
            let mut per_gamma: Vec<SuperSeries> =
                (0..dim).map(|_| SuperSeries::zero(basis.clone(), order)).collect();
            for n in 0..=order {
                if n + 2 > m.n_max() {
                    break;
                }
                let inv_fact = factorial(n).recip();
                for rho in all_tuples(dim, n) {
                    let mut idx = rho.clone();
                    idx.push(a);
                    idx.push(b);
                    let val = m.product(n + 2).apply_basis(&idx);
                    if val.is_zero() {
                        continue;
                    }
                    let word: Vec<usize> = rho.iter().rev().copied().collect();
                    for (g, c) in val.iter() {
                        per_gamma[g].add_term(&word, c * &inv_fact);
                    }
                }
            }
            for (g, series) in per_gamma.into_iter().enumerate() {
                if !series.is_zero() {
                    comps.insert((a, b, g), series);
                }
            }
        }
    }
    Ok(ConnectionTensor { dim, order, comps })
}

/// T^γ = Σ_{n≥1} (1/n!)·Σ t^{ρ_n}⋯t^{ρ_1}·M_{ρ_1⋯ρ_n}^γ, the exponential
/// generating series of the symmetric products. The defining PDE
/// (∂_β∂_γ − Σ_ρ A_{βγ}^ρ·∂_ρ)T^σ = 0 is verified coefficient-exactly
/// through `order − 2`.
pub fn flat_coordinates(alg: &CorrelationAlgebra, order: usize) -> Result<FlatCoordinates> {
    let basis = alg.basis();
    let dim = basis.dim();
    let mut comps: Vec<SuperSeries> =
        (0..dim).map(|_| SuperSeries::zero(basis.clone(), order)).collect();
    for n in 1..=order.min(alg.n_max()) {
        let inv_fact = factorial(n).recip();
        for rho in all_tuples(dim, n) {
            let val = alg.product(n).apply_basis(&rho);
            if val.is_zero() {
                continue;
            }
            let word: Vec<usize> = rho.iter().rev().copied().collect();
            for (g, c) in val.iter() {
                comps[g].add_term(&word, c * &inv_fact);
            }
        }
    }
    let flat = FlatCoordinates { order, comps };
    // internal consistency: the PDE must hold within the exact window
    let conn = connection_from_algebra(alg, order)?;
    let window = order.saturating_sub(2).min(alg.n_max().saturating_sub(2));
    let report = verify_flat_pde(&conn, &flat, alg, window)?;
    if !report.passed() {
        return Err(Error::validation(format!(
            "flat-coordinate PDE residual nonzero: {}",
            report.summary()
        )));
    }
    Ok(flat)
}

fn truncate_series(s: &SuperSeries, order: usize) -> SuperSeries {
    let mut out = SuperSeries::zero(s.basis().clone(), order);
    for (w, c) in s.terms() {
        out.add_term(&w, c.clone());
    }
    out
}

/// Checks (∂_β∂_γ − Σ_ρ A_{βγ}^ρ·∂_ρ)T^σ = 0 through `window`.
pub fn verify_flat_pde(
    conn: &ConnectionTensor,
    flat: &FlatCoordinates,
    alg: &CorrelationAlgebra,
    window: usize,
) -> Result<ValidationReport> {
    let basis = alg.basis();
    let dim = basis.dim();
    let mut report = ValidationReport::default();
    for b in 0..dim {
        for g in 0..dim {
            for s in 0..dim {
                let mut residual =
                    truncate_series(&flat.comps[s].derive(g)?.derive(b)?, window);
                for r in 0..dim {
                    if let Some(a) = conn.component(b, g, r) {
                        let term = truncate_series(a, window)
                            .mul(&truncate_series(&flat.comps[s].derive(r)?, window))?;
                        residual = residual.sub(&term)?;
                    }
                }
                if !residual.is_zero() {
                    report.defects.push(Defect {
                        identity: format!("flat PDE (∂_{b}∂_{g} − ΣA∂)T^{s}"),
                        witness: vec![b, g, s],
                        detail: format!("residual {}", residual.display()),
                    });
                }
            }
        }
    }
    // boundary conditions: T|₀ = 0, ∂_β T^γ|₀ = δ_β^γ
    for g in 0..dim {
        if !flat.comps[g].constant_term().is_zero() {
            report.defects.push(Defect {
                identity: format!("T^{g}|₀ = 0"),
                witness: vec![g],
                detail: "nonzero constant term".into(),
            });
        }
        for b in 0..dim {
            let c = flat.comps[g].coeff(&[b]);
            let expect = if b == g { Rat::one() } else { Rat::zero() };
            if c != expect {
                report.defects.push(Defect {
                    identity: format!("∂_{b}T^{g}|₀ = δ"),
                    witness: vec![b, g],
                    detail: "wrong linear coefficient".into(),
                });
            }
        }
        // unit identity (∂_0 − 1)T^γ = δ_0^γ within the window
        let mut unit_res = truncate_series(&flat.comps[g].derive(0)?, window)
            .sub(&truncate_series(&flat.comps[g], window))?;
        let expect = if g == 0 { Rat::one() } else { Rat::zero() };
        unit_res.add_term(&[], -expect);
        if !unit_res.is_zero() {
            report.defects.push(Defect {
                identity: format!("(∂_0 − 1)T^{g} = δ_0^{g}"),
                witness: vec![g],
                detail: format!("residual {}", unit_res.display()),
            });
        }
    }
    Ok(report)
}

/// Verifies the unit row, graded torsion symmetry, and the flatness
/// identity of the connection through `window`; with property Q the two
/// halves of the flatness identity are additionally checked separately.
pub fn verify_flatness(
    conn: &ConnectionTensor,
    alg: &CorrelationAlgebra,
    window: usize,
) -> Result<ValidationReport> {
    let basis = alg.basis();
    let dim = basis.dim();
    let mut report = ValidationReport::default();
    let zero = SuperSeries::zero(basis.clone(), conn.order);
    let comp = |a: usize, b: usize, g: usize| -> SuperSeries {
        conn.component(a, b, g).cloned().unwrap_or_else(|| zero.clone())
    };
    // unit row: A_{0β}^γ = δ_β^γ
    for b in 0..dim {
        for g in 0..dim {
            let mut s = comp(0, b, g);
            if b == g {
                s.add_term(&[], -Rat::one());
            }
            if !s.is_zero() {
                report.defects.push(Defect {
                    identity: format!("A_{{0,{b}}}^{g} = δ"),
                    witness: vec![0, b, g],
                    detail: format!("residual {}", s.display()),
                });
            }
        }
    }
    // graded symmetry A_{αβ}^γ = (−1)^{|t^α||t^β|}A_{βα}^γ
    for a in 0..dim {
        for b in a..dim {
            for g in 0..dim {
                let sign = if basis.degree(a) % 2 != 0 && basis.degree(b) % 2 != 0 {
                    -Rat::one()
                } else {
                    Rat::one()
                };
                let res = comp(a, b, g).sub(&comp(b, a, g).scale(&sign))?;
                if !res.is_zero() {
                    report.defects.push(Defect {
                        identity: format!("torsion symmetry A_{{{a},{b}}}^{g}"),
                        witness: vec![a, b, g],
                        detail: format!("residual {}", res.display()),
                    });
                }
            }
        }
    }
    // flatness: ∂_α A_{βγ}^σ − (±)∂_β A_{αγ}^σ + Σ_ρ (A_{βγ}^ρ A_{αρ}^σ − (±)A_{αγ}^ρ A_{βρ}^σ) = 0
    let has_q = alg
        .derived_products()
        .map(|m| check_property_q(&m).is_ok())
        .unwrap_or(false);
    for a in 0..dim {
        for b in 0..dim {
            for g in 0..dim {
                for s in 0..dim {
                    let sign = if basis.degree(a) % 2 != 0 && basis.degree(b) % 2 != 0 {
                        -Rat::one()
                    } else {
                        Rat::one()
                    };
                    let d_part = truncate_series(&comp(b, g, s).derive(a)?, window).sub(
                        &truncate_series(&comp(a, g, s).derive(b)?, window).scale(&sign),
                    )?;
                    let mut q_part = SuperSeries::zero(basis.clone(), window);
                    for r in 0..dim {
                        let t1 = truncate_series(&comp(b, g, r), window)
                            .mul(&truncate_series(&comp(a, r, s), window))?;
                        let t2 = truncate_series(&comp(a, g, r), window)
                            .mul(&truncate_series(&comp(b, r, s), window))?;
                        q_part = q_part.add(&t1.sub(&t2.scale(&sign))?)?;
                    }
                    let total = d_part.add(&q_part)?;
                    if !total.is_zero() {
                        report.defects.push(Defect {
                            identity: format!("flatness at ({a},{b},{g},{s})"),
                            witness: vec![a, b, g, s],
                            detail: format!("residual {}", total.display()),
                        });
                    }
                    if has_q {
                        // property Q splits the identity into two halves
                        if !d_part.is_zero() {
                            report.defects.push(Defect {
                                identity: format!("Q-split derivative half at ({a},{b},{g},{s})"),
                                witness: vec![a, b, g, s],
                                detail: format!("residual {}", d_part.display()),
                            });
                        }
                        if !q_part.is_zero() {
                            report.defects.push(Defect {
                                identity: format!("Q-split quadratic half at ({a},{b},{g},{s})"),
                                witness: vec![a, b, g, s],
                                detail: format!("residual {}", q_part.display()),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Z_S = 1 + Σ_γ T^γ·ι(e_γ) together with the PDE residual report:
/// (∂_α∂_β − Σ_γ A_{αβ}^γ·∂_γ)Z = 0 and (∂_0 − 1)Z = 0.
pub fn mgf_assemble(
    alg: &CorrelationAlgebra,
    iota: &Expectation,
    order: usize,
) -> Result<(SuperSeries, ValidationReport)> {
    let basis = alg.basis();
    let dim = basis.dim();
    if !iota.value(basis.unit_index()).is_one() {
        return Err(Error::argument("ι(e_0) must be 1"));
    }
    let flat = flat_coordinates(alg, order)?;
    let conn = connection_from_algebra(alg, order)?;
    let mut z = SuperSeries::one(basis.clone(), order);
    for g in 0..dim {
        z = z.add(&flat.comps[g].scale(iota.value(g)))?;
    }
    let mut report = ValidationReport::default();
    let window = order.saturating_sub(2).min(alg.n_max().saturating_sub(2));
    for a in 0..dim {
        for b in 0..dim {
            let mut residual = truncate_series(&z.derive(b)?.derive(a)?, window);
            for g in 0..dim {
                if let Some(conn_ser) = conn.component(a, b, g) {
                    let term = truncate_series(conn_ser, window)
                        .mul(&truncate_series(&z.derive(g)?, window))?;
                    residual = residual.sub(&term)?;
                }
            }
            if !residual.is_zero() {
                report.defects.push(Defect {
                    identity: format!("MGF PDE (∂_{a}∂_{b} − ΣA∂)Z"),
                    witness: vec![a, b],
                    detail: format!("residual {}", residual.display()),
                });
            }
        }
    }
    let unit_window = order.saturating_sub(1).min(alg.n_max().saturating_sub(1));
    let mut unit_res = truncate_series(&z.derive(0)?, unit_window)
        .sub(&truncate_series(&z, unit_window))?;
    if !unit_res.is_zero() {
        let _ = &mut unit_res;
        report.defects.push(Defect {
            identity: "(∂_0 − 1)Z = 0".into(),
            witness: vec![0],
            detail: format!("residual {}", unit_res.display()),
        });
    }
    Ok((z, report))
}

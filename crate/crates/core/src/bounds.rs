//! Closed-form rank bounds for intersections and finite-index subgroups.
//!
//! Everything is computed in unbounded integers; the nilpotent bound is
//! exponential in the class.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("parameter {name} must be at least {min}, got {value}")]
    TooSmall {
        name: &'static str,
        value: u64,
        min: u64,
    },
}

fn at_least(name: &'static str, value: u64, min: u64) -> Result<BigUint, BoundError> {
    if value < min {
        Err(BoundError::TooSmall { name, value, min })
    } else {
        Ok(BigUint::from(value))
    }
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

/// Howson's original bound `2·n1·n2 − n1 − n2 + 1`.
pub fn howson_bound(n1: u64, n2: u64) -> Result<BigUint, BoundError> {
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok(big(2) * &a * &b + 1u32 - a - b)
}

/// Hanna Neumann's bound `2(n1 − 1)(n2 − 1) + 1`.
pub fn hneumann_bound(n1: u64, n2: u64) -> Result<BigUint, BoundError> {
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok(big(2) * (a - 1u32) * (b - 1u32) + 1u32)
}

/// The (now proved) Hanna Neumann conjecture `(n1 − 1)(n2 − 1) + 1`; this is
/// the bound on ξ_F used by the virtually free corollary.
pub fn hnc_bound(n1: u64, n2: u64) -> Result<BigUint, BoundError> {
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok((a - 1u32) * (b - 1u32) + 1u32)
}

/// Schreier: `rk(H) <= [G:H]·rk(G)`.
pub fn schreier_bound(index: u64, rank: u64) -> Result<BigUint, BoundError> {
    Ok(at_least("index", index, 1)? * at_least("rank", rank, 1)?)
}

/// Improved Schreier bound `[G:H](rk(G) − 1) + 1`; tight for free groups.
pub fn newrankfi_bound(index: u64, rank: u64) -> Result<BigUint, BoundError> {
    let (m, r) = (at_least("index", index, 1)?, at_least("rank", rank, 1)?);
    Ok(m * (r - 1u32) + 1u32)
}

/// Lifts a bound `xi_f` for a finite-index subgroup F to G with `[G:F] = m`:
/// `xi_f(m(n1 − 1) + 1, m(n2 − 1) + 1) + m − 1`.
///
/// The inner ranks are where the intersections of the two subgroups with F
/// can reach (`rk(K_j) <= m(n_j − 1) + 1`), and the `m − 1` accounts for one
/// extra generator per nonidentity coset layer of the intersection.
pub fn boho_bound<F>(xi_f: F, n1: u64, n2: u64, m: u64) -> Result<BigUint, BoundError>
where
    F: Fn(u64, u64) -> Result<BigUint, BoundError>,
{
    at_least("n1", n1, 1)?;
    at_least("n2", n2, 1)?;
    at_least("m", m, 1)?;
    let inner1 = m * (n1 - 1) + 1;
    let inner2 = m * (n2 - 1) + 1;
    Ok(xi_f(inner1, inner2)? + big(m) - 1u32)
}

/// Virtually free bound `m²(n1 − 1)(n2 − 1) + m`.
pub fn showvf_bound(n1: u64, n2: u64, m: u64) -> Result<BigUint, BoundError> {
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    let m = at_least("m", m, 1)?;
    Ok(&m * &m * (a - 1u32) * (b - 1u32) + m)
}

/// Zakharov's bound `6k(n1 − 1)(n2 − 1) + 1`, with `k` either the largest
/// `|P ∩ H1H2|` over finite subgroups P, or the index m of a free subgroup.
pub fn zak_bound(n1: u64, n2: u64, k: u64) -> Result<BigUint, BoundError> {
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok(big(6) * at_least("k", k, 1)? * (a - 1u32) * (b - 1u32) + 1u32)
}

/// Both Zakharov bounds: (with `n = max |P ∩ H1H2|`, with the index `m`).
pub fn zak_bounds(n1: u64, n2: u64, n: u64, m: u64) -> Result<(BigUint, BigUint), BoundError> {
    Ok((zak_bound(n1, n2, n)?, zak_bound(n1, n2, m)?))
}

/// Whether the virtually free bound is strictly below Zakharov's second
/// bound. For noncyclic inputs this holds exactly when `m < 6`.
pub fn showvf_beats_zak(n1: u64, n2: u64, m: u64) -> Result<bool, BoundError> {
    Ok(showvf_bound(n1, n2, m)? < zak_bound(n1, n2, m)?)
}

/// Virtually nilpotent bound with nilpotent subgroup of index `m` and class
/// `class`: `((m(p−1)+1)^{class+1} − m(p−1) − 1) / (m(p−1)) + m − 1`,
/// `p = min(n1, n2) >= 2`.
pub fn shnil_bound(n1: u64, n2: u64, m: u64, class: u64) -> Result<BigUint, BoundError> {
    at_least("n1", n1, 2)?;
    at_least("n2", n2, 2)?;
    let m = at_least("m", m, 1)?;
    let class = at_least("class", class, 1)?;
    let p = big(n1.min(n2));
    let step = &m * (p - 1u32);
    let k = &step + 1u32;
    let exp = u32::try_from(class + 1u32).expect("nilpotency class fits in u32");
    let numerator = k.pow(exp) - &step - 1u32;
    debug_assert!((&numerator % &step).is_zero());
    Ok(numerator / step + m - 1u32)
}

/// Virtually polycyclic bound `prk + m − 1` (constant in n1, n2).
pub fn shpol_bound(prk: u64, m: u64) -> Result<BigUint, BoundError> {
    Ok(at_least("prk", prk, 1)? + at_least("m", m, 1)? - 1u32)
}

/// Free products of strongly polycyclic groups with Hirsch lengths at most
/// `hirsch`: `M(n1 − 1)(n2 − 1) + M`.
pub fn shspg_bound(hirsch: u64, n1: u64, n2: u64) -> Result<BigUint, BoundError> {
    let h = at_least("M", hirsch, 1)?;
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok(&h * (a - 1u32) * (b - 1u32) + h)
}

/// Graphs of virtually polycyclic groups with finite edge groups: the lift
/// of [`shspg_bound`] through a normal subgroup of index `m`,
/// `M'm²(n1 − 1)(n2 − 1) + M' + m − 1`.
pub fn shgg_bound(hirsch: u64, m: u64, n1: u64, n2: u64) -> Result<BigUint, BoundError> {
    let h = at_least("M'", hirsch, 1)?;
    let mm = at_least("m", m, 1)?;
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok(&h * &mm * &mm * (a - 1u32) * (b - 1u32) + h + mm - 1u32)
}

/// The constant `M = M'm²` witnessing the existential form of [`shgg_bound`].
pub fn shgg_constant(hirsch: u64, m: u64) -> Result<BigUint, BoundError> {
    let mm = at_least("m", m, 1)?;
    Ok(at_least("M'", hirsch, 1)? * &mm * &mm)
}

/// `M(n1 − 1)(n2 − 1) + M` with `M = M'm²`; never below [`shgg_bound`].
pub fn shgg_final_bound(hirsch: u64, m: u64, n1: u64, n2: u64) -> Result<BigUint, BoundError> {
    let big_m = shgg_constant(hirsch, m)?;
    let (a, b) = (at_least("n1", n1, 1)?, at_least("n2", n2, 1)?);
    Ok(&big_m * (a - 1u32) * (b - 1u32) + big_m)
}

/// One row of the `bounds` table. Values are decimal strings so that large
/// nilpotent bounds survive JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    pub n1: u64,
    pub n2: u64,
    pub m: u64,
    pub howson: String,
    pub hneumann: String,
    pub hnc: String,
    pub showvf: String,
    pub zak_second: String,
    pub showvf_beats_zak: bool,
    pub shnil_class2: Option<String>,
}

pub fn bound_row(n1: u64, n2: u64, m: u64) -> Result<BoundRow, BoundError> {
    Ok(BoundRow {
        n1,
        n2,
        m,
        howson: howson_bound(n1, n2)?.to_string(),
        hneumann: hneumann_bound(n1, n2)?.to_string(),
        hnc: hnc_bound(n1, n2)?.to_string(),
        showvf: showvf_bound(n1, n2, m)?.to_string(),
        zak_second: zak_bound(n1, n2, m)?.to_string(),
        showvf_beats_zak: showvf_beats_zak(n1, n2, m)?,
        shnil_class2: shnil_bound(n1, n2, m, 2).ok().map(|b| b.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn classical_bounds() {
        assert_eq!(howson_bound(2, 2).unwrap(), n(5));
        assert_eq!(howson_bound(1, 1).unwrap(), n(1));
        assert_eq!(howson_bound(2, 3).unwrap(), n(8));
        assert_eq!(hneumann_bound(2, 2).unwrap(), n(3));
        assert_eq!(hneumann_bound(1, 7).unwrap(), n(1));
        assert_eq!(hneumann_bound(3, 3).unwrap(), n(9));
        assert_eq!(hnc_bound(2, 2).unwrap(), n(2));
        assert_eq!(hnc_bound(1, 9).unwrap(), n(1));
        assert_eq!(hnc_bound(4, 5).unwrap(), n(13));
    }

    #[test]
    fn finite_index_bounds() {
        assert_eq!(newrankfi_bound(2, 2).unwrap(), n(3));
        assert_eq!(newrankfi_bound(7, 1).unwrap(), n(1));
        assert_eq!(schreier_bound(2, 2).unwrap(), n(4));
    }

    #[test]
    fn lifted_bounds() {
        assert_eq!(boho_bound(hnc_bound, 2, 2, 2).unwrap(), n(6));
        assert_eq!(boho_bound(hnc_bound, 3, 4, 1).unwrap(), hnc_bound(3, 4).unwrap());
        assert_eq!(boho_bound(hnc_bound, 2, 3, 2).unwrap(), n(10));
        assert_eq!(showvf_bound(2, 3, 2).unwrap(), n(10));
        assert_eq!(showvf_bound(2, 2, 2).unwrap(), n(6));
        assert_eq!(showvf_bound(1, 5, 3).unwrap(), n(3));
        assert_eq!(showvf_bound(3, 3, 2).unwrap(), n(18));
    }

    #[test]
    fn zakharov_bounds() {
        assert_eq!(zak_bound(2, 2, 2).unwrap(), n(13));
        assert_eq!(zak_bound(1, 4, 3).unwrap(), n(1));
        assert_eq!(zak_bounds(2, 2, 2, 2).unwrap(), (n(13), n(13)));
        assert!(showvf_beats_zak(2, 2, 5).unwrap());
        assert!(!showvf_beats_zak(2, 2, 6).unwrap());
    }

    #[test]
    fn nilpotent_and_polycyclic_bounds() {
        assert_eq!(shnil_bound(2, 2, 1, 1).unwrap(), n(2));
        assert_eq!(shnil_bound(2, 2, 1, 2).unwrap(), n(6));
        assert_eq!(shnil_bound(2, 2, 2, 2).unwrap(), n(13));
        assert!(matches!(shnil_bound(1, 3, 1, 1), Err(BoundError::TooSmall { name: "n1", .. })));
        assert_eq!(shpol_bound(3, 2).unwrap(), n(4));
        assert_eq!(shpol_bound(6, 1).unwrap(), n(6));
        assert_eq!(shpol_bound(5, 4).unwrap(), n(8));
    }

    #[test]
    fn nilpotent_bound_does_not_overflow() {
        let huge = shnil_bound(50, 60, 7, 40).unwrap();
        assert!(huge.bits() > 64 * 4);
    }

    #[test]
    fn free_product_bounds() {
        assert_eq!(shspg_bound(1, 2, 2).unwrap(), n(2));
        assert_eq!(shspg_bound(4, 1, 9).unwrap(), n(4));
        assert_eq!(shgg_bound(1, 2, 2, 2).unwrap(), n(6));
        let composed = boho_bound(|a, b| shspg_bound(1, a, b), 2, 2, 2).unwrap();
        assert_eq!(composed, n(6));
        assert_eq!(shgg_constant(1, 2).unwrap(), n(4));
        assert_eq!(shgg_final_bound(1, 2, 2, 2).unwrap(), n(8));
    }

    #[test]
    fn rejects_zero_parameters() {
        assert!(howson_bound(0, 2).is_err());
        assert!(showvf_bound(2, 2, 0).is_err());
        assert!(shspg_bound(0, 2, 2).is_err());
    }

    #[test]
    fn ordering_chain_on_grid() {
        for a in 2..=10 {
            for b in 2..=10 {
                let (c, h, w) = (hnc_bound(a, b).unwrap(), hneumann_bound(a, b).unwrap(), howson_bound(a, b).unwrap());
                assert!(c < h && h < w, "({a},{b})");
            }
        }
    }

    #[test]
    fn shgg_lift_agrees_and_final_form_dominates() {
        for h in 1..=3 {
            for m in 1..=4 {
                for a in 1..=5 {
                    for b in 1..=5 {
                        let lifted = boho_bound(|x, y| shspg_bound(h, x, y), a, b, m).unwrap();
                        assert_eq!(lifted, shgg_bound(h, m, a, b).unwrap());
                        assert!(lifted <= shgg_final_bound(h, m, a, b).unwrap());
                    }
                }
            }
        }
    }
}

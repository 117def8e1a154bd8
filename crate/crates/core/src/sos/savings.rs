use super::basis::binomial;

/// How much cheaper it is to require only the top homogeneous component of a
/// degree-`2d` polynomial in `n` variables to be a sum of squares, instead
/// of the polynomial itself: returns `(gram_vars_saved, equalities_saved)`.
///
/// Only Gram entries are counted on the variable side; the full condition
/// uses the basis of all monomials of degree at most `d`, the homogeneous
/// one only those of degree exactly `d`. Both quantities are computed from
/// the basis counts and cross-checked against the closed forms
/// `d (n+d-1)! ((2n+d)(n+d-1)! + d! n!) / (2 (d! n!)^2)` and
/// `2d (n+2d-1)! / ((2d)! n!)`, which must agree.
pub fn count_savings(n_vars: u32, half_degree: u32) -> (u64, u64) {
    assert!(n_vars >= 1 && half_degree >= 1);
    let n = n_vars as u64;
    let d = half_degree as u64;

    // direct combinatorial difference
    let full_basis = binomial(n + d, d);
    let hom_basis = binomial(n + d - 1, n - 1);
    let vars_direct = full_basis * (full_basis + 1) / 2 - hom_basis * (hom_basis + 1) / 2;
    let eqs_direct = binomial(n + 2 * d, n) - binomial(n + 2 * d - 1, n - 1);

    // closed forms, evaluated in exact integer arithmetic
    let fact = |k: u64| -> u128 { (1..=k as u128).product::<u128>().max(1) };
    let eqs_num = 2 * d as u128 * fact(n + 2 * d - 1);
    let eqs_den = fact(2 * d) * fact(n);
    assert_eq!(eqs_num % eqs_den, 0, "equality-savings form must divide");
    let eqs_closed = (eqs_num / eqs_den) as u64;

    let dfnf = fact(d) * fact(n);
    let vars_num =
        d as u128 * fact(n + d - 1) * ((2 * n + d) as u128 * fact(n + d - 1) + dfnf);
    let vars_den = 2 * dfnf * dfnf;
    assert_eq!(vars_num % vars_den, 0, "variable-savings form must divide");
    let vars_closed = (vars_num / vars_den) as u64;

    assert_eq!(vars_direct, vars_closed, "variable savings disagree");
    assert_eq!(eqs_direct, eqs_closed, "equality savings disagree");
    (vars_direct, eqs_direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::basis::monomial_basis;

    #[test]
    fn headline_case() {
        assert_eq!(count_savings(2, 4), (105, 36));
    }

    #[test]
    fn smallest_case_by_hand() {
        // bases {1, x} vs {x}: 3 Gram entries vs 1, 3 equations vs 1
        assert_eq!(count_savings(1, 1), (2, 2));
    }

    #[test]
    fn matches_explicit_enumeration() {
        for n in 1..=4 {
            for d in 1..=5 {
                let (vars, eqs) = count_savings(n, d);
                let full = monomial_basis(n as usize, d, false).len() as u64;
                let hom = monomial_basis(n as usize, d, true).len() as u64;
                assert_eq!(vars, full * (full + 1) / 2 - hom * (hom + 1) / 2);
                let eq_full = monomial_basis(n as usize, 2 * d, false).len() as u64;
                let eq_hom = monomial_basis(n as usize, 2 * d, true).len() as u64;
                assert_eq!(eqs, eq_full - eq_hom);
            }
        }
    }
}

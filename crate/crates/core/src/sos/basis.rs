use crate::poly::Monomial;

/// All monomials in `n_vars` variables of total degree at most `half_degree`
/// (or exactly `half_degree` when `homogeneous`), in graded-lex order.
///
/// Counts are `C(n + d, d)` and `C(n + d - 1, n - 1)` respectively.
pub fn monomial_basis(n_vars: usize, half_degree: u32, homogeneous: bool) -> Vec<Monomial> {
    assert!(n_vars >= 1);
    let mut out = Vec::new();
    let mut exps = vec![0u32; n_vars];
    enumerate(&mut out, &mut exps, 0, half_degree, homogeneous);
    out.sort();
    out
}

fn enumerate(out: &mut Vec<Monomial>, exps: &mut Vec<u32>, var: usize, budget: u32, exact: bool) {
    if var == exps.len() - 1 {
        let lo = if exact { budget } else { 0 };
        for e in lo..=budget {
            exps[var] = e;
            out.push(Monomial::new(exps.clone()));
        }
        exps[var] = 0;
        return;
    }
    for e in 0..=budget {
        exps[var] = e;
        enumerate(out, exps, var + 1, budget - e, exact);
    }
    exps[var] = 0;
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inhomogeneous_basis_2_1() {
        let b = monomial_basis(2, 1, false);
        let names: Vec<String> = b.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, vec!["1", "x1", "x2"]);
    }

    #[test]
    fn homogeneous_basis_2_4() {
        let b = monomial_basis(2, 4, true);
        let names: Vec<String> = b.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, vec!["x1^4", "x1^3*x2", "x1^2*x2^2", "x1*x2^3", "x2^4"]);
    }

    #[test]
    fn counts_match_binomials() {
        for n in 1..=4usize {
            for d in 0..=5u32 {
                let full = monomial_basis(n, d, false).len() as u64;
                let hom = monomial_basis(n, d, true).len() as u64;
                assert_eq!(full, binomial(n as u64 + d as u64, d as u64));
                assert_eq!(hom, binomial(n as u64 + d as u64 - 1, n as u64 - 1));
            }
        }
        assert_eq!(monomial_basis(2, 4, false).len(), 15);
    }
}

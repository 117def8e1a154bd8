//! Bundled example polynomials and vector fields with expected verdicts,
//! used by the command line, the acceptance suite and the regression tests.

use serde::Serialize;

use crate::poly::{parse, parse_in, LinearSystem, Polynomial, SwitchedSystem, VectorField};
use crate::synth::{
    check_sos, find_common_lyapunov, find_lyapunov, SearchMode, SearchOptions, SearchOutcome,
    SosCheck, TimeDomain,
};

/// Where an expected verdict comes from: the published literature, a value
/// derived by an independent oracle in this repository, or elementary
/// algebra.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Provenance {
    Literature,
    Derived,
    Elementary,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Expected {
    Feasible,
    Infeasible,
}

/// One corpus entry: either a single sum-of-squares membership question or
/// a degree sweep of a Lyapunov search with per-degree expectations.
#[derive(Clone, Debug)]
pub enum CorpusCheck {
    Sos {
        poly: Polynomial,
        homogeneous: bool,
        expected: Expected,
    },
    Sweep {
        field: VectorField,
        mode: SearchMode,
        degrees: Vec<(u32, Expected)>,
    },
    Common {
        system: SwitchedSystem,
        time: TimeDomain,
        degrees: Vec<(u32, Expected)>,
    },
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: Provenance,
    pub note: &'static str,
    pub check: CorpusCheck,
}

/// The classical bivariate polynomial that is nonnegative but not a sum of
/// squares.
pub fn motzkin() -> Polynomial {
    parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1").unwrap()
}

/// A positive definite trivariate sextic form that is not a sum of squares:
/// the homogenized Motzkin form plus a small multiple of `(|x|^2)^3`.
pub fn positive_sextic_not_sos() -> Polynomial {
    let m_h = parse_in("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2*x3^2 + x3^6", 3).unwrap();
    let bump = Polynomial::sum_of_squares_power(3, 3).scale(1.0 / 250.0);
    &m_h + &bump
}

/// The planar degree-7 field whose top-homogeneous-mode search first
/// succeeds at candidate degree 8.
pub fn planar_septic_field() -> VectorField {
    VectorField::new(vec![
        parse_in(
            "0.36*x1 + 2*x2 - 0.32*x1^7 - 0.02*x1*x2^6 + 8*x2^7 + 3*x1^2*x2^5",
            2,
        )
        .unwrap(),
        parse_in(
            "-2*x1 - 0.44*x2 - 16*x1^7 - x1*x2^6 - 0.16*x2^7 - 0.06*x1^2*x2^5",
            2,
        )
        .unwrap(),
    ])
    .unwrap()
}

/// The planar field whose derivative along `(x1^2 + x2^2)/2` is the negated
/// shifted Motzkin polynomial: quadratic candidates fail the
/// sum-of-squares conditions, quartic ones succeed.
pub fn motzkin_derivative_field() -> VectorField {
    VectorField::new(vec![
        parse_in(
            "-x1^3*x2^2 + 2*x1^3*x2 - x1^3 + 4*x1^2*x2^2 - 8*x1^2*x2 + 4*x1^2 \
             - x1*x2^4 + 4*x1*x2^3 - 4*x1 + 10*x2^2",
            2,
        )
        .unwrap(),
        parse_in(
            "-9*x1^2*x2 + 10*x1^2 + 2*x1*x2^3 - 8*x1*x2^2 - 4*x1 - x2^3 + 4*x2^2 - 4*x2",
            2,
        )
        .unwrap(),
    ])
    .unwrap()
}

/// Two Hurwitz matrices sharing the common quadratic `x1^2 + x2^2` (both
/// have negative definite symmetric part).
pub fn hurwitz_pair() -> SwitchedSystem {
    let a1 = LinearSystem::new(vec![vec![-1.0, 2.0], vec![-2.0, -1.0]]).unwrap();
    let a2 = LinearSystem::new(vec![vec![-2.0, 1.0], vec![-1.0, -1.0]]).unwrap();
    SwitchedSystem::from_matrices(vec![a1, a2]).unwrap()
}

/// `{A, -A}` with `A` unstable: no common certificate can exist at any
/// degree because one mode is always unstable.
pub fn unstable_mirror_pair() -> SwitchedSystem {
    let a = LinearSystem::new(vec![vec![1.0, 0.0], vec![0.0, -2.0]]).unwrap();
    let neg = LinearSystem::new(vec![vec![-1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    SwitchedSystem::from_matrices(vec![a, neg]).unwrap()
}

/// All bundled entries in a fixed order.
pub fn corpus() -> Vec<CorpusEntry> {
    let xx = parse("x1^2 + x2^2").unwrap();
    let motzkin_times_circle = &xx * &motzkin();
    let shifted_motzkin = motzkin().shift_all();
    vec![
        CorpusEntry {
            name: "motzkin",
            source: Provenance::Literature,
            note: "nonnegative but not a sum of squares",
            check: CorpusCheck::Sos {
                poly: motzkin(),
                homogeneous: false,
                expected: Expected::Infeasible,
            },
        },
        CorpusEntry {
            name: "motzkin-shifted",
            source: Provenance::Derived,
            note: "sums of squares are closed under affine substitutions, \
                   so the shifted polynomial is not sos either",
            check: CorpusCheck::Sos {
                poly: shifted_motzkin,
                homogeneous: false,
                expected: Expected::Infeasible,
            },
        },
        CorpusEntry {
            name: "motzkin-homogenized",
            source: Provenance::Literature,
            note: "the trivariate Motzkin form is nonnegative but not sos",
            check: CorpusCheck::Sos {
                poly: motzkin().homogenize(6).unwrap(),
                homogeneous: true,
                expected: Expected::Infeasible,
            },
        },
        CorpusEntry {
            name: "motzkin-times-circle",
            source: Provenance::Derived,
            note: "multiplying by x1^2 + x2^2 makes the Motzkin polynomial \
                   a sum of squares",
            check: CorpusCheck::Sos {
                poly: motzkin_times_circle,
                homogeneous: false,
                expected: Expected::Feasible,
            },
        },
        CorpusEntry {
            name: "sextic-psd-not-sos",
            source: Provenance::Literature,
            note: "positive definite trivariate form outside the sos cone",
            check: CorpusCheck::Sos {
                poly: positive_sextic_not_sos(),
                homogeneous: true,
                expected: Expected::Infeasible,
            },
        },
        CorpusEntry {
            name: "sextic-gradient-derivative",
            source: Provenance::Derived,
            note: "|grad v|^2 is a sum of squares by construction",
            check: CorpusCheck::Sos {
                poly: {
                    let v = positive_sextic_not_sos();
                    let g = v.gradient();
                    g.iter().fold(Polynomial::zero(3), |acc, gi| &acc + &(gi * gi))
                },
                homogeneous: true,
                expected: Expected::Feasible,
            },
        },
        CorpusEntry {
            name: "planar-septic-thc",
            source: Provenance::Literature,
            note: "top-homogeneous-mode search: infeasible through degree 6, \
                   feasible at degree 8",
            check: CorpusCheck::Sweep {
                field: planar_septic_field(),
                mode: SearchMode::ThcSos,
                degrees: vec![
                    (2, Expected::Infeasible),
                    (4, Expected::Infeasible),
                    (6, Expected::Infeasible),
                    (8, Expected::Feasible),
                ],
            },
        },
        CorpusEntry {
            name: "motzkin-derivative-vsos",
            source: Provenance::Literature,
            note: "no quadratic candidate satisfies the sos conditions; a \
                   quartic one does",
            check: CorpusCheck::Sweep {
                field: motzkin_derivative_field(),
                mode: SearchMode::VSos,
                degrees: vec![(2, Expected::Infeasible), (4, Expected::Feasible)],
            },
        },
        CorpusEntry {
            name: "hurwitz-pair-common-quadratic",
            source: Provenance::Derived,
            note: "both symmetric parts are negative definite, so the unit \
                   quadratic is a common certificate",
            check: CorpusCheck::Common {
                system: hurwitz_pair(),
                time: TimeDomain::Continuous,
                degrees: vec![(2, Expected::Feasible)],
            },
        },
        CorpusEntry {
            name: "unstable-mirror-pair",
            source: Provenance::Derived,
            note: "one mode is unstable, so no common certificate exists",
            check: CorpusCheck::Common {
                system: unstable_mirror_pair(),
                time: TimeDomain::Continuous,
                degrees: vec![(2, Expected::Infeasible), (4, Expected::Infeasible)],
            },
        },
    ]
}

/// Result of running one check of one entry.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub label: String,
    pub expected: Expected,
    pub actual: String,
    pub passed: bool,
    /// Set when the solver could not decide; expectation mismatches and
    /// indeterminate outcomes are reported distinctly.
    pub indeterminate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryResult {
    pub name: String,
    pub checks: Vec<CheckResult>,
}

impl EntryResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn any_indeterminate(&self) -> bool {
        self.checks.iter().any(|c| c.indeterminate)
    }
}

/// Run one corpus entry with the given options.
pub fn run_entry(entry: &CorpusEntry, options: &SearchOptions) -> EntryResult {
    let mut checks = Vec::new();
    match &entry.check {
        CorpusCheck::Sos {
            poly,
            homogeneous,
            expected,
        } => {
            let (actual, passed, indeterminate) =
                match check_sos(poly, *homogeneous, &options.solver) {
                    Ok(SosCheck::Feasible(_)) => (
                        "feasible".to_string(),
                        *expected == Expected::Feasible,
                        false,
                    ),
                    Ok(SosCheck::Infeasible { margin }) => (
                        format!("infeasible (margin {margin:.3e})"),
                        *expected == Expected::Infeasible,
                        false,
                    ),
                    Ok(SosCheck::Indeterminate { note }) => {
                        (format!("indeterminate: {note}"), false, true)
                    }
                    Err(e) => (format!("error: {e}"), false, false),
                };
            checks.push(CheckResult {
                label: "sos".into(),
                expected: *expected,
                actual,
                passed,
                indeterminate,
            });
        }
        CorpusCheck::Sweep {
            field,
            mode,
            degrees,
        } => {
            for &(d, expected) in degrees {
                let outcome = find_lyapunov(field, d, *mode, options);
                checks.push(outcome_check(d, expected, outcome));
            }
        }
        CorpusCheck::Common {
            system,
            time,
            degrees,
        } => {
            for &(d, expected) in degrees {
                let outcome = find_common_lyapunov(system, d, *time, options);
                checks.push(outcome_check(d, expected, outcome));
            }
        }
    }
    EntryResult {
        name: entry.name.to_string(),
        checks,
    }
}

fn outcome_check(
    degree: u32,
    expected: Expected,
    outcome: Result<SearchOutcome, crate::synth::SynthError>,
) -> CheckResult {
    let (actual, passed, indeterminate) = match outcome {
        Ok(SearchOutcome::Found(_)) => (
            "feasible".to_string(),
            expected == Expected::Feasible,
            false,
        ),
        Ok(SearchOutcome::Infeasible { margin }) => (
            format!("infeasible (margin {margin:.3e})"),
            expected == Expected::Infeasible,
            false,
        ),
        Ok(SearchOutcome::Indeterminate { note }) => {
            (format!("indeterminate: {note}"), false, true)
        }
        Err(e) => (format!("error: {e}"), false, false),
    };
    CheckResult {
        label: format!("degree-{degree}"),
        expected,
        actual,
        passed,
        indeterminate,
    }
}

/// Run entries matching the filter across `jobs` worker threads; results
/// come back in corpus order regardless of completion order.
pub fn run_corpus(filter: Option<&str>, jobs: usize, options: &SearchOptions) -> Vec<EntryResult> {
    let entries: Vec<CorpusEntry> = corpus()
        .into_iter()
        .filter(|e| filter.map_or(true, |f| e.name.contains(f)))
        .collect();
    let jobs = jobs.max(1).min(entries.len().max(1));
    if jobs == 1 {
        return entries.iter().map(|e| run_entry(e, options)).collect();
    }
    let mut results: Vec<Option<EntryResult>> = vec![None; entries.len()];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results_mx = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= entries.len() {
                    break;
                }
                let r = run_entry(&entries[i], options);
                results_mx.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_iter().map(|r| r.expect("all entries ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::lie_derivative;

    #[test]
    fn derivative_of_half_circle_is_negated_shifted_motzkin() {
        // v = (x1^2 + x2^2)/2 along the bundled field gives -M(x1-1, x2-1)
        let v = parse("0.5*x1^2 + 0.5*x2^2").unwrap();
        let vdot = lie_derivative(&v, &motzkin_derivative_field()).unwrap();
        let expected = -&motzkin().shift_all();
        assert!(
            vdot.coeff_distance(&expected) < 1e-12,
            "vdot = {vdot}, expected {expected}"
        );
        // zero at the origin and at exactly (0,2), (2,0), (2,2)
        for p in [[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [2.0, 2.0]] {
            assert!(vdot.eval(&p).abs() < 1e-12);
        }
        // nonpositive on a deterministic sample
        for x in crate::certify::sample::box_points(2, 500, 3.0) {
            assert!(vdot.eval(&x) <= 1e-12);
        }
    }

    #[test]
    fn shift_all_matches_manual_substitution() {
        let p = parse("x1^2*x2 + 2*x2").unwrap();
        let shifted = p.shift_all();
        for (a, b) in [(0.3, -1.2), (2.0, 2.0), (-0.5, 0.25)] {
            let direct = p.eval(&[a - 1.0, b - 1.0]);
            assert!((shifted.eval(&[a, b]) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn septic_field_fixes_origin_and_is_inhomogeneous() {
        let f = planar_septic_field();
        assert!(f.fixes_origin());
        assert!(!f.is_homogeneous());
        assert_eq!(f.degree(), 7);
    }
}

use super::problem::{Equality, FreeTerm, GramTerm, Objective, SdpProblem};
use super::SdpaError;

/// Write a problem in the SDPA sparse format (`.dat-s`).
///
/// The file encodes `find Y >= 0 with <F_i, Y> = c_i` where `F_i` are the
/// equality matrices and `c` is the right-hand side; `F_0` carries the
/// optional objective. Free scalars are carried by an extra diagonal block
/// of size `2 * n_free` (negative block size, per the format) holding the
/// split `u = u+ - u-`; the leading comment lines record the original
/// layout so parsing restores the problem field by field.
pub fn write_sdpa(problem: &SdpProblem) -> String {
    let mut out = String::new();
    out.push_str("*soslyap sdpa sparse export\n");
    out.push_str(&format!("*free_vars {}\n", problem.n_free));
    out.push_str(&format!(
        "*labels {}\n",
        problem
            .block_labels
            .iter()
            .map(|l| l.replace(' ', "_"))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    out.push_str(&format!("*objective {}\n", u8::from(problem.objective.is_some())));

    let m = problem.n_equalities();
    let mut block_struct: Vec<i64> = problem.blocks.iter().map(|&d| d as i64).collect();
    if problem.n_free > 0 {
        block_struct.push(-(2 * problem.n_free as i64));
    }
    out.push_str(&format!("{m}\n"));
    out.push_str(&format!("{}\n", block_struct.len()));
    if !block_struct.is_empty() {
        out.push_str(&format!(
            "{}\n",
            block_struct
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    if m > 0 {
        out.push_str(&format!(
            "{}\n",
            problem
                .rhs
                .iter()
                .map(|v| format!("{v:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }

    let free_block = problem.blocks.len() + 1; // 1-based
    let push_matrix = |out: &mut String, matno: usize, gram: &[GramTerm], free: &[FreeTerm]| {
        for g in gram {
            out.push_str(&format!(
                "{matno} {} {} {} {:e}\n",
                g.block + 1,
                g.row + 1,
                g.col + 1,
                g.coeff
            ));
        }
        for t in free {
            let plus = 2 * t.var + 1;
            out.push_str(&format!("{matno} {free_block} {plus} {plus} {:e}\n", t.coeff));
            out.push_str(&format!(
                "{matno} {free_block} {} {} {:e}\n",
                plus + 1,
                plus + 1,
                -t.coeff
            ));
        }
    };

    if let Some(obj) = &problem.objective {
        push_matrix(&mut out, 0, &obj.gram, &obj.free);
    }
    for (i, eq) in problem.equalities.iter().enumerate() {
        push_matrix(&mut out, i + 1, &eq.gram, &eq.free);
    }
    out
}

/// Parse text produced by [`write_sdpa`] back into a problem. Reports the
/// first offending line on failure.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem, SdpaError> {
    let mut n_free = 0usize;
    let mut labels: Vec<String> = Vec::new();
    let mut has_objective = false;

    let err = |line: usize, message: &str| SdpaError {
        line,
        message: message.to_string(),
    };

    let mut body = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('*') {
            let mut parts = rest.split_whitespace();
            match parts.next() {
                Some("free_vars") => {
                    n_free = parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err(idx + 1, "bad free_vars comment"))?;
                }
                Some("labels") => labels = parts.map(str::to_string).collect(),
                Some("objective") => {
                    has_objective = parts.next() == Some("1");
                }
                _ => {}
            }
            continue;
        }
        if line.starts_with('"') {
            continue;
        }
        body.push((idx + 1, line));
    }

    let mut it = body.into_iter();
    let (l1, m_line) = it.next().ok_or_else(|| err(0, "missing constraint count"))?;
    let m: usize = m_line
        .split_whitespace()
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(l1, "bad constraint count"))?;
    let (l2, nblocks_line) = it.next().ok_or_else(|| err(l1, "missing block count"))?;
    let nblocks: usize = nblocks_line
        .split_whitespace()
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(l2, "bad block count"))?;
    let (l3, sizes): (usize, Vec<i64>) = if nblocks > 0 {
        let (l3, struct_line) = it.next().ok_or_else(|| err(l2, "missing block structure"))?;
        let sizes: Vec<i64> = struct_line
            .split_whitespace()
            .map(|v| v.trim_matches(|c| c == '{' || c == '}' || c == ',').parse())
            .collect::<Result<_, _>>()
            .map_err(|_| err(l3, "bad block structure"))?;
        if sizes.len() != nblocks {
            return Err(err(l3, "block structure length disagrees with block count"));
        }
        (l3, sizes)
    } else {
        (l2, Vec::new())
    };
    let psd_blocks = if n_free > 0 { nblocks - 1 } else { nblocks };
    if n_free > 0 {
        let expect = -(2 * n_free as i64);
        if sizes.last() != Some(&expect) {
            return Err(err(l3, "free-variable block has unexpected size"));
        }
    }
    let blocks: Vec<usize> = sizes[..psd_blocks]
        .iter()
        .map(|&d| {
            if d < 0 {
                Err(err(l3, "unexpected diagonal block"))
            } else {
                Ok(d as usize)
            }
        })
        .collect::<Result<_, _>>()?;

    let rhs: Vec<f64> = if m > 0 {
        let (l4, rhs_line) = it.next().ok_or_else(|| err(l3, "missing right-hand side"))?;
        let rhs: Vec<f64> = rhs_line
            .split_whitespace()
            .map(|v| v.trim_matches(|c| c == '{' || c == '}' || c == ',').parse())
            .collect::<Result<_, _>>()
            .map_err(|_| err(l4, "bad right-hand side"))?;
        if rhs.len() != m {
            return Err(err(l4, "right-hand side length disagrees"));
        }
        rhs
    } else {
        Vec::new()
    };

    let mut equalities = vec![Equality::default(); m];
    let mut objective = has_objective.then(Objective::default);
    for (lineno, line) in it {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(lineno, "entry needs 5 fields"));
        }
        let matno: usize = fields[0].parse().map_err(|_| err(lineno, "bad matrix number"))?;
        let blkno: usize = fields[1].parse().map_err(|_| err(lineno, "bad block number"))?;
        let i: usize = fields[2].parse().map_err(|_| err(lineno, "bad row index"))?;
        let j: usize = fields[3].parse().map_err(|_| err(lineno, "bad column index"))?;
        let value: f64 = fields[4].parse().map_err(|_| err(lineno, "bad value"))?;
        if matno > m {
            return Err(err(lineno, "matrix number out of range"));
        }
        if blkno == 0 || blkno > nblocks {
            return Err(err(lineno, "block number out of range"));
        }
        let is_free_block = n_free > 0 && blkno == nblocks;
        let (gram, free): (&mut Vec<GramTerm>, &mut Vec<FreeTerm>) = if matno == 0 {
            let obj = objective
                .as_mut()
                .ok_or_else(|| err(lineno, "objective entry without objective header"))?;
            (&mut obj.gram, &mut obj.free)
        } else {
            let eq = &mut equalities[matno - 1];
            (&mut eq.gram, &mut eq.free)
        };
        if is_free_block {
            if i != j || i == 0 || i > 2 * n_free {
                return Err(err(lineno, "bad free-variable entry"));
            }
            // the negative half of the split is implied; skip it
            if i % 2 == 1 {
                free.push(FreeTerm {
                    var: (i - 1) / 2,
                    coeff: value,
                });
            }
        } else {
            let dim = blocks[blkno - 1];
            if i == 0 || j == 0 || i > j || j > dim {
                return Err(err(lineno, "entry outside the upper triangle"));
            }
            gram.push(GramTerm {
                block: blkno - 1,
                row: i - 1,
                col: j - 1,
                coeff: value,
            });
        }
    }

    let mut problem = SdpProblem::new(blocks, n_free);
    if labels.len() == problem.blocks.len() {
        problem.block_labels = labels;
    }
    problem.equalities = equalities;
    problem.rhs = rhs;
    problem.objective = objective;
    problem
        .validate()
        .map_err(|message| SdpaError { line: 0, message })?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_problem_roundtrips() {
        let p = SdpProblem::new(vec![], 0);
        let q = parse_sdpa(&write_sdpa(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn problem_with_free_vars_roundtrips() {
        let mut p = SdpProblem::new(vec![2, 1], 2);
        p.block_labels = vec!["first".into(), "second".into()];
        p.push_equality(
            Equality {
                gram: vec![
                    GramTerm { block: 0, row: 0, col: 1, coeff: 0.125 },
                    GramTerm { block: 1, row: 0, col: 0, coeff: -3.0 },
                ],
                free: vec![FreeTerm { var: 1, coeff: 0.1 }],
            },
            1.5e-7,
        );
        p.push_equality(
            Equality {
                gram: vec![GramTerm { block: 0, row: 1, col: 1, coeff: 1.0 }],
                free: vec![],
            },
            -2.0,
        );
        let text = write_sdpa(&p);
        let q = parse_sdpa(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn corrupted_text_reports_line() {
        let mut p = SdpProblem::new(vec![2], 0);
        p.push_equality(
            Equality {
                gram: vec![GramTerm { block: 0, row: 0, col: 0, coeff: 1.0 }],
                free: vec![],
            },
            1.0,
        );
        let text = write_sdpa(&p);
        let corrupted = text.replace("1 1 1 1", "1 1 9 9");
        let e = parse_sdpa(&corrupted).unwrap_err();
        assert!(e.line > 0, "error should carry a line number: {e}");
    }
}

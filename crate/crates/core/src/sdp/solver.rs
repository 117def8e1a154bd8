use nalgebra::{DMatrix, DVector};

use super::problem::SdpProblem;
use super::solution::{point_residuals, SdpSolution, SdpStatus};
use super::SolverError;

/// Tolerances and limits for the feasibility solver.
#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Largest acceptable equality violation of a Feasible point.
    pub eq_tol: f64,
    /// Eigenvalues above `-psd_tol * max(1, trace)` count as nonnegative.
    pub psd_tol: f64,
    /// Margins within `[-margin_tol, margin_tol]` are Indeterminate.
    pub margin_tol: f64,
    /// Interior-point iteration cap.
    pub max_iterations: usize,
    /// Cap on the total trace of the Gram blocks; bounds the feasible
    /// region so margin maximization is well-posed.
    pub trace_cap: f64,
    /// Cap on the summed dimension of all blocks.
    pub dim_cap: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eq_tol: 1e-7,
            psd_tol: 1e-8,
            margin_tol: 1e-7,
            max_iterations: 200,
            trace_cap: 1e4,
            dim_cap: 200,
        }
    }
}

/// Decide feasibility of `problem` by maximizing the uniform margin
/// `lambda` with `Q_b - lambda I >= 0` on every block, subject to the
/// equalities and a total trace cap.
///
/// Diagonal entries that the equalities force to zero (and their rows and
/// columns) are removed first, so the margin is measured on the structurally
/// reachable face of each block. Non-convergence is reported as
/// Indeterminate, never as a verdict.
pub fn solve(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution, SolverError> {
    problem.validate().map_err(SolverError::MalformedProblem)?;
    let total: usize = problem.total_dim();
    if total > settings.dim_cap {
        return Err(SolverError::DimensionCapExceeded {
            total,
            cap: settings.dim_cap,
        });
    }

    let reduction = reduce_faces(problem);
    // an equality whose every entry is structurally zero but whose
    // right-hand side is not can never be met
    if reduction.broken_equality.is_some() {
        let blocks: Vec<DMatrix<f64>> =
            problem.blocks.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        let free = vec![0.0; problem.n_free];
        let residuals = point_residuals(problem, &blocks, &free);
        return Ok(SdpSolution {
            status: SdpStatus::Infeasible {
                margin: f64::NEG_INFINITY,
            },
            block_values: blocks,
            free_values: free,
            residuals,
            iterations: 0,
        });
    }

    let margin = MarginProblem::build(problem, &reduction, settings);
    let outcome = margin.run(settings);

    let (blocks, free, _lambda) = margin.original_point(&outcome);
    let residuals = point_residuals(problem, &blocks, &free);
    let status = match outcome.bounds {
        None => SdpStatus::Indeterminate {
            note: format!(
                "no convergence after {} iterations (gap {:.2e}, residual {:.2e})",
                outcome.iterations, outcome.gap, outcome.primal_residual
            ),
        },
        Some((lo, hi)) => {
            if lo > settings.margin_tol {
                // double-check the returned point before trusting the verdict
                if residuals.max_eq_violation <= settings.eq_tol
                    && residuals.min_eigenvalue >= -psd_floor(&blocks, settings.psd_tol)
                {
                    SdpStatus::Feasible { margin: lo }
                } else {
                    SdpStatus::Indeterminate {
                        note: format!(
                            "margin at least {lo:.3e} but the point failed validation \
                             (violation {:.2e}, min eig {:.2e})",
                            residuals.max_eq_violation, residuals.min_eigenvalue
                        ),
                    }
                }
            } else if hi < -settings.margin_tol {
                SdpStatus::Infeasible { margin: hi }
            } else if hi - lo < settings.margin_tol {
                SdpStatus::Indeterminate {
                    note: format!(
                        "margin pinned to [{lo:.3e}, {hi:.3e}] inside the decision band"
                    ),
                }
            } else {
                SdpStatus::Indeterminate {
                    note: format!(
                        "margin in [{lo:.3e}, {hi:.3e}] after {} iterations",
                        outcome.iterations
                    ),
                }
            }
        }
    };

    Ok(SdpSolution {
        status,
        block_values: blocks,
        free_values: free,
        residuals,
        iterations: outcome.iterations,
    })
}

fn psd_floor(blocks: &[DMatrix<f64>], psd_tol: f64) -> f64 {
    let trace: f64 = blocks.iter().map(|m| m.trace()).sum();
    psd_tol * trace.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// structural face reduction
// ---------------------------------------------------------------------------

struct Reduction {
    /// active[b][i]: row i of block b survives.
    active: Vec<Vec<bool>>,
    broken_equality: Option<usize>,
}

/// Iteratively remove diagonal entries that are forced to zero: an equality
/// with zero right-hand side, no free terms, and only same-signed diagonal
/// entries left pins all of those diagonals (hence their rows and columns)
/// to zero in every feasible point.
fn reduce_faces(problem: &SdpProblem) -> Reduction {
    let mut active: Vec<Vec<bool>> = problem.blocks.iter().map(|&d| vec![true; d]).collect();
    let mut broken = None;
    loop {
        let mut changed = false;
        for (idx, (eq, &rhs)) in problem.equalities.iter().zip(&problem.rhs).enumerate() {
            if !eq.free.is_empty() {
                continue;
            }
            let live: Vec<_> = eq
                .gram
                .iter()
                .filter(|g| active[g.block][g.row] && active[g.block][g.col])
                .collect();
            if live.is_empty() {
                if rhs != 0.0 && broken.is_none() {
                    broken = Some(idx);
                }
                continue;
            }
            if rhs != 0.0 {
                continue;
            }
            let all_diag = live.iter().all(|g| g.row == g.col);
            let same_sign =
                live.iter().all(|g| g.coeff > 0.0) || live.iter().all(|g| g.coeff < 0.0);
            if all_diag && same_sign {
                for g in live {
                    if active[g.block][g.row] {
                        active[g.block][g.row] = false;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Reduction {
        active,
        broken_equality: broken,
    }
}

// ---------------------------------------------------------------------------
// margin-maximization problem in reduced coordinates
// ---------------------------------------------------------------------------

/// Sparse symmetric coefficient of one equality on one block, in reduced
/// indices. `coeff` applies to (row, col) and its mirror.
#[derive(Clone, Copy)]
struct Entry {
    row: usize,
    col: usize,
    coeff: f64,
}

struct MarginProblem {
    /// Reduced block dimensions (with the 1x1 trace-cap slack appended).
    dims: Vec<usize>,
    /// entries[i][b]: equality i restricted to block b.
    entries: Vec<Vec<Vec<Entry>>>,
    /// m x (n_free + 1); the extra column belongs to lambda.
    free_cols: DMatrix<f64>,
    rhs: DVector<f64>,
    n_free: usize,
    /// Per original block: reduced index -> original index.
    index_maps: Vec<Vec<usize>>,
    original_dims: Vec<usize>,
}

struct IpmOutcome {
    blocks: Vec<DMatrix<f64>>, // reduced S blocks, slack last
    w: DVector<f64>,           // free variables, lambda last
    /// Certified interval for the optimal margin, available once primal and
    /// dual residuals are small: the current lambda is achievable (lower
    /// bound) and the duality gap caps the possible improvement (upper).
    bounds: Option<(f64, f64)>,
    iterations: usize,
    gap: f64,
    primal_residual: f64,
}

impl MarginProblem {
    fn build(problem: &SdpProblem, reduction: &Reduction, settings: &SolverSettings) -> Self {
        let n_blocks = problem.blocks.len();
        let index_maps: Vec<Vec<usize>> = reduction
            .active
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .filter_map(|(i, &keep)| keep.then_some(i))
                    .collect()
            })
            .collect();
        let reduced_pos: Vec<Vec<Option<usize>>> = reduction
            .active
            .iter()
            .map(|a| {
                let mut pos = vec![None; a.len()];
                let mut next = 0;
                for (i, &keep) in a.iter().enumerate() {
                    if keep {
                        pos[i] = Some(next);
                        next += 1;
                    }
                }
                pos
            })
            .collect();
        let mut dims: Vec<usize> = index_maps.iter().map(Vec::len).collect();
        let active_total: usize = dims.iter().sum();
        dims.push(1); // trace-cap slack

        let m = problem.n_equalities();
        let n_free = problem.n_free;
        let mut entries: Vec<Vec<Vec<Entry>>> = Vec::with_capacity(m + 1);
        let mut free_cols = DMatrix::zeros(m + 1, n_free + 1);
        let mut rhs = DVector::zeros(m + 1);

        for (i, (eq, &b_i)) in problem.equalities.iter().zip(&problem.rhs).enumerate() {
            let mut per_block: Vec<Vec<Entry>> = vec![Vec::new(); n_blocks + 1];
            let mut lambda_coeff = 0.0;
            for g in &eq.gram {
                let (Some(r), Some(c)) =
                    (reduced_pos[g.block][g.row], reduced_pos[g.block][g.col])
                else {
                    continue;
                };
                per_block[g.block].push(Entry {
                    row: r,
                    col: c,
                    coeff: g.coeff,
                });
                if r == c {
                    // Q = S + lambda I on the active face
                    lambda_coeff += g.coeff;
                }
            }
            for t in &eq.free {
                free_cols[(i, t.var)] += t.coeff;
            }
            free_cols[(i, n_free)] = lambda_coeff;
            rhs[i] = b_i;
            entries.push(per_block);
        }

        // trace cap: sum tr(S_b) + lambda * active_total + slack = cap
        let mut cap_row: Vec<Vec<Entry>> = vec![Vec::new(); n_blocks + 1];
        for (b, &d) in dims[..n_blocks].iter().enumerate() {
            for i in 0..d {
                cap_row[b].push(Entry {
                    row: i,
                    col: i,
                    coeff: 1.0,
                });
            }
        }
        cap_row[n_blocks].push(Entry {
            row: 0,
            col: 0,
            coeff: 1.0,
        });
        free_cols[(m, n_free)] = active_total as f64;
        rhs[m] = settings.trace_cap;
        entries.push(cap_row);

        Self {
            dims,
            entries,
            free_cols,
            rhs,
            n_free,
            index_maps,
            original_dims: problem.blocks.clone(),
        }
    }

    /// `<A_i, X>` over all blocks for equality i.
    fn apply_row(&self, i: usize, blocks: &[DMatrix<f64>]) -> f64 {
        let mut acc = 0.0;
        for (b, ents) in self.entries[i].iter().enumerate() {
            let x = &blocks[b];
            for e in ents {
                let v = x[(e.row, e.col)];
                acc += if e.row == e.col {
                    e.coeff * v
                } else {
                    2.0 * e.coeff * v
                };
            }
        }
        acc
    }

    /// `sum_i y_i A_i` accumulated into per-block dense matrices.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> =
            self.dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for (i, per_block) in self.entries.iter().enumerate() {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (b, ents) in per_block.iter().enumerate() {
                for e in ents {
                    out[b][(e.row, e.col)] += yi * e.coeff;
                    if e.row != e.col {
                        out[b][(e.col, e.row)] += yi * e.coeff;
                    }
                }
            }
        }
        out
    }

    fn run(&self, settings: &SolverSettings) -> IpmOutcome {
        Ipm::new(self).run(settings)
    }

    /// Translate a reduced point back to the original problem: Q_b equals
    /// S_b + lambda I on the active face, zero elsewhere.
    fn original_point(&self, outcome: &IpmOutcome) -> (Vec<DMatrix<f64>>, Vec<f64>, f64) {
        let lambda = outcome.w[self.n_free];
        let mut out = Vec::with_capacity(self.original_dims.len());
        for (b, map) in self.index_maps.iter().enumerate() {
            let s = &outcome.blocks[b];
            let dim = self.original_dims[b];
            let mut q = DMatrix::zeros(dim, dim);
            for (ri, &ro) in map.iter().enumerate() {
                for (ci, &co) in map.iter().enumerate() {
                    q[(ro, co)] = s[(ri, ci)];
                }
                q[(ro, ro)] += lambda;
            }
            out.push(q);
        }
        (out, outcome.w.as_slice()[..self.n_free].to_vec(), lambda)
    }
}

// ---------------------------------------------------------------------------
// primal-dual interior point with Nesterov-Todd scaling
// ---------------------------------------------------------------------------

struct Ipm<'a> {
    mp: &'a MarginProblem,
    m: usize,
    n_cone: usize,
    /// Cholesky of J J' where J = [A F] is the full constraint map; used to
    /// re-project Newton steps onto the equality manifold, which stops the
    /// primal residual from drifting when the scaling gets ill-conditioned.
    jjt_chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

#[derive(Clone)]
struct State {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    w: DVector<f64>,
}

impl<'a> Ipm<'a> {
    fn new(mp: &'a MarginProblem) -> Self {
        let m = mp.rhs.len();
        let n_cone: usize = mp.dims.iter().sum();
        let mut jjt = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for (b, ents_i) in mp.entries[i].iter().enumerate() {
                    let ents_j = &mp.entries[j][b];
                    if ents_i.is_empty() || ents_j.is_empty() {
                        continue;
                    }
                    for ei in ents_i {
                        for ej in ents_j {
                            if ei.row == ej.row && ei.col == ej.col {
                                let weight = if ei.row == ei.col { 1.0 } else { 2.0 };
                                acc += weight * ei.coeff * ej.coeff;
                            }
                        }
                    }
                }
                for k in 0..mp.free_cols.ncols() {
                    acc += mp.free_cols[(i, k)] * mp.free_cols[(j, k)];
                }
                jjt[(i, j)] = acc;
                jjt[(j, i)] = acc;
            }
        }
        let ridge = 1e-12 * (1.0 + jjt.diagonal().amax());
        for i in 0..m {
            jjt[(i, i)] += ridge;
        }
        let jjt_chol = nalgebra::Cholesky::new(jjt);
        Self {
            mp,
            m,
            n_cone,
            jjt_chol,
        }
    }

    /// Least-norm correction making `A(dX) + F dw = rp` hold exactly.
    fn project_step(&self, step: &mut Step, rp: &DVector<f64>) {
        let Some(chol) = &self.jjt_chol else {
            return;
        };
        for _ in 0..2 {
            let mut e = rp.clone();
            for i in 0..self.m {
                e[i] -= self.mp.apply_row(i, &step.dx);
            }
            e -= &self.mp.free_cols * &step.dw;
            if e.amax() <= 1e-14 * (1.0 + rp.amax()) {
                break;
            }
            let q = chol.solve(&e);
            let corr = self.mp.adjoint(&q);
            for (b, c) in corr.into_iter().enumerate() {
                step.dx[b] += c;
            }
            step.dw += self.mp.free_cols.transpose() * &q;
        }
    }

    /// Componentwise relative primal infeasibility; keeps the large
    /// trace-cap right-hand side from masking violations elsewhere.
    fn primal_inf(&self, rp: &DVector<f64>) -> f64 {
        rp.iter()
            .zip(self.mp.rhs.iter())
            .map(|(&r, &b)| r.abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max)
    }

    fn dual_inf(rd: &[DMatrix<f64>], rf: &DVector<f64>) -> f64 {
        rd.iter()
            .map(|r| if r.nrows() > 0 { r.amax() } else { 0.0 })
            .fold(0.0_f64, f64::max)
            .max(rf.amax())
    }

    fn run(&self, settings: &SolverSettings) -> IpmOutcome {
        let mp = self.mp;
        let scale = mp
            .rhs
            .iter()
            .fold(1.0_f64, |a, &b| a.max(b.abs()))
            .sqrt()
            .max(1.0);
        let mut st = State {
            x: mp
                .dims
                .iter()
                .map(|&d| DMatrix::identity(d, d) * scale)
                .collect(),
            z: mp
                .dims
                .iter()
                .map(|&d| DMatrix::identity(d, d) * scale)
                .collect(),
            y: DVector::zeros(self.m),
            w: DVector::zeros(mp.n_free + 1),
        };

        let mut bounds: Option<(f64, f64)> = None;
        let mut iterations = 0;
        let mut gap = f64::INFINITY;
        let mut pinf = f64::INFINITY;
        let mut best: Option<(f64, State)> = None;

        for iter in 0..settings.max_iterations {
            iterations = iter + 1;
            let (rp, rd, rf) = self.residual_vectors(&st);
            gap = inner_all(&st.x, &st.z);
            let mu = if self.n_cone > 0 {
                gap / self.n_cone as f64
            } else {
                0.0
            };
            pinf = self.primal_inf(&rp);
            let dinf = Self::dual_inf(&rd, &rf);
            let lambda = st.w[self.mp.n_free];
            let obj_scale = 1.0 + lambda.abs();
            let merit = pinf.max(dinf).max(gap / obj_scale);
            if best.as_ref().map_or(true, |(m, _)| merit < *m) {
                best = Some((merit, st.clone()));
            }
            if pinf < 1e-9 && dinf < 1e-9 {
                let slop = 100.0 * (pinf + dinf) * obj_scale + 1e-13;
                let lo = lambda - slop;
                let hi = lambda + gap + slop;
                bounds = Some((lo, hi));
                let width = hi - lo;
                // resolve the margin itself, not just its sign
                let feasible = lo > settings.margin_tol && width <= 1e-4 * lo;
                let infeasible = hi < -settings.margin_tol && width <= 1e-4 * (-hi);
                let pinned = gap + 2.0 * slop < 0.5 * settings.margin_tol;
                if feasible || infeasible || pinned {
                    break;
                }
            }
            if !gap.is_finite() {
                break;
            }

            let Some(scaling) = self.nt_scalings(&st) else {
                break;
            };
            let Some(kkt) = self.factor_kkt(&scaling) else {
                break;
            };

            // predictor
            let rc_aff: Vec<DMatrix<f64>> = st.x.iter().map(|x| -x).collect();
            let Some(aff) = self.newton_step(&kkt, &scaling, &rp, &rd, &rf, &rc_aff) else {
                break;
            };
            let alpha_x_aff = max_step(&st.x, &aff.dx);
            let alpha_z_aff = max_step(&st.z, &aff.dz);
            let mu_aff = {
                let mut acc = 0.0;
                for b in 0..st.x.len() {
                    let xn = &st.x[b] + &aff.dx[b] * alpha_x_aff;
                    let zn = &st.z[b] + &aff.dz[b] * alpha_z_aff;
                    acc += (&xn * &zn).trace();
                }
                if self.n_cone > 0 {
                    acc / self.n_cone as f64
                } else {
                    0.0
                }
            };
            let sigma = if mu > 0.0 {
                (mu_aff / mu).clamp(0.0, 1.0).powi(3).max(1e-6)
            } else {
                0.1
            };

            // corrector with a Mehrotra-style second-order term
            let rc: Vec<DMatrix<f64>> = (0..st.x.len())
                .map(|b| {
                    let zinv = &scaling[b].z_inv;
                    let second = &aff.dx[b] * &aff.dz[b] * zinv;
                    let second = (&second + &second.transpose()) * 0.5;
                    zinv * (sigma * mu) - &st.x[b] - second
                })
                .collect();
            let mut step = match self.newton_step(&kkt, &scaling, &rp, &rd, &rf, &rc) {
                Some(s) => s,
                None => aff,
            };

            // guard: if the second-order term collapsed the step, fall back
            // to a plain centering direction
            let aff_floor = 0.1 * alpha_x_aff.min(alpha_z_aff);
            if max_step(&st.x, &step.dx).min(max_step(&st.z, &step.dz)) < aff_floor {
                let rc_center: Vec<DMatrix<f64>> = (0..st.x.len())
                    .map(|b| &scaling[b].z_inv * (sigma * mu) - &st.x[b])
                    .collect();
                if let Some(s) = self.newton_step(&kkt, &scaling, &rp, &rd, &rf, &rc_center) {
                    step = s;
                }
            }

            let tau = if mu > 1e-4 { 0.95 } else { 0.98 };
            let mut alpha_x = (tau * max_step(&st.x, &step.dx)).min(1.0);
            let mut alpha_z = (tau * max_step(&st.z, &step.dz)).min(1.0);
            if alpha_x.min(alpha_z) < 1e-10 {
                // rescue: a pure recentering step aims into the cone
                let rc_recenter: Vec<DMatrix<f64>> = (0..st.x.len())
                    .map(|b| &scaling[b].z_inv * mu - &st.x[b])
                    .collect();
                if let Some(s) = self.newton_step(&kkt, &scaling, &rp, &rd, &rf, &rc_recenter) {
                    let ax = (tau * max_step(&st.x, &s.dx)).min(1.0);
                    let az = (tau * max_step(&st.z, &s.dz)).min(1.0);
                    if ax.min(az) > alpha_x.min(alpha_z) {
                        step = s;
                        alpha_x = ax;
                        alpha_z = az;
                    }
                }
            }
            if std::env::var_os("SOSLYAP_IPM_TRACE").is_some() {
                eprintln!(
                    "it {iterations:3} mu {mu:9.2e} pinf {pinf:9.2e} dinf {dinf:9.2e} \
                     sigma {sigma:7.1e} ax {alpha_x:7.1e} az {alpha_z:7.1e} lam {:10.3e}",
                    st.w[self.mp.n_free]
                );
            }
            if alpha_x < 1e-13 && alpha_z < 1e-13 {
                break;
            }
            for b in 0..st.x.len() {
                st.x[b] += &step.dx[b] * alpha_x;
                st.z[b] += &step.dz[b] * alpha_z;
                symmetrize(&mut st.x[b]);
                symmetrize(&mut st.z[b]);
            }
            st.y += &step.dy * alpha_z;
            st.w += &step.dw * alpha_x;
        }

        // fall back to the best iterate seen when it beats the final one,
        // then derive bounds for it with a looser residual allowance
        if bounds.is_none() {
            if let Some((_, best_st)) = best {
                let (rp_b, rd_b, rf_b) = self.residual_vectors(&best_st);
                let gap_b = inner_all(&best_st.x, &best_st.z);
                let (rp_c, rd_c, rf_c) = self.residual_vectors(&st);
                let gap_c = inner_all(&st.x, &st.z);
                let score = |p: f64, d: f64, g: f64, w: &DVector<f64>| {
                    p.max(d).max(g / (1.0 + w[self.mp.n_free].abs()))
                };
                let b_score = score(
                    self.primal_inf(&rp_b),
                    Self::dual_inf(&rd_b, &rf_b),
                    gap_b,
                    &best_st.w,
                );
                let c_score = score(
                    self.primal_inf(&rp_c),
                    Self::dual_inf(&rd_c, &rf_c),
                    gap_c,
                    &st.w,
                );
                if b_score < c_score {
                    st = best_st;
                }
            }
            let (rp, rd, rf) = self.residual_vectors(&st);
            gap = inner_all(&st.x, &st.z);
            pinf = self.primal_inf(&rp);
            let dinf = Self::dual_inf(&rd, &rf);
            if pinf < 1e-8 && dinf < 1e-8 {
                let lambda = st.w[self.mp.n_free];
                let slop = 1e3 * (pinf + dinf) * (1.0 + lambda.abs()) + 1e-12;
                bounds = Some((lambda - slop, lambda + gap + slop));
            }
        }

        IpmOutcome {
            blocks: st.x,
            w: st.w,
            bounds,
            iterations,
            gap,
            primal_residual: pinf,
        }
    }

    /// rp = b - A(X) - F w ; rd_b = -(A* y)_b - Z_b ; rf = c_f - F' y
    fn residual_vectors(&self, st: &State) -> (DVector<f64>, Vec<DMatrix<f64>>, DVector<f64>) {
        let mp = self.mp;
        let mut rp = DVector::zeros(self.m);
        for i in 0..self.m {
            rp[i] = mp.rhs[i] - mp.apply_row(i, &st.x);
        }
        rp -= &mp.free_cols * &st.w;

        let mut rd = mp.adjoint(&st.y);
        for (b, r) in rd.iter_mut().enumerate() {
            *r = -(r.clone()) - &st.z[b];
        }

        // objective: maximize lambda  <=>  minimize -lambda
        let mut cf = DVector::zeros(mp.n_free + 1);
        cf[mp.n_free] = -1.0;
        let rf = cf - mp.free_cols.transpose() * &st.y;
        (rp, rd, rf)
    }

    fn nt_scalings(&self, st: &State) -> Option<Vec<NtScaling>> {
        st.x.iter()
            .zip(&st.z)
            .map(|(x, z)| NtScaling::new(x, z))
            .collect()
    }

    fn factor_kkt(&self, scaling: &[NtScaling]) -> Option<Kkt> {
        let mp = self.mp;
        let m = self.m;
        let mut big = DMatrix::zeros(m, m);
        // T_j = W A_j W per block, then M_ij = <A_i, T_j>
        for j in 0..m {
            for (b, ents_j) in mp.entries[j].iter().enumerate() {
                if ents_j.is_empty() {
                    continue;
                }
                let w = &scaling[b].w;
                let d = w.nrows();
                let mut aw = DMatrix::zeros(d, d);
                for e in ents_j {
                    for c in 0..d {
                        aw[(e.row, c)] += e.coeff * w[(e.col, c)];
                        if e.row != e.col {
                            aw[(e.col, c)] += e.coeff * w[(e.row, c)];
                        }
                    }
                }
                let t = w * aw;
                for i in 0..m {
                    let ents_i = &mp.entries[i][b];
                    if ents_i.is_empty() {
                        continue;
                    }
                    let mut acc = 0.0;
                    for e in ents_i {
                        let v = t[(e.row, e.col)];
                        acc += if e.row == e.col {
                            e.coeff * v
                        } else {
                            2.0 * e.coeff * v
                        };
                    }
                    big[(i, j)] += acc;
                }
            }
        }
        big = (&big + &big.transpose()) * 0.5;
        let m_mat = big.clone();
        let ridge = 1e-12 * (1.0 + big.diagonal().amax());
        for i in 0..m {
            big[(i, i)] += ridge;
        }
        let chol = nalgebra::Cholesky::new(big.clone()).or_else(|| {
            for i in 0..m {
                big[(i, i)] += 1e-8 * (1.0 + big[(i, i)].abs());
            }
            nalgebra::Cholesky::new(big)
        })?;

        // saddle part for the free columns
        let f = &mp.free_cols;
        let minv_f = chol.solve(f);
        let mut g = f.transpose() * &minv_f;
        let gr = 1e-12 * (1.0 + g.diagonal().amax());
        for i in 0..g.nrows() {
            g[(i, i)] += gr;
        }
        let g_chol = nalgebra::Cholesky::new(g)?;
        Some(Kkt {
            m_mat,
            chol,
            minv_f,
            g_chol,
        })
    }

    /// Solve `[M F; F' 0] [dy; dw] = [h; rf]` with two rounds of iterative
    /// refinement against the unregularized matrices.
    fn saddle_solve(&self, kkt: &Kkt, h: &DVector<f64>, rf: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let f = &self.mp.free_cols;
        let base = |h: &DVector<f64>, rf: &DVector<f64>| {
            let minv_h = kkt.chol.solve(h);
            let rhs_w = kkt.minv_f.transpose() * h - rf;
            let dw = kkt.g_chol.solve(&rhs_w);
            let dy = minv_h - &kkt.minv_f * &dw;
            (dy, dw)
        };
        let (mut dy, mut dw) = base(h, rf);
        for _ in 0..2 {
            let ey = h - &kkt.m_mat * &dy - f * &dw;
            let ef = rf - f.transpose() * &dy;
            let (cy, cw) = base(&ey, &ef);
            dy += cy;
            dw += cw;
        }
        (dy, dw)
    }

    fn newton_step(
        &self,
        kkt: &Kkt,
        scaling: &[NtScaling],
        rp: &DVector<f64>,
        rd: &[DMatrix<f64>],
        rf: &DVector<f64>,
        rc: &[DMatrix<f64>],
    ) -> Option<Step> {
        let mp = self.mp;
        // h = rp - A(rc - W rd W)
        let mut carried: Vec<DMatrix<f64>> = Vec::with_capacity(rc.len());
        for b in 0..rc.len() {
            let w = &scaling[b].w;
            carried.push(&rc[b] - w * &rd[b] * w);
        }
        let mut h = rp.clone();
        for i in 0..self.m {
            h[i] -= mp.apply_row(i, &carried);
        }

        let (dy, dw) = self.saddle_solve(kkt, &h, rf);

        // dZ = rd - A*(dy); dX = rc - W dZ W
        let ady = mp.adjoint(&dy);
        let mut dz = Vec::with_capacity(rd.len());
        let mut dx = Vec::with_capacity(rd.len());
        for b in 0..rd.len() {
            let mut dzb = &rd[b] - &ady[b];
            symmetrize(&mut dzb);
            let w = &scaling[b].w;
            let mut dxb = &rc[b] - w * &dzb * w;
            symmetrize(&mut dxb);
            dz.push(dzb);
            dx.push(dxb);
        }
        if dx
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
            || dy.iter().any(|v| !v.is_finite())
            || dw.iter().any(|v| !v.is_finite())
        {
            return None;
        }
        let mut step = Step { dx, dz, dy, dw };
        self.project_step(&mut step, rp);
        Some(step)
    }
}

struct Kkt {
    m_mat: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    minv_f: DMatrix<f64>,
    g_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

struct Step {
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dw: DVector<f64>,
}

struct NtScaling {
    w: DMatrix<f64>,
    z_inv: DMatrix<f64>,
}

impl NtScaling {
    /// The unique positive definite W with W Z W = X.
    fn new(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let d = x.nrows();
        if d == 0 {
            return Some(Self {
                w: DMatrix::zeros(0, 0),
                z_inv: DMatrix::zeros(0, 0),
            });
        }
        let (z_half, z_half_inv, z_inv) = sym_roots(z)?;
        let inner = &z_half * x * &z_half;
        let (inner_half, _, _) = sym_roots(&inner)?;
        let mut w = &z_half_inv * inner_half * &z_half_inv;
        symmetrize(&mut w);
        Some(Self { w, z_inv })
    }
}

/// (M^{1/2}, M^{-1/2}, M^{-1}) of a symmetric positive definite matrix.
fn sym_roots(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let eig = m.clone().symmetric_eigen();
    let floor = 1e-14 * eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&v| v <= floor) {
        return None;
    }
    let q = &eig.eigenvectors;
    let mk = |f: &dyn Fn(f64) -> f64| -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        q * d * q.transpose()
    };
    Some((
        mk(&f64::sqrt),
        mk(&|v| 1.0 / v.sqrt()),
        mk(&|v| 1.0 / v),
    ))
}

/// Largest step alpha in (0, 1] with X + alpha dX staying in the cone.
/// Computed through an eigen factorization of X with a clamped spectrum so
/// the bound stays meaningful when X is nearly singular.
fn max_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> f64 {
    let mut alpha = 1.0_f64;
    for (xb, db) in x.iter().zip(dx) {
        if xb.nrows() == 0 {
            continue;
        }
        let eig = xb.clone().symmetric_eigen();
        let floor = eig.eigenvalues.amax().max(1e-300) * 1e-15;
        let q = &eig.eigenvectors;
        let inv_sqrt =
            DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.max(floor).sqrt()));
        let s = &inv_sqrt * q.transpose() * db * q * inv_sqrt.clone();
        let s = (&s + &s.transpose()) * 0.5;
        let min = s.symmetric_eigen().eigenvalues.min();
        if min < 0.0 {
            alpha = alpha.min(-1.0 / min);
        }
    }
    alpha
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn inner_all(x: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a * b).trace()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::{Equality, FreeTerm, GramTerm};

    fn scalar_problem(rhs: f64) -> SdpProblem {
        let mut p = SdpProblem::new(vec![1], 0);
        p.push_equality(
            Equality {
                gram: vec![GramTerm {
                    block: 0,
                    row: 0,
                    col: 0,
                    coeff: 1.0,
                }],
                free: vec![],
            },
            rhs,
        );
        p
    }

    #[test]
    fn scalar_feasible_with_unit_margin() {
        let sol = solve(&scalar_problem(1.0), &SolverSettings::default()).unwrap();
        match sol.status {
            SdpStatus::Feasible { margin } => {
                assert!((margin - 1.0).abs() < 1e-3, "margin {margin}");
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        assert!((sol.block_values[0][(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_infeasible() {
        let sol = solve(&scalar_problem(-1.0), &SolverSettings::default()).unwrap();
        match sol.status {
            SdpStatus::Infeasible { margin } => assert!(margin < -0.5),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn forced_zero_diagonal_with_nonzero_partner() {
        // Q11 = 0 forces the whole first row to zero; the off-diagonal
        // equality 2*Q12 = 1 then becomes unsatisfiable.
        let mut p = SdpProblem::new(vec![2], 0);
        p.push_equality(
            Equality {
                gram: vec![GramTerm {
                    block: 0,
                    row: 0,
                    col: 0,
                    coeff: 1.0,
                }],
                free: vec![],
            },
            0.0,
        );
        p.push_equality(
            Equality {
                gram: vec![GramTerm {
                    block: 0,
                    row: 0,
                    col: 1,
                    coeff: 1.0,
                }],
                free: vec![],
            },
            1.0,
        );
        p.push_equality(
            Equality {
                gram: vec![GramTerm {
                    block: 0,
                    row: 1,
                    col: 1,
                    coeff: 1.0,
                }],
                free: vec![],
            },
            1.0,
        );
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert!(sol.status.is_infeasible());
    }

    #[test]
    fn free_variable_balances_equality() {
        // q - u = 2 and q = 1  =>  u = -1, feasible
        let mut p = SdpProblem::new(vec![1], 1);
        p.push_equality(
            Equality {
                gram: vec![GramTerm {
                    block: 0,
                    row: 0,
                    col: 0,
                    coeff: 1.0,
                }],
                free: vec![FreeTerm { var: 0, coeff: -1.0 }],
            },
            2.0,
        );
        p.push_equality(
            Equality {
                gram: vec![GramTerm {
                    block: 0,
                    row: 0,
                    col: 0,
                    coeff: 1.0,
                }],
                free: vec![],
            },
            1.0,
        );
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert!(sol.status.is_feasible(), "{:?}", sol.status);
        assert!((sol.free_values[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn dimension_cap_enforced() {
        let p = SdpProblem::new(vec![300], 0);
        let err = solve(&p, &SolverSettings::default()).unwrap_err();
        assert!(matches!(err, SolverError::DimensionCapExceeded { .. }));
    }

    #[test]
    fn two_by_two_psd_completion() {
        // off-diagonal entries count twice in <A, Q>, so rhs 1.8 pins
        // Q01 = 0.9; the matrix [[1, .9], [.9, 1]] has margin 0.1
        let build = |offdiag_rhs: f64| {
            let mut p = SdpProblem::new(vec![2], 0);
            for i in 0..2 {
                p.push_equality(
                    Equality {
                        gram: vec![GramTerm {
                            block: 0,
                            row: i,
                            col: i,
                            coeff: 1.0,
                        }],
                        free: vec![],
                    },
                    1.0,
                );
            }
            p.push_equality(
                Equality {
                    gram: vec![GramTerm {
                        block: 0,
                        row: 0,
                        col: 1,
                        coeff: 1.0,
                    }],
                    free: vec![],
                },
                offdiag_rhs,
            );
            p
        };
        let sol = solve(&build(1.8), &SolverSettings::default()).unwrap();
        match sol.status {
            SdpStatus::Feasible { margin } => assert!((margin - 0.1).abs() < 1e-4),
            other => panic!("expected feasible, got {other:?}"),
        }

        // Q01 = 1.1 makes the matrix indefinite by -0.1
        let sol2 = solve(&build(2.2), &SolverSettings::default()).unwrap();
        match sol2.status {
            SdpStatus::Infeasible { margin } => assert!((margin + 0.1).abs() < 1e-4),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }
}

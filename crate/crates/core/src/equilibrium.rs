//! Equilibrium angles of the lossless power-balance equations.
//!
//! Solves `p_i = sum_j K_ij sin(theta_i - theta_j)` by damped Newton on the
//! system with one angle pinned to zero. The full Jacobian is a weighted
//! Laplacian whose null vector is the uniform shift, so pinning one angle is
//! what makes each Newton step well posed. The result is re-gauged so that its
//! inertia-weighted mean (center of inertia) is zero.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::coi_relative;
use crate::netmodel::{electrical_power_into, NetworkSpec};

/// Largest admissible `|sum p|` for a power vector handed to the solver.
pub const IMBALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumOptions {
    /// Max-norm bound on the power mismatch.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting angles; zero (flat start) when `None`.
    pub guess: Option<Vec<f64>>,
    /// Angle held at zero during the solve; the last node when `None`.
    pub pinned: Option<usize>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions { tol: 1e-10, max_iter: 50, guess: None, pinned: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquilibriumResult {
    /// Angles with zero center of inertia.
    pub theta: Vec<f64>,
    /// `max_i |p_i - P_e,i(theta)|`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Jacobian of [`electrical_power`](crate::electrical_power) with respect to the angles.
///
/// `J_ij = -K_ij cos(theta_i - theta_j)` off the diagonal and the negated row
/// sum on it, so every row sums to zero.
pub fn jacobian(theta: &[f64], spec: &NetworkSpec) -> Result<Vec<Vec<f64>>> {
    spec.check_len("theta", theta.len())?;
    let n = spec.n();
    let mut j = vec![vec![0.0; n]; n];
    for r in 0..n {
        let mut diag = 0.0;
        for c in 0..n {
            if r == c {
                continue;
            }
            let k = spec.coupling(r, c);
            let v = if k == 0.0 { 0.0 } else { k * libm::cos(theta[r] - theta[c]) };
            j[r][c] = -v;
            diag += v;
        }
        j[r][r] = diag;
    }
    Ok(j)
}

fn reduced(jac: &[Vec<f64>], pinned: usize) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..jac.len()).filter(|&i| i != pinned).collect();
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| jac[idx[r]][idx[c]])
}

/// Smallest eigenvalue of the Jacobian with the `pinned` row and column removed.
///
/// Positive when every line is loaded below its `pi/2` stability limit, which
/// identifies the stable (small-angle) equilibrium branch.
pub fn reduced_min_eigenvalue(theta: &[f64], spec: &NetworkSpec, pinned: usize) -> Result<f64> {
    if pinned >= spec.n() {
        return Err(Error::invalid("pinned index out of range"));
    }
    let jac = jacobian(theta, spec)?;
    Ok(linalg::min_eigenvalue(reduced(&jac, pinned)))
}

fn mismatch(theta: &[f64], p: &[f64], spec: &NetworkSpec, out: &mut [f64]) -> f64 {
    electrical_power_into(theta, spec, out);
    let mut worst = 0.0_f64;
    for (f, &pi) in out.iter_mut().zip(p) {
        *f -= pi;
        worst = worst.max(f.abs());
    }
    worst
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// Finds angles whose electrical power matches `p`.
///
/// `p` must sum to zero within [`IMBALANCE_TOL`]: a lossless network cannot
/// absorb a net injection. Demands beyond what the coupling can carry end in
/// [`Error::NoConvergence`].
pub fn solve_equilibrium(p: &[f64], spec: &NetworkSpec, opts: &EquilibriumOptions) -> Result<EquilibriumResult> {
    let n = spec.n();
    spec.check_len("power vector", p.len())?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("power vector contains non-finite entries"));
    }
    let imbalance: f64 = p.iter().sum();
    if imbalance.abs() > IMBALANCE_TOL {
        return Err(Error::Infeasible { imbalance });
    }
    let pinned = opts.pinned.unwrap_or(n - 1);
    if pinned >= n {
        return Err(Error::invalid(alloc::format!("pinned index {pinned} out of range")));
    }

    let mut theta = match &opts.guess {
        Some(g) => {
            spec.check_len("initial guess", g.len())?;
            g.clone()
        }
        None => vec![0.0; n],
    };
    let anchor = theta[pinned];
    theta.iter_mut().for_each(|t| *t -= anchor);

    let free: Vec<usize> = (0..n).filter(|&i| i != pinned).collect();
    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    let mut residual = mismatch(&theta, p, spec, &mut f);
    let mut iterations = 0;

    while residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual_norm: residual });
        }
        let jac = jacobian(&theta, spec)?;
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -f[i]));
        let step = linalg::solve(reduced(&jac, pinned), rhs)
            .ok_or(Error::NoConvergence { iterations, residual_norm: residual })?;

        // Backtracking on 0.5 |f|^2 with the Armijo condition.
        let merit = half_sq(&f);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            trial.copy_from_slice(&theta);
            for (k, &i) in free.iter().enumerate() {
                trial[i] += alpha * step[k];
            }
            let r = mismatch(&trial, p, spec, &mut f_trial);
            if half_sq(&f_trial) <= (1.0 - 1e-4 * alpha) * merit {
                theta.copy_from_slice(&trial);
                f.copy_from_slice(&f_trial);
                residual = r;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(Error::NoConvergence { iterations, residual_norm: residual });
        }
    }

    let theta = coi_relative(&theta, spec.inertia());
    let residual_norm = mismatch(&theta, p, spec, &mut f);
    Ok(EquilibriumResult { theta, residual_norm, iterations, converged: residual_norm <= opts.tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::electrical_power;
    use approx::assert_abs_diff_eq;

    fn table1_spec() -> NetworkSpec {
        NetworkSpec::all_to_all(vec![2.0, 3.0, 2.5], vec![3.0; 3], 8.0).unwrap()
    }

    fn coi(theta: &[f64], m: &[f64]) -> f64 {
        theta.iter().zip(m).map(|(t, m)| t * m).sum::<f64>() / m.iter().sum::<f64>()
    }

    #[test]
    fn zero_power_needs_no_iterations() {
        let r = solve_equilibrium(&[0.0; 3], &table1_spec(), &Default::default()).unwrap();
        assert_eq!(r.theta, vec![0.0; 3]);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn pre_step_separation_matches_symmetry_reduction() {
        let spec = table1_spec();
        let p = [0.6, -0.3, -0.3];
        let r = solve_equilibrium(&p, &spec, &Default::default()).unwrap();
        assert!(r.converged);
        assert!(r.residual_norm <= 1e-10);
        assert_abs_diff_eq!(r.theta[0] - r.theta[1], libm::asin(0.0375), epsilon = 1e-9);
        assert_abs_diff_eq!(r.theta[1], r.theta[2], epsilon = 1e-9);
        assert_abs_diff_eq!(coi(&r.theta, spec.inertia()), 0.0, epsilon = 1e-12);
        // residual by direct substitution
        let pe = electrical_power(&r.theta, &spec).unwrap();
        for (a, b) in pe.iter().zip(&p) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn post_step_separation() {
        let spec = table1_spec();
        let p = [0.6 + 4.0 / 3.0, -0.3 - 2.0 / 3.0, -0.3 - 2.0 / 3.0];
        let r = solve_equilibrium(&p, &spec, &Default::default()).unwrap();
        let sep = r.theta[0] - r.theta[1];
        assert_abs_diff_eq!(sep, 0.1211, epsilon = 1e-4);
        assert_abs_diff_eq!(sep, libm::asin((0.6 + 4.0 / 3.0) / 16.0), epsilon = 1e-9);
    }

    #[test]
    fn jacobian_at_flat_angles() {
        let j = jacobian(&[0.0; 3], &table1_spec()).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 16.0 } else { -8.0 };
                assert_eq!(j[r][c], want);
            }
            assert_eq!(j[r].iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn unbalanced_power_is_infeasible() {
        let err = solve_equilibrium(&[0.6, -0.3, -0.2], &table1_spec(), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn overload_does_not_converge() {
        // node 0 would need to export 20 pu through 16 pu of coupling
        let err = solve_equilibrium(&[20.0, -10.0, -10.0], &table1_spec(), &Default::default()).unwrap_err();
        match err {
            Error::NoConvergence { residual_norm, .. } => assert!(residual_norm > 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pinned_index_does_not_change_relative_angles() {
        let spec = table1_spec();
        let p = [1.2, -0.5, -0.7];
        let base = solve_equilibrium(&p, &spec, &Default::default()).unwrap();
        for pin in 0..3 {
            let opts = EquilibriumOptions { pinned: Some(pin), ..Default::default() };
            let r = solve_equilibrium(&p, &spec, &opts).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_abs_diff_eq!(r.theta[i] - r.theta[j], base.theta[i] - base.theta[j], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn single_node_is_trivial() {
        let spec = NetworkSpec::all_to_all(vec![1.0], vec![1.0], 0.0).unwrap();
        let r = solve_equilibrium(&[0.0], &spec, &Default::default()).unwrap();
        assert_eq!(r.theta, vec![0.0]);
    }

    #[test]
    fn stable_branch_selected_from_flat_start() {
        let spec = table1_spec();
        let r = solve_equilibrium(&[1.9, -0.95, -0.95], &spec, &Default::default()).unwrap();
        assert!(reduced_min_eigenvalue(&r.theta, &spec, 2).unwrap() >= -1e-9);
    }
}

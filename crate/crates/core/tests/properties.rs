//! Cross-module properties of the solver, certificates and constructions.

use mindiag::approx_solver::{min_diag_norm, objective, oracle_grid_with, SolverOptions, Status};
use mindiag::certificates::{certify, compute_mM, CertifyOptions};
use mindiag::construction::{solve_orthogonal_diagonal, verify_caso3};
use mindiag::spectral::{eig_sym, eigvals_sym, op_norm, spectral_projections, DEFAULT_CLUSTER_TOL};
use mindiag::{block_compose, DiagVector, Execution, SymMatrix};
use proptest::prelude::*;

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| SymMatrix::from_upper_fn(n, |i, j| v[i * n + j]).unwrap())
}

fn sequential() -> SolverOptions {
    SolverOptions { execution: Execution::Sequential, ..SolverOptions::default() }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_spectrum_is_the_union(a in sym(3), b in sym(4)) {
        let s = block_compose(&a, &b);
        let mut both = eigvals_sym(&a).unwrap();
        both.extend(eigvals_sym(&b).unwrap());
        let got = eigvals_sym(&s).unwrap();
        for (x, y) in sorted(both).iter().zip(&got) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn diagonal_shifts_are_absorbed(c in sym(4), e in prop::collection::vec(-2.0f64..2.0, 4)) {
        let e = DiagVector::new(e).unwrap();
        let base = min_diag_norm(&c, &sequential()).unwrap();
        let moved = min_diag_norm(&c.add_diag(&e).unwrap(), &sequential()).unwrap();
        prop_assert!((base.upper - moved.upper).abs() <= 1e-6 * (1.0 + base.upper));
        // the minimizer need not be unique, so compare through the objective
        let back = moved.d_star.as_slice().iter().zip(e.as_slice()).map(|(x, y)| x + y).collect();
        let f = objective(&c, &DiagVector::new(back).unwrap()).unwrap();
        prop_assert!((f - base.upper).abs() <= 1e-6 * (1.0 + base.upper));
    }

    #[test]
    fn solver_certificates_obey_weak_duality(c in sym(5)) {
        let r = min_diag_norm(&c, &sequential()).unwrap();
        prop_assert!(r.lower <= r.upper);
        if let Some(x) = &r.certificate {
            prop_assert!(x.diag_residual == 0.0);
            prop_assert!((x.trace_norm - 1.0).abs() <= 1e-10);
            prop_assert!(x.evaluate(&c).abs() <= r.upper + 1e-10);
            // and against any other diagonal
            let d = DiagVector::new((0..5).map(|k| 0.3 * k as f64 - 0.6).collect()).unwrap();
            prop_assert!(x.evaluate(&c).abs() <= objective(&c, &d).unwrap() + 1e-10);
        }
    }

    #[test]
    fn certificate_parts_are_orthogonal_and_bracket_probes(
        c in sym(3),
        probe in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let r = min_diag_norm(&c, &sequential()).unwrap();
        prop_assume!(r.status == Status::Converged);
        let rep = certify(&c, &r.d_star, &CertifyOptions::default()).unwrap();
        let Some(x) = rep.certificate else { return Ok(()) };
        let (xp, xm) = x.parts().unwrap();
        prop_assert!(eigvals_sym(&xp).unwrap()[0] >= -1e-10);
        prop_assert!(eigvals_sym(&xm).unwrap()[0] >= -1e-10);
        let prod = xp.to_matrix().matmul(&xm.to_matrix());
        prop_assert!(prod.max_abs() <= 1e-8, "X⁺X⁻ = {:?}", prod);

        // m ≤ tr(X⁺D)/‖X⁺‖₁ = tr(X⁻D)/‖X⁻‖₁ ≤ M
        let a = c.add_diag(&r.d_star).unwrap();
        let proj = spectral_projections(&eig_sym(&a).unwrap(), DEFAULT_CLUSTER_TOL).unwrap();
        let d = DiagVector::new(probe).unwrap();
        let (m, big_m) = compute_mM(&d, &proj).unwrap();
        let dm = SymMatrix::diagonal(&d);
        let plus = xp.trace_product(&dm) / xp.trace();
        let minus = xm.trace_product(&dm) / xm.trace();
        prop_assert!((plus - minus).abs() <= 1e-8, "{plus} vs {minus}");
        prop_assert!(m <= plus + 1e-8 && plus <= big_m + 1e-8, "{m} ≤ {plus} ≤ {big_m}");
    }

    #[test]
    fn orthogonal_column_operators_are_locally_minimal(
        c in prop::collection::vec(prop_oneof![-1.0f64..-0.2, 0.2f64..1.0], 2),
        b in -1.0f64..1.0,
    ) {
        // first column c, interior b, diagonal from the orthogonality system,
        // then scale the first cross until it dominates
        let rows = vec![vec![0.0, c[0], c[1]], vec![c[0], 0.0, b], vec![c[1], b, 0.0]];
        let off = SymMatrix::from_rows(&rows).unwrap();
        let d = solve_orthogonal_diagonal(&off, 0).unwrap();
        let with_d = off.add_diag(&d).unwrap();
        let inner = op_norm(&with_d.zero_row_col(0).unwrap()).unwrap();
        let s = 1.2 * inner.max(1e-3) / (c[0].hypot(c[1]));
        let t = SymMatrix::from_upper_fn(3, |i, j| if i == 0 { s * with_d.get(i, j) } else { with_d.get(i, j) }).unwrap();
        let rep = verify_caso3(&t, 0).unwrap();
        prop_assume!(rep.all_hold());
        let norm = op_norm(&t).unwrap();
        let found = oracle_grid_with(&t, Some(0.5 * norm), None, Execution::Sequential).unwrap();
        prop_assert!(found.value >= norm - 1e-6, "oracle {} below ‖T‖ = {norm}", found.value);
    }
}

#[test]
fn sweep_sizes_are_tight_and_monotone() {
    use mindiag::approx_solver::sweep_quotient_norm;
    use mindiag::operator_core::{GammaFamilySpec, Variant};
    let spec = GammaFamilySpec::new(0.5, 20, Variant::Tr).unwrap();
    let rows = sweep_quotient_norm(&spec, &[20, 40, 80], &sequential(), Execution::Sequential).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].upper >= w[0].upper - 1e-9);
    }
    for r in &rows {
        assert!(r.gap <= 1e-4 * r.upper, "n = {}: gap {}", r.n, r.gap);
        assert!(r.lambda_sum_residual <= 1e-6 * r.upper);
    }
}

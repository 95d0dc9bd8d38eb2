//! Entropic and exact optimal transport, barycenters and the COTA solver.

mod barycenter;
mod cota;
mod lp;
mod sinkhorn;

use ndarray::Array2;

pub use barycenter::{hamming_barycenter, wasserstein_barycenter};
pub use cota::{
    build_chain, chain_z, cota_gradient, cota_objective, product_coupling, solve_cota, ChainLink, ChainProblem,
    CotaWeights, ObjectiveTerms, SolveReport, SolverConfig,
};
pub use lp::{exact_transport_cost, lp_ot_oracle, LP_ORACLE_CAP};
pub use sinkhorn::{marginal_violation, project_cost, project_log_kernel, round_to_polytope, sinkhorn, Projection, ROUNDING_GATE};

/// Plans are dense `D' × D` matrices: rows abstracted, columns base.
pub type TransportPlan = Array2<f64>;

/// `H(P) = -Σ P (log P - 1)` with `0 log 0 = 0`.
pub fn entropy(p: &Array2<f64>) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * (x.ln() - 1.0)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn entropy_closed_forms() {
        let u = Array2::from_elem((2, 2), 0.25);
        assert!((entropy(&u) - (1.0 + 4f64.ln())).abs() < 1e-12);
        assert_eq!(entropy(&array![[1.0, 0.0], [0.0, 0.0]]), 1.0);
    }
}

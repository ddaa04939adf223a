//! Grid-valued Hamiltonians on a fixed support: the covering net the Gibbs
//! learner scans.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{gibbs_matrix, LocalHamiltonian};
use crate::oracle::trace_distance;
use crate::pauli::PauliString;

pub const DEFAULT_NET_BUDGET: u64 = 1_000_000;

/// Every Hamiltonian `sum_{P in support} h_P P` with each `h_P` on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianNet {
    n: usize,
    k: usize,
    support: Vec<PauliString>,
    eta: f64,
    grid: Vec<f64>,
}

/// `eta Z ∩ [-1, 1]` with the endpoints `+-1` added when they are off-grid.
pub fn grid_points(eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid(format!("grid step {eta} must be positive")));
    }
    let steps = (1.0 / eta + 1e-9).floor() as i64;
    let mut grid: Vec<f64> = (-steps..=steps).map(|j| (j as f64 * eta).clamp(-1.0, 1.0)).collect();
    if grid[0] > -1.0 + 1e-12 {
        grid.insert(0, -1.0);
    } else {
        grid[0] = -1.0;
    }
    let last = grid.len() - 1;
    if grid[last] < 1.0 - 1e-12 {
        grid.push(1.0);
    } else {
        grid[last] = 1.0;
    }
    Ok(grid)
}

/// Nearest grid point; an exact tie goes to the point closer to zero.
pub fn round_to_grid(grid: &[f64], value: f64) -> usize {
    let mut best = 0;
    for (i, &g) in grid.iter().enumerate() {
        let (d, db) = ((value - g).abs(), (value - grid[best]).abs());
        if d < db || (d == db && g.abs() < grid[best].abs()) {
            best = i;
        }
    }
    best
}

pub fn build_net(n: usize, k: usize, support: &[PauliString], eta: f64) -> Result<HamiltonianNet> {
    build_net_with_budget(n, k, support, eta, DEFAULT_NET_BUDGET)
}

pub fn build_net_with_budget(
    n: usize,
    k: usize,
    support: &[PauliString],
    eta: f64,
    budget: u64,
) -> Result<HamiltonianNet> {
    LocalHamiltonian::zero(n, k)?;
    let mut seen = std::collections::BTreeSet::new();
    for p in support {
        if p.num_qubits() != n {
            return Err(Error::QubitMismatch { left: n, right: p.num_qubits() });
        }
        if p.is_identity() || p.weight() > k {
            return Err(invalid(format!("support string {p} must have weight in 1..={k}")));
        }
        if !seen.insert(*p) {
            return Err(invalid(format!("support string {p} listed twice")));
        }
    }
    let grid = grid_points(eta)?;
    let needed = (grid.len() as f64).powi(support.len() as i32);
    if needed > budget as f64 {
        return Err(Error::Budget { what: "net enumeration", needed, budget: budget as f64 });
    }
    Ok(HamiltonianNet { n, k, support: support.to_vec(), eta, grid })
}

impl HamiltonianNet {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn locality(&self) -> usize {
        self.k
    }

    pub fn support(&self) -> &[PauliString] {
        &self.support
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len().pow(self.support.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficients of member `index`, one per support string. The last
    /// support string is the fastest-varying digit.
    pub fn coefficients(&self, index: usize) -> Vec<f64> {
        let g = self.grid.len();
        let mut rest = index;
        let mut out = vec![0.0; self.support.len()];
        for slot in out.iter_mut().rev() {
            *slot = self.grid[rest % g];
            rest /= g;
        }
        out
    }

    pub fn member(&self, index: usize) -> Result<LocalHamiltonian> {
        if index >= self.len() {
            return Err(invalid(format!("net index {index} out of range {}", self.len())));
        }
        let coeffs = self.coefficients(index);
        LocalHamiltonian::from_terms(self.n, self.k, self.support.iter().copied().zip(coeffs))
    }

    /// Index of the member obtained by rounding each supported coefficient of `h`.
    /// Coefficients of `h` off the support are ignored.
    pub fn round(&self, h: &LocalHamiltonian) -> usize {
        let g = self.grid.len();
        self.support
            .iter()
            .fold(0, |acc, p| acc * g + round_to_grid(&self.grid, h.coeff(p)))
    }

    /// Covering bound `200 beta n^k eta`.
    pub fn covering_bound(&self, beta: f64) -> f64 {
        200.0 * beta * (self.n as f64).powi(self.k as i32) * self.eta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCheck {
    pub index: usize,
    pub distance: f64,
    pub bound: f64,
}

/// Rounds `h` into the net and reports the exact trace distance between the
/// two Gibbs states alongside the covering bound.
pub fn net_covering_check(h: &LocalHamiltonian, net: &HamiltonianNet, beta: f64) -> Result<CoveringCheck> {
    let index = net.round(h);
    let member = net.member(index)?;
    let distance = trace_distance(&gibbs_matrix(h, beta)?, &gibbs_matrix(&member, beta)?)?;
    Ok(CoveringCheck { index, distance, bound: net.covering_bound(beta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn words(ws: &[&str]) -> Vec<PauliString> {
        ws.iter().map(|w| w.parse().unwrap()).collect()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid_points(0.5).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let g = grid_points(0.3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!((g[0], g[8]), (-1.0, 1.0));
        assert_eq!(grid_points(0.1).unwrap().len(), 21);
        assert_eq!(grid_points(2.0).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(grid_points(0.0).is_err());
    }

    #[test]
    fn rounding_ties_go_toward_zero() {
        let g = grid_points(0.5).unwrap();
        assert_eq!(g[round_to_grid(&g, 0.25)], 0.0);
        assert_eq!(g[round_to_grid(&g, -0.25)], 0.0);
        assert_eq!(g[round_to_grid(&g, 0.75)], 0.5);
        assert_eq!(g[round_to_grid(&g, 0.8)], 1.0);
    }

    #[test]
    fn single_support_net() {
        let net = build_net(1, 1, &words(&["Z"]), 0.5).unwrap();
        assert_eq!(net.len(), 5);
        let coeffs: Vec<f64> = (0..5).map(|i| net.coefficients(i)[0]).collect();
        assert_eq!(coeffs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(net.member(2).unwrap().is_empty());
        assert!(net.member(5).is_err());
    }

    #[test]
    fn members_are_valid_and_round_trip() {
        let net = build_net(2, 2, &words(&["ZI", "IZ", "ZZ"]), 0.25).unwrap();
        assert_eq!(net.len(), 729);
        for i in 0..net.len() {
            let m = net.member(i).unwrap();
            assert!(m.max_weight() <= 2 && m.max_abs_coeff() <= 1.0);
            assert_eq!(net.round(&m), i);
        }
    }

    #[test]
    fn budget_and_support_validation() {
        let support = words(&["XI", "IX", "ZZ", "XX", "YY"]);
        assert!(matches!(
            build_net_with_budget(2, 2, &support, 0.01, 1_000_000),
            Err(Error::Budget { .. })
        ));
        assert!(build_net(2, 1, &words(&["ZZ"]), 0.5).is_err());
        assert!(build_net(2, 2, &words(&["ZZ", "ZZ"]), 0.5).is_err());
        assert!(build_net(2, 2, &words(&["II"]), 0.5).is_err());
        assert!(build_net(2, 2, &words(&["Z"]), 0.5).is_err());
    }

    #[test]
    fn covering_check_on_and_off_grid() {
        let net = build_net(2, 2, &words(&["ZI", "IZ", "ZZ"]), 0.1).unwrap();
        let on = net.member(net.len() / 3).unwrap();
        let c = net_covering_check(&on, &net, 1.0).unwrap();
        assert_eq!(c.distance, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let terms: Vec<_> = net.support().iter().map(|p| (*p, rng.random_range(-1.0..1.0))).collect();
            let h = LocalHamiltonian::from_terms(2, 2, terms).unwrap();
            let beta = rng.random_range(0.1..3.0);
            let c = net_covering_check(&h, &net, beta).unwrap();
            assert!(c.distance <= c.bound, "{} > {}", c.distance, c.bound);
        }
    }
}

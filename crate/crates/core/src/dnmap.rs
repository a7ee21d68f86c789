//! Exterior flux `(-Δ)^s u_f` on the measurement window and the matching
//! energy pairing.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::forward::{solve_semilinear, SemilinearSolveReport, SolveOptions};
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Plain,
    Obstacle,
}

/// Flux on the `w2` nodes for one input at one amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnSample<T> {
    pub input_id: usize,
    pub epsilon: T,
    pub flux: Vec<T>,
    pub configuration: Configuration,
}

impl<T: Scalar> DnSample<T> {
    /// Solves with exterior data `epsilon * input` and records the `w2` flux.
    pub fn measure(
        op: &NonlocalOperator<T>,
        coeff: &CoefficientField<T>,
        input: &FieldVector<T>,
        input_id: usize,
        epsilon: T,
        opts: &SolveOptions<T>,
    ) -> Result<Self> {
        let report = solve_semilinear(op, coeff, &input.scaled(epsilon), opts)?;
        Ok(Self::from_solution(op, &report.solution, input_id, epsilon))
    }

    pub fn from_solution(op: &NonlocalOperator<T>, u: &FieldVector<T>, input_id: usize, epsilon: T) -> Self {
        let configuration = if op.grid().obstacle().is_some() { Configuration::Obstacle } else { Configuration::Plain };
        Self { input_id, epsilon, flux: op.apply_rows(u, op.grid().w2()), configuration }
    }
}

/// `Λ_a(f)` on `w2`: solves the forward problem and returns the flux sample.
pub fn dn_flux<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    exterior: &FieldVector<T>,
    opts: &SolveOptions<T>,
) -> Result<DnSample<T>> {
    DnSample::measure(op, coeff, exterior, 0, T::one(), opts)
}

fn check_exterior_test_function<T: Scalar>(op: &NonlocalOperator<T>, phi: &FieldVector<T>) -> Result<()> {
    let omega = op.grid().omega();
    if phi.len() != op.grid().n_nodes() {
        return Err(Error::Dimension("test function must span the grid".into()));
    }
    match omega.iter().find(|&i| phi[i] != T::zero()) {
        Some(i) => Err(Error::Precondition(format!("test function overlaps omega at node {i}"))),
        None => Ok(()),
    }
}

/// Discrete energy form `h uᵀ A φ + h Σ_Ω a(x, u) φ` for a solved `u`.
pub fn energy_pairing<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    u: &FieldVector<T>,
    phi: &FieldVector<T>,
) -> T {
    let h = op.grid().spacing();
    let a_phi = op.apply(phi);
    let bulk = u.iter().zip(a_phi.iter()).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let nonlinear = op
        .grid()
        .unknowns()
        .into_iter()
        .fold(T::zero(), |acc, i| acc + coeff.value_at(i, u[i]) * phi[i]);
    h * (bulk + nonlinear)
}

/// `h Σ_{φ_i ≠ 0} (A u)_i φ_i`, the flux-weighted sum over the support of `φ`.
pub fn flux_pairing<T: Scalar>(op: &NonlocalOperator<T>, u: &FieldVector<T>, phi: &FieldVector<T>) -> T {
    let a = op.matrix();
    let h = op.grid().spacing();
    let mut acc = T::zero();
    for (i, &p) in phi.iter().enumerate() {
        if p == T::zero() {
            continue;
        }
        let row = a.row(i).iter().zip(u.iter()).fold(T::zero(), |s, (&aij, &uj)| s + aij * uj);
        acc += row * p;
    }
    h * acc
}

/// `⟨Λ_a f, φ⟩` through the energy form, for `φ` supported off `omega`.
pub fn dn_pairing<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    exterior: &FieldVector<T>,
    phi: &FieldVector<T>,
    opts: &SolveOptions<T>,
) -> Result<T> {
    check_exterior_test_function(op, phi)?;
    let report: SemilinearSolveReport<T> = solve_semilinear(op, coeff, exterior, opts)?;
    Ok(energy_pairing(op, coeff, &report.solution, phi))
}

/// Both sides of the duality identity from one forward solve.
pub fn duality_pair<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    exterior: &FieldVector<T>,
    phi: &FieldVector<T>,
    opts: &SolveOptions<T>,
) -> Result<(T, T)> {
    check_exterior_test_function(op, phi)?;
    let u = solve_semilinear(op, coeff, exterior, opts)?.solution;
    Ok((energy_pairing(op, coeff, &u, phi), flux_pairing(op, &u, phi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operator::FractionalOrder;

    fn setup() -> (Grid<f64>, NonlocalOperator<f64>, CoefficientField<f64>) {
        let g = Grid::from_physical(4.0, 65, (-1.0, 1.0), (1.5, 2.5), (-2.5, -1.5), None).unwrap();
        let op = NonlocalOperator::assemble(&g, FractionalOrder::new(0.5).unwrap()).unwrap();
        let m = g.omega().len();
        let c = CoefficientField::new(&g, vec![vec![1.0; m], vec![3.0; m]]).unwrap();
        (g, op, c)
    }

    #[test]
    fn zero_input_zero_flux() {
        let (g, op, c) = setup();
        let s = dn_flux(&op, &c, &FieldVector::zeros(g.n_nodes()), &SolveOptions::default()).unwrap();
        assert!(s.flux.iter().all(|&v| v == 0.0));
        assert_eq!(s.flux.len(), g.w2().len());
        assert_eq!(s.configuration, Configuration::Plain);
    }

    #[test]
    fn zero_test_function_zero_pairing() {
        let (g, op, c) = setup();
        let f = FieldVector::supported_on(&g, g.w1(), |x| 1e-2 * (x - 2.0).cos());
        let v = dn_pairing(&op, &c, &f, &FieldVector::zeros(g.n_nodes()), &SolveOptions::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn test_function_on_omega_rejected() {
        let (g, op, c) = setup();
        let f = FieldVector::supported_on(&g, g.w1(), |_| 1e-2);
        let phi = FieldVector::supported_on(&g, g.omega(), |_| 1.0);
        assert!(matches!(dn_pairing(&op, &c, &f, &phi, &SolveOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn obstacle_configuration_is_tagged() {
        let (g, op, c) = setup();
        let d = crate::grid::IndexRange::new(g.omega().start + 3, g.omega().start + 6);
        let op = op.with_obstacle(Some(d)).unwrap();
        let f = FieldVector::supported_on(&g, g.w1(), |_| 1e-3);
        let s = dn_flux(&op, &c, &f, &SolveOptions::default()).unwrap();
        assert_eq!(s.configuration, Configuration::Obstacle);
    }
}

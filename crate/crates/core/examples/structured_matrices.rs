//! Confluent Vandermonde matrix, its determinant, and the Hankel factorization.

use confluent_prony::linalg::determinant;
use confluent_prony::structmat::{
    condition_number, confluent_vandermonde, confluent_vandermonde_det, factorization_residual,
    gautschi_inverse_bound, magnitude_block_matrix, MatrixNorm,
};
use confluent_prony::ConfluentModel;

fn main() -> confluent_prony::Result<()> {
    let model = ConfluentModel::from_real(&[0.4, -0.6], &[&[1.0, 0.3, -0.2], &[0.7, 0.9]])?;
    let c = model.num_magnitudes();
    let u = confluent_vandermonde(model.nodes(), model.multiplicities(), c);
    println!("U ({c}x{c}):\n{u:.4}");

    let closed = confluent_vandermonde_det(model.nodes(), model.multiplicities());
    println!("det U closed form {:.6e}, LU {:.6e}", closed.re, determinant(&u).re);
    println!("kappa_inf(U) = {:.3e}", condition_number(&u, MatrixNorm::Infinity)?);
    println!("kappa_inf(B) = {:.3e}", condition_number(&magnitude_block_matrix(&model), MatrixNorm::Infinity)?);
    println!("relative residual of M_C = U B U^T: {:.2e}", factorization_residual(&model));

    let simple = [0.4, -0.6, 0.9].map(|x| num_complex::Complex64::new(x, 0.0));
    println!("inverse Vandermonde bound for simple nodes: {:.3}", gautschi_inverse_bound(&simple)?);
    Ok(())
}

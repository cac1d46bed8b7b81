//! Sparsify a single posterior draw of `α` with the SAVS rule.
use tvp_sparse::savs::{compute_pips, savs_coefficient, savs_sparsify};

fn main() -> tvp_sparse::Result<()> {
    // a strong signal, a small one and a small one on a high-leverage column
    let alpha = [1.2, 0.05, 0.05, -0.4];
    let norms = [200.0, 200.0, 1e5, 50.0];
    let draw = savs_sparsify(&alpha, &norms)?;
    for ((a, g), n) in alpha.iter().zip(&draw.gamma_bar).zip(&norms) {
        println!("alpha {a:+.3}  |X|^2 {n:>8}  ->  {g:+.4}");
    }
    println!("retained {} of {}", draw.n_retained(), alpha.len());

    println!("scalar rule: {:+.4}", savs_coefficient(0.3, 10.0));

    let draws = [savs_sparsify(&alpha, &norms)?, savs_sparsify(&[1.1, 0.2, 0.0, -0.05], &norms)?];
    let pips = compute_pips(draws.iter())?;
    println!("PIPs: {:?}", pips.pip);
    Ok(())
}

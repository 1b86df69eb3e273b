use wickchaos::models::make_log_spectral;
use wickchaos::pathgen::{CirculantEmbedding, Grid};

fn main() {
    let m = make_log_spectral();
    for n in [256usize, 1024] {
        let grid = Grid::new(1.0, n).unwrap();
        match CirculantEmbedding::new(&m, grid) {
            Ok(g) => println!("n={n}: ok, min eig ratio {:.3e}", g.min_eig_ratio()),
            Err(e) => println!("n={n}: ERR {e}"),
        }
    }
    // smoothness of increment covariance near lag*delta ~ where pieces switch
    let grid = Grid::new(1.0, 256).unwrap();
    let d = grid.delta();
    for lag in [0usize, 1, 2, 3, 20, 100, 255, 256] {
        let c = wickchaos::pathgen::increment_covariance(&m, d, lag).unwrap();
        println!("lag {lag}: cov {c:.8e}");
    }
}

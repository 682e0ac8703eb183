use qsdist::mgf::*;
use qsdist::Side;

#[test]
#[ignore]
fn default_solve_probe() {
    let t0 = std::time::Instant::now();
    let cfg = SolverConfig::default();
    let table = solve_mgf(&cfg).unwrap();
    println!("solve took {:.2?} iters {} residual {:e}", t0.elapsed(), table.iteration_count, table.residual);
    let c = table.center();
    println!("log psi(10) = {}", table.log_psi.last().unwrap());
    println!("log psi(-10) = {}", table.log_psi[0]);
    println!("log psi(5) = {}", table.log_psi[c + (table.t_grid.len()-1-c)/2]);
    println!("psi'(0) = {:e}", table.psi_prime_at_zero());
    println!("psi''(0) = {} (target 0.42026373260709455)", table.psi_second_at_zero());
    let left = find_lemma_constant(Side::Left, &table).unwrap();
    let right = find_lemma_constant(Side::Right, &table).unwrap();
    println!("lemma left: a = {}, slack_min = {:e}", left.a, left.slack_min);
    println!("lemma right: a = {}, slack_min = {:e}", right.a, right.slack_min);
    // convexity / jensen probes
    let min_lp = table.log_psi.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("min log psi = {:e}", min_lp);
    let mut min_dd = f64::INFINITY;
    for i in 1..table.log_psi.len()-1 {
        min_dd = min_dd.min(table.log_psi[i+1] - 2.0*table.log_psi[i] + table.log_psi[i-1]);
    }
    println!("min second difference = {:e}", min_dd);
}

use borcherds::arith::*;
use borcherds::lattice::find_lattice;
use borcherds::local::DensityEngine;
use num_rational::BigRational;
use num_traits::Zero;

fn main() {
    let spec = find_lattice("n3_2_7p1_4p4").unwrap();
    let mut eng = DensityEngine::new(&spec.gram);
    let gamma = vec![BigRational::zero(); 5];
    for n in [1i128, 4, 5, 8, 9, 12] {
        let d = eng.local_density(&gamma, &big_int_ratio(n), 2).unwrap();
        println!("quintic dens2({}) = {}", n, fmt_ratio(&d));
    }
}

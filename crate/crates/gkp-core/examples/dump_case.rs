use gkp_core::algebra::{matrix_element, C64, CodewordSpec, Logical, MonomialId};
use gkp_core::fock::{apply_monomial, codeword_vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_code(rng: &mut ChaCha8Rng, u: Logical, m: usize, r: f64) -> CodewordSpec {
    let coeffs: Vec<C64> = (0..2 * m + 1)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    CodewordSpec::new(u, m, r, coeffs).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260811);
    for trial in 0..=27 {
        let m = rng.gen_range(0..=3);
        let r = rng.gen_range(0.1..=1.2);
        let ub = if rng.gen_bool(0.5) { Logical::Zero } else { Logical::One };
        let uk = if rng.gen_bool(0.5) { Logical::Zero } else { Logical::One };
        let bra = random_code(&mut rng, ub, m, r);
        let ket = random_code(&mut rng, uk, m, r);
        if trial == 27 {
            println!("m={} r={:.17} ub={:?} uk={:?}", m, r, ub, uk);
            println!("bra={:?}", bra.coeffs());
            println!("ket={:?}", ket.coeffs());
            let analytic = matrix_element(&bra, &ket, MonomialId::N4, true).unwrap();
            println!("analytic {analytic}");
            for nt in [300usize, 400, 500] {
                let vb = codeword_vector(&bra, nt).unwrap();
                let vk = codeword_vector(&ket, nt).unwrap();
                let numeric = vb.amps().dotc(&apply_monomial(MonomialId::N4, vk.amps()));
                println!("oracle n={nt}: {numeric}  diff {:.3e}", (analytic - numeric).norm());
            }
        }
    }
}

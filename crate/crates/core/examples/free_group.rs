//! Free group on a swapped pair a, b and shifted letters s_k. Terms of
//! the weak-mixing averages vanish after finitely many steps, while
//! separate orbits never commute.

use relmix::freegrp::{commutator_norm, cond_d, rwm_term_free, vanishing_horizon, GroupAlgElement, ShiftPermAut, Word};

fn main() -> relmix::Result<()> {
    let aut = ShiftPermAut::new(vec![1, 0])?;
    let c: GroupAlgElement = "2*[s0 a] + [b] + -1*[s1^-1 a]".parse()?;
    let a = c.sub(&cond_d(&c));
    let b: GroupAlgElement = "[a s3^-1] + 1/2*[a]".parse()?;
    println!("c = {c}\nD(c) = {}\na = c - D(c) = {a}\nb = {b}", cond_d(&c));

    for n in 0..=6 {
        println!("n = {n}: {}", rwm_term_free(&aut, &a, &b, n)?);
    }
    println!("zero for all n > {}", vanishing_horizon(&aut, &a, &b)?);

    let (g, h): (Word, Word) = ("s0".parse()?, "a".parse()?);
    for n in 0..3 {
        println!(
            "||[alpha^{n}(l({g})), l({h})] delta_1|| = {:.6}",
            commutator_norm(&aut, &g, &h, n)
        );
    }
    let k: Word = "a b".parse()?;
    println!(
        "||[alpha^2(l({k})), l({k})] delta_1|| = {}",
        commutator_norm(&aut, &k, &k, 2)
    );
    Ok(())
}

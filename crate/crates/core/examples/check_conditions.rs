//! Boundedness conditions and exponent windows for a few parameter sets.
//!
//!     cargo run --example check_conditions

use singular_ks::model::{self, Params};

fn main() -> singular_ks::Result<()> {
    let cases = [
        (1.0, 0.5, 1),
        (1.0, 0.5, 2),
        (0.3, 1.2, 1),
        (2.5, 3.0, 1),
        (1.0, 1.2, 2),
    ];
    println!(
        "{:>5} {:>5} {:>2} | {:>6} {:>6} {:>9} {:>9}",
        "a", "chi", "N", "a_ok", "chi_ok", "margin_a", "margin_chi"
    );
    for (a, chi, n) in cases {
        let r = model::check_boundedness_conditions(&Params::new(a, 1.0, chi, n)?);
        println!(
            "{a:>5} {chi:>5} {n:>2} | {:>6} {:>6} {:>9.4} {:>9.4}",
            r.cond_a_ok, r.cond_chi_ok, r.margin_a, r.margin_chi
        );
    }

    let (a, chi) = (1.0, 1.0);
    let pg = model::p_g_range(a, chi)?;
    println!(
        "\np_g range at a={a}, chi={chi}: ({:.4}, {:.4}), inside (0,1): ({:.4}, {:.4})",
        pg.window.lo, pg.window.hi, pg.unit_overlap.lo, pg.unit_overlap.hi
    );
    let p = pg.unit_overlap.midpoint();
    println!("q1_plus({p:.3}) = {:.6}", model::q1_plus(p, chi)?);

    let q2 = model::q2_range(2.0, 0.5)?;
    println!("q2 range at p=2, chi=0.5: ({:.6}, {:.6})", q2.lo, q2.hi);

    for n in [1, 2, 3] {
        let k = model::select_kappa_q0(&Params::new(1.0, 1.0, 0.5, n)?)?;
        println!(
            "N={n}: kappa {:.4} in ({:.2}, {:.2}), q0 {:.4}",
            k.kappa, k.kappa_window.lo, k.kappa_window.hi, k.q0
        );
    }
    Ok(())
}

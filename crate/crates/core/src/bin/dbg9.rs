use thurston_lab::curves::{Slope, SurfaceKind};
use thurston_lab::geom::*;
use thurston_lab::holonomy::*;
use thurston_lab::lab::*;
use thurston_lab::num::{Real, Vec2};

fn main() {
    let bits = 320;
    let ctrl = EnumerationControl::with_depth(12);
    for (kind, l, tau) in [
        (SurfaceKind::OncePuncturedTorus, 8.5, 0.3),
        (SurfaceKind::FourPuncturedSphere, 8.2, 0.5),
    ] {
        let ctx = PrecisionContext::with_bits(bits);
        let x = build_point(kind, Real::from_f64(bits, l), Real::from_f64(bits, tau), &ctx).unwrap();
        for window in [3..=4i128, -4..=-3i128] {
            println!("== {:?} window {:?}", kind, window);
            match longest_facet_correspondence(&x, &Slope::infinity(), &Slope::zero(), window, &ctrl) {
                Ok(rep) => {
                    for r in &rep.rows {
                        println!("  n={} facets={} longest={} expected={} margin={} pass={}", r[0], r[2], r[3], r[4], r[5], r[6]);
                    }
                }
                Err(e) => println!("  ERROR: {e}"),
            }
        }
    }
    // converged flag anatomy for F(2,1) on the torus point
    let ctx = PrecisionContext::with_bits(bits);
    let x = build_point(SurfaceKind::OncePuncturedTorus, Real::from_f64(bits, 8.5), Real::from_f64(bits, 0.3), &ctx).unwrap();
    let table = NormTable::build(&x, 12);
    let f = facet_from_table(&x, &table, &Slope::new(2, 1).unwrap(), &ctrl).unwrap();
    let diff = f.v_plus.sub(&f.v_minus);
    let n1 = table.norm(&diff, &ctrl).unwrap();
    println!("norm of facet diff: {:.6e} converged {} witness {}", n1.value.to_f64(), n1.converged, n1.witness);
    // per-depth norm values
    let mut best = vec![f64::NEG_INFINITY; 13];
    for e in &table.entries {
        let v = e.dlog.pair(&diff).to_f64();
        if v > best[e.depth as usize] { best[e.depth as usize] = v; }
    }
    let mut run = f64::NEG_INFINITY;
    for (d, b) in best.iter().enumerate() {
        run = run.max(*b);
        println!("  depth {d}: running max {run:.9e}");
    }
}

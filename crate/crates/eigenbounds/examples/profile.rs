//! Phase timing for one rigorous constants cell. Dev tool, not part of the
//! published interface.

use eigenbounds::assembly::{projection_pencil, ElementKind, Pencil};
use eigenbounds::eigen::{largest_reversed_mu, solve_reversed_pencil};
use eigenbounds::mesh::refined;
use eigenbounds::rigor::{self, Interval};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let domain = args.get(1).map(|s| s.as_str()).unwrap_or("K1").parse().unwrap();
    let level: u32 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5);
    let degree: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0);
    let full: bool = args.get(4).is_some();

    let t0 = Instant::now();
    let mesh = refined(domain, level);
    println!("mesh: {:?} cells={}", t0.elapsed(), mesh.cells.len());

    for elem in [ElementKind::CrouzeixRaviart, ElementKind::LagrangeP2] {
        let t = Instant::now();
        let p: Pencil<Interval> = projection_pencil(&mesh, elem, degree).unwrap();
        println!("{:?} interval assembly: {:?} n={}", elem, t.elapsed(), p.dim());

        let pf = p.approx();
        let t = Instant::now();
        let (mu1, l1) = largest_reversed_mu(&pf.a, &pf.b).unwrap().unwrap();
        println!("  power iteration: {:?} lambda1={l1:.12} mu1={mu1:.9}", t.elapsed());
        if full {
            let t = Instant::now();
            let rev = solve_reversed_pencil(&pf.b, &pf.a).unwrap();
            println!(
                "  full solve: {:?} lambda1={:.12} kernel={}",
                t.elapsed(),
                rev.lambda[0],
                rev.kernel_count
            );
        }

        for eps in [1e-10, 1e-8, 1e-6, 1e-4] {
            let t = Instant::now();
            let sigma = l1 * (1.0 - eps);
            let cert = rigor::verified_inertia(&p.a, &p.b, sigma);
            println!(
                "  lower eps={eps:.0e}: {:?} certified={} below={} (need 0)",
                t.elapsed(),
                cert.certified,
                cert.below
            );
            if cert.certified && cert.below == 0 {
                break;
            }
        }
        for eps in [1e-10, 1e-8, 1e-6, 1e-4, 1e-2] {
            let t = Instant::now();
            let sigma = l1 * (1.0 + eps);
            let cert = rigor::verified_inertia(&p.a, &p.b, sigma);
            println!(
                "  upper eps={eps:.0e}: {:?} certified={} below={} (need >= 1)",
                t.elapsed(),
                cert.certified,
                cert.below
            );
            if cert.certified && cert.below >= 1 {
                break;
            }
        }
    }
}

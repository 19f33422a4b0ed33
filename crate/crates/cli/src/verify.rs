//! Golden values checked by `rmtlab verify`.

use rmtlab::eigen::{eig_sym, DenseMatrix};
use rmtlab::entries::EntryDistribution;
use rmtlab::profiles::VarianceProfile;
use rmtlab::quadrature::adaptive_simpson;
use rmtlab::semicircle::{cdf, density, moment};
use rmtlab::walks::{enumerate_walks, moment_gap, shape_sum_bound_check, RootedGraph};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name, pass, detail: detail.into() }
}

pub fn run_checks() -> Vec<Check> {
    let rad = EntryDistribution::rademacher();
    let mut out = Vec::new();

    let f0 = density(0.0);
    out.push(check("semicircle density at 0", (f0 - std::f64::consts::FRAC_1_PI).abs() < 1e-15, format!("{f0}")));
    let f1 = density(1.0);
    out.push(check("semicircle density at 1", (f1 - 0.2756644477).abs() < 1e-10, format!("{f1}")));
    let q = adaptive_simpson(density, -2.0, 1.0, 1e-13);
    out.push(check("semicircle cdf vs quadrature", (cdf(1.0) - q).abs() < 1e-10, format!("{} vs {q}", cdf(1.0))));

    let cats: Vec<u64> = [2, 4, 6, 8].iter().map(|&k| moment(k).unwrap_or(0)).collect();
    out.push(check("catalan moments", cats == [1, 2, 5, 14] && moment(40) == Ok(6_564_120_420), format!("{cats:?}")));

    let clique = enumerate_walks(&RootedGraph::clique(3).expect("d = 3"), 6).and_then(|r| {
        let m = r.moment(&rad)?;
        Ok((r.even_walks, m.to_string()))
    });
    out.push(match clique {
        Ok((even, m)) => check("clique sixth moment", even == 93 && m == "31/9", format!("{m} ({even} even walks)")),
        Err(e) => check("clique sixth moment", false, e.to_string()),
    });

    let tree = enumerate_walks(&RootedGraph::truncated_tree(3, 3).expect("d = 3"), 6).and_then(|r| {
        let m = r.moment(&rad)?;
        Ok((r.even_walks, m.to_string()))
    });
    out.push(match tree {
        Ok((even, m)) => check("tree walk count", even == 87 && m == "29/9", format!("{m} ({even} even walks)")),
        Err(e) => check("tree walk count", false, e.to_string()),
    });

    let gaps: Vec<String> = (2..=6usize)
        .map(|d| moment_gap(d, 6, &rad).map(|g| g.to_string()).unwrap_or_else(|e| e.to_string()))
        .collect();
    let expected: Vec<String> = (2..=6i64)
        .map(|d| {
            let (num, den) = (d * (d - 1), d * d * d);
            let g = gcd(num, den);
            format!("{}/{}", num / g, den / g)
        })
        .collect();
    out.push(check("moment gap d(d-1)/d^3", gaps == expected, gaps.join(" ")));

    let mut k5 = DenseMatrix::zeros(5);
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                k5.set(i, j, 1.0);
            }
        }
    }
    let k5_ok = eig_sym(&k5).map(|s| {
        (s.eigenvalues[0] - 4.0).abs() < 1e-10 && s.eigenvalues[1..].iter().all(|l| (l + 1.0).abs() < 1e-10)
    });
    out.push(check("K5 spectrum", k5_ok.unwrap_or(false), "{4, -1, -1, -1, -1}"));

    let bound = VarianceProfile::full_wigner(6)
        .map_err(|e| e.to_string())
        .and_then(|p| shape_sum_bound_check(&p, 4, 10).map_err(|e| e.to_string()));
    out.push(match bound {
        Ok(b) => check("walk-sum bound", b.worst_ratio <= 1.0, format!("worst ratio {}", b.worst_ratio)),
        Err(e) => check("walk-sum bound", false, e),
    });
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

//! Verification checks against a trained model: invertibility, Jacobian
//! exactness, intersection invertibility, inequality maintenance, and the
//! isotropy report. Each check prints its measured value next to its
//! tolerance so failures are diagnosable from the report alone.

use std::fmt::Write as _;

use priorflow::control::equal_density_point_on_segment;
use priorflow::flow::FlowModel;
use priorflow::priors::{gaussian_log_pdf, isotropy_stats, sample};
use priorflow::Rng;

pub struct Profile {
    pub round_trip_tol: f64,
    pub jacobian_rel_tol: f64,
    pub intersection_rel_tol: f64,
}

impl Profile {
    pub fn parse(name: &str) -> Result<Self, String> {
        match name {
            "default" => Ok(Self {
                round_trip_tol: 1e-6,
                jacobian_rel_tol: 1e-3,
                intersection_rel_tol: 1e-9,
            }),
            "strict" => Ok(Self {
                round_trip_tol: 1e-8,
                jacobian_rel_tol: 1e-4,
                intersection_rel_tol: 1e-10,
            }),
            other => Err(format!("unknown profile `{other}` (default | strict)")),
        }
    }
}

pub struct Report {
    pub text: String,
    pub all_passed: bool,
}

/// log |det J| from a central-difference Jacobian, LU-factorized with
/// partial pivoting. Independent of the model's analytic log-determinant.
fn numerical_log_abs_det(model: &FlowModel, x: &[f64]) -> f64 {
    let n = x.len();
    let h = 1e-6;
    let mut jac = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut plus = x.to_vec();
        plus[col] += h;
        let mut minus = x.to_vec();
        minus[col] -= h;
        let fp = model.forward(&plus).unwrap().0;
        let fm = model.forward(&minus).unwrap().0;
        for row in 0..n {
            jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    let mut det: f64 = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| jac[a][col].abs().partial_cmp(&jac[b][col].abs()).unwrap())
            .unwrap();
        if pivot != col {
            jac.swap(pivot, col);
            det = -det;
        }
        det *= jac[col][col];
        for row in col + 1..n {
            let factor = jac[row][col] / jac[col][col];
            for k in col..n {
                let v = jac[col][k];
                jac[row][k] -= factor * v;
            }
        }
    }
    det.abs().ln()
}

pub fn run(model: &FlowModel, profile: &Profile, seed: u64) -> priorflow::Result<Report> {
    let mut text = String::new();
    let mut all_passed = true;
    let mut rng = Rng::new(seed);
    let attrs: Vec<String> = model.attributes().map(str::to_string).collect();

    let mut check = |text: &mut String, name: &str, measured: f64, tol: f64, pass: bool| {
        writeln!(
            text,
            "check {name}: measured {measured:.3e} (tol {tol:.0e}) ... {}",
            if pass { "pass" } else { "FAIL" }
        )
        .unwrap();
        all_passed &= pass;
    };

    // Round-trip error over prior-space draws from every attribute.
    let mut worst_rt: f64 = 0.0;
    for attr in &attrs {
        let prior = model.prior(attr)?;
        for _ in 0..(1000 / attrs.len().max(1)) {
            let z = sample(prior, 1.0, &mut rng)?;
            let x = model.inverse(&z)?;
            let (z_back, _) = model.forward(&x)?;
            for (a, b) in z.iter().zip(&z_back) {
                worst_rt = worst_rt.max((a - b).abs());
            }
        }
    }
    check(
        &mut text,
        "invertibility (max round-trip error, 1000 points)",
        worst_rt,
        profile.round_trip_tol,
        worst_rt <= profile.round_trip_tol,
    );

    // Analytic log-determinant against a finite-difference Jacobian.
    let mut worst_jac: f64 = 0.0;
    for i in 0..100 {
        let attr = &attrs[i % attrs.len()];
        let z = sample(model.prior(attr)?, 1.0, &mut rng)?;
        let x = model.inverse(&z)?;
        let (_, analytic) = model.forward(&x)?;
        let numeric = numerical_log_abs_det(model, &x);
        worst_jac = worst_jac.max((analytic - numeric).abs() / numeric.abs().max(1e-3));
    }
    check(
        &mut text,
        "jacobian (max relative log-det error, 100 points)",
        worst_jac,
        profile.jacobian_rel_tol,
        worst_jac <= profile.jacobian_rel_tol,
    );

    // Intersection invertibility: equal prior densities must stay equal as
    // latent densities for every attribute pair with an intersection.
    let mut worst_gap: f64 = 0.0;
    let mut pairs_checked = 0;
    for (i, a) in attrs.iter().enumerate() {
        for b in attrs.iter().skip(i + 1) {
            let ga = model.prior(a)?;
            let gb = model.prior(b)?;
            if let Some(z) = equal_density_point_on_segment(ga, gb)? {
                let (_, lp_a) = model.log_prob_at_prior_point(a, &z)?;
                let (_, lp_b) = model.log_prob_at_prior_point(b, &z)?;
                let rel = (lp_a.exp() - lp_b.exp()).abs() / lp_a.exp().max(f64::MIN_POSITIVE);
                worst_gap = worst_gap.max(rel);
                pairs_checked += 1;
            }
        }
    }
    check(
        &mut text,
        &format!("intersection invertibility ({pairs_checked} attribute pairs)"),
        worst_gap,
        profile.intersection_rel_tol,
        worst_gap <= profile.intersection_rel_tol,
    );

    // Inequality maintenance: prior-space density ordering carries over to
    // latent space at sampled points, for every attribute pair.
    let mut violations = 0usize;
    let mut comparisons = 0usize;
    for _ in 0..1000 {
        let attr = &attrs[comparisons % attrs.len()];
        let z = sample(model.prior(attr)?, 1.2, &mut rng)?;
        for (i, a) in attrs.iter().enumerate() {
            for b in attrs.iter().skip(i + 1) {
                let prior_diff =
                    gaussian_log_pdf(model.prior(a)?, &z)? - gaussian_log_pdf(model.prior(b)?, &z)?;
                let (_, lp_a) = model.log_prob_at_prior_point(a, &z)?;
                let (_, lp_b) = model.log_prob_at_prior_point(b, &z)?;
                if prior_diff.signum() != (lp_a - lp_b).signum() {
                    violations += 1;
                }
                comparisons += 1;
            }
        }
    }
    check(
        &mut text,
        &format!("inequality maintenance (sign violations over {comparisons} comparisons)"),
        violations as f64,
        0.5,
        violations == 0,
    );

    // Isotropy report (informational): per-attribute sigma statistics.
    writeln!(text, "isotropy report (sigma statistics per attribute):").unwrap();
    writeln!(text, "  attribute          max      min      avg      std").unwrap();
    for attr in &attrs {
        let stats = isotropy_stats(model.prior(attr)?);
        writeln!(
            text,
            "  {attr:<16} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            stats.max, stats.min, stats.avg, stats.std
        )
        .unwrap();
    }

    Ok(Report { text, all_passed })
}

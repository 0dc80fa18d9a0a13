//! Property-based checks of the library's structural invariants over
//! randomized inputs.

use proptest::prelude::*;

use priorflow::control::{interpolate_distribution, intersection_center_1d, IntersectionCase};
use priorflow::flow::{FlowModel, FlowShape};
use priorflow::metrics::{surpass_probability, ExclusivePair, Gaussian1d};
use priorflow::numerics::Activation;
use priorflow::priors::{gaussian_cdf_1d, gaussian_log_pdf, DiagonalGaussian};
use priorflow::synthlab::{dataset_from_reader, dataset_to_string, LatentDataset};

fn small_flow(dim: usize, seed: u64) -> FlowModel {
    let shape = FlowShape {
        dim,
        num_layers: 4,
        hidden: vec![8],
        activation: Activation::Tanh,
        scale_clamp: 2.0,
    };
    FlowModel::random_init(&shape, seed).unwrap()
}

proptest! {
    /// Forward then inverse recovers the input everywhere.
    #[test]
    fn flow_round_trip(
        seed in 0u64..1000,
        x in prop::collection::vec(-5.0f64..5.0, 2..=4),
    ) {
        let model = small_flow(x.len(), seed);
        let (z, log_det_fwd) = model.forward(&x).unwrap();
        let (back, log_det_inv) = model.inverse_with_log_det(&z).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        // The inverse log-determinant is the negated forward one.
        prop_assert!((log_det_fwd + log_det_inv).abs() <= 1e-9);
    }

    /// log p(x|a1) - log p(x|a2) equals the prior-space difference exactly:
    /// the Jacobian term cancels.
    #[test]
    fn change_of_variables_consistency(
        seed in 0u64..500,
        x in prop::collection::vec(-4.0f64..4.0, 2..=2),
        mu1 in -2.0f64..2.0,
        mu2 in -2.0f64..2.0,
        s1 in 0.3f64..2.0,
        s2 in 0.3f64..2.0,
    ) {
        let mut model = small_flow(2, seed);
        let g1 = DiagonalGaussian::new(vec![mu1, -mu1], vec![s1, s2]).unwrap();
        let g2 = DiagonalGaussian::new(vec![mu2, mu2 * 0.5], vec![s2, s1]).unwrap();
        model.register_attribute("a1", g1.clone()).unwrap();
        model.register_attribute("a2", g2.clone()).unwrap();
        let diff = model.log_prob("a1", &x).unwrap() - model.log_prob("a2", &x).unwrap();
        let (z, _) = model.forward(&x).unwrap();
        let prior_diff =
            gaussian_log_pdf(&g1, &z).unwrap() - gaussian_log_pdf(&g2, &z).unwrap();
        prop_assert!((diff - prior_diff).abs() <= 1e-10, "{diff} vs {prior_diff}");
    }

    /// Interpolated distributions stay valid diagonal Gaussians with the
    /// closed-form mean.
    #[test]
    fn interpolation_closure(
        mu_a in prop::collection::vec(-3.0f64..3.0, 2..=3),
        s_a in prop::collection::vec(0.2f64..2.0, 2..=3),
        s_b in prop::collection::vec(0.2f64..2.0, 2..=3),
        w in -0.5f64..1.5,
    ) {
        let dim = mu_a.len().min(s_a.len()).min(s_b.len());
        let a = DiagonalGaussian::new(mu_a[..dim].to_vec(), s_a[..dim].to_vec()).unwrap();
        let b = DiagonalGaussian::new(vec![0.5; dim], s_b[..dim].to_vec()).unwrap();
        let out = interpolate_distribution(&[&a, &b], &[w, 1.0 - w]).unwrap();
        prop_assert!(out.std().iter().all(|&s| s > 0.0));
        for d in 0..dim {
            let expected = w * a.mean()[d] + (1.0 - w) * b.mean()[d];
            prop_assert!((out.mean()[d] - expected).abs() <= 1e-12);
        }
    }

    /// The intersection solve never sees a negative discriminant, and any
    /// selected root is a genuine equal-density point.
    #[test]
    fn intersection_well_posed(
        mu_a in -3.0f64..3.0,
        mu_b in -3.0f64..3.0,
        s_a in 0.1f64..3.0,
        s_b in 0.1f64..3.0,
    ) {
        prop_assume!(mu_a != mu_b || s_a != s_b);
        let r = intersection_center_1d((mu_a, s_a), (mu_b, s_b)).unwrap();
        if r.case != IntersectionCase::NoRootInInterval {
            let pdf = |mu: f64, s: f64, z: f64| {
                ((-0.5 * ((z - mu) / s).powi(2)).exp()) / (s * (2.0 * std::f64::consts::PI).sqrt())
            };
            let pa = pdf(mu_a, s_a, r.z_hat);
            let pb = pdf(mu_b, s_b, r.z_hat);
            prop_assert!((pa - pb).abs() / pa <= 1e-9, "{pa} vs {pb}");
        }
        // alpha* always reconstructs the center.
        let rebuilt = r.alpha_star * mu_a + (1.0 - r.alpha_star) * mu_b;
        if mu_a != mu_b {
            prop_assert!((rebuilt - r.z_hat).abs() <= 1e-9 * (1.0 + r.z_hat.abs()));
        }
    }

    /// The CDF is monotone and bounded.
    #[test]
    fn cdf_monotone_bounded(
        mu in -3.0f64..3.0,
        sigma in 0.1f64..3.0,
        t1 in -20.0f64..20.0,
        t2 in -20.0f64..20.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let p_lo = gaussian_cdf_1d(mu, sigma, lo).unwrap();
        let p_hi = gaussian_cdf_1d(mu, sigma, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&p_lo));
        prop_assert!((0.0..=1.0).contains(&p_hi));
        prop_assert!(p_lo <= p_hi);
    }

    /// Surpass probability stays in [0, 1] for any valid setup, including
    /// degenerate point samplers.
    #[test]
    fn surpass_probability_bounded(
        t_mu in -3.0f64..3.0,
        t_s in 0.1f64..2.5,
        i_mu in -3.0f64..3.0,
        i_s in 0.1f64..2.5,
        s_mu in -3.0f64..3.0,
        s_s in 0.0f64..2.0,
    ) {
        prop_assume!(t_mu != i_mu || t_s != i_s);
        let pair = ExclusivePair::new(
            Gaussian1d::new(t_mu, t_s),
            Gaussian1d::new(i_mu, i_s),
            Gaussian1d::new(s_mu, s_s),
        )
        .unwrap();
        let p = surpass_probability(&pair).unwrap();
        prop_assert!((0.0..=1.0).contains(&p), "P = {p}");
    }

    /// Dataset records survive the text format losslessly.
    #[test]
    fn dataset_text_round_trip(
        coords in prop::collection::vec(
            prop::collection::vec(-1e6f64..1e6, 3),
            1..20,
        ),
        attr in "[a-zA-Z0-9_\\- ]{1,12}",
    ) {
        let records: Vec<(Vec<f64>, String)> = coords
            .into_iter()
            .map(|x| (x, attr.clone()))
            .collect();
        let ds = LatentDataset::from_records(records).unwrap();
        let text = dataset_to_string(&ds);
        let back = dataset_from_reader(std::io::Cursor::new(text.into_bytes())).unwrap();
        prop_assert_eq!(ds.records(), back.records());
    }
}

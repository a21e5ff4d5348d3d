use widthlab::bumps::{build_family, Exponent, FamilySpec, Normalization};
use widthlab::experiments::{fixed_b_levels, FixedBConfig};
use widthlab::refdomain::{FlowField, MapKind, ReferenceMap};
use widthlab::widths::{certificate_from_curves, family_curves};

fn ratios(cfg: &FixedBConfig) -> Vec<f64> {
    let levels = fixed_b_levels(cfg).unwrap();
    levels.windows(2).map(|w| w[1].certificate.epsilon / w[0].certificate.epsilon).collect()
}

#[test]
fn epsilon_halving_matches_exponent_in_two_dimensions() {
    let cfg = FixedBConfig::default();
    let want = 2f64.powi(-3);
    for r in ratios(&cfg) {
        assert!((r - want).abs() <= 0.15 * want, "ratio {r} vs {want}");
    }
}

#[test]
fn epsilon_halving_matches_exponent_in_three_dimensions() {
    let cfg = FixedBConfig {
        d: 3,
        map: MapKind::Curved { amplitude: 0.1 },
        hs: vec![0.1, 0.05],
        grid_points: 21,
        ..FixedBConfig::default()
    };
    let want = 2f64.powi(-4);
    let r = ratios(&cfg);
    assert_eq!(r.len(), 1);
    assert!((r[0] - want).abs() <= 0.15 * want, "ratio {} vs {want}", r[0]);
}

#[test]
fn higher_smoothness_steepens_the_rate() {
    let cfg = FixedBConfig {
        s_minus: 2,
        s_plus: 1,
        map: MapKind::Identity,
        ..FixedBConfig::default()
    };
    let want = 2f64.powi(-4);
    for r in ratios(&cfg) {
        assert!((r - want).abs() <= 0.15 * want, "ratio {r} vs {want}");
    }
}

#[test]
fn finite_exponent_changes_the_scaling() {
    // per-bump W^{1,1} normalization of g_- gains a factor h^{-1} on a 1D face
    let field = FlowField::new(ReferenceMap::identity(2).unwrap(), 1).unwrap();
    let grid: Vec<Vec<f64>> = (0..201).map(|k| vec![-0.5 + k as f64 / 200.0]).collect();
    let eps: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let spec = FamilySpec {
                h,
                s_minus: 1,
                s_plus: 1,
                p: Exponent::Finite(1.0),
                d_bar: 1,
                normalization: Normalization::EachBump,
            };
            let family = build_family(&field, spec).unwrap();
            certificate_from_curves(&family_curves(&family, &field, &grid).unwrap())
                .unwrap()
                .epsilon
        })
        .collect();
    let want = 2f64.powi(-2);
    for w in eps.windows(2) {
        let r = w[1] / w[0];
        assert!((r - want).abs() <= 0.15 * want, "ratio {r} vs {want}");
    }
}

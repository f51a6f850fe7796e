//! Cross-method consistency of the invariant measure: the Ulam left
//! eigenvector and a long-orbit Birkhoff histogram must agree in L1 up to
//! their combined sampling noise.

use renlab::dynamics::{invariant_measure_y, IntermittentMapSpec, MeasureMethod, RoofSpec};

#[test]
fn ulam_and_birkhoff_measures_agree() {
    let map = IntermittentMapSpec::new(4.0 / 3.0, 1.0).unwrap();
    let roof = RoofSpec::Affine { a0: 1.0, a1: 0.5 };
    let grid = 1 << 11;
    let ulam = invariant_measure_y(
        &map,
        &roof,
        grid,
        MeasureMethod::Ulam {
            samples_per_cell: 1024,
            seed: 5,
            max_iter: 1 << 24,
        },
    )
    .unwrap();
    let birkhoff = invariant_measure_y(
        &map,
        &roof,
        grid,
        MeasureMethod::Birkhoff {
            orbit_len: 4_000_000,
            burn_in: 10_000,
            seed: 55,
            max_iter: 1 << 24,
        },
    )
    .unwrap();
    let d = ulam.l1_distance(&birkhoff).unwrap();
    // expected noise: ~0.011 from the Ulam build (0.36/sqrt(spc)) and
    // ~0.018 from the histogram (sqrt(2/pi) sqrt(cells/orbit))
    assert!(d < 0.035, "L1 distance between measure methods: {d}");

    // identical domains, and both normalized
    let (ulo, uhi) = ulam.domain();
    let (blo, bhi) = birkhoff.domain();
    assert!((ulo - blo).abs() < 1e-12 && (uhi - bhi).abs() < 1e-12);
    assert!((ulam.mass_of_interval(ulo, uhi) - 1.0).abs() < 1e-9);
}

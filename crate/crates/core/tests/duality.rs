use lll_phase::duality::{dft_conjugation_check, saddle_transmission, transmission_scan, zero_mode_reflection};
use lll_phase::fixtures::{free, harper, saddle, tilted};
use lll_phase::hilbert::TorusGeometry;
use lll_phase::Error;

#[test]
fn tilt_breaks_self_duality() {
    let g = TorusGeometry::periodic(16).unwrap();
    assert!(dft_conjugation_check(&harper(&g), &g, 1).unwrap().symmetry_norm < 1e-12);
    assert!(dft_conjugation_check(&tilted(&g), &g, 1).unwrap().symmetry_norm > 1e-2);
    assert!(dft_conjugation_check(&free(&g), &g, 1).unwrap().symmetry_norm > 1e-2);
}

#[test]
fn bad_sign_is_rejected() {
    let g = TorusGeometry::periodic(4).unwrap();
    assert!(matches!(dft_conjugation_check(&saddle(&g), &g, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn odd_saddle_zero_modes_are_simple() {
    for n in [5usize, 9, 13] {
        let g = TorusGeometry::periodic(n).unwrap();
        let z = zero_mode_reflection(&saddle(&g), &g).unwrap().expect("zero mode");
        assert!(z.energy.abs() < 1e-8 && z.residual < 1e-6, "N={n}");
    }
}

#[test]
fn transmission_is_unitary_and_symmetric() {
    let rows = transmission_scan(&[-2.0, -1.0, 0.0, 1.0, 2.0], 8.0, 1e-3).unwrap();
    for r in &rows {
        assert!(r.unitarity_defect < 1e-10);
    }
    // T(E) + T(-E) = 1 for the inverted barrier
    for (a, b) in rows.iter().zip(rows.iter().rev()) {
        assert!((a.transmission + b.transmission - 1.0).abs() < 1e-2, "{} {}", a.energy, b.energy);
    }
}

#[test]
fn transmission_rises_through_the_barrier() {
    let es: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
    let rows = transmission_scan(&es, 8.0, 1e-3).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].transmission > w[0].transmission, "at E={}", w[1].energy);
    }
}

#[test]
fn wider_window_halves_the_error() {
    let t4 = saddle_transmission(0.0, 4.0, 1e-3).unwrap().transmission;
    let t8 = saddle_transmission(0.0, 8.0, 1e-3).unwrap().transmission;
    assert!((t8 - 0.5).abs() < 0.5 * (t4 - 0.5).abs(), "{t4} {t8}");
}

#[test]
fn far_from_the_barrier() {
    assert!(saddle_transmission(-3.0, 8.0, 1e-3).unwrap().transmission < 1e-6);
    assert!(saddle_transmission(3.0, 8.0, 1e-3).unwrap().transmission > 1.0 - 1e-4);
}

use subdiff_web::{particle_msd, profiles, relaxation};

#[test]
fn relaxation_starts_at_one_and_decays() {
    let v = relaxation(0.5, 1.0, 4.0, 50).unwrap();
    assert_eq!(v[0], 1.0);
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(relaxation(1.5, 1.0, 1.0, 5).is_err());
}

#[test]
fn profiles_conserve_mass() {
    let n = 64;
    let v = profiles(0.5, 0.5, n).unwrap();
    assert_eq!(v.len(), 3 * n);
    let mass = |s: &[f64]| s.iter().sum::<f64>();
    let m0 = mass(&v[..n]);
    assert!((mass(&v[n..2 * n]) - m0).abs() < 1e-9 * m0);
    assert!((mass(&v[2 * n..]) - m0).abs() < 1e-9 * m0);
}

#[test]
fn msd_layout_and_slope() {
    let v = particle_msd(0.5, 0.2, 2000, 3).unwrap();
    assert_eq!(v.len(), 19);
    assert!((v[18] - 0.5).abs() < 0.15);
}

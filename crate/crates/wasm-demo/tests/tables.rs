use ewm_wasm::{kernel_table, pulse_table, target_table};

#[test]
fn kernel_rows_start_at_minus_one() {
    let t = kernel_table(-1.0, 2.0, 4).unwrap();
    // mu = 1 is dropped, leaving three rows
    assert_eq!(t.len(), 9);
    let v = std::f64::consts::PI / 2f64.sqrt();
    assert!((t[1] - v).abs() < 1e-10);
    assert!((t[2] - v).abs() < 1e-10);
}

#[test]
fn sphere_margin_turns_negative() {
    let t = target_table("sphere", 3.0, 301).unwrap();
    let first = t.chunks(3).find(|row| row[0] > 0.0 && row[2] <= 0.0).unwrap();
    assert!((first[0] - 2.03).abs() < 0.01);
    assert!(target_table("torus", 1.0, 3).is_err());
}

#[test]
fn small_pulse_conserves_energy() {
    let t = pulse_table("hyperbolic", 0.1, 1.0, 1.0, 200).unwrap();
    let tail = &t[t.len() - 3..];
    assert!((tail[1] - tail[0]).abs() < 1e-3 * tail[0]);
    assert!(t.chunks(3).take(t.len() / 3 - 1).all(|row| row[2] >= -1e-12));
}

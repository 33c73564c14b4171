// debug scratch
use num_complex::Complex64;
use ncs_core::deformation::DeformationSpec;
use ncs_core::phasespace::{integrate, wigner, GridSpec};
use ncs_core::states::ncs_circle;

fn main() {
    let spec = DeformationSpec::TrappedIon { order: 2, eta2: 0.25 };
    let alpha = Complex64::new(3.5, 0.0);
    // term magnitude profile
    let st = ncs_circle(&spec, alpha, 2, 0, 80).unwrap();
    println!("norm status: {:?}", st.norm_status);
    for n in (0..=80).step_by(4) {
        let a = st.amplitudes[n].norm();
        if a > 0.0 { println!("n={n}: |c| = {a:.3e}"); }
    }
    for n_max in [12usize, 16, 20, 24, 32] {
        let st = ncs_circle(&spec, alpha, 2, 0, n_max).unwrap();
        let grid = GridSpec::square(8.0, 129);
        let w = wigner(&st, &grid).unwrap();
        let integral = integrate(&w);
        // peak location
        let mut best = (0.0, 0.0, f64::MIN);
        for i in 0..129 { for j in 0..129 {
            if w.at(i, j) > best.2 { best = (grid.q_at(i), grid.p_at(j), w.at(i, j)); }
        }}
        println!("n_max={n_max}: status {:?}, integral {:?}, peak {:.4} at ({:.2},{:.2})",
            st.norm_status, integral.map(|v| (v * 1e4).round() / 1e4), best.2, best.0, best.1);
    }
}

//! Closed-form curvature of rotationally symmetric metrics
//! `g = phi(r)^2 dr^2 + psi(r)^2 ghat` on the ball chart, where `ghat` is the
//! unit round metric on the n-sphere fiber. Fiber components are stored in a
//! ghat-orthonormal frame, so the metric tensor at a node is
//! `diag(phi^2, psi^2, ..., psi^2)`.
//!
//! All radial derivatives are `d_s = phi^{-1} d_r` with parity ghosts across
//! r = 0 (phi even, psi odd) and one-sided closures at the outer end. The
//! closed forms used here were derived by computer algebra:
//!
//!   Ric_rr            = -n (psi_ss / psi) phi^2
//!   Ric_fiber (frame) = (n-1)(1 - psi_s^2) - psi psi_ss
//!   |Rm|^2            = 4 [ n K_rad^2 + n(n-1)/2 K_sph^2 ],
//!                       K_rad = -psi_ss/psi,  K_sph = (1 - psi_s^2)/psi^2
//!   H (face r = 1)    = n psi_s / psi
//!   |A| (face r = 1)  = sqrt(n) |psi_s / psi|
//!   2 H'(a dr^2 + b ghat) = n [d_s b - 2 (psi_s/psi) b] / psi^2
//!                           - (a/phi^2) n psi_s / psi

/// Parity of a radial profile under r -> -r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Centered first derivative d_r on the cell-centered grid, parity ghost at
/// the inner end, 3-point one-sided at the outer end.
pub fn radial_d1(vals: &[f64], parity: Parity, h: f64) -> Vec<f64> {
    let n = vals.len();
    let s = parity.sign();
    let mut out = vec![0.0; n];
    for j in 0..n {
        let minus = if j == 0 { s * vals[0] } else { vals[j - 1] };
        out[j] = if j + 1 < n {
            (vals[j + 1] - minus) / (2.0 * h)
        } else {
            (3.0 * vals[j] - 4.0 * vals[j - 1] + vals[j - 2]) / (2.0 * h)
        };
    }
    out
}

/// Arclength derivative d_s f = phi^{-1} d_r f.
pub fn ds(vals: &[f64], parity: Parity, phi: &[f64], h: f64) -> Vec<f64> {
    let d = radial_d1(vals, parity, h);
    d.iter().zip(phi.iter()).map(|(v, p)| v / p).collect()
}

/// Parity of d_s f given the parity of f (phi is even).
pub fn ds_parity(p: Parity) -> Parity {
    match p {
        Parity::Even => Parity::Odd,
        Parity::Odd => Parity::Even,
    }
}

/// Value at the boundary face r = 1 by quadratic extrapolation from the last
/// three cell-centered nodes (exact on quadratics).
pub fn face_value(vals: &[f64]) -> f64 {
    let n = vals.len();
    (15.0 * vals[n - 1] - 10.0 * vals[n - 2] + 3.0 * vals[n - 3]) / 8.0
}

/// d_r at the face r = 1 from the last three nodes (exact on quadratics).
pub fn face_d1(vals: &[f64], h: f64) -> f64 {
    let n = vals.len();
    (2.0 * vals[n - 1] - 3.0 * vals[n - 2] + vals[n - 3]) / h
}

/// Ricci components (Ric_rr, Ric_fiber-frame) on the nodes.
pub fn ricci_components(phi: &[f64], psi: &[f64], n: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let psi_s = ds(psi, Parity::Odd, phi, h);
    let psi_ss = ds(&psi_s, Parity::Even, phi, h);
    let mut rr = vec![0.0; psi.len()];
    let mut ff = vec![0.0; psi.len()];
    for j in 0..psi.len() {
        rr[j] = -nf * (psi_ss[j] / psi[j]) * phi[j] * phi[j];
        ff[j] = (nf - 1.0) * (1.0 - psi_s[j] * psi_s[j]) - psi[j] * psi_ss[j];
    }
    (rr, ff)
}

/// Pointwise |Rm|_g on the nodes.
pub fn riemann_norm(phi: &[f64], psi: &[f64], n: usize, h: f64) -> Vec<f64> {
    let nf = n as f64;
    let psi_s = ds(psi, Parity::Odd, phi, h);
    let psi_ss = ds(&psi_s, Parity::Even, phi, h);
    (0..psi.len())
        .map(|j| {
            let k_rad = -psi_ss[j] / psi[j];
            let k_sph = (1.0 - psi_s[j] * psi_s[j]) / (psi[j] * psi[j]);
            (4.0 * (nf * k_rad * k_rad + 0.5 * nf * (nf - 1.0) * k_sph * k_sph)).sqrt()
        })
        .collect()
}

/// Mean curvature of the face r = 1.
pub fn mean_curvature_face(phi: &[f64], psi: &[f64], n: usize, h: f64) -> f64 {
    let psi_s_face = face_d1(psi, h) / face_value(phi);
    n as f64 * psi_s_face / face_value(psi)
}

/// |A|_g of the face r = 1.
pub fn second_form_norm_face(phi: &[f64], psi: &[f64], n: usize, h: f64) -> f64 {
    let psi_s_face = face_d1(psi, h) / face_value(phi);
    (n as f64).sqrt() * (psi_s_face / face_value(psi)).abs()
}

/// Linearized mean curvature at the face for a rotationally symmetric
/// perturbation h = a(r) dr^2 + b(r) ghat (frame components).
pub fn mean_curvature_linearized_face(
    phi: &[f64],
    psi: &[f64],
    a: &[f64],
    b: &[f64],
    n: usize,
    h: f64,
) -> f64 {
    let nf = n as f64;
    let psi_f = face_value(psi);
    let phi_f = face_value(phi);
    let psi_s_f = face_d1(psi, h) / phi_f;
    let b_s_f = face_d1(b, h) / phi_f;
    let b_f = face_value(b);
    let a_f = face_value(a);
    let t1 = nf * (b_s_f - 2.0 * (psi_s_f / psi_f) * b_f) / (psi_f * psi_f);
    let t3 = -(a_f / (phi_f * phi_f)) * nf * psi_s_f / psi_f;
    0.5 * (t1 + t3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n0: usize) -> Vec<f64> {
        let h = 1.0 / n0 as f64;
        (0..n0).map(|j| (j as f64 + 0.5) * h).collect()
    }

    #[test]
    fn flat_ball_is_ricci_flat() {
        let n0 = 64;
        let h = 1.0 / n0 as f64;
        let r = grid(n0);
        let phi = vec![1.0; n0];
        let psi = r.clone();
        let (rr, ff) = ricci_components(&phi, &psi, 2, h);
        for j in 0..n0 {
            assert!(rr[j].abs() < 1e-10, "Ric_rr at {}: {}", r[j], rr[j]);
            assert!(ff[j].abs() < 1e-10, "Ric_ff at {}: {}", r[j], ff[j]);
        }
        // unit-ball boundary: H = n, |A| = sqrt(n)
        let hm = mean_curvature_face(&phi, &psi, 2, h);
        assert!((hm - 2.0).abs() < 1e-11, "H of unit ball: {hm}");
        let a = second_form_norm_face(&phi, &psi, 2, h);
        assert!((a - 2.0_f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn round_sphere_cap_einstein() {
        // phi = 1, psi = sin r sampled on the ball chart: Ric = n g away from r = 0
        let n0 = 200;
        let h = 1.0 / n0 as f64;
        let r = grid(n0);
        let n = 2usize;
        let phi = vec![1.0; n0];
        let psi: Vec<f64> = r.iter().map(|x| x.sin()).collect();
        let (rr, ff) = ricci_components(&phi, &psi, n, h);
        // the sectional ratio (1 - psi_s^2)/psi^2 loses relative accuracy
        // like h^2/r^2 near the origin, so check away from r = 0
        for j in 40..n0 - 3 {
            let g_rr = 1.0;
            let g_ff = psi[j] * psi[j];
            assert!(
                (rr[j] - n as f64 * g_rr).abs() < 5e-4,
                "Ric_rr at r={}: {}",
                r[j],
                rr[j]
            );
            assert!(
                (ff[j] - n as f64 * g_ff).abs() < 5e-4,
                "Ric_ff at r={}: {}",
                r[j],
                ff[j]
            );
        }
        // |Rm|^2 = 2 K^2 (n+1) n = 12 for K = 1, n = 2
        let nrm = riemann_norm(&phi, &psi, n, h);
        for j in 40..n0 - 3 {
            assert!(
                (nrm[j] * nrm[j] - 12.0).abs() < 5e-3,
                "|Rm|^2 at r={}: {}",
                r[j],
                nrm[j] * nrm[j]
            );
        }
    }

    #[test]
    fn ricci_components_second_order() {
        // interior convergence of the warped Ricci under grid doubling
        let n = 2usize;
        let mut errs = Vec::new();
        for n0 in [100usize, 200] {
            let h = 1.0 / n0 as f64;
            let r = grid(n0);
            let phi = vec![1.0; n0];
            let psi: Vec<f64> = r.iter().map(|x| x.sin()).collect();
            let (_, ff) = ricci_components(&phi, &psi, n, h);
            let mut e = 0.0_f64;
            for j in 0..n0 - 3 {
                e = e.max((ff[j] - 2.0 * psi[j] * psi[j]).abs());
            }
            errs.push(e);
        }
        let q = (errs[0] / errs[1]).log2();
        assert!(q > 1.7 && q < 2.3, "warped Ricci order {q}");
    }

    #[test]
    fn hemisphere_face_is_minimal() {
        // phi = pi/2, psi = sin(pi r / 2): the face r = 1 is the equator;
        // the leading face-stencil error is O(h^3) here since psi''' vanishes
        // at the equator
        let n0 = 512;
        let h = 1.0 / n0 as f64;
        let r = grid(n0);
        let phi = vec![PI / 2.0; n0];
        let psi: Vec<f64> = r.iter().map(|x| (PI * x / 2.0).sin()).collect();
        let hm = mean_curvature_face(&phi, &psi, 2, h);
        assert!(hm.abs() < 1e-6, "equator mean curvature: {hm}");
    }

    #[test]
    fn conformal_variation_matches_closed_form() {
        // h = c g  =>  H' = -c H / 2 (exact identity of the warped formula)
        let n0 = 96;
        let h = 1.0 / n0 as f64;
        let r = grid(n0);
        let phi = vec![1.0; n0];
        let psi = r.clone();
        let c = 0.37;
        let a: Vec<f64> = phi.iter().map(|p| c * p * p).collect();
        let b: Vec<f64> = psi.iter().map(|p| c * p * p).collect();
        let hp = mean_curvature_linearized_face(&phi, &psi, &a, &b, 2, h);
        let hm = mean_curvature_face(&phi, &psi, 2, h);
        assert!((hp + 0.5 * c * hm).abs() < 1e-9, "H' = {hp}, H = {hm}");
    }
}

use super::{facet_corner, Mesh};

/// Deviations of the cells from parallelograms / parallelepipeds.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub h: f64,
    /// Per cell: largest `|r34 - r21|` over its (generalized) quadrilateral
    /// faces; in 2d the cell itself.
    pub face_deviation: Vec<f64>,
    /// Per cell in 3d: `|(r21 - r34) - (r65 - r78)|`; zero in 2d.
    pub regularity_deviation: Vec<f64>,
}

impl GeometryReport {
    pub fn max_face_deviation(&self) -> f64 {
        self.face_deviation.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_regularity_deviation(&self) -> f64 {
        self.regularity_deviation.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest `C` with `|r34 - r21| <= C h^2` on every face.
    pub fn h2_constant(&self) -> f64 {
        self.max_face_deviation() / (self.h * self.h)
    }

    /// Smallest `C` with the regularity deviation `<= C h^3`.
    pub fn h3_constant(&self) -> f64 {
        self.max_regularity_deviation() / self.h.powi(3)
    }

    pub fn is_h2_parallelogram(&self, c: f64) -> bool {
        self.h2_constant() <= c
    }

    pub fn is_regular_h2_parallelepiped(&self, c: f64) -> bool {
        self.is_h2_parallelogram(c) && self.h3_constant() <= c
    }
}

pub fn geometry_report(mesh: &Mesh) -> GeometryReport {
    let dim = mesh.dim();
    let mut face_deviation = Vec::with_capacity(mesh.num_cells());
    let mut regularity_deviation = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        let r = |i: usize| g.corners[i - 1];
        if dim == 2 {
            face_deviation.push(((r(3) - r(4)) - (r(2) - r(1))).norm());
            regularity_deviation.push(0.0);
        } else {
            let mut dev: f64 = 0.0;
            for lf in 0..6 {
                let q = |bu, bw| g.corners[facet_corner(3, lf, bu, bw)];
                dev = dev.max(((q(1, 1) - q(0, 1)) - (q(1, 0) - q(0, 0))).norm());
            }
            face_deviation.push(dev);
            let reg = ((r(2) - r(1)) - (r(3) - r(4))) - ((r(6) - r(5)) - (r(7) - r(8)));
            regularity_deviation.push(reg.norm());
        }
    }
    GeometryReport {
        h: mesh.nominal_h(),
        face_deviation,
        regularity_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{example1_mesh, example2_mesh, structured_mesh};

    #[test]
    fn parallelograms_have_zero_deviation() {
        let m = structured_mesh(2, [3, 2, 1], |[x, y, z]| [x + 0.3 * y, y, z]).unwrap();
        assert!(geometry_report(&m).max_face_deviation() < 1e-15);
        let m = structured_mesh(3, [2, 2, 2], |[x, y, z]| [x + 0.2 * z, y + 0.1 * x, z]).unwrap();
        let r = geometry_report(&m);
        assert!(r.max_face_deviation() < 1e-15);
        assert!(r.max_regularity_deviation() < 1e-15);
    }

    #[test]
    fn single_quad_direct_formula() {
        let v = vec![[0., 0., 0.], [1., 0., 0.], [1.2, 1.1, 0.], [0., 1., 0.]];
        let m = crate::mesh::Mesh::new(2, v, vec![[0, 1, 2, 3, 0, 0, 0, 0]]).unwrap();
        let r = geometry_report(&m);
        // r34 - r21 = (1.2, 0.1) - (1, 0)
        assert!((r.face_deviation[0] - (0.04f64 + 0.01).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn example1_refinements_are_h2_parallelograms() {
        let cs: Vec<f64> = (1..=4)
            .map(|l| geometry_report(&example1_mesh(l)).h2_constant())
            .collect();
        // constant is uniform across levels
        let cmax = cs.iter().copied().fold(0.0, f64::max);
        for l in 1..=4 {
            assert!(geometry_report(&example1_mesh(l)).is_h2_parallelogram(cmax));
        }
        assert!((cs[3] / cs[2] - 1.0).abs() < 0.05, "{cs:?}");
    }

    fn slope(h: &[f64], e: &[f64]) -> f64 {
        let n = h.len() as f64;
        let (lx, ly): (Vec<f64>, Vec<f64>) = (h.iter().map(|v| v.ln()).collect(), e.iter().map(|v| v.ln()).collect());
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        num / den
    }

    #[test]
    fn example2_regular_parallelepipeds() {
        let reports: Vec<_> = (0..=2).map(|l| geometry_report(&example2_mesh(l))).collect();
        let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
        let reg: Vec<f64> = reports.iter().map(|r| r.max_regularity_deviation()).collect();
        let face: Vec<f64> = reports.iter().map(|r| r.max_face_deviation()).collect();
        assert!((slope(&h, &reg) - 3.0).abs() < 0.1, "{reg:?}");
        assert!((slope(&h, &face) - 2.0).abs() < 0.1, "{face:?}");
        let c = reports
            .iter()
            .map(|r| r.h2_constant().max(r.h3_constant()))
            .fold(0.0, f64::max);
        assert!(reports[2].is_regular_h2_parallelepiped(c));
    }
}

//! Atomic position distributions and the pairwise van der Waals matrix.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Ring,
    Gaussian1D,
    Gaussian3D,
}

impl GeometryKind {
    pub fn dim(self) -> usize {
        match self {
            GeometryKind::Ring => 2,
            GeometryKind::Gaussian1D => 1,
            GeometryKind::Gaussian3D => 3,
        }
    }
}

/// Atom positions plus the van der Waals coefficient.
///
/// Coordinates beyond `kind.dim()` are zero. For 1D clouds the first
/// coordinate is the propagation axis and atoms are stored in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleGeometry {
    pub positions: Vec<[f64; 3]>,
    pub c6: f64,
    pub kind: GeometryKind,
    pub seed: u64,
}

impl EnsembleGeometry {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn with_c6(mut self, c6: f64) -> Self {
        self.c6 = c6;
        self
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        let (a, b) = (self.positions[k], self.positions[l]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Multiply every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut g = self.clone();
        for p in &mut g.positions {
            for x in p.iter_mut() {
                *x *= s;
            }
        }
        g
    }

    /// True when the first coordinate is non-decreasing.
    pub fn is_propagation_ordered(&self) -> bool {
        self.positions.windows(2).all(|w| w[0][0] <= w[1][0])
    }

    /// Writes one atom per line: index then the used coordinates.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<(), GeometryError> {
        let kind = match self.kind {
            GeometryKind::Ring => "ring",
            GeometryKind::Gaussian1D => "gaussian1d",
            GeometryKind::Gaussian3D => "gaussian3d",
        };
        writeln!(w, "# kind={kind} c6={:e} seed={}", self.c6, self.seed)?;
        let d = self.kind.dim();
        for (i, p) in self.positions.iter().enumerate() {
            write!(w, "{i}")?;
            for x in &p[..d] {
                write!(w, " {x:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_table<R: BufRead>(r: R) -> Result<Self, GeometryError> {
        let mut kind = None;
        let mut c6 = 1.0;
        let mut seed = 0u64;
        let mut positions = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |msg: String| GeometryError::Parse { line: ln + 1, msg };
            if let Some(header) = line.strip_prefix('#') {
                for tok in header.split_whitespace() {
                    let Some((k, v)) = tok.split_once('=') else { continue };
                    match k {
                        "kind" => {
                            kind = Some(match v {
                                "ring" => GeometryKind::Ring,
                                "gaussian1d" => GeometryKind::Gaussian1D,
                                "gaussian3d" => GeometryKind::Gaussian3D,
                                _ => return Err(perr(format!("unknown kind {v}"))),
                            })
                        }
                        "c6" => c6 = v.parse().map_err(|_| perr(format!("bad c6 {v}")))?,
                        "seed" => seed = v.parse().map_err(|_| perr(format!("bad seed {v}")))?,
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let kind = kind.ok_or_else(|| perr("missing header line".into()))?;
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| perr(format!("bad number {t}"))))
                .collect::<Result<_, _>>()?;
            if fields.len() != kind.dim() + 1 {
                return Err(perr(format!("expected {} columns", kind.dim() + 1)));
            }
            if fields[0] as usize != positions.len() {
                return Err(perr("indices must be consecutive from 0".into()));
            }
            let mut p = [0.0; 3];
            p[..kind.dim()].copy_from_slice(&fields[1..]);
            positions.push(p);
        }
        let kind = kind.ok_or(GeometryError::Parse { line: 0, msg: "empty table".into() })?;
        Ok(EnsembleGeometry { positions, c6, kind, seed })
    }
}

/// `n` equidistant atoms on a circle of circumference `n * spacing`.
pub fn ring_positions(n: usize, spacing: f64) -> Result<EnsembleGeometry, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidArgument(format!("ring needs n >= 2, got {n}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!("spacing must be > 0, got {spacing}")));
    }
    let radius = n as f64 * spacing / (2.0 * PI);
    let positions = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            [radius * phi.cos(), radius * phi.sin(), 0.0]
        })
        .collect();
    Ok(EnsembleGeometry { positions, c6: 1.0, kind: GeometryKind::Ring, seed: 0 })
}

/// I.i.d. normal positions with per-axis standard deviations.
///
/// `widths` holds either one value (isotropic) or `dim` values. Points closer
/// than `1e-9 * min(width)` to an earlier point are redrawn. 1D clouds are
/// sorted along the propagation axis.
pub fn gaussian_positions(
    n: usize,
    widths: &[f64],
    dim: usize,
    seed: u64,
) -> Result<EnsembleGeometry, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidArgument(format!("cloud needs n >= 2, got {n}")));
    }
    let kind = match dim {
        1 => GeometryKind::Gaussian1D,
        3 => GeometryKind::Gaussian3D,
        _ => return Err(GeometryError::InvalidArgument(format!("dim must be 1 or 3, got {dim}"))),
    };
    if widths.len() != 1 && widths.len() != dim {
        return Err(GeometryError::InvalidArgument(format!(
            "expected 1 or {dim} widths, got {}",
            widths.len()
        )));
    }
    if widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(GeometryError::InvalidArgument("widths must be > 0".into()));
    }
    let width = |axis: usize| if widths.len() == 1 { widths[0] } else { widths[axis] };
    let min_sep = 1e-9 * widths.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(n);
    while positions.len() < n {
        let mut p = [0.0; 3];
        for (axis, x) in p.iter_mut().enumerate().take(dim) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = width(axis) * z;
        }
        let clash = positions.iter().any(|q| {
            let d2: f64 = (0..3).map(|i| (p[i] - q[i]).powi(2)).sum();
            d2.sqrt() < min_sep
        });
        if !clash {
            positions.push(p);
        }
    }
    if dim == 1 {
        positions.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }
    Ok(EnsembleGeometry { positions, c6: 1.0, kind, seed })
}

/// `V_kl = c6 / rho_kl^6` with a zero diagonal.
pub fn interaction_matrix(geom: &EnsembleGeometry) -> Result<Array2<f64>, GeometryError> {
    let mut v = inverse_sixth(geom)?;
    v.mapv_inplace(|x| x * geom.c6);
    Ok(v)
}

fn inverse_sixth(geom: &EnsembleGeometry) -> Result<Array2<f64>, GeometryError> {
    let n = geom.n();
    let mut w = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        for l in (k + 1)..n {
            let rho = geom.distance(k, l);
            if !(rho > 0.0) {
                return Err(GeometryError::SingularGeometry(k, l));
            }
            let x = rho.powi(-6);
            w[[k, l]] = x;
            w[[l, k]] = x;
        }
    }
    Ok(w)
}

/// A probe branch whose per-pair blockade contribution is a function of `V_kl`.
pub trait BlockadeBranch {
    /// Real part of the blockaded cooperativity (or depth) one pair contributes.
    fn pair_blockade_re(&self, v: f64) -> f64;

    /// Mean over atoms of the real per-atom blockade for a given matrix.
    fn mean_blockade_re(&self, v: &Array2<f64>) -> f64 {
        let n = v.nrows();
        let total: f64 = v.iter().filter(|x| **x > 0.0).map(|&x| self.pair_blockade_re(x)).sum();
        total / n as f64
    }
}

/// Search bracket, as the range of the strongest and weakest pair interaction.
const V_LO: f64 = 1e-12;
const V_HI: f64 = 1e12;

/// Finds `c6` such that the mean real blockade equals `target`.
///
/// Bisection on `ln c6`; the mean is monotone increasing in `c6`.
pub fn calibrate_c6<B: BlockadeBranch + ?Sized>(
    geom: &EnsembleGeometry,
    target: f64,
    branch: &B,
) -> Result<f64, GeometryError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!("target must be > 0, got {target}")));
    }
    let w = inverse_sixth(geom)?;
    let n = geom.n() as f64;
    let pairs: Vec<f64> = w.iter().cloned().filter(|x| *x > 0.0).collect();
    let mean = |c6: f64| pairs.iter().map(|&x| branch.pair_blockade_re(c6 * x)).sum::<f64>() / n;

    if pairs.is_empty() {
        return Err(GeometryError::NoSolution { target, lo: 0.0, hi: f64::INFINITY });
    }
    let w_max = pairs.iter().cloned().fold(0.0, f64::max);
    let w_min = pairs.iter().cloned().fold(f64::INFINITY, f64::min);
    let (c6_lo, c6_hi) = (V_LO / w_max, V_HI / w_min);
    let no_solution = GeometryError::NoSolution { target, lo: c6_lo, hi: c6_hi };
    let (mut lo, mut hi) = (c6_lo.ln(), c6_hi.ln());
    if mean(c6_lo) > target || mean(c6_hi) < target {
        return Err(no_solution);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = mean(mid.exp());
        if ((m - target) / target).abs() < 1e-10 {
            return Ok(mid.exp());
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let c6 = (0.5 * (lo + hi)).exp();
    if ((mean(c6) - target) / target).abs() < 1e-6 {
        Ok(c6)
    } else {
        Err(no_solution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_ring() {
        let g = ring_positions(4, 1.5).unwrap();
        let r = 4.0 * 1.5 / (2.0 * PI);
        assert_relative_eq!(g.distance(0, 1), 2.0 * r * (PI / 4.0).sin(), epsilon = 1e-12);
        assert_relative_eq!(g.distance(0, 2), 2.0 * r, epsilon = 1e-12);
    }

    #[test]
    fn two_atom_ring_is_antipodal() {
        let g = ring_positions(2, 1.0).unwrap();
        assert_relative_eq!(g.distance(0, 1), 2.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn ring_rejects_single_atom() {
        assert!(matches!(ring_positions(1, 1.0), Err(GeometryError::InvalidArgument(_))));
        assert!(ring_positions(3, 0.0).is_err());
    }

    #[test]
    fn power_law() {
        let mut g = ring_positions(2, PI / 2.0).unwrap();
        assert_relative_eq!(g.distance(0, 1), 1.0, epsilon = 1e-12);
        g.c6 = 1.0;
        assert_relative_eq!(interaction_matrix(&g).unwrap()[[0, 1]], 1.0, epsilon = 1e-12);
        let v = interaction_matrix(&g.scaled(2.0)).unwrap();
        assert_relative_eq!(v[[0, 1]], 1.0 / 64.0, epsilon = 1e-14);
        assert_eq!(v[[0, 0]], 0.0);
        let far = interaction_matrix(&g.scaled(1e6)).unwrap();
        assert!(far[[0, 1]] < 1e-35);
    }

    #[test]
    fn coincident_atoms_are_singular() {
        let g = EnsembleGeometry {
            positions: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]],
            c6: 1.0,
            kind: GeometryKind::Gaussian3D,
            seed: 0,
        };
        assert_eq!(interaction_matrix(&g), Err(GeometryError::SingularGeometry(0, 2)));
    }

    #[test]
    fn gaussian_is_deterministic_and_sorted() {
        let a = gaussian_positions(50, &[2.0], 1, 7).unwrap();
        let b = gaussian_positions(50, &[2.0], 1, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.is_propagation_ordered());
        let c = gaussian_positions(50, &[2.0], 1, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_mean_is_centred() {
        let n = 4000;
        let w = 3.0;
        let g = gaussian_positions(n, &[w, w, w], 3, 11).unwrap();
        for axis in 0..3 {
            let mean = g.positions.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 5.0 * w / (n as f64).sqrt(), "axis {axis} mean {mean}");
        }
    }

    #[test]
    fn table_round_trip() {
        let g = gaussian_positions(20, &[1.0, 2.0, 3.0], 3, 3).unwrap().with_c6(2.5);
        let mut buf = Vec::new();
        g.write_table(&mut buf).unwrap();
        let back = EnsembleGeometry::read_table(&buf[..]).unwrap();
        assert_eq!(back.kind, g.kind);
        assert_eq!(back.c6, g.c6);
        assert_eq!(back.positions, g.positions);
    }

    struct Saturating;
    impl BlockadeBranch for Saturating {
        fn pair_blockade_re(&self, v: f64) -> f64 {
            v * v / (1.0 + v * v)
        }
    }

    #[test]
    fn calibration_round_trip() {
        let g = ring_positions(30, 1.0).unwrap();
        let c6 = 3.7;
        let target = Saturating.mean_blockade_re(&interaction_matrix(&g.clone().with_c6(c6)).unwrap());
        let back = calibrate_c6(&g, target, &Saturating).unwrap();
        assert_relative_eq!(back, c6, max_relative = 1e-6);
    }

    #[test]
    fn calibration_unreachable() {
        let g = ring_positions(10, 1.0).unwrap();
        // the mean saturates at n - 1 = 9
        assert!(matches!(calibrate_c6(&g, 9.5, &Saturating), Err(GeometryError::NoSolution { .. })));
    }

    #[test]
    fn calibration_close_pair() {
        // one pair at 1e-4 dominates: 1/r^6 = 1e24
        let mut g = ring_positions(10, 1.0).unwrap();
        g.positions[1] = [g.positions[0][0] + 1e-4, g.positions[0][1], 0.0];
        let c6 = calibrate_c6(&g, 0.05, &Saturating).unwrap();
        let m = Saturating.mean_blockade_re(&interaction_matrix(&g.clone().with_c6(c6)).unwrap());
        assert_relative_eq!(m, 0.05, max_relative = 1e-6);
    }
}

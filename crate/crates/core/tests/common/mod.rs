//! Reference computations independent of the library's code paths.
#![allow(dead_code)]

use adaptive_consensus::{
    ControllerConfig, EstimatorState, GraphTopology, Scenario, SimConfig, UncertainCoefficients,
};

/// Cyclic Jacobi rotations on a dense symmetric matrix; returns ascending
/// eigenvalues.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Roots of the characteristic polynomial of a symmetric 3x3 matrix,
/// `l^3 - c2 l^2 + c1 l - c0`, by the trigonometric cubic formula.
pub fn char_poly_eigenvalues_3x3(m: [[f64; 3]; 3]) -> [f64; 3] {
    let c2 = m[0][0] + m[1][1] + m[2][2];
    let c1 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let c0 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // depressed cubic with l = y + c2/3
    let p = c1 - c2 * c2 / 3.0;
    let q = -2.0 * c2.powi(3) / 27.0 + c2 * c1 / 3.0 - c0;
    let shift = c2 / 3.0;
    let mut roots = if p.abs() < 1e-14 {
        [shift - q.cbrt(); 3]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let tau = std::f64::consts::TAU / 3.0;
        [0.0, 1.0, 2.0].map(|k| shift + r * (phi - tau * k).cos())
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// `exp(a * t) v` by scaling and squaring with a long Taylor series.
pub fn expm_apply(a: &[Vec<f64>], t: f64, v: &[f64]) -> Vec<f64> {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scale = t / 2f64.powi(squarings);
    let mat_mul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| {
        let mut z = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    z[i][j] += x[i][k] * y[k][j];
                }
            }
        }
        z
    };
    let scaled: Vec<Vec<f64>> = a
        .iter()
        .map(|row| row.iter().map(|x| x * scale).collect())
        .collect();
    let mut result = vec![vec![0.0; n]; n];
    let mut term = vec![vec![0.0; n]; n];
    for i in 0..n {
        result[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for k in 1..30 {
        term = mat_mul(&term, &scaled);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    (0..n)
        .map(|i| (0..n).map(|j| result[i][j] * v[j]).sum())
        .collect()
}

/// Small deterministic generator (SplitMix64) so oracle inputs do not
/// depend on the crate under test.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Random spanning tree plus random extra edges; connected by
/// construction. Edges are 1-based.
pub fn random_connected_edges(rng: &mut SplitMix, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for v in 2..=n {
        edges.push((rng.below(v - 1) + 1, v));
    }
    for _ in 0..extra {
        let i = rng.below(n) + 1;
        let j = rng.below(n) + 1;
        if i != j && !edges.contains(&(i.min(j), i.max(j))) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges
}

pub fn to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub const X0: [f64; 3] = [0.2, 0.4, 1.2];

/// The four figure cases on the 3-node line graph: `(alpha, beta)` with
/// beta ordered `(b12, b21, b23, b32)`.
pub const CASES: [([f64; 3], [f64; 4]); 4] = [
    ([1.0, 2.0, 1.0], [1.0, 1.0, 1.0, 1.0]),
    ([1.0, 1.1, 1.0], [1.0, 0.1, 1.0, 1.0]),
    ([1.0, 2.0, 1.0], [-1.0, -1.0, 1.0, 1.0]),
    ([1.0, 1.5, 1.0], [1.0, 1.0, 1.0, 1.0]),
];

pub fn figure_scenario(case: usize, controlled: bool) -> Scenario {
    let g = GraphTopology::line(3).unwrap();
    let (alpha, beta) = CASES[case];
    let coefficients = UncertainCoefficients::constant(&g, &alpha, &beta).unwrap();
    Scenario {
        name: format!("case{}", ["a", "b", "c", "d"][case]),
        controller: controlled.then(|| ControllerConfig::default_for(&g).unwrap()),
        initial_estimates: EstimatorState::zeros(&g),
        x0: X0.to_vec(),
        r0: X0.to_vec(),
        coefficients,
        reference_weights: None,
        sim: SimConfig::default(),
        graph: g,
    }
}

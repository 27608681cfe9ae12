//! Small dense matrices (dimension 2 or 3).

pub type Mat = [[f64; 3]; 3];

pub fn identity(d: usize) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for (a, row) in m.iter_mut().enumerate().take(d) {
        row[a] = 1.0;
    }
    m
}

pub fn det(m: &Mat, d: usize) -> f64 {
    if d == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

pub fn mul(a: &Mat, b: &Mat, d: usize) -> Mat {
    let mut out = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            out[i][j] = (0..d).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Largest singular value, from the eigenvalues of `M^T M` in closed form.
pub fn operator_norm(m: &Mat, d: usize) -> f64 {
    let mut g = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            g[i][j] = (0..d).map(|k| m[k][i] * m[k][j]).sum();
        }
    }
    largest_symmetric_eigenvalue(&g, d).max(0.0).sqrt()
}

fn largest_symmetric_eigenvalue(g: &Mat, d: usize) -> f64 {
    if d == 2 {
        let mean = 0.5 * (g[0][0] + g[1][1]);
        let half_gap = 0.5 * (g[0][0] - g[1][1]);
        return mean + (half_gap * half_gap + g[0][1] * g[0][1]).sqrt();
    }
    // trigonometric solution of the characteristic cubic
    let off = g[0][1].powi(2) + g[0][2].powi(2) + g[1][2].powi(2);
    let trace = g[0][0] + g[1][1] + g[2][2];
    if off == 0.0 {
        return g[0][0].max(g[1][1]).max(g[2][2]);
    }
    let q = trace / 3.0;
    let p2 = (g[0][0] - q).powi(2) + (g[1][1] - q).powi(2) + (g[2][2] - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (g[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (0.5 * det(&b, 3)).clamp(-1.0, 1.0);
    q + 2.0 * p * (r.acos() / 3.0).cos()
}

/// `M - I`.
pub fn minus_identity(m: &Mat, d: usize) -> Mat {
    let mut out = *m;
    for (a, row) in out.iter_mut().enumerate().take(d) {
        row[a] -= 1.0;
    }
    out
}

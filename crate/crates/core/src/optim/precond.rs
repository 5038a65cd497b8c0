use crate::mesh::TetMesh;

/// Solves `(I + lambda L) x = g` by conjugate gradients, with `L` the unweighted graph
/// Laplacian of the tet-mesh edges.
///
/// The result is a descent direction for any `g`, smoothed over roughly `sqrt(lambda)` edges.
pub fn smooth_gradient(mesh: &TetMesh, g: &[f64], lambda: f64, tol: f64, max_iters: usize) -> Vec<f64> {
    let n = g.len();
    if lambda <= 0.0 || n == 0 {
        return g.to_vec();
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        out.copy_from_slice(x);
        for &[a, b] in mesh.edges() {
            let (a, b) = (a as usize, b as usize);
            let d = lambda * (x[a] - x[b]);
            out[a] += d;
            out[b] -= d;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut x = vec![0.0; n];
    let mut r = g.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let stop = tol * tol * rr;
    for _ in 0..max_iters {
        if rr <= stop || rr == 0.0 {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    x
}

//! Iterative RDP with an explicit work stack.

use agentseg::Point2;

fn distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let (ux, uy) = (b.x - a.x, b.y - a.y);
    let norm = (ux * ux + uy * uy).sqrt();
    if norm == 0.0 {
        return ((p.x - a.x).powi(2) + (p.y - a.y).powi(2)).sqrt();
    }
    (ux * (p.y - a.y) - uy * (p.x - a.x)).abs() / norm
}

pub fn simplify(points: &[Point2], eps: f64) -> Vec<usize> {
    let n = points.len();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0, n - 1)];
    while let Some((s, e)) = stack.pop() {
        if e <= s + 1 {
            continue;
        }
        let mut idx = s;
        let mut dmax = -1.0;
        for i in s + 1..e {
            let d = distance(&points[i], &points[s], &points[e]);
            if d > dmax {
                dmax = d;
                idx = i;
            }
        }
        if dmax > eps {
            keep[idx] = true;
            stack.push((s, idx));
            stack.push((idx, e));
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

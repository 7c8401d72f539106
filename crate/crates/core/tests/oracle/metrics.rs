//! Positional and step errors written directly from the nearest-match loop.

use agentseg::Point2;

fn dist(a: &Point2, b: &Point2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

pub fn calc_error(points: &[Point2], s1: &[usize], s2: &[usize]) -> (f64, usize) {
    let last = points.len() - 1;
    let mut pos = 0.0;
    let mut stp = 0;
    for &i in s1 {
        let j = if s2.is_empty() {
            if i <= last - i {
                0
            } else {
                last
            }
        } else {
            let mut best = s2[0];
            for &j in s2 {
                if (j as i64 - i as i64).abs() < (best as i64 - i as i64).abs() {
                    best = j;
                }
            }
            best
        };
        pos += dist(&points[j], &points[i]);
        stp += (j as i64 - i as i64).unsigned_abs() as usize;
    }
    (pos, stp)
}

/// `(positional, step)` for one trajectory.
pub fn evaluate(points: &[Point2], est: &[usize], gt: &[usize]) -> (f64, f64) {
    let (p1, s1) = calc_error(points, est, gt);
    let (p2, s2) = calc_error(points, gt, est);
    let n = est.len() + gt.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    ((p1 + p2) / n as f64, (s1 + s2) as f64 / n as f64)
}

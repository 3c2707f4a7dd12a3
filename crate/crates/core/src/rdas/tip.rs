//! Spiral tip as the crossing of the `u = u*` and `v = v*` isolines.

use super::field::Field2D;
use crate::num::Real;

type Point<T> = (T, T);
type Segment<T> = (Point<T>, Point<T>);

/// Unit-cell corners in the order (0,0), (1,0), (1,1), (0,1).
fn corners<T: Real>() -> [Point<T>; 4] {
    let (o, l) = (T::zero(), T::one());
    [(o, o), (l, o), (l, l), (o, l)]
}

/// Marching-squares segments of the zero level set of one cell, in unit-cell
/// coordinates. Saddle cells are resolved by the sign of the cell mean.
fn cell_segments<T: Real>(c: [T; 4], out: &mut Vec<Segment<T>>) {
    out.clear();
    let pts = corners::<T>();
    let mut cross: [Point<T>; 4] = [(T::zero(), T::zero()); 4];
    let mut count = 0;
    for e in 0..4 {
        let (a, b) = (e, (e + 1) % 4);
        let (fa, fb) = (c[a], c[b]);
        if (fa > T::zero()) != (fb > T::zero()) {
            let s = fa / (fa - fb);
            let (pa, pb) = (pts[a], pts[b]);
            cross[count] = (pa.0 + s * (pb.0 - pa.0), pa.1 + s * (pb.1 - pa.1));
            count += 1;
        }
    }
    match count {
        2 => out.push((cross[0], cross[1])),
        4 => {
            let mean = (c[0] + c[1] + c[2] + c[3]) / (T::one() + T::one() + T::one() + T::one());
            if (mean > T::zero()) == (c[0] > T::zero()) {
                out.push((cross[0], cross[1]));
                out.push((cross[2], cross[3]));
            } else {
                out.push((cross[3], cross[0]));
                out.push((cross[1], cross[2]));
            }
        }
        _ => {}
    }
}

fn intersect<T: Real>(a: Segment<T>, b: Segment<T>) -> Option<Point<T>> {
    let r = (a.1 .0 - a.0 .0, a.1 .1 - a.0 .1);
    let s = (b.1 .0 - b.0 .0, b.1 .1 - b.0 .1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == T::zero() {
        return None;
    }
    let qp = (b.0 .0 - a.0 .0, b.0 .1 - a.0 .1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / den;
    let w = (qp.0 * r.1 - qp.1 * r.0) / den;
    let unit = T::zero()..=T::one();
    (unit.contains(&t) && unit.contains(&w)).then(|| (a.0 .0 + t * r.0, a.0 .1 + t * r.1))
}

/// Every isoline crossing on the grid, in cell order.
pub fn tip_candidates<T: Real>(u: &Field2D<T>, v: &Field2D<T>, u_star: T, v_star: T) -> Vec<Point<T>> {
    let n = u.n();
    let (uv, vv) = (u.values(), v.values());
    let h = u.h();
    let mut found = Vec::new();
    let (mut su, mut sv) = (Vec::with_capacity(2), Vec::with_capacity(2));
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let idx = [i * n + j, (i + 1) * n + j, (i + 1) * n + j + 1, i * n + j + 1];
            let cu = idx.map(|k| uv[k] - u_star);
            let pos = cu.iter().filter(|x| **x > T::zero()).count();
            if pos == 0 || pos == 4 {
                continue;
            }
            let cv = idx.map(|k| vv[k] - v_star);
            let pos = cv.iter().filter(|x| **x > T::zero()).count();
            if pos == 0 || pos == 4 {
                continue;
            }
            cell_segments(cu, &mut su);
            cell_segments(cv, &mut sv);
            let (x0, y0) = u.point(i, j);
            for a in &su {
                for b in &sv {
                    if let Some(p) = intersect(*a, *b) {
                        found.push((x0 + p.0 * h, y0 + p.1 * h));
                    }
                }
            }
        }
    }
    found
}

/// The isoline crossing nearest `previous`, or the first one in cell order.
pub fn tip_locate<T: Real>(u: &Field2D<T>, v: &Field2D<T>, u_star: T, v_star: T, previous: Option<Point<T>>) -> Option<Point<T>> {
    let cands = tip_candidates(u, v, u_star, v_star);
    match previous {
        None => cands.first().copied(),
        Some((px, py)) => cands.into_iter().fold(None, |best: Option<(T, Point<T>)>, p| {
            let d = (p.0 - px).hypot(p.1 - py);
            match best {
                Some((bd, _)) if bd <= d => best,
                _ => Some((d, p)),
            }
        })
        .map(|(_, p)| p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64, f64) -> f64 + Sync) -> Field2D<f64> {
        Field2D::from_fn(21, 0.37, (-3.7, -3.7), f).unwrap()
    }

    #[test]
    fn crossing_planes() {
        let u = grid(|x, _| x);
        let v = grid(|_, y| y);
        let p = tip_locate(&u, &v, 0.0, 0.0, None).unwrap();
        assert!(p.0.abs() < 1e-12 && p.1.abs() < 1e-12);
        let u = grid(|x, _| x - 1.0);
        let v = grid(|_, y| y + 2.0);
        let p = tip_locate(&u, &v, 0.0, 0.0, None).unwrap();
        assert!((p.0 - 1.0).abs() < 1e-12 && (p.1 + 2.0).abs() < 1e-12);
        let tilted_u = grid(|x, y| x + 0.3 * y - 0.2);
        let tilted_v = grid(|x, y| y - 0.5 * x + 0.7);
        let p = tip_locate(&tilted_u, &tilted_v, 0.0, 0.0, None).unwrap();
        // x + 0.3 y = 0.2 and y = 0.5 x - 0.7
        let x = (0.2 + 0.21) / 1.15;
        assert!((p.0 - x).abs() < 1e-12 && (p.1 - (0.5 * x - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn no_isoline_no_tip() {
        let u = grid(|_, _| 1.0);
        let v = grid(|_, y| y);
        assert!(tip_locate(&u, &v, 0.0, 0.0, None).is_none());
    }

    #[test]
    fn nearest_to_previous_wins() {
        // u = 0 on the circle of radius 2, v = 0 on the x axis: crossings at x = +-2.
        let u = grid(|x, y| x * x + y * y - 4.0);
        let v = grid(|_, y| y);
        let cands = tip_candidates(&u, &v, 0.0, 0.0);
        assert!(cands.len() >= 2);
        let right = tip_locate(&u, &v, 0.0, 0.0, Some((1.5, 0.2))).unwrap();
        let left = tip_locate(&u, &v, 0.0, 0.0, Some((-1.5, 0.2))).unwrap();
        assert!((right.0 - 2.0).abs() < 0.05 && right.1.abs() < 1e-12);
        assert!((left.0 + 2.0).abs() < 0.05);
    }

    #[test]
    fn saddle_cells_are_disambiguated() {
        let mut segs = Vec::new();
        cell_segments([1.0, -1.0, 1.0, -1.0], &mut segs);
        assert_eq!(segs.len(), 2);
        cell_segments([1.0, -1.0, 0.5, -3.0], &mut segs);
        assert_eq!(segs.len(), 2);
        cell_segments([1.0, 1.0, 1.0, 1.0], &mut segs);
        assert!(segs.is_empty());
    }
}

//! Points and line segments in normalized image coordinates.
//!
//! Every coordinate lives in `[0, 100]`, relative to the image dimensions.
//! Segments are stored canonically: `top.y <= bottom.y`, with equal `y`
//! broken by the smaller `x` becoming `top`. Endpoint averaging in the
//! consensus step relies on this ordering.

use serde::{Deserialize, Serialize};

pub const COORD_MIN: f64 = 0.0;
pub const COORD_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Both coordinates finite and inside `[0, 100]`.
    pub fn in_bounds(self) -> bool {
        let ok = |v: f64| v.is_finite() && (COORD_MIN..=COORD_MAX).contains(&v);
        ok(self.x) && ok(self.y)
    }

    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Point2::new(self.x + dx, self.y + dy)
    }
}

/// One annotated line, canonically oriented top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    top: Point2,
    bottom: Point2,
}

impl LineSegment {
    /// Builds a segment from two endpoints in either order.
    pub fn new(a: Point2, b: Point2) -> Self {
        let a_first = a.y < b.y || (a.y == b.y && a.x <= b.x);
        if a_first {
            LineSegment { top: a, bottom: b }
        } else {
            LineSegment { top: b, bottom: a }
        }
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(Point2::new(x1, y1), Point2::new(x2, y2))
    }

    pub fn top(&self) -> Point2 {
        self.top
    }

    pub fn bottom(&self) -> Point2 {
        self.bottom
    }

    /// `[x1, y1, x2, y2]` with the top endpoint first.
    pub fn coords(&self) -> [f64; 4] {
        [self.top.x, self.top.y, self.bottom.x, self.bottom.y]
    }

    pub fn length(&self) -> f64 {
        self.top.distance(self.bottom)
    }

    pub fn is_degenerate(&self) -> bool {
        self.top == self.bottom
    }

    pub fn in_bounds(&self) -> bool {
        self.top.in_bounds() && self.bottom.in_bounds()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.top.translate(dx, dy), self.bottom.translate(dx, dy))
    }

    /// Segment whose endpoints are the coordinate means of the given
    /// segments' tops and bottoms. `None` for an empty input.
    pub fn mean_of<'a, I>(segments: I) -> Option<LineSegment>
    where
        I: IntoIterator<Item = &'a LineSegment>,
    {
        let mut n = 0usize;
        let mut acc = [0.0f64; 4];
        for s in segments {
            for (a, c) in acc.iter_mut().zip(s.coords()) {
                *a += c;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let k = n as f64;
        Some(LineSegment::from_coords(
            acc[0] / k,
            acc[1] / k,
            acc[2] / k,
            acc[3] / k,
        ))
    }
}

/// Euclidean distance from `p` to the closest point of `s`.
pub fn point_segment_distance(p: Point2, s: &LineSegment) -> f64 {
    let (a, b) = (s.top, s.bottom);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + t * dx, a.y + t * dy))
}

/// Symmetric Hausdorff distance between two segments as point sets.
///
/// The distance from a point to a convex set is convex along a segment, so
/// each directed supremum is attained at an endpoint; four endpoint
/// distances give the exact value.
pub fn segment_hausdorff(a: &LineSegment, b: &LineSegment) -> f64 {
    point_segment_distance(a.top, b)
        .max(point_segment_distance(a.bottom, b))
        .max(point_segment_distance(b.top, a))
        .max(point_segment_distance(b.bottom, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> LineSegment {
        LineSegment::from_coords(x1, y1, x2, y2)
    }

    #[test]
    fn canonical_orientation() {
        let s = seg(10.0, 90.0, 12.0, 20.0);
        assert_eq!(s.top(), Point2::new(12.0, 20.0));
        assert_eq!(s.bottom(), Point2::new(10.0, 90.0));

        // horizontal: smaller x on top
        let h = seg(30.0, 50.0, 10.0, 50.0);
        assert_eq!(h.top(), Point2::new(10.0, 50.0));
        assert_eq!(h, seg(10.0, 50.0, 30.0, 50.0));
    }

    #[test]
    fn point_distance_examples() {
        let s = seg(0.0, 0.0, 0.0, 10.0);
        assert_eq!(point_segment_distance(Point2::new(0.0, 0.0), &s), 0.0);
        assert_eq!(point_segment_distance(Point2::new(3.0, 5.0), &s), 3.0);
        assert_eq!(point_segment_distance(Point2::new(4.0, 13.0), &s), 5.0);
    }

    #[test]
    fn degenerate_segment_distance() {
        let s = seg(2.0, 2.0, 2.0, 2.0);
        assert!(s.is_degenerate());
        assert_eq!(point_segment_distance(Point2::new(5.0, 6.0), &s), 5.0);
    }

    #[test]
    fn hausdorff_examples() {
        let a = seg(50.0, 0.0, 50.0, 100.0);
        assert_eq!(segment_hausdorff(&a, &a), 0.0);
        let b = seg(53.0, 0.0, 53.0, 100.0);
        assert!((segment_hausdorff(&a, &b) - 3.0).abs() < 1e-12);

        let a = seg(0.0, 0.0, 10.0, 0.0);
        let b = seg(0.0, 5.0, 20.0, 5.0);
        assert!((segment_hausdorff(&a, &b) - 125f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mean_of_segments() {
        let m = LineSegment::mean_of(&[seg(10.0, 20.0, 12.0, 100.0), seg(14.0, 30.0, 16.0, 100.0)]).unwrap();
        assert_eq!(m.coords(), [12.0, 25.0, 14.0, 100.0]);
        assert!(LineSegment::mean_of(&[]).is_none());
    }

    fn arb_point() -> impl Strategy<Value = Point2> {
        (0.0..=100.0f64, 0.0..=100.0f64).prop_map(|(x, y)| Point2::new(x, y))
    }

    fn arb_segment() -> impl Strategy<Value = LineSegment> {
        (arb_point(), arb_point()).prop_map(|(a, b)| LineSegment::new(a, b))
    }

    proptest! {
        #[test]
        fn hausdorff_symmetric_nonnegative(a in arb_segment(), b in arb_segment()) {
            let d = segment_hausdorff(&a, &b);
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d, segment_hausdorff(&b, &a));
        }

        #[test]
        fn hausdorff_translation_invariant(a in arb_segment(), b in arb_segment(),
                                           dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
            let d0 = segment_hausdorff(&a, &b);
            let d1 = segment_hausdorff(&a.translate(dx, dy), &b.translate(dx, dy));
            prop_assert!((d0 - d1).abs() <= 1e-9);
        }

        #[test]
        fn hausdorff_zero_iff_same(a in arb_segment(), b in arb_segment()) {
            prop_assume!(a != b);
            prop_assert!(segment_hausdorff(&a, &b) > 0.0);
        }

        #[test]
        fn point_distance_bounded_by_endpoints(p in arb_point(), s in arb_segment()) {
            let d = point_segment_distance(p, &s);
            prop_assert!(d >= 0.0);
            prop_assert!(d <= p.distance(s.top()) + 1e-12);
            prop_assert!(d <= p.distance(s.bottom()) + 1e-12);
        }

        #[test]
        fn construction_order_irrelevant(a in arb_point(), b in arb_point()) {
            let s = LineSegment::new(a, b);
            prop_assert_eq!(s, LineSegment::new(b, a));
            prop_assert!(s.top().y <= s.bottom().y);
        }
    }
}

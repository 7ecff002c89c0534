//! Exact orientation and in-circle tests on fixed-point coordinates.
//!
//! Coordinates are at most 2^30, so coordinate differences fit in 31 bits, the
//! orientation determinant in 62 bits and the in-circle determinant in 125
//! bits. Both are evaluated without rounding.
//!
//! Cocircular ties are resolved by simulation of simplicity: each point's
//! lifted coordinate `x² + y²` is raised by an infinitesimal that is larger
//! for smaller vertex ids. The point with the smallest id among the four then
//! decides the sign of an otherwise zero in-circle determinant.

pub type Pt = [u32; 2];

#[inline]
fn diff(a: Pt, b: Pt) -> (i64, i64) {
    (a[0] as i64 - b[0] as i64, a[1] as i64 - b[1] as i64)
}

/// Twice the signed area of `abc`; positive when counter-clockwise.
#[inline]
pub fn orient(a: Pt, b: Pt, c: Pt) -> i64 {
    let (bax, bay) = diff(b, a);
    let (cax, cay) = diff(c, a);
    bax * cay - bay * cax
}

/// Whether `p` lies strictly inside the segment `ab`, given it is collinear.
#[inline]
pub fn strictly_between(a: Pt, b: Pt, p: Pt) -> bool {
    let (pax, pay) = diff(p, a);
    let (bax, bay) = diff(b, a);
    let dot = pax * bax + pay * bay;
    dot > 0 && dot < bax * bax + bay * bay
}

/// Unperturbed in-circle determinant; positive when `d` is strictly inside
/// the circle through the counter-clockwise triangle `abc`.
#[inline]
pub fn incircle(a: Pt, b: Pt, c: Pt, d: Pt) -> i128 {
    incircle_terms(a, b, c, d).0
}

/// Determinant together with the cofactors of the lifted coordinates of
/// `a`, `b` and `c` (the cofactor for `d` is minus their sum).
#[inline]
fn incircle_terms(a: Pt, b: Pt, c: Pt, d: Pt) -> (i128, [i128; 3]) {
    let (adx, ady) = diff(a, d);
    let (bdx, bdy) = diff(b, d);
    let (cdx, cdy) = diff(c, d);
    let alift = (adx * adx + ady * ady) as i128;
    let blift = (bdx * bdx + bdy * bdy) as i128;
    let clift = (cdx * cdx + cdy * cdy) as i128;
    let cof_a = (bdx * cdy - cdx * bdy) as i128;
    let cof_b = (cdx * ady - adx * cdy) as i128;
    let cof_c = (adx * bdy - bdx * ady) as i128;
    (alift * cof_a + blift * cof_b + clift * cof_c, [cof_a, cof_b, cof_c])
}

/// In-circle test with the index tie-break: `true` when `d` (id `id_d`) is
/// inside the circle of the counter-clockwise triangle `abc` after symbolic
/// perturbation. Never ties for four distinct points with `abc`
/// non-degenerate.
pub fn in_circumcircle(pts: [Pt; 4], ids: [u32; 4]) -> bool {
    let (det, cof) = incircle_terms(pts[0], pts[1], pts[2], pts[3]);
    if det != 0 {
        return det > 0;
    }
    let coefficient = |slot: usize| if slot == 3 { -(cof[0] + cof[1] + cof[2]) } else { cof[slot] };
    let mut order = [0usize, 1, 2, 3];
    order.sort_unstable_by_key(|&s| ids[s]);
    for slot in order {
        let c = coefficient(slot);
        if c != 0 {
            return c > 0;
        }
    }
    false
}

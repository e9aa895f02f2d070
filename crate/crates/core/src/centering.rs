//! Translation "canonicalization" by crop-and-centre, plus the position
//! planes that keep the original placement visible to the network.

use crate::error::ShapeError;
use crate::planes::{PlaneStack, BASE_CHANNELS, CC_CHANNELS};

/// Cyclic row/column shift applied by [`slap_cc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CcShift {
    pub r_shift: isize,
    pub c_shift: isize,
}

/// Centers the union bounding box of the non-zero entries of all channels,
/// leaning top-left when it cannot be exactly centered. The shift is
/// `(n - 1 - min - max) div 2` per axis with floor division, applied as a
/// cyclic roll. Empty input is returned unchanged with a zero shift.
pub fn slap_cc(planes: &PlaneStack) -> (PlaneStack, CcShift) {
    let n = planes.size();
    let a = n * n;
    let (mut min_r, mut max_r, mut min_c, mut max_c) = (usize::MAX, 0, usize::MAX, 0);
    for plane in planes.data().chunks_exact(a) {
        for (i, &v) in plane.iter().enumerate() {
            if v != 0.0 {
                let (r, c) = (i / n, i % n);
                min_r = min_r.min(r);
                max_r = max_r.max(r);
                min_c = min_c.min(c);
                max_c = max_c.max(c);
            }
        }
    }
    if min_r == usize::MAX {
        return (planes.clone(), CcShift::default());
    }
    let last = n as isize - 1;
    let shift = CcShift {
        r_shift: (last - min_r as isize - max_r as isize).div_euclid(2),
        c_shift: (last - min_c as isize - max_c as isize).div_euclid(2),
    };
    (roll(planes, shift), shift)
}

/// `numpy.roll` over the last two axes.
fn roll(planes: &PlaneStack, shift: CcShift) -> PlaneStack {
    let n = planes.size();
    let a = n * n;
    let rs = shift.r_shift.rem_euclid(n as isize) as usize;
    let cs = shift.c_shift.rem_euclid(n as isize) as usize;
    let mut out = PlaneStack::zeros(planes.channels(), n);
    for (dst, src) in out.data_mut().chunks_exact_mut(a).zip(planes.data().chunks_exact(a)) {
        for r in 0..n {
            let dr = (r + rs) % n;
            for c in 0..n {
                dst[dr * n + (c + cs) % n] = src[r * n + c];
            }
        }
    }
    out
}

/// Vertical and horizontal position planes, each scaled linearly from 1 at
/// the first row/column to -1 at the last.
pub fn position_index_planes(n: usize) -> PlaneStack {
    assert!(n >= 2, "position planes need at least two rows");
    let mut planes = PlaneStack::zeros(2, n);
    let scale = |i: usize| 1.0 - 2.0 * i as f32 / (n - 1) as f32;
    for r in 0..n {
        for c in 0..n {
            planes.set(0, r, c, scale(r));
            planes.set(1, r, c, scale(c));
        }
    }
    planes
}

/// Appends the centered stone planes and the position planes to a base
/// four-plane stack.
pub fn extend_planes_cc(base: &PlaneStack) -> Result<PlaneStack, ShapeError> {
    if base.channels() != BASE_CHANNELS {
        return Err(ShapeError::Channels {
            expected: BASE_CHANNELS,
            actual: base.channels(),
        });
    }
    let (centered, _) = slap_cc(&base.truncated(2));
    let out = base
        .concat(&centered)?
        .concat(&position_index_planes(base.size()))?;
    debug_assert_eq!(out.channels(), CC_CHANNELS);
    Ok(out)
}

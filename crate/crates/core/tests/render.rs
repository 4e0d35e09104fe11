use jmate::portrait::{portrait_of, PERIOD_TOL};
use jmate::render::{attracting_cycles, render, Label, Viewport};
use jmate::{RationalMap, C64};

/// Pixels whose right or lower neighbour carries a different basin label sit
/// on the basin boundary; for z² that is the unit circle.
#[test]
fn square_boundary_is_unit_circle_to_one_pixel() {
    let map = RationalMap::power(2);
    let cycles = attracting_cycles(&map, &portrait_of(&map, 16, PERIOD_TOL).unwrap());
    let vp = Viewport::new(C64::new(0.0, 0.0), 3.0, (401, 401)).unwrap();
    let r = render(&map, &cycles, &vp, 200);
    let basin = |i: usize, j: usize| match r.label(i, j) {
        Label::Basin { cycle, .. } => Some(cycle),
        Label::Julia => None,
    };
    let px = vp.pixel_width();
    let (mut count, mut worst) = (0, 0.0f64);
    for j in 0..400 {
        for i in 0..400 {
            let here = basin(i, j);
            if here != basin(i + 1, j) || here != basin(i, j + 1) {
                count += 1;
                worst = worst.max((vp.pixel_center(i, j).norm() - 1.0).abs());
            }
        }
    }
    assert!(count > 400, "{count} boundary pixels");
    assert!(worst <= px, "boundary radius off by {worst} (pixel {px})");
}

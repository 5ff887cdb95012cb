use lozenge_core::limit_shape::{green, invert_w, q_fn, solve_w, C64};
use lozenge_core::polygon::{scale, HalfInt};
use lozenge_core::{LimitPolygon, PolygonSpec};
use proptest::prelude::*;

/// Valid lattice polygons: integer lengths summing to `n`, integer gaps.
fn lattice_spec() -> impl Strategy<Value = PolygonSpec> {
    (2usize..=7, 2usize..=3, -6i64..6)
        .prop_flat_map(|(n, k, start)| {
            let k = k.min(n);
            (Just(n), proptest::collection::vec(1usize..=n, k), proptest::collection::vec(1i64..=4, k), Just(start))
        })
        .prop_filter_map("lengths must sum to N", |(n, mut lens, gaps, start)| {
            // pad the first interval so the lengths sum to n
            let total: usize = lens.iter().sum();
            if total < n {
                lens[0] += n - total;
            } else if total > n {
                return None;
            }
            let (mut a, mut b) = (Vec::new(), Vec::new());
            let mut pos = 2 * start - 1;
            for (len, gap) in lens.iter().zip(&gaps) {
                a.push(pos);
                pos += 2 * *len as i64;
                b.push(pos);
                pos += 2 * gap;
            }
            Some(PolygonSpec::from_twice(n, &a, &b))
        })
}

/// Valid limit polygons with every length and gap at least 0.1.
fn limit_polygon() -> impl Strategy<Value = LimitPolygon> {
    (2usize..=3)
        .prop_flat_map(|k| {
            (proptest::collection::vec(0.1f64..1.0, k), proptest::collection::vec(0.1f64..1.0, k - 1), -2.0f64..0.0)
        })
        .prop_map(|(lens, gaps, start)| {
            let total: f64 = lens.iter().sum();
            let (mut a, mut b) = (Vec::new(), Vec::new());
            let mut pos = start;
            for (i, len) in lens.iter().enumerate() {
                a.push(pos);
                pos += len / total;
                b.push(pos);
                if i < gaps.len() {
                    pos += gaps[i];
                }
            }
            // make the last endpoint absorb rounding in the total length
            let drift: f64 = a.iter().zip(&b).map(|(x, y)| y - x).sum::<f64>() - 1.0;
            *b.last_mut().unwrap() -= drift;
            LimitPolygon::new(a, b).unwrap()
        })
}

fn upper_half_plane() -> impl Strategy<Value = C64> {
    (-4.0f64..4.0, 0.05f64..4.0).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #[test]
    fn top_row_is_strict(spec in lattice_spec()) {
        let row = spec.top_row().unwrap();
        prop_assert_eq!(row.len(), spec.n);
        prop_assert!(row.windows(2).all(|w| w[0] > w[1]));
        prop_assert!(row[0] <= spec.b.last().unwrap().floor());
        prop_assert!(*row.last().unwrap() >= spec.a[0].ceil());
    }

    #[test]
    fn spec_json_roundtrip(spec in lattice_spec()) {
        let text = serde_json::to_string(&spec).unwrap();
        let back: PolygonSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn half_int_text_roundtrip(t in -1000i64..1000) {
        let h = HalfInt::from_twice(t);
        let back: HalfInt = h.to_string().parse().unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn scale_is_valid_and_close(lp in limit_polygon(), n in 40usize..400) {
        let spec = scale(&lp, n).unwrap();
        prop_assert!(spec.validate().is_ok());
        let nf = n as f64;
        for (x, y) in spec.a.iter().zip(&lp.a).chain(spec.b.iter().zip(&lp.b)) {
            prop_assert!((x.to_f64() / nf - y).abs() <= 2.0 / nf);
        }
    }

    #[test]
    fn q_maps_upper_half_plane_to_itself(lp in limit_polygon(), z in upper_half_plane()) {
        prop_assert!(q_fn(&lp, z).im > 0.0);
    }

    #[test]
    fn solve_inverts_invert(lp in limit_polygon(), z in upper_half_plane()) {
        let (chi, eta) = invert_w(&lp, z).unwrap();
        let w = solve_w(&lp, chi, eta).unwrap().expect("image of the upper half plane is liquid").w;
        prop_assert!((w - z).norm() < 1e-10 * (1.0 + z.norm()), "{} vs {}", w, z);
    }

    #[test]
    fn green_is_symmetric_and_positive(z in upper_half_plane(), dz in upper_half_plane()) {
        let z2 = C64::new(z.re + 0.01 * dz.re, z.im * (1.0 + 0.01 * dz.im));
        prop_assume!(z2 != z);
        let g = green(z, z2).unwrap();
        prop_assert!((g - green(z2, z).unwrap()).abs() < 1e-12);
        prop_assert!(g > 0.0);
    }
}

#[test]
fn green_vanishes_at_the_boundary() {
    let z = C64::new(0.3, 1.0);
    let g = green(z, C64::new(1.0, 1e-9)).unwrap();
    assert!(g.abs() < 1e-9);
}

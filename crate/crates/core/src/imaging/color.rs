//! sRGB to CIELAB conversion (D65 reference white).

/// D65 reference white in XYZ, normalized so Y = 1.
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

/// Convert one 8-bit sRGB pixel to CIELAB.
///
/// Standard path: sRGB inverse companding, linear-RGB -> XYZ (D65), XYZ ->
/// L*a*b*. Black maps to (0, 0, 0) and white to (100, ~0, ~0).
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let linear: Vec<f64> = rgb
        .iter()
        .map(|&c| {
            let c = c as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        })
        .collect();
    let (r, g, b) = (linear[0], linear[1], linear[2]);

    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    let fx = lab_f(x / WHITE[0]);
    let fy = lab_f(y / WHITE[1]);
    let fz = lab_f(z / WHITE[2]);

    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn lab_f(t: f64) -> f64 {
    // delta = 6/29
    const DELTA3: f64 = 216.0 / 24389.0; // (6/29)^3
    const SLOPE: f64 = 841.0 / 108.0; // 1 / (3 * (6/29)^2)
    if t > DELTA3 {
        t.cbrt()
    } else {
        SLOPE * t + 4.0 / 29.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn black_is_origin() {
        let lab = rgb_to_lab([0, 0, 0]);
        assert_abs_diff_eq!(lab[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lab[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lab[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn white_is_l100_neutral() {
        // The conventional rounded sRGB matrix puts white a hair above
        // Y = 1, so L* lands within 1e-4 of 100 rather than exactly on it.
        let lab = rgb_to_lab([255, 255, 255]);
        assert_abs_diff_eq!(lab[0], 100.0, epsilon = 1e-4);
        assert_abs_diff_eq!(lab[1], 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(lab[2], 0.0, epsilon = 1e-3);
    }

    #[test]
    fn mid_gray_matches_reference() {
        // Scalar reference for sRGB (128,128,128): linear value
        // ((128/255+0.055)/1.055)^2.4 = 0.21586, Y = same, L = 116*f(Y)-16.
        let lab = rgb_to_lab([128, 128, 128]);
        assert_abs_diff_eq!(lab[0], 53.585, epsilon = 1e-2);
        assert_abs_diff_eq!(lab[1], 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(lab[2], 0.0, epsilon = 1e-3);
    }

    #[test]
    fn primaries_have_expected_signs() {
        let red = rgb_to_lab([255, 0, 0]);
        assert!(red[1] > 0.0, "red has positive a*");
        let green = rgb_to_lab([0, 255, 0]);
        assert!(green[1] < 0.0, "green has negative a*");
        let blue = rgb_to_lab([0, 0, 255]);
        assert!(blue[2] < 0.0, "blue has negative b*");
        let yellow = rgb_to_lab([255, 255, 0]);
        assert!(yellow[2] > 0.0, "yellow has positive b*");
    }

    #[test]
    fn lightness_is_monotone_in_gray_level() {
        let mut prev = -1.0;
        for v in 0..=255u8 {
            let l = rgb_to_lab([v, v, v])[0];
            assert!(l > prev, "L* must strictly increase with gray level");
            prev = l;
        }
    }
}

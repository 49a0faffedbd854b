/// Formats `x` rounded to `digits` significant digits, without trailing
/// zeros (`3`, `1.22222222222`, `-0.111111111111`). Magnitudes below 1e-4
/// or from 1e15 up use exponent notation (`4.4408920985e-16`).
pub fn significant(x: f64, digits: usize) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("scientific notation parses");
    if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn sig12(x: f64) -> String {
    significant(x, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(3.0), "3");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(2.0 / 0.9 - 1.0), "1.22222222222");
        assert_eq!(sig12(-1.0 / 9.0), "-0.111111111111");
        assert_eq!(sig12(5.0 / 9.0), "0.555555555556");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(1.5e-13), "1.5e-13");
        assert_eq!(sig12(4.440892098500626e-16), "4.4408920985e-16");
        assert_eq!(sig12(0.001234), "0.001234");
    }
}

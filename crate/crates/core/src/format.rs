/// Formats like C's `%.12g`: twelve significant digits, trailing zeros
/// trimmed, scientific notation outside `[1e-4, 1e12)`.
pub fn g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::g12;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(-3.5), "-3.5");
        assert_eq!(g12(0.1 + 0.2), "0.3");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(123456.789), "123456.789");
        assert_eq!(g12(1e-5), "1e-05");
        assert_eq!(g12(2.5e-7), "2.5e-07");
        assert_eq!(g12(0.0001), "0.0001");
        assert_eq!(g12(1e12), "1e+12");
        assert_eq!(g12(999999999999.5), "1e+12");
        assert_eq!(g12(40.0), "40");
    }
}

//! Text formatting for reals in machine-readable outputs.

/// Formats `x` with 17 significant digits using `%.17g` conventions:
/// fixed notation for decimal exponents in `[-4, 17)`, scientific otherwise,
/// trailing zeros dropped. The result parses back to the identical `f64`.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_owned();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` output has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();

    if !(-4..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let exp_sign = if exp < 0 { '-' } else { '+' };
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        return format!("{sign}{head}{frac}e{exp_sign}{:02}", exp.abs());
    }

    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(digits.trim_end_matches('0'));
    } else {
        let point = exp as usize + 1;
        let (int, frac) = digits.split_at(point);
        out.push_str(int);
        let frac = frac.trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::sig17;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g17() {
        assert_eq!(sig17(2.5), "2.5");
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(1e-5), "1.0000000000000001e-05");
        assert_eq!(sig17(1e20), "1e+20");
        assert_eq!(sig17(123456.0), "123456");
        assert_eq!(sig17(-0.25), "-0.25");
        assert_eq!(sig17(0.0001), "0.0001");
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(0.5), "0.5");
        assert_eq!(sig17(1.0), "1");
    }

    proptest! {
        #[test]
        fn parses_back_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = sig17(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}

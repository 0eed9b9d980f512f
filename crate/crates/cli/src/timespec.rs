//! The time-spec micro-grammar: `"<float>"` radians, or exact rational
//! multiples of pi written as `[k]pi[/m]` (e.g. `2pi/3`, `pi`, `pi/2`,
//! `3pi/4`). Rational forms evaluate with exactly periodic phases.

use boat_core::EvolutionTime;

pub fn parse_time_spec(spec: &str) -> Result<EvolutionTime, String> {
    let s = spec.trim().to_ascii_lowercase();
    if s.is_empty() {
        return Err(usage_message(spec, "empty string"));
    }
    if let Some(pi_at) = s.find("pi") {
        let (coeff_str, rest) = (&s[..pi_at], &s[pi_at + 2..]);
        let coeff: i64 = if coeff_str.is_empty() {
            1
        } else if coeff_str == "-" {
            -1
        } else {
            coeff_str
                .parse()
                .map_err(|_| usage_message(spec, "the coefficient before 'pi' must be an integer"))?
        };
        let denom: i64 = if rest.is_empty() {
            1
        } else if let Some(den_str) = rest.strip_prefix('/') {
            let d: i64 = den_str
                .parse()
                .map_err(|_| usage_message(spec, "the denominator after '/' must be an integer"))?;
            if d <= 0 {
                return Err(usage_message(spec, "the denominator must be positive"));
            }
            d
        } else {
            return Err(usage_message(spec, "unexpected text after 'pi'"));
        };
        // k pi / m = 2 pi k / (2 m)
        return EvolutionTime::two_pi_rational(coeff, 2 * denom)
            .map_err(|e| usage_message(spec, &e.to_string()));
    }
    s.parse::<f64>()
        .map(EvolutionTime::radians)
        .map_err(|_| usage_message(spec, "not a number"))
}

fn usage_message(spec: &str, problem: &str) -> String {
    format!(
        "invalid time spec '{spec}': {problem}; accepted forms: a float in radians \
         (e.g. '1.57', '0'), or an exact multiple of pi written as '[k]pi[/m]' \
         with integer k and positive integer m (e.g. '2pi/3', 'pi', 'pi/2', '-pi/4')"
    )
}

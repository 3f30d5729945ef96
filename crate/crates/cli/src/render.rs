//! Text and LaTeX renderings of a [`Report`]. Both print every coefficient as
//! an exact fraction.

use std::fmt::Write;

use homapprox_core::approx::{AutonomousOutcome, NoAutonomousApproximation, Polynomial, PolynomialSystem, WitnessMap};
use homapprox_core::freealg::{AlgElem, Word};
use homapprox_core::rational::{self, Rational};
use homapprox_core::verify::VerificationReport;
use num_traits::{One, Zero};

use crate::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Text,
    Latex,
}

fn fraction(c: &Rational, style: Style) -> String {
    match style {
        Style::Text => rational::to_string(c),
        Style::Latex if c.is_integer() => c.to_string(),
        Style::Latex => format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom()),
    }
}

/// Joins `coefficient * body` terms with signs; an empty body stands for 1.
fn signed_sum(terms: impl IntoIterator<Item = (Rational, String)>, style: Style) -> String {
    let mut out = String::new();
    for (c, body) in terms {
        let negative = rational::is_negative(&c);
        let magnitude = if negative { -c } else { c };
        match (out.is_empty(), negative) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        let coefficient = fraction(&magnitude, style);
        match (magnitude.is_one(), body.is_empty(), style) {
            (_, true, _) => out.push_str(&coefficient),
            (true, false, _) => out.push_str(&body),
            (false, false, Style::Text) => write!(out, "{coefficient}*{body}").unwrap(),
            (false, false, Style::Latex) => write!(out, "{coefficient}\\,{body}").unwrap(),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn word(w: &Word, style: Style) -> String {
    match style {
        Style::Text => w.to_string(),
        Style::Latex => {
            let letters = w.letters();
            let sep = if letters.iter().any(|&m| m > 9) { "," } else { "" };
            let joined: Vec<String> = letters.iter().map(u8::to_string).collect();
            format!("\\xi_{{{}}}", joined.join(sep))
        }
    }
}

fn elem(e: &AlgElem, style: Style) -> String {
    let scalar = (!e.scalar_part().is_zero()).then(|| (e.scalar_part().clone(), String::new()));
    signed_sum(scalar.into_iter().chain(e.terms().map(|(w, c)| (c.clone(), word(w, style)))), style)
}

fn monomial(t: u32, x: &[u32], style: Style) -> String {
    let mut factors = Vec::new();
    let mut push = |name: String, e: u32| match (e, style) {
        (0, _) => {}
        (1, _) => factors.push(name),
        (_, Style::Text) => factors.push(format!("{name}^{e}")),
        (_, Style::Latex) => factors.push(format!("{name}^{{{e}}}")),
    };
    push("t".into(), t);
    for (i, &e) in x.iter().enumerate() {
        push(if style == Style::Text { format!("x{}", i + 1) } else { format!("x_{{{}}}", i + 1) }, e);
    }
    factors.join(if style == Style::Text { "*" } else { " " })
}

fn poly(p: &Polynomial, style: Style) -> String {
    // highest degree first reads more naturally
    let mut terms: Vec<(u32, &[u32], &Rational)> = p.terms().collect();
    terms.sort_by_key(|(t, x, _)| std::cmp::Reverse((*t + x.iter().sum::<u32>(), *t)));
    signed_sum(terms.into_iter().map(|(t, x, c)| (c.clone(), monomial(t, x, style))), style)
}

/// `a + b u` with zero parts dropped.
fn right_hand_side(a: &Polynomial, b: &Polynomial, style: Style) -> String {
    let control = if b.is_zero() {
        None
    } else if b.terms().count() == 1 {
        let body = poly(b, style);
        Some(match body.as_str() {
            "1" => "u".to_string(),
            "-1" => "-u".to_string(),
            _ if style == Style::Text => format!("{body}*u"),
            _ => format!("{body}\\,u"),
        })
    } else if style == Style::Text {
        Some(format!("({})*u", poly(b, style)))
    } else {
        Some(format!("\\left({}\\right) u", poly(b, style)))
    };
    match (a.is_zero(), control) {
        (true, None) => "0".into(),
        (true, Some(c)) => c,
        (false, None) => poly(a, style),
        (false, Some(c)) => match c.strip_prefix('-') {
            Some(rest) => format!("{} - {rest}", poly(a, style)),
            None => format!("{} + {c}", poly(a, style)),
        },
    }
}

fn series_components(report: &Report) -> Vec<AlgElem> {
    let mut out = vec![AlgElem::zero(); report.result.dimension];
    for entry in &report.result.series {
        for (slot, c) in out.iter_mut().zip(&entry.coeff) {
            slot.add_term(entry.word.clone(), c.clone());
        }
    }
    out
}

fn witness_text(w: &NoAutonomousApproximation, style: Style) -> (String, String) {
    let map = match (w.witness_map, style) {
        (WitnessMap::Phi, Style::Text) => "phi",
        (WitnessMap::Psi, Style::Text) => "psi",
        (WitnessMap::Phi, Style::Latex) => "\\varphi",
        (WitnessMap::Psi, Style::Latex) => "\\psi",
    };
    let i = w.witness_index;
    match style {
        Style::Text => (format!("{map}(l~{i})"), elem(&w.witness_element, style)),
        Style::Latex => (format!("{map}(\\tilde\\ell_{{{i}}})"), elem(&w.witness_element, style)),
    }
}

/// Ideal blocks with more rows are summarized by their rank.
const ROW_LIMIT: usize = 16;

const NORMALIZATION_NOTE: &str = "The reconstruction fixes b_hat_i = -alpha_i t^(w_i - 1) + ..., so the output may differ \
from an already homogeneous input by a polynomial change of coordinates (x' = u becomes x' = -u).";

pub fn text(report: &Report) -> String {
    let style = Style::Text;
    let r = &report.result;
    let mut out = String::new();
    writeln!(out, "Homogeneous approximation").unwrap();
    writeln!(out, "=========================").unwrap();
    writeln!(out, "\nInput system (n = {}):", r.dimension).unwrap();
    for (i, (a, b)) in report.system.a.iter().zip(&report.system.b).enumerate() {
        let rhs = match (a.as_str(), b.as_str()) {
            (_, "0") => a.clone(),
            ("0", _) => format!("({b})*u"),
            _ => format!("{a} + ({b})*u"),
        };
        writeln!(out, "  x{}' = {rhs}", i + 1).unwrap();
    }

    writeln!(out, "\n1. Series truncated at order {}", r.series_order).unwrap();
    for (i, component) in series_components(report).iter().enumerate() {
        writeln!(out, "  x{}(0) = {} + ...", i + 1, elem(component, style)).unwrap();
    }

    writeln!(out, "\n2. Core decomposition").unwrap();
    for (i, l) in r.ell.iter().enumerate() {
        writeln!(out, "  l{} = {} = {}   (order {})", i + 1, l.label, l.bracket, l.order).unwrap();
    }
    for (i, d) in r.dees.iter().enumerate() {
        writeln!(out, "  d{} = {} = {}", i + 1, d.label, elem(&d.element, style)).unwrap();
    }

    writeln!(out, "\n3. Right ideal").unwrap();
    for block in &r.ideal_blocks {
        writeln!(out, "  order {}: rank {} of {}", block.order, block.rank(), 1usize << (block.order - 1)).unwrap();
        if block.rank() > ROW_LIMIT {
            writeln!(out, "    (rows omitted; see the JSON report)").unwrap();
            continue;
        }
        for row in &block.rows {
            writeln!(out, "    {}", elem(row, style)).unwrap();
        }
    }

    writeln!(out, "\n4. Projections").unwrap();
    for (i, (l, w)) in r.ell_tilde.iter().zip(&r.orders).enumerate() {
        writeln!(out, "  l~{} = {}   (order {w})", i + 1, elem(l, style)).unwrap();
    }

    writeln!(out, "\n5. Non-autonomous approximating system").unwrap();
    match &r.nonautonomous {
        Some(sys) => write_system(&mut out, sys, style),
        None => writeln!(out, "  (not requested)").unwrap(),
    }

    writeln!(out, "\n6. Autonomous approximating system").unwrap();
    match &r.autonomous {
        Some(AutonomousOutcome::Found(sys)) => write_system(&mut out, sys, style),
        Some(AutonomousOutcome::Nonexistent(w)) => {
            let (lhs, rhs) = witness_text(w, style);
            writeln!(out, "  does not exist: {lhs} = {rhs}").unwrap();
            writeln!(out, "  is not a shuffle polynomial of the preceding projections").unwrap();
        }
        None => writeln!(out, "  (not requested)").unwrap(),
    }
    writeln!(out, "\nNote: {NORMALIZATION_NOTE}").unwrap();

    if let Some(v) = &report.verification {
        writeln!(out, "\n7. Verification").unwrap();
        write_verification(&mut out, v);
    }
    out
}

fn write_system(out: &mut String, sys: &PolynomialSystem, style: Style) {
    for (i, (a, b)) in sys.a_hat.iter().zip(&sys.b_hat).enumerate() {
        match style {
            Style::Text => writeln!(out, "  x{}' = {}", i + 1, right_hand_side(a, b, style)).unwrap(),
            Style::Latex => writeln!(out, "  \\dot x_{{{}}} &= {} \\\\", i + 1, right_hand_side(a, b, style)).unwrap(),
        }
    }
}

fn pass(flag: bool) -> &'static str {
    if flag {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_verification(out: &mut String, v: &VerificationReport) {
    writeln!(
        out,
        "  truncation residual slope: min {} against threshold {:.2} (ideal {}, margin for finite horizons) [{}]",
        v.min_slope.map_or("n/a".into(), |s| format!("{s:.3}")),
        v.slope_threshold,
        v.series_order + 1,
        pass(v.slope_passed)
    )
    .unwrap();
    for (k, run) in v.runs.iter().enumerate() {
        let residuals: Vec<String> = run.residuals.iter().map(|r| format!("{r:.3e}")).collect();
        let slope = run.slope.map_or("n/a".into(), |s| format!("{s:.3}"));
        writeln!(out, "    control {}: slope {slope}, residuals [{}]", k + 1, residuals.join(", ")).unwrap();
    }
    writeln!(out, "  moment products vs shuffles: max error {:.3e} [{}]", v.shuffle_error, pass(v.shuffle_passed)).unwrap();
    writeln!(out, "  step halving: max change {:.3e} [{}]", v.step_change, pass(v.step_passed)).unwrap();
    for (name, residual) in &v.approximation_residuals {
        writeln!(out, "  {name} system against its own series: max residual {residual:.3e}").unwrap();
    }
    writeln!(out, "  approximating systems [{}]", pass(v.approximation_passed)).unwrap();
}

pub fn latex(report: &Report) -> String {
    let style = Style::Latex;
    let r = &report.result;
    let mut out = String::new();
    out.push_str("\\documentclass{article}\n\\usepackage{amsmath}\n\\begin{document}\n\\section*{Homogeneous approximation}\n");

    writeln!(out, "\\subsection*{{Series truncated at order {}}}\n\\begin{{align*}}", r.series_order).unwrap();
    for (i, component) in series_components(report).iter().enumerate() {
        writeln!(out, "  x_{{{}}}(0) &= {} + \\dots \\\\", i + 1, elem(component, style)).unwrap();
    }
    out.push_str("\\end{align*}\n");

    out.push_str("\\subsection*{Core decomposition}\n\\begin{align*}\n");
    for (i, l) in r.ell.iter().enumerate() {
        writeln!(out, "  \\ell_{{{}}} &= {} & &\\text{{{}}} \\\\", i + 1, elem(&l.element, style), l.label).unwrap();
    }
    for (i, d) in r.dees.iter().enumerate() {
        writeln!(out, "  d_{{{}}} &= {} & &\\text{{{}}} \\\\", i + 1, elem(&d.element, style), d.label).unwrap();
    }
    out.push_str("\\end{align*}\n");

    out.push_str("\\subsection*{Right ideal}\n\\begin{itemize}\n");
    for block in &r.ideal_blocks {
        let rows: Vec<String> = block.rows.iter().map(|row| format!("${}$", elem(row, style))).collect();
        let listed = if block.rank() > ROW_LIMIT {
            "rows omitted".to_string()
        } else if rows.is_empty() { "$\\{0\\}$".to_string() } else { rows.join(", ") };
        writeln!(out, "  \\item order {}, rank {}: {listed}", block.order, block.rank()).unwrap();
    }
    out.push_str("\\end{itemize}\n");

    out.push_str("\\subsection*{Projections}\n\\begin{align*}\n");
    for (i, l) in r.ell_tilde.iter().enumerate() {
        writeln!(out, "  \\tilde\\ell_{{{}}} &= {} \\\\", i + 1, elem(l, style)).unwrap();
    }
    out.push_str("\\end{align*}\n");

    out.push_str("\\subsection*{Non-autonomous approximating system}\n");
    match &r.nonautonomous {
        Some(sys) => {
            out.push_str("\\begin{align*}\n");
            write_system(&mut out, sys, style);
            out.push_str("\\end{align*}\n");
        }
        None => out.push_str("Not requested.\n"),
    }

    out.push_str("\\subsection*{Autonomous approximating system}\n");
    match &r.autonomous {
        Some(AutonomousOutcome::Found(sys)) => {
            out.push_str("\\begin{align*}\n");
            write_system(&mut out, sys, style);
            out.push_str("\\end{align*}\n");
        }
        Some(AutonomousOutcome::Nonexistent(w)) => {
            let (lhs, rhs) = witness_text(w, style);
            writeln!(
                out,
                "Does not exist: ${lhs} = {rhs}$ is not a shuffle polynomial of the preceding projections."
            )
            .unwrap();
        }
        None => out.push_str("Not requested.\n"),
    }

    if let Some(v) = &report.verification {
        out.push_str("\\subsection*{Verification}\n\\begin{verbatim}\n");
        write_verification(&mut out, v);
        out.push_str("\\end{verbatim}\n");
    }
    out.push_str("\\end{document}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use homapprox_core::rational::{frac, int};

    #[test]
    fn sums_and_fractions() {
        let terms = vec![(frac(-2, 5), "x".to_string()), (int(1), "y".to_string()), (int(-3), String::new())];
        assert_eq!(signed_sum(terms.clone(), Style::Text), "-2/5*x + y - 3");
        assert_eq!(signed_sum(terms, Style::Latex), "-\\frac{2}{5}\\,x + y - 3");
        assert_eq!(signed_sum(vec![], Style::Text), "0");
    }

    #[test]
    fn words_and_polynomials() {
        assert_eq!(word(&Word::from([0, 1]), Style::Latex), "\\xi_{01}");
        assert_eq!(word(&Word::from([10, 1]), Style::Latex), "\\xi_{10,1}");
        let mut p = Polynomial::monomial(frac(-1, 5), 2, &[0, 0]);
        p.add_assign(&Polynomial::monomial(frac(2, 5), 1, &[1, 0]));
        assert_eq!(poly(&p, Style::Text), "-1/5*t^2 + 2/5*t*x1");
        assert_eq!(poly(&p, Style::Latex), "-\\frac{1}{5}\\,t^{2} + \\frac{2}{5}\\,t x_{1}");
        let minus_one = Polynomial::constant(int(-1), 2);
        assert_eq!(right_hand_side(&Polynomial::zero(), &minus_one, Style::Text), "-u");
        assert_eq!(right_hand_side(&p, &minus_one, Style::Text), "-1/5*t^2 + 2/5*t*x1 - u");
        assert_eq!(right_hand_side(&Polynomial::zero(), &p, Style::Text), "(-1/5*t^2 + 2/5*t*x1)*u");
        assert_eq!(right_hand_side(&Polynomial::zero(), &Polynomial::zero(), Style::Text), "0");
    }
}

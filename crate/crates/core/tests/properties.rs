//! Property tests for the polynomial layer, the control map and the SDPA
//! writer/parser.

use occmom::poly::NVARS;
use occmom::sdp::{export_sdpa_string, parse_sdpa, EqualityConstraint, PsdConstraint, SdpStandardForm, SymEntry};
use occmom::{map_control, unmap_control, ExtendedReal, Monomial, Polynomial, Var};
use proptest::prelude::*;

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![(-3.0..-1e-3f64), (1e-3..3.0f64)]
}

fn polynomial() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::array::uniform5(0u32..3), coefficient()), 0..6)
        .prop_map(|terms| Polynomial::from_terms(terms.into_iter().map(|(e, c)| (Monomial(e), c))))
}

fn point() -> impl Strategy<Value = [f64; NVARS]> {
    prop::array::uniform5(-1.5..1.5f64)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * scale.max(1.0)
}

proptest! {
    #[test]
    fn sum_and_product_evaluate_pointwise(a in polynomial(), b in polynomial(), pt in point()) {
        let (va, vb) = (a.eval_dense(&pt), b.eval_dense(&pt));
        let scale = va.abs().max(vb.abs()).max(va.abs() * vb.abs()) * 100.0;
        prop_assert!(close((&a + &b).eval_dense(&pt), va + vb, scale));
        prop_assert!(close((&a - &b).eval_dense(&pt), va - vb, scale));
        prop_assert!(close((&a * &b).eval_dense(&pt), va * vb, scale));
    }

    #[test]
    fn display_parses_back(a in polynomial()) {
        let text = a.to_string();
        let back: Polynomial = text.parse().unwrap();
        prop_assert_eq!(back, a, "{}", text);
    }

    #[test]
    fn product_rule(a in polynomial(), b in polynomial(), pt in point(), k in 0..NVARS) {
        let v = Var::ALL[k];
        let lhs = (&a * &b).differentiate(v);
        let rhs = &(&a.differentiate(v) * &b) + &(&a * &b.differentiate(v));
        let scale = 100.0 * lhs.max_abs_coefficient().max(1.0);
        prop_assert!(close(lhs.eval_dense(&pt), rhs.eval_dense(&pt), scale));
    }

    #[test]
    fn substitute_ratio_clears_denominators(a in polynomial(), extra in 0u32..3, t in -1.0..1.0f64, z in -2.0..2.0f64, w in 0.2..2.0f64) {
        let a = a.substitute(Var::Z, &Polynomial::zero()).substitute(Var::W, &Polynomial::zero());
        let clear = a.degree_in(Var::U) + extra;
        let h = a.substitute_ratio(Var::U, Var::Z, Var::W, clear).unwrap();
        let lhs = h.evaluate(&[(Var::T, t), (Var::X, 0.5), (Var::Z, z), (Var::W, w)]).unwrap();
        let rhs = w.powi(clear as i32) * a.evaluate(&[(Var::T, t), (Var::X, 0.5), (Var::U, z / w)]).unwrap();
        prop_assert!(close(lhs, rhs, rhs.abs()));
    }

    #[test]
    fn control_map_lands_on_slice_and_inverts(log_u in -8.0..8.0f64, negative: bool, half_s in 1u32..4) {
        for s in [2 * half_s - 1, 2 * half_s] {
            let u = if negative && s % 2 == 0 { -log_u.exp() } else { log_u.exp() };
            let (z, w) = map_control(ExtendedReal::Finite(u), s).unwrap();
            prop_assert!(w > 0.0);
            prop_assert!((z.powi(s as i32) + w.powi(s as i32) - 1.0).abs() <= 1e-12);
            let back = unmap_control(z, w, s).unwrap().to_f64();
            prop_assert!((back - u).abs() <= 1e-9 * u.abs(), "s={} u={} back={}", s, u, back);
        }
    }

    #[test]
    fn sdpa_export_parse_is_identity(form in sdp_form()) {
        let text = export_sdpa_string(&form).unwrap();
        let parsed = parse_sdpa(text.as_bytes()).unwrap();
        prop_assert_eq!(parsed.canonical(), form.canonical());
    }
}

fn sym_entries(size: usize) -> impl Strategy<Value = Vec<SymEntry>> {
    prop::collection::vec((0..size, 0..size, coefficient()), 0..4)
        .prop_map(|es| es.into_iter().map(|(i, j, v)| SymEntry::new(i, j, v)).collect())
}

fn psd_block(num_vars: usize) -> impl Strategy<Value = PsdConstraint> {
    (1usize..5).prop_flat_map(move |size| {
        (sym_entries(size), prop::collection::vec((0..num_vars, sym_entries(size)), 0..4))
            .prop_map(move |(constant, coefficients)| PsdConstraint { size, constant, coefficients })
    })
}

fn sdp_form() -> impl Strategy<Value = SdpStandardForm> {
    (1usize..6).prop_flat_map(|num_vars| {
        let equality = (prop::collection::vec((0..num_vars, coefficient()), 0..4), -5.0..5.0f64)
            .prop_map(|(coefficients, rhs)| EqualityConstraint { coefficients, rhs });
        (
            0..=num_vars,
            prop::collection::vec(-5.0..5.0f64, num_vars),
            prop::collection::vec(psd_block(num_vars), 1..4),
            prop::collection::vec(equality, 0..3),
        )
            .prop_map(move |(num_slacks, objective, psd, equalities)| SdpStandardForm {
                num_vars,
                num_slacks,
                objective,
                psd,
                equalities,
            })
    })
}

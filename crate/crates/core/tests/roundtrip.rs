//! Textual round-trips and checker totality over generated programs.

mod common;

use common::{gen_program, GenLimits};
use dpbound::lang::{parse, render_program, validate};

/// parse(render(p)) is the identity on valid programs.
#[test]
fn parse_render_round_trip_on_generated_programs() {
    for seed in 0..500u64 {
        let program = gen_program(seed, GenLimits::default());
        let rendered = render_program(&program);
        let reparsed = parse(&rendered)
            .unwrap_or_else(|e| panic!("seed {seed}: render produced unparseable text: {e}\n{rendered}"));
        assert_eq!(
            reparsed, program,
            "seed {seed}: round trip changed the tree\n{rendered}"
        );
    }
}

/// The checker accepts every generated program and annotates the output type.
#[test]
fn generated_programs_validate() {
    for seed in 0..500u64 {
        let program = gen_program(seed, GenLimits::default());
        let validated = validate(program.clone())
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", render_program(&program)));
        assert!(!validated.output_type.is_empty());
    }
}

/// validate is total on arbitrary parser output: random text either fails
/// to parse or validates without panicking.
#[test]
fn validate_is_total_on_parser_output() {
    let fragments = [
        "fun", "(", ")", "{", "}", "x", ":", "bool", "int", "flip", "1/2", "if", "else", "let",
        "=", "in", "&&", "||", "^", "<->", "!", "+", ">=", "==", "true", "false", "categorical",
        "[", "]", ",", "3", "7",
    ];
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..2000 {
        let len = rng.gen_range(0..20);
        let text: Vec<&str> = (0..len)
            .map(|_| fragments[rng.gen_range(0..fragments.len())])
            .collect();
        let text = text.join(" ");
        if let Ok(program) = parse(&text) {
            let _ = validate(program);
        }
    }
}

//! Parse a JSGF grammar, compile it and list the sentences it accepts.

use tutorbot::grammar::{compile_grammar, enumerate_language, parse_jsgf, GrammarLibrary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = "#JSGF V1.0; grammar q; public <a> = moved (slowly | quickly) for [twenty] seconds;";
    let fst = compile_grammar(&parse_jsgf(src)?, true)?;
    println!("{} states, {} arcs", fst.num_states(), fst.arcs().len());
    for (words, weight) in fst.complete_paths(100)? {
        println!("{weight:6.3}  {}", words.join(" "));
    }

    let lib = GrammarLibrary::builtin();
    for id in lib.ids() {
        let n = enumerate_language(&*lib.get(id)?, 1000)?.len();
        println!("{id:<12} {n} sentences");
    }
    Ok(())
}

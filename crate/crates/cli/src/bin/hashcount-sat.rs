//! Minimal competition-style SAT solver over the built-in CDCL engine.
//!
//! `hashcount-sat FILE` reads extended DIMACS (CNF plus `x` lines), prints
//! `s SATISFIABLE` with `v` lines or `s UNSATISFIABLE`, and exits 10 or 20.
//! Reads stdin when FILE is `-` or absent.

use std::io::{self, Read, Write};
use std::process::ExitCode;

use hashcount_core::oracle::solve_once;
use hashcount_core::parse_extended_dimacs;

fn main() -> ExitCode {
    let path = std::env::args().nth(1);
    let bytes = match path.as_deref() {
        None | Some("-") => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map(|_| buf)
        }
        Some(p) => std::fs::read(p),
    };
    let bytes = match bytes {
        Ok(b) => b,
        Err(e) => {
            eprintln!("c cannot read input: {e}");
            return ExitCode::from(1);
        }
    };
    let parsed = match parse_extended_dimacs(&bytes) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("c {e}");
            return ExitCode::from(1);
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = solve_once(&parsed.formula, &parsed.xors, None);
    let code = match result {
        Ok(Some(model)) => {
            let _ = writeln!(out, "s SATISFIABLE");
            let mut line = String::from("v");
            for (i, &b) in model.iter().enumerate() {
                let lit = if b { (i + 1) as i64 } else { -((i + 1) as i64) };
                line.push_str(&format!(" {lit}"));
                if line.len() > 72 {
                    let _ = writeln!(out, "{line}");
                    line = String::from("v");
                }
            }
            let _ = writeln!(out, "{line} 0");
            10
        }
        Ok(None) => {
            let _ = writeln!(out, "s UNSATISFIABLE");
            20
        }
        Err(e) => {
            let _ = writeln!(out, "s UNKNOWN");
            eprintln!("c {e}");
            0
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}

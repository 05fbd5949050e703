use std::process::ExitCode;

fn main() -> ExitCode {
    let out = kcone::cli::run(std::env::args_os());
    match &out.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.text) {
                eprintln!("kcone: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None if out.code == 2 && !out.text.trim_start().starts_with('{') => eprint!("{}", out.text),
        None => print!("{}", out.text),
    }
    ExitCode::from(out.code as u8)
}

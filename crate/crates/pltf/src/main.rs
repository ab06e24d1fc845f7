use std::process::ExitCode;

fn main() -> ExitCode {
    match std::panic::catch_unwind(|| pltf::cli::run(std::env::args_os())) {
        Ok(code) => ExitCode::from(code),
        // the panic message has already been printed
        Err(_) => ExitCode::from(3),
    }
}

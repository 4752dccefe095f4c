use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match spin_rsp::cli::run(&argv) {
        Ok(manifest) => {
            for out in &manifest.outputs {
                eprintln!("wrote {} ({})", out.path.display(), out.sha256);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            match &err {
                spin_rsp::cli::CliError::Info(text) => print!("{text}"),
                _ => eprintln!("{err}"),
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

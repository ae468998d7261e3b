use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match pseudobox_cli::run(&args, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let text = e.to_string();
            // clap's own messages already start with "error:"
            if text.starts_with("error:") {
                eprintln!("{}", text.trim_end());
            } else {
                eprintln!("error: {}", text.trim_end());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

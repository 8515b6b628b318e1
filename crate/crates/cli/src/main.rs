use clap::Parser;

fn main() {
    let cli = ruin_cli::Cli::try_parse().unwrap_or_else(|e| {
        if e.use_stderr() {
            let first = e.to_string();
            let line = first.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: 2: config: {}", line.trim_start_matches("error: "));
            std::process::exit(2);
        }
        e.exit()
    });
    if let Err(e) = ruin_cli::run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

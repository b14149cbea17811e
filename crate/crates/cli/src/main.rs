use clap::Parser;

fn main() {
    let cli = concentrix_cli::Cli::parse();
    let (code, stdout) = concentrix_cli::run(&cli.command);
    if code == concentrix_cli::EXIT_CONFIG {
        eprintln!("{stdout}");
    } else {
        println!("{stdout}");
    }
    std::process::exit(code);
}

use clap::Parser;

fn main() {
    let cli = hinfty_cli::Cli::parse();
    std::process::exit(hinfty_cli::main_with(&cli));
}

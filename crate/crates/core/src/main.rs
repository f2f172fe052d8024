fn main() {
    let code = forest_sde::cli::run(std::env::args(), &mut std::io::stdout());
    std::process::exit(code);
}

fn main() {
    let code = eigenbounds::cli::run_command(std::env::args());
    std::process::exit(code);
}

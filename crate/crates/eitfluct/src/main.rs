fn main() {
    std::process::exit(eitfluct::cli::run(std::env::args_os()));
}

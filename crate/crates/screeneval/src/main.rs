fn main() {
    std::process::exit(screeneval::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(roughctl::cli::run(std::env::args_os()));
}

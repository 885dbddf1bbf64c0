fn main() {
    std::process::exit(pucci_core::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(railflow::cli::run_from(std::env::args_os()));
}

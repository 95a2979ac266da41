fn main() {
    std::process::exit(primephase::harness::cli::run(std::env::args_os()));
}

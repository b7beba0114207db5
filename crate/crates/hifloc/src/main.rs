fn main() {
    std::process::exit(hifloc::cli::run_cli(std::env::args_os()));
}

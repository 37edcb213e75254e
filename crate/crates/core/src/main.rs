fn main() {
    std::process::exit(ksnut::scenario::cli::run_cli(std::env::args_os()));
}

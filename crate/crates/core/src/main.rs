fn main() {
    std::process::exit(ncell::cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(spectra::cli::run_cli(std::env::args_os()));
}

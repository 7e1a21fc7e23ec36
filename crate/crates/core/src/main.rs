fn main() {
    std::process::exit(band_core::cli::main_with_args(std::env::args_os()));
}

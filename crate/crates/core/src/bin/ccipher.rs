fn main() {
    std::process::exit(coherent_cipher::cli::run_from(std::env::args_os()));
}

fn main() {
    std::process::exit(muvfdm::experiments::cli::cli_main(std::env::args_os()));
}

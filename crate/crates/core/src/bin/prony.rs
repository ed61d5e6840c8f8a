fn main() {
    std::process::exit(confluent_prony::cli::cli_main(std::env::args_os()));
}

fn main() {
    std::process::exit(qploc_cli::run(std::env::args_os()));
}

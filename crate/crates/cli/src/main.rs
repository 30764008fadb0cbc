fn main() {
    std::process::exit(aacg_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(stm_cli::run(std::env::args_os()));
}

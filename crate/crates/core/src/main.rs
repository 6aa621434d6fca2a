fn main() {
    std::process::exit(clinn::cli::run_command(std::env::args_os()));
}

fn main() {
    std::process::exit(fluxdicke_cli::main_with(std::env::args_os()));
}

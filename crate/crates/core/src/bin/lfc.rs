fn main() {
    std::process::exit(lfc::cli::main_with(std::env::args_os()));
}

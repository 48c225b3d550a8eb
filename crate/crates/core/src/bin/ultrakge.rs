fn main() {
    std::process::exit(ultrakge::cli::main_with(std::env::args_os()));
}

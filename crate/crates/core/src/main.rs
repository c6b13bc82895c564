fn main() {
    std::process::exit(mfdstag::cli::main_from(std::env::args_os()));
}

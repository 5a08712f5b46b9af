fn main() {
    std::process::exit(netrestore::cli::main_with_args(std::env::args_os()));
}

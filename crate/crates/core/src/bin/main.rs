fn main() {
    std::process::exit(liouville_disk::cli::main_with_args(std::env::args_os()));
}

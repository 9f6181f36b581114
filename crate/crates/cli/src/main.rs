fn main() {
    std::process::exit(interplay_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(arena_cli::main_with_args(std::env::args_os()));
}
